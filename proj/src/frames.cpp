#include "hon/frames.hpp"

#include "json.hpp"

namespace hon {

using nlohmann::json;

namespace {

template <typename T>
constexpr std::string_view type_name();
template <> constexpr std::string_view type_name<frame::Join>() { return "Join"; }
template <> constexpr std::string_view type_name<frame::Queued>() { return "Queued"; }
template <> constexpr std::string_view type_name<frame::Matched>() { return "Matched"; }
template <> constexpr std::string_view type_name<frame::SendText>() { return "SendText"; }
template <> constexpr std::string_view type_name<frame::PeerText>() { return "PeerText"; }
template <> constexpr std::string_view type_name<frame::TimerSync>() { return "TimerSync"; }
template <> constexpr std::string_view type_name<frame::ChatEnded>() { return "ChatEnded"; }
template <> constexpr std::string_view type_name<frame::GuessPrompt>() { return "GuessPrompt"; }
template <> constexpr std::string_view type_name<frame::SubmitGuess>() { return "SubmitGuess"; }
template <> constexpr std::string_view type_name<frame::Result>() { return "Result"; }
template <> constexpr std::string_view type_name<frame::Error>() { return "Error"; }

template <typename T>
T field(const json& j, const char* name) {
    if (!j.contains(name)) throw FrameError(wire_error::BadFrame, std::string("missing field ") + name);
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        throw FrameError(wire_error::BadFrame, std::string("wrong type for field ") + name);
    }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* name) {
    if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
    return field<T>(j, name);
}

}  // namespace

std::string_view frame_type(const Frame& f) {
    return std::visit([](const auto& v) { return type_name<std::decay_t<decltype(v)>>(); }, f);
}

bool is_client_frame(const Frame& f) {
    return std::holds_alternative<frame::Join>(f) || std::holds_alternative<frame::SendText>(f) ||
           std::holds_alternative<frame::SubmitGuess>(f);
}

std::string encode_frame(const Frame& f) {
    json j;
    j["type"] = frame_type(f);
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, frame::Join>) {
                if (v.nickname) j["nickname"] = *v.nickname;
                if (v.token) j["token"] = *v.token;
            } else if constexpr (std::is_same_v<T, frame::Queued>) {
                j["token"] = v.token;
            } else if constexpr (std::is_same_v<T, frame::Matched>) {
                j["slot"] = to_string(v.slot);
                j["starter"] = v.starter;
                j["session_id"] = v.session_id;
            } else if constexpr (std::is_same_v<T, frame::SendText> || std::is_same_v<T, frame::PeerText>) {
                j["text"] = v.text;
            } else if constexpr (std::is_same_v<T, frame::TimerSync>) {
                j["session_remaining_s"] = v.session_remaining_s;
                j["turn_remaining_s"] = v.turn_remaining_s;
                j["your_turn"] = v.your_turn;
            } else if constexpr (std::is_same_v<T, frame::ChatEnded>) {
                j["reason"] = v.reason;
            } else if constexpr (std::is_same_v<T, frame::SubmitGuess>) {
                j["verdict"] = to_string(v.verdict);
            } else if constexpr (std::is_same_v<T, frame::Result>) {
                j["correct"] = v.correct ? json(*v.correct) : json(nullptr);
                j["partner_kind"] = to_string(v.partner_kind);
                j["lifetime_correct"] = v.lifetime_correct;
                j["lifetime_games"] = v.lifetime_games;
            } else if constexpr (std::is_same_v<T, frame::Error>) {
                j["code"] = v.code;
                j["message"] = v.message;
            }
        },
        f);
    return j.dump();
}

Frame decode_frame(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FrameError(wire_error::BadFrame, std::string("not JSON: ") + e.what());
    }
    if (!j.is_object()) throw FrameError(wire_error::BadFrame, "frame must be an object");
    const auto type = field<std::string>(j, "type");
    try {
        if (type == "Join") return frame::Join{optional_field<std::string>(j, "nickname"), optional_field<std::string>(j, "token")};
        if (type == "Queued") return frame::Queued{field<std::string>(j, "token")};
        if (type == "Matched")
            return frame::Matched{slot_from_string(field<std::string>(j, "slot")), field<std::string>(j, "starter"),
                                  field<std::string>(j, "session_id")};
        if (type == "SendText") return frame::SendText{field<std::string>(j, "text")};
        if (type == "PeerText") return frame::PeerText{field<std::string>(j, "text")};
        if (type == "TimerSync")
            return frame::TimerSync{field<double>(j, "session_remaining_s"), field<double>(j, "turn_remaining_s"),
                                    field<bool>(j, "your_turn")};
        if (type == "ChatEnded") return frame::ChatEnded{field<std::string>(j, "reason")};
        if (type == "GuessPrompt") return frame::GuessPrompt{};
        if (type == "SubmitGuess") {
            const auto v = verdict_from_string(field<std::string>(j, "verdict"));
            if (v == Verdict::Abstain) throw FrameError(wire_error::BadFrame, "verdict must be human or bot");
            return frame::SubmitGuess{v};
        }
        if (type == "Result")
            return frame::Result{optional_field<bool>(j, "correct"), kind_from_string(field<std::string>(j, "partner_kind")),
                                 field<std::uint64_t>(j, "lifetime_correct"), field<std::uint64_t>(j, "lifetime_games")};
        if (type == "Error") return frame::Error{field<std::string>(j, "code"), field<std::string>(j, "message")};
    } catch (const FrameError&) {
        throw;
    } catch (const std::exception& e) {
        throw FrameError(wire_error::BadFrame, e.what());
    }
    throw FrameError(wire_error::UnknownFrame, "unknown frame type " + type);
}

std::string error_code(RejectReason r) { return std::string(to_string(r)); }

}  // namespace hon
