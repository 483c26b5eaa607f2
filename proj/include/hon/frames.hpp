#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "hon/error.hpp"
#include "hon/session.hpp"

namespace hon {

// Wire frames: one JSON object per message with a "type" discriminator and the
// fields below under their exact names. Unknown fields are ignored.
namespace frame {
struct Join {  // client -> server
    std::optional<std::string> nickname;
    std::optional<std::string> token;  // anonymous token from an earlier Queued
    bool operator==(const Join&) const = default;
};
struct Queued {  // server -> client
    std::string token;
    bool operator==(const Queued&) const = default;
};
struct Matched {
    Slot slot = Slot::A;
    std::string starter;
    std::string session_id;
    bool operator==(const Matched&) const = default;
};
struct SendText {  // client -> server
    std::string text;
    bool operator==(const SendText&) const = default;
};
struct PeerText {
    std::string text;
    bool operator==(const PeerText&) const = default;
};
struct TimerSync {
    double session_remaining_s = 0.0;
    double turn_remaining_s = 0.0;
    bool your_turn = false;
    bool operator==(const TimerSync&) const = default;
};
struct ChatEnded {
    std::string reason;  // EndKind name
    bool operator==(const ChatEnded&) const = default;
};
struct GuessPrompt {
    bool operator==(const GuessPrompt&) const = default;
};
struct SubmitGuess {  // client -> server
    Verdict verdict = Verdict::Human;
    bool operator==(const SubmitGuess&) const = default;
};
struct Result {
    std::optional<bool> correct;  // null when the player did not vote
    Kind partner_kind = Kind::Human;
    std::uint64_t lifetime_correct = 0;
    std::uint64_t lifetime_games = 0;
    bool operator==(const Result&) const = default;
};
struct Error {
    std::string code;
    std::string message;
    bool operator==(const Error&) const = default;
};
}  // namespace frame

using Frame = std::variant<frame::Join, frame::Queued, frame::Matched, frame::SendText, frame::PeerText,
                           frame::TimerSync, frame::ChatEnded, frame::GuessPrompt, frame::SubmitGuess,
                           frame::Result, frame::Error>;

std::string_view frame_type(const Frame& f);
bool is_client_frame(const Frame& f);

// Thrown by decode_frame; code() is UnknownFrame or BadFrame.
class FrameError : public Error {
public:
    FrameError(std::string code, const std::string& message) : Error(std::move(code), message) {}
};

std::string encode_frame(const Frame& f);
Frame decode_frame(std::string_view text);

// Error codes sent to clients. Every session rejection maps to its own code.
namespace wire_error {
inline constexpr const char* UnknownFrame = "UnknownFrame";
inline constexpr const char* BadFrame = "BadFrame";
inline constexpr const char* UnexpectedFrame = "UnexpectedFrame";
inline constexpr const char* NotInSession = "NotInSession";
inline constexpr const char* AlreadyQueued = "AlreadyQueued";
inline constexpr const char* AlreadyInSession = "AlreadyInSession";
inline constexpr const char* DuplicateGuess = "DuplicateGuess";
inline constexpr const char* WrongPhase = "WrongPhase";
}  // namespace wire_error

// NotYourTurn -> "NotYourTurn", TooLong -> "TooLong", and so on.
std::string error_code(RejectReason r);

}  // namespace hon
