#include "hon/session.hpp"

#include <cmath>
#include <sstream>

#include "hon/error.hpp"

namespace hon {

std::string_view to_string(Slot s) { return s == Slot::A ? "A" : "B"; }
std::string_view to_string(Kind k) { return k == Kind::Human ? "human" : "bot"; }

std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::Human: return "human";
    case Verdict::Bot: return "bot";
    case Verdict::Abstain: return "abstain";
    }
    return "?";
}

Slot slot_from_string(std::string_view s) {
    if (s == "A") return Slot::A;
    if (s == "B") return Slot::B;
    throw std::invalid_argument("unknown slot '" + std::string(s) + "'");
}

Kind kind_from_string(std::string_view s) {
    if (s == "human") return Kind::Human;
    if (s == "bot") return Kind::Bot;
    throw std::invalid_argument("unknown kind '" + std::string(s) + "'");
}

Verdict verdict_from_string(std::string_view s) {
    if (s == "human") return Verdict::Human;
    if (s == "bot") return Verdict::Bot;
    if (s == "abstain") return Verdict::Abstain;
    throw std::invalid_argument("unknown verdict '" + std::string(s) + "'");
}

std::string_view to_string(PhaseKind p) {
    switch (p) {
    case PhaseKind::Matching: return "Matching";
    case PhaseKind::Chatting: return "Chatting";
    case PhaseKind::Guessing: return "Guessing";
    case PhaseKind::Complete: return "Complete";
    }
    return "?";
}

std::string_view to_string(EndKind k) {
    switch (k) {
    case EndKind::TimeUp: return "TimeUp";
    case EndKind::TurnTimeout: return "TurnTimeout";
    case EndKind::AbruptExit: return "AbruptExit";
    case EndKind::ModerationStop: return "ModerationStop";
    }
    return "?";
}

EndKind end_kind_from_string(std::string_view s) {
    if (s == "TimeUp") return EndKind::TimeUp;
    if (s == "TurnTimeout") return EndKind::TurnTimeout;
    if (s == "AbruptExit") return EndKind::AbruptExit;
    if (s == "ModerationStop") return EndKind::ModerationStop;
    throw std::invalid_argument("unknown end reason '" + std::string(s) + "'");
}

std::string_view to_string(RejectReason r) {
    switch (r) {
    case RejectReason::NotYourTurn: return "NotYourTurn";
    case RejectReason::TooLong: return "TooLong";
    case RejectReason::CharsetViolation: return "CharsetViolation";
    case RejectReason::TurnExpired: return "TurnExpired";
    case RejectReason::SessionOver: return "SessionOver";
    case RejectReason::EmptyMessage: return "EmptyMessage";
    }
    return "?";
}

std::optional<bool> guess_correct(Verdict verdict, Kind partner) {
    switch (verdict) {
    case Verdict::Human: return partner == Kind::Human;
    case Verdict::Bot: return partner == Kind::Bot;
    case Verdict::Abstain: return std::nullopt;
    }
    return std::nullopt;
}

void SessionConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(session_duration)) throw InvalidConfig("session_duration must be > 0");
    if (!positive(turn_window)) throw InvalidConfig("turn_window must be > 0");
    if (!positive(guess_window)) throw InvalidConfig("guess_window must be > 0");
    if (max_message_chars == 0) throw InvalidConfig("max_message_chars must be > 0");
    if (allowed_charset.empty()) throw InvalidConfig("allowed_charset must not be empty");
}

GameSession GameSession::create(SessionConfig config, Participant a, Participant b, Slot opener) {
    config.validate();
    if (a.id.empty() || b.id.empty()) throw InvalidConfig("participant ids must not be empty");
    if (a.id == b.id) throw InvalidConfig("participant ids must be unique within a session");
    GameSession s;
    a.slot = Slot::A;
    b.slot = Slot::B;
    s.config_ = std::move(config);
    s.participants_ = {std::move(a), std::move(b)};
    s.opener_ = opener;
    s.phase_.kind = PhaseKind::Chatting;
    s.phase_.current_turn = opener;
    s.phase_.turn_deadline = s.config_.turn_window;
    return s;
}

bool GameSession::has_guessed(Slot s) const {
    for (const auto& g : guesses_)
        if (g.guesser == s) return true;
    return false;
}

MessageCheck GameSession::validate_message(Slot sender, std::string_view text, Seconds now) const {
    if (phase_.kind != PhaseKind::Chatting || now > config_.session_duration)
        return RejectReason::SessionOver;
    if (sender != phase_.current_turn) return RejectReason::NotYourTurn;
    if (now > phase_.turn_deadline || now < clock_) return RejectReason::TurnExpired;
    auto len = codepoint_count(text);
    if (!len) return RejectReason::CharsetViolation;
    if (*len == 0) return RejectReason::EmptyMessage;
    if (*len > config_.max_message_chars) return RejectReason::TooLong;
    if (!config_.allowed_charset.accepts(text)) return RejectReason::CharsetViolation;
    return std::nullopt;
}

void GameSession::end_chat(EndReason reason, Seconds at, std::vector<Notification>& out) {
    phase_.kind = PhaseKind::Guessing;
    phase_.end_reason = reason;
    chat_ended_at_ = at;
    out.push_back(notify::ChatEnded{reason, at});
    for (const auto& p : participants_)
        if (p.kind == Kind::Human) out.push_back(notify::GuessRequested{p.slot});
    // A bot-only session has nobody to ask.
    bool any_human = false;
    for (const auto& p : participants_) any_human = any_human || p.kind == Kind::Human;
    if (!any_human) complete(out);
}

void GameSession::complete(std::vector<Notification>& out) {
    phase_.kind = PhaseKind::Complete;
    out.push_back(notify::Completed{});
}

std::vector<Notification> GameSession::apply(const SessionEvent& ev) {
    std::vector<Notification> out;
    std::visit(
        [&](const auto& e) {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, event::MessageSent>) {
                const auto& m = e.message;
                if (auto why = validate_message(m.sender, m.text, m.sent_at))
                    throw IllegalTransition("message rejected: " + std::string(to_string(*why)));
                transcript_.push_back(m);
                clock_ = m.sent_at;
                phase_.current_turn = other(m.sender);
                phase_.turn_deadline = m.sent_at + config_.turn_window;
                out.push_back(notify::Delivered{m});
                out.push_back(notify::TurnChanged{phase_.current_turn, phase_.turn_deadline});
            } else if constexpr (std::is_same_v<E, event::ClockTick>) {
                if (e.now < clock_) throw IllegalTransition("clock went backwards");
                clock_ = e.now;
                if (phase_.kind == PhaseKind::Chatting) {
                    const Seconds end = config_.session_duration;
                    if (config_.on_turn_timeout == TurnTimeoutPolicy::PassTurn) {
                        // The turn only moves when alternation allows it; otherwise
                        // the silent player's window restarts.
                        while (e.now > phase_.turn_deadline && phase_.turn_deadline < end) {
                            const Slot next = other(phase_.current_turn);
                            if (transcript_.empty() || transcript_.back().sender != next) phase_.current_turn = next;
                            phase_.turn_deadline += config_.turn_window;
                            out.push_back(notify::TurnChanged{phase_.current_turn, phase_.turn_deadline});
                        }
                    }
                    // Whichever boundary lapsed first decides the reason.
                    if (phase_.turn_deadline < end && e.now > phase_.turn_deadline) {
                        end_chat({EndKind::TurnTimeout, std::nullopt}, phase_.turn_deadline, out);
                    } else if (e.now > end) {
                        end_chat({EndKind::TimeUp, std::nullopt}, end, out);
                    }
                } else if (phase_.kind == PhaseKind::Guessing) {
                    if (e.now >= guess_deadline()) {
                        for (const auto& p : participants_)
                            if (p.kind == Kind::Human && !has_guessed(p.slot))
                                guesses_.push_back({p.slot, Verdict::Abstain});
                        complete(out);
                    }
                }
                // Ticks in other phases are harmless no-ops.
            } else {
                if (phase_.kind != PhaseKind::Chatting)
                    throw IllegalTransition(std::string("chat already over, cannot apply ") +
                                            (std::is_same_v<E, event::AbruptExit> ? "AbruptExit"
                                                                                  : "ModerationStop"));
                if (e.at < clock_) throw IllegalTransition("clock went backwards");
                // A timer that lapsed before the exit ends the chat first.
                out = apply(event::ClockTick{e.at});
                if (phase_.kind != PhaseKind::Chatting) return;
                const EndKind kind = std::is_same_v<E, event::AbruptExit> ? EndKind::AbruptExit
                                                                          : EndKind::ModerationStop;
                end_chat({kind, e.slot}, e.at, out);
            }
        },
        ev);
    return out;
}

std::vector<Notification> GameSession::record_guess(const Guess& guess) {
    if (participant(guess.guesser).kind == Kind::Bot) throw BotCannotGuess("bots never guess");
    if (has_guessed(guess.guesser))
        throw DuplicateGuess("slot " + std::string(to_string(guess.guesser)) + " already guessed");
    if (phase_.kind != PhaseKind::Guessing)
        throw WrongPhase("guesses are only accepted while Guessing, phase is " +
                         std::string(to_string(phase_.kind)));
    if (guess.verdict == Verdict::Abstain) throw IllegalTransition("Abstain is not a guess");
    guesses_.push_back(guess);
    std::vector<Notification> out;
    bool all = true;
    for (const auto& p : participants_)
        if (p.kind == Kind::Human && !has_guessed(p.slot)) all = false;
    if (all) complete(out);
    return out;
}

SessionOutcome GameSession::finalize() const {
    if (phase_.kind != PhaseKind::Complete)
        throw WrongPhase("finalize needs a Complete session, phase is " +
                         std::string(to_string(phase_.kind)));
    SessionOutcome o;
    o.participants = participants_;
    o.transcript = transcript_;
    o.end_reason = *phase_.end_reason;
    o.opener = opener_;
    o.chat_ended_at = chat_ended_at_;
    for (const auto& g : guesses_) {
        const Kind partner = participant(other(g.guesser)).kind;
        o.guesses.push_back({g, guess_correct(g.verdict, partner)});
    }
    return o;
}

std::string serialize(const SessionOutcome& o) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& p : o.participants)
        out << "participant " << to_string(p.slot) << ' ' << to_string(p.kind) << ' ' << p.id << '\n';
    out << "opener " << to_string(o.opener) << '\n';
    for (const auto& m : o.transcript)
        out << "msg " << to_string(m.sender) << ' ' << m.sent_at << ' ' << m.text << '\n';
    out << "end " << to_string(o.end_reason.kind);
    if (o.end_reason.slot) out << ' ' << to_string(*o.end_reason.slot);
    out << " at " << o.chat_ended_at << '\n';
    for (const auto& g : o.guesses) {
        out << "guess " << to_string(g.guess.guesser) << ' ' << to_string(g.guess.verdict) << ' ';
        out << (g.correct ? (*g.correct ? "correct" : "wrong") : "excluded") << '\n';
    }
    return out.str();
}

}  // namespace hon
