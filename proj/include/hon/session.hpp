#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hon/text.hpp"

namespace hon {

// Seconds on the chat clock. Zero is the moment the session enters Chatting.
using Seconds = double;

enum class Slot { A, B };
enum class Kind { Human, Bot };
enum class Verdict { Human, Bot, Abstain };

constexpr Slot other(Slot s) { return s == Slot::A ? Slot::B : Slot::A; }
constexpr std::size_t index_of(Slot s) { return s == Slot::A ? 0 : 1; }

std::string_view to_string(Slot s);
std::string_view to_string(Kind k);
std::string_view to_string(Verdict v);
Slot slot_from_string(std::string_view s);
Kind kind_from_string(std::string_view s);
Verdict verdict_from_string(std::string_view s);

enum class TurnTimeoutPolicy { EndChat, PassTurn };

struct SessionConfig {
    Seconds session_duration = 120.0;
    Seconds turn_window = 20.0;
    std::size_t max_message_chars = 100;
    Charset allowed_charset = Charset::latin_and_emoji();
    // Time each human gets to vote once the chat is over; lapsed votes become Abstain.
    Seconds guess_window = 15.0;
    TurnTimeoutPolicy on_turn_timeout = TurnTimeoutPolicy::EndChat;

    // Throws InvalidConfig.
    void validate() const;
};

struct Participant {
    std::string id;
    Kind kind = Kind::Human;
    Slot slot = Slot::A;
};

struct ChatMessage {
    Slot sender = Slot::A;
    std::string text;
    Seconds sent_at = 0.0;

    bool operator==(const ChatMessage&) const = default;
};

enum class PhaseKind { Matching = 0, Chatting = 1, Guessing = 2, Complete = 3 };
std::string_view to_string(PhaseKind p);

enum class EndKind { TimeUp, TurnTimeout, AbruptExit, ModerationStop };
std::string_view to_string(EndKind k);
EndKind end_kind_from_string(std::string_view s);

struct EndReason {
    EndKind kind = EndKind::TimeUp;
    std::optional<Slot> slot;  // set for AbruptExit and ModerationStop

    bool operator==(const EndReason&) const = default;
};

struct Phase {
    PhaseKind kind = PhaseKind::Matching;
    Slot current_turn = Slot::A;      // meaningful while Chatting
    Seconds turn_deadline = 0.0;      // meaningful while Chatting
    std::optional<EndReason> end_reason;  // set from Guessing onwards
};

struct Guess {
    Slot guesser = Slot::A;
    Verdict verdict = Verdict::Human;

    bool operator==(const Guess&) const = default;
};

enum class RejectReason { NotYourTurn, TooLong, CharsetViolation, TurnExpired, SessionOver, EmptyMessage };
std::string_view to_string(RejectReason r);

// Result of validate_message: nullopt means Accepted.
using MessageCheck = std::optional<RejectReason>;

namespace event {
struct MessageSent {
    ChatMessage message;
};
struct ClockTick {
    Seconds now = 0.0;
};
struct AbruptExit {
    Slot slot = Slot::A;
    Seconds at = 0.0;
};
struct ModerationStop {
    Slot slot = Slot::A;
    Seconds at = 0.0;
};
}  // namespace event

using SessionEvent =
    std::variant<event::MessageSent, event::ClockTick, event::AbruptExit, event::ModerationStop>;

namespace notify {
struct Delivered {  // message from `message.sender` now visible to the other slot
    ChatMessage message;
};
struct TurnChanged {
    Slot turn = Slot::A;
    Seconds deadline = 0.0;
};
struct ChatEnded {
    EndReason reason;
    Seconds at = 0.0;
};
struct GuessRequested {
    Slot slot = Slot::A;
};
struct Completed {};
}  // namespace notify

using Notification = std::variant<notify::Delivered, notify::TurnChanged, notify::ChatEnded,
                                  notify::GuessRequested, notify::Completed>;

struct GuessResult {
    Guess guess;
    // nullopt for Abstain.
    std::optional<bool> correct;

    bool operator==(const GuessResult&) const = default;
};

struct SessionOutcome {
    std::array<Participant, 2> participants;  // indexed by slot
    std::vector<ChatMessage> transcript;
    std::vector<GuessResult> guesses;
    EndReason end_reason;
    Slot opener = Slot::A;
    Seconds chat_ended_at = 0.0;
};

// Canonical text form of an outcome; byte-equal for equal outcomes.
std::string serialize(const SessionOutcome& outcome);

// One chat session. Pure: time only enters through event arguments. Not
// thread-safe; a single owner applies all events in order.
class GameSession {
public:
    // Throws InvalidConfig on a bad config or participants.
    static GameSession create(SessionConfig config, Participant a, Participant b, Slot opener);

    const SessionConfig& config() const { return config_; }
    const Phase& phase() const { return phase_; }
    const std::vector<ChatMessage>& transcript() const { return transcript_; }
    const std::vector<Guess>& guesses() const { return guesses_; }
    const Participant& participant(Slot s) const { return participants_[index_of(s)]; }
    Slot opener() const { return opener_; }
    // Latest time seen by the session; events may not go back before it.
    Seconds clock() const { return clock_; }
    Seconds chat_ended_at() const { return chat_ended_at_; }
    Seconds guess_deadline() const { return chat_ended_at_ + config_.guess_window; }
    bool has_guessed(Slot s) const;

    MessageCheck validate_message(Slot sender, std::string_view text, Seconds now) const;

    // Throws IllegalTransition when the event does not fit the current phase.
    std::vector<Notification> apply(const SessionEvent& ev);

    // Throws BotCannotGuess, DuplicateGuess or WrongPhase.
    std::vector<Notification> record_guess(const Guess& guess);

    // Throws WrongPhase unless Complete.
    SessionOutcome finalize() const;

private:
    GameSession() = default;

    void end_chat(EndReason reason, Seconds at, std::vector<Notification>& out);
    void complete(std::vector<Notification>& out);

    SessionConfig config_;
    std::array<Participant, 2> participants_;
    Slot opener_ = Slot::A;
    Phase phase_;
    std::vector<ChatMessage> transcript_;
    std::vector<Guess> guesses_;
    Seconds clock_ = 0.0;
    Seconds chat_ended_at_ = 0.0;
};

// Correctness of a verdict against the partner's actual kind; nullopt for Abstain.
std::optional<bool> guess_correct(Verdict verdict, Kind partner);

}  // namespace hon
