#include <doctest.h>

#include "../support/protocol_fuzz.hpp"
#include "hon/error.hpp"
#include "hon/session.hpp"

using namespace hon;

namespace {

GameSession human_bot(Slot opener = Slot::A, SessionConfig cfg = {}) {
    return GameSession::create(cfg, {"h", Kind::Human, Slot::A}, {"b", Kind::Bot, Slot::B}, opener);
}

GameSession human_human(Slot opener = Slot::A, SessionConfig cfg = {}) {
    return GameSession::create(cfg, {"h1", Kind::Human, Slot::A}, {"h2", Kind::Human, Slot::B}, opener);
}

template <typename T>
bool has(const std::vector<Notification>& ns) {
    for (const auto& n : ns)
        if (std::holds_alternative<T>(n)) return true;
    return false;
}

}  // namespace

TEST_CASE("create starts chatting with the opener and a full turn window") {
    auto s = human_bot(Slot::A);
    CHECK(s.phase().kind == PhaseKind::Chatting);
    CHECK(s.phase().current_turn == Slot::A);
    CHECK(s.phase().turn_deadline == 20.0);
    CHECK(s.transcript().empty());

    auto hh = human_human(Slot::B);
    CHECK(hh.phase().current_turn == Slot::B);
    CHECK(hh.phase().turn_deadline == 20.0);
}

TEST_CASE("create rejects invalid configs and participants") {
    SessionConfig c;
    c.session_duration = 0;
    CHECK_THROWS_AS(human_bot(Slot::A, c), InvalidConfig);
    c = {};
    c.turn_window = -1;
    CHECK_THROWS_AS(human_bot(Slot::A, c), InvalidConfig);
    c = {};
    c.max_message_chars = 0;
    CHECK_THROWS_AS(human_bot(Slot::A, c), InvalidConfig);
    c = {};
    c.allowed_charset = Charset{};
    CHECK_THROWS_AS(human_bot(Slot::A, c), InvalidConfig);
    CHECK_THROWS_AS(GameSession::create({}, {"x", Kind::Human, Slot::A}, {"x", Kind::Bot, Slot::B}, Slot::A),
                    InvalidConfig);
}

TEST_CASE("validate_message covers every rejection reason") {
    auto s = human_bot();
    CHECK_FALSE(s.validate_message(Slot::A, "hello", 5.0).has_value());
    CHECK(s.validate_message(Slot::A, std::string(101, 'a'), 5.0) == RejectReason::TooLong);
    CHECK_FALSE(s.validate_message(Slot::A, std::string(100, 'a'), 5.0).has_value());
    CHECK(s.validate_message(Slot::A, "\xD0\xBF\xD1\x80\xD0\xB8\xD0\xB2\xD0\xB5\xD1\x82", 5.0) ==
          RejectReason::CharsetViolation);
    CHECK(s.validate_message(Slot::B, "hello", 5.0) == RejectReason::NotYourTurn);
    CHECK(s.validate_message(Slot::A, "hello", 20.5) == RejectReason::TurnExpired);
    CHECK(s.validate_message(Slot::A, "", 5.0) == RejectReason::EmptyMessage);
    CHECK(s.validate_message(Slot::A, "hello", 121.0) == RejectReason::SessionOver);

    s.apply(event::MessageSent{{Slot::A, "hi", 3.0}});
    CHECK(s.validate_message(Slot::A, "again", 4.0) == RejectReason::NotYourTurn);
}

TEST_CASE("emoji and Latin-1 letters count as one character each") {
    auto s = human_bot();
    std::string hundred_emoji;
    for (int i = 0; i < 100; ++i) hundred_emoji += "\xF0\x9F\x98\x82";
    CHECK_FALSE(s.validate_message(Slot::A, hundred_emoji, 1.0).has_value());
    CHECK(s.validate_message(Slot::A, hundred_emoji + "a", 1.0) == RejectReason::TooLong);
    CHECK_FALSE(s.validate_message(Slot::A, "na\xC3\xAFve caf\xC3\xA9", 1.0).has_value());
}

TEST_CASE("a message flips the turn and resets the deadline") {
    auto s = human_bot();
    auto ns = s.apply(event::MessageSent{{Slot::A, "hi", 3.0}});
    CHECK(s.phase().current_turn == Slot::B);
    CHECK(s.phase().turn_deadline == 23.0);
    CHECK(has<notify::Delivered>(ns));
    CHECK(has<notify::TurnChanged>(ns));
    CHECK_THROWS_AS(s.apply(event::MessageSent{{Slot::A, "again", 4.0}}), IllegalTransition);
}

TEST_CASE("the chat ends after the session duration") {
    auto s = human_bot(Slot::B);
    Seconds t = 0;
    Slot who = Slot::B;
    while (t + 10 <= 120) {
        t += 10;
        s.apply(event::MessageSent{{who, "msg", t}});
        who = other(who);
    }
    auto ns = s.apply(event::ClockTick{121.0});
    CHECK(s.phase().kind == PhaseKind::Guessing);
    CHECK(s.phase().end_reason->kind == EndKind::TimeUp);
    CHECK(s.chat_ended_at() == 120.0);
    CHECK(has<notify::ChatEnded>(ns));
    CHECK(has<notify::GuessRequested>(ns));
}

TEST_CASE("a lapsed turn ends the chat by default") {
    auto s = human_bot();
    s.apply(event::MessageSent{{Slot::A, "hi", 2.0}});
    s.apply(event::ClockTick{22.0});
    CHECK(s.phase().kind == PhaseKind::Chatting);
    s.apply(event::ClockTick{22.5});
    CHECK(s.phase().kind == PhaseKind::Guessing);
    CHECK(s.phase().end_reason->kind == EndKind::TurnTimeout);
    CHECK(s.chat_ended_at() == 22.0);
}

TEST_CASE("pass-turn policy keeps alternation") {
    SessionConfig c;
    c.on_turn_timeout = TurnTimeoutPolicy::PassTurn;
    auto s = human_bot(Slot::A, c);
    // Nobody has spoken: the opening turn moves to B.
    s.apply(event::ClockTick{21.0});
    CHECK(s.phase().kind == PhaseKind::Chatting);
    CHECK(s.phase().current_turn == Slot::B);
    CHECK(s.phase().turn_deadline == 40.0);
    s.apply(event::MessageSent{{Slot::B, "hey", 30.0}});
    // A stays silent; B spoke last, so A keeps the turn with a fresh window.
    s.apply(event::ClockTick{51.0});
    CHECK(s.phase().current_turn == Slot::A);
    CHECK(s.phase().turn_deadline == 70.0);
    s.apply(event::ClockTick{125.0});
    CHECK(s.phase().end_reason->kind == EndKind::TimeUp);
}

TEST_CASE("moderation stop and abrupt exit end the chat immediately") {
    auto s = human_bot();
    s.apply(event::ModerationStop{Slot::A, 4.0});
    CHECK(s.phase().kind == PhaseKind::Guessing);
    CHECK(s.phase().end_reason == EndReason{EndKind::ModerationStop, Slot::A});

    auto e = human_bot();
    e.apply(event::MessageSent{{Slot::A, "hi", 1.0}});
    e.apply(event::AbruptExit{Slot::B, 6.0});
    CHECK(e.phase().end_reason == EndReason{EndKind::AbruptExit, Slot::B});
    CHECK_THROWS_AS(e.apply(event::AbruptExit{Slot::B, 7.0}), IllegalTransition);
}

TEST_CASE("an exit after a lapsed deadline is absorbed by the timeout") {
    auto s = human_bot();
    s.apply(event::MessageSent{{Slot::A, "hi", 1.0}});
    s.apply(event::AbruptExit{Slot::B, 40.0});
    CHECK(s.phase().end_reason->kind == EndKind::TurnTimeout);
    CHECK(s.chat_ended_at() == 21.0);
}

TEST_CASE("clock may not go backwards") {
    auto s = human_bot();
    s.apply(event::ClockTick{5.0});
    CHECK_THROWS_AS(s.apply(event::ClockTick{4.0}), IllegalTransition);
    CHECK_THROWS_AS(s.apply(event::MessageSent{{Slot::A, "late", 4.5}}), IllegalTransition);
}

TEST_CASE("guess rules") {
    auto s = human_bot();
    CHECK_THROWS_AS(s.record_guess({Slot::A, Verdict::Bot}), WrongPhase);
    s.apply(event::ClockTick{25.0});
    CHECK_THROWS_AS(s.record_guess({Slot::B, Verdict::Human}), BotCannotGuess);
    CHECK_THROWS_AS(s.record_guess({Slot::A, Verdict::Abstain}), IllegalTransition);
    auto ns = s.record_guess({Slot::A, Verdict::Bot});
    CHECK(has<notify::Completed>(ns));
    CHECK(s.phase().kind == PhaseKind::Complete);
    CHECK_THROWS_AS(s.record_guess({Slot::A, Verdict::Bot}), DuplicateGuess);
    auto o = s.finalize();
    REQUIRE(o.guesses.size() == 1);
    CHECK(o.guesses[0].correct == true);
}

TEST_CASE("human guessing Human against a bot is wrong") {
    auto s = human_bot();
    s.apply(event::ClockTick{25.0});
    s.record_guess({Slot::A, Verdict::Human});
    CHECK(s.finalize().guesses[0].correct == false);
}

TEST_CASE("human-human sessions wait for both guesses") {
    auto s = human_human();
    CHECK_THROWS_AS(s.finalize(), WrongPhase);
    s.apply(event::ClockTick{25.0});
    s.record_guess({Slot::A, Verdict::Human});
    CHECK(s.phase().kind == PhaseKind::Guessing);
    s.record_guess({Slot::B, Verdict::Human});
    auto o = s.finalize();
    REQUIRE(o.guesses.size() == 2);
    CHECK(o.guesses[0].correct == true);
    CHECK(o.guesses[1].correct == true);
}

TEST_CASE("lapsed guesses become Abstain") {
    auto s = human_human();
    s.apply(event::ClockTick{25.0});
    s.record_guess({Slot::B, Verdict::Bot});
    s.apply(event::ClockTick{s.guess_deadline() - 0.01});
    CHECK(s.phase().kind == PhaseKind::Guessing);
    s.apply(event::ClockTick{s.guess_deadline()});
    CHECK(s.phase().kind == PhaseKind::Complete);
    auto o = s.finalize();
    REQUIRE(o.guesses.size() == 2);
    CHECK(o.guesses[1].guess == Guess{Slot::A, Verdict::Abstain});
    CHECK_FALSE(o.guesses[1].correct.has_value());
}

TEST_CASE("guess correctness over every verdict and partner kind") {
    CHECK(guess_correct(Verdict::Human, Kind::Human) == true);
    CHECK(guess_correct(Verdict::Human, Kind::Bot) == false);
    CHECK(guess_correct(Verdict::Bot, Kind::Human) == false);
    CHECK(guess_correct(Verdict::Bot, Kind::Bot) == true);
    CHECK_FALSE(guess_correct(Verdict::Abstain, Kind::Bot).has_value());
}

TEST_CASE("identical event sequences give byte-identical outcomes") {
    auto run = [] {
        auto s = human_human(Slot::B);
        s.apply(event::MessageSent{{Slot::B, "hello there", 2.5}});
        s.apply(event::MessageSent{{Slot::A, "hi \xF0\x9F\x99\x82", 9.0}});
        s.apply(event::ClockTick{40.0});
        s.record_guess({Slot::A, Verdict::Bot});
        s.record_guess({Slot::B, Verdict::Human});
        return serialize(s.finalize());
    };
    CHECK(run() == run());
}

TEST_CASE("protocol fuzz holds every invariant") {
    const auto r = testing::run_protocol_fuzz(1000, 2024);
    for (const auto& v : r.violations) MESSAGE(v);
    CHECK(r.violations.empty());
    CHECK(r.accepted_messages > 1000);
    CHECK(r.completed > 100);
}
