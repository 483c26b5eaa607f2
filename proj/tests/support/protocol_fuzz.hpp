#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hon/error.hpp"
#include "hon/rng.hpp"
#include "hon/session.hpp"

namespace hon::testing {

// Written out from the protocol rules rather than taken from Charset.
inline bool oracle_allowed(char32_t cp) {
    const char32_t ranges[][2] = {
        {0x20, 0x7E},       {0xC0, 0xD6},       {0xD8, 0xF6},       {0xF8, 0xFF},       {0x100, 0x17F},
        {0x200D, 0x200D},   {0x2600, 0x26FF},   {0x2700, 0x27BF},   {0xFE0F, 0xFE0F},   {0x1F1E6, 0x1F1FF},
        {0x1F300, 0x1F5FF}, {0x1F600, 0x1F64F}, {0x1F680, 0x1F6FF}, {0x1F900, 0x1F9FF}, {0x1FA70, 0x1FAFF},
    };
    for (const auto& r : ranges)
        if (cp >= r[0] && cp <= r[1]) return true;
    return false;
}

// Byte-level UTF-8 decode; returns false on any malformed sequence.
inline bool oracle_decode(const std::string& s, std::vector<char32_t>& out) {
    out.clear();
    for (std::size_t i = 0; i < s.size();) {
        const auto b = static_cast<unsigned char>(s[i]);
        int len = b < 0x80 ? 1 : (b >> 5) == 6 ? 2 : (b >> 4) == 14 ? 3 : (b >> 3) == 30 ? 4 : 0;
        if (len == 0 || i + len > s.size()) return false;
        char32_t cp = len == 1 ? b : len == 2 ? (b & 0x1F) : len == 3 ? (b & 0x0F) : (b & 0x07);
        for (int k = 1; k < len; ++k) {
            const auto c = static_cast<unsigned char>(s[i + k]);
            if ((c >> 6) != 2) return false;
            cp = (cp << 6) | (c & 0x3F);
        }
        out.push_back(cp);
        i += len;
    }
    return true;
}

struct FuzzResult {
    std::size_t sequences = 0;
    std::size_t events = 0;
    std::size_t accepted_messages = 0;
    std::size_t completed = 0;
    std::vector<std::string> violations;
};

inline std::string fuzz_text(Rng& rng) {
    static const std::vector<std::string> pool = {
        "hello",
        "how are you?",
        "\xF0\x9F\x98\x82 lol",                      // emoji
        "caf\xC3\xA9 cr\xC3\xA8me",                  // Latin-1
        "\xD0\xBF\xD1\x80\xD0\xB8\xD0\xB2\xD0\xB5\xD1\x82",  // Cyrillic
        "\xE4\xBD\xA0\xE5\xA5\xBD",                  // CJK
        "",
        "bad \xFF byte",
        "tab\there",
        "line\nbreak",
        "\xC3\x97 sign",                             // U+00D7, excluded
    };
    const auto pick = rng.below(pool.size() + 3);
    if (pick < pool.size()) return pool[pick];
    // Random length around the 100 codepoint limit, mixing 1- and 4-byte codepoints.
    const std::size_t n = 90 + rng.below(20);
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += rng.bernoulli(0.1) ? "\xF0\x9F\x91\x8D" : std::string(1, char('a' + rng.below(26)));
    return s;
}

// Drives random event sequences through GameSession and checks the protocol
// invariants after every event.
inline FuzzResult run_protocol_fuzz(std::size_t sequences, std::uint64_t seed) {
    FuzzResult r;
    auto fail = [&](std::size_t seq, const std::string& what) {
        if (r.violations.size() < 20) r.violations.push_back("sequence " + std::to_string(seq) + ": " + what);
    };
    for (std::size_t seq = 0; seq < sequences; ++seq) {
        Rng rng(split_seed(seed, seq));
        SessionConfig cfg;
        if (rng.bernoulli(0.3)) cfg.on_turn_timeout = TurnTimeoutPolicy::PassTurn;
        if (rng.bernoulli(0.2)) cfg.turn_window = 5.0 + static_cast<double>(rng.below(30));
        if (rng.bernoulli(0.2)) cfg.session_duration = 30.0 + static_cast<double>(rng.below(120));
        const Kind ka = rng.bernoulli(0.2) ? Kind::Bot : Kind::Human;
        const Kind kb = rng.bernoulli(0.5) ? Kind::Bot : Kind::Human;
        const Slot opener = rng.bernoulli(0.5) ? Slot::A : Slot::B;
        auto s = GameSession::create(cfg, {"a", ka, Slot::A}, {"b", kb, Slot::B}, opener);
        ++r.sequences;

        int last_phase = static_cast<int>(s.phase().kind);
        Seconds t = 0.0;
        const std::size_t n_events = 5 + rng.below(60);
        for (std::size_t e = 0; e < n_events; ++e) {
            ++r.events;
            // Mostly the slot whose turn it is, so that chats get long.
            const Slot who = rng.bernoulli(0.7) ? s.phase().current_turn : rng.bernoulli(0.5) ? Slot::A : Slot::B;
            // Mostly small steps, sometimes jumps past deadlines; rarely backwards.
            const double step = rng.bernoulli(0.05) ? -1.0 : rng.bernoulli(0.1) ? 25.0 : rng.uniform01() * 8.0;
            const Seconds at = t + step;
            const auto kind = rng.below(10);
            try {
                if (kind < 6) {
                    const auto text = fuzz_text(rng);
                    const auto check = s.validate_message(who, text, at);
                    bool threw = false;
                    try {
                        s.apply(event::MessageSent{{who, text, at}});
                    } catch (const IllegalTransition&) {
                        threw = true;
                    }
                    if (check.has_value() != threw) fail(seq, "validate_message and apply disagree");
                    if (!threw) {
                        ++r.accepted_messages;
                        t = at;
                    }
                } else if (kind < 8) {
                    s.apply(event::ClockTick{at});
                    t = at;
                } else if (kind == 8) {
                    if (rng.bernoulli(0.5))
                        s.apply(event::AbruptExit{who, at});
                    else
                        s.apply(event::ModerationStop{who, at});
                    t = at;
                } else {
                    const Verdict v = rng.bernoulli(0.5) ? Verdict::Human : Verdict::Bot;
                    s.record_guess({who, rng.bernoulli(0.05) ? Verdict::Abstain : v});
                }
            } catch (const Error&) {
                // Rejections are part of the protocol; the checks below still run.
            }

            const auto& ph = s.phase();
            const int idx = static_cast<int>(ph.kind);
            if (idx < last_phase) fail(seq, "phase went backwards");
            last_phase = idx;

            const auto& tr = s.transcript();
            std::vector<char32_t> cps;
            for (std::size_t i = 0; i < tr.size(); ++i) {
                const auto& m = tr[i];
                if (i > 0 && tr[i - 1].sender == m.sender) fail(seq, "two consecutive messages from one slot");
                const bool strict_turns = cfg.on_turn_timeout == TurnTimeoutPolicy::EndChat;
                if (strict_turns && i == 0 && m.sender != s.opener()) fail(seq, "first message not from the opener");
                if (i > 0 && m.sent_at < tr[i - 1].sent_at) fail(seq, "timestamps not monotone");
                if (strict_turns && i > 0 && m.sent_at > tr[i - 1].sent_at + cfg.turn_window) fail(seq, "reply after the turn window");
                if (strict_turns && i == 0 && m.sent_at > cfg.turn_window) fail(seq, "opening message after the turn window");
                if (m.sent_at < 0 || m.sent_at > cfg.session_duration) fail(seq, "message outside the session");
                if (!oracle_decode(m.text, cps)) {
                    fail(seq, "malformed UTF-8 accepted");
                    continue;
                }
                if (cps.empty() || cps.size() > cfg.max_message_chars) fail(seq, "length bound violated");
                for (char32_t cp : cps)
                    if (!oracle_allowed(cp)) fail(seq, "codepoint outside the charset accepted");
            }
            if (ph.kind == PhaseKind::Chatting) {
                if (s.clock() > ph.turn_deadline) fail(seq, "chatting past the turn deadline");
                if (ph.turn_deadline - s.clock() > cfg.turn_window + 1e-9) fail(seq, "turn deadline too far ahead");
                if (s.clock() > cfg.session_duration) fail(seq, "chatting past the session end");
            } else {
                if (!ph.end_reason) fail(seq, "chat ended without a reason");
                if (s.chat_ended_at() > cfg.session_duration + 1e-9) fail(seq, "chat ended after the session end");
            }
            if (ph.kind == PhaseKind::Complete) {
                const auto o = s.finalize();
                for (const auto& g : o.guesses) {
                    const Kind partner = o.participants[index_of(other(g.guess.guesser))].kind;
                    if (o.participants[index_of(g.guess.guesser)].kind != Kind::Human) fail(seq, "a bot guessed");
                    const bool right = (g.guess.verdict == Verdict::Bot) == (partner == Kind::Bot);
                    if (g.guess.verdict == Verdict::Abstain ? g.correct.has_value() : g.correct != right)
                        fail(seq, "guess correctness wrong");
                }
                break;
            }
        }
        if (s.phase().kind == PhaseKind::Complete) ++r.completed;
    }
    return r;
}

}  // namespace hon::testing
