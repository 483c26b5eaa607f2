#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "hon/config.hpp"
#include "hon/gateway.hpp"
#include "hon/simulator.hpp"
#include "hon/store.hpp"

namespace hon::testing {

inline std::filesystem::path fresh_temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("hon-test-" + name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

struct HarnessOptions {
    std::size_t clients = 16;
    std::size_t games_per_client = 4;
    std::uint64_t seed = 1;
    double step = 0.1;           // virtual seconds per tick
    double horizon = 7200.0;     // give up after this much virtual time
    bool misbehave = true;       // inject invalid frames and odd client behavior
};

struct HarnessReport {
    std::set<std::string> frame_types;  // seen in either direction
    std::set<std::string> error_codes;
    std::size_t results = 0;
    std::size_t sessions = 0;
    std::size_t bot_sessions = 0;
    std::size_t bot_sessions_human_in_a = 0;
    std::size_t reconnects = 0;
    double max_session_span = 0.0;  // Matched to Result, or record start to end
    double liveness_bound = 0.0;
    bool drained = false;
    std::vector<std::string> violations;

    void fail(const std::string& what) {
        if (violations.size() < 25) violations.push_back(what);
    }
};

// Scripted clients against GatewayCore on a virtual clock. Every call is
// synchronous, so each reply can be checked against the frame that caused it.
class GatewayHarness {
public:
    GatewayHarness(PlatformConfig config, const std::filesystem::path& store_path, HarnessOptions options)
        : options_(options),
          store_path_(store_path),
          store_(std::make_shared<RecordStore>(store_path)),
          core_(config, store_, GatewayCore::Options{options.seed, false, false}),
          rng_(split_seed(options.seed, 99)),
          config_(std::move(config)) {
        report_.liveness_bound = config_.session.session_duration + config_.session.guess_window + 5.0;
    }

    HarnessReport run() {
        for (std::size_t i = 0; i < options_.clients; ++i) {
            Client c;
            c.id = next_conn_++;
            c.games_left = options_.games_per_client;
            c.style = static_cast<Style>(i % 5);
            c.next_join = t0_ + rng_.uniform01() * 20.0;
            clients_.push_back(c);
            route(core_.connect(c.id, t0_));
        }
        for (now_ = t0_; now_ < t0_ + options_.horizon; now_ += options_.step) {
            route(core_.tick(now_));
            for (auto& c : clients_) act(c);
            const bool idle = std::all_of(clients_.begin(), clients_.end(),
                                          [](const Client& c) { return c.games_left == 0 && c.state == State::Idle; });
            if (idle && core_.active_sessions() == 0 && core_.queued() == 0) {
                report_.drained = true;
                break;
            }
        }
        if (!report_.drained) report_.fail("clients still playing at the horizon");
        check_store();
        return report_;
    }

private:
    enum class State { Idle, Queued, Chatting, Guessing };
    enum class Style { Chatty, Silent, NoGuess, Quitter, Noisy };

    struct Client {
        ConnectionId id = 0;
        Style style = Style::Chatty;
        State state = State::Idle;
        std::size_t games_left = 0;
        std::string token;
        std::optional<Slot> slot;
        std::string session;
        bool my_turn = false;
        double next_join = 0.0;
        std::optional<double> send_at;
        std::optional<double> guess_at;
        std::optional<double> quit_at;
        std::optional<Verdict> guessed;
        double matched_at = 0.0;
        std::optional<LifetimeCounters> last;
        bool duplicate_probed = false;
    };

    void send(Client& c, const Frame& f, const std::optional<std::string>& expect_error = std::nullopt) {
        report_.frame_types.insert(std::string(frame_type(f)));
        deliver(c.id, core_.handle(c.id, f, now_), expect_error);
    }

    void send_raw(Client& c, const std::string& text, const std::string& expect_error) {
        deliver(c.id, core_.handle_text(c.id, text, now_), expect_error);
    }

    void deliver(ConnectionId from, const std::vector<Outbound>& out, const std::optional<std::string>& expect_error) {
        if (expect_error) {
            bool found = false;
            for (const auto& o : out)
                if (o.to == from)
                    if (const auto* e = std::get_if<frame::Error>(&o.frame); e && e->code == *expect_error) found = true;
            if (!found) report_.fail("expected Error{" + *expect_error + "}");
        }
        route(out);
    }

    Client* find(ConnectionId id) {
        for (auto& c : clients_)
            if (c.id == id) return &c;
        return nullptr;
    }

    void act(Client& c) {
        if (c.state == State::Idle) {
            if (c.games_left == 0 || now_ < c.next_join) return;
            if (options_.misbehave && c.style == Style::Noisy) {
                send(c, frame::SendText{"anyone there?"}, std::string(wire_error::NotInSession));
                send_raw(c, "{not json", wire_error::BadFrame);
                send_raw(c, R"({"type":"Teleport"})", wire_error::UnknownFrame);
                send_raw(c, R"({"type":"SubmitGuess","verdict":"maybe"})", wire_error::BadFrame);
                send(c, frame::Queued{"x"}, std::string(wire_error::UnexpectedFrame));
            }
            frame::Join join;
            if (!c.token.empty()) join.token = c.token;
            if (rng_.bernoulli(0.5)) join.nickname = "player" + std::to_string(c.id);
            send(c, join);
            if (options_.misbehave && c.style == Style::Noisy) send(c, frame::Join{}, std::string(wire_error::AlreadyQueued));
            return;
        }
        if (c.state == State::Chatting) {
            if (c.quit_at && now_ >= *c.quit_at) {
                quit_and_reconnect(c);
                return;
            }
            if (!c.my_turn || !c.send_at || now_ < *c.send_at) return;
            c.send_at.reset();
            if (options_.misbehave && c.style == Style::Noisy) {
                send(c, frame::SendText{std::string(101, 'x')}, std::string("TooLong"));
                send(c, frame::SendText{"\xD0\xBF\xD1\x80\xD0\xB8\xD0\xB2\xD0\xB5\xD1\x82"}, std::string("CharsetViolation"));
                send(c, frame::SubmitGuess{Verdict::Bot}, std::string(wire_error::WrongPhase));
                send(c, frame::Join{}, std::string(wire_error::AlreadyInSession));
            }
            if (options_.misbehave && c.style == Style::Noisy && rng_.bernoulli(0.03)) {
                send(c, frame::SendText{"kill yourself"});  // ends the chat by moderation
                return;
            }
            const auto& lines = neutral_phrases();
            const Slot me = *c.slot;
            send(c, frame::SendText{lines[rng_.below(lines.size())]});
            if (options_.misbehave && c.style == Style::Noisy && c.state == State::Chatting && !c.my_turn && c.slot == me)
                send(c, frame::SendText{"again"}, std::string("NotYourTurn"));
            return;
        }
        if (c.state == State::Guessing && c.guess_at && now_ >= *c.guess_at) {
            c.guess_at.reset();
            const Verdict v = rng_.bernoulli(0.5) ? Verdict::Bot : Verdict::Human;
            c.guessed = v;
            send(c, frame::SubmitGuess{v});
            if (options_.misbehave && c.style == Style::Noisy && c.state == State::Guessing && !c.duplicate_probed) {
                c.duplicate_probed = true;
                send(c, frame::SubmitGuess{v}, std::string(wire_error::DuplicateGuess));
            }
        }
    }

    void quit_and_reconnect(Client& c) {
        route(core_.disconnect(c.id, now_));
        ++report_.reconnects;
        // A dropped game still counts in the lifetime totals of the token.
        c.games_left = c.games_left > 0 ? c.games_left - 1 : 0;
        c.id = next_conn_++;
        c.state = State::Idle;
        c.slot.reset();
        c.session.clear();
        c.quit_at.reset();
        c.send_at.reset();
        c.my_turn = false;
        c.next_join = now_ + 1.0 + rng_.uniform01() * 5.0;
        route(core_.connect(c.id, now_));
    }

    void route(const std::vector<Outbound>& out) {
        for (const auto& o : out) {
            Client* c = find(o.to);
            if (!c) {
                report_.fail("frame sent to a closed connection");
                continue;
            }
            receive(*c, o.frame);
        }
    }

    void receive(Client& c, const Frame& f) {
        const std::string type(frame_type(f));
        report_.frame_types.insert(type);
        if (is_client_frame(f)) report_.fail("server sent a client frame: " + type);
        const std::string wire_text = encode_frame(f);
        const bool before_result = !std::holds_alternative<frame::Result>(f);
        if (before_result && !std::holds_alternative<frame::PeerText>(f)) {
            // PeerText carries player text, which may say anything.
            for (const char* word : {"partner_kind", "\"bot\"", "\"human\"", "persona", "backend"})
                if (wire_text.find(word) != std::string::npos) report_.fail("frame reveals identity: " + wire_text);
        }

        if (const auto* q = std::get_if<frame::Queued>(&f)) {
            if (!c.token.empty() && q->token != c.token) report_.fail("token changed across games");
            c.token = q->token;
            c.state = State::Queued;
        } else if (const auto* m = std::get_if<frame::Matched>(&f)) {
            if (c.state != State::Queued) report_.fail("Matched while not queued");
            c.state = State::Chatting;
            c.slot = m->slot;
            c.session = m->session_id;
            c.matched_at = now_;
            c.guessed.reset();
            c.duplicate_probed = false;
            if (c.style == Style::Quitter && rng_.bernoulli(0.5)) c.quit_at = now_ + rng_.uniform01() * 60.0;
        } else if (const auto* t = std::get_if<frame::TimerSync>(&f)) {
            if (t->session_remaining_s < 0 || t->session_remaining_s > config_.session.session_duration + 1e-9)
                report_.fail("TimerSync session_remaining_s out of range");
            if (t->turn_remaining_s < 0 || t->turn_remaining_s > config_.session.turn_window + 1e-9)
                report_.fail("TimerSync turn_remaining_s out of range");
            const bool was = c.my_turn;
            c.my_turn = t->your_turn;
            if (c.my_turn && (!was || !c.send_at)) {
                const bool skip = c.style == Style::Silent && rng_.bernoulli(0.3);
                c.send_at = skip ? std::optional<double>() : std::optional<double>(now_ + 0.5 + rng_.uniform01() * 8.0);
            }
            if (!c.my_turn) c.send_at.reset();
        } else if (std::holds_alternative<frame::ChatEnded>(f)) {
            if (c.state != State::Chatting) report_.fail("ChatEnded outside a chat");
            c.state = State::Guessing;
            c.my_turn = false;
            c.send_at.reset();
            c.quit_at.reset();
        } else if (std::holds_alternative<frame::GuessPrompt>(f)) {
            if (c.state != State::Guessing) report_.fail("GuessPrompt before ChatEnded");
            if (c.style != Style::NoGuess) c.guess_at = now_ + 0.3 + rng_.uniform01() * 6.0;
        } else if (const auto* r = std::get_if<frame::Result>(&f)) {
            on_result(c, *r);
        } else if (const auto* e = std::get_if<frame::Error>(&f)) {
            report_.error_codes.insert(e->code);
        }
    }

    void on_result(Client& c, const frame::Result& r) {
        ++report_.results;
        const double span = now_ - c.matched_at;
        report_.max_session_span = std::max(report_.max_session_span, span);
        if (span > report_.liveness_bound) report_.fail("session exceeded the liveness bound");
        if (c.guessed) {
            const bool right = (*c.guessed == Verdict::Bot) == (r.partner_kind == Kind::Bot);
            if (r.correct != right) report_.fail("Result.correct disagrees with the guess");
        } else if (r.correct.has_value()) {
            report_.fail("Result.correct set without a guess");
        }
        if (r.partner_kind == Kind::Bot && seen_sessions_.insert(c.session).second) {
            ++report_.bot_sessions;
            if (c.slot == Slot::A) ++report_.bot_sessions_human_in_a;
        } else {
            seen_sessions_.insert(c.session);
        }
        report_.sessions = seen_sessions_.size();

        const LifetimeCounters got{r.lifetime_games, r.lifetime_correct};
        if (c.last && (got.games < c.last->games || got.correct < c.last->correct))
            report_.fail("lifetime counters went down");
        c.last = got;
        const auto recomputed = RecordStore::recompute(store_path_);
        auto it = recomputed.find(c.token);
        const LifetimeCounters want = it == recomputed.end() ? LifetimeCounters{} : it->second;
        if (!(got == want)) report_.fail("lifetime counters differ from the store");

        c.state = State::Idle;
        c.slot.reset();
        c.guess_at.reset();
        c.games_left = c.games_left > 0 ? c.games_left - 1 : 0;
        c.next_join = now_ + 0.5 + rng_.uniform01() * 4.0;
    }

    void check_store() {
        const auto corpus = ingest(store_path_, true);
        std::set<std::string> ids;
        for (const auto& r : corpus.records) {
            try {
                r.validate();
            } catch (const std::exception& e) {
                report_.fail(std::string("invalid record: ") + e.what());
            }
            if (!ids.insert(r.record_id).second) report_.fail("duplicate record id " + r.record_id);
            if (r.ended_at - r.started_at > report_.liveness_bound) report_.fail("stored session exceeded the liveness bound");
            report_.max_session_span = std::max(report_.max_session_span, r.ended_at - r.started_at);
        }
    }

    HarnessOptions options_;
    std::filesystem::path store_path_;
    std::shared_ptr<RecordStore> store_;
    GatewayCore core_;
    Rng rng_;
    PlatformConfig config_;
    std::vector<Client> clients_;
    std::set<std::string> seen_sessions_;
    ConnectionId next_conn_ = 1;
    double t0_ = 1700000000.0;
    double now_ = 0.0;
    HarnessReport report_;
};

}  // namespace hon::testing
