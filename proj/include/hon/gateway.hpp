#pragma once

#include <array>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hon/config.hpp"
#include "hon/frames.hpp"
#include "hon/matchmaking.hpp"
#include "hon/session.hpp"
#include "hon/store.hpp"

namespace hon {

using ConnectionId = std::uint64_t;

struct Outbound {
    ConnectionId to = 0;
    Frame frame;
};

// The server's game logic with the transport stripped away. Every call takes
// the current unix time; nothing here reads a clock or sleeps. Not
// thread-safe: the transport serializes calls.
class GatewayCore {
public:
    struct Options {
        std::uint64_t seed = 0;         // matchmaking, slots, bot styling
        bool async_bots = false;        // run backend calls on worker threads
        bool random_tokens = true;      // false: tokens derive from `seed` (tests)
    };

    GatewayCore(PlatformConfig config, std::shared_ptr<RecordStore> store, Options options);
    ~GatewayCore();

    std::vector<Outbound> connect(ConnectionId id, double now);
    std::vector<Outbound> disconnect(ConnectionId id, double now);
    std::vector<Outbound> handle_text(ConnectionId id, std::string_view text, double now);
    std::vector<Outbound> handle(ConnectionId id, const Frame& frame, double now);
    // Matchmaking, clocks, bot replies, timer syncs and completion.
    std::vector<Outbound> tick(double now);

    std::size_t queued() const { return queue_.size(); }
    std::size_t active_sessions() const { return sessions_.size(); }
    std::size_t completed_sessions() const { return completed_; }
    const PlatformConfig& config() const { return config_; }

private:
    struct PendingBot {
        std::optional<BotAction> action;
        std::future<std::pair<BotAction, Rng>> job;
        Seconds turn_start = 0.0;  // chat clock
    };
    struct BotSeat {
        Slot slot = Slot::B;
        BotFactory::Built built;
        Rng rng;
        ModerationVerdict last_partner_verdict;
        std::optional<PendingBot> pending;
    };
    struct Live {
        std::string id;
        GameSession game;
        double t0 = 0.0;  // unix time the chat started
        std::array<std::optional<ConnectionId>, 2> conn;
        std::array<std::string, 2> tokens;
        std::optional<BotSeat> bot;
        double next_sync = 0.0;
        bool done = false;
    };
    struct Binding {
        std::string token;
        std::optional<std::string> session;  // active session id
        bool queued = false;
    };

    void on_notifications(Live& s, const std::vector<Notification>& notes, double now, std::vector<Outbound>& out);
    void start_bot_turn(Live& s, Seconds turn_start);
    void drive_bot(Live& s, double now, std::vector<Outbound>& out);
    void sync_timers(Live& s, double now, std::vector<Outbound>& out, bool force = false);
    void finish(Live& s, double now, std::vector<Outbound>& out);
    void reap();
    void start_session(const MatchDecision& d, double now, std::vector<Outbound>& out);
    std::string issue_token();
    Seconds chat_clock(const Live& s, double now) const { return now - s.t0; }

    PlatformConfig config_;
    std::shared_ptr<RecordStore> store_;
    std::shared_ptr<ModerationService> moderation_;
    BotToolkit toolkit_;
    Options options_;
    Rng rng_;
    MatchQueue queue_;
    std::map<ConnectionId, Binding> bindings_;
    std::map<std::string, std::unique_ptr<Live>> sessions_;
    std::uint64_t next_session_ = 1;
    std::size_t completed_ = 0;
};

}  // namespace hon
