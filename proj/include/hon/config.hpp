#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hon/analytics.hpp"
#include "hon/bot.hpp"
#include "hon/context.hpp"
#include "hon/matchmaking.hpp"
#include "hon/moderation.hpp"
#include "hon/runtime.hpp"
#include "hon/session.hpp"
#include "hon/simulator.hpp"

namespace hon {

struct ContextConfig {
    std::string kind = "none";  // none | fixtures | http
    std::filesystem::path fixtures_dir;
    HttpFeedConfig http;
    double timeout_s = 3.0;
    double ttl_s = 300.0;

    std::optional<ProviderSet> providers() const;
};

struct ServerSettings {
    std::filesystem::path store = "records.jsonl";
    double tick_s = 0.1;       // timer resolution of the server loop
    double timersync_s = 1.0;  // TimerSync cadence
    double bot_margin_s = 0.5;  // bot replies land at least this long before the turn deadline
};

// Everything the tools need, from one JSON document. Resource paths are
// relative to the config file; a missing key falls back to the built-in data.
struct PlatformConfig {
    SessionConfig session;
    MatchPolicy match;
    BotFactory bots;
    DelayModel bot_delay;
    BehaviorPolicy behavior;
    std::shared_ptr<const RuleSet> moderation;
    std::shared_ptr<const TagRuleSet> tags;
    ContextConfig context;
    std::vector<AgentScript> agents;
    double start_epoch = 1685475000.0;
    double game_spacing = 180.0;
    ServerSettings server;

    void validate() const;  // InvalidConfig

    static PlatformConfig defaults();
    static PlatformConfig load(const std::filesystem::path& file);
    // `base_dir` anchors relative paths; nullopt resolves every resource to
    // the built-in copy.
    static PlatformConfig from_json_text(const std::string& text,
                                         const std::optional<std::filesystem::path>& base_dir);

    SimulationConfig simulation(std::size_t n_games, std::uint64_t seed) const;
};

}  // namespace hon
