#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hon/analytics.hpp"
#include "hon/bot.hpp"
#include "hon/matchmaking.hpp"
#include "hon/moderation.hpp"
#include "hon/runtime.hpp"
#include "hon/session.hpp"

namespace hon {

// Phrases that trigger exactly one strategy tag under the built-in rules.
const std::vector<std::string>& strategy_phrases(StrategyTag tag);
// Small talk that triggers no tag at all.
const std::vector<std::string>& neutral_phrases();

// A scripted stand-in for a human player.
struct AgentScript {
    std::string id = "agent";
    double weight = 1.0;

    enum class Reply { Scripted, Template, Echo } reply = Reply::Template;
    // Scripted: replayed in order, wrapping. Template: picked by turn index,
    // with "{turn}" replaced by the 1-based turn number.
    std::vector<std::string> lines = neutral_phrases();

    enum class Guess { Fixed, Bernoulli } guess = Guess::Bernoulli;
    Verdict fixed_verdict = Verdict::Human;
    double p_correct = 0.7;
    double abstain_rate = 0.0;

    // Emitted as the agent's first message when set.
    std::optional<StrategyTag> flavor;

    DelayModel typing{2.0, 0.15, 1.5, 18.0};

    void validate(const SessionConfig& session) const;  // InvalidConfig
};

// What an agent sees when asked to act.
struct AgentView {
    Slot self = Slot::A;
    PhaseKind phase = PhaseKind::Chatting;
    std::span<const ChatMessage> transcript;
    std::size_t turn_index = 0;  // messages this agent has already sent
    std::string starter;         // suggestion shown at match time
    Kind partner_kind = Kind::Human;  // ground truth, only read by the guess policy
    std::size_t max_chars = 100;
    const Charset* charset = nullptr;  // defaults to Latin + emoji
};

// Message text while chatting, a verdict (possibly Abstain) while guessing.
using AgentMove = std::variant<std::string, Verdict>;

AgentMove agent_step(const AgentScript& agent, const AgentView& view, Rng& rng);

struct SimulationConfig {
    std::size_t n_games = 1000;
    std::uint64_t seed = 1;
    SessionConfig session;
    MatchPolicy match;
    BotFactory bots;
    DelayModel bot_delay;
    BehaviorPolicy behavior;
    std::shared_ptr<const RuleSet> moderation;
    std::vector<AgentScript> agents = {AgentScript{}};
    double start_epoch = 1685475000.0;  // unix time of game 0
    double game_spacing = 180.0;        // seconds between game starts

    void validate() const;  // InvalidConfig
};

struct SimulationSummary {
    std::size_t games = 0;
    std::size_t bot_games = 0;
    std::size_t human_games = 0;
    std::size_t records = 0;
    std::size_t abstained = 0;
    std::size_t correct = 0;
    std::size_t bot_exits = 0;
    std::size_t moderation_stops = 0;
    std::map<std::string, std::size_t> end_reasons;

    std::string text() const;
};

struct SimulationResult {
    Corpus corpus;
    SimulationSummary summary;
    std::vector<SessionOutcome> outcomes;  // one per game, in game order
};

// Game i runs on Rng(split_seed(seed, i)), so games are independent of each
// other and of execution order. Records are ordered by id.
SimulationResult run_simulation(const SimulationConfig& config);

// One game, exposed for tests.
SimulationResult simulate_game(const SimulationConfig& config, std::size_t index);

struct PlantedGroup {
    Kind partner = Kind::Bot;
    std::optional<StrategyTag> tag;  // nullopt: partner-kind total
    Side side = Side::Guesser;
    std::uint64_t n = 0;
    std::uint64_t k = 0;
};

// Partner-kind groups give totals; tag groups are carved out of those totals
// (or define them when no total is given). Every record carries at most one
// tag group.
struct PlantedCorpusSpec {
    std::vector<PlantedGroup> groups;

    void validate() const;  // InvalidPlantedSpec
};

Corpus make_planted_corpus(const PlantedCorpusSpec& spec, std::uint64_t seed);

// Fisher-Yates with the project Rng, so results do not depend on the standard library.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace hon
