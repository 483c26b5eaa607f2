#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hon/rng.hpp"
#include "hon/session.hpp"

namespace hon {

struct QueueEntry {
    std::string participant_id;
    double enqueued_at = 0.0;  // wall clock, seconds
    // Bot-or-human coin, drawn the first time the entry reaches the head and
    // kept so a waiting player is not re-rolled on every tick.
    std::optional<bool> wants_bot;
};

struct MatchPolicy {
    double bot_probability = 0.5;
    double max_human_wait = 5.0;
    std::vector<std::string> starter_catalog;

    void validate() const;  // InvalidConfig / EmptyCatalog
};

struct HumanHuman {
    std::string first;   // takes slot A
    std::string second;  // takes slot B
};
struct HumanBot {
    std::string human;  // always slot A
    std::uint64_t persona_seed = 0;
};
using Pairing = std::variant<HumanHuman, HumanBot>;

struct MatchDecision {
    Pairing pairing;
    Slot opener = Slot::A;
    std::array<std::string, 2> starters;  // indexed by slot; bots get one too
};

class MatchQueue {
public:
    // Throws AlreadyQueued.
    void enqueue(QueueEntry entry);
    bool remove(const std::string& participant_id);
    bool contains(const std::string& participant_id) const;
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::deque<QueueEntry>& entries() const { return entries_; }

    // Best-effort rematch avoidance looks this up.
    void set_last_partner(const std::string& id, const std::string& partner) { last_partner_[id] = partner; }
    std::optional<std::string> last_partner(const std::string& id) const;

    friend std::vector<MatchDecision> match_tick(MatchQueue&, const MatchPolicy&, Rng&, double);

private:
    std::deque<QueueEntry> entries_;
    std::map<std::string, std::string> last_partner_;
};

// Pairs whatever can be paired right now. Humans whose coin says "human" but
// have no partner yet stay queued until max_human_wait elapses, then get a bot.
std::vector<MatchDecision> match_tick(MatchQueue& queue, const MatchPolicy& policy, Rng& rng, double now);

// Each slot independently draws a starter from the catalog. Throws EmptyCatalog.
MatchDecision assign_starters(MatchDecision decision, const std::vector<std::string>& catalog, Rng& rng);

// One starter per line, blank lines skipped.
std::vector<std::string> load_starters(const std::filesystem::path& path);

}  // namespace hon
