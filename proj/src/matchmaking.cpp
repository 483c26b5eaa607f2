#include "hon/matchmaking.hpp"

#include <algorithm>
#include <fstream>

#include "hon/error.hpp"

namespace hon {

void MatchPolicy::validate() const {
    if (!(bot_probability >= 0.0 && bot_probability <= 1.0))
        throw InvalidConfig("bot_probability must be in [0, 1]");
    if (!(max_human_wait >= 0.0)) throw InvalidConfig("max_human_wait must be >= 0");
    if (starter_catalog.empty()) throw EmptyCatalog("starter catalog is empty");
}

void MatchQueue::enqueue(QueueEntry entry) {
    if (contains(entry.participant_id))
        throw AlreadyQueued("participant " + entry.participant_id + " is already queued");
    entries_.push_back(std::move(entry));
}

bool MatchQueue::remove(const std::string& id) {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const QueueEntry& e) { return e.participant_id == id; });
    if (it == entries_.end()) return false;
    entries_.erase(it);
    return true;
}

bool MatchQueue::contains(const std::string& id) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const QueueEntry& e) { return e.participant_id == id; });
}

std::optional<std::string> MatchQueue::last_partner(const std::string& id) const {
    if (auto it = last_partner_.find(id); it != last_partner_.end()) return it->second;
    return std::nullopt;
}

MatchDecision assign_starters(MatchDecision decision, const std::vector<std::string>& catalog, Rng& rng) {
    if (catalog.empty()) throw EmptyCatalog("starter catalog is empty");
    for (auto& s : decision.starters) s = catalog[rng.below(catalog.size())];
    return decision;
}

std::vector<MatchDecision> match_tick(MatchQueue& queue, const MatchPolicy& policy, Rng& rng, double now) {
    std::vector<MatchDecision> out;
    auto& q = queue.entries_;
    std::size_t head = 0;  // entries before `head` are waiting humans skipped this tick
    while (head < q.size()) {
        QueueEntry& entry = q[head];
        if (!entry.wants_bot) entry.wants_bot = rng.bernoulli(policy.bot_probability);

        auto emit = [&](Pairing pairing) {
            MatchDecision d;
            d.pairing = std::move(pairing);
            d.opener = rng.bernoulli(0.5) ? Slot::A : Slot::B;
            out.push_back(assign_starters(std::move(d), policy.starter_catalog, rng));
        };

        if (*entry.wants_bot) {
            emit(HumanBot{entry.participant_id, rng.next_u64()});
            q.erase(q.begin() + static_cast<std::ptrdiff_t>(head));
            continue;
        }

        // Oldest other human, skipping the immediately previous partner when
        // anyone else is available.
        const auto previous = queue.last_partner(entry.participant_id);
        std::optional<std::size_t> partner;
        for (std::size_t j = 0; j < q.size(); ++j) {
            if (j == head || q[j].wants_bot.value_or(false)) continue;
            if (previous && q[j].participant_id == *previous) {
                continue;
            }
            partner = j;
            break;
        }
        if (!partner && previous) {
            for (std::size_t j = 0; j < q.size(); ++j)
                if (j != head && !q[j].wants_bot.value_or(false)) {
                    partner = j;
                    break;
                }
        }

        if (partner) {
            // The older of the two takes slot A.
            const std::size_t lo = std::min(head, *partner), hi = std::max(head, *partner);
            const std::string first = q[lo].participant_id;
            const std::string second = q[hi].participant_id;
            q.erase(q.begin() + static_cast<std::ptrdiff_t>(hi));
            q.erase(q.begin() + static_cast<std::ptrdiff_t>(lo));
            head = lo;
            queue.set_last_partner(first, second);
            queue.set_last_partner(second, first);
            emit(HumanHuman{first, second});
            continue;
        }

        if (now - entry.enqueued_at >= policy.max_human_wait) {
            emit(HumanBot{entry.participant_id, rng.next_u64()});
            q.erase(q.begin() + static_cast<std::ptrdiff_t>(head));
            continue;
        }
        ++head;
    }
    return out;
}

std::vector<std::string> load_starters(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open starter catalog " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(line);
    }
    if (out.empty()) throw EmptyCatalog("starter catalog " + path.string() + " is empty");
    return out;
}

}  // namespace hon
