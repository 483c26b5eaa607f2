#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hon/analytics.hpp"
#include "hon/bot.hpp"
#include "hon/context.hpp"
#include "hon/persona.hpp"

namespace hon {

// Style specs keyed by id. Format: {"styles": [{"id": ..., "typo_rate": ..., ...}]}.
std::map<std::string, StyleSpec> styles_from_json_text(const std::string& text);

// Turns a match's persona seed into everything a bot needs for one session.
struct BotFactory {
    PersonaCatalog catalog;
    GameFraming framing = GameFraming::standard();
    std::map<std::string, StyleSpec> styles;  // unknown style ids fall back to "plain"
    std::vector<BackendSpec> backends;
    std::optional<ProviderSet> providers;  // nullopt: date and time only
    std::shared_ptr<SnapshotCache> cache = std::make_shared<SnapshotCache>();

    struct Built {
        BotProfile profile;
        BotMetadata metadata;
    };

    void validate() const;  // InvalidConfig / EmptyCatalog

    // Persona, style and backend all come from `persona_seed`; `unix_now`
    // fixes the prompt's local date and time.
    Built build(std::uint64_t persona_seed, const std::string& starter, double unix_now) const;
};

}  // namespace hon
