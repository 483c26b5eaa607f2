#include "hon/runtime.hpp"

#include "hon/error.hpp"
#include "json.hpp"

namespace hon {

using nlohmann::json;

std::map<std::string, StyleSpec> styles_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("styles: ") + e.what());
    }
    std::map<std::string, StyleSpec> out;
    for (const auto& s : j.at("styles")) {
        StyleSpec spec;
        spec.id = s.at("id").get<std::string>();
        spec.typo_rate = s.value("typo_rate", 0.0);
        spec.lowercase_all = s.value("lowercase_all", false);
        spec.drop_terminal_punctuation = s.value("drop_terminal_punctuation", false);
        if (s.contains("slang"))
            for (const auto& pair : s.at("slang"))
                spec.slang.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
        spec.emoji_rate = s.value("emoji_rate", 0.0);
        if (s.contains("emojis")) spec.emojis = s.at("emojis").get<std::vector<std::string>>();
        spec.validate();
        if (!out.emplace(spec.id, spec).second) throw InvalidConfig("duplicate style id " + spec.id);
    }
    return out;
}

void BotFactory::validate() const {
    catalog.validate();
    framing.validate();
    if (backends.empty()) throw InvalidConfig("no bot backends configured");
    for (const auto& b : backends) {
        if (!(b.weight > 0.0)) throw InvalidConfig("backend " + b.name + ": weight must be positive");
        if (b.kind == "scripted" && b.replies.empty())
            throw InvalidConfig("backend " + b.name + ": scripted backend needs replies");
    }
    for (const auto& [id, style] : styles) style.validate();
}

BotFactory::Built BotFactory::build(std::uint64_t persona_seed, const std::string& starter, double unix_now) const {
    Rng rng(persona_seed);
    Built out;
    Persona persona = sample_persona(catalog, rng);

    std::vector<double> weights;
    for (const auto& b : backends) weights.push_back(b.weight);
    const auto& spec = backends.at(rng.weighted_index(weights));

    ContextSnapshot snapshot;
    if (providers) {
        snapshot = fetch_snapshot(persona.location, *providers, *cache, unix_now);
    } else {
        snapshot.city = persona.location.city;
        snapshot.local_date = format_local_date(unix_now, persona.location.utc_offset_minutes);
        snapshot.local_time = format_local_time(unix_now, persona.location.utc_offset_minutes);
        snapshot.fetched_at = unix_now;
    }

    auto style = styles.find(persona.style_id);
    out.profile.style = style != styles.end() ? style->second : StyleSpec{};
    out.profile.prompt = assemble_prompt(persona, snapshot, framing);
    out.profile.backend = make_backend(spec);
    out.profile.starter = starter;
    out.metadata = BotMetadata{persona.id, spec.name, out.profile.style.id};
    out.profile.persona = std::move(persona);
    return out;
}

}  // namespace hon
