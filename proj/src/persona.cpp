#include "hon/persona.hpp"

#include <fstream>
#include <sstream>

#include "hon/error.hpp"
#include "json.hpp"

namespace hon {

using nlohmann::json;

void Persona::validate() const {
    if (name.empty()) throw InvalidConfig("persona name must not be empty");
    if (age < 13 || age > 99) throw InvalidConfig("persona age must be in [13, 99], got " + std::to_string(age));
    if (pronoun != "he" && pronoun != "she" && pronoun != "they")
        throw InvalidConfig("persona pronoun must be he, she or they");
}

std::string expand_placeholders(const std::string& text, const Persona& p) {
    std::string subject = p.pronoun, possessive, object, is;
    if (p.pronoun == "he") {
        possessive = "his", object = "him", is = "he's";
    } else if (p.pronoun == "she") {
        possessive = "her", object = "her", is = "she's";
    } else {
        possessive = "their", object = "them", is = "they're";
    }
    std::string capital = subject;
    if (!capital.empty()) capital[0] = static_cast<char>(capital[0] - 'a' + 'A');

    const std::pair<std::string, std::string> table[] = {
        {"{name}", p.name},        {"{pronoun_is}", is},     {"{pronoun}", subject},
        {"{Pronoun}", capital},    {"{possessive}", possessive}, {"{object}", object},
    };
    std::string out;
    for (std::size_t i = 0; i < text.size();) {
        bool hit = false;
        if (text[i] == '{') {
            for (const auto& [key, value] : table) {
                if (text.compare(i, key.size(), key) == 0) {
                    out += value;
                    i += key.size();
                    hit = true;
                    break;
                }
            }
        }
        if (!hit) out += text[i++];
    }
    return out;
}

GameFraming GameFraming::standard() {
    return {"The following conversation is part of an online game called \"Human or Not\" by an Israeli company "
            "called AI21 Labs. In this game, {name} tries to understand if {pronoun_is} chatting with a real person "
            "or a bot, while the other user tries to do the same thing. If {name} comes to the conclusion that "
            "{pronoun_is} talking a bot, {pronoun} confronts the other user about it."};
}

GameFraming GameFraming::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InvalidConfig("cannot open framing template " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    GameFraming f{trim(ss.str())};
    f.validate();
    return f;
}

void GameFraming::validate() const {
    if (template_text.find("{name}") == std::string::npos || template_text.find("bot") == std::string::npos)
        throw InvalidConfig("game framing must name the character and mention telling a bot apart");
}

std::string GameFraming::render(const Persona& persona) const {
    return single_line(expand_placeholders(template_text, persona));
}

std::string PromptDocument::text() const {
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i > 0) out += std::string(kBlockSeparator) + "\n";
        for (const auto& line : blocks[i].lines) out += line + "\n";
    }
    return out;
}

PromptDocument parse_prompt_document(const std::string& text) {
    std::vector<std::vector<std::string>> raw(1);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == kBlockSeparator) {
            raw.emplace_back();
            continue;
        }
        raw.back().push_back(line);
    }
    PromptDocument doc;
    bool seen_framing = false;
    for (auto& lines : raw) {
        if (lines.empty()) continue;
        const std::string& head = lines.front();
        auto starts = [&](const char* p) { return head.rfind(p, 0) == 0; };
        BlockKind kind;
        if (starts("Date in ")) {
            kind = BlockKind::Date;
        } else if (starts("Time in ")) {
            kind = BlockKind::Time;
        } else if (starts("Weather in ")) {
            kind = BlockKind::Weather;
        } else if (starts("Top stories in ")) {
            kind = BlockKind::Stories;
        } else if (starts("Top tweets in ")) {
            kind = BlockKind::Tweets;
        } else if (starts(kConversationStart)) {
            kind = BlockKind::Start;
        } else if (!seen_framing) {
            kind = BlockKind::Framing;
            seen_framing = true;
        } else {
            kind = BlockKind::Persona;
        }
        doc.blocks.push_back({kind, std::move(lines)});
    }
    return doc;
}

std::string persona_paragraph(const Persona& p, const std::string& date, const std::string& time) {
    const bool vowel_sound = p.age == 11 || p.age == 18 || (p.age >= 80 && p.age <= 89);
    std::string out = p.name + (vowel_sound ? " is an " : " is a ") + std::to_string(p.age) + " year old " + p.occupation + " from " +
                      p.location.city;
    if (!p.location.region.empty()) out += ", " + p.location.region;
    if (!date.empty() && !time.empty()) {
        out += ", where the date is " + date + ", and the time is " + time + ".";
    } else if (!date.empty()) {
        out += ", where the date is " + date + ".";
    } else if (!time.empty()) {
        out += ", where the time is " + time + ".";
    } else {
        out += ".";
    }
    if (!p.traits.empty()) {
        std::string traits;
        for (std::size_t i = 0; i < p.traits.size(); ++i) traits += (i ? ", " : "") + expand_placeholders(p.traits[i], p);
        out += " " + traits + ".";
    }
    for (const auto& b : p.behaviors) out += " " + expand_placeholders(b, p);
    if (p.objective) out += " " + expand_placeholders(*p.objective, p);

    std::vector<std::string> clauses;
    if (p.english_only) clauses.push_back("doesn't speak or understand any language but English");
    clauses.insert(clauses.end(), p.extra_constraints.begin(), p.extra_constraints.end());
    if (!clauses.empty()) {
        out += " " + p.name + " ";
        for (std::size_t i = 0; i < clauses.size(); ++i) {
            if (i > 0) out += (i + 1 == clauses.size()) ? ", and " : ", ";
            out += clauses[i];
        }
        out += ".";
    }
    return single_line(out);
}

PromptDocument assemble_prompt(const Persona& persona, const ContextSnapshot& snapshot, const GameFraming& framing) {
    PromptDocument doc;
    doc.blocks = format_context_block(snapshot);
    doc.blocks.push_back({BlockKind::Framing, {framing.render(persona)}});
    doc.blocks.push_back(
        {BlockKind::Persona, {persona_paragraph(persona, snapshot.local_date, snapshot.local_time)}});
    doc.blocks.push_back({BlockKind::Start, {kConversationStart}});
    return doc;
}

std::string render_transcript(const PromptDocument& prompt, const Persona& persona,
                              std::span<const ChatMessage> messages, Slot bot_slot) {
    std::string out = prompt.text();
    for (std::size_t i = 0; i < messages.size(); ++i) {
        if (i > 0 && messages[i].sender == messages[i - 1].sender)
            throw NonAlternatingTranscript("messages " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                           " share a sender");
        const std::string& label = messages[i].sender == bot_slot ? persona.name : std::string(kPartnerLabel);
        out += label + ": " + messages[i].text + "\n";
    }
    out += persona.name + ":";
    return out;
}

namespace {

Location location_from_json(const json& j) {
    return {j.at("city").get<std::string>(), j.value("region", std::string()), j.value("utc_offset_minutes", 0)};
}

template <typename T>
std::vector<T> list_or_empty(const json& j, const char* key) {
    if (!j.contains(key)) return {};
    return j.at(key).get<std::vector<T>>();
}

}  // namespace

void PersonaCatalog::validate() const {
    if (templates.empty()) throw EmptyCatalog("persona catalog has no templates");
    for (const auto& t : templates) {
        if (!(t.weight > 0.0)) throw InvalidConfig("template " + t.id + ": weight must be positive");
        if (t.names.empty()) throw InvalidConfig("template " + t.id + ": needs at least one name");
        if (t.occupations.empty()) throw InvalidConfig("template " + t.id + ": needs at least one occupation");
        if (t.locations.empty()) throw InvalidConfig("template " + t.id + ": needs at least one location");
        if (t.age_min > t.age_max || t.age_min < 13 || t.age_max > 99)
            throw InvalidConfig("template " + t.id + ": bad age range");
    }
}

PersonaCatalog PersonaCatalog::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    PersonaCatalog c;
    c.schema_version = j.value("schema_version", 1);
    if (c.schema_version != 1)
        throw InvalidConfig("unsupported persona catalog schema_version " + std::to_string(c.schema_version));
    for (const auto& t : j.at("templates")) {
        PersonaTemplate pt;
        pt.id = t.at("id").get<std::string>();
        pt.weight = t.value("weight", 1.0);
        for (const auto& n : t.at("names"))
            pt.names.push_back({n.at("name").get<std::string>(), n.value("pronoun", std::string("they"))});
        const auto& age = t.at("age");
        if (age.is_array()) {
            pt.age_min = age.at(0).get<int>();
            pt.age_max = age.at(1).get<int>();
        } else {
            pt.age_min = pt.age_max = age.get<int>();
        }
        pt.occupations = t.at("occupations").get<std::vector<std::string>>();
        for (const auto& l : t.at("locations")) pt.locations.push_back(location_from_json(l));
        pt.traits = list_or_empty<std::string>(t, "traits");
        pt.behaviors = list_or_empty<std::string>(t, "behaviors");
        pt.objectives = list_or_empty<std::string>(t, "objectives");
        pt.extra_constraints = list_or_empty<std::string>(t, "extra_constraints");
        pt.english_only = t.value("english_only", true);
        pt.style_ids = list_or_empty<std::string>(t, "styles");
        c.templates.push_back(std::move(pt));
    }
    c.validate();
    return c;
}

PersonaCatalog PersonaCatalog::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InvalidConfig("cannot open persona catalog " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

Persona sample_persona(const PersonaCatalog& catalog, Rng& rng) {
    if (catalog.templates.empty()) throw EmptyCatalog("persona catalog has no templates");
    std::vector<double> weights;
    for (const auto& t : catalog.templates) weights.push_back(t.weight);
    const auto& t = catalog.templates[rng.weighted_index(weights)];

    auto pick = [&rng](const auto& pool) -> const auto& { return pool[rng.below(pool.size())]; };
    Persona p;
    p.id = t.id;
    const auto& n = pick(t.names);
    p.name = n.name;
    p.pronoun = n.pronoun;
    p.age = t.age_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(t.age_max - t.age_min + 1)));
    p.occupation = pick(t.occupations);
    p.location = pick(t.locations);
    p.traits = t.traits;
    p.behaviors = t.behaviors;
    if (!t.objectives.empty()) p.objective = pick(t.objectives);
    p.english_only = t.english_only;
    p.extra_constraints = t.extra_constraints;
    p.style_id = t.style_ids.empty() ? std::string("plain") : pick(t.style_ids);
    p.validate();
    return p;
}

}  // namespace hon
