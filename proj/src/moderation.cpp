#include "hon/moderation.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "hon/error.hpp"
#include "hon/text.hpp"
#include "json.hpp"

namespace hon {

std::string normalize_for_screening(const std::string& text) {
    std::string stripped;
    if (auto cps = decode_utf8(text)) {
        for (char32_t cp : *cps)
            if (!is_zero_width(cp)) stripped += encode_utf8(cp);
    } else {
        stripped = text;
    }
    return collapse_whitespace(to_lower_ascii(stripped));
}

RuleSet::RuleSet(std::vector<ModerationRule> rules, std::string version)
    : rules_(std::move(rules)), version_(std::move(version)) {
    std::set<std::string> ids;
    for (const auto& r : rules_) {
        if (r.id.empty()) throw InvalidConfig("moderation rule with empty id");
        if (!ids.insert(r.id).second) throw InvalidConfig("duplicate moderation rule id " + r.id);
        try {
            compiled_.emplace_back(r.pattern, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
        } catch (const std::regex_error& e) {
            throw InvalidConfig("moderation rule " + r.id + " does not compile: " + e.what());
        }
    }
}

RuleSet RuleSet::from_json_text(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    const int schema = j.value("schema_version", 1);
    if (schema != 1) throw InvalidConfig("unsupported moderation schema_version " + std::to_string(schema));
    std::vector<ModerationRule> rules;
    for (const auto& r : j.at("rules"))
        rules.push_back({r.at("id").get<std::string>(), r.at("category").get<std::string>(),
                         r.at("pattern").get<std::string>()});
    return RuleSet(std::move(rules), j.value("version", std::string("unversioned")));
}

RuleSet RuleSet::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InvalidConfig("cannot open moderation ruleset " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

ModerationVerdict RuleSet::screen(const std::string& text) const {
    const std::string norm = normalize_for_screening(text);
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        if (std::regex_search(norm, compiled_[i])) return {true, rules_[i].category, rules_[i].id};
    }
    return ModerationVerdict::clean();
}

ModerationVerdict screen(const std::string& text, const RuleSet& rules) { return rules.screen(text); }

ModerationAction enforce(Origin origin, const ModerationVerdict& verdict, int regenerations_done) {
    using K = ModerationAction::Kind;
    if (!verdict.flagged) return {K::PassThrough, 0};
    if (origin == Origin::HumanMessage) return {K::EndSession, 0};
    if (regenerations_done < kMaxBotRegenerations) return {K::RegenerateBot, regenerations_done + 1};
    return {K::BotExit, 0};
}

}  // namespace hon
