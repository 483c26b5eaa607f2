#include "hon/analytics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hon/defaults.hpp"
#include "hon/error.hpp"
#include "json.hpp"

namespace hon {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kTagCount> kTagNames = {
    "SpellingComment",  "PersonalQuestion", "OpinionQuestion", "ReligionQuestion", "GeopoliticsQuestion",
    "PolitenessMarker", "RudeVulgar",       "CurrentEvents",   "SocialMediaTrend", "HardRequest",
    "NonEnglishAttempt", "SubwordTrick",    "AIPhraseImitation", "GameMetaReference",
};

json optional_bool(const std::optional<bool>& b) { return b ? json(*b) : json(nullptr); }

std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InvalidConfig("cannot open " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string_view to_string(StrategyTag t) { return kTagNames[static_cast<std::size_t>(t)]; }

std::optional<StrategyTag> tag_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kTagCount; ++i)
        if (kTagNames[i] == s) return static_cast<StrategyTag>(i);
    return std::nullopt;
}

std::array<StrategyTag, kTagCount> all_tags() {
    std::array<StrategyTag, kTagCount> out{};
    for (std::size_t i = 0; i < kTagCount; ++i) out[i] = static_cast<StrategyTag>(i);
    return out;
}

std::string_view to_string(Side s) { return s == Side::Guesser ? "guesser" : "partner"; }

void ConversationRecord::validate() const {
    if (record_id.empty()) throw std::invalid_argument("record without id");
    if (correct != guess_correct(verdict, partner_kind))
        throw std::invalid_argument("record " + record_id + ": correct disagrees with verdict and partner");
    if (bot.has_value() != (partner_kind == Kind::Bot))
        throw std::invalid_argument("record " + record_id + ": bot metadata must be present iff partner is a bot");
    if (ended_at < started_at) throw std::invalid_argument("record " + record_id + ": ended before it started");
    for (std::size_t i = 1; i < transcript.size(); ++i) {
        if (transcript[i].sender == transcript[i - 1].sender)
            throw std::invalid_argument("record " + record_id + ": transcript does not alternate");
        if (transcript[i].sent_at < transcript[i - 1].sent_at)
            throw std::invalid_argument("record " + record_id + ": transcript times go backwards");
    }
}

std::string to_json_line(const ConversationRecord& r) {
    json j;
    j["schema_version"] = kRecordSchemaVersion;
    j["record_id"] = r.record_id;
    j["session_id"] = r.session_id;
    j["guesser_token"] = r.guesser_token;
    j["guesser_slot"] = to_string(r.guesser_slot);
    j["guesser_kind"] = "human";
    j["partner_kind"] = to_string(r.partner_kind);
    j["verdict"] = to_string(r.verdict);
    j["correct"] = optional_bool(r.correct);
    j["end_reason"] = {{"kind", to_string(r.end_reason.kind)},
                       {"slot", r.end_reason.slot ? json(to_string(*r.end_reason.slot)) : json(nullptr)}};
    j["started_at"] = r.started_at;
    j["ended_at"] = r.ended_at;
    json t = json::array();
    for (const auto& m : r.transcript)
        t.push_back({{"sender", to_string(m.sender)}, {"text", m.text}, {"sent_at", m.sent_at}});
    j["transcript"] = std::move(t);
    if (r.bot)
        j["bot"] = {{"persona_id", r.bot->persona_id}, {"backend", r.bot->backend}, {"style_id", r.bot->style_id}};
    else
        j["bot"] = nullptr;
    return j.dump();
}

ConversationRecord record_from_json_line(const std::string& line) {
    const json j = json::parse(line);
    if (!j.is_object()) throw std::invalid_argument("record is not an object");
    if (j.at("schema_version").get<int>() != kRecordSchemaVersion)
        throw std::invalid_argument("unsupported schema_version " + j.at("schema_version").dump());
    if (j.at("guesser_kind").get<std::string>() != "human") throw std::invalid_argument("guesser must be human");
    ConversationRecord r;
    r.record_id = j.at("record_id").get<std::string>();
    r.session_id = j.at("session_id").get<std::string>();
    r.guesser_token = j.value("guesser_token", "");
    r.guesser_slot = slot_from_string(j.at("guesser_slot").get<std::string>());
    r.partner_kind = kind_from_string(j.at("partner_kind").get<std::string>());
    r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    if (!j.at("correct").is_null()) r.correct = j.at("correct").get<bool>();
    const auto& er = j.at("end_reason");
    r.end_reason.kind = end_kind_from_string(er.at("kind").get<std::string>());
    if (er.contains("slot") && !er.at("slot").is_null())
        r.end_reason.slot = slot_from_string(er.at("slot").get<std::string>());
    r.started_at = j.at("started_at").get<double>();
    r.ended_at = j.at("ended_at").get<double>();
    for (const auto& m : j.at("transcript"))
        r.transcript.push_back({slot_from_string(m.at("sender").get<std::string>()), m.at("text").get<std::string>(),
                                m.at("sent_at").get<double>()});
    if (j.contains("bot") && !j.at("bot").is_null()) {
        const auto& b = j.at("bot");
        r.bot = BotMetadata{b.at("persona_id").get<std::string>(), b.at("backend").get<std::string>(),
                            b.at("style_id").get<std::string>()};
    }
    r.validate();
    return r;
}

std::vector<ConversationRecord> records_from_outcome(const SessionOutcome& outcome, const std::string& session_id,
                                                     double started_at, double ended_at,
                                                     const std::optional<BotMetadata>& bot,
                                                     const std::array<std::string, 2>& tokens) {
    std::vector<ConversationRecord> out;
    for (Slot s : {Slot::A, Slot::B}) {
        if (outcome.participants[index_of(s)].kind != Kind::Human) continue;
        ConversationRecord r;
        r.record_id = session_id + "-" + std::string(to_string(s));
        r.session_id = session_id;
        r.guesser_token = tokens[index_of(s)];
        r.guesser_slot = s;
        r.partner_kind = outcome.participants[index_of(other(s))].kind;
        for (const auto& g : outcome.guesses)
            if (g.guess.guesser == s) r.verdict = g.guess.verdict;
        r.correct = guess_correct(r.verdict, r.partner_kind);
        r.end_reason = outcome.end_reason;
        r.started_at = started_at;
        r.ended_at = ended_at;
        r.transcript = outcome.transcript;
        if (r.partner_kind == Kind::Bot) r.bot = bot.value_or(BotMetadata{});
        out.push_back(std::move(r));
    }
    return out;
}

Corpus ingest_stream(std::istream& in, bool strict, std::string id) {
    Corpus corpus;
    corpus.id = std::move(id);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        try {
            corpus.records.push_back(record_from_json_line(line));
        } catch (const std::exception& e) {
            if (strict) throw ParseError(lineno, e.what());
            ++corpus.skipped;
        }
    }
    return corpus;
}

Corpus ingest(const std::filesystem::path& path, bool strict) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidConfig("cannot open corpus " + path.string());
    return ingest_stream(in, strict, path.filename().string());
}

TagRuleSet::TagRuleSet(std::array<std::vector<std::string>, kTagCount> patterns, std::string version)
    : patterns_(std::move(patterns)), version_(std::move(version)) {
    for (std::size_t i = 0; i < kTagCount; ++i) {
        const auto tag = std::string(kTagNames[i]);
        if (patterns_[i].empty()) throw InvalidConfig("tag " + tag + " has no rule");
        std::string combined;
        for (const auto& p : patterns_[i]) {
            try {
                std::regex check(p, std::regex::ECMAScript | std::regex::icase);
            } catch (const std::regex_error& e) {
                throw InvalidConfig("tag " + tag + ": bad pattern '" + p + "': " + e.what());
            }
            if (!combined.empty()) combined += '|';
            combined += "(?:" + p + ")";
        }
        combined_[i] = std::regex(combined, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    }
}

TagRuleSet TagRuleSet::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("tag rules: ") + e.what());
    }
    std::array<std::vector<std::string>, kTagCount> patterns;
    for (const auto& [name, list] : j.at("tags").items()) {
        const auto tag = tag_from_string(name);
        if (!tag) throw InvalidConfig("tag rules: unknown tag " + name);
        patterns[static_cast<std::size_t>(*tag)] = list.get<std::vector<std::string>>();
    }
    return TagRuleSet(std::move(patterns), j.value("version", "unversioned"));
}

TagRuleSet TagRuleSet::load(const std::filesystem::path& file) { return from_json_text(read_file(file)); }

TagRuleSet TagRuleSet::builtin() { return from_json_text(std::string(defaults::strategy_tags_json)); }

TagSet TagRuleSet::tag_text(const std::string& text) const {
    const auto normalized = collapse_whitespace(to_lower_ascii(text));
    TagSet out;
    for (std::size_t i = 0; i < kTagCount; ++i)
        if (std::regex_search(normalized, combined_[i])) out.set(i);
    return out;
}

SideTags tag_strategies(const ConversationRecord& record, const TagRuleSet& rules) {
    SideTags out;
    for (const auto& m : record.transcript) {
        auto& side = m.sender == record.guesser_slot ? out.guesser : out.partner;
        side |= rules.tag_text(m.text);
    }
    return out;
}

std::vector<SideTags> tag_corpus(const Corpus& corpus, const TagRuleSet& rules) {
    std::vector<SideTags> out;
    out.reserve(corpus.records.size());
    for (const auto& r : corpus.records) out.push_back(tag_strategies(r, rules));
    return out;
}

std::string GroupKey::label() const {
    switch (scope) {
    case Scope::Overall: return "overall";
    case Scope::ByPartner: return "partner=" + std::string(to_string(*partner));
    case Scope::ByTag:
        return "tag=" + std::string(to_string(*tag)) + " side=" + std::string(to_string(side)) +
               " partner=" + std::string(to_string(*partner));
    }
    return {};
}

const GroupStats* StatsReport::find(const GroupKey& key) const {
    for (const auto& g : groups)
        if (g.key == key) return &g;
    return nullptr;
}

std::pair<double, double> wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
    if (n == 0) throw InvalidCounts("Wilson interval needs n >= 1");
    if (k > n) throw InvalidCounts("k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
    if (!(z > 0.0) || !std::isfinite(z)) throw InvalidCounts("z must be a positive finite number");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    const double low = k == 0 ? 0.0 : std::min(p, std::max(0.0, center - half));
    const double high = k == n ? 1.0 : std::max(p, std::min(1.0, center + half));
    return {low, high};
}

StatsReport compute_report(const Corpus& corpus, std::span<const SideTags> tagged, const Grouping& grouping,
                           const std::string& ruleset_version) {
    if (grouping.by_tag && tagged.size() != corpus.records.size())
        throw std::invalid_argument("tag sets must be parallel to the corpus records");

    // counts[partner][0]: by partner; tag_counts[tag][side][partner]
    struct Count {
        std::uint64_t n = 0, k = 0;
        void add(bool ok) {
            ++n;
            k += ok ? 1 : 0;
        }
    };
    Count overall;
    std::array<Count, 2> by_partner{};
    std::array<std::array<std::array<Count, 2>, 2>, kTagCount> by_tag{};
    StatsReport report;
    report.corpus_id = corpus.id;
    report.ruleset_version = ruleset_version;

    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        const auto& r = corpus.records[i];
        if (!r.correct) {
            ++report.abstained;
            continue;
        }
        const bool ok = *r.correct;
        const auto pk = static_cast<std::size_t>(r.partner_kind);
        overall.add(ok);
        by_partner[pk].add(ok);
        if (!grouping.by_tag) continue;
        for (std::size_t t = 0; t < kTagCount; ++t) {
            if (tagged[i].guesser.test(t)) by_tag[t][0][pk].add(ok);
            if (tagged[i].partner.test(t)) by_tag[t][1][pk].add(ok);
        }
    }
    if (overall.n == 0) throw EmptyCorpus("no guesses left after excluding abstentions");

    auto emit = [&](const GroupKey& key, const Count& c) {
        if (c.n == 0) return;
        const auto [low, high] = wilson_interval(c.k, c.n, grouping.z);
        report.groups.push_back(
            {key, c.n, c.k, static_cast<double>(c.k) / static_cast<double>(c.n), low, high});
    };
    emit(GroupKey::overall(), overall);
    if (grouping.by_partner) {
        emit(GroupKey::by_partner(Kind::Bot), by_partner[static_cast<std::size_t>(Kind::Bot)]);
        emit(GroupKey::by_partner(Kind::Human), by_partner[static_cast<std::size_t>(Kind::Human)]);
    }
    if (grouping.by_tag) {
        for (StrategyTag t : all_tags())
            for (Side s : {Side::Guesser, Side::Partner})
                for (Kind k : {Kind::Human, Kind::Bot})
                    emit(GroupKey::by_tag(t, s, k),
                         by_tag[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)][static_cast<std::size_t>(k)]);
    }
    return report;
}

namespace {

std::string percent(double rate) { return std::to_string(static_cast<long>(std::lround(rate * 100.0))) + "%"; }

std::string fixed(double v, int digits) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(digits) << v;
    return ss.str();
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string table(const StatsReport& report) {
    std::ostringstream out;
    out << "Probability of Correct Guess\n";
    const std::pair<GroupKey, const char*> rows[] = {
        {GroupKey::overall(), "Overall"},
        {GroupKey::by_partner(Kind::Bot), "When Partner is a Bot"},
        {GroupKey::by_partner(Kind::Human), "When Partner is Human"},
    };
    for (const auto& [key, title] : rows)
        if (const auto* g = report.find(key)) out << pad(title, 24) << percent(g->rate) << "\n";

    out << "\n" << pad("group", 52) << pad("n", 10) << pad("k", 10) << pad("rate", 9) << "95% CI\n";
    for (const auto& g : report.groups)
        out << pad(g.key.label(), 52) << pad(std::to_string(g.n), 10) << pad(std::to_string(g.k), 10)
            << pad(fixed(g.rate, 4), 9) << "[" << fixed(g.low, 4) << ", " << fixed(g.high, 4) << "]\n";
    out << "\ncorpus: " << report.corpus_id << "  rules: " << (report.ruleset_version.empty() ? "-" : report.ruleset_version)
        << "  abstained: " << report.abstained << "\n";
    return out.str();
}

std::string_view scope_name(GroupKey::Scope s) {
    switch (s) {
    case GroupKey::Scope::Overall: return "overall";
    case GroupKey::Scope::ByPartner: return "partner";
    case GroupKey::Scope::ByTag: return "tag";
    }
    return "overall";
}

}  // namespace

std::string export_report(const StatsReport& report, ReportFormat format) {
    if (format == ReportFormat::Table) return table(report);
    json j;
    j["corpus_id"] = report.corpus_id;
    j["ruleset_version"] = report.ruleset_version;
    j["abstained"] = report.abstained;
    json groups = json::array();
    for (const auto& g : report.groups) {
        json e;
        e["label"] = g.key.label();
        e["scope"] = scope_name(g.key.scope);
        e["partner"] = g.key.partner ? json(to_string(*g.key.partner)) : json(nullptr);
        e["tag"] = g.key.tag ? json(to_string(*g.key.tag)) : json(nullptr);
        e["side"] = to_string(g.key.side);
        e["n"] = g.n;
        e["k"] = g.k;
        e["rate"] = g.rate;
        e["low"] = g.low;
        e["high"] = g.high;
        groups.push_back(std::move(e));
    }
    j["groups"] = std::move(groups);
    return j.dump(2) + "\n";
}

StatsReport parse_report_json(const std::string& text) {
    const json j = json::parse(text);
    StatsReport r;
    r.corpus_id = j.at("corpus_id").get<std::string>();
    r.ruleset_version = j.at("ruleset_version").get<std::string>();
    r.abstained = j.at("abstained").get<std::uint64_t>();
    for (const auto& e : j.at("groups")) {
        GroupStats g;
        const auto scope = e.at("scope").get<std::string>();
        if (scope == "overall")
            g.key.scope = GroupKey::Scope::Overall;
        else if (scope == "partner")
            g.key.scope = GroupKey::Scope::ByPartner;
        else if (scope == "tag")
            g.key.scope = GroupKey::Scope::ByTag;
        else
            throw std::invalid_argument("unknown group scope " + scope);
        if (!e.at("partner").is_null()) g.key.partner = kind_from_string(e.at("partner").get<std::string>());
        if (!e.at("tag").is_null()) {
            g.key.tag = tag_from_string(e.at("tag").get<std::string>());
            if (!g.key.tag) throw std::invalid_argument("unknown tag " + e.at("tag").dump());
        }
        g.key.side = e.at("side").get<std::string>() == "partner" ? Side::Partner : Side::Guesser;
        g.n = e.at("n").get<std::uint64_t>();
        g.k = e.at("k").get<std::uint64_t>();
        g.rate = e.at("rate").get<double>();
        g.low = e.at("low").get<double>();
        g.high = e.at("high").get<double>();
        r.groups.push_back(g);
    }
    return r;
}

}  // namespace hon
