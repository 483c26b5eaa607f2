#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hon/session.hpp"

namespace hon {

enum class StrategyTag {
    SpellingComment,
    PersonalQuestion,
    OpinionQuestion,
    ReligionQuestion,
    GeopoliticsQuestion,
    PolitenessMarker,
    RudeVulgar,
    CurrentEvents,
    SocialMediaTrend,
    HardRequest,
    NonEnglishAttempt,
    SubwordTrick,
    AIPhraseImitation,
    GameMetaReference,
};
inline constexpr std::size_t kTagCount = 14;

std::string_view to_string(StrategyTag t);
std::optional<StrategyTag> tag_from_string(std::string_view s);
std::array<StrategyTag, kTagCount> all_tags();

using TagSet = std::bitset<kTagCount>;

inline constexpr int kRecordSchemaVersion = 1;

struct BotMetadata {
    std::string persona_id;
    std::string backend;
    std::string style_id;

    bool operator==(const BotMetadata&) const = default;
};

// One human guesser's view of one finished session.
struct ConversationRecord {
    std::string record_id;
    std::string session_id;
    std::string guesser_token;  // anonymous client token; empty for simulated players
    Slot guesser_slot = Slot::A;
    Kind partner_kind = Kind::Bot;
    Verdict verdict = Verdict::Abstain;
    std::optional<bool> correct;  // nullopt iff Abstain
    EndReason end_reason;
    double started_at = 0.0;
    double ended_at = 0.0;
    std::vector<ChatMessage> transcript;
    std::optional<BotMetadata> bot;

    bool operator==(const ConversationRecord&) const = default;

    // Throws std::invalid_argument when correct disagrees with verdict and partner.
    void validate() const;
};

std::string to_json_line(const ConversationRecord& record);
// Throws std::invalid_argument (schema) or nlohmann parse errors.
ConversationRecord record_from_json_line(const std::string& line);

// Builds the records for every human guesser of a finished session.
std::vector<ConversationRecord> records_from_outcome(const SessionOutcome& outcome, const std::string& session_id,
                                                     double started_at, double ended_at,
                                                     const std::optional<BotMetadata>& bot,
                                                     const std::array<std::string, 2>& tokens = {});

struct Corpus {
    std::string id;
    std::vector<ConversationRecord> records;
    std::size_t skipped = 0;  // malformed lines dropped in lenient mode
};

// One JSON record per line; blank lines are ignored. Strict mode throws
// ParseError with the 1-based line number of the first bad line.
Corpus ingest(const std::filesystem::path& path, bool strict = false);
Corpus ingest_stream(std::istream& in, bool strict = false, std::string id = "stream");

class TagRuleSet {
public:
    // patterns[tag] is a list of regexes over lowercased, whitespace-collapsed text.
    // Throws InvalidConfig when a tag has no rule or a pattern does not compile.
    TagRuleSet(std::array<std::vector<std::string>, kTagCount> patterns, std::string version);

    static TagRuleSet builtin();
    static TagRuleSet load(const std::filesystem::path& file);
    static TagRuleSet from_json_text(const std::string& text);

    const std::string& version() const { return version_; }
    const std::vector<std::string>& patterns(StrategyTag t) const { return patterns_[static_cast<std::size_t>(t)]; }

    TagSet tag_text(const std::string& text) const;

private:
    std::array<std::vector<std::string>, kTagCount> patterns_;
    std::array<std::regex, kTagCount> combined_;
    std::string version_;
};

struct SideTags {
    TagSet guesser;
    TagSet partner;

    bool operator==(const SideTags&) const = default;
};

// A side carries a tag iff any of its messages matches any rule for it.
SideTags tag_strategies(const ConversationRecord& record, const TagRuleSet& rules);
std::vector<SideTags> tag_corpus(const Corpus& corpus, const TagRuleSet& rules);

enum class Side { Guesser, Partner };
std::string_view to_string(Side s);

struct GroupKey {
    enum class Scope { Overall, ByPartner, ByTag } scope = Scope::Overall;
    std::optional<Kind> partner;
    std::optional<StrategyTag> tag;
    Side side = Side::Guesser;

    std::string label() const;
    bool operator==(const GroupKey&) const = default;

    static GroupKey overall() { return {}; }
    static GroupKey by_partner(Kind k) { return {Scope::ByPartner, k, std::nullopt, Side::Guesser}; }
    static GroupKey by_tag(StrategyTag t, Side s, Kind k) { return {Scope::ByTag, k, t, s}; }
};

struct GroupStats {
    GroupKey key;
    std::uint64_t n = 0;
    std::uint64_t k = 0;
    double rate = 0.0;
    double low = 0.0;
    double high = 0.0;

    bool operator==(const GroupStats&) const = default;
};

struct StatsReport {
    std::string corpus_id;
    std::string ruleset_version;
    std::uint64_t abstained = 0;
    std::vector<GroupStats> groups;  // only groups with n >= 1

    const GroupStats* find(const GroupKey& key) const;
    bool operator==(const StatsReport&) const = default;
};

struct Grouping {
    bool by_partner = true;
    bool by_tag = true;
    double z = 1.96;
};

// Wilson score interval for k successes in n trials. Throws InvalidCounts.
std::pair<double, double> wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.96);

// Exact integer counting; Abstain records are excluded from every group.
// `tagged` is parallel to corpus.records (may be empty when by_tag is off).
// Throws EmptyCorpus when nothing is left to count.
StatsReport compute_report(const Corpus& corpus, std::span<const SideTags> tagged, const Grouping& grouping = {},
                           const std::string& ruleset_version = "");

enum class ReportFormat { Table, Json };
std::string export_report(const StatsReport& report, ReportFormat format);
StatsReport parse_report_json(const std::string& text);

}  // namespace hon
