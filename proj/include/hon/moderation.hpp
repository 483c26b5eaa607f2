#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace hon {

struct ModerationVerdict {
    bool flagged = false;
    std::string category;                 // set when flagged
    std::optional<std::string> matched_rule;  // set when flagged

    static ModerationVerdict clean() { return {}; }
    bool operator==(const ModerationVerdict&) const = default;
};

struct ModerationRule {
    std::string id;
    std::string category;
    std::string pattern;  // ECMAScript regex, matched case-insensitively over normalized text
};

// Immutable once built; safe to share across threads.
class RuleSet {
public:
    // Throws InvalidConfig on duplicate ids or patterns that do not compile.
    explicit RuleSet(std::vector<ModerationRule> rules, std::string version = "inline");

    static RuleSet load(const std::filesystem::path& file);
    static RuleSet from_json_text(const std::string& text);

    const std::vector<ModerationRule>& rules() const { return rules_; }
    const std::string& version() const { return version_; }

    // First matching rule wins.
    ModerationVerdict screen(const std::string& text) const;

private:
    std::vector<ModerationRule> rules_;
    std::vector<std::regex> compiled_;
    std::string version_;
};

// Lowercase, zero-width codepoints removed, whitespace runs collapsed.
std::string normalize_for_screening(const std::string& text);

ModerationVerdict screen(const std::string& text, const RuleSet& rules);

// Hook for an external moderation service. The local rule engine is the default.
class ModerationService {
public:
    virtual ~ModerationService() = default;
    virtual ModerationVerdict screen(const std::string& text) = 0;
};

class LocalModeration : public ModerationService {
public:
    explicit LocalModeration(std::shared_ptr<const RuleSet> rules) : rules_(std::move(rules)) {}
    ModerationVerdict screen(const std::string& text) override { return rules_->screen(text); }

private:
    std::shared_ptr<const RuleSet> rules_;
};

enum class Origin { HumanMessage, BotDraft };

inline constexpr int kMaxBotRegenerations = 2;

struct ModerationAction {
    enum class Kind { PassThrough, EndSession, RegenerateBot, BotExit } kind = Kind::PassThrough;
    int attempt = 0;  // for RegenerateBot: the attempt about to run

    bool operator==(const ModerationAction&) const = default;
};

// `regenerations_done` counts earlier regenerations of the current bot reply.
ModerationAction enforce(Origin origin, const ModerationVerdict& verdict, int regenerations_done = 0);

}  // namespace hon
