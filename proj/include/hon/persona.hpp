#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hon/context.hpp"
#include "hon/rng.hpp"
#include "hon/session.hpp"

namespace hon {

struct Persona {
    std::string id;  // catalog template id
    std::string name;
    std::string pronoun = "they";  // he | she | they
    int age = 30;
    std::string occupation;
    Location location;
    std::vector<std::string> traits;     // "Kind and caring", "loves animals", ...
    std::vector<std::string> behaviors;  // full sentences; may use {name}/{Pronoun} placeholders
    std::optional<std::string> objective;
    bool english_only = true;
    std::vector<std::string> extra_constraints;  // clauses such as "is bad at math"
    std::string style_id = "plain";

    void validate() const;  // InvalidConfig
};

// Fills {name}, {pronoun}, {Pronoun}, {pronoun_is}, {possessive} and {object}.
std::string expand_placeholders(const std::string& text, const Persona& persona);

struct GameFraming {
    std::string template_text;

    // The framing paragraph used by the deployed game.
    static GameFraming standard();
    static GameFraming load(const std::filesystem::path& file);
    std::string render(const Persona& persona) const;
    void validate() const;  // InvalidConfig
};

inline constexpr const char* kConversationStart = "The conversation starts now.";
inline constexpr const char* kBlockSeparator = "##";
inline constexpr const char* kPartnerLabel = "User";

// Ordered blocks joined by "##" lines. Context blocks come first, then the
// framing, the persona paragraph and the start line.
struct PromptDocument {
    std::vector<PromptBlock> blocks;

    // Newline-terminated text.
    std::string text() const;
    bool operator==(const PromptDocument&) const = default;
};

// Splits on "##" lines and classifies each block by its label.
PromptDocument parse_prompt_document(const std::string& text);

struct NamePick {
    std::string name;
    std::string pronoun;
};

struct PersonaTemplate {
    std::string id;
    double weight = 1.0;
    std::vector<NamePick> names;
    int age_min = 18;
    int age_max = 60;
    std::vector<std::string> occupations;
    std::vector<Location> locations;
    std::vector<std::string> traits;
    std::vector<std::string> behaviors;
    std::vector<std::string> objectives;  // empty: no objective
    std::vector<std::string> extra_constraints;
    bool english_only = true;
    std::vector<std::string> style_ids;
};

struct PersonaCatalog {
    int schema_version = 1;
    std::vector<PersonaTemplate> templates;

    void validate() const;  // EmptyCatalog / InvalidConfig
    static PersonaCatalog load(const std::filesystem::path& file);
    static PersonaCatalog from_json_text(const std::string& text);
};

// Weighted template draw, then every pool resolved with the same rng.
Persona sample_persona(const PersonaCatalog& catalog, Rng& rng);

std::string persona_paragraph(const Persona& persona, const std::string& date, const std::string& time);

PromptDocument assemble_prompt(const Persona& persona, const ContextSnapshot& snapshot, const GameFraming& framing);

// Prompt text, one "<Speaker>: <text>" line per message, then the bot's cue
// "<name>:". Throws NonAlternatingTranscript.
std::string render_transcript(const PromptDocument& prompt, const Persona& persona,
                              std::span<const ChatMessage> messages, Slot bot_slot);

}  // namespace hon
