#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "hon/moderation.hpp"
#include "hon/persona.hpp"
#include "hon/rng.hpp"
#include "hon/session.hpp"

namespace hon {

// A text-completion model behind a bot. Implementations treat max_chars as a
// soft cap; the engine truncates again.
class BotBackend {
public:
    virtual ~BotBackend() = default;
    virtual std::string complete(const std::string& prompt, std::span<const std::string> stop_markers,
                                 std::size_t max_chars) = 0;
    virtual const std::string& name() const = 0;
};

// Replies with the partner's most recent line.
class EchoBackend : public BotBackend {
public:
    explicit EchoBackend(std::string name = "echo") : name_(std::move(name)) {}
    std::string complete(const std::string& prompt, std::span<const std::string> stop_markers,
                         std::size_t max_chars) override;
    const std::string& name() const override { return name_; }

private:
    std::string name_;
};

// Replays a fixed list, wrapping around at the end.
class ScriptedBackend : public BotBackend {
public:
    ScriptedBackend(std::vector<std::string> replies, std::string name = "scripted");
    std::string complete(const std::string& prompt, std::span<const std::string> stop_markers,
                         std::size_t max_chars) override;
    const std::string& name() const override { return name_; }
    std::size_t calls() const;

private:
    std::vector<std::string> replies_;
    std::string name_;
    mutable std::mutex mutex_;
    std::size_t next_ = 0;
};

struct HttpBackendConfig {
    std::string endpoint;  // "http://host:port/path"
    std::string model;
    std::string auth_env;  // env var holding a bearer token; empty for none
    std::string prompt_field = "prompt";
    std::string stop_field = "stop";
    std::string max_field = "max_tokens";
    std::string model_field = "model";
    std::string response_pointer = "/completion";  // JSON pointer into the reply
    double timeout_s = 10.0;
};

class HttpBackend : public BotBackend {
public:
    HttpBackend(HttpBackendConfig config, std::string name);
    std::string complete(const std::string& prompt, std::span<const std::string> stop_markers,
                         std::size_t max_chars) override;
    const std::string& name() const override { return name_; }

private:
    HttpBackendConfig config_;
    std::string name_;
};

struct BackendSpec {
    std::string name;
    std::string kind = "scripted";  // scripted | echo | http
    double weight = 1.0;
    std::vector<std::string> replies;  // scripted
    HttpBackendConfig http;            // http
};

std::shared_ptr<BotBackend> make_backend(const BackendSpec& spec);

// Weighted pool of backends; one is drawn per match.
class BackendRegistry {
public:
    void add(std::shared_ptr<BotBackend> backend, double weight = 1.0);
    std::shared_ptr<BotBackend> pick(Rng& rng) const;
    std::shared_ptr<BotBackend> find(const std::string& name) const;
    bool empty() const { return backends_.empty(); }

private:
    std::vector<std::shared_ptr<BotBackend>> backends_;
    std::vector<double> weights_;
};

struct StyleSpec {
    std::string id = "plain";
    double typo_rate = 0.0;  // per word
    bool lowercase_all = false;
    bool drop_terminal_punctuation = false;
    std::vector<std::pair<std::string, std::string>> slang;  // applied in order, whole words, case-insensitive
    double emoji_rate = 0.0;  // per message
    std::vector<std::string> emojis = {"\U0001F602", "\U0001F642", "\U0001F605", "\U0001F44D", "\U0001F914"};

    void validate() const;  // InvalidConfig
};

struct DelayModel {
    double base_latency = 1.5;
    double per_char = 0.12;
    double jitter_sd = 1.0;
    double hard_cap = 18.0;

    void validate(Seconds turn_window) const;  // InvalidConfig
};

struct BehaviorPolicy {
    bool exit_on_offense = true;
    bool exit_on_repetition = true;
    std::size_t window = 3;  // partner messages compared
    std::size_t ngram = 4;   // character shingle length
    double threshold = 0.8;

    void validate() const;  // InvalidConfig
};

enum class ExitReason { Offense, Repetition, ModerationExhausted, BackendFailure, EmptyCompletion };
std::string_view to_string(ExitReason r);

// nullopt means Continue.
using BehaviorDecision = std::optional<ExitReason>;

// Mean pairwise Jaccard similarity of character n-gram sets.
double repetition_ratio(std::span<const std::string> messages, std::size_t ngram);

BehaviorDecision decide_behavior(std::span<const ChatMessage> transcript, Slot bot_slot, const BehaviorPolicy& policy,
                                 const ModerationVerdict& last_partner_verdict);

// Calls the backend, cuts at the first stop marker and strips an echoed
// speaker cue. Retries twice on empty output before EmptyCompletion. Any
// backend failure surfaces as BackendUnavailable.
std::string generate_reply(const std::string& prompt_text, BotBackend& backend,
                           std::span<const std::string> stop_markers, std::size_t max_chars = 100);

// Slang, typos, lowercasing, terminal punctuation, emoji; then the result is
// filtered to `charset` and cut to `max_chars` codepoints.
std::string apply_style(std::string_view raw, const StyleSpec& style, Rng& rng,
                        const Charset& charset = Charset::latin_and_emoji(), std::size_t max_chars = 100);

// Unclamped draw: base + per_char * len + N(0, jitter_sd).
double sample_typing_delay(std::string_view text, const DelayModel& model, Rng& rng);
// min(hard_cap, max(0, sample_typing_delay(...))).
double compute_delay(std::string_view text, const DelayModel& model, Rng& rng);

// Everything fixed for one bot over one session.
struct BotProfile {
    Persona persona;
    PromptDocument prompt;
    StyleSpec style;
    std::shared_ptr<BotBackend> backend;
    std::string starter;  // used verbatim as the first draft when the bot opens
};

struct BotToolkit {
    DelayModel delay;
    BehaviorPolicy policy;
    std::shared_ptr<ModerationService> moderation;
    Charset charset = Charset::latin_and_emoji();
    std::size_t max_chars = 100;
};

struct BotReply {
    std::string text;
    double delay = 0.0;
    int regenerations = 0;
};

struct BotExitAction {
    ExitReason reason;
};

using BotAction = std::variant<BotReply, BotExitAction>;

// decide_behavior, then draft/screen/regenerate, then style and delay.
BotAction bot_next_action(const BotProfile& profile, const BotToolkit& toolkit, std::span<const ChatMessage> transcript,
                          Slot bot_slot, const ModerationVerdict& last_partner_verdict, Rng& rng);

}  // namespace hon
