#include "hon/bot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "hon/error.hpp"
#include "hon/text.hpp"

namespace hon {

std::string_view to_string(ExitReason r) {
    switch (r) {
    case ExitReason::Offense: return "Offense";
    case ExitReason::Repetition: return "Repetition";
    case ExitReason::ModerationExhausted: return "ModerationExhausted";
    case ExitReason::BackendFailure: return "BackendFailure";
    case ExitReason::EmptyCompletion: return "EmptyCompletion";
    }
    return "?";
}

std::string EchoBackend::complete(const std::string& prompt, std::span<const std::string>, std::size_t max_chars) {
    // Last line starting with the partner label.
    const std::string label = std::string(kPartnerLabel) + ": ";
    std::size_t pos = prompt.rfind("\n" + label);
    if (pos == std::string::npos) return "hi";
    pos += 1 + label.size();
    const auto end = prompt.find('\n', pos);
    return truncate_codepoints(prompt.substr(pos, end == std::string::npos ? std::string::npos : end - pos),
                               max_chars);
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies, std::string name)
    : replies_(std::move(replies)), name_(std::move(name)) {
    if (replies_.empty()) throw InvalidConfig("scripted backend " + name_ + " needs at least one reply");
}

std::string ScriptedBackend::complete(const std::string&, std::span<const std::string>, std::size_t) {
    std::lock_guard lock(mutex_);
    return replies_[next_++ % replies_.size()];
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mutex_);
    return next_;
}

std::shared_ptr<BotBackend> make_backend(const BackendSpec& spec) {
    if (spec.kind == "scripted") return std::make_shared<ScriptedBackend>(spec.replies, spec.name);
    if (spec.kind == "echo") return std::make_shared<EchoBackend>(spec.name);
    if (spec.kind == "http") return std::make_shared<HttpBackend>(spec.http, spec.name);
    throw InvalidConfig("unknown backend kind '" + spec.kind + "' for " + spec.name);
}

void BackendRegistry::add(std::shared_ptr<BotBackend> backend, double weight) {
    if (!(weight > 0.0)) throw InvalidConfig("backend weight must be positive");
    backends_.push_back(std::move(backend));
    weights_.push_back(weight);
}

std::shared_ptr<BotBackend> BackendRegistry::pick(Rng& rng) const {
    if (backends_.empty()) throw InvalidConfig("no bot backends configured");
    return backends_[rng.weighted_index(weights_)];
}

std::shared_ptr<BotBackend> BackendRegistry::find(const std::string& name) const {
    for (const auto& b : backends_)
        if (b->name() == name) return b;
    return nullptr;
}

void StyleSpec::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(typo_rate) || !prob(emoji_rate)) throw InvalidConfig("style " + id + ": rates must be in [0, 1]");
    if (emoji_rate > 0.0 && emojis.empty()) throw InvalidConfig("style " + id + ": emoji_rate needs emojis");
}

void DelayModel::validate(Seconds turn_window) const {
    if (!(base_latency >= 0.0)) throw InvalidConfig("delay base_latency must be >= 0");
    if (!(per_char >= 0.0)) throw InvalidConfig("delay per_char must be >= 0");
    if (!(jitter_sd >= 0.0)) throw InvalidConfig("delay jitter_sd must be >= 0");
    if (!(hard_cap >= 0.0 && hard_cap < turn_window)) throw InvalidConfig("delay hard_cap must be below the turn window");
}

void BehaviorPolicy::validate() const {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidConfig("repetition threshold must be in (0, 1]");
    if (window < 2) throw InvalidConfig("repetition window must be >= 2");
    if (ngram == 0) throw InvalidConfig("repetition ngram must be >= 1");
}

namespace {

std::set<std::string> shingles(const std::string& text, std::size_t n) {
    const std::string norm = collapse_whitespace(to_lower_ascii(text));
    std::set<std::string> out;
    if (norm.size() < n) {
        out.insert(norm);
        return out;
    }
    for (std::size_t i = 0; i + n <= norm.size(); ++i) out.insert(norm.substr(i, n));
    return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& s : a) inter += b.count(s);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

}  // namespace

double repetition_ratio(std::span<const std::string> messages, std::size_t ngram) {
    if (messages.size() < 2) return 0.0;
    std::vector<std::set<std::string>> sets;
    for (const auto& m : messages) sets.push_back(shingles(m, ngram));
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < sets.size(); ++i)
        for (std::size_t j = i + 1; j < sets.size(); ++j, ++pairs) sum += jaccard(sets[i], sets[j]);
    return sum / static_cast<double>(pairs);
}

BehaviorDecision decide_behavior(std::span<const ChatMessage> transcript, Slot bot_slot, const BehaviorPolicy& policy,
                                 const ModerationVerdict& last_partner_verdict) {
    if (policy.exit_on_offense && last_partner_verdict.flagged) return ExitReason::Offense;
    if (policy.exit_on_repetition) {
        std::vector<std::string> recent;
        for (auto it = transcript.rbegin(); it != transcript.rend() && recent.size() < policy.window; ++it)
            if (it->sender != bot_slot) recent.push_back(it->text);
        if (recent.size() == policy.window && repetition_ratio(recent, policy.ngram) >= policy.threshold)
            return ExitReason::Repetition;
    }
    return std::nullopt;
}

std::string generate_reply(const std::string& prompt_text, BotBackend& backend,
                           std::span<const std::string> stop_markers, std::size_t max_chars) {
    const auto nl = prompt_text.rfind('\n');
    const std::string cue = trim(nl == std::string::npos ? prompt_text : prompt_text.substr(nl + 1));
    constexpr int kAttempts = 3;  // first call plus two retries
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        std::string raw;
        try {
            raw = backend.complete(prompt_text, stop_markers, max_chars);
        } catch (const BackendUnavailable&) {
            throw;
        } catch (const std::exception& e) {
            throw BackendUnavailable(backend.name(), e.what());
        }
        std::size_t cut = raw.size();
        for (const auto& stop : stop_markers) {
            if (stop.empty()) continue;
            if (auto pos = raw.find(stop); pos != std::string::npos) cut = std::min(cut, pos);
        }
        std::string text = trim(raw.substr(0, cut));
        if (!cue.empty() && text.rfind(cue, 0) == 0) text = trim(text.substr(cue.size()));
        text = collapse_whitespace(single_line(text));
        if (!text.empty()) return text;
    }
    throw EmptyCompletion("backend " + backend.name() + " returned nothing after retries");
}

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '\''; }

std::string replace_phrase(const std::string& text, const std::string& from, const std::string& to) {
    if (from.empty()) return text;
    const std::string lower = to_lower_ascii(text);
    const std::string needle = to_lower_ascii(from);
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        auto pos = lower.find(needle, i);
        if (pos == std::string::npos) break;
        const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
        const std::size_t end = pos + needle.size();
        const bool right_ok = end >= text.size() || !is_word_char(text[end]);
        if (left_ok && right_ok) {
            out += text.substr(i, pos - i) + to;
            i = end;
        } else {
            out += text.substr(i, pos + 1 - i);
            i = pos + 1;
        }
    }
    out += text.substr(i);
    return out;
}

// QWERTY neighbours for lowercase letters.
const char* neighbours(char c) {
    static const char* rows[26] = {
        "qwsz", "vghn", "xdfv", "serfcx", "wsdr", "drtgvc", "ftyhbv", "gyujnb", "ujko", "huikmn", "jiolm", "kop",
        "njk",  "bhjm", "iklp", "ol",     "wa",   "edft",   "awedxz", "rfgy", "yhji",  "cfgb",  "qase", "zsdc",
        "tghu", "asx"};
    return rows[c - 'a'];
}

std::string inject_typos(const std::string& text, double rate, Rng& rng) {
    if (rate <= 0.0) return text;
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!std::isalpha(static_cast<unsigned char>(text[i]))) {
            out += text[i++];
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
        std::string word = text.substr(i, j - i);
        if (word.size() >= 3 && rng.bernoulli(rate)) {
            const std::size_t at = 1 + rng.below(word.size() - 1);  // keep the first letter intact
            if (rng.bernoulli(0.5)) {
                const char c = word[at];
                const bool upper = std::isupper(static_cast<unsigned char>(c)) != 0;
                const char* near = neighbours(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
                char repl = near[rng.below(std::char_traits<char>::length(near))];
                if (upper) repl = static_cast<char>(std::toupper(static_cast<unsigned char>(repl)));
                word[at] = repl;
            } else {
                word.erase(at, 1);
            }
        }
        out += word;
        i = j;
    }
    return out;
}

}  // namespace

std::string apply_style(std::string_view raw, const StyleSpec& style, Rng& rng, const Charset& charset,
                        std::size_t max_chars) {
    std::string text(raw);
    for (const auto& [from, to] : style.slang) text = replace_phrase(text, from, to);
    text = inject_typos(text, style.typo_rate, rng);
    if (style.lowercase_all) text = to_lower_ascii(text);
    if (style.drop_terminal_punctuation) {
        while (!text.empty() && std::string_view(".!,;:").find(text.back()) != std::string_view::npos) text.pop_back();
    }
    if (style.emoji_rate > 0.0 && !style.emojis.empty() && rng.bernoulli(style.emoji_rate))
        text += " " + style.emojis[rng.below(style.emojis.size())];
    return truncate_codepoints(charset.filter(text), max_chars);
}

double sample_typing_delay(std::string_view text, const DelayModel& model, Rng& rng) {
    const double len = static_cast<double>(codepoint_count(text).value_or(text.size()));
    double d = model.base_latency + model.per_char * len;
    if (model.jitter_sd > 0.0) d += model.jitter_sd * rng.normal();
    return d;
}

double compute_delay(std::string_view text, const DelayModel& model, Rng& rng) {
    return std::min(model.hard_cap, std::max(0.0, sample_typing_delay(text, model, rng)));
}

BotAction bot_next_action(const BotProfile& profile, const BotToolkit& toolkit, std::span<const ChatMessage> transcript,
                          Slot bot_slot, const ModerationVerdict& last_partner_verdict, Rng& rng) {
    if (auto exit = decide_behavior(transcript, bot_slot, toolkit.policy, last_partner_verdict))
        return BotExitAction{*exit};

    const bool opening = transcript.empty();
    const std::vector<std::string> stops = {std::string(kPartnerLabel) + ":"};
    int regenerations = 0;
    while (true) {
        std::string draft;
        if (opening && regenerations == 0 && !profile.starter.empty()) {
            draft = profile.starter;
        } else {
            try {
                const std::string prompt = render_transcript(profile.prompt, profile.persona, transcript, bot_slot);
                draft = generate_reply(prompt, *profile.backend, stops, toolkit.max_chars);
            } catch (const BackendUnavailable&) {
                return BotExitAction{ExitReason::BackendFailure};
            } catch (const EmptyCompletion&) {
                return BotExitAction{ExitReason::EmptyCompletion};
            }
        }
        ModerationVerdict verdict = toolkit.moderation ? toolkit.moderation->screen(draft) : ModerationVerdict{};
        std::string styled;
        if (!verdict.flagged) {
            styled = apply_style(draft, profile.style, rng, toolkit.charset, toolkit.max_chars);
            // Styling can change the text, so the delivered form is screened too.
            if (toolkit.moderation) verdict = toolkit.moderation->screen(styled);
            if (trim(styled).empty()) verdict = {true, "Empty", std::string("empty-after-style")};
        }
        const auto action = enforce(Origin::BotDraft, verdict, regenerations);
        switch (action.kind) {
        case ModerationAction::Kind::PassThrough:
            return BotReply{styled, compute_delay(styled, toolkit.delay, rng), regenerations};
        case ModerationAction::Kind::RegenerateBot:
            regenerations = action.attempt;
            continue;
        default:
            return BotExitAction{ExitReason::ModerationExhausted};
        }
    }
}

}  // namespace hon
