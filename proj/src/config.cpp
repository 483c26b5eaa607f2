#include "hon/config.hpp"

#include <fstream>
#include <sstream>

#include "hon/defaults.hpp"
#include "hon/error.hpp"
#include "json.hpp"

namespace hon {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InvalidConfig("cannot open " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Resolves a resource: the file named by `key` relative to base_dir, or the
// built-in text when the key is absent or there is no base directory.
class Resources {
public:
    Resources(const json& root, std::optional<fs::path> base) : root_(root), base_(std::move(base)) {}

    std::string text(const json& section, const char* key, std::string_view builtin) const {
        if (!base_ || !section.contains(key)) return std::string(builtin);
        return read_text(path(section.at(key).get<std::string>()));
    }
    std::string text(const char* key, std::string_view builtin) const { return text(root_, key, builtin); }

    fs::path path(const std::string& p) const {
        const fs::path candidate(p);
        if (candidate.is_absolute() || !base_) return candidate;
        return *base_ / candidate;
    }

private:
    const json& root_;
    std::optional<fs::path> base_;
};

std::vector<std::string> nonblank_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) out.push_back(line);
    }
    return out;
}

template <typename T>
void read_opt(const json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

DelayModel delay_from_json(const json& j, DelayModel d) {
    read_opt(j, "base_latency", d.base_latency);
    read_opt(j, "per_char", d.per_char);
    read_opt(j, "jitter_sd", d.jitter_sd);
    read_opt(j, "hard_cap", d.hard_cap);
    return d;
}

AgentScript agent_from_json(const json& j) {
    AgentScript a;
    read_opt(j, "id", a.id);
    read_opt(j, "weight", a.weight);
    const auto reply = j.value("reply", std::string("template"));
    if (reply == "template")
        a.reply = AgentScript::Reply::Template;
    else if (reply == "scripted")
        a.reply = AgentScript::Reply::Scripted;
    else if (reply == "echo")
        a.reply = AgentScript::Reply::Echo;
    else
        throw InvalidConfig("agent " + a.id + ": unknown reply policy " + reply);
    read_opt(j, "lines", a.lines);
    const auto guess = j.value("guess", std::string("bernoulli"));
    if (guess == "bernoulli")
        a.guess = AgentScript::Guess::Bernoulli;
    else if (guess == "fixed")
        a.guess = AgentScript::Guess::Fixed;
    else
        throw InvalidConfig("agent " + a.id + ": unknown guess policy " + guess);
    if (j.contains("fixed_verdict")) a.fixed_verdict = verdict_from_string(j.at("fixed_verdict").get<std::string>());
    read_opt(j, "p_correct", a.p_correct);
    read_opt(j, "abstain_rate", a.abstain_rate);
    if (j.contains("flavor")) {
        const auto name = j.at("flavor").get<std::string>();
        a.flavor = tag_from_string(name);
        if (!a.flavor) throw InvalidConfig("agent " + a.id + ": unknown strategy flavor " + name);
    }
    if (j.contains("typing")) a.typing = delay_from_json(j.at("typing"), a.typing);
    return a;
}

BackendSpec backend_from_json(const json& j) {
    BackendSpec b;
    b.name = j.at("name").get<std::string>();
    read_opt(j, "kind", b.kind);
    read_opt(j, "weight", b.weight);
    read_opt(j, "replies", b.replies);
    if (j.contains("http")) {
        const auto& h = j.at("http");
        auto& c = b.http;
        read_opt(h, "endpoint", c.endpoint);
        read_opt(h, "model", c.model);
        read_opt(h, "auth_env", c.auth_env);
        read_opt(h, "prompt_field", c.prompt_field);
        read_opt(h, "stop_field", c.stop_field);
        read_opt(h, "max_field", c.max_field);
        read_opt(h, "model_field", c.model_field);
        read_opt(h, "response_pointer", c.response_pointer);
        read_opt(h, "timeout_s", c.timeout_s);
    }
    return b;
}

HttpFeedConfig feed_from_json(const json& h) {
    HttpFeedConfig c;
    read_opt(h, "base_url", c.base_url);
    read_opt(h, "weather_path", c.weather_path);
    read_opt(h, "news_path", c.news_path);
    read_opt(h, "tweets_path", c.tweets_path);
    if (h.contains("weather_fields"))
        for (const auto& [k, v] : h.at("weather_fields").items()) c.weather_fields[k] = v.get<std::string>();
    read_opt(h, "stories_list", c.stories_list);
    read_opt(h, "story_headline", c.story_headline);
    read_opt(h, "story_age", c.story_age);
    read_opt(h, "tweets_list", c.tweets_list);
    read_opt(h, "tweet_text", c.tweet_text);
    read_opt(h, "tweet_author", c.tweet_author);
    read_opt(h, "tweet_age", c.tweet_age);
    return c;
}

}  // namespace

std::optional<ProviderSet> ContextConfig::providers() const {
    if (kind == "none") return std::nullopt;
    if (kind == "fixtures") {
        auto set = fixture_providers(fixtures_dir, ttl_s);
        set.timeout_s = timeout_s;
        return set;
    }
    if (kind == "http") return http_providers(http, timeout_s, ttl_s);
    throw InvalidConfig("unknown context provider kind " + kind);
}

void PlatformConfig::validate() const {
    session.validate();
    match.validate();
    bots.validate();
    bot_delay.validate(session.turn_window);
    behavior.validate();
    if (!moderation) throw InvalidConfig("moderation rules missing");
    if (!tags) throw InvalidConfig("strategy tag rules missing");
    if (context.kind != "none" && context.kind != "fixtures" && context.kind != "http")
        throw InvalidConfig("unknown context provider kind " + context.kind);
    if (!(server.tick_s > 0.0) || !(server.timersync_s > 0.0)) throw InvalidConfig("server timers must be positive");
    if (!(server.bot_margin_s >= 0.0 && server.bot_margin_s < session.turn_window))
        throw InvalidConfig("bot_margin_s must be in [0, turn_window)");
    for (const auto& a : agents) a.validate(session);
}

PlatformConfig PlatformConfig::from_json_text(const std::string& text, const std::optional<fs::path>& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("config: ") + e.what());
    }
    if (root.value("schema_version", 1) != 1) throw InvalidConfig("unsupported config schema_version");
    const Resources res(root, base_dir);
    const json empty = json::object();
    auto section = [&](const char* key) -> const json& { return root.contains(key) ? root.at(key) : empty; };

    PlatformConfig c;
    try {
        const auto& s = section("session");
        read_opt(s, "session_duration", c.session.session_duration);
        read_opt(s, "turn_window", c.session.turn_window);
        read_opt(s, "max_message_chars", c.session.max_message_chars);
        read_opt(s, "guess_window", c.session.guess_window);
        const auto policy = s.value("on_turn_timeout", std::string("end_chat"));
        if (policy == "end_chat")
            c.session.on_turn_timeout = TurnTimeoutPolicy::EndChat;
        else if (policy == "pass_turn")
            c.session.on_turn_timeout = TurnTimeoutPolicy::PassTurn;
        else
            throw InvalidConfig("on_turn_timeout must be end_chat or pass_turn");
        auto ranges = Charset::latin_ranges();
        for (const auto& r : Charset::parse_ranges(res.text(s, "emoji_ranges", defaults::emoji_ranges_txt)))
            ranges.push_back(r);
        c.session.allowed_charset = Charset(std::move(ranges));

        const auto& m = section("match");
        read_opt(m, "bot_probability", c.match.bot_probability);
        read_opt(m, "max_human_wait", c.match.max_human_wait);
        c.match.starter_catalog = nonblank_lines(res.text(m, "starters", defaults::starters_txt));

        c.bots.catalog = PersonaCatalog::from_json_text(res.text("personas", defaults::personas_json));
        if (root.contains("framing") && base_dir)
            c.bots.framing = GameFraming::load(res.path(root.at("framing").get<std::string>()));
        c.bots.styles = styles_from_json_text(res.text("styles", defaults::styles_json));
        for (const auto& b : section("backends")) c.bots.backends.push_back(backend_from_json(b));

        c.bot_delay = delay_from_json(section("bot_delay"), c.bot_delay);
        const auto& bh = section("behavior");
        read_opt(bh, "exit_on_offense", c.behavior.exit_on_offense);
        read_opt(bh, "exit_on_repetition", c.behavior.exit_on_repetition);
        read_opt(bh, "window", c.behavior.window);
        read_opt(bh, "ngram", c.behavior.ngram);
        read_opt(bh, "threshold", c.behavior.threshold);

        c.moderation = std::make_shared<const RuleSet>(
            RuleSet::from_json_text(res.text("moderation", defaults::moderation_json)));
        c.tags = std::make_shared<const TagRuleSet>(
            TagRuleSet::from_json_text(res.text("strategy_tags", defaults::strategy_tags_json)));

        const auto& ctx = section("context");
        read_opt(ctx, "kind", c.context.kind);
        if (ctx.contains("fixtures_dir")) c.context.fixtures_dir = res.path(ctx.at("fixtures_dir").get<std::string>());
        if (ctx.contains("http")) c.context.http = feed_from_json(ctx.at("http"));
        read_opt(ctx, "timeout_s", c.context.timeout_s);
        read_opt(ctx, "ttl_s", c.context.ttl_s);
        c.bots.providers = c.context.providers();

        const auto& sim = section("simulation");
        read_opt(sim, "start_epoch", c.start_epoch);
        read_opt(sim, "game_spacing", c.game_spacing);
        if (sim.contains("agents"))
            for (const auto& a : sim.at("agents")) c.agents.push_back(agent_from_json(a));
        if (c.agents.empty()) c.agents.push_back(AgentScript{});

        const auto& srv = section("server");
        if (srv.contains("store")) c.server.store = res.path(srv.at("store").get<std::string>());
        read_opt(srv, "tick_s", c.server.tick_s);
        read_opt(srv, "timersync_s", c.server.timersync_s);
        read_opt(srv, "bot_margin_s", c.server.bot_margin_s);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw InvalidConfig(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

PlatformConfig PlatformConfig::load(const fs::path& file) {
    return from_json_text(read_text(file), file.parent_path().empty() ? fs::path(".") : file.parent_path());
}

PlatformConfig PlatformConfig::defaults() {
    return from_json_text(std::string(defaults::config_json), std::nullopt);
}

SimulationConfig PlatformConfig::simulation(std::size_t n_games, std::uint64_t seed) const {
    SimulationConfig s;
    s.n_games = n_games;
    s.seed = seed;
    s.session = session;
    s.match = match;
    s.bots = bots;
    s.bot_delay = bot_delay;
    s.behavior = behavior;
    s.moderation = moderation;
    s.agents = agents;
    s.start_epoch = start_epoch;
    s.game_spacing = game_spacing;
    return s;
}

}  // namespace hon
