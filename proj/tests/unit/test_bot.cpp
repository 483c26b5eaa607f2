#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <thread>

#include "hon/bot.hpp"
#include "hon/defaults.hpp"
#include "hon/error.hpp"
#include "hon/runtime.hpp"
#include "hon/text.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace hon;

namespace {

const std::vector<std::string> kStops = {"User:"};

struct FixedBackend : BotBackend {
    explicit FixedBackend(std::string reply) : reply(std::move(reply)) {}
    std::string complete(const std::string&, std::span<const std::string>, std::size_t) override {
        ++calls;
        return reply;
    }
    const std::string& name() const override { return name_; }
    std::string reply;
    int calls = 0;
    std::string name_ = "fixed";
};

struct ThrowingBackend : BotBackend {
    std::string complete(const std::string&, std::span<const std::string>, std::size_t) override {
        throw std::runtime_error("connection refused");
    }
    const std::string& name() const override { return name_; }
    std::string name_ = "down";
};

struct FlagEverything : ModerationService {
    ModerationVerdict screen(const std::string&) override { return {true, "test", std::string("all")}; }
};

std::vector<ChatMessage> partner_says(std::vector<std::string> lines) {
    std::vector<ChatMessage> out;
    Seconds t = 1;
    for (auto& l : lines) {
        out.push_back({Slot::A, std::move(l), t});
        out.push_back({Slot::B, "ok", t + 1});
        t += 3;
    }
    out.pop_back();
    return out;
}

std::string random_text(Rng& rng, std::size_t max_cp) {
    static const std::vector<std::string> pool = {"a", "B", "z", " ", "  ", ".", "!", "'", "\xC3\xA9", "\xC3\x97",
                                                  "\xF0\x9F\x98\x82", "\xD0\xB4", "\xE4\xB8\xAD", "\t", "\n", "Q"};
    std::string s;
    const auto n = 1 + rng.below(max_cp);
    for (std::uint64_t i = 0; i < n; ++i) s += pool[rng.below(pool.size())];
    return s;
}

BotProfile profile_with(std::shared_ptr<BotBackend> backend) {
    BotProfile p;
    p.persona.name = "Henry";
    p.persona.occupation = "vet";
    p.persona.location = {"Honolulu", "HI", -600};
    p.prompt = assemble_prompt(p.persona, ContextSnapshot{}, GameFraming::standard());
    p.backend = std::move(backend);
    return p;
}

}  // namespace

TEST_CASE("decide_behavior") {
    BehaviorPolicy policy;
    const auto varied = partner_says({"hi where are you from", "do you like pizza", "what's your job"});
    CHECK_FALSE(decide_behavior(varied, Slot::B, policy, ModerationVerdict::clean()).has_value());
    CHECK(decide_behavior(varied, Slot::B, policy, {true, "hate", std::string("hate-1")}) == ExitReason::Offense);

    const auto same = partner_says({"are you a bot", "are you a bot", "are you a bot"});
    CHECK(decide_behavior(same, Slot::B, policy, ModerationVerdict::clean()) == ExitReason::Repetition);
    CHECK(repetition_ratio(std::vector<std::string>{"abcdef", "abcdef", "abcdef"}, 4) == 1.0);

    // Two repeats are not enough for a window of three.
    CHECK_FALSE(decide_behavior(partner_says({"are you a bot", "are you a bot"}), Slot::B, policy,
                                ModerationVerdict::clean())
                    .has_value());

    BehaviorPolicy lenient;
    lenient.exit_on_offense = false;
    lenient.exit_on_repetition = false;
    CHECK_FALSE(decide_behavior(same, Slot::B, lenient, {true, "hate", std::string("hate-1")}).has_value());

    CHECK_THROWS_AS([] { BehaviorPolicy p; p.threshold = 0; p.validate(); }(), InvalidConfig);
    CHECK_THROWS_AS([] { BehaviorPolicy p; p.threshold = 1.1; p.validate(); }(), InvalidConfig);
}

TEST_CASE("generate_reply with the echo and scripted backends") {
    EchoBackend echo;
    const std::string prompt = "context\n##\nUser: where do you live\nHenry: Honolulu\nUser: nice weather?\nHenry:";
    CHECK(generate_reply(prompt, echo, kStops) == "nice weather?");

    ScriptedBackend scripted({"first", "second", "third"});
    CHECK(generate_reply(prompt, scripted, kStops) == "first");
    CHECK(generate_reply(prompt, scripted, kStops) == "second");
    CHECK(generate_reply(prompt, scripted, kStops) == "third");
    CHECK(generate_reply(prompt, scripted, kStops) == "first");
    CHECK(scripted.calls() == 4);
    CHECK_THROWS_AS(ScriptedBackend({}), InvalidConfig);
}

TEST_CASE("generate_reply trims at the stop marker and strips an echoed cue") {
    FixedBackend b("hey there\nUser: hi");
    CHECK(generate_reply("prompt\nHenry:", b, kStops) == "hey there");
    b.reply = "Henry: all good";
    CHECK(generate_reply("prompt\nHenry:", b, kStops) == "all good");
    b.reply = "  line one\n  line two  ";
    CHECK(generate_reply("prompt\nHenry:", b, kStops) == "line one line two");
}

TEST_CASE("empty completions retry twice, then fail") {
    FixedBackend b("   \nUser: anything");
    CHECK_THROWS_AS(generate_reply("p\nHenry:", b, kStops), EmptyCompletion);
    CHECK(b.calls == 3);
}

TEST_CASE("backend failures surface as BackendUnavailable with the backend name") {
    ThrowingBackend down;
    try {
        generate_reply("p\nHenry:", down, kStops);
        FAIL("expected BackendUnavailable");
    } catch (const BackendUnavailable& e) {
        CHECK(std::string(e.what()).find("down") != std::string::npos);
    }
}

TEST_CASE("stop-marker trimming never leaves the partner label") {
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        std::string raw = random_text(rng, 30);
        if (rng.bernoulli(0.5)) raw += (rng.bernoulli(0.5) ? "\n" : " ") + std::string("User: ") + random_text(rng, 10);
        FixedBackend b(raw);
        std::string out;
        try {
            out = generate_reply("p\nHenry:", b, kStops);
        } catch (const EmptyCompletion&) {
            continue;
        }
        CHECK(out.find("User:") == std::string::npos);
    }
}

TEST_CASE("apply_style rules") {
    Rng rng(1);
    const StyleSpec plain;
    CHECK(apply_style("Hello there, how are you?", plain, rng) == "Hello there, how are you?");

    StyleSpec s;
    s.slang = {{"do not", "dont"}};
    s.lowercase_all = true;
    CHECK(apply_style("I do not know", s, rng) == "i dont know");
    CHECK(apply_style("I DO NOT know", s, rng) == "i dont know");
    CHECK(apply_style("undo nothing", s, rng) == "undo nothing");

    StyleSpec drop;
    drop.drop_terminal_punctuation = true;
    CHECK(apply_style("fine thanks!!", drop, rng) == "fine thanks");

    StyleSpec emoji;
    emoji.emoji_rate = 1.0;
    emoji.emojis = {"\xF0\x9F\x98\x82"};
    CHECK(apply_style("lol", emoji, rng) == "lol \xF0\x9F\x98\x82");

    const std::string long_raw(140, 'x');
    const auto cut = apply_style(long_raw, plain, rng);
    CHECK(codepoint_count(cut) == 100u);

    // Cyrillic is filtered, emoji survive.
    CHECK(apply_style("hi \xD0\xB4\xD0\xB0 \xF0\x9F\x99\x82", plain, rng) == "hi  \xF0\x9F\x99\x82");
}

TEST_CASE("typos are reproducible and keep the first letter") {
    StyleSpec s;
    s.typo_rate = 1.0;
    Rng a(7), b(7);
    const std::string raw = "whatever happens tomorrow morning";
    const auto x = apply_style(raw, s, a);
    CHECK(x == apply_style(raw, s, b));
    CHECK(x != raw);
    CHECK(x.front() == 'w');
}

TEST_CASE("the all-zero style is a fixed point for legal text") {
    Rng rng(99);
    const StyleSpec plain;
    const auto cs = Charset::latin_and_emoji();
    int checked = 0;
    for (int i = 0; i < 2000; ++i) {
        std::string t;
        for (char c : random_text(rng, 100))
            if (c != '\t' && c != '\n') t += c;
        t = cs.filter(t);
        if (t.empty() || *codepoint_count(t) > 100) continue;
        ++checked;
        CHECK(apply_style(t, plain, rng) == t);
    }
    CHECK(checked > 200);
}

TEST_CASE("styled output always passes the message length and charset checks") {
    const auto styles = styles_from_json_text(std::string(defaults::styles_json));
    REQUIRE(styles.size() >= 3);
    auto cfg = SessionConfig{};
    Rng rng(2024);
    for (int i = 0; i < 3000; ++i) {
        auto it = styles.begin();
        std::advance(it, static_cast<long>(rng.below(styles.size())));
        const auto out = apply_style(random_text(rng, 160), it->second, rng);
        if (trim(out).empty()) continue;
        auto session = GameSession::create(cfg, {"b", Kind::Bot, Slot::A}, {"h", Kind::Human, Slot::B}, Slot::A);
        const auto reject = session.validate_message(Slot::A, out, 1.0);
        CHECK_MESSAGE(!reject.has_value(), out);
    }
}

TEST_CASE("compute_delay examples") {
    Rng rng(3);
    DelayModel m;
    m.base_latency = 1.0;
    m.jitter_sd = 0.0;
    CHECK(compute_delay("", m, rng) == 1.0);
    m.per_char = 0.15;
    CHECK(compute_delay(std::string(40, 'a'), m, rng) == doctest::Approx(7.0).epsilon(1e-12));
    m.per_char = 0.25;
    m.hard_cap = 18.0;
    CHECK(compute_delay(std::string(100, 'a'), m, rng) == 18.0);
    // Length is counted in codepoints.
    m.per_char = 0.1;
    CHECK(compute_delay("\xF0\x9F\x98\x82\xF0\x9F\x98\x82", m, rng) == doctest::Approx(1.2));
}

TEST_CASE("compute_delay stays within [0, hard_cap]") {
    Rng rng(8);
    for (int i = 0; i < 20000; ++i) {
        DelayModel m;
        m.base_latency = rng.uniform01() * 5;
        m.per_char = rng.uniform01() * 0.5;
        m.jitter_sd = rng.uniform01() * 10;
        m.hard_cap = rng.uniform01() * 19.9;
        const auto d = compute_delay(std::string(rng.below(101), 'x'), m, rng);
        CHECK(d >= 0.0);
        CHECK(d <= m.hard_cap);
    }
    DelayModel bad;
    bad.hard_cap = 20;
    CHECK_THROWS_AS(bad.validate(20), InvalidConfig);
    CHECK_NOTHROW(DelayModel{}.validate(20));
}

TEST_CASE("bot_next_action") {
    BotToolkit kit;
    kit.moderation = std::make_shared<LocalModeration>(
        std::make_shared<RuleSet>(RuleSet::from_json_text(std::string(defaults::moderation_json))));
    Rng rng(4);
    const auto hi = partner_says({"hi"});

    SUBCASE("a scripted reply with a delay") {
        auto p = profile_with(std::make_shared<ScriptedBackend>(std::vector<std::string>{"hey, what's up"}));
        const auto a = bot_next_action(p, kit, hi, Slot::B, {}, rng);
        REQUIRE(std::holds_alternative<BotReply>(a));
        CHECK(std::get<BotReply>(a).text == "hey, what's up");
        CHECK(std::get<BotReply>(a).delay <= kit.delay.hard_cap);
        CHECK(std::get<BotReply>(a).regenerations == 0);
    }
    SUBCASE("the starter opens verbatim") {
        auto p = profile_with(std::make_shared<ScriptedBackend>(std::vector<std::string>{"unused"}));
        p.starter = "what's your favorite movie?";
        const auto a = bot_next_action(p, kit, {}, Slot::B, {}, rng);
        CHECK(std::get<BotReply>(a).text == "what's your favorite movie?");
    }
    SUBCASE("a flagged draft is regenerated") {
        auto p = profile_with(
            std::make_shared<ScriptedBackend>(std::vector<std::string>{"kill yourself", "sorry, hello"}));
        const auto a = bot_next_action(p, kit, hi, Slot::B, {}, rng);
        REQUIRE(std::holds_alternative<BotReply>(a));
        CHECK(std::get<BotReply>(a).text == "sorry, hello");
        CHECK(std::get<BotReply>(a).regenerations == 1);
    }
    SUBCASE("three flagged drafts make the bot leave") {
        auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{"kys"});
        auto p = profile_with(backend);
        const auto a = bot_next_action(p, kit, hi, Slot::B, {}, rng);
        REQUIRE(std::holds_alternative<BotExitAction>(a));
        CHECK(std::get<BotExitAction>(a).reason == ExitReason::ModerationExhausted);
        CHECK(backend->calls() == 3);
    }
    SUBCASE("an external service flagging everything also exhausts retries") {
        kit.moderation = std::make_shared<FlagEverything>();
        auto p = profile_with(std::make_shared<ScriptedBackend>(std::vector<std::string>{"hello"}));
        CHECK(std::get<BotExitAction>(bot_next_action(p, kit, hi, Slot::B, {}, rng)).reason ==
              ExitReason::ModerationExhausted);
    }
    SUBCASE("a dead backend means a BackendFailure exit") {
        auto p = profile_with(std::make_shared<ThrowingBackend>());
        CHECK(std::get<BotExitAction>(bot_next_action(p, kit, hi, Slot::B, {}, rng)).reason ==
              ExitReason::BackendFailure);
    }
    SUBCASE("an offensive partner makes the bot leave before any call") {
        auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{"hello"});
        auto p = profile_with(backend);
        CHECK(std::get<BotExitAction>(bot_next_action(p, kit, hi, Slot::B, {true, "hate", std::string("hate-3")}, rng))
                  .reason == ExitReason::Offense);
        CHECK(backend->calls() == 0);
    }
}

TEST_CASE("backend registry picks by weight") {
    BackendRegistry reg;
    CHECK_THROWS_AS(reg.pick(*std::make_unique<Rng>(1)), InvalidConfig);
    reg.add(std::make_shared<EchoBackend>("a"), 1.0);
    reg.add(std::make_shared<EchoBackend>("b"), 3.0);
    CHECK_THROWS_AS(reg.add(std::make_shared<EchoBackend>("c"), 0.0), InvalidConfig);
    Rng rng(12);
    int b = 0;
    for (int i = 0; i < 10000; ++i) b += reg.pick(rng)->name() == "b";
    CHECK(std::abs(b / 10000.0 - 0.75) < 0.02);
    CHECK(reg.find("a")->name() == "a");
    CHECK(reg.find("zzz") == nullptr);

    BackendSpec spec;
    spec.name = "s";
    spec.kind = "bogus";
    CHECK_THROWS_AS(make_backend(spec), InvalidConfig);
}

TEST_CASE("the HTTP backend posts the prompt and reads the completion") {
    httplib::Server server;
    nlohmann::json last;
    std::string auth;
    int status = 200;
    server.Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
        last = nlohmann::json::parse(req.body);
        auth = req.get_header_value("Authorization");
        res.status = status;
        res.set_content(R"({"choices":[{"text":" sure thing\nUser: next"}]})", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackendConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/complete";
    cfg.model = "small-1";
    cfg.response_pointer = "/choices/0/text";
    cfg.auth_env = "HON_TEST_TOKEN";
    cfg.timeout_s = 2.0;
    ::setenv("HON_TEST_TOKEN", "secret", 1);
    HttpBackend backend(cfg, "remote");
    CHECK(generate_reply("p\nHenry:", backend, kStops) == "sure thing");
    CHECK(last["prompt"] == "p\nHenry:");
    CHECK(last["stop"] == nlohmann::json::array({"User:"}));
    CHECK(last["max_tokens"].is_number());
    CHECK(last["model"] == "small-1");
    CHECK(auth == "Bearer secret");

    status = 503;
    CHECK_THROWS_AS(generate_reply("p\nHenry:", backend, kStops), BackendUnavailable);

    ::unsetenv("HON_TEST_TOKEN");
    status = 200;
    CHECK_THROWS_AS(generate_reply("p\nHenry:", backend, kStops), BackendUnavailable);

    server.stop();
    th.join();
    cfg.auth_env.clear();
    HttpBackend gone(cfg, "gone");
    CHECK_THROWS_AS(gone.complete("p", kStops, 100), BackendUnavailable);
}
