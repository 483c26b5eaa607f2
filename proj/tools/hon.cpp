#include <signal.h>

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <thread>

#include "hon/analytics.hpp"
#include "hon/config.hpp"
#include "hon/defaults.hpp"
#include "hon/error.hpp"
#include "hon/server.hpp"

namespace {

using namespace hon;

PlatformConfig load_config(const std::string& path) {
    return path.empty() ? PlatformConfig::defaults() : PlatformConfig::load(path);
}

double unix_now() {
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

int cmd_serve(const std::string& config_path, const std::string& listen, std::uint64_t seed) {
    auto options = parse_listen_address(listen);
    options.seed = seed;

    // Signals are taken synchronously on this thread; the server runs on its own.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    WebSocketServer server(load_config(config_path), options);
    std::thread io([&] { server.run(); });
    int sig = 0;
    sigwait(&set, &sig);
    spdlog::info("signal {}, shutting down", sig);
    server.stop();
    io.join();
    return 0;
}

int cmd_simulate(const std::string& config_path, std::size_t games, std::uint64_t seed, const std::string& out) {
    const auto config = load_config(config_path).simulation(games, seed);
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = run_simulation(config);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ofstream file;
    if (out != "-") {
        file.open(out, std::ios::binary | std::ios::trunc);
        if (!file) throw InvalidConfig("cannot write " + out);
    }
    std::ostream& os = out == "-" ? std::cout : file;
    for (const auto& r : result.corpus.records) os << to_json_line(r) << '\n';
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + out);

    std::cerr << result.summary.text();
    std::cerr << "elapsed_s: " << elapsed << '\n';
    return 0;
}

int cmd_analyze(const std::string& in, const std::string& report, bool strict, const std::string& rules_path) {
    const auto format = report == "json" ? ReportFormat::Json : ReportFormat::Table;
    const auto rules = rules_path.empty() ? TagRuleSet::builtin() : TagRuleSet::load(rules_path);
    Corpus corpus;
    if (in == "-") {
        corpus = ingest_stream(std::cin, strict, "stdin");
    } else {
        corpus = ingest(in, strict);
    }
    if (corpus.skipped > 0) spdlog::warn("skipped {} malformed line(s)", corpus.skipped);
    const auto tagged = tag_corpus(corpus, rules);
    const auto stats = compute_report(corpus, tagged, Grouping{}, rules.version());
    std::cout << export_report(stats, format);
    return 0;
}

int cmd_persona(const std::string& catalog_path, std::uint64_t seed, const std::string& snapshot_path,
                const std::string& template_id, double at) {
    auto catalog = catalog_path.empty() ? PersonaCatalog::from_json_text(std::string(defaults::personas_json))
                                        : PersonaCatalog::load(catalog_path);
    if (!template_id.empty()) {
        std::erase_if(catalog.templates, [&](const PersonaTemplate& t) { return t.id != template_id; });
        if (catalog.templates.empty()) throw InvalidConfig("no persona template with id " + template_id);
    }
    Rng rng(seed);
    const Persona persona = sample_persona(catalog, rng);

    ContextSnapshot snapshot;
    if (!snapshot_path.empty()) {
        snapshot = load_fixture_snapshot(snapshot_path);
    } else {
        const double now = at > 0 ? at : unix_now();
        snapshot.city = persona.location.city;
        snapshot.local_date = format_local_date(now, persona.location.utc_offset_minutes);
        snapshot.local_time = format_local_time(now, persona.location.utc_offset_minutes);
    }
    std::cout << assemble_prompt(persona, snapshot, GameFraming::standard()).text();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Human or Not: game server, simulator and analytics"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

    std::string config_path, listen = "127.0.0.1:8080";
    std::uint64_t seed = 0;
    auto* serve = app.add_subcommand("serve", "Run the websocket game server");
    serve->add_option("--config", config_path, "Platform config (JSON)");
    serve->add_option("--listen", listen, "host:port");
    serve->add_option("--seed", seed, "Server RNG seed (0 seeds from the system)");

    std::size_t games = 1000;
    std::string out = "-";
    auto* simulate = app.add_subcommand("simulate", "Simulate games and write a corpus");
    simulate->add_option("--config", config_path, "Platform config (JSON)");
    simulate->add_option("--games", games, "Number of games")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", seed, "Master seed");
    simulate->add_option("--out", out, "Corpus file ('-' for stdout)");

    std::string in, report = "table", rules_path;
    bool strict = false;
    auto* analyze = app.add_subcommand("analyze", "Report guess accuracy for a corpus");
    analyze->add_option("--in", in, "Corpus file ('-' for stdin)")->required();
    analyze->add_option("--report", report, "table|json")->check(CLI::IsMember({"table", "json"}));
    analyze->add_flag("--strict", strict, "Fail on the first malformed line");
    analyze->add_option("--rules", rules_path, "Strategy tag rules (JSON)");

    std::string catalog_path, snapshot_path, template_id;
    double at = 0.0;
    auto* persona = app.add_subcommand("persona", "Print an assembled bot prompt");
    persona->add_option("--catalog", catalog_path, "Persona catalog (JSON)");
    persona->add_option("--seed", seed, "Persona seed");
    persona->add_option("--snapshot", snapshot_path, "Context fixture file");
    persona->add_option("--template", template_id, "Restrict the draw to one template id");
    persona->add_option("--at", at, "Unix time for date and time when no snapshot is given");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_default_logger(spdlog::stderr_color_mt("hon"));
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*serve) return cmd_serve(config_path, listen, seed);
        if (*simulate) return cmd_simulate(config_path, games, seed, out);
        if (*analyze) return cmd_analyze(in, report, strict, rules_path);
        if (*persona) return cmd_persona(catalog_path, seed, snapshot_path, template_id, at);
    } catch (const hon::Error& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
