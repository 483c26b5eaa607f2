#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "hon/analytics.hpp"
#include "hon/bot.hpp"
#include "hon/config.hpp"
#include "hon/defaults.hpp"
#include "hon/error.hpp"
#include "hon/frames.hpp"
#include "hon/gateway.hpp"
#include "hon/moderation.hpp"
#include "hon/persona.hpp"
#include "hon/simulator.hpp"
#include "hon/store.hpp"

namespace py = pybind11;
using namespace hon;

namespace {

PlatformConfig load_config(const std::optional<std::string>& path) {
    return path ? PlatformConfig::load(*path) : PlatformConfig::defaults();
}

std::vector<std::string> to_lines(const Corpus& c) {
    std::vector<std::string> out;
    out.reserve(c.records.size());
    for (const auto& r : c.records) out.push_back(to_json_line(r));
    return out;
}

Corpus corpus_from_lines(const std::vector<std::string>& lines, bool strict) {
    std::stringstream ss;
    for (const auto& l : lines) ss << l << '\n';
    return ingest_stream(ss, strict, "python");
}

std::vector<std::string> tag_names(const TagSet& s) {
    std::vector<std::string> out;
    for (auto t : all_tags())
        if (s.test(static_cast<std::size_t>(t))) out.emplace_back(to_string(t));
    return out;
}

StrategyTag parse_tag(const std::string& s) {
    if (auto t = tag_from_string(s)) return *t;
    throw InvalidConfig("unknown strategy tag " + s);
}

Kind parse_kind(const std::string& s) {
    if (s == "Bot") return Kind::Bot;
    if (s == "Human") return Kind::Human;
    throw InvalidConfig("partner must be Bot or Human, got " + s);
}

Side parse_side(const std::string& s) {
    if (s == "Guesser") return Side::Guesser;
    if (s == "Partner") return Side::Partner;
    throw InvalidConfig("side must be Guesser or Partner, got " + s);
}

using Sent = std::vector<std::pair<ConnectionId, std::string>>;

Sent encode_all(const std::vector<Outbound>& out) {
    Sent s;
    s.reserve(out.size());
    for (const auto& o : out) s.emplace_back(o.to, encode_frame(o.frame));
    return s;
}

// GatewayCore together with the store it writes to.
struct PyGateway {
    PyGateway(const std::filesystem::path& store_path, std::uint64_t seed, const std::optional<std::string>& config)
        : store(std::make_shared<RecordStore>(store_path)),
          core(load_config(config), store, GatewayCore::Options{seed, false, seed == 0}) {}

    std::shared_ptr<RecordStore> store;
    GatewayCore core;
};

}  // namespace

PYBIND11_MODULE(_hon, m) {
    m.doc() = "Human or Not: sessions, bots, simulation and analytics";

    // HonError(code, message)
    PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> hon_error;
    hon_error.call_once_and_store_result([&] { return py::object(py::exception<Error>(m, "HonError")); });
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::tuple args = py::make_tuple(e.code(), e.what());
            PyErr_SetObject(hon_error.get_stored().ptr(), args.ptr());
        }
    });

    m.def(
        "assemble_prompt",
        [](std::uint64_t seed, const std::optional<std::string>& template_id, const std::optional<std::string>& snapshot,
           double at) {
            auto catalog = PersonaCatalog::from_json_text(std::string(defaults::personas_json));
            if (template_id) {
                std::erase_if(catalog.templates, [&](const PersonaTemplate& t) { return t.id != *template_id; });
                if (catalog.templates.empty()) throw InvalidConfig("no persona template with id " + *template_id);
            }
            Rng rng(seed);
            const Persona persona = sample_persona(catalog, rng);
            ContextSnapshot snap;
            if (snapshot) {
                snap = load_fixture_snapshot(*snapshot);
            } else {
                snap.city = persona.location.city;
                snap.local_date = format_local_date(at, persona.location.utc_offset_minutes);
                snap.local_time = format_local_time(at, persona.location.utc_offset_minutes);
            }
            return assemble_prompt(persona, snap, GameFraming::standard()).text();
        },
        py::arg("seed") = 0, py::arg("template_id") = std::nullopt, py::arg("snapshot") = std::nullopt,
        py::arg("at") = 1685474880.0, "Sample a persona and render its full prompt.");

    m.def(
        "simulate",
        [](std::size_t games, std::uint64_t seed, const std::optional<std::string>& config) {
            const auto result = [&] {
                py::gil_scoped_release release;
                return run_simulation(load_config(config).simulation(games, seed));
            }();
            return to_lines(result.corpus);
        },
        py::arg("games"), py::arg("seed") = 0, py::arg("config") = std::nullopt,
        "Simulate games and return the corpus as JSON lines.");

    m.def(
        "analyze",
        [](const std::vector<std::string>& lines, bool strict, const std::string& format) {
            if (format != "json" && format != "table") throw InvalidConfig("format must be json or table");
            const auto corpus = corpus_from_lines(lines, strict);
            const auto rules = TagRuleSet::builtin();
            const auto report = compute_report(corpus, tag_corpus(corpus, rules), Grouping{}, rules.version());
            return export_report(report, format == "json" ? ReportFormat::Json : ReportFormat::Table);
        },
        py::arg("lines"), py::arg("strict") = false, py::arg("format") = "json",
        "Guess-accuracy report for a corpus given as JSON lines.");

    m.def(
        "planted_corpus",
        [](const std::vector<py::dict>& groups, std::uint64_t seed) {
            PlantedCorpusSpec spec;
            for (const auto& g : groups) {
                PlantedGroup pg;
                pg.partner = parse_kind(g["partner"].cast<std::string>());
                if (g.contains("tag") && !g["tag"].is_none()) pg.tag = parse_tag(g["tag"].cast<std::string>());
                if (g.contains("side")) pg.side = parse_side(g["side"].cast<std::string>());
                pg.n = g["n"].cast<std::uint64_t>();
                pg.k = g["k"].cast<std::uint64_t>();
                spec.groups.push_back(pg);
            }
            return to_lines(make_planted_corpus(spec, seed));
        },
        py::arg("groups"), py::arg("seed") = 0,
        "Corpus with exact per-group counts; groups are dicts with partner, n, k and optional tag and side.");

    m.def(
        "tag_record",
        [](const std::string& line) {
            const auto tags = tag_strategies(record_from_json_line(line), TagRuleSet::builtin());
            return std::map<std::string, std::vector<std::string>>{{"guesser", tag_names(tags.guesser)},
                                                                   {"partner", tag_names(tags.partner)}};
        },
        py::arg("line"), "Strategy tags of one record, per side.");

    m.def("wilson_interval", &wilson_interval, py::arg("k"), py::arg("n"), py::arg("z") = 1.96);

    m.def(
        "screen",
        [](const std::string& text) -> std::optional<std::pair<std::string, std::string>> {
            static const auto rules = RuleSet::from_json_text(std::string(defaults::moderation_json));
            const auto v = rules.screen(text);
            if (!v.flagged) return std::nullopt;
            return std::make_pair(v.category, v.matched_rule.value_or(""));
        },
        py::arg("text"), "(category, rule id) when the built-in rules flag the text, else None.");

    m.def(
        "compute_delay",
        [](const std::string& text, std::uint64_t seed) {
            Rng rng(seed);
            return compute_delay(text, PlatformConfig::defaults().bot_delay, rng);
        },
        py::arg("text"), py::arg("seed") = 0, "Bot typing delay in seconds under the default model.");

    m.def(
        "normalize_frame", [](const std::string& text) { return encode_frame(decode_frame(text)); }, py::arg("text"),
        "Decode and re-encode one wire frame.");

    py::class_<PyGateway>(m, "Gateway")
        .def(py::init<const std::filesystem::path&, std::uint64_t, const std::optional<std::string>&>(),
             py::arg("store"), py::arg("seed") = 0, py::arg("config") = std::nullopt)
        .def("connect", [](PyGateway& g, ConnectionId id, double now) { return encode_all(g.core.connect(id, now)); })
        .def("disconnect",
             [](PyGateway& g, ConnectionId id, double now) { return encode_all(g.core.disconnect(id, now)); })
        .def("send", [](PyGateway& g, ConnectionId id, const std::string& text,
                        double now) { return encode_all(g.core.handle_text(id, text, now)); })
        .def("tick", [](PyGateway& g, double now) { return encode_all(g.core.tick(now)); })
        .def_property_readonly("queued", [](const PyGateway& g) { return g.core.queued(); })
        .def_property_readonly("active_sessions", [](const PyGateway& g) { return g.core.active_sessions(); })
        .def_property_readonly("completed_sessions", [](const PyGateway& g) { return g.core.completed_sessions(); })
        .def("counters", [](const PyGateway& g, const std::string& token) {
            const auto c = g.store->counters(token);
            return std::make_pair(c.games, c.correct);
        });
}
