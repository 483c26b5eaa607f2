#include <doctest.h>

#include <fstream>
#include <set>

#include "../support/gateway_harness.hpp"
#include "hon/error.hpp"
#include "hon/store.hpp"

using namespace hon;

namespace {

ConversationRecord rec(const std::string& session, const std::string& token, Kind partner, Verdict v) {
    ConversationRecord r;
    r.session_id = session;
    r.guesser_token = token;
    r.partner_kind = partner;
    r.verdict = v;
    r.correct = guess_correct(v, partner);
    r.end_reason = {EndKind::TimeUp, std::nullopt};
    r.started_at = 10;
    r.ended_at = 150;
    r.transcript = {{Slot::A, "hi", 1.0}};
    if (partner == Kind::Bot) r.bot = BotMetadata{"p", "scripted", "plain"};
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("append assigns monotone ids and keeps counters") {
    const auto dir = testing::fresh_temp_dir("store_basic");
    const auto path = dir / "records.jsonl";
    {
        RecordStore store(path);
        CHECK(store.last_record_number() == 0);
        CHECK(store.next_session_number() == 1);
        const auto ids = store.append({rec("s0000000001", "t1", Kind::Bot, Verdict::Bot),
                                       rec("s0000000001", "t2", Kind::Human, Verdict::Bot)});
        CHECK(ids == std::vector<std::string>{"r0000000001", "r0000000002"});
        CHECK(store.counters("t1") == LifetimeCounters{1, 1});
        CHECK(store.counters("t2") == LifetimeCounters{1, 0});
        CHECK(store.counters("nobody") == LifetimeCounters{});
        CHECK(store.next_session_number() == 2);
        store.append({rec("s0000000002", "t1", Kind::Human, Verdict::Abstain)});
        CHECK(store.counters("t1") == LifetimeCounters{2, 1});
    }
    RecordStore reopened(path);
    CHECK(reopened.last_record_number() == 3);
    CHECK(reopened.next_session_number() == 3);
    CHECK(reopened.counters("t1") == LifetimeCounters{2, 1});
    CHECK(reopened.append({rec("s0000000003", "t3", Kind::Bot, Verdict::Human)}).front() == "r0000000004");

    const auto recomputed = RecordStore::recompute(path);
    CHECK(recomputed.at("t1") == LifetimeCounters{2, 1});
    CHECK(recomputed.at("t3") == LifetimeCounters{1, 0});
    CHECK(ingest(path, true).records.size() == 4);
    std::filesystem::remove_all(dir);
}

TEST_CASE("a crash-torn tail is cut on open") {
    const auto dir = testing::fresh_temp_dir("store_tail");
    const auto path = dir / "records.jsonl";
    {
        RecordStore store(path);
        store.append({rec("s0000000001", "t", Kind::Bot, Verdict::Bot)});
    }
    const std::string intact = slurp(path);
    const std::string torn = "{\"schema_version\":1,\"record_id\":\"r00000";
    std::ofstream(path, std::ios::app) << torn;
    RecordStore store(path);
    CHECK(store.recovered_bytes() == torn.size());
    CHECK(slurp(path) == intact);
    store.append({rec("s0000000002", "t", Kind::Bot, Verdict::Bot)});
    CHECK(ingest(path, true).records.size() == 2);
    CHECK(store.counters("t") == LifetimeCounters{2, 2});
    std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent appends produce whole lines and unique ids") {
    const auto dir = testing::fresh_temp_dir("store_threads");
    const auto path = dir / "records.jsonl";
    RecordStore store(path);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&, t] {
            for (int i = 0; i < 50; ++i) store.append({rec("s" + std::to_string(t), "tok" + std::to_string(t), Kind::Bot, Verdict::Bot)});
        });
    for (auto& th : threads) th.join();
    const auto c = ingest(path, true);
    REQUIRE(c.records.size() == 200);
    std::set<std::string> ids;
    for (const auto& r : c.records) ids.insert(r.record_id);
    CHECK(ids.size() == 200);
    for (int t = 0; t < 4; ++t) CHECK(store.counters("tok" + std::to_string(t)) == LifetimeCounters{50, 50});
    std::filesystem::remove_all(dir);
}

TEST_CASE("a full device raises StorageFull") {
    if (!std::filesystem::exists("/dev/full")) return;
    RecordStore store("/dev/full");
    CHECK_THROWS_AS(store.append({rec("s1", "t", Kind::Bot, Verdict::Bot)}), StorageFull);
    CHECK(store.counters("t") == LifetimeCounters{});
}
