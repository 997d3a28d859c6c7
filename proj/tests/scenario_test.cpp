#include "dnp3lab/scenario.hpp"

#include <fmt/format.h>
#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace dnp3lab;
using namespace dnp3lab::scenario;

namespace {

std::string doc(const std::string& body) {
    return R"({"schema": "dnp3lab.scenario", "version": 1)" + (body.empty() ? "" : ", " + body) + "}";
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ScenarioErrc code_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
    try {
        parse(text, overrides);
    } catch (const ScenarioError& e) {
        return e.code();
    }
    ADD_FAILURE() << "parse accepted " << text;
    return ScenarioErrc::Io;
}

std::vector<std::string> diagnostics_of(const std::string& text) {
    try {
        parse(text);
    } catch (const ScenarioError& e) {
        return e.diagnostics();
    }
    return {};
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("dnp3lab_scenario_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

const std::string kShort = doc(R"("name": "short", "use_case": 2, "outstations": 2, "polling_interval_s": 5,
    "run_duration_s": 60, "attack_start_s": 20, "attack_stop_s": 40, "cross_traffic_hz": 1)");

}  // namespace

TEST(ScenarioParse, DefaultsFromMinimalDocument) {
    auto c = parse(doc(""));
    EXPECT_EQ(c.use_case, 0);
    EXPECT_EQ(c.outstations, 5);
    EXPECT_DOUBLE_EQ(c.run_duration_s, 480.0);
    EXPECT_DOUBLE_EQ(c.attack_start_s, 120.0);
    EXPECT_DOUBLE_EQ(c.attack_stop_s, 420.0);
    EXPECT_FALSE(c.adversary);
    EXPECT_EQ(c.script.to_json(), default_script().to_json());
}

TEST(ScenarioParse, AttackUseCaseGetsDefaultAdversary) {
    auto c = parse(doc(R"("use_case": 3)"));
    ASSERT_TRUE(c.adversary);
    EXPECT_TRUE(c.adversary->masking);
    EXPECT_EQ(c.adversary->queue_limit, 64u);
}

TEST(ScenarioParse, StopBeforeStartIsConfigInvalid) {
    EXPECT_EQ(code_of(doc(R"("attack_start_s": 200, "attack_stop_s": 100)")), ScenarioErrc::ConfigInvalid);
}

TEST(ScenarioParse, AttackWindowBeyondRunIsConfigInvalid) {
    EXPECT_EQ(code_of(doc(R"("run_duration_s": 300)")), ScenarioErrc::ConfigInvalid);
}

TEST(ScenarioParse, UseCaseZeroRejectsAdversaryBlock) {
    auto d = diagnostics_of(doc(R"("use_case": 0, "adversary": {"masking": false})"));
    ASSERT_EQ(d.size(), 1u);
    EXPECT_NE(d[0].find("adversary"), std::string::npos);
}

TEST(ScenarioParse, MissingHeaderRejected) {
    EXPECT_EQ(code_of(R"({"use_case": 1})"), ScenarioErrc::ConfigInvalid);
    EXPECT_EQ(code_of(R"({"schema": "dnp3lab.scenario", "version": 2})"), ScenarioErrc::ConfigInvalid);
}

TEST(ScenarioParse, OneDiagnosticPerOffendingField) {
    auto d = diagnostics_of(doc(R"("use_case": 9, "outstations": "many", "bogus": 1, "polling_interval_s": -1)"));
    EXPECT_EQ(d.size(), 4u);
}

TEST(ScenarioParse, MalformedJsonIsConfigInvalid) {
    EXPECT_EQ(code_of("{"), ScenarioErrc::ConfigInvalid);
    EXPECT_EQ(code_of("[]"), ScenarioErrc::ConfigInvalid);
}

TEST(ScenarioParse, OverridesApplyBeforeValidation) {
    auto c = parse(doc(R"("use_case": 2)"), {"adversary.forged_setpoint=35.5", "outstations=3", "name=tuned"});
    EXPECT_EQ(c.outstations, 3);
    EXPECT_EQ(c.name, "tuned");
    EXPECT_FLOAT_EQ(c.adversary->forged_setpoint, 35.5f);
    EXPECT_EQ(code_of(doc(""), {"attack_stop_s=10"}), ScenarioErrc::ConfigInvalid);
    EXPECT_EQ(code_of(doc(""), {"no-equals"}), ScenarioErrc::ConfigInvalid);
}

TEST(ScenarioParse, DelaysAndModPoints) {
    auto c = parse(doc(R"("use_case": 3, "outstations": 4, "adversary": {
        "delays_ms": {"READ_RESPONSE": 50},
        "mod_points": [{"outstation": 1, "type": "AI", "index": 0, "value": 5},
                       {"outstation": "all", "type": "BI", "index": 3, "value": 1}]})"));
    EXPECT_DOUBLE_EQ(c.adversary->delays.mean(mitm::PacketClass::ReadResponse), 50.0);
    ASSERT_EQ(c.adversary->mod_points.size(), 2u);
    auto ac = c.adversary_config();
    EXPECT_EQ(ac.mod_points[0].outstation, Testbed::outstation_address(1));
    EXPECT_FALSE(ac.mod_points[1].outstation);
    EXPECT_EQ(code_of(doc(R"("use_case": 3, "outstations": 2, "adversary": {"mod_points": [{"outstation": 2}]})")),
              ScenarioErrc::ConfigInvalid);
}

TEST(ScenarioParse, ExplicitWhitelist) {
    auto c = parse(doc(R"("ids": {"whitelist": [{"ip": "10.0.0.2", "mac": "02:00:00:00:00:a2"}]})"));
    ASSERT_EQ(c.whitelist.size(), 1u);
    EXPECT_EQ(code_of(doc(R"("ids": {"whitelist": [{"ip": "nope"}]})")), ScenarioErrc::ConfigInvalid);
}

TEST(ScenarioParse, JsonRoundTrip) {
    auto c = parse(kShort);
    auto again = parse(to_json(c));
    EXPECT_EQ(to_json(again), to_json(c));
}

TEST(ScenarioLoad, MissingFileIsIo) {
    try {
        load("/nonexistent/scenario.json");
        FAIL();
    } catch (const ScenarioError& e) {
        EXPECT_EQ(e.code(), ScenarioErrc::Io);
    }
}

TEST(Fnv1a, KnownVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(ScenarioRun, ArtifactsAreByteIdenticalAcrossRuns) {
    auto c = parse(kShort);
    auto a = scratch("det_a");
    auto b = scratch("det_b");
    auto fa = write_artifacts(run(c), c, kShort, {}, a);
    auto fb = write_artifacts(run(c), c, kShort, {}, b);
    for (auto [pa, pb] : {std::pair{fa.capture, fb.capture}, {fa.alerts, fb.alerts}, {fa.metrics_json, fb.metrics_json},
                          {fa.metrics_text, fb.metrics_text}, {fa.manifest, fb.manifest}}) {
        auto x = slurp(pa);
        EXPECT_FALSE(x.empty()) << pa;
        EXPECT_EQ(x, slurp(pb)) << pa.filename();
    }
    EXPECT_EQ(fa.capture.filename(), "short.capture.jsonl");
}

TEST(ScenarioRun, SeedChangesCapture) {
    auto c = parse(kShort);
    auto d = c;
    d.seed = 99;
    auto x = run(c), y = run(d);
    bool differs = x.capture.size() != y.capture.size();
    for (std::size_t i = 0; !differs && i < x.capture.size(); ++i) differs = x.capture[i].ts != y.capture[i].ts;
    EXPECT_TRUE(differs);
}

TEST(ScenarioRun, ManifestRecordsProvenance) {
    auto c = parse(kShort, {"seed=7"});
    auto dir = scratch("manifest");
    auto f = write_artifacts(run(c), c, kShort, {"seed=7"}, dir);
    auto m = slurp(f.manifest);
    EXPECT_NE(m.find(fmt::format("{:016x}", fnv1a64(kShort))), std::string::npos);
    EXPECT_NE(m.find("\"seed=7\""), std::string::npos);
    EXPECT_NE(m.find("\"seed\": 7"), std::string::npos);
}

TEST(ScenarioRun, OnlyAttackRaisesArpAndCrcAlerts) {
    auto attack = run(parse(kShort));
    EXPECT_FALSE(attack.alerts.empty());
    EXPECT_FALSE(attack.adversary_events.empty());
    auto quiet = run(parse(kShort, {"use_case=0", "adversary=null"}));
    for (const auto& a : quiet.alerts)
        if (a.rule != ids::RuleId::R4) ADD_FAILURE() << ids::format_alert(a);
    EXPECT_TRUE(quiet.adversary_events.empty());
    EXPECT_EQ(quiet.mismatches, 0u);
}

TEST(Sweep, DefaultMatrixHasFourteenSortedCells) {
    auto cells = SweepMatrix{}.cells();
    ASSERT_EQ(cells.size(), 14u);
    EXPECT_TRUE(std::is_sorted(cells.begin(), cells.end()));
    for (const auto& c : cells) EXPECT_FALSE(c.use_case == 1 && c.outstations == 5);
    EXPECT_EQ(cells.front().name(), "UC1_10OS_30");
    EXPECT_EQ(cells.back().name(), "UC4_10OS_60");
}

TEST(Sweep, CellNaming) {
    EXPECT_EQ((Cell{2, 5, 30.0}.name()), "UC2_5OS_30");
    EXPECT_EQ((Cell{3, 10, 2.5}.name()), "UC3_10OS_2.5");
}

TEST(Sweep, ParseMatrix) {
    auto m = parse_sweep(R"({"schema": "dnp3lab.sweep", "version": 1, "use_cases": [2], "outstations": [3, 1],
        "polling_intervals_s": [5], "exclude": [], "base": {"run_duration_s": 30}})");
    auto cells = m.cells();
    ASSERT_EQ(cells.size(), 2u);
    EXPECT_EQ(cells[0].outstations, 1);
    EXPECT_THROW(parse_sweep(R"({"schema": "dnp3lab.sweep", "version": 1, "use_cases": [7]})"), ScenarioError);
}

TEST(Sweep, FailedCellYieldsFailureRow) {
    SweepMatrix m;
    m.use_cases = {0, 2};
    m.outstations = {1};
    m.polling_intervals_s = {5};
    m.exclude.clear();
    m.base = R"({"run_duration_s": 30, "attack_start_s": 10, "attack_stop_s": 20, "cross_traffic_hz": 0,
                 "adversary": {"masking": false}})";
    auto rows = sweep(m);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_FALSE(rows[0].ok);
    EXPECT_NE(rows[0].error.find("adversary"), std::string::npos);
    EXPECT_TRUE(rows[1].ok) << rows[1].error;
    auto table = sweep_table(rows);
    EXPECT_NE(table.find("UC0_1OS_5 "), std::string::npos);
    EXPECT_NE(table.find("FAILED"), std::string::npos);
    EXPECT_NE(sweep_json(rows).find("\"ok\": false"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Whole-pipeline properties over several seeds.

namespace {

double rate_of(int uc, int os, int interval, std::uint64_t seed) {
    auto c = parse(doc(""), {fmt::format("use_case={}", uc), fmt::format("outstations={}", os),
                             fmt::format("polling_interval_s={}", interval), fmt::format("seed={}", seed)});
    return run(c).report.retransmission.r_r.value_or(0.0);
}

}  // namespace

TEST(Properties, RetransmissionRateIsMonotoneInLoad) {
    for (std::uint64_t seed : {1, 2, 3}) {
        for (int uc = 1; uc <= 4; ++uc) {
            double r5_30 = rate_of(uc, 5, 30, seed), r5_60 = rate_of(uc, 5, 60, seed);
            double r10_30 = rate_of(uc, 10, 30, seed), r10_60 = rate_of(uc, 10, 60, seed);
            EXPECT_GE(r5_30, r5_60) << "seed " << seed << " UC" << uc;
            EXPECT_GE(r10_30, r10_60) << "seed " << seed << " UC" << uc;
            EXPECT_GE(r10_30, r5_30) << "seed " << seed << " UC" << uc;
            EXPECT_GE(r10_60, r5_60) << "seed " << seed << " UC" << uc;
        }
    }
}

TEST(Properties, RttSamplesAreCausalAndBoundedByRequests) {
    for (std::uint64_t seed : {1, 5}) {
        for (int uc : {0, 1, 3}) {
            auto c = parse(doc(""), {fmt::format("use_case={}", uc), "outstations=10", fmt::format("seed={}", seed)});
            auto r = run(c);
            std::size_t requests = 0;
            for (const auto& rec : r.capture)
                requests += rec.point == "master" && rec.direction == capture::Direction::Out && rec.has_payload() &&
                            !rec.retransmission;
            EXPECT_LE(r.report.rtt.samples.size(), requests);
            EXPECT_FALSE(r.report.rtt.samples.empty());
            for (const auto& s : r.report.rtt.samples) EXPECT_LT(s.request_ts, s.response_ts);
        }
    }
}

TEST(Properties, CompromisedMinutesHaveArpAlertsAndDirectOperates) {
    for (int uc = 1; uc <= 4; ++uc) {
        auto r = run(parse(doc(""), {fmt::format("use_case={}", uc), "outstations=5", "polling_interval_s=30"}));
        std::size_t compromised = 0;
        for (const auto& b : r.report.correlation) {
            if (!b.compromised) continue;
            ++compromised;
            auto in_minute = [&](sim::SimTime ts) { return ts.count() / 60'000'000 == b.minute; };
            bool arp = std::any_of(r.alerts.begin(), r.alerts.end(),
                                   [&](const auto& a) { return ids::is_arp_rule(a.rule) && in_minute(a.ts); });
            bool op = std::any_of(r.capture.begin(), r.capture.end(), [&](const auto& rec) {
                return rec.point == "router" && rec.direction == capture::Direction::In && rec.is_function(0x05) &&
                       in_minute(rec.ts);
            });
            EXPECT_TRUE(arp && op) << "UC" << uc << " minute " << b.minute;
        }
        EXPECT_GT(compromised, 0u);
    }
}

TEST(Properties, EveryAdversaryEmittedFrameValidates) {
    for (int uc = 1; uc <= 4; ++uc) {
        auto r = run(parse(doc(""), {fmt::format("use_case={}", uc), "outstations=5", "polling_interval_s=30"}));
        std::size_t emitted = 0;
        for (const auto& rec : r.capture) {
            if (rec.point != "adversary" || rec.direction != capture::Direction::Out || !rec.has_payload()) continue;
            ++emitted;
            ASSERT_TRUE(rec.dnp3) << rec.id;
            EXPECT_TRUE(rec.dnp3->crc_valid) << "UC" << uc << " record " << rec.id;
            EXPECT_NO_THROW(codec::decode_frame(rec.raw));
        }
        EXPECT_GT(emitted, 0u);
    }
}

TEST(Properties, SweepHasOneRowPerCell) {
    SweepMatrix m;
    m.use_cases = {2, 0};
    m.outstations = {1, 2};
    m.polling_intervals_s = {10};
    m.exclude = {{2, 2}};
    m.base = R"({"run_duration_s": 30, "attack_start_s": 10, "attack_stop_s": 20})";
    auto rows = sweep(m);
    auto cells = m.cells();
    ASSERT_EQ(rows.size(), cells.size());
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].cell, cells[i]);
}
