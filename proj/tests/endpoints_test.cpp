#include "dnp3lab/endpoints.hpp"
#include "dnp3lab/testbed.hpp"

#include <fmt/format.h>
#include <gtest/gtest.h>

#include <random>

using namespace dnp3lab;
using namespace dnp3lab::endpoints;
using namespace std::chrono_literals;

namespace {

TestbedConfig clean_config(int outstations, int interval_s) {
    TestbedConfig c;
    c.outstations = outstations;
    c.master.polling_interval = std::chrono::seconds(interval_s);
    c.with_adversary = false;
    return c;
}

std::vector<capture::CaptureRecord> master_requests(Testbed& tb, std::uint8_t fc) {
    std::vector<capture::CaptureRecord> out;
    for (const auto& r : tb.network.capture().records()) {
        if (r.point == "master" && r.direction == capture::Direction::Out && r.is_function(fc) && !r.retransmission)
            out.push_back(r);
    }
    return out;
}

void expect_snapshot_matches(const Testbed& tb, int os) {
    const auto& snap = tb.master->snapshot(os);
    auto truth = tb.outstations[os]->state().points();
    ASSERT_EQ(snap.size(), truth.size());
    for (const auto& p : truth) {
        auto it = snap.find({p.type, p.index});
        ASSERT_NE(it, snap.end());
        EXPECT_TRUE(it->second.same_reading(p)) << codec::to_string(p.type) << "[" << p.index << "]";
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Plant tables

TEST(OutstationState, TripMirrorsIntoBinaryInput) {
    OutstationState s({}, {480.0f});
    EXPECT_EQ(s.bi(7), kBreakerClosed);
    auto echo = s.operate_binary(7, codec::kControlTrip);
    EXPECT_EQ(echo.status, codec::kControlTrip);
    EXPECT_EQ(s.bo(7), codec::kControlTrip);
    EXPECT_EQ(s.bi(7), kBreakerOpen);
    s.operate_binary(7, codec::kControlClose);
    EXPECT_EQ(s.bi(7), kBreakerClosed);
}

TEST(OutstationState, UnknownIndexEchoesErrorStatus) {
    OutstationState s({}, {});
    EXPECT_EQ(s.operate_binary(10, codec::kControlClose).status, kStatusError);
    EXPECT_EQ(s.operate_analog(5, 10.0f).status, kStatusError);
    EXPECT_EQ(s.operate_binary(3, 0x42).status, kStatusError);
}

TEST(OutstationState, AnalogInputFollowsSetpointOnSettle) {
    OutstationState s({}, {480.0f, 350.0f});
    s.operate_analog(1, 20.0f);
    EXPECT_EQ(s.ao(1), 20.0f);
    EXPECT_EQ(s.ai(1), 350.0f);
    s.settle();
    EXPECT_EQ(s.ai(1), 20.0f);
}

TEST(Outstation, ReadReturnsEveryPoint) {
    Testbed tb(clean_config(1, 60));
    auto resp = tb.outstations[0]->handle(codec::build_read_request(4, 1));
    ASSERT_TRUE(resp);
    EXPECT_EQ(resp->app.function, codec::FunctionCode::SolicitedResponse);
    EXPECT_EQ(codec::parse_points(*resp).size(), 10u + 10u + 5u + 5u);
}

TEST(Outstation, DirectOperateTripEchoesTripStatus) {
    Testbed tb(clean_config(1, 60));
    auto resp = tb.outstations[0]->handle(codec::build_direct_operate_binary(4, 1, 7, codec::kControlTrip));
    ASSERT_TRUE(resp);
    auto pts = codec::parse_points(*resp);
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_EQ(pts[0].type, PointType::BO);
    EXPECT_EQ(pts[0].index, 7);
    EXPECT_EQ(pts[0].status, codec::kControlTrip);
    EXPECT_EQ(tb.outstations[0]->state().bo(7), codec::kControlTrip);
}

TEST(Outstation, UnknownIndexProducesErrorStatusResponse) {
    Testbed tb(clean_config(1, 60));
    auto resp = tb.outstations[0]->handle(codec::build_direct_operate_binary(4, 1, 42, codec::kControlClose));
    ASSERT_TRUE(resp);
    EXPECT_EQ(codec::parse_points(*resp)[0].status, kStatusError);
}

TEST(Outstation, ResponseEchoesApplicationSequence) {
    Testbed tb(clean_config(1, 60));
    auto req = codec::build_read_request(4, 1);
    req.app.app_control = codec::kAppFir | codec::kAppFin | 0x0B;
    EXPECT_EQ(tb.outstations[0]->handle(req)->app.app_sequence(), 0x0B);
}

// ---------------------------------------------------------------------------
// Master polling

TEST(Master, FivePollsPerOutstationInFiveMinutesAtSixtySeconds) {
    Testbed tb(clean_config(5, 60));
    tb.start(300s);
    tb.run_until(300s);
    EXPECT_EQ(master_requests(tb, 0x01).size(), 25u);
    std::map<int, std::vector<double>> per_os;
    for (const auto& e : tb.master->events())
        if (e.kind == MasterEventKind::PollSent) per_os[e.outstation].push_back(sim::to_ms(e.ts));
    ASSERT_EQ(per_os.size(), 5u);
    for (auto& [os, ts] : per_os) {
        ASSERT_EQ(ts.size(), 5u);
        for (std::size_t i = 1; i < ts.size(); ++i) EXPECT_DOUBLE_EQ(ts[i] - ts[i - 1], 60000.0);
    }
    EXPECT_EQ(tb.master->count(MasterEventKind::PollMissing), 0u);
}

TEST(Master, SnapshotEqualsOutstationTablesAfterCleanPoll) {
    Testbed tb(clean_config(3, 30));
    tb.start(61s);
    tb.run_until(61s);
    for (int os = 0; os < 3; ++os) expect_snapshot_matches(tb, os);
}

TEST(Master, ScriptedCloseAppearsOnTheWireAndMatches) {
    auto cfg = clean_config(2, 60);
    cfg.script = OperatorScript::parse(R"([{"name":"close7","trigger":{"at_s":120},
        "action":{"outstation":1,"type":"BO","index":7,"control":"close"}}])");
    Testbed tb(cfg);
    tb.start(180s);
    tb.run_until(180s);
    auto ops = master_requests(tb, 0x05);
    ASSERT_EQ(ops.size(), 1u);
    // Queued behind the poll issued at the same instant.
    EXPECT_GT(ops[0].ts_ms(), 120000.0);
    EXPECT_LT(ops[0].ts_ms(), 120100.0);
    EXPECT_NE(ops[0].dnp3->summary.find("BO[7]=0x41"), std::string::npos);
    ASSERT_EQ(tb.master->verdicts().size(), 1u);
    EXPECT_EQ(tb.master->verdicts()[0].verdict, Verdict::Match);
}

TEST(Master, NoTriggerMeansNoCommand) {
    Testbed tb(clean_config(2, 30));
    tb.start(200s);
    tb.run_until(200s);
    EXPECT_TRUE(master_requests(tb, 0x05).empty());
    EXPECT_TRUE(tb.master->verdicts().empty());
}

TEST(Master, LowReadingTriggersSetpointRestore) {
    auto cfg = clean_config(1, 30);
    cfg.script = OperatorScript::parse(R"([{"name":"restore","trigger":{"point":{"type":"AI","index":2,"op":"<","value":100}},
        "action":{"type":"AO","index":2,"value":"restore"}}])");
    Testbed tb(cfg);
    tb.start(200s);
    tb.network.events().schedule_at(45s, [&] { tb.outstations[0]->state().operate_analog(2, 20.0f); });
    tb.run_until(200s);
    ASSERT_EQ(tb.master->verdicts().size(), 1u);
    EXPECT_EQ(tb.master->verdicts()[0].command.value, 275.0f);
    EXPECT_EQ(tb.master->verdicts()[0].verdict, Verdict::Match);
    EXPECT_EQ(tb.outstations[0]->state().ao(2), 275.0f);
    // Rising edge only: one restore even though the reading stayed low for a poll.
    EXPECT_EQ(master_requests(tb, 0x05).size(), 1u);
}

TEST(Master, EveryRuleRepeatsUntilBound) {
    auto cfg = clean_config(1, 60);
    cfg.script = OperatorScript::parse(R"([{"trigger":{"at_s":30,"every_s":60,"until_s":200},
        "action":{"type":"BO","index":1,"control":"trip"}}])");
    Testbed tb(cfg);
    tb.start(400s);
    tb.run_until(400s);
    EXPECT_EQ(master_requests(tb, 0x05).size(), 3u);  // 30, 90, 150
}

TEST(Master, CommandsQueueBehindOutstandingPoll) {
    auto cfg = clean_config(1, 60);
    cfg.script = OperatorScript::parse(R"([{"trigger":{"at_s":0},"action":{"type":"BO","index":3,"control":"trip"}}])");
    Testbed tb(cfg);
    tb.start(60s);
    tb.run_until(60s);
    auto reads = master_requests(tb, 0x01);
    auto ops = master_requests(tb, 0x05);
    ASSERT_EQ(reads.size(), 1u);
    ASSERT_EQ(ops.size(), 1u);
    EXPECT_GT(ops[0].ts, reads[0].ts);
    EXPECT_EQ(tb.master->verdicts().at(0).verdict, Verdict::Match);
}

TEST(Master, UncorrelatedResponseIsReported) {
    Testbed tb(clean_config(1, 60));
    net::Segment seg;
    seg.seq = 123;
    auto resp = codec::build_point_response(1, 4, codec::Dnp3Point::binary(PointType::BO, 7, 0x41));
    try {
        tb.master->verify_ack(0, seg, resp);
        FAIL();
    } catch (const MasterError& e) {
        EXPECT_EQ(e.code(), MasterErrc::UncorrelatedResponse);
    }
}

TEST(Master, CleanChannelFidelityUnderRandomCommands) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        auto cfg = clean_config(4, 30);
        cfg.seed = trial + 1;
        std::uniform_real_distribution<double> when(1.0, 260.0);
        std::uniform_int_distribution<int> os(0, 3), bo(0, 9), ao(0, 4), kind(0, 1);
        std::string script = "[";
        for (int i = 0; i < 12; ++i) {
            if (i) script += ",";
            if (kind(rng)) {
                script += fmt::format(R"({{"trigger":{{"at_s":{:.3f}}},"action":{{"outstation":{},"type":"BO","index":{},"control":"{}"}}}})",
                                      when(rng), os(rng), bo(rng), kind(rng) ? "close" : "trip");
            } else {
                script += fmt::format(R"({{"trigger":{{"at_s":{:.3f}}},"action":{{"outstation":{},"type":"AO","index":{},"value":{}}}}})",
                                      when(rng), os(rng), ao(rng), 10 * os(rng) + 5);
            }
        }
        script += "]";
        cfg.script = OperatorScript::parse(script);
        Testbed tb(cfg);
        tb.start(301s);
        tb.run_until(301s);
        EXPECT_EQ(tb.master->verdicts().size(), 12u);
        for (const auto& v : tb.master->verdicts()) EXPECT_EQ(v.verdict, Verdict::Match);
        for (int o = 0; o < 4; ++o) expect_snapshot_matches(tb, o);
    }
}

// ---------------------------------------------------------------------------
// Verdicts and scripts

TEST(VerifyEcho, MatchAndMismatch) {
    Command close{0, PointType::BO, 7, codec::kControlClose, 0.0f, ""};
    auto close_echo = codec::build_point_response(1, 4, codec::Dnp3Point::binary(PointType::BO, 7, 0x41));
    auto trip_echo = codec::build_point_response(1, 4, codec::Dnp3Point::binary(PointType::BO, 7, 0x81));
    EXPECT_EQ(verify_echo(close, close_echo), Verdict::Match);
    EXPECT_EQ(verify_echo(close, trip_echo), Verdict::Mismatch);

    Command setpoint{0, PointType::AO, 2, 0, 480.0f, ""};
    auto ok = codec::build_point_response(1, 4, codec::Dnp3Point::analog(PointType::AO, 2, 480.0f));
    auto forged = codec::build_point_response(1, 4, codec::Dnp3Point::analog(PointType::AO, 2, 20.0f));
    EXPECT_EQ(verify_echo(setpoint, ok), Verdict::Match);
    EXPECT_EQ(verify_echo(setpoint, forged), Verdict::Mismatch);
}

TEST(OperatorScript, RoundTripsThroughJson) {
    auto script = OperatorScript::parse(R"([
      {"name":"a","trigger":{"at_s":30,"every_s":120},"action":{"outstation":0,"type":"BO","index":7,"control":"close"}},
      {"name":"b","trigger":{"point":{"outstation":"any","type":"AI","index":2,"op":"<","value":100}},
       "action":{"type":"AO","index":2,"value":"restore"}},
      {"name":"c","trigger":{"at_s":45},"action":{"outstation":"all","type":"AO","index":1,"value":20.5}}])");
    auto again = OperatorScript::parse(script.to_json());
    ASSERT_EQ(again.rules.size(), 3u);
    EXPECT_EQ(again.to_json(), script.to_json());
    EXPECT_EQ(again.rules[1].action.outstation, -1);
    EXPECT_FALSE(again.rules[1].action.value.has_value());
    EXPECT_EQ(again.rules[2].action.value, 20.5f);
}

TEST(OperatorScript, RejectsMalformedRules) {
    EXPECT_THROW(OperatorScript::parse("{}"), ScriptError);
    EXPECT_THROW(OperatorScript::parse(R"([{"trigger":{},"action":{"type":"BO","index":1,"control":"close"}}])"),
                 ScriptError);
    EXPECT_THROW(OperatorScript::parse(R"([{"trigger":{"at_s":1},"action":{"type":"BO","index":1,"control":"open"}}])"),
                 ScriptError);
    EXPECT_THROW(OperatorScript::parse(R"([{"trigger":{"at_s":1},"action":{"type":"AI","index":1,"value":3}}])"),
                 ScriptError);
    EXPECT_THROW(OperatorScript::parse(R"([{"trigger":{"at_s":1,"every_s":0},"action":{"type":"BO","index":1,"control":"close"}}])"),
                 ScriptError);
}
