#include "dnp3lab/metrics.hpp"
#include "dnp3lab/mitm.hpp"
#include "dnp3lab/testbed.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

using namespace dnp3lab;
using namespace dnp3lab::metrics;
using namespace std::chrono_literals;
using capture::CaptureRecord;
using capture::Direction;

namespace {

CaptureRecord retx(double ms, std::string point = "router", Direction dir = Direction::In) {
    CaptureRecord r;
    r.ts = sim::from_ms(ms);
    r.point = std::move(point);
    r.direction = dir;
    r.retransmission = true;
    return r;
}

CaptureRecord leg(std::uint64_t id, double ms, Direction dir, std::uint16_t src_port, std::uint16_t dst_port,
                  std::uint32_t seq, std::uint32_t ack, net::IpAddr src, net::IpAddr dst) {
    CaptureRecord r;
    r.id = id;
    r.ts = sim::from_ms(ms);
    r.point = "master";
    r.direction = dir;
    r.src_port = src_port;
    r.dst_port = dst_port;
    r.seq = seq;
    r.ack = ack;
    r.src_ip = src;
    r.dst_ip = dst;
    r.raw = Bytes{0x05, 0x64};
    return r;
}

const net::IpAddr kMaster = net::IpAddr::of(10, 0, 0, 2);
const net::IpAddr kOs = net::IpAddr::of(192, 168, 0, 5);

}  // namespace

// ---------------------------------------------------------------------------
// Retransmission rate

TEST(RetransmissionRate, TwelveOverSixSecondsIsTwoPerSecond) {
    std::vector<CaptureRecord> recs;
    for (int i = 0; i < 12; ++i) recs.push_back(retx(1000.0 + i * (6000.0 / 11.0)));
    recs.back().ts = sim::from_ms(7000.0);
    auto s = retransmission_rate(recs);
    EXPECT_EQ(s.n_r, 12u);
    EXPECT_EQ(s.t_r_s, 6.0);
    ASSERT_TRUE(s.r_r);
    EXPECT_EQ(*s.r_r, 2.0);
}

TEST(RetransmissionRate, NoneIsZero) {
    auto s = retransmission_rate({});
    EXPECT_EQ(s.n_r, 0u);
    ASSERT_TRUE(s.r_r);
    EXPECT_EQ(*s.r_r, 0.0);
    EXPECT_FALSE(s.undefined());
}

TEST(RetransmissionRate, SingleIsUndefined) {
    auto s = retransmission_rate({retx(500.0)});
    EXPECT_EQ(s.n_r, 1u);
    EXPECT_TRUE(s.undefined());
    auto same = retransmission_rate({retx(500.0), retx(500.0)});
    EXPECT_TRUE(same.undefined());
}

TEST(RetransmissionRate, ClosedFormOverRandomSpans) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> count(2, 400);
    std::uniform_int_distribution<std::int64_t> us(0, 600'000'000);
    for (int trial = 0; trial < 500; ++trial) {
        int n = count(rng);
        std::vector<CaptureRecord> recs;
        std::int64_t lo = INT64_MAX, hi = 0;
        for (int i = 0; i < n; ++i) {
            auto t = us(rng);
            lo = std::min(lo, t);
            hi = std::max(hi, t);
            auto r = retx(0);
            r.ts = sim::Duration(t);
            recs.push_back(r);
        }
        recs.push_back(retx(1.0, "lan", Direction::Tx));
        auto s = retransmission_rate(recs);
        EXPECT_EQ(s.n_r, static_cast<std::uint64_t>(n));
        ASSERT_TRUE(s.r_r);
        EXPECT_DOUBLE_EQ(*s.r_r, n / (static_cast<double>(hi - lo) / 1e6));
    }
}

TEST(RetransmissionRate, SelectionRestrictsPointAndWindow) {
    std::vector<CaptureRecord> recs{retx(1000), retx(2000), retx(3000, "lan", Direction::Tx), retx(4000)};
    Selection sel;
    sel.from = sim::from_ms(1500);
    sel.to = sim::from_ms(4000);
    EXPECT_EQ(retransmission_rate(recs, sel).n_r, 1u);
    EXPECT_EQ(retransmission_rate(recs).n_r, 3u);
}

// ---------------------------------------------------------------------------
// RTT

TEST(Rtt, PairsRequestAckWithResponseSequence) {
    std::vector<CaptureRecord> recs{
        leg(1, 100.0, Direction::Out, 40000, 20000, 10, 500, kMaster, kOs),
        leg(2, 105.0, Direction::In, 20000, 40000, 499, 20, kOs, kMaster),  // stale sequence
        leg(3, 106.0, Direction::In, 20000, 40000, 500, 20, kOs, kMaster),
        leg(4, 200.0, Direction::Out, 40000, 20000, 20, 600, kMaster, kOs),
    };
    auto rep = rtt_report(recs);
    ASSERT_EQ(rep.samples.size(), 1u);
    EXPECT_EQ(rep.samples[0].rtt_ms, 6.0);
    EXPECT_EQ(rep.samples[0].transaction, 10u);
    ASSERT_EQ(rep.unmatched.size(), 1u);
    EXPECT_EQ(rep.unmatched[0].transaction, 20u);
}

TEST(Rtt, HeldResponseIsFlaggedAboveCutoff) {
    std::vector<CaptureRecord> recs{
        leg(1, 0.0, Direction::Out, 40000, 20000, 10, 500, kMaster, kOs),
        leg(2, 7500.0, Direction::In, 20000, 40000, 500, 20, kOs, kMaster),
        leg(3, 8000.0, Direction::Out, 40000, 20000, 20, 530, kMaster, kOs),
        leg(4, 8005.0, Direction::In, 20000, 40000, 530, 30, kOs, kMaster),
    };
    auto rep = rtt_report(recs);
    ASSERT_EQ(rep.samples.size(), 2u);
    EXPECT_TRUE(rep.samples[0].above_cutoff);
    EXPECT_FALSE(rep.samples[1].above_cutoff);
    EXPECT_DOUBLE_EQ(rep.fraction_above_cutoff, 0.5);
    EXPECT_DOUBLE_EQ(rep.overall.max, 7500.0);
}

TEST(Rtt, RetransmittedRequestsAreNotNewTransactions) {
    auto first = leg(1, 0.0, Direction::Out, 40000, 20000, 10, 500, kMaster, kOs);
    auto again = leg(2, 7000.0, Direction::Out, 40000, 20000, 10, 500, kMaster, kOs);
    again.retransmission = true;
    auto resp = leg(3, 7005.0, Direction::In, 20000, 40000, 500, 20, kOs, kMaster);
    auto rep = rtt_report({first, again, resp});
    ASSERT_EQ(rep.samples.size(), 1u);
    EXPECT_DOUBLE_EQ(rep.samples[0].rtt_ms, 7005.0);
}

TEST(Rtt, PhasesSplitByRequestTime) {
    std::vector<CaptureRecord> recs;
    std::uint32_t seq = 1, ack = 1000;
    std::uint64_t id = 1;
    for (double t : {10.0, 150.0, 500.0}) {
        recs.push_back(leg(id++, t * 1000, Direction::Out, 40000, 20000, seq, ack, kMaster, kOs));
        recs.push_back(leg(id++, t * 1000 + (t > 100 && t < 400 ? 80 : 5), Direction::In, 20000, 40000, ack, seq + 10,
                           kOs, kMaster));
        seq += 10;
        ack += 30;
    }
    auto rep = rtt_report(recs, Phases{120s, 420s});
    EXPECT_EQ(rep.by_phase.at(Phase::Baseline).mean, 5.0);
    EXPECT_EQ(rep.by_phase.at(Phase::Attack).mean, 80.0);
    EXPECT_EQ(rep.by_phase.at(Phase::Restore).mean, 5.0);
}

TEST(Rtt, CleanNetworkIsTwoRoundTripsPlusTurnaround) {
    TestbedConfig c;
    c.outstations = 3;
    c.master.polling_interval = 30s;
    c.with_adversary = false;
    Testbed tb(c);
    tb.start(200s);
    tb.run_until(200s);
    const auto& recs = tb.network.capture().records();
    auto rep = rtt_report(recs);
    EXPECT_EQ(rep.unmatched.size(), 0u);
    std::size_t requests = 0;
    for (const auto& r : recs)
        if (r.point == "master" && r.direction == Direction::Out && r.has_payload()) ++requests;
    EXPECT_EQ(rep.samples.size(), requests);
    for (const auto& s : rep.samples) {
        EXPECT_LT(s.request_ts, s.response_ts);
        // 2 hops each way at 1 ms, 1 ms turnaround; the first poll also pays for ARP.
        if (s.request_ts > 1s) EXPECT_DOUBLE_EQ(s.rtt_ms, 5.0);
    }
}

// ---------------------------------------------------------------------------
// Processing and correlation

TEST(Processing, PairsLegsByReference) {
    CaptureRecord in1, out1, in2, out2, orphan;
    in1.id = 1, in1.point = "adversary", in1.direction = Direction::In, in1.ts = sim::from_ms(100), in1.pclass = "BYPASS";
    out1.id = 2, out1.point = "adversary", out1.direction = Direction::Out, out1.ts = sim::from_ms(122),
    out1.pclass = "BYPASS", out1.ref = 1;
    in2.id = 3, in2.point = "adversary", in2.direction = Direction::In, in2.ts = sim::from_ms(200),
    in2.pclass = "READ_RESPONSE";
    out2.id = 4, out2.point = "adversary", out2.direction = Direction::Out, out2.ts = sim::from_ms(236),
    out2.pclass = "READ_RESPONSE", out2.ref = 3;
    orphan.id = 5, orphan.point = "adversary", orphan.direction = Direction::In, orphan.ts = sim::from_ms(300);
    auto rep = processing_report({in1, out1, in2, out2, orphan});
    EXPECT_EQ(rep.by_class.at("BYPASS").mean, 22.0);
    EXPECT_EQ(rep.by_class.at("READ_RESPONSE").mean, 36.0);
    EXPECT_EQ(rep.unpaired, 1u);
}

TEST(Processing, NoAdversaryMeansEmptyReport) {
    EXPECT_TRUE(processing_report({retx(10)}).by_class.empty());
}

TEST(Correlation, RequiresArpAlertAndDirectOperateInTheSameMinute) {
    auto op = [](double s) {
        CaptureRecord r;
        r.point = "router";
        r.direction = Direction::In;
        r.ts = sim::from_s(s);
        r.dnp3 = capture::Dnp3Summary{0x05, "DIRECT_OPERATE", "", true};
        return r;
    };
    auto arp = [](double s) {
        ids::AlertRecord a;
        a.ts = sim::from_s(s);
        a.rule = ids::RuleId::R1;
        return a;
    };
    auto r4 = arp(70);
    r4.rule = ids::RuleId::R4;
    auto buckets = correlation_report({op(10), op(130), op(250)}, {arp(125), arp(200), r4});
    ASSERT_EQ(buckets.size(), 5u);
    EXPECT_FALSE(buckets[0].compromised);  // operate only
    EXPECT_FALSE(buckets[1].compromised);  // R4 is not an ARP alert
    EXPECT_TRUE(buckets[2].compromised);
    EXPECT_FALSE(buckets[3].compromised);  // ARP only
    EXPECT_FALSE(buckets[4].compromised);
    for (const auto& b : buckets)
        if (b.compromised) EXPECT_TRUE(b.arp_alerts > 0 && b.direct_operates > 0);
}

// ---------------------------------------------------------------------------
// Report output

TEST(Report, JsonHasAllSectionsAndCompareComputesDeltas) {
    std::vector<CaptureRecord> base{retx(1000), retx(3000)};
    std::vector<CaptureRecord> attack{retx(1000), retx(2000), retx(3000), retx(5000)};
    auto a = to_json(analyze(base, {}));
    auto b = to_json(analyze(attack, {}));
    auto j = nlohmann::json::parse(a);
    for (const char* k : {"retransmission", "rtt", "processing", "correlation"}) EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_EQ(j["retransmission"]["r_r"].get<double>(), 1.0);
    auto d = nlohmann::json::parse(compare_json(a, b));
    EXPECT_EQ(d["retransmission.n_r"]["delta"].get<double>(), 2.0);
    EXPECT_NE(compare_text(a, b).find("retransmission.r_r"), std::string::npos);
}

TEST(Report, UndefinedRateIsNullInJson) {
    auto j = nlohmann::json::parse(to_json(analyze({retx(10)}, {})));
    EXPECT_TRUE(j["retransmission"]["r_r"].is_null());
    EXPECT_TRUE(j["retransmission"]["r_r_undefined"].get<bool>());
    EXPECT_NE(to_text(analyze({retx(10)}, {})).find("R_R=undefined"), std::string::npos);
}
