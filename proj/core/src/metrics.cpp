#include "dnp3lab/metrics.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

namespace dnp3lab::metrics {

using json = nlohmann::ordered_json;
using capture::CaptureRecord;
using capture::Direction;

bool Selection::matches(const CaptureRecord& r) const {
    if (r.point != point || r.direction != direction) return false;
    if (from && r.ts < *from) return false;
    if (to && r.ts >= *to) return false;
    return true;
}

RetransmissionStats retransmission_rate(const std::vector<CaptureRecord>& records, const Selection& sel) {
    RetransmissionStats s;
    std::optional<sim::SimTime> first, last;
    for (const auto& r : records) {
        if (!r.retransmission || !sel.matches(r)) continue;
        ++s.n_r;
        if (!first || r.ts < *first) first = r.ts;
        if (!last || r.ts > *last) last = r.ts;
    }
    if (s.n_r == 0) {
        s.r_r = 0.0;
        return s;
    }
    s.t_r_s = sim::to_ms(*last - *first) / 1000.0;
    if (s.n_r >= 2 && s.t_r_s > 0.0) s.r_r = static_cast<double>(s.n_r) / s.t_r_s;
    return s;
}

std::string_view to_string(Phase p) {
    switch (p) {
    case Phase::Baseline: return "baseline";
    case Phase::Attack: return "attack";
    case Phase::Restore: return "restore";
    }
    return "?";
}

Phase phase_of(sim::SimTime ts, const std::optional<Phases>& phases) {
    if (!phases || ts < phases->attack_start) return Phase::Baseline;
    return ts < phases->attack_stop ? Phase::Attack : Phase::Restore;
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    s.count = values.size();
    if (values.empty()) return s;
    double sum = std::accumulate(values.begin(), values.end(), 0.0);
    s.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = values.size() > 1 ? std::sqrt(sq / static_cast<double>(values.size() - 1)) : 0.0;
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    return s;
}

RttReport rtt_report(const std::vector<CaptureRecord>& records, const std::optional<Phases>& phases,
                     std::uint16_t dnp3_port, double cutoff_ms, const std::string& point) {
    RttReport report;
    report.cutoff_ms = cutoff_ms;
    // (outstation IP, master port, sequence) -> arrival times
    std::map<std::tuple<net::IpAddr, std::uint16_t, std::uint32_t>, std::deque<sim::SimTime>> responses;
    for (const auto& r : records) {
        if (r.point != point || r.direction != Direction::In || !r.has_payload() || r.src_port != dnp3_port) continue;
        responses[{r.src_ip, r.dst_port, r.seq}].push_back(r.ts);
    }
    std::vector<double> all;
    std::map<Phase, std::vector<double>> per_phase;
    std::size_t above = 0;
    for (const auto& r : records) {
        if (r.point != point || r.direction != Direction::Out || !r.has_payload() || r.dst_port != dnp3_port ||
            r.retransmission)
            continue;
        auto it = responses.find({r.dst_ip, r.src_port, r.ack});
        std::optional<sim::SimTime> matched;
        if (it != responses.end()) {
            auto& q = it->second;
            while (!q.empty() && q.front() < r.ts) q.pop_front();
            if (!q.empty()) {
                matched = q.front();
                q.pop_front();
            }
        }
        if (!matched) {
            report.unmatched.push_back({r.seq, r.src_port, r.ts});
            continue;
        }
        RttSample s;
        s.transaction = r.seq;
        s.master_port = r.src_port;
        s.request_ts = r.ts;
        s.response_ts = *matched;
        s.rtt_ms = sim::to_ms(*matched - r.ts);
        s.above_cutoff = s.rtt_ms > cutoff_ms;
        s.phase = phase_of(r.ts, phases);
        above += s.above_cutoff;
        all.push_back(s.rtt_ms);
        per_phase[s.phase].push_back(s.rtt_ms);
        report.samples.push_back(s);
    }
    report.overall = summarize(all);
    for (const auto& [p, v] : per_phase) report.by_phase[p] = summarize(v);
    report.fraction_above_cutoff = all.empty() ? 0.0 : static_cast<double>(above) / static_cast<double>(all.size());
    return report;
}

ProcessingReport processing_report(const std::vector<CaptureRecord>& records, const std::string& point) {
    ProcessingReport report;
    std::map<std::uint64_t, const CaptureRecord*> ingress;
    std::map<std::string, std::vector<double>> held;
    for (const auto& r : records) {
        if (r.point != point) continue;
        if (r.direction == Direction::In) {
            ingress[r.id] = &r;
            continue;
        }
        if (r.direction != Direction::Out || !r.ref) continue;
        auto it = ingress.find(*r.ref);
        if (it == ingress.end()) {
            ++report.unpaired;
            continue;
        }
        held[r.pclass.value_or("BYPASS")].push_back(sim::to_ms(r.ts - it->second->ts));
        ingress.erase(it);
    }
    report.unpaired += ingress.size();
    for (const auto& [cls, v] : held) report.by_class[cls] = summarize(v);
    return report;
}

std::vector<CorrelationBucket> correlation_report(const std::vector<CaptureRecord>& records,
                                                  const std::vector<ids::AlertRecord>& alerts,
                                                  const Selection& operates) {
    constexpr std::int64_t kMinuteUs = 60'000'000;
    std::int64_t last = -1;
    for (const auto& r : records) last = std::max<std::int64_t>(last, r.ts.count() / kMinuteUs);
    for (const auto& a : alerts) last = std::max<std::int64_t>(last, a.ts.count() / kMinuteUs);
    std::vector<CorrelationBucket> buckets(static_cast<std::size_t>(last + 1));
    for (std::size_t i = 0; i < buckets.size(); ++i) buckets[i].minute = static_cast<std::int64_t>(i);
    for (const auto& a : alerts)
        if (ids::is_arp_rule(a.rule)) ++buckets[static_cast<std::size_t>(a.ts.count() / kMinuteUs)].arp_alerts;
    for (const auto& r : records)
        if (operates.matches(r) && r.is_function(0x05))
            ++buckets[static_cast<std::size_t>(r.ts.count() / kMinuteUs)].direct_operates;
    for (auto& b : buckets) b.compromised = b.arp_alerts > 0 && b.direct_operates > 0;
    return buckets;
}

Report analyze(const std::vector<CaptureRecord>& records, const std::vector<ids::AlertRecord>& alerts,
               const std::optional<Phases>& phases, std::uint16_t dnp3_port) {
    Report report;
    report.retransmission = retransmission_rate(records);
    for (auto p : {Phase::Baseline, Phase::Attack, Phase::Restore}) {
        Selection sel;
        if (phases) {
            if (p != Phase::Baseline) sel.from = p == Phase::Attack ? phases->attack_start : phases->attack_stop;
            if (p != Phase::Restore) sel.to = p == Phase::Baseline ? phases->attack_start : phases->attack_stop;
        } else if (p != Phase::Baseline) {
            continue;
        }
        report.retransmission_by_phase[p] = retransmission_rate(records, sel);
    }
    report.rtt = rtt_report(records, phases, dnp3_port);
    report.processing = processing_report(records);
    report.correlation = correlation_report(records, alerts);
    return report;
}

// ---------------------------------------------------------------------------
// Output

namespace {

json summary_json(const Summary& s) {
    return {{"count", s.count}, {"mean", s.mean}, {"stddev", s.stddev}, {"min", s.min}, {"max", s.max}};
}

json retx_json(const RetransmissionStats& s) {
    json j = {{"n_r", s.n_r}, {"t_r_s", s.t_r_s}};
    j["r_r"] = s.r_r ? json(*s.r_r) : json(nullptr);
    j["r_r_undefined"] = s.undefined();
    return j;
}

std::string fmt_opt(const std::optional<double>& v, int precision = 4) {
    return v ? fmt::format("{:.{}f}", *v, precision) : std::string("undefined");
}

}  // namespace

std::string to_json(const Report& r) {
    json j;
    j["retransmission"] = retx_json(r.retransmission);
    json phases = json::object();
    for (const auto& [p, s] : r.retransmission_by_phase) phases[std::string(to_string(p))] = retx_json(s);
    j["retransmission"]["by_phase"] = phases;

    json rtt;
    rtt["samples"] = r.rtt.samples.size();
    rtt["unmatched"] = r.rtt.unmatched.size();
    rtt["cutoff_ms"] = r.rtt.cutoff_ms;
    rtt["fraction_above_cutoff"] = r.rtt.fraction_above_cutoff;
    rtt["overall"] = summary_json(r.rtt.overall);
    json by_phase = json::object();
    for (const auto& [p, s] : r.rtt.by_phase) by_phase[std::string(to_string(p))] = summary_json(s);
    rtt["by_phase"] = by_phase;
    json unmatched = json::array();
    for (const auto& u : r.rtt.unmatched)
        unmatched.push_back({{"transaction", u.transaction}, {"master_port", u.master_port},
                             {"request_ms", sim::to_ms(u.request_ts)}});
    rtt["unmatched_requests"] = unmatched;
    j["rtt"] = rtt;

    json proc = json::object();
    for (const auto& [cls, s] : r.processing.by_class) proc[cls] = summary_json(s);
    j["processing"] = {{"by_class", proc}, {"unpaired", r.processing.unpaired}};

    json corr = json::array();
    std::size_t compromised = 0;
    for (const auto& b : r.correlation) {
        corr.push_back({{"minute", b.minute}, {"arp_alerts", b.arp_alerts}, {"direct_operates", b.direct_operates},
                        {"compromised", b.compromised}});
        compromised += b.compromised;
    }
    j["correlation"] = {{"compromised_minutes", compromised}, {"buckets", corr}};
    return j.dump(2) + "\n";
}

std::string to_text(const Report& r) {
    std::string out;
    out += "[retransmission]\n";
    out += fmt::format("  N_R={} T_R={:.3f}s R_R={}\n", r.retransmission.n_r, r.retransmission.t_r_s,
                       fmt_opt(r.retransmission.r_r));
    for (const auto& [p, s] : r.retransmission_by_phase)
        out += fmt::format("  {:<9} N_R={} R_R={}\n", to_string(p), s.n_r, fmt_opt(s.r_r));

    out += "[rtt]\n";
    out += fmt::format("  samples={} unmatched={} mean={:.3f}ms max={:.3f}ms above_{:.0f}ms={:.4f}\n",
                       r.rtt.samples.size(), r.rtt.unmatched.size(), r.rtt.overall.mean, r.rtt.overall.max,
                       r.rtt.cutoff_ms, r.rtt.fraction_above_cutoff);
    for (const auto& [p, s] : r.rtt.by_phase)
        out += fmt::format("  {:<9} n={} mean={:.3f}ms max={:.3f}ms\n", to_string(p), s.count, s.mean, s.max);

    out += "[processing]\n";
    if (r.processing.by_class.empty()) out += "  (no adversary traffic)\n";
    for (const auto& [cls, s] : r.processing.by_class)
        out += fmt::format("  {:<14} n={} mean={:.3f}ms stddev={:.3f}ms\n", cls, s.count, s.mean, s.stddev);

    out += "[correlation]\n";
    out += "  minute arp_alerts direct_operates compromised\n";
    for (const auto& b : r.correlation)
        out += fmt::format("  {:>6} {:>10} {:>15} {}\n", b.minute, b.arp_alerts, b.direct_operates,
                           b.compromised ? "yes" : "no");
    return out;
}

namespace {

std::optional<double> number_at(const json& j, const json::json_pointer& ptr) {
    if (!j.contains(ptr)) return std::nullopt;
    const auto& v = j.at(ptr);
    if (!v.is_number()) return std::nullopt;
    return v.get<double>();
}

std::vector<std::pair<std::string, json::json_pointer>> compared_fields(const json& a, const json& b) {
    std::vector<std::pair<std::string, json::json_pointer>> fields = {
        {"retransmission.n_r", json::json_pointer("/retransmission/n_r")},
        {"retransmission.r_r", json::json_pointer("/retransmission/r_r")},
        {"rtt.samples", json::json_pointer("/rtt/samples")},
        {"rtt.unmatched", json::json_pointer("/rtt/unmatched")},
        {"rtt.mean_ms", json::json_pointer("/rtt/overall/mean")},
        {"rtt.max_ms", json::json_pointer("/rtt/overall/max")},
        {"rtt.fraction_above_cutoff", json::json_pointer("/rtt/fraction_above_cutoff")},
        {"correlation.compromised_minutes", json::json_pointer("/correlation/compromised_minutes")},
    };
    std::set<std::string> classes;
    for (const auto* doc : {&a, &b}) {
        if (doc->contains("processing"))
            for (const auto& [cls, _] : doc->at("processing").at("by_class").items()) classes.insert(cls);
    }
    for (const auto& cls : classes)
        fields.emplace_back("processing." + cls + ".mean_ms",
                            json::json_pointer("/processing/by_class/" + cls + "/mean"));
    return fields;
}

}  // namespace

std::string compare_json(const std::string& baseline_json, const std::string& attack_json) {
    auto a = json::parse(baseline_json);
    auto b = json::parse(attack_json);
    json out = json::object();
    for (const auto& [name, ptr] : compared_fields(a, b)) {
        auto x = number_at(a, ptr);
        auto y = number_at(b, ptr);
        json row;
        row["baseline"] = x ? json(*x) : json(nullptr);
        row["attack"] = y ? json(*y) : json(nullptr);
        row["delta"] = x && y ? json(*y - *x) : json(nullptr);
        out[name] = row;
    }
    return out.dump(2) + "\n";
}

std::string compare_text(const std::string& baseline_json, const std::string& attack_json) {
    auto deltas = json::parse(compare_json(baseline_json, attack_json));
    std::string out = fmt::format("{:<36} {:>14} {:>14} {:>14}\n", "metric", "baseline", "attack", "delta");
    auto cell = [](const json& v) { return v.is_null() ? std::string("undefined") : fmt::format("{:.4f}", v.get<double>()); };
    for (const auto& [name, row] : deltas.items())
        out += fmt::format("{:<36} {:>14} {:>14} {:>14}\n", name, cell(row["baseline"]), cell(row["attack"]),
                           cell(row["delta"]));
    return out;
}

}  // namespace dnp3lab::metrics
