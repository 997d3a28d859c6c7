#pragma once

// Offline analysis of capture and alert logs.

#include "dnp3lab/capture.hpp"
#include "dnp3lab/ids.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dnp3lab::metrics {

/// Which records count as observations of the traffic.
struct Selection {
    std::string point = "router";
    capture::Direction direction = capture::Direction::In;
    std::optional<sim::SimTime> from;
    std::optional<sim::SimTime> to;

    bool matches(const capture::CaptureRecord& r) const;
};

struct RetransmissionStats {
    std::uint64_t n_r = 0;
    double t_r_s = 0.0;
    /// Retransmissions per second; nullopt when N_R = 1 or the span is zero.
    std::optional<double> r_r;

    bool undefined() const { return !r_r.has_value(); }
};

RetransmissionStats retransmission_rate(const std::vector<capture::CaptureRecord>& records, const Selection& sel = {});

/// Attack window used to split samples into baseline, attack and restore.
struct Phases {
    sim::SimTime attack_start{0};
    sim::SimTime attack_stop{0};
};

enum class Phase { Baseline, Attack, Restore };
std::string_view to_string(Phase p);
Phase phase_of(sim::SimTime ts, const std::optional<Phases>& phases);

struct RttSample {
    std::uint32_t transaction = 0;  // request sequence number
    std::uint16_t master_port = 0;
    sim::SimTime request_ts{0};
    sim::SimTime response_ts{0};
    double rtt_ms = 0.0;
    bool above_cutoff = false;
    Phase phase = Phase::Baseline;
};

struct UnmatchedRequest {
    std::uint32_t transaction = 0;
    std::uint16_t master_port = 0;
    sim::SimTime request_ts{0};
};

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
};

Summary summarize(const std::vector<double>& values);

struct RttReport {
    std::vector<RttSample> samples;
    std::vector<UnmatchedRequest> unmatched;
    Summary overall;
    std::map<Phase, Summary> by_phase;
    double cutoff_ms = 7000.0;
    double fraction_above_cutoff = 0.0;
};

/// Pairs each first-transmission request at the master tap with the first
/// response whose sequence number equals the request's acknowledgement.
RttReport rtt_report(const std::vector<capture::CaptureRecord>& records, const std::optional<Phases>& phases = {},
                     std::uint16_t dnp3_port = 20000, double cutoff_ms = 7000.0, const std::string& point = "master");

struct ProcessingReport {
    std::map<std::string, Summary> by_class;
    std::size_t unpaired = 0;
};

/// Adversary hold times from ingress/egress record pairs.
ProcessingReport processing_report(const std::vector<capture::CaptureRecord>& records,
                                   const std::string& point = "adversary");

struct CorrelationBucket {
    std::int64_t minute = 0;
    std::size_t arp_alerts = 0;
    std::size_t direct_operates = 0;
    bool compromised = false;
};

/// One bucket per minute from zero through the last observed record.
std::vector<CorrelationBucket> correlation_report(const std::vector<capture::CaptureRecord>& records,
                                                  const std::vector<ids::AlertRecord>& alerts,
                                                  const Selection& operates = {});

struct Report {
    RetransmissionStats retransmission;
    std::map<Phase, RetransmissionStats> retransmission_by_phase;
    RttReport rtt;
    ProcessingReport processing;
    std::vector<CorrelationBucket> correlation;
};

Report analyze(const std::vector<capture::CaptureRecord>& records, const std::vector<ids::AlertRecord>& alerts,
               const std::optional<Phases>& phases = {}, std::uint16_t dnp3_port = 20000);

/// Structured form with sections retransmission, rtt, processing, correlation.
std::string to_json(const Report& report);
std::string to_text(const Report& report);

/// Deltas between two structured reports (second minus first).
std::string compare_json(const std::string& baseline_json, const std::string& attack_json);
std::string compare_text(const std::string& baseline_json, const std::string& attack_json);

}  // namespace dnp3lab::metrics
