#pragma once

// Scenario files, the three-phase runner, and parameter sweeps.

#include "dnp3lab/error.hpp"
#include "dnp3lab/ids.hpp"
#include "dnp3lab/metrics.hpp"
#include "dnp3lab/mitm.hpp"
#include "dnp3lab/testbed.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dnp3lab::scenario {

enum class ScenarioErrc { ConfigInvalid, Io };

/// Carries one diagnostic per offending field.
class ScenarioError : public CodedError<ScenarioErrc> {
public:
    ScenarioError(ScenarioErrc code, std::vector<std::string> diagnostics);
    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

struct AdversaryBlock {
    bool masking = true;
    bool recompute_crc = true;
    float forged_setpoint = 20.0f;
    /// Outstation indices in mod points; -1 targets every outstation.
    struct ModPoint {
        int outstation = -1;
        codec::PointType type = codec::PointType::AI;
        std::uint16_t index = 2;
        double value = 20.0;
    };
    std::vector<ModPoint> mod_points{ModPoint{}};
    mitm::DelayModel delays;
    std::size_t queue_limit = 64;
    int sniff_stride = 5;
    double repoison_interval_ms = 2000.0;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    int use_case = 0;
    int outstations = 5;
    double polling_interval_s = 60.0;
    double run_duration_s = 480.0;
    double attack_start_s = 120.0;
    double attack_stop_s = 420.0;
    double cross_traffic_hz = 9.5;
    double link_latency_ms = 1.0;
    double retransmission_timeout_ms = 7000.0;
    endpoints::OperatorScript script;
    std::optional<AdversaryBlock> adversary;
    /// Empty means derived from the generated addressing plan.
    std::vector<ids::WhitelistEntry> whitelist;

    void validate() const;
    mitm::AdversaryConfig adversary_config() const;
    TestbedConfig testbed_config() const;
    metrics::Phases phases() const;
};

/// Operator activity used when a scenario does not supply a script.
endpoints::OperatorScript default_script();

/// Parses scenario JSON. Overrides are `dotted.key=value` pairs applied
/// before validation; values parse as JSON, falling back to strings.
ScenarioConfig parse(std::string_view text, const std::vector<std::string>& overrides = {});
ScenarioConfig load(const std::filesystem::path& file, const std::vector<std::string>& overrides = {});
std::string to_json(const ScenarioConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);

struct RunResult {
    std::vector<capture::CaptureRecord> capture;
    std::vector<ids::AlertRecord> alerts;
    metrics::Report report;
    std::vector<endpoints::VerdictRecord> verdicts;
    std::vector<mitm::AdversaryEvent> adversary_events;
    /// Outstation point databases at the end of the run.
    std::vector<endpoints::OutstationState> plant;
    std::size_t mismatches = 0;
};

/// Runs baseline, attack and restore phases in one simulation.
RunResult run(const ScenarioConfig& config);

struct RunArtifacts {
    std::filesystem::path capture;
    std::filesystem::path alerts;
    std::filesystem::path metrics_json;
    std::filesystem::path metrics_text;
    std::filesystem::path manifest;
};

/// Writes `<stem>.capture.jsonl`, `.alerts.log`, `.metrics.json`,
/// `.metrics.txt` and `.manifest.json`. config_bytes is the scenario text
/// as loaded and is hashed into the manifest.
RunArtifacts write_artifacts(const RunResult& result, const ScenarioConfig& config, std::string_view config_bytes,
                             const std::vector<std::string>& overrides, const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Sweeps

struct Cell {
    int use_case = 1;
    int outstations = 5;
    double polling_interval_s = 30.0;

    std::string name() const;
    auto operator<=>(const Cell&) const = default;
};

struct SweepMatrix {
    std::vector<int> use_cases{1, 2, 3, 4};
    std::vector<int> outstations{5, 10};
    std::vector<double> polling_intervals_s{30.0, 60.0};
    /// Excluded (use case, outstations) pairs.
    std::vector<std::pair<int, int>> exclude{{1, 5}};
    /// Scenario fields shared by every cell, as JSON text.
    std::string base = "{}";

    std::vector<Cell> cells() const;
};

SweepMatrix parse_sweep(std::string_view text);

struct SweepRow {
    Cell cell;
    bool ok = false;
    std::string error;
    metrics::RetransmissionStats retransmission;
    double rtt_baseline_ms = 0.0;
    double rtt_attack_ms = 0.0;
    std::size_t rtt_above_cutoff = 0;
    std::size_t mismatches = 0;
    std::size_t compromised_minutes = 0;
};

struct SweepOptions {
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    /// When set, each cell also writes its artifacts here.
    std::optional<std::filesystem::path> out_dir;
};

/// Rows sorted by (use case, outstations, interval); a failed cell yields
/// a row with ok = false.
std::vector<SweepRow> sweep(const SweepMatrix& matrix, const SweepOptions& options = {});
std::string sweep_table(const std::vector<SweepRow>& rows);
std::string sweep_json(const std::vector<SweepRow>& rows);

}  // namespace dnp3lab::scenario
