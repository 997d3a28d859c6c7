#include "dnp3lab/capture.hpp"
#include "dnp3lab/codec.hpp"
#include "dnp3lab/metrics.hpp"
#include "dnp3lab/scenario.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace dnp3lab;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot open {}", p.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> with_seed(std::vector<std::string> overrides, const std::optional<std::uint64_t>& seed) {
    if (seed) overrides.push_back(fmt::format("seed={}", *seed));
    return overrides;
}

int cmd_run(const fs::path& file, const std::optional<std::uint64_t>& seed, const fs::path& out_dir,
            const std::vector<std::string>& overrides) {
    auto text = slurp(file);
    auto all = with_seed(overrides, seed);
    auto config = scenario::parse(text, all);
    auto result = scenario::run(config);
    auto files = scenario::write_artifacts(result, config, text, all, out_dir);
    std::cout << fmt::format("scenario {} (use case {}, {} outstations, {:g} s polling, seed {})\n", config.name,
                             config.use_case, config.outstations, config.polling_interval_s, config.seed);
    std::cout << metrics::to_text(result.report);
    std::cout << fmt::format("verdict mismatches {}\n", result.mismatches);
    for (const auto& p : {files.capture, files.alerts, files.metrics_json, files.metrics_text, files.manifest})
        std::cout << "wrote " << p.string() << "\n";
    return kOk;
}

int cmd_sweep(const fs::path& file, const std::optional<std::uint64_t>& seed, const std::optional<fs::path>& out_dir,
              const std::vector<std::string>& overrides) {
    auto matrix = scenario::parse_sweep(slurp(file));
    scenario::SweepOptions opts{seed, overrides, out_dir};
    auto rows = scenario::sweep(matrix, opts);
    auto table = scenario::sweep_table(rows);
    std::cout << table;
    if (out_dir) {
        fs::create_directories(*out_dir);
        std::ofstream(*out_dir / "sweep.txt", std::ios::binary) << table;
        std::ofstream(*out_dir / "sweep.json", std::ios::binary) << scenario::sweep_json(rows);
    }
    for (const auto& r : rows)
        if (!r.ok) return kRuntimeError;
    return kOk;
}

std::string record_line(const capture::CaptureRecord& r) {
    std::string where = fmt::format("{:>12.3f} #{:<6} {:<9} {:<3}", r.ts_ms(), r.id, r.point,
                                    capture::to_string(r.direction));
    if (r.kind == capture::Kind::Arp) {
        auto arp = r.arp();
        if (!arp) return where + " ARP (malformed)";
        return fmt::format("{} ARP {} {} is-at {} (eth {} -> {})", where,
                           arp->op == net::ArpOp::Reply ? "reply" : "request", arp->sender_ip.to_string(),
                           arp->sender_mac.to_string(), r.src_mac.to_string(), r.dst_mac.to_string());
    }
    auto line = fmt::format("{} TCP {}:{} -> {}:{} seq={} ack={} len={}{}", where, r.src_ip.to_string(), r.src_port,
                            r.dst_ip.to_string(), r.dst_port, r.seq, r.ack, r.raw.size(),
                            r.retransmission ? " RETRANSMISSION" : "");
    if (r.dnp3) line += fmt::format(" | {}{}", r.dnp3->summary, r.dnp3->crc_valid ? "" : " [CRC MISMATCH]");
    if (r.pclass) line += fmt::format(" class={}", *r.pclass);
    if (r.ref) line += fmt::format(" ref=#{}", *r.ref);
    return line;
}

int cmd_inspect(const std::string& input) {
    std::string hex = input;
    std::error_code ec;
    if (fs::is_regular_file(input, ec)) {
        auto text = slurp(input);
        if (text.rfind(capture::header_line(), 0) == 0) {
            std::istringstream in(text);
            for (const auto& r : capture::read_jsonl(in)) std::cout << record_line(r) << "\n";
            return kOk;
        }
        hex = text;
    }
    Bytes bytes;
    try {
        bytes = parse_hex(hex);
    } catch (const std::invalid_argument& e) {
        throw InputError(fmt::format("input is neither a capture file nor hex: {}", e.what()));
    }
    auto report = codec::inspect_frame(bytes);
    std::cout << codec::render_report(bytes, report);
    return kOk;
}

int cmd_compare(const fs::path& baseline, const fs::path& attack, bool as_json) {
    auto a = slurp(baseline);
    auto b = slurp(attack);
    std::cout << (as_json ? metrics::compare_json(a, b) : metrics::compare_text(a, b));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DNP3 man-in-the-middle lab: simulation runs, sweeps and frame inspection"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Override the scenario seed");
        sub->add_option("--out-dir", out_dir, "Artifact directory")->capture_default_str();
        sub->add_option("--override", overrides, "Scenario field override, dotted.key=value")->take_all();
    };

    std::string run_file;
    auto* run = app.add_subcommand("run", "Run one scenario and write its artifacts");
    run->add_option("file", run_file, "Scenario file")->required();
    common(run);

    std::string sweep_file;
    auto* sweep = app.add_subcommand("sweep", "Run every cell of a sweep matrix");
    sweep->add_option("file", sweep_file, "Sweep matrix file")->required();
    common(sweep);

    std::string inspect_input;
    auto* inspect = app.add_subcommand("inspect", "Decode a frame given as hex, or list a capture file");
    inspect->add_option("input", inspect_input, "Hex string, hex file or capture file")->required();

    std::string cmp_a, cmp_b;
    bool cmp_json = false;
    auto* compare = app.add_subcommand("compare", "Deltas between two metrics files (second minus first)");
    compare->add_option("baseline", cmp_a, "Baseline metrics JSON")->required();
    compare->add_option("attack", cmp_b, "Attack metrics JSON")->required();
    compare->add_flag("--json", cmp_json, "Emit JSON instead of text");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        auto rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) return cmd_run(run_file, seed, out_dir, overrides);
        if (*sweep) {
            std::optional<fs::path> dir;
            if (sweep->count("--out-dir")) dir = out_dir;
            return cmd_sweep(sweep_file, seed, dir, overrides);
        }
        if (*inspect) return cmd_inspect(inspect_input);
        if (*compare) return cmd_compare(cmp_a, cmp_b, cmp_json);
    } catch (const scenario::ScenarioError& e) {
        if (e.code() == scenario::ScenarioErrc::Io) {
            std::cerr << "error: " << e.what() << "\n";
            return kConfigError;
        }
        std::cerr << "configuration invalid:\n";
        for (const auto& d : e.diagnostics()) std::cerr << "  " << d << "\n";
        return kConfigError;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const capture::CaptureError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kOk;
}
