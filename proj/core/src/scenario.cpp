#include "dnp3lab/scenario.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#ifndef DNP3LAB_VERSION
#define DNP3LAB_VERSION "0.0.0"
#endif

namespace dnp3lab::scenario {

using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kSchema = "dnp3lab.scenario";
constexpr std::string_view kSweepSchema = "dnp3lab.sweep";
constexpr int kVersion = 1;

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
    return out;
}

[[noreturn]] void invalid(std::vector<std::string> diagnostics) {
    throw ScenarioError(ScenarioErrc::ConfigInvalid, std::move(diagnostics));
}

class Reader {
public:
    Reader(const json& j, std::vector<std::string>& errors, std::string prefix = "")
        : j_(j), errors_(errors), prefix_(std::move(prefix)) {}

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).template get<T>();
        } catch (const json::exception&) {
            errors_.push_back(fmt::format("{}{}: wrong type ({})", prefix_, key, j_.at(key).dump()));
        }
    }

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    const json& at(const char* key) { return j_.at(key); }

    void reject_unknown() {
        for (const auto& [k, _] : j_.items())
            if (!seen_.count(k)) errors_.push_back(fmt::format("{}{}: unknown field", prefix_, k));
    }

private:
    const json& j_;
    std::vector<std::string>& errors_;
    std::string prefix_;
    std::set<std::string> seen_;
};

void apply_override(json& doc, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) invalid({fmt::format("override '{}': expected key=value", assignment)});
    auto key = assignment.substr(0, eq);
    auto text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;
    }
    json* node = &doc;
    std::stringstream path(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(path, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].empty()) invalid({fmt::format("override '{}': empty path segment", assignment)});
        if (!node->is_object()) invalid({fmt::format("override '{}': {} is not an object", assignment, parts[i - 1])});
        if (i + 1 == parts.size()) {
            (*node)[parts[i]] = value;
        } else {
            node = &(*node)[parts[i]];
            if (node->is_null()) *node = json::object();
        }
    }
}

void check_header(const json& doc, std::string_view schema, std::vector<std::string>& errors) {
    if (!doc.contains("schema") || !doc["schema"].is_string() || doc["schema"].get<std::string>() != schema)
        errors.push_back(fmt::format("schema: expected \"{}\"", schema));
    if (!doc.contains("version") || !doc["version"].is_number_integer() || doc["version"].get<int>() != kVersion)
        errors.push_back(fmt::format("version: expected {}", kVersion));
}

AdversaryBlock parse_adversary(const json& j, std::vector<std::string>& errors) {
    AdversaryBlock a;
    if (!j.is_object()) {
        errors.push_back("adversary: expected an object");
        return a;
    }
    Reader r(j, errors, "adversary.");
    r.get("masking", a.masking);
    r.get("recompute_crc", a.recompute_crc);
    r.get("forged_setpoint", a.forged_setpoint);
    r.get("queue_limit", a.queue_limit);
    r.get("sniff_stride", a.sniff_stride);
    r.get("repoison_interval_ms", a.repoison_interval_ms);
    r.get("jitter", a.delays.jitter);
    if (r.has("delays_ms")) {
        const auto& d = r.at("delays_ms");
        if (!d.is_object()) {
            errors.push_back("adversary.delays_ms: expected an object");
        } else {
            for (const auto& [name, v] : d.items()) {
                auto cls = mitm::parse_packet_class(name);
                if (!cls || !v.is_number()) {
                    errors.push_back(fmt::format("adversary.delays_ms.{}: unknown class or non-numeric", name));
                    continue;
                }
                a.delays.set_mean(*cls, v.get<double>());
            }
        }
    }
    if (r.has("mod_points")) {
        a.mod_points.clear();
        const auto& list = r.at("mod_points");
        if (!list.is_array()) errors.push_back("adversary.mod_points: expected an array");
        for (std::size_t i = 0; list.is_array() && i < list.size(); ++i) {
            std::vector<std::string> local;
            Reader m(list[i], local, fmt::format("adversary.mod_points[{}].", i));
            AdversaryBlock::ModPoint mp;
            if (m.has("outstation")) {
                const auto& o = m.at("outstation");
                if (o.is_string() && o.get<std::string>() == "all") {
                    mp.outstation = -1;
                } else {
                    m.get("outstation", mp.outstation);
                }
            }
            std::string type = "AI";
            m.get("type", type);
            auto t = codec::parse_point_type(type);
            if (!t || *t == codec::PointType::Class0 || *t == codec::PointType::Counter) {
                local.push_back(fmt::format("adversary.mod_points[{}].type: unsupported \"{}\"", i, type));
            } else {
                mp.type = *t;
            }
            m.get("index", mp.index);
            m.get("value", mp.value);
            m.reject_unknown();
            errors.insert(errors.end(), local.begin(), local.end());
            a.mod_points.push_back(mp);
        }
    }
    r.reject_unknown();
    return a;
}

json adversary_json(const AdversaryBlock& a) {
    json j;
    j["masking"] = a.masking;
    j["recompute_crc"] = a.recompute_crc;
    j["forged_setpoint"] = a.forged_setpoint;
    json mods = json::array();
    for (const auto& m : a.mod_points) {
        mods.push_back({{"outstation", m.outstation < 0 ? json("all") : json(m.outstation)},
                        {"type", std::string(codec::to_string(m.type))},
                        {"index", m.index},
                        {"value", m.value}});
    }
    j["mod_points"] = mods;
    json delays = json::object();
    for (auto c : mitm::kPacketClasses) delays[std::string(mitm::to_string(c))] = a.delays.mean(c);
    j["delays_ms"] = delays;
    j["jitter"] = a.delays.jitter;
    j["queue_limit"] = a.queue_limit;
    j["sniff_stride"] = a.sniff_stride;
    j["repoison_interval_ms"] = a.repoison_interval_ms;
    return j;
}

const char* kDefaultScript = R"([
  {"name": "close-breaker", "trigger": {"at_s": 30, "every_s": 120},
   "action": {"outstation": "all", "type": "BO", "index": 7, "control": "close"}},
  {"name": "dispatch", "trigger": {"at_s": 45, "every_s": 120},
   "action": {"outstation": "all", "type": "AO", "index": 2, "value": 275}},
  {"name": "trip-breaker", "trigger": {"at_s": 90, "every_s": 120},
   "action": {"outstation": "all", "type": "BO", "index": 7, "control": "trip"}},
  {"name": "restore-low-reading",
   "trigger": {"point": {"outstation": "any", "type": "AI", "index": 2, "op": "<", "value": 100}},
   "action": {"outstation": "trigger", "type": "AO", "index": 2, "value": "restore"}}
])";

}  // namespace

ScenarioError::ScenarioError(ScenarioErrc code, std::vector<std::string> diagnostics)
    : CodedError(code, join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

endpoints::OperatorScript default_script() { return endpoints::OperatorScript::parse(kDefaultScript); }

void ScenarioConfig::validate() const {
    std::vector<std::string> e;
    if (name.empty() || name.find_first_of("/\\") != std::string::npos)
        e.push_back("name: must be a non-empty file stem");
    if (use_case < 0 || use_case > 4) e.push_back(fmt::format("use_case: {} outside 0..4", use_case));
    if (outstations < 1 || outstations > 200) e.push_back(fmt::format("outstations: {} outside 1..200", outstations));
    if (!(polling_interval_s > 0)) e.push_back("polling_interval_s: must be positive");
    if (!(run_duration_s > 0)) e.push_back("run_duration_s: must be positive");
    if (!(attack_start_s >= 0)) e.push_back("attack_start_s: must be non-negative");
    if (attack_stop_s < attack_start_s) e.push_back("attack_stop_s: precedes attack_start_s");
    if (attack_stop_s > run_duration_s) e.push_back("attack_stop_s: beyond run_duration_s");
    if (!(cross_traffic_hz >= 0) || !std::isfinite(cross_traffic_hz))
        e.push_back("cross_traffic_hz: must be non-negative");
    if (!(link_latency_ms > 0)) e.push_back("link_latency_ms: must be positive");
    if (!(retransmission_timeout_ms > 0)) e.push_back("retransmission_timeout_ms: must be positive");
    if (use_case == 0 && adversary) e.push_back("adversary: not allowed when use_case is 0");
    if (use_case > 0 && adversary) {
        const auto& a = *adversary;
        if (a.queue_limit == 0) e.push_back("adversary.queue_limit: must be positive");
        if (a.sniff_stride <= 0) e.push_back("adversary.sniff_stride: must be positive");
        if (!(a.repoison_interval_ms > 0)) e.push_back("adversary.repoison_interval_ms: must be positive");
        if (!(a.delays.jitter >= 0 && a.delays.jitter < 1)) e.push_back("adversary.jitter: must be in [0, 1)");
        for (auto c : mitm::kPacketClasses)
            if (!(a.delays.mean(c) > 0)) e.push_back(fmt::format("adversary.delays_ms.{}: must be positive", mitm::to_string(c)));
        for (std::size_t i = 0; i < a.mod_points.size(); ++i)
            if (a.mod_points[i].outstation >= outstations)
                e.push_back(fmt::format("adversary.mod_points[{}].outstation: no such outstation", i));
    }
    std::set<net::IpAddr> seen;
    for (const auto& w : whitelist)
        if (!seen.insert(w.ip).second) e.push_back(fmt::format("ids.whitelist: {} listed twice", w.ip.to_string()));
    if (!e.empty()) invalid(std::move(e));
}

mitm::AdversaryConfig ScenarioConfig::adversary_config() const {
    mitm::AdversaryConfig ac;
    AdversaryBlock a = adversary.value_or(AdversaryBlock{});
    ac.use_case = std::max(use_case, 1);
    ac.masking = a.masking;
    ac.recompute_crc = a.recompute_crc;
    ac.forged_setpoint = a.forged_setpoint;
    ac.mod_points.clear();
    for (const auto& m : a.mod_points) {
        mitm::ModPoint mp;
        if (m.outstation >= 0) mp.outstation = Testbed::outstation_address(m.outstation);
        mp.type = m.type;
        mp.index = m.index;
        mp.value = m.value;
        ac.mod_points.push_back(mp);
    }
    ac.delays = a.delays;
    ac.queue_limit = a.queue_limit;
    ac.sniff_stride = a.sniff_stride;
    ac.attack_start = sim::from_s(attack_start_s);
    ac.attack_stop = sim::from_s(attack_stop_s);
    ac.repoison_interval = sim::from_ms(a.repoison_interval_ms);
    ac.seed = seed * 0x9E3779B97F4A7C15ULL + 7;
    return ac;
}

TestbedConfig ScenarioConfig::testbed_config() const {
    TestbedConfig c;
    c.outstations = outstations;
    c.master.polling_interval = sim::from_s(polling_interval_s);
    c.script = script;
    c.net.link_latency = sim::from_ms(link_latency_ms);
    c.net.retransmission_timeout = sim::from_ms(retransmission_timeout_ms);
    c.cross_traffic_hz = cross_traffic_hz;
    c.with_adversary = use_case > 0;
    c.seed = seed;
    return c;
}

metrics::Phases ScenarioConfig::phases() const {
    return {sim::from_s(attack_start_s), sim::from_s(attack_stop_s)};
}

ScenarioConfig parse(std::string_view text, const std::vector<std::string>& overrides) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        invalid({fmt::format("scenario is not valid JSON: {}", e.what())});
    }
    if (!doc.is_object()) invalid({"scenario: expected a JSON object"});
    for (const auto& o : overrides) apply_override(doc, o);

    std::vector<std::string> errors;
    check_header(doc, kSchema, errors);
    ScenarioConfig c;
    Reader r(doc, errors);
    r.has("schema");
    r.has("version");
    r.get("name", c.name);
    r.get("seed", c.seed);
    r.get("use_case", c.use_case);
    r.get("outstations", c.outstations);
    r.get("polling_interval_s", c.polling_interval_s);
    r.get("run_duration_s", c.run_duration_s);
    r.get("attack_start_s", c.attack_start_s);
    r.get("attack_stop_s", c.attack_stop_s);
    r.get("cross_traffic_hz", c.cross_traffic_hz);
    r.get("link_latency_ms", c.link_latency_ms);
    r.get("retransmission_timeout_ms", c.retransmission_timeout_ms);
    if (r.has("operator_script")) {
        try {
            c.script = endpoints::OperatorScript::parse(r.at("operator_script").dump());
        } catch (const endpoints::ScriptError& e) {
            errors.push_back(fmt::format("operator_script: {}", e.what()));
        }
    } else {
        c.script = default_script();
    }
    if (r.has("adversary") && !r.at("adversary").is_null()) {
        c.adversary = parse_adversary(r.at("adversary"), errors);
    } else if (c.use_case > 0) {
        c.adversary = AdversaryBlock{};
    }
    if (r.has("ids")) {
        const auto& ids = r.at("ids");
        std::vector<std::string> local;
        Reader ir(ids, local, "ids.");
        if (ir.has("whitelist")) {
            const auto& wl = ir.at("whitelist");
            if (wl.is_string() && wl.get<std::string>() == "auto") {
            } else if (wl.is_array()) {
                for (std::size_t i = 0; i < wl.size(); ++i) {
                    auto ip = wl[i].is_object() && wl[i].contains("ip") && wl[i]["ip"].is_string()
                                  ? net::IpAddr::parse(wl[i]["ip"].get<std::string>())
                                  : std::nullopt;
                    auto mac = wl[i].is_object() && wl[i].contains("mac") && wl[i]["mac"].is_string()
                                   ? net::MacAddr::parse(wl[i]["mac"].get<std::string>())
                                   : std::nullopt;
                    if (!ip || !mac) {
                        local.push_back(fmt::format("ids.whitelist[{}]: expected {{\"ip\", \"mac\"}}", i));
                        continue;
                    }
                    c.whitelist.push_back({*ip, *mac});
                }
            } else {
                local.push_back("ids.whitelist: expected \"auto\" or an array");
            }
        }
        if (ids.is_object()) ir.reject_unknown();
        errors.insert(errors.end(), local.begin(), local.end());
    }
    r.reject_unknown();
    try {
        c.validate();
    } catch (const ScenarioError& e) {
        errors.insert(errors.end(), e.diagnostics().begin(), e.diagnostics().end());
    }
    if (!errors.empty()) invalid(std::move(errors));
    return c;
}

ScenarioConfig load(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ScenarioError(ScenarioErrc::Io, {fmt::format("cannot open {}", file.string())});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), overrides);
}

std::string to_json(const ScenarioConfig& c) {
    json j;
    j["schema"] = kSchema;
    j["version"] = kVersion;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["use_case"] = c.use_case;
    j["outstations"] = c.outstations;
    j["polling_interval_s"] = c.polling_interval_s;
    j["run_duration_s"] = c.run_duration_s;
    j["attack_start_s"] = c.attack_start_s;
    j["attack_stop_s"] = c.attack_stop_s;
    j["cross_traffic_hz"] = c.cross_traffic_hz;
    j["link_latency_ms"] = c.link_latency_ms;
    j["retransmission_timeout_ms"] = c.retransmission_timeout_ms;
    j["operator_script"] = json::parse(c.script.to_json());
    if (c.adversary) j["adversary"] = adversary_json(*c.adversary);
    if (c.whitelist.empty()) {
        j["ids"] = {{"whitelist", "auto"}};
    } else {
        json wl = json::array();
        for (const auto& w : c.whitelist) wl.push_back({{"ip", w.ip.to_string()}, {"mac", w.mac.to_string()}});
        j["ids"] = {{"whitelist", wl}};
    }
    return j.dump(2) + "\n";
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Running

RunResult run(const ScenarioConfig& config) {
    config.validate();
    Testbed tb(config.testbed_config());

    ids::IdsConfig ic;
    ic.dnp3_port = tb.network.config().dnp3_port;
    if (config.whitelist.empty()) {
        for (const auto& [ip, mac] : tb.whitelist()) ic.whitelist.push_back({ip, mac});
    } else {
        ic.whitelist = config.whitelist;
    }
    for (int i = 0; i < config.outstations; ++i) ic.dnp3_targets.push_back(Testbed::outstation_ip(i));
    ids::Ids sensor(ic);
    sensor.attach(tb.network.capture());

    std::unique_ptr<mitm::Adversary> adversary;
    if (config.use_case > 0) {
        mitm::Victims v{Testbed::router_lan_ip(), {}};
        for (int i = 0; i < config.outstations; ++i) v.outstation_ips.push_back(Testbed::outstation_ip(i));
        adversary = std::make_unique<mitm::Adversary>(*tb.adversary_node, v, config.adversary_config());
    }

    auto end = sim::from_s(config.run_duration_s);
    tb.start(end);
    tb.run_until(end);

    RunResult result;
    result.capture = tb.network.capture().records();
    result.alerts = sensor.alerts();
    result.report = metrics::analyze(result.capture, result.alerts, config.phases(), ic.dnp3_port);
    result.verdicts = tb.master->verdicts();
    for (const auto& v : result.verdicts) result.mismatches += v.verdict == endpoints::Verdict::Mismatch;
    if (adversary) result.adversary_events = adversary->events();
    for (const auto& o : tb.outstations) result.plant.push_back(o->state());
    return result;
}

RunArtifacts write_artifacts(const RunResult& result, const ScenarioConfig& config, std::string_view config_bytes,
                             const std::vector<std::string>& overrides, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw ScenarioError(ScenarioErrc::Io, {fmt::format("cannot create {}: {}", out_dir.string(), ec.message())});

    RunArtifacts a;
    a.capture = out_dir / (config.name + ".capture.jsonl");
    a.alerts = out_dir / (config.name + ".alerts.log");
    a.metrics_json = out_dir / (config.name + ".metrics.json");
    a.metrics_text = out_dir / (config.name + ".metrics.txt");
    a.manifest = out_dir / (config.name + ".manifest.json");

    auto open = [](const std::filesystem::path& p) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw ScenarioError(ScenarioErrc::Io, {fmt::format("cannot write {}", p.string())});
        return out;
    };
    {
        auto out = open(a.capture);
        capture::write_jsonl(out, result.capture);
    }
    {
        auto out = open(a.alerts);
        ids::write_log(out, result.alerts);
    }
    open(a.metrics_json) << metrics::to_json(result.report);
    open(a.metrics_text) << fmt::format("scenario {}\n", config.name) << metrics::to_text(result.report);

    json m;
    m["schema"] = "dnp3lab.manifest";
    m["version"] = kVersion;
    m["scenario"] = config.name;
    m["seed"] = config.seed;
    m["use_case"] = config.use_case;
    m["config_fnv1a64"] = fmt::format("{:016x}", fnv1a64(config_bytes));
    m["config_bytes"] = config_bytes.size();
    m["overrides"] = overrides;
    m["tool_version"] = DNP3LAB_VERSION;
    m["artifacts"] = {{"capture", a.capture.filename().string()},
                      {"alerts", a.alerts.filename().string()},
                      {"metrics_json", a.metrics_json.filename().string()},
                      {"metrics_text", a.metrics_text.filename().string()}};
    m["records"] = result.capture.size();
    m["alerts"] = result.alerts.size();
    open(a.manifest) << m.dump(2) << "\n";
    return a;
}

// ---------------------------------------------------------------------------
// Sweeps

std::string Cell::name() const {
    return fmt::format("UC{}_{}OS_{:g}", use_case, outstations, polling_interval_s);
}

std::vector<Cell> SweepMatrix::cells() const {
    std::set<Cell> out;
    for (int uc : use_cases)
        for (int os : outstations)
            for (double pi : polling_intervals_s) {
                if (std::find(exclude.begin(), exclude.end(), std::make_pair(uc, os)) != exclude.end()) continue;
                out.insert({uc, os, pi});
            }
    return {out.begin(), out.end()};
}

SweepMatrix parse_sweep(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        invalid({fmt::format("sweep is not valid JSON: {}", e.what())});
    }
    if (!doc.is_object()) invalid({"sweep: expected a JSON object"});
    std::vector<std::string> errors;
    check_header(doc, kSweepSchema, errors);
    SweepMatrix m;
    Reader r(doc, errors);
    r.has("schema");
    r.has("version");
    r.get("use_cases", m.use_cases);
    r.get("outstations", m.outstations);
    r.get("polling_intervals_s", m.polling_intervals_s);
    if (r.has("exclude")) {
        m.exclude.clear();
        const auto& ex = r.at("exclude");
        for (std::size_t i = 0; ex.is_array() && i < ex.size(); ++i) {
            if (!ex[i].is_object() || !ex[i].contains("use_case") || !ex[i].contains("outstations") ||
                !ex[i]["use_case"].is_number_integer() || !ex[i]["outstations"].is_number_integer()) {
                errors.push_back(fmt::format("exclude[{}]: expected {{\"use_case\", \"outstations\"}}", i));
                continue;
            }
            m.exclude.emplace_back(ex[i]["use_case"].get<int>(), ex[i]["outstations"].get<int>());
        }
        if (!ex.is_array()) errors.push_back("exclude: expected an array");
    }
    if (r.has("base")) {
        if (!r.at("base").is_object()) errors.push_back("base: expected an object");
        else m.base = r.at("base").dump();
    }
    r.reject_unknown();
    for (int uc : m.use_cases)
        if (uc < 0 || uc > 4) errors.push_back(fmt::format("use_cases: {} outside 0..4", uc));
    if (!errors.empty()) invalid(std::move(errors));
    return m;
}

std::vector<SweepRow> sweep(const SweepMatrix& matrix, const SweepOptions& options) {
    std::vector<SweepRow> rows;
    for (const auto& cell : matrix.cells()) {
        SweepRow row;
        row.cell = cell;
        try {
            json doc = json::parse(matrix.base);
            doc["schema"] = kSchema;
            doc["version"] = kVersion;
            doc["name"] = cell.name();
            doc["use_case"] = cell.use_case;
            doc["outstations"] = cell.outstations;
            doc["polling_interval_s"] = cell.polling_interval_s;
            if (options.seed) doc["seed"] = *options.seed;
            auto text = doc.dump(2) + "\n";
            auto config = parse(text, options.overrides);
            auto result = run(config);
            if (options.out_dir) write_artifacts(result, config, text, options.overrides, *options.out_dir);
            const auto& rep = result.report;
            row.retransmission = rep.retransmission;
            if (auto it = rep.rtt.by_phase.find(metrics::Phase::Baseline); it != rep.rtt.by_phase.end())
                row.rtt_baseline_ms = it->second.mean;
            if (auto it = rep.rtt.by_phase.find(metrics::Phase::Attack); it != rep.rtt.by_phase.end())
                row.rtt_attack_ms = it->second.mean;
            for (const auto& s : rep.rtt.samples) row.rtt_above_cutoff += s.above_cutoff;
            row.mismatches = result.mismatches;
            for (const auto& b : rep.correlation) row.compromised_minutes += b.compromised;
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
    std::string out = fmt::format("{:<14} {:>6} {:>9} {:>10} {:>13} {:>13} {:>5} {:>10} {:>11}\n", "scenario", "N_R",
                                  "T_R[s]", "R_R[1/s]", "RTT base[ms]", "RTT atk[ms]", ">RTO", "mismatch", "compromised");
    for (const auto& r : rows) {
        if (!r.ok) {
            out += fmt::format("{:<14} FAILED: {}\n", r.cell.name(), r.error);
            continue;
        }
        auto rr = r.retransmission.r_r ? fmt::format("{:.4f}", *r.retransmission.r_r) : std::string("undefined");
        out += fmt::format("{:<14} {:>6} {:>9.3f} {:>10} {:>13.3f} {:>13.3f} {:>5} {:>10} {:>11}\n", r.cell.name(),
                           r.retransmission.n_r, r.retransmission.t_r_s, rr, r.rtt_baseline_ms, r.rtt_attack_ms,
                           r.rtt_above_cutoff, r.mismatches, r.compromised_minutes);
    }
    return out;
}

std::string sweep_json(const std::vector<SweepRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        json j;
        j["scenario"] = r.cell.name();
        j["use_case"] = r.cell.use_case;
        j["outstations"] = r.cell.outstations;
        j["polling_interval_s"] = r.cell.polling_interval_s;
        j["ok"] = r.ok;
        if (!r.ok) {
            j["error"] = r.error;
        } else {
            j["n_r"] = r.retransmission.n_r;
            j["t_r_s"] = r.retransmission.t_r_s;
            j["r_r"] = r.retransmission.r_r ? json(*r.retransmission.r_r) : json(nullptr);
            j["rtt_baseline_ms"] = r.rtt_baseline_ms;
            j["rtt_attack_ms"] = r.rtt_attack_ms;
            j["rtt_above_cutoff"] = r.rtt_above_cutoff;
            j["mismatches"] = r.mismatches;
            j["compromised_minutes"] = r.compromised_minutes;
        }
        out.push_back(j);
    }
    return out.dump(2) + "\n";
}

}  // namespace dnp3lab::scenario
