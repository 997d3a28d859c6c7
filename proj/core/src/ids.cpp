#include "dnp3lab/ids.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <istream>
#include <ostream>
#include <regex>
#include <set>

namespace dnp3lab::ids {

namespace {

constexpr RuleId kRules[] = {RuleId::R1, RuleId::R2, RuleId::R3, RuleId::R4, RuleId::R5, RuleId::CrcFail};

}  // namespace

std::string_view to_string(RuleId r) {
    switch (r) {
    case RuleId::R1: return "R1";
    case RuleId::R2: return "R2";
    case RuleId::R3: return "R3";
    case RuleId::R4: return "R4";
    case RuleId::R5: return "R5";
    case RuleId::CrcFail: return "CRC_FAIL";
    }
    return "?";
}

std::optional<RuleId> parse_rule(std::string_view name) {
    for (auto r : kRules)
        if (to_string(r) == name) return r;
    return std::nullopt;
}

std::string_view message(RuleId r) {
    switch (r) {
    case RuleId::R1: return "ARPSPOOF_ETHERFRAME_ARP_MISMATCH_SRC";
    case RuleId::R2: return "ARPSPOOF_ETHERFRAME_ARP_MISMATCH_DST";
    case RuleId::R3: return "ARPSPOOF_ARP_CACHE_OVERWRITE_ATTACK";
    case RuleId::R4: return "DNP3 Snort DIRECT OPERATE";
    case RuleId::R5: return "DNP3 Snort OPERATE";
    case RuleId::CrcFail: return "DNP3 Link-Layer Frame contains bad CRC";
    }
    return "";
}

bool is_arp_rule(RuleId r) { return r == RuleId::R1 || r == RuleId::R2 || r == RuleId::R3; }

Ids::Ids(IdsConfig config) : config_(std::move(config)) {
    std::set<net::IpAddr> seen;
    for (const auto& e : config_.whitelist) {
        if (!seen.insert(e.ip).second) {
            throw IdsError(IdsErrc::DuplicateWhitelistEntry, "whitelist lists " + e.ip.to_string() + " twice");
        }
    }
}

std::optional<net::MacAddr> Ids::whitelisted(const net::IpAddr& ip) const {
    for (const auto& e : config_.whitelist)
        if (e.ip == ip) return e.mac;
    return std::nullopt;
}

AlertRecord Ids::alert(const capture::CaptureRecord& record, RuleId rule) const {
    return AlertRecord{record.ts, rule, std::string(message(rule)), record.src_ip, record.dst_ip, record.id};
}

std::vector<AlertRecord> Ids::inspect_arp(const capture::CaptureRecord& record) const {
    std::vector<AlertRecord> out;
    auto arp = record.arp();
    if (!arp) return out;
    if (auto mac = whitelisted(arp->sender_ip)) {
        if (arp->sender_mac != record.src_mac || arp->sender_mac != *mac) out.push_back(alert(record, RuleId::R1));
    }
    if (arp->op == net::ArpOp::Reply) {
        if (auto mac = whitelisted(arp->target_ip)) {
            if (arp->target_mac != record.dst_mac || arp->target_mac != *mac) out.push_back(alert(record, RuleId::R2));
        }
        if (auto mac = whitelisted(arp->sender_ip); mac && arp->sender_mac != *mac) {
            out.push_back(alert(record, RuleId::R3));
        }
    }
    return out;
}

std::vector<AlertRecord> Ids::inspect_dnp3(const capture::CaptureRecord& record) const {
    std::vector<AlertRecord> out;
    if (record.kind != capture::Kind::Transport || !record.dnp3) return out;
    bool toward = record.dst_port == config_.dnp3_port;
    if (!toward && record.src_port != config_.dnp3_port) return out;
    if (!record.dnp3->crc_valid) out.push_back(alert(record, RuleId::CrcFail));
    bool target = config_.dnp3_targets.empty() ||
                  std::find(config_.dnp3_targets.begin(), config_.dnp3_targets.end(), record.dst_ip) !=
                      config_.dnp3_targets.end();
    if (toward && target) {
        if (record.dnp3->function == 0x05) out.push_back(alert(record, RuleId::R4));
        if (record.dnp3->function == 0x04) out.push_back(alert(record, RuleId::R5));
    }
    return out;
}

std::vector<AlertRecord> Ids::inspect(const capture::CaptureRecord& record) const {
    return record.kind == capture::Kind::Arp ? inspect_arp(record) : inspect_dnp3(record);
}

void Ids::attach(capture::Capture& capture) {
    capture.add_listener([this](const capture::CaptureRecord& record) {
        if (record.point != config_.point) return;
        auto found = inspect(record);
        alerts_.insert(alerts_.end(), found.begin(), found.end());
    });
}

void Ids::replay(const std::vector<capture::CaptureRecord>& records) {
    for (const auto& r : records) {
        if (r.point != config_.point) continue;
        auto found = inspect(r);
        alerts_.insert(alerts_.end(), found.begin(), found.end());
    }
}

// ---------------------------------------------------------------------------
// Alert log

std::string format_alert(const AlertRecord& a) {
    return fmt::format("[{:.3f}] [{}] \"{}\" {} -> {} capture={}", sim::to_ms(a.ts), to_string(a.rule), a.message,
                       a.src.to_string(), a.dst.to_string(), a.capture_id);
}

AlertRecord parse_alert(std::string_view line) {
    static const std::regex re(R"re(^\[(-?[0-9]+(?:\.[0-9]+)?)\] \[([A-Z0-9_]+)\] "([^"]*)" (\S+) -> (\S+) capture=([0-9]+)$)re");
    std::cmatch m;
    if (!std::regex_match(line.data(), line.data() + line.size(), m, re)) {
        throw IdsError(IdsErrc::MalformedAlert, fmt::format("unparseable alert line: {}", line));
    }
    AlertRecord a;
    a.ts = sim::from_ms(std::stod(m[1].str()));
    auto rule = parse_rule(m[2].str());
    auto src = net::IpAddr::parse(m[4].str());
    auto dst = net::IpAddr::parse(m[5].str());
    if (!rule || !src || !dst) throw IdsError(IdsErrc::MalformedAlert, fmt::format("bad field in alert: {}", line));
    a.rule = *rule;
    a.message = m[3].str();
    a.src = *src;
    a.dst = *dst;
    a.capture_id = std::stoull(m[6].str());
    return a;
}

std::string header_line() { return "# dnp3lab alerts v1"; }

void write_log(std::ostream& out, const std::vector<AlertRecord>& alerts) {
    out << header_line() << '\n';
    for (const auto& a : alerts) out << format_alert(a) << '\n';
}

std::vector<AlertRecord> read_log(std::istream& in) {
    std::vector<AlertRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        out.push_back(parse_alert(line));
    }
    return out;
}

}  // namespace dnp3lab::ids
