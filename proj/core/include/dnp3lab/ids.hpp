#pragma once

// Rule-based intrusion detection over capture records: an ARP whitelist
// preprocessor, a DNP3 preprocessor with CRC checking, and content rules.

#include "dnp3lab/capture.hpp"
#include "dnp3lab/error.hpp"
#include "dnp3lab/net.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dnp3lab::ids {

enum class RuleId { R1, R2, R3, R4, R5, CrcFail };
std::string_view to_string(RuleId r);
std::optional<RuleId> parse_rule(std::string_view name);
std::string_view message(RuleId r);
bool is_arp_rule(RuleId r);

enum class IdsErrc { DuplicateWhitelistEntry, MalformedAlert };

class IdsError : public CodedError<IdsErrc> {
public:
    using CodedError::CodedError;
};

struct WhitelistEntry {
    net::IpAddr ip;
    net::MacAddr mac;
};

struct AlertRecord {
    sim::SimTime ts{0};
    RuleId rule = RuleId::R1;
    std::string message;
    net::IpAddr src;
    net::IpAddr dst;
    std::uint64_t capture_id = 0;

    friend bool operator==(const AlertRecord&, const AlertRecord&) = default;
};

struct IdsConfig {
    std::vector<WhitelistEntry> whitelist;
    std::uint16_t dnp3_port = 20000;
    /// Destination IPs R4/R5 apply to; empty means any.
    std::vector<net::IpAddr> dnp3_targets;
    /// Capture point the sensor listens on.
    std::string point = "lan";
};

class Ids {
public:
    explicit Ids(IdsConfig config);

    std::vector<AlertRecord> inspect_arp(const capture::CaptureRecord& record) const;
    std::vector<AlertRecord> inspect_dnp3(const capture::CaptureRecord& record) const;
    std::vector<AlertRecord> inspect(const capture::CaptureRecord& record) const;

    /// Inspects records from the configured point as they are captured.
    void attach(capture::Capture& capture);
    /// Inspects every matching record of a finished capture.
    void replay(const std::vector<capture::CaptureRecord>& records);

    const std::vector<AlertRecord>& alerts() const { return alerts_; }
    const IdsConfig& config() const { return config_; }

private:
    std::optional<net::MacAddr> whitelisted(const net::IpAddr& ip) const;
    AlertRecord alert(const capture::CaptureRecord& record, RuleId rule) const;

    IdsConfig config_;
    std::vector<AlertRecord> alerts_;
};

/// `[ts_ms] [RULE] "message" src -> dst capture=<id>`
std::string format_alert(const AlertRecord& alert);
AlertRecord parse_alert(std::string_view line);

std::string header_line();
void write_log(std::ostream& out, const std::vector<AlertRecord>& alerts);
std::vector<AlertRecord> read_log(std::istream& in);

}  // namespace dnp3lab::ids
