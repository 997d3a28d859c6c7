#pragma once

// ARP-poisoned forwarding adversary: command and measurement tampering,
// acknowledgement masking, and a single-server queue with per-class service
// times.

#include "dnp3lab/codec.hpp"
#include "dnp3lab/error.hpp"
#include "dnp3lab/netsim.hpp"

#include <array>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dnp3lab::mitm {

using codec::Dnp3Point;
using codec::PointType;

enum class PacketClass { Bypass, AnalogDo, BinaryDo, ReadResponse };
inline constexpr std::array<PacketClass, 4> kPacketClasses{PacketClass::Bypass, PacketClass::AnalogDo,
                                                           PacketClass::BinaryDo, PacketClass::ReadResponse};
std::string_view to_string(PacketClass c);
std::optional<PacketClass> parse_packet_class(std::string_view name);

/// Class of a DNP3 frame. Anything that does not decode is BYPASS.
PacketClass classify(ByteView dnp3_frame);
/// Class of an Ethernet frame: only transport payloads on the DNP3 port are
/// candidates.
PacketClass classify(const net::Frame& frame, std::uint16_t dnp3_port);

struct DelayModel {
    /// Mean service time in ms, indexed like kPacketClasses.
    std::array<double, 4> mean_ms{22.775, 27.693, 30.217, 35.415};
    double jitter = 0.10;

    double mean(PacketClass c) const { return mean_ms[static_cast<std::size_t>(c)]; }
    void set_mean(PacketClass c, double ms) { mean_ms[static_cast<std::size_t>(c)] = ms; }
    /// Uniform in mean·(1 ± jitter), never below one microsecond.
    sim::Duration sample(PacketClass c, std::mt19937_64& rng) const;
    void validate() const;
};

enum class MitmErrc { PointNotFound, StaleDatabase, MalformedObjectBlock, QueueOverflow, InvalidConfig };
std::string_view to_string(MitmErrc e);

class MitmError : public CodedError<MitmErrc> {
public:
    using CodedError::CodedError;
};

// ---------------------------------------------------------------------------
// Frame-level operations

/// Result of tampering with one point of a frame.
struct Edit {
    Bytes frame;
    PointType type = PointType::BO;
    std::uint16_t index = 0;
    /// Point as carried by the input frame.
    std::uint8_t original_status = 0;
    double original_value = 0.0;
    /// Chunks whose octets changed.
    std::vector<std::size_t> chunks;
};

/// Inverts the control octet of a binary DIRECT OPERATE (0x41 <-> 0x81).
Edit modify_binary_direct_operate(ByteView frame, bool recompute_crc = true);
/// Replaces the setpoint of an analog DIRECT OPERATE.
Edit modify_analog_direct_operate(ByteView frame, float forged, bool recompute_crc = true);

struct ModPoint {
    std::optional<std::uint16_t> outstation;  // DNP3 source address; nullopt matches every outstation
    PointType type = PointType::AI;
    std::uint16_t index = 0;
    double value = 20.0;

    bool applies_to(std::uint16_t address) const { return !outstation || *outstation == address; }
};

struct SniffState {
    std::map<std::uint16_t, std::vector<Dnp3Point>> database;  // by outstation address
    std::map<std::uint16_t, std::uint64_t> counters;
    int stride = 5;
};

/// Counts non-empty solicited responses per outstation and stores every
/// point of each stride-th one. Returns true when the database was updated.
bool sniff_read_response(ByteView frame, SniffState& state);

/// Rewrites targeted points of a read response in place. Points absent from
/// the database or the frame are skipped; a point whose chunk placement
/// differs from the database raises StaleDatabase.
Bytes modify_read_response(ByteView frame, const std::vector<Dnp3Point>& database,
                           const std::vector<ModPoint>& mods, bool recompute_crc = true);

/// Operator intent recorded when a command is tampered with.
struct StoredAck {
    PointType type = PointType::BO;
    std::uint16_t index = 0;
    std::uint8_t control = 0;
    float value = 0.0f;
};

/// Rewrites an operate echo so it carries the stored intent.
Bytes modify_ack(ByteView frame, const StoredAck& intent, bool recompute_crc = true);

// ---------------------------------------------------------------------------
// Adversary node

struct AdversaryConfig {
    int use_case = 1;
    bool masking = true;
    bool recompute_crc = true;
    float forged_setpoint = 20.0f;
    std::vector<ModPoint> mod_points{ModPoint{std::nullopt, PointType::AI, 2, 20.0}};
    DelayModel delays;
    std::size_t queue_limit = 64;
    int sniff_stride = 5;
    sim::SimTime attack_start = std::chrono::seconds(120);
    sim::SimTime attack_stop = std::chrono::seconds(420);
    sim::Duration repoison_interval = std::chrono::milliseconds(2000);
    std::uint64_t seed = 1;

    void validate() const;
};

struct Victims {
    net::IpAddr router_ip;
    std::vector<net::IpAddr> outstation_ips;
};

enum class AdversaryEventKind { Poison, Restore, Tamper, Mask, Sniff, Forge, StaleDatabase, QueueOverflow,
                                Malformed };
std::string_view to_string(AdversaryEventKind k);

struct AdversaryEvent {
    sim::SimTime ts{0};
    AdversaryEventKind kind = AdversaryEventKind::Tamper;
    std::string detail;
};

struct ProcessingSample {
    PacketClass pclass = PacketClass::Bypass;
    sim::Duration delay{0};
};

class Adversary {
public:
    /// Installs the intercept handler on node and schedules the attack window.
    Adversary(netsim::IpNode& node, Victims victims, AdversaryConfig config, std::string capture_point = "adversary");

    bool attacking() const;
    const AdversaryConfig& config() const { return config_; }
    const SniffState& sniffed() const { return sniff_; }
    const std::vector<AdversaryEvent>& events() const { return events_; }
    std::size_t count(AdversaryEventKind kind) const;
    const std::vector<ProcessingSample>& samples() const { return samples_; }
    std::size_t queue_depth() const { return queue_.size(); }
    std::size_t max_queue_depth() const { return max_depth_; }
    std::size_t stored_acks() const { return acks_.size(); }

private:
    struct Held {
        netsim::Interface* iface = nullptr;
        net::Frame frame;
    };
    using AckKey = std::pair<net::IpAddr, std::uint32_t>;  // outstation IP, response sequence

    void begin();
    void poison();
    void restore();
    void on_intercept(netsim::Interface& iface, const net::Frame& frame);
    void serve();
    /// Applies the use-case pipeline to a DNP3 payload travelling in either direction.
    Bytes process(const net::IpPacket& packet, PacketClass pclass);
    Bytes process_command(const net::IpPacket& packet, PacketClass pclass);
    Bytes process_response(const net::IpPacket& packet);
    std::optional<net::MacAddr> genuine_mac(const net::IpAddr& dst) const;
    void log(AdversaryEventKind kind, std::string detail);

    netsim::IpNode& node_;
    netsim::Network& network_;
    Victims victims_;
    AdversaryConfig config_;
    std::string point_;
    std::mt19937_64 rng_;
    std::map<net::IpAddr, net::MacAddr> genuine_;
    std::deque<Held> queue_;
    bool busy_ = false;
    std::size_t max_depth_ = 0;
    SniffState sniff_;
    std::map<AckKey, StoredAck> acks_;
    /// Outstanding READ requests, so poll responses can be told apart from echoes.
    std::set<AckKey> pending_reads_;
    /// Intended setpoints of forged analog commands, by (outstation address, AO index).
    std::map<std::pair<std::uint16_t, std::uint16_t>, float> intended_;
    std::vector<ProcessingSample> samples_;
    std::vector<AdversaryEvent> events_;
};

}  // namespace dnp3lab::mitm
