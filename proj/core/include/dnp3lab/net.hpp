#pragma once

// Addresses and frame model for the simulated network.

#include "dnp3lab/bytes.hpp"
#include "dnp3lab/sim.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace dnp3lab::net {

struct MacAddr {
    std::array<std::uint8_t, 6> octets{};

    static MacAddr broadcast() { return MacAddr{{0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF}}; }
    /// Locally administered 02:00:00:00:00:nn.
    static MacAddr local(std::uint8_t n) { return MacAddr{{0x02, 0x00, 0x00, 0x00, 0x00, n}}; }
    static std::optional<MacAddr> parse(std::string_view text);

    bool is_broadcast() const { return *this == broadcast(); }
    bool is_zero() const { return *this == MacAddr{}; }
    std::string to_string() const;
    auto operator<=>(const MacAddr&) const = default;
};

struct IpAddr {
    std::array<std::uint8_t, 4> octets{};

    static IpAddr of(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) { return IpAddr{{a, b, c, d}}; }
    static std::optional<IpAddr> parse(std::string_view text);

    std::uint32_t value() const;
    bool same_subnet(const IpAddr& other, int prefix) const;
    std::string to_string() const;
    auto operator<=>(const IpAddr&) const = default;
};

// ---------------------------------------------------------------------------
// ARP

enum class ArpOp : std::uint16_t { Request = 1, Reply = 2 };

struct ArpPacket {
    ArpOp op = ArpOp::Request;
    MacAddr sender_mac;
    IpAddr sender_ip;
    MacAddr target_mac;
    IpAddr target_ip;

    static constexpr std::size_t kSize = 28;
    /// Ethernet/IPv4 ARP layout (htype 1, ptype 0x0800).
    Bytes encode() const;
    static std::optional<ArpPacket> decode(ByteView bytes);
    friend bool operator==(const ArpPacket&, const ArpPacket&) = default;
};

struct ArpEntry {
    MacAddr mac;
    sim::SimTime updated{0};
};

class ArpTable {
public:
    std::optional<MacAddr> lookup(const IpAddr& ip) const;
    /// Returns true when the entry was created or its MAC changed.
    bool update(const IpAddr& ip, const MacAddr& mac, sim::SimTime now);
    const std::map<IpAddr, ArpEntry>& entries() const { return entries_; }

private:
    std::map<IpAddr, ArpEntry> entries_;
};

// ---------------------------------------------------------------------------
// Transport

enum class Protocol : std::uint8_t { Reliable = 6, Datagram = 17 };

inline constexpr std::uint8_t kFlagAck = 0x10;
inline constexpr std::uint8_t kFlagPsh = 0x08;

struct Segment {
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint32_t seq = 0;
    std::uint32_t ack = 0;
    std::uint8_t flags = 0;
    std::uint16_t checksum = 0;
    Bytes payload;

    static constexpr std::size_t kHeaderSize = 16;
    std::uint32_t end_seq() const { return seq + static_cast<std::uint32_t>(payload.size()); }
    friend bool operator==(const Segment&, const Segment&) = default;
};

/// 16-bit ones'-complement sum over the 16-octet header (checksum field
/// zeroed) followed by the payload.
std::uint16_t transport_checksum(const Segment& segment);
inline void seal(Segment& segment) { segment.checksum = transport_checksum(segment); }
inline bool checksum_ok(const Segment& segment) { return segment.checksum == transport_checksum(segment); }

struct IpPacket {
    IpAddr src;
    IpAddr dst;
    Protocol protocol = Protocol::Reliable;
    Segment segment;
    friend bool operator==(const IpPacket&, const IpPacket&) = default;
};

// ---------------------------------------------------------------------------
// Ethernet

struct Frame {
    MacAddr src;
    MacAddr dst;
    std::variant<ArpPacket, IpPacket> body;
    /// Set on transport retransmissions and carried across forwarding hops
    /// (the analyzer-side retransmission mark).
    bool retransmission = false;

    bool is_arp() const { return std::holds_alternative<ArpPacket>(body); }
    const ArpPacket& arp() const { return std::get<ArpPacket>(body); }
    const IpPacket& ip() const { return std::get<IpPacket>(body); }
    IpPacket& ip() { return std::get<IpPacket>(body); }
};

}  // namespace dnp3lab::net
