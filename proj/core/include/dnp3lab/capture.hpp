#pragma once

// Capture records produced by network taps, and their JSON Lines form.

#include "dnp3lab/bytes.hpp"
#include "dnp3lab/error.hpp"
#include "dnp3lab/net.hpp"
#include "dnp3lab/sim.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dnp3lab::capture {

inline constexpr std::string_view kSchema = "dnp3lab.capture";
inline constexpr int kSchemaVersion = 1;

enum class Kind { Arp, Transport };
enum class Direction { In, Out, Tx };

std::string_view to_string(Kind k);
std::string_view to_string(Direction d);

struct Dnp3Summary {
    std::uint8_t function = 0;
    std::string function_name;
    std::string summary;
    bool crc_valid = false;
    friend bool operator==(const Dnp3Summary&, const Dnp3Summary&) = default;
};

/// Decodes a transport payload as DNP3. Frames failing CRC checks are still
/// summarized from an unverified decode with crc_valid = false.
std::optional<Dnp3Summary> summarize_dnp3(ByteView payload);

struct CaptureRecord {
    std::uint64_t id = 0;
    sim::SimTime ts{0};
    std::string point;  // capture point: master, router, lan, adversary
    std::string iface;
    Direction direction = Direction::Tx;
    net::MacAddr src_mac;
    net::MacAddr dst_mac;
    Kind kind = Kind::Transport;
    /// ARP records carry sender/target protocol addresses here.
    net::IpAddr src_ip;
    net::IpAddr dst_ip;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint32_t seq = 0;
    std::uint32_t ack = 0;
    std::uint8_t flags = 0;
    bool retransmission = false;
    /// Transport payload, or the 28-octet ARP packet.
    Bytes raw;
    std::optional<Dnp3Summary> dnp3;
    /// Adversary records: packet class of the serviced frame.
    std::optional<std::string> pclass;
    /// Adversary egress records: id of the matching ingress record.
    std::optional<std::uint64_t> ref;

    double ts_ms() const { return sim::to_ms(ts); }
    std::optional<net::ArpPacket> arp() const;
    bool has_payload() const { return kind == Kind::Transport && !raw.empty(); }
    bool is_function(std::uint8_t fc) const { return dnp3 && dnp3->function == fc; }

    friend bool operator==(const CaptureRecord&, const CaptureRecord&) = default;
};

enum class CaptureErrc { BadHeader, BadRecord };

class CaptureError : public CodedError<CaptureErrc> {
public:
    using CodedError::CodedError;
};

std::string header_line();
std::string to_json_line(const CaptureRecord& record);
CaptureRecord parse_json_line(std::string_view line);

void write_jsonl(std::ostream& out, const std::vector<CaptureRecord>& records);
/// Reads a capture file; the first line must be the schema header.
std::vector<CaptureRecord> read_jsonl(std::istream& in);

/// Append-only record store shared by every tap of one simulation.
class Capture {
public:
    using Listener = std::function<void(const CaptureRecord&)>;

    explicit Capture(std::uint16_t dnp3_port = 20000) : dnp3_port_(dnp3_port) {}

    /// ARP frames and transport frames to or from the DNP3 port.
    bool wants(const net::Frame& frame) const;

    /// Records the frame if wanted; returns the new record id.
    std::optional<std::uint64_t> record(sim::SimTime ts, std::string_view point, std::string_view iface,
                                        Direction direction, const net::Frame& frame,
                                        std::optional<std::string> pclass = std::nullopt,
                                        std::optional<std::uint64_t> ref = std::nullopt);

    void add_listener(Listener listener) { listeners_.push_back(std::move(listener)); }
    const std::vector<CaptureRecord>& records() const { return records_; }
    std::uint16_t dnp3_port() const { return dnp3_port_; }

private:
    std::uint16_t dnp3_port_;
    std::vector<CaptureRecord> records_;
    std::vector<Listener> listeners_;
};

}  // namespace dnp3lab::capture
