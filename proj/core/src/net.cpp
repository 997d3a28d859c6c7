#include "dnp3lab/net.hpp"

#include <fmt/format.h>

#include <charconv>

namespace dnp3lab::net {

namespace {

template <std::size_t N>
bool parse_fields(std::string_view text, char sep, int base, int max, std::array<std::uint8_t, N>& out) {
    for (std::size_t i = 0; i < N; ++i) {
        auto end = i + 1 < N ? text.find(sep) : text.size();
        if (end == std::string_view::npos || end == 0) return false;
        auto field = text.substr(0, end);
        int v = 0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v, base);
        if (ec != std::errc() || ptr != field.data() + field.size() || v < 0 || v > max) return false;
        out[i] = static_cast<std::uint8_t>(v);
        text.remove_prefix(i + 1 < N ? end + 1 : end);
    }
    return text.empty();
}

}  // namespace

std::optional<MacAddr> MacAddr::parse(std::string_view text) {
    MacAddr mac;
    if (!parse_fields(text, ':', 16, 255, mac.octets)) return std::nullopt;
    return mac;
}

std::string MacAddr::to_string() const {
    return fmt::format("{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}", octets[0], octets[1], octets[2], octets[3],
                       octets[4], octets[5]);
}

std::optional<IpAddr> IpAddr::parse(std::string_view text) {
    IpAddr ip;
    if (!parse_fields(text, '.', 10, 255, ip.octets)) return std::nullopt;
    return ip;
}

std::uint32_t IpAddr::value() const {
    return (std::uint32_t{octets[0]} << 24) | (std::uint32_t{octets[1]} << 16) | (std::uint32_t{octets[2]} << 8) |
           octets[3];
}

bool IpAddr::same_subnet(const IpAddr& other, int prefix) const {
    if (prefix <= 0) return true;
    std::uint32_t mask = prefix >= 32 ? 0xFFFFFFFFu : ~((1u << (32 - prefix)) - 1u);
    return (value() & mask) == (other.value() & mask);
}

std::string IpAddr::to_string() const {
    return fmt::format("{}.{}.{}.{}", octets[0], octets[1], octets[2], octets[3]);
}

Bytes ArpPacket::encode() const {
    Bytes out;
    out.reserve(kSize);
    auto be16 = [&](std::uint16_t v) {
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v));
    };
    be16(1);
    be16(0x0800);
    out.push_back(6);
    out.push_back(4);
    be16(static_cast<std::uint16_t>(op));
    out.insert(out.end(), sender_mac.octets.begin(), sender_mac.octets.end());
    out.insert(out.end(), sender_ip.octets.begin(), sender_ip.octets.end());
    out.insert(out.end(), target_mac.octets.begin(), target_mac.octets.end());
    out.insert(out.end(), target_ip.octets.begin(), target_ip.octets.end());
    return out;
}

std::optional<ArpPacket> ArpPacket::decode(ByteView b) {
    if (b.size() != kSize) return std::nullopt;
    if (b[0] != 0 || b[1] != 1 || b[2] != 0x08 || b[3] != 0x00 || b[4] != 6 || b[5] != 4) return std::nullopt;
    std::uint16_t op = static_cast<std::uint16_t>((b[6] << 8) | b[7]);
    if (op != 1 && op != 2) return std::nullopt;
    ArpPacket p;
    p.op = static_cast<ArpOp>(op);
    std::copy_n(b.begin() + 8, 6, p.sender_mac.octets.begin());
    std::copy_n(b.begin() + 14, 4, p.sender_ip.octets.begin());
    std::copy_n(b.begin() + 18, 6, p.target_mac.octets.begin());
    std::copy_n(b.begin() + 24, 4, p.target_ip.octets.begin());
    return p;
}

std::optional<MacAddr> ArpTable::lookup(const IpAddr& ip) const {
    auto it = entries_.find(ip);
    if (it == entries_.end()) return std::nullopt;
    return it->second.mac;
}

bool ArpTable::update(const IpAddr& ip, const MacAddr& mac, sim::SimTime now) {
    auto [it, inserted] = entries_.try_emplace(ip, ArpEntry{mac, now});
    if (inserted) return true;
    bool changed = it->second.mac != mac;
    it->second = ArpEntry{mac, now};
    return changed;
}

std::uint16_t transport_checksum(const Segment& s) {
    std::uint32_t sum = 0;
    auto add16 = [&](std::uint16_t v) { sum += v; };
    add16(s.src_port);
    add16(s.dst_port);
    add16(static_cast<std::uint16_t>(s.seq >> 16));
    add16(static_cast<std::uint16_t>(s.seq));
    add16(static_cast<std::uint16_t>(s.ack >> 16));
    add16(static_cast<std::uint16_t>(s.ack));
    add16(static_cast<std::uint16_t>(s.flags << 8));
    add16(0);  // checksum field
    for (std::size_t i = 0; i < s.payload.size(); i += 2) {
        std::uint16_t hi = s.payload[i];
        std::uint16_t lo = i + 1 < s.payload.size() ? s.payload[i + 1] : 0;
        add16(static_cast<std::uint16_t>((hi << 8) | lo));
    }
    while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

}  // namespace dnp3lab::net
