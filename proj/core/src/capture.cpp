#include "dnp3lab/capture.hpp"

#include "dnp3lab/codec.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <istream>
#include <ostream>

namespace dnp3lab::capture {

using json = nlohmann::ordered_json;

std::string_view to_string(Kind k) { return k == Kind::Arp ? "ARP" : "TRANSPORT"; }

std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::In: return "in";
        case Direction::Out: return "out";
        case Direction::Tx: return "tx";
    }
    return "tx";
}

std::optional<Dnp3Summary> summarize_dnp3(ByteView payload) {
    if (payload.size() < codec::kHeaderSize || payload[0] != codec::kSync0 || payload[1] != codec::kSync1) {
        return std::nullopt;
    }
    Dnp3Summary s;
    std::optional<codec::Dnp3Packet> packet;
    try {
        packet = codec::decode_frame(payload);
        s.crc_valid = true;
    } catch (const codec::CodecError&) {
        try {
            packet = codec::decode_frame(payload, codec::DecodeOptions{false});
        } catch (const codec::CodecError&) {
            return std::nullopt;
        }
    }
    s.function = static_cast<std::uint8_t>(packet->app.function);
    s.function_name = codec::describe(packet->app.function);
    s.summary = codec::summarize(*packet);
    return s;
}

std::optional<net::ArpPacket> CaptureRecord::arp() const {
    if (kind != Kind::Arp) return std::nullopt;
    return net::ArpPacket::decode(raw);
}

std::string header_line() {
    json h;
    h["schema"] = kSchema;
    h["version"] = kSchemaVersion;
    return h.dump();
}

std::string to_json_line(const CaptureRecord& r) {
    json j;
    j["id"] = r.id;
    j["ts_ms"] = r.ts_ms();
    j["point"] = r.point;
    j["iface"] = r.iface;
    j["dir"] = to_string(r.direction);
    j["kind"] = to_string(r.kind);
    j["src_mac"] = r.src_mac.to_string();
    j["dst_mac"] = r.dst_mac.to_string();
    j["src_ip"] = r.src_ip.to_string();
    j["dst_ip"] = r.dst_ip.to_string();
    if (r.kind == Kind::Transport) {
        j["src_port"] = r.src_port;
        j["dst_port"] = r.dst_port;
        j["seq"] = r.seq;
        j["ack"] = r.ack;
        j["flags"] = r.flags;
    }
    j["retransmission"] = r.retransmission;
    j["raw"] = to_hex(r.raw);
    if (r.dnp3) {
        j["dnp3"] = {{"function", r.dnp3->function},
                     {"name", r.dnp3->function_name},
                     {"summary", r.dnp3->summary},
                     {"crc_valid", r.dnp3->crc_valid}};
    }
    if (r.pclass) j["class"] = *r.pclass;
    if (r.ref) j["ref"] = *r.ref;
    return j.dump();
}

namespace {

template <typename T>
T parse_addr(const json& j, const char* key) {
    auto v = T::parse(j.at(key).get<std::string>());
    if (!v) throw CaptureError(CaptureErrc::BadRecord, std::string("bad address in field ") + key);
    return *v;
}

}  // namespace

CaptureRecord parse_json_line(std::string_view line) {
    try {
        auto j = json::parse(line);
        CaptureRecord r;
        r.id = j.at("id").get<std::uint64_t>();
        r.ts = sim::Duration(std::llround(j.at("ts_ms").get<double>() * 1000.0));
        r.point = j.at("point").get<std::string>();
        r.iface = j.at("iface").get<std::string>();
        auto dir = j.at("dir").get<std::string>();
        r.direction = dir == "in" ? Direction::In : dir == "out" ? Direction::Out : Direction::Tx;
        r.kind = j.at("kind").get<std::string>() == "ARP" ? Kind::Arp : Kind::Transport;
        r.src_mac = parse_addr<net::MacAddr>(j, "src_mac");
        r.dst_mac = parse_addr<net::MacAddr>(j, "dst_mac");
        r.src_ip = parse_addr<net::IpAddr>(j, "src_ip");
        r.dst_ip = parse_addr<net::IpAddr>(j, "dst_ip");
        if (r.kind == Kind::Transport) {
            r.src_port = j.at("src_port").get<std::uint16_t>();
            r.dst_port = j.at("dst_port").get<std::uint16_t>();
            r.seq = j.at("seq").get<std::uint32_t>();
            r.ack = j.at("ack").get<std::uint32_t>();
            r.flags = j.at("flags").get<std::uint8_t>();
        }
        r.retransmission = j.at("retransmission").get<bool>();
        r.raw = parse_hex(j.at("raw").get<std::string>());
        if (j.contains("dnp3")) {
            const auto& d = j["dnp3"];
            r.dnp3 = Dnp3Summary{d.at("function").get<std::uint8_t>(), d.at("name").get<std::string>(),
                                 d.at("summary").get<std::string>(), d.at("crc_valid").get<bool>()};
        }
        if (j.contains("class")) r.pclass = j["class"].get<std::string>();
        if (j.contains("ref")) r.ref = j["ref"].get<std::uint64_t>();
        return r;
    } catch (const CaptureError&) {
        throw;
    } catch (const std::exception& e) {
        throw CaptureError(CaptureErrc::BadRecord, std::string("capture record: ") + e.what());
    }
}

void write_jsonl(std::ostream& out, const std::vector<CaptureRecord>& records) {
    out << header_line() << '\n';
    for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::vector<CaptureRecord> read_jsonl(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CaptureError(CaptureErrc::BadHeader, "capture file is empty");
    try {
        auto h = json::parse(line);
        if (h.at("schema").get<std::string>() != kSchema || h.at("version").get<int>() != kSchemaVersion) {
            throw CaptureError(CaptureErrc::BadHeader, "unsupported capture schema: " + line);
        }
    } catch (const CaptureError&) {
        throw;
    } catch (const std::exception&) {
        throw CaptureError(CaptureErrc::BadHeader, "capture header is not valid JSON");
    }
    std::vector<CaptureRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(parse_json_line(line));
    }
    return out;
}

bool Capture::wants(const net::Frame& frame) const {
    if (frame.is_arp()) return true;
    const auto& ip = frame.ip();
    return ip.protocol == net::Protocol::Reliable &&
           (ip.segment.src_port == dnp3_port_ || ip.segment.dst_port == dnp3_port_);
}

std::optional<std::uint64_t> Capture::record(sim::SimTime ts, std::string_view point, std::string_view iface,
                                             Direction direction, const net::Frame& frame,
                                             std::optional<std::string> pclass, std::optional<std::uint64_t> ref) {
    if (!wants(frame)) return std::nullopt;
    CaptureRecord r;
    r.id = records_.size();
    r.ts = ts;
    r.point = point;
    r.iface = iface;
    r.direction = direction;
    r.src_mac = frame.src;
    r.dst_mac = frame.dst;
    r.retransmission = frame.retransmission;
    if (frame.is_arp()) {
        const auto& a = frame.arp();
        r.kind = Kind::Arp;
        r.src_ip = a.sender_ip;
        r.dst_ip = a.target_ip;
        r.raw = a.encode();
    } else {
        const auto& ip = frame.ip();
        r.kind = Kind::Transport;
        r.src_ip = ip.src;
        r.dst_ip = ip.dst;
        r.src_port = ip.segment.src_port;
        r.dst_port = ip.segment.dst_port;
        r.seq = ip.segment.seq;
        r.ack = ip.segment.ack;
        r.flags = ip.segment.flags;
        r.raw = ip.segment.payload;
        if (!r.raw.empty()) r.dnp3 = summarize_dnp3(r.raw);
    }
    r.pclass = std::move(pclass);
    r.ref = ref;
    records_.push_back(std::move(r));
    for (const auto& l : listeners_) l(records_.back());
    return records_.back().id;
}

}  // namespace dnp3lab::capture
