#include "dnp3lab/netsim.hpp"

#include <fmt/format.h>

namespace dnp3lab::netsim {

// ---------------------------------------------------------------------------
// Node

Interface& Node::add_interface(std::string name, net::MacAddr mac, net::IpAddr ip, int prefix) {
    auto iface = std::make_unique<Interface>();
    iface->node = this;
    iface->name = std::move(name);
    iface->mac = mac;
    iface->ip = ip;
    iface->prefix = prefix;
    interfaces_.push_back(std::move(iface));
    return *interfaces_.back();
}

Interface* Node::interface_for(const net::IpAddr& ip) {
    for (auto& i : interfaces_) {
        if (i->ip == ip) return i.get();
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// TransportConn

TransportConn::TransportConn(IpNode& host, std::uint16_t local_port, net::IpAddr remote_ip,
                             std::uint16_t remote_port, std::uint32_t isn, std::uint32_t peer_isn)
    : host_(host),
      local_port_(local_port),
      remote_ip_(remote_ip),
      remote_port_(remote_port),
      snd_nxt_(isn),
      rcv_nxt_(peer_isn) {}

net::Segment TransportConn::send(Bytes payload) {
    if (closed_) {
        throw NetError(NetErrc::ConnClosed, fmt::format("{}: send on closed connection to {}:{}", host_.name(),
                                                        remote_ip_.to_string(), remote_port_));
    }
    net::Segment seg;
    seg.src_port = local_port_;
    seg.dst_port = remote_port_;
    seg.seq = snd_nxt_;
    seg.ack = rcv_nxt_;
    seg.flags = net::kFlagAck | net::kFlagPsh;
    seg.payload = std::move(payload);
    net::seal(seg);
    snd_nxt_ = seg.end_seq();
    auto end = seg.end_seq();
    unacked_[end] = Unacked{seg, 0, 0};
    arm(end);
    transmit(seg, false);
    return seg;
}

void TransportConn::close() {
    closed_ = true;
    for (auto& [end, u] : unacked_) host_.network().events().cancel(u.timer);
    unacked_.clear();
}

void TransportConn::arm(std::uint32_t end_seq) {
    auto& events = host_.network().events();
    unacked_[end_seq].timer = events.schedule_in(host_.network().config().retransmission_timeout, [this, end_seq] {
        auto it = unacked_.find(end_seq);
        if (it == unacked_.end()) return;
        ++it->second.retransmissions;
        ++retransmissions_;
        transmit(it->second.segment, true);
        arm(end_seq);
    });
}

void TransportConn::transmit(const net::Segment& segment, bool retransmission) {
    net::IpPacket packet;
    auto r = host_.route(remote_ip_);
    packet.src = r ? r->first->ip : host_.interface(0).ip;
    packet.dst = remote_ip_;
    packet.protocol = net::Protocol::Reliable;
    packet.segment = segment;
    host_.send_ip(std::move(packet), retransmission);
}

void TransportConn::send_ack() {
    net::Segment seg;
    seg.src_port = local_port_;
    seg.dst_port = remote_port_;
    seg.seq = snd_nxt_;
    seg.ack = rcv_nxt_;
    seg.flags = net::kFlagAck;
    net::seal(seg);
    transmit(seg, false);
}

void TransportConn::handle(const net::Segment& seg) {
    if (closed_) return;
    if (seg.flags & net::kFlagAck) {
        // Cumulative: everything ending at or before seg.ack is acknowledged.
        // Serial-number comparison keeps this correct across wraparound.
        for (auto it = unacked_.begin(); it != unacked_.end();) {
            if (static_cast<std::int32_t>(seg.ack - it->first) >= 0) {
                host_.network().events().cancel(it->second.timer);
                it = unacked_.erase(it);
            } else {
                ++it;
            }
        }
    }
    if (seg.payload.empty()) return;
    if (seg.seq == rcv_nxt_) {
        rcv_nxt_ = seg.end_seq();
        send_ack();
        if (handler_) handler_(seg);
    } else if (static_cast<std::int32_t>(seg.end_seq() - rcv_nxt_) <= 0) {
        ++duplicates_;
        send_ack();
    } else {
        ++out_of_order_;
    }
}

// ---------------------------------------------------------------------------
// IpNode

std::optional<std::pair<Interface*, net::IpAddr>> IpNode::route(const net::IpAddr& dst) {
    for (auto& i : interfaces_) {
        if (i->ip.same_subnet(dst, i->prefix)) return std::make_pair(i.get(), dst);
    }
    if (gateway_) {
        for (auto& i : interfaces_) {
            if (i->ip.same_subnet(*gateway_, i->prefix)) return std::make_pair(i.get(), *gateway_);
        }
    }
    return std::nullopt;
}

void IpNode::emit(Interface& iface, net::Frame frame) { network_.transmit(iface, std::move(frame)); }

void IpNode::send_ip(net::IpPacket packet, bool retransmission) {
    auto r = route(packet.dst);
    if (!r) {
        ++unroutable_drops_;
        return;
    }
    auto [iface, next_hop] = *r;
    net::Frame frame;
    frame.src = iface->mac;
    frame.body = std::move(packet);
    frame.retransmission = retransmission;
    if (auto mac = arp_.lookup(next_hop)) {
        frame.dst = *mac;
        emit(*iface, std::move(frame));
        return;
    }
    arp_resolve(next_hop, [this, iface, frame = std::move(frame)](std::optional<net::MacAddr> mac) mutable {
        if (!mac) return;
        frame.dst = *mac;
        emit(*iface, std::move(frame));
    });
}

void IpNode::arp_resolve(const net::IpAddr& ip, ResolveHandler handler) {
    if (auto mac = arp_.lookup(ip)) {
        handler(mac);
        return;
    }
    auto [it, fresh] = pending_.try_emplace(ip);
    it->second.handlers.push_back(std::move(handler));
    if (!fresh) return;

    auto r = route(ip);
    Interface* iface = r ? r->first : (interfaces_.empty() ? nullptr : interfaces_.front().get());
    it->second.timer = network_.events().schedule_in(network_.config().arp_timeout, [this, ip] {
        auto p = pending_.find(ip);
        if (p == pending_.end()) return;
        auto handlers = std::move(p->second.handlers);
        pending_.erase(p);
        ++arp_timeouts_;
        for (auto& h : handlers) h(std::nullopt);
    });
    if (!iface) return;
    net::ArpPacket req;
    req.op = net::ArpOp::Request;
    req.sender_mac = iface->mac;
    req.sender_ip = iface->ip;
    req.target_ip = ip;
    send_arp(*iface, req, iface->mac, net::MacAddr::broadcast());
}

void IpNode::send_arp(Interface& iface, const net::ArpPacket& arp, net::MacAddr eth_src, net::MacAddr eth_dst) {
    net::Frame frame;
    frame.src = eth_src;
    frame.dst = eth_dst;
    frame.body = arp;
    emit(iface, std::move(frame));
}

TransportConn& IpNode::open(std::uint16_t local_port, net::IpAddr remote_ip, std::uint16_t remote_port,
                            std::uint32_t isn, std::uint32_t peer_isn) {
    ConnKey key{local_port, remote_ip, remote_port};
    auto conn = std::make_unique<TransportConn>(*this, local_port, remote_ip, remote_port, isn, peer_isn);
    auto& ref = *conn;
    conns_[key] = std::move(conn);
    return ref;
}

void IpNode::handle_arp(Interface& iface, const net::ArpPacket& arp) {
    if (arp.op == net::ArpOp::Request) {
        if (arp.target_ip != iface.ip) return;
        arp_.update(arp.sender_ip, arp.sender_mac, network_.now());
        net::ArpPacket reply;
        reply.op = net::ArpOp::Reply;
        reply.sender_mac = iface.mac;
        reply.sender_ip = iface.ip;
        reply.target_mac = arp.sender_mac;
        reply.target_ip = arp.sender_ip;
        send_arp(iface, reply, iface.mac, arp.sender_mac);
    } else {
        arp_.update(arp.sender_ip, arp.sender_mac, network_.now());
    }
    auto p = pending_.find(arp.sender_ip);
    if (p != pending_.end()) {
        network_.events().cancel(p->second.timer);
        auto handlers = std::move(p->second.handlers);
        pending_.erase(p);
        for (auto& h : handlers) h(arp.sender_mac);
    }
}

void IpNode::deliver_local(const net::IpPacket& packet) {
    const auto& seg = packet.segment;
    if (!net::checksum_ok(seg)) {
        ++checksum_drops_;
        return;
    }
    if (packet.protocol == net::Protocol::Datagram) {
        auto h = datagram_handlers_.find(seg.dst_port);
        if (h != datagram_handlers_.end()) h->second(packet);
        return;
    }
    auto c = conns_.find(ConnKey{seg.dst_port, packet.src, seg.src_port});
    if (c != conns_.end()) c->second->handle(seg);
}

void IpNode::receive(Interface& iface, const net::Frame& frame) {
    if (frame.is_arp()) {
        handle_arp(iface, frame.arp());
        return;
    }
    if (frame.dst != iface.mac) return;
    const auto& packet = frame.ip();
    if (interface_for(packet.dst)) {
        deliver_local(packet);
    } else if (forwarding_) {
        send_ip(packet, frame.retransmission);
    } else if (intercept_) {
        intercept_(iface, frame);
    }
}

// ---------------------------------------------------------------------------
// Network

Network::Network(NetConfig config) : config_(config), capture_(config.dnp3_port) {}

Link& Network::add_link(std::string name, std::optional<sim::Duration> latency) {
    links_.push_back(std::make_unique<Link>(std::move(name), latency.value_or(config_.link_latency)));
    return *links_.back();
}

void Network::attach(Interface& iface, Link& link) {
    for (auto* p : link.ports_) {
        if (p->mac == iface.mac) {
            throw NetError(NetErrc::AddressConflict,
                           fmt::format("MAC {} already attached to link {}", iface.mac.to_string(), link.name()));
        }
        if (p->ip == iface.ip) {
            throw NetError(NetErrc::AddressConflict,
                           fmt::format("IP {} already attached to link {}", iface.ip.to_string(), link.name()));
        }
    }
    iface.link = &link;
    link.ports_.push_back(&iface);
}

void Network::tap_node(Node& node, std::string point, bool ingress) {
    node_taps_[&node] = NodeTap{std::move(point), ingress};
}

void Network::tap_link(Link& link, std::string point) { link.tap_ = std::move(point); }

void Network::transmit(Interface& from, net::Frame frame) {
    if (!from.link) {
        throw NetError(NetErrc::UnknownInterface,
                       fmt::format("{}/{} is not attached to a link", from.node->name(), from.name));
    }
    Link& link = *from.link;
    if (auto t = node_taps_.find(from.node); t != node_taps_.end()) {
        capture_.record(now(), t->second.point, from.name, capture::Direction::Out, frame);
    }
    if (link.tap_) capture_.record(now(), *link.tap_, link.name(), capture::Direction::Tx, frame);

    sim::Duration delay = link.latency();
    if (interceptor_) {
        if (auto extra = interceptor_(link, frame)) {
            if (extra->count() < 0) return;
            delay += *extra;
        }
    }
    for (auto* port : link.ports_) {
        if (port == &from) continue;
        if (!frame.dst.is_broadcast() && port->mac != frame.dst) continue;
        events_.schedule_in(delay, [this, port, frame] { deliver(*port, frame); });
    }
}

void Network::deliver(Interface& to, const net::Frame& frame) {
    if (auto t = node_taps_.find(to.node); t != node_taps_.end() && t->second.ingress) {
        capture_.record(now(), t->second.point, to.name, capture::Direction::In, frame);
    }
    to.node->receive(to, frame);
}

net::MacAddr Network::resolve_now(IpNode& node, const net::IpAddr& ip) {
    std::optional<net::MacAddr> result;
    bool done = false;
    node.arp_resolve(ip, [&](std::optional<net::MacAddr> mac) {
        result = mac;
        done = true;
    });
    while (!done && events_.step()) {
    }
    if (!result) {
        throw NetError(NetErrc::ArpTimeout, fmt::format("{}: no ARP reply for {}", node.name(), ip.to_string()));
    }
    return *result;
}

std::pair<TransportConn*, TransportConn*> connect(IpNode& a, std::uint16_t port_a, IpNode& b, std::uint16_t port_b,
                                                  std::uint32_t isn_a, std::uint32_t isn_b) {
    auto& ca = a.open(port_a, b.interface(0).ip, port_b, isn_a, isn_b);
    auto& cb = b.open(port_b, a.interface(0).ip, port_a, isn_b, isn_a);
    return {&ca, &cb};
}

void arp_poison(IpNode& attacker, const net::MacAddr& victim_mac, const net::IpAddr& victim_ip,
                const net::IpAddr& impersonated_ip) {
    auto r = attacker.route(victim_ip);
    Interface& iface = r ? *r->first : attacker.interface(0);
    net::ArpPacket reply;
    reply.op = net::ArpOp::Reply;
    reply.sender_mac = iface.mac;
    reply.sender_ip = impersonated_ip;
    reply.target_mac = victim_mac;
    reply.target_ip = victim_ip;
    attacker.send_arp(iface, reply, iface.mac, victim_mac);
}

}  // namespace dnp3lab::netsim
