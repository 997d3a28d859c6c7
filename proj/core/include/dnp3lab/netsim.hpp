#pragma once

// Discrete-event LAN/WAN model: links, IP nodes with ARP, a minimal
// reliable transport, a forwarding router, and capture taps.

#include "dnp3lab/capture.hpp"
#include "dnp3lab/error.hpp"
#include "dnp3lab/net.hpp"
#include "dnp3lab/sim.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dnp3lab::netsim {

using namespace std::chrono_literals;

enum class NetErrc { ArpTimeout, ConnClosed, UnknownInterface, AddressConflict };

class NetError : public CodedError<NetErrc> {
public:
    using CodedError::CodedError;
};

struct NetConfig {
    sim::Duration link_latency = 1ms;
    sim::Duration retransmission_timeout = 7000ms;
    sim::Duration arp_timeout = 1000ms;
    std::uint16_t dnp3_port = 20000;
};

class Network;
class Node;
class Link;

struct Interface {
    Node* node = nullptr;
    std::string name;
    net::MacAddr mac;
    net::IpAddr ip;
    int prefix = 24;
    Link* link = nullptr;
};

/// A switched broadcast domain. Unicast frames go only to the port owning
/// the destination MAC; broadcast frames go to every other port.
class Link {
public:
    Link(std::string name, sim::Duration latency) : name_(std::move(name)), latency_(latency) {}
    const std::string& name() const { return name_; }
    sim::Duration latency() const { return latency_; }
    const std::vector<Interface*>& ports() const { return ports_; }

private:
    friend class Network;
    std::string name_;
    sim::Duration latency_;
    std::vector<Interface*> ports_;
    std::optional<std::string> tap_;
};

class Node {
public:
    Node(Network& network, std::string name) : network_(network), name_(std::move(name)) {}
    virtual ~Node() = default;
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    virtual void receive(Interface& iface, const net::Frame& frame) = 0;

    const std::string& name() const { return name_; }
    Network& network() { return network_; }
    Interface& add_interface(std::string name, net::MacAddr mac, net::IpAddr ip, int prefix);
    Interface& interface(std::size_t i) { return *interfaces_.at(i); }
    std::size_t interface_count() const { return interfaces_.size(); }
    Interface* interface_for(const net::IpAddr& ip);

protected:
    Network& network_;
    std::string name_;
    std::vector<std::unique_ptr<Interface>> interfaces_;
};

class IpNode;

/// One side of an established reliable connection. Byte sequence numbers,
/// cumulative acknowledgements, a fixed per-segment retransmission timer and
/// in-order delivery (out-of-order segments are discarded).
class TransportConn {
public:
    using DataHandler = std::function<void(const net::Segment&)>;

    TransportConn(IpNode& host, std::uint16_t local_port, net::IpAddr remote_ip, std::uint16_t remote_port,
                  std::uint32_t isn, std::uint32_t peer_isn);

    /// Sends one data segment and arms its retransmission timer.
    net::Segment send(Bytes payload);
    void on_data(DataHandler handler) { handler_ = std::move(handler); }
    void close();

    std::uint32_t snd_nxt() const { return snd_nxt_; }
    std::uint32_t rcv_nxt() const { return rcv_nxt_; }
    std::uint16_t local_port() const { return local_port_; }
    std::uint16_t remote_port() const { return remote_port_; }
    const net::IpAddr& remote_ip() const { return remote_ip_; }
    std::size_t unacked() const { return unacked_.size(); }
    std::uint64_t retransmissions() const { return retransmissions_; }
    std::uint64_t duplicates() const { return duplicates_; }
    std::uint64_t out_of_order() const { return out_of_order_; }

private:
    friend class IpNode;
    struct Unacked {
        net::Segment segment;
        sim::EventId timer = 0;
        int retransmissions = 0;
    };

    void handle(const net::Segment& segment);
    void transmit(const net::Segment& segment, bool retransmission);
    void arm(std::uint32_t end_seq);
    void send_ack();

    IpNode& host_;
    std::uint16_t local_port_;
    net::IpAddr remote_ip_;
    std::uint16_t remote_port_;
    std::uint32_t snd_nxt_;
    std::uint32_t rcv_nxt_;
    bool closed_ = false;
    std::map<std::uint32_t, Unacked> unacked_;  // keyed by end sequence number
    DataHandler handler_;
    std::uint64_t retransmissions_ = 0;
    std::uint64_t duplicates_ = 0;
    std::uint64_t out_of_order_ = 0;
};

/// IP endpoint or router: ARP, routing by directly connected subnet with an
/// optional default gateway, local transport delivery.
class IpNode : public Node {
public:
    using ResolveHandler = std::function<void(std::optional<net::MacAddr>)>;
    using DatagramHandler = std::function<void(const net::IpPacket&)>;
    using InterceptHandler = std::function<void(Interface&, const net::Frame&)>;

    IpNode(Network& network, std::string name) : Node(network, std::move(name)) {}

    void set_gateway(net::IpAddr gateway) { gateway_ = gateway; }
    void set_forwarding(bool on) { forwarding_ = on; }
    /// Frames addressed to this node's MAC but to a foreign IP.
    void set_intercept(InterceptHandler handler) { intercept_ = std::move(handler); }

    net::ArpTable& arp_table() { return arp_; }
    const net::ArpTable& arp_table() const { return arp_; }

    void send_ip(net::IpPacket packet, bool retransmission = false);
    /// Cached entry, or a broadcast request; the handler receives nullopt
    /// after the ARP timeout when nobody answers.
    void arp_resolve(const net::IpAddr& ip, ResolveHandler handler);
    void send_arp(Interface& iface, const net::ArpPacket& arp, net::MacAddr eth_src, net::MacAddr eth_dst);
    void emit(Interface& iface, net::Frame frame);

    TransportConn& open(std::uint16_t local_port, net::IpAddr remote_ip, std::uint16_t remote_port,
                        std::uint32_t isn, std::uint32_t peer_isn);
    void bind_datagram(std::uint16_t port, DatagramHandler handler) { datagram_handlers_[port] = std::move(handler); }

    /// Outgoing interface and next-hop IP for a destination.
    std::optional<std::pair<Interface*, net::IpAddr>> route(const net::IpAddr& dst);

    void receive(Interface& iface, const net::Frame& frame) override;

    std::uint64_t checksum_drops() const { return checksum_drops_; }
    std::uint64_t unroutable_drops() const { return unroutable_drops_; }
    std::uint64_t arp_timeouts() const { return arp_timeouts_; }

private:
    struct PendingResolve {
        std::vector<ResolveHandler> handlers;
        sim::EventId timer = 0;
    };
    struct ConnKey {
        std::uint16_t local_port;
        net::IpAddr remote_ip;
        std::uint16_t remote_port;
        auto operator<=>(const ConnKey&) const = default;
    };

    void handle_arp(Interface& iface, const net::ArpPacket& arp);
    void deliver_local(const net::IpPacket& packet);

    net::ArpTable arp_;
    std::optional<net::IpAddr> gateway_;
    bool forwarding_ = false;
    InterceptHandler intercept_;
    std::map<net::IpAddr, PendingResolve> pending_;
    std::map<ConnKey, std::unique_ptr<TransportConn>> conns_;
    std::map<std::uint16_t, DatagramHandler> datagram_handlers_;
    std::uint64_t checksum_drops_ = 0;
    std::uint64_t unroutable_drops_ = 0;
    std::uint64_t arp_timeouts_ = 0;
};

class Network {
public:
    explicit Network(NetConfig config = {});

    const NetConfig& config() const { return config_; }
    sim::EventQueue& events() { return events_; }
    sim::SimTime now() const { return events_.now(); }
    capture::Capture& capture() { return capture_; }

    Link& add_link(std::string name, std::optional<sim::Duration> latency = std::nullopt);

    template <typename T, typename... Args>
    T& add_node(Args&&... args) {
        auto node = std::make_unique<T>(*this, std::forward<Args>(args)...);
        T& ref = *node;
        nodes_.push_back(std::move(node));
        return ref;
    }

    void attach(Interface& iface, Link& link);

    /// Records frames sent by the node, and received ones when ingress is set.
    void tap_node(Node& node, std::string point, bool ingress = true);
    /// Records every transmission on the link once (a mirror port).
    void tap_link(Link& link, std::string point);

    /// Sends a frame out of an interface onto its link.
    void transmit(Interface& from, net::Frame frame);

    /// Frame hook between transmission and delivery. Returning nullopt
    /// delivers normally, a duration adds that much delay, and a negative
    /// duration drops the frame.
    using Interceptor = std::function<std::optional<sim::Duration>(const Link&, const net::Frame&)>;
    void set_interceptor(Interceptor interceptor) { interceptor_ = std::move(interceptor); }

    /// Runs the event loop until the node's resolution completes.
    net::MacAddr resolve_now(IpNode& node, const net::IpAddr& ip);

private:
    struct NodeTap {
        std::string point;
        bool ingress;
    };
    void deliver(Interface& to, const net::Frame& frame);

    NetConfig config_;
    sim::EventQueue events_;
    capture::Capture capture_;
    std::vector<std::unique_ptr<Link>> links_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::map<const Node*, NodeTap> node_taps_;
    Interceptor interceptor_;
};

/// Opens both halves of an established connection between two nodes.
std::pair<TransportConn*, TransportConn*> connect(IpNode& a, std::uint16_t port_a, IpNode& b, std::uint16_t port_b,
                                                  std::uint32_t isn_a, std::uint32_t isn_b);

/// Unsolicited ARP reply from the attacker binding impersonated_ip to the
/// attacker's MAC in the victim's cache.
void arp_poison(IpNode& attacker, const net::MacAddr& victim_mac, const net::IpAddr& victim_ip,
                const net::IpAddr& impersonated_ip);
inline void arp_poison(IpNode& attacker, const Interface& victim, const net::IpAddr& impersonated_ip) {
    arp_poison(attacker, victim.mac, victim.ip, impersonated_ip);
}

}  // namespace dnp3lab::netsim
