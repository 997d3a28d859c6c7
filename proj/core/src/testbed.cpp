#include "dnp3lab/testbed.hpp"

#include <fmt/format.h>

namespace dnp3lab {

namespace {

net::MacAddr lan_mac(const net::IpAddr& ip) { return net::MacAddr::local(ip.octets[3]); }

}  // namespace

Testbed::Testbed(TestbedConfig config)
    : network(config.net),
      wan(network.add_link("wan")),
      lan(network.add_link("lan")),
      master_node(network.add_node<netsim::IpNode>("master")),
      router(network.add_node<netsim::IpNode>("router")),
      config_(std::move(config)) {
    if (config_.outstations < 1 || config_.outstations > 200) {
        throw std::invalid_argument(fmt::format("outstation count {} out of range 1..200", config_.outstations));
    }
    network.attach(master_node.add_interface("wan", net::MacAddr::local(0xA2), master_ip(), 24), wan);
    master_node.set_gateway(router_wan_ip());
    network.attach(router.add_interface("wan", net::MacAddr::local(0xA1), router_wan_ip(), 24), wan);
    network.attach(router.add_interface("lan", lan_mac(router_lan_ip()), router_lan_ip(), 24), lan);
    router.set_forwarding(true);

    std::seed_seq seq{config_.seed, std::uint64_t{0x5eed}};
    std::vector<std::uint32_t> seeds(static_cast<std::size_t>(2 * config_.outstations + 1));
    seq.generate(seeds.begin(), seeds.end());

    std::vector<endpoints::OutstationLink> links;
    for (int i = 0; i < config_.outstations; ++i) {
        auto& node = network.add_node<netsim::IpNode>(fmt::format("outstation{}", i));
        network.attach(node.add_interface("lan", lan_mac(outstation_ip(i)), outstation_ip(i), 24), lan);
        node.set_gateway(router_lan_ip());
        outstation_nodes.push_back(&node);
        std::uint32_t isn_master = seeds[2 * i] & 0x7FFFFFFF;
        std::uint32_t isn_os = seeds[2 * i + 1] & 0x7FFFFFFF;
        auto [mconn, oconn] = netsim::connect(master_node, static_cast<std::uint16_t>(kMasterPortBase + i), node,
                                              config_.net.dnp3_port, isn_master, isn_os);
        endpoints::OutstationConfig oc;
        oc.address = outstation_address(i);
        oc.master_address = kMasterAddress;
        oc.turnaround = config_.turnaround;
        outstations.push_back(std::make_unique<endpoints::Outstation>(
            network, *oconn, oc, endpoints::OutstationState(config_.points, config_.setpoints)));
        links.push_back(endpoints::OutstationLink{oc.address, mconn});
        cross_rng_.emplace_back(seeds[2 * i] ^ (std::uint64_t{seeds[2 * i + 1]} << 32));
    }
    if (config_.with_adversary) {
        auto& adv = network.add_node<netsim::IpNode>("adversary");
        network.attach(adv.add_interface("lan", lan_mac(adversary_ip()), adversary_ip(), 24), lan);
        adv.set_gateway(router_lan_ip());
        adversary_node = &adv;
    }
    auto mc = config_.master;
    mc.address = kMasterAddress;
    master = std::make_unique<endpoints::Master>(network, std::move(links), mc, config_.script);

    network.tap_node(master_node, "master");
    network.tap_node(router, "router");
    network.tap_link(lan, "lan");
}

std::vector<std::pair<net::IpAddr, net::MacAddr>> Testbed::whitelist() const {
    std::vector<std::pair<net::IpAddr, net::MacAddr>> out;
    out.emplace_back(router_lan_ip(), lan_mac(router_lan_ip()));
    for (int i = 0; i < config_.outstations; ++i) out.emplace_back(outstation_ip(i), lan_mac(outstation_ip(i)));
    return out;
}

int Testbed::outstation_of(const net::IpAddr& ip) const {
    for (int i = 0; i < config_.outstations; ++i) {
        if (outstation_ip(i) == ip) return i;
    }
    return -1;
}

void Testbed::start(sim::SimTime end) {
    master->start(end);
    if (config_.cross_traffic_hz > 0) {
        for (int i = 0; i < config_.outstations; ++i) schedule_cross_traffic(i, end);
    }
}

void Testbed::schedule_cross_traffic(int os, sim::SimTime end) {
    std::exponential_distribution<double> gap(config_.cross_traffic_hz);
    auto at = network.now() + sim::from_s(gap(cross_rng_[os]));
    if (at >= end) return;
    network.events().schedule_at(at, [this, os, end] {
        net::IpPacket p;
        p.src = outstation_ip(os);
        p.dst = master_ip();
        p.protocol = net::Protocol::Datagram;
        p.segment.src_port = kCrossTrafficPort;
        p.segment.dst_port = kCrossTrafficPort;
        p.segment.payload = Bytes(64, static_cast<std::uint8_t>(os));
        net::seal(p.segment);
        outstation_nodes[os]->send_ip(std::move(p));
        schedule_cross_traffic(os, end);
    });
}

}  // namespace dnp3lab
