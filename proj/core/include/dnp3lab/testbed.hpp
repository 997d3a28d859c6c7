#pragma once

// The substation network: master on a WAN link behind the substation
// router, outstations and an optional adversary host on the LAN.

#include "dnp3lab/endpoints.hpp"
#include "dnp3lab/netsim.hpp"

#include <memory>
#include <random>
#include <vector>

namespace dnp3lab {

struct TestbedConfig {
    int outstations = 5;
    endpoints::PointCounts points;
    std::vector<float> setpoints = {480.0f, 350.0f, 275.0f, 150.0f, 90.0f};
    endpoints::MasterConfig master;
    endpoints::OperatorScript script;
    netsim::NetConfig net;
    sim::Duration turnaround = std::chrono::milliseconds(1);
    /// Poisson rate of non-DNP3 datagrams each outstation sends upstream.
    double cross_traffic_hz = 0.0;
    bool with_adversary = true;
    std::uint64_t seed = 1;
};

class Testbed {
public:
    static constexpr std::uint16_t kMasterPortBase = 40000;
    static constexpr std::uint16_t kCrossTrafficPort = 30000;
    static constexpr std::uint16_t kMasterAddress = 1;

    explicit Testbed(TestbedConfig config);

    static net::IpAddr master_ip() { return net::IpAddr::of(10, 0, 0, 2); }
    static net::IpAddr router_wan_ip() { return net::IpAddr::of(10, 0, 0, 1); }
    static net::IpAddr router_lan_ip() { return net::IpAddr::of(192, 168, 0, 4); }
    static net::IpAddr outstation_ip(int i) { return net::IpAddr::of(192, 168, 0, static_cast<std::uint8_t>(5 + i)); }
    static std::uint16_t outstation_address(int i) { return static_cast<std::uint16_t>(4 + i); }
    net::IpAddr adversary_ip() const { return outstation_ip(config_.outstations); }

    /// IP/MAC pairs the IDS treats as authoritative (router and outstations).
    std::vector<std::pair<net::IpAddr, net::MacAddr>> whitelist() const;

    /// Schedules master activity and cross traffic up to end.
    void start(sim::SimTime end);
    void run_until(sim::SimTime end) { network.events().run_until(end); }

    /// Outstation index owning an IP, or -1.
    int outstation_of(const net::IpAddr& ip) const;

    const TestbedConfig& config() const { return config_; }

    netsim::Network network;
    netsim::Link& wan;
    netsim::Link& lan;
    netsim::IpNode& master_node;
    netsim::IpNode& router;
    std::vector<netsim::IpNode*> outstation_nodes;
    netsim::IpNode* adversary_node = nullptr;
    std::unique_ptr<endpoints::Master> master;
    std::vector<std::unique_ptr<endpoints::Outstation>> outstations;

private:
    void schedule_cross_traffic(int os, sim::SimTime end);

    TestbedConfig config_;
    std::vector<std::mt19937_64> cross_rng_;
};

}  // namespace dnp3lab
