#pragma once

// DNP3 master and outstation state machines with a point-table plant model.

#include "dnp3lab/codec.hpp"
#include "dnp3lab/error.hpp"
#include "dnp3lab/netsim.hpp"

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace dnp3lab::endpoints {

using codec::Dnp3Packet;
using codec::Dnp3Point;
using codec::PointType;

/// BI encodings mirrored from the BO control octet.
inline constexpr std::uint8_t kBreakerClosed = 0x81;
inline constexpr std::uint8_t kBreakerOpen = 0x01;
inline constexpr std::uint8_t kStatusError = 0x04;

std::uint8_t mirrored_status(std::uint8_t control);

struct PointCounts {
    int bi = 10;
    int bo = 10;
    int ai = 5;
    int ao = 5;
};

/// Plant tables of one outstation.
class OutstationState {
public:
    OutstationState(PointCounts counts, std::vector<float> initial_setpoints);

    /// BI, AI, BO, AO in index order.
    std::vector<Dnp3Point> points() const;

    /// Applies a binary control. Returns the echo point: the resulting BO
    /// octet, or status 0x04 for an unknown index or invalid control.
    Dnp3Point operate_binary(std::uint16_t index, std::uint8_t control);
    /// Applies a setpoint. AI follows at the next poll.
    Dnp3Point operate_analog(std::uint16_t index, float value);
    /// AI readings adopt pending setpoints (called when a poll is served).
    void settle();

    std::uint8_t bi(std::size_t i) const { return bi_.at(i); }
    std::uint8_t bo(std::size_t i) const { return bo_.at(i); }
    float ai(std::size_t i) const { return ai_.at(i); }
    float ao(std::size_t i) const { return ao_.at(i); }
    const PointCounts& counts() const { return counts_; }

private:
    PointCounts counts_;
    std::vector<std::uint8_t> bi_;
    std::vector<std::uint8_t> bo_;
    std::vector<float> ai_;
    std::vector<float> ao_;
};

struct OutstationConfig {
    std::uint16_t address = 4;
    std::uint16_t master_address = 1;
    sim::Duration turnaround = std::chrono::milliseconds(1);
};

class Outstation {
public:
    Outstation(netsim::Network& network, netsim::TransportConn& conn, OutstationConfig config, OutstationState state);

    /// READ returns every point; DIRECT OPERATE applies and echoes the
    /// resulting point. Other function codes yield no response.
    std::optional<Dnp3Packet> handle(const Dnp3Packet& request);

    const OutstationState& state() const { return state_; }
    OutstationState& state() { return state_; }
    const OutstationConfig& config() const { return config_; }
    std::uint64_t decode_failures() const { return decode_failures_; }
    std::uint64_t requests() const { return requests_; }

private:
    void on_segment(const net::Segment& segment);

    netsim::Network& network_;
    netsim::TransportConn& conn_;
    OutstationConfig config_;
    OutstationState state_;
    std::uint8_t transport_seq_ = 0;
    std::uint64_t decode_failures_ = 0;
    std::uint64_t requests_ = 0;
};

// ---------------------------------------------------------------------------
// Operator script

struct PointPredicate {
    int outstation = -1;  // -1: every outstation
    PointType type = PointType::AI;
    std::uint16_t index = 0;
    std::string op = "<";
    double value = 0.0;

    bool holds(double observed) const;
};

struct Trigger {
    std::optional<double> at_s;
    std::optional<double> every_s;
    std::optional<double> until_s;
    std::optional<PointPredicate> point;
};

struct Action {
    int outstation = 0;  // -1: every outstation, or the triggering one for point rules
    PointType type = PointType::BO;
    std::uint16_t index = 0;
    std::uint8_t control = codec::kControlClose;
    std::optional<float> value;  // AO setpoint; nullopt means restore
};

struct Rule {
    std::string name;
    Trigger trigger;
    Action action;
};

enum class ScriptErrc { Invalid };

class ScriptError : public CodedError<ScriptErrc> {
public:
    using CodedError::CodedError;
};

struct OperatorScript {
    std::vector<Rule> rules;

    /// JSON array of {"name", "trigger": {...}, "action": {...}} objects.
    static OperatorScript parse(std::string_view json_text);
    std::string to_json() const;
};

// ---------------------------------------------------------------------------
// Master

struct Command {
    int outstation = 0;
    PointType type = PointType::BO;
    std::uint16_t index = 0;
    std::uint8_t control = codec::kControlClose;
    float value = 0.0f;
    std::string rule;

    std::string describe() const;
};

enum class Verdict { Match, Mismatch };
std::string_view to_string(Verdict v);

struct VerdictRecord {
    sim::SimTime ts{0};
    Command command;
    Verdict verdict = Verdict::Match;
    std::uint8_t echoed_status = 0;
    double echoed_value = 0.0;
};

/// MATCH when the echoed point carries the command's intent.
Verdict verify_echo(const Command& command, const Dnp3Packet& response);

enum class MasterErrc { UncorrelatedResponse };

class MasterError : public CodedError<MasterErrc> {
public:
    using CodedError::CodedError;
};

enum class MasterEventKind { PollSent, PollMissing, PollSkipped, CommandSent, CommandMissing, CommandSkipped,
                             Verdict, Uncorrelated, DecodeError };
std::string_view to_string(MasterEventKind k);

struct MasterEvent {
    sim::SimTime ts{0};
    MasterEventKind kind = MasterEventKind::PollSent;
    int outstation = 0;
    std::string detail;
};

struct MasterConfig {
    std::uint16_t address = 1;
    sim::Duration polling_interval = std::chrono::seconds(60);
    sim::SimTime first_poll{0};
};

struct OutstationLink {
    std::uint16_t address = 0;
    netsim::TransportConn* conn = nullptr;
};

class Master {
public:
    Master(netsim::Network& network, std::vector<OutstationLink> outstations, MasterConfig config,
           OperatorScript script = {});

    /// Schedules poll cycles and timed operator rules up to end.
    void start(sim::SimTime end);
    /// Queues a command behind any outstanding request to that outstation.
    void issue(Command command);

    /// Matches a response segment to the outstanding request; throws
    /// UncorrelatedResponse otherwise.
    void verify_ack(int outstation, const net::Segment& segment, const Dnp3Packet& response);

    using Snapshot = std::map<std::pair<PointType, std::uint16_t>, Dnp3Point>;
    const Snapshot& snapshot(int outstation) const { return peers_.at(outstation).snapshot; }
    std::size_t outstation_count() const { return peers_.size(); }
    const std::vector<VerdictRecord>& verdicts() const { return verdicts_; }
    const std::vector<MasterEvent>& events() const { return events_; }
    std::size_t count(MasterEventKind kind) const;
    /// Last command intent per (outstation, type, index).
    const std::map<std::tuple<int, PointType, std::uint16_t>, Command>& intents() const { return intents_; }

private:
    enum class RequestKind { Read, Command };
    struct Pending {
        RequestKind kind = RequestKind::Read;
        Command command;
        std::uint32_t ack = 0;
        std::uint8_t app_seq = 0;
        sim::SimTime sent{0};
    };
    struct Peer {
        OutstationLink link;
        std::optional<Pending> pending;
        std::deque<Command> queue;
        Snapshot snapshot;
        std::map<std::pair<PointType, std::uint16_t>, float> first_ao;
        std::uint8_t app_seq = 0;
        std::uint8_t transport_seq = 0;
    };

    void poll_cycle(sim::SimTime end);
    void send_request(int outstation, RequestKind kind, const Command& command);
    void pump(int outstation);
    void on_segment(int outstation, const net::Segment& segment);
    void on_snapshot(int outstation);
    void fire(const Rule& rule, int triggering_outstation);
    void log(MasterEventKind kind, int outstation, std::string detail);

    netsim::Network& network_;
    MasterConfig config_;
    OperatorScript script_;
    std::vector<Peer> peers_;
    std::vector<VerdictRecord> verdicts_;
    std::vector<MasterEvent> events_;
    std::map<std::pair<std::size_t, int>, bool> predicate_state_;  // (rule, outstation) -> last truth
    std::map<std::tuple<int, PointType, std::uint16_t>, Command> intents_;
};

}  // namespace dnp3lab::endpoints
