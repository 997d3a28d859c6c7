#include "dnp3lab/endpoints.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace dnp3lab::endpoints {

using json = nlohmann::ordered_json;

std::uint8_t mirrored_status(std::uint8_t control) {
    return control == codec::kControlClose ? kBreakerClosed : kBreakerOpen;
}

// ---------------------------------------------------------------------------
// OutstationState

OutstationState::OutstationState(PointCounts counts, std::vector<float> initial_setpoints)
    : counts_(counts),
      bi_(static_cast<std::size_t>(counts.bi), kBreakerClosed),
      bo_(static_cast<std::size_t>(counts.bo), codec::kControlClose),
      ai_(static_cast<std::size_t>(counts.ai), 0.0f),
      ao_(static_cast<std::size_t>(counts.ao), 0.0f) {
    for (std::size_t i = 0; i < ao_.size(); ++i) {
        ao_[i] = i < initial_setpoints.size() ? initial_setpoints[i] : 100.0f;
        ai_[i] = ao_[i];
    }
}

std::vector<Dnp3Point> OutstationState::points() const {
    std::vector<Dnp3Point> out;
    out.reserve(bi_.size() + ai_.size() + bo_.size() + ao_.size());
    for (std::size_t i = 0; i < bi_.size(); ++i)
        out.push_back(Dnp3Point::binary(PointType::BI, static_cast<std::uint16_t>(i), bi_[i]));
    for (std::size_t i = 0; i < ai_.size(); ++i)
        out.push_back(Dnp3Point::analog(PointType::AI, static_cast<std::uint16_t>(i), ai_[i]));
    for (std::size_t i = 0; i < bo_.size(); ++i)
        out.push_back(Dnp3Point::binary(PointType::BO, static_cast<std::uint16_t>(i), bo_[i]));
    for (std::size_t i = 0; i < ao_.size(); ++i)
        out.push_back(Dnp3Point::analog(PointType::AO, static_cast<std::uint16_t>(i), ao_[i]));
    return out;
}

Dnp3Point OutstationState::operate_binary(std::uint16_t index, std::uint8_t control) {
    bool valid = control == codec::kControlClose || control == codec::kControlTrip;
    if (index >= bo_.size() || !valid) return Dnp3Point::binary(PointType::BO, index, kStatusError);
    bo_[index] = control;
    bi_[index] = mirrored_status(control);
    return Dnp3Point::binary(PointType::BO, index, control);
}

Dnp3Point OutstationState::operate_analog(std::uint16_t index, float value) {
    if (index >= ao_.size() || !std::isfinite(value)) {
        return Dnp3Point::analog(PointType::AO, index, std::isfinite(value) ? value : 0.0f, kStatusError);
    }
    ao_[index] = value;
    return Dnp3Point::analog(PointType::AO, index, value);
}

void OutstationState::settle() { ai_ = ao_; }

// ---------------------------------------------------------------------------
// Outstation

Outstation::Outstation(netsim::Network& network, netsim::TransportConn& conn, OutstationConfig config,
                       OutstationState state)
    : network_(network), conn_(conn), config_(config), state_(std::move(state)) {
    conn_.on_data([this](const net::Segment& s) { on_segment(s); });
}

std::optional<Dnp3Packet> Outstation::handle(const Dnp3Packet& request) {
    std::optional<Dnp3Packet> response;
    switch (request.app.function) {
        case codec::FunctionCode::Read:
            state_.settle();
            response = codec::build_read_response(config_.master_address, config_.address, state_.points());
            break;
        case codec::FunctionCode::DirectOperate: {
            if (request.app.objects.size() != 1 || request.app.objects[0].count != 1) return std::nullopt;
            const auto& block = request.app.objects[0];
            Dnp3Point echo;
            if (block.type == PointType::BO && block.payload.size() == 1) {
                echo = state_.operate_binary(block.start_index, block.payload[0]);
            } else if (block.type == PointType::AO && block.payload.size() == 5) {
                echo = state_.operate_analog(block.start_index, codec::decode_float(ByteView(block.payload).subspan(1)));
            } else {
                return std::nullopt;
            }
            response = codec::build_point_response(config_.master_address, config_.address, echo);
            break;
        }
        default:
            return std::nullopt;
    }
    response->app.app_control = static_cast<std::uint8_t>(codec::kAppFir | codec::kAppFin | request.app.app_sequence());
    return response;
}

void Outstation::on_segment(const net::Segment& segment) {
    Dnp3Packet request;
    try {
        request = codec::decode_frame(segment.payload);
    } catch (const codec::CodecError&) {
        ++decode_failures_;
        return;
    }
    if (request.link.destination != config_.address) return;
    ++requests_;
    auto response = handle(request);
    if (!response) return;
    response->transport.sequence = transport_seq_;
    transport_seq_ = (transport_seq_ + 1) & 0x3F;
    auto bytes = codec::encode_frame(*response);
    network_.events().schedule_in(config_.turnaround, [this, bytes = std::move(bytes)]() mutable {
        conn_.send(std::move(bytes));
    });
}

// ---------------------------------------------------------------------------
// Operator script

bool PointPredicate::holds(double v) const {
    if (op == "<") return v < value;
    if (op == "<=") return v <= value;
    if (op == ">") return v > value;
    if (op == ">=") return v >= value;
    if (op == "==") return v == value;
    if (op == "!=") return v != value;
    return false;
}

namespace {

int parse_outstation(const json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_string()) {
        auto s = v.get<std::string>();
        if (s == "all" || s == "any" || s == "trigger") return -1;
        throw ScriptError(ScriptErrc::Invalid, fmt::format("{}: expected an index, \"all\" or \"any\"", key));
    }
    int n = v.get<int>();
    if (n < -1) throw ScriptError(ScriptErrc::Invalid, fmt::format("{}: negative outstation index", key));
    return n;
}

PointType parse_type(const json& j, std::initializer_list<PointType> allowed) {
    auto name = j.at("type").get<std::string>();
    auto t = codec::parse_point_type(name);
    if (!t || std::find(allowed.begin(), allowed.end(), *t) == allowed.end()) {
        throw ScriptError(ScriptErrc::Invalid, "unsupported point type \"" + name + "\"");
    }
    return *t;
}

json outstation_json(int n) { return n < 0 ? json("all") : json(n); }

}  // namespace

OperatorScript OperatorScript::parse(std::string_view text) {
    OperatorScript script;
    try {
        auto doc = json::parse(text);
        if (!doc.is_array()) throw ScriptError(ScriptErrc::Invalid, "operator script must be a JSON array");
        for (const auto& r : doc) {
            Rule rule;
            rule.name = r.value("name", fmt::format("rule{}", script.rules.size()));
            const auto& t = r.at("trigger");
            if (t.contains("at_s")) rule.trigger.at_s = t["at_s"].get<double>();
            if (t.contains("every_s")) rule.trigger.every_s = t["every_s"].get<double>();
            if (t.contains("until_s")) rule.trigger.until_s = t["until_s"].get<double>();
            if (t.contains("point")) {
                const auto& p = t["point"];
                PointPredicate pred;
                pred.outstation = parse_outstation(p, "outstation", -1);
                pred.type = parse_type(p, {PointType::BI, PointType::BO, PointType::AI, PointType::AO});
                pred.index = p.at("index").get<std::uint16_t>();
                pred.op = p.value("op", "<");
                pred.value = p.at("value").get<double>();
                static const char* kOps[] = {"<", "<=", ">", ">=", "==", "!="};
                if (std::none_of(std::begin(kOps), std::end(kOps), [&](const char* o) { return pred.op == o; })) {
                    throw ScriptError(ScriptErrc::Invalid, "rule " + rule.name + ": unknown operator " + pred.op);
                }
                rule.trigger.point = pred;
            }
            if (rule.trigger.at_s.has_value() == rule.trigger.point.has_value()) {
                throw ScriptError(ScriptErrc::Invalid, "rule " + rule.name + ": trigger needs exactly one of at_s, point");
            }
            if (rule.trigger.every_s && *rule.trigger.every_s <= 0) {
                throw ScriptError(ScriptErrc::Invalid, "rule " + rule.name + ": every_s must be positive");
            }
            const auto& a = r.at("action");
            rule.action.outstation = parse_outstation(a, "outstation", rule.trigger.point ? -1 : 0);
            rule.action.type = parse_type(a, {PointType::BO, PointType::AO});
            rule.action.index = a.at("index").get<std::uint16_t>();
            if (rule.action.type == PointType::BO) {
                auto c = a.at("control").get<std::string>();
                if (c == "close") {
                    rule.action.control = codec::kControlClose;
                } else if (c == "trip") {
                    rule.action.control = codec::kControlTrip;
                } else {
                    throw ScriptError(ScriptErrc::Invalid, "rule " + rule.name + ": control must be close or trip");
                }
            } else {
                const auto& v = a.at("value");
                if (v.is_string()) {
                    if (v.get<std::string>() != "restore") {
                        throw ScriptError(ScriptErrc::Invalid, "rule " + rule.name + ": value must be a number or \"restore\"");
                    }
                } else {
                    rule.action.value = v.get<float>();
                }
            }
            script.rules.push_back(std::move(rule));
        }
    } catch (const ScriptError&) {
        throw;
    } catch (const std::exception& e) {
        throw ScriptError(ScriptErrc::Invalid, std::string("operator script: ") + e.what());
    }
    return script;
}

std::string OperatorScript::to_json() const {
    json doc = json::array();
    for (const auto& r : rules) {
        json t;
        if (r.trigger.at_s) t["at_s"] = *r.trigger.at_s;
        if (r.trigger.every_s) t["every_s"] = *r.trigger.every_s;
        if (r.trigger.until_s) t["until_s"] = *r.trigger.until_s;
        if (r.trigger.point) {
            const auto& p = *r.trigger.point;
            t["point"] = {{"outstation", outstation_json(p.outstation)},
                          {"type", codec::to_string(p.type)},
                          {"index", p.index},
                          {"op", p.op},
                          {"value", p.value}};
        }
        json a;
        a["outstation"] = outstation_json(r.action.outstation);
        a["type"] = codec::to_string(r.action.type);
        a["index"] = r.action.index;
        if (r.action.type == PointType::BO) {
            a["control"] = r.action.control == codec::kControlClose ? "close" : "trip";
        } else if (r.action.value) {
            a["value"] = *r.action.value;
        } else {
            a["value"] = "restore";
        }
        doc.push_back({{"name", r.name}, {"trigger", t}, {"action", a}});
    }
    return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Master

std::string Command::describe() const {
    if (type == PointType::BO) {
        return fmt::format("os{} BO[{}] {}", outstation, index, control == codec::kControlClose ? "CLOSE" : "TRIP");
    }
    return fmt::format("os{} AO[{}] = {}", outstation, index, value);
}

std::string_view to_string(Verdict v) { return v == Verdict::Match ? "MATCH" : "MISMATCH"; }

std::string_view to_string(MasterEventKind k) {
    switch (k) {
        case MasterEventKind::PollSent: return "POLL_SENT";
        case MasterEventKind::PollMissing: return "POLL_MISSING";
        case MasterEventKind::PollSkipped: return "POLL_SKIPPED";
        case MasterEventKind::CommandSent: return "COMMAND_SENT";
        case MasterEventKind::CommandMissing: return "COMMAND_MISSING";
        case MasterEventKind::CommandSkipped: return "COMMAND_SKIPPED";
        case MasterEventKind::Verdict: return "VERDICT";
        case MasterEventKind::Uncorrelated: return "UNCORRELATED";
        case MasterEventKind::DecodeError: return "DECODE_ERROR";
    }
    return "?";
}

Verdict verify_echo(const Command& command, const Dnp3Packet& response) {
    std::vector<Dnp3Point> points;
    try {
        points = codec::parse_points(response);
    } catch (const codec::CodecError&) {
        return Verdict::Mismatch;
    }
    for (const auto& p : points) {
        if (p.type != command.type || p.index != command.index) continue;
        if (command.type == PointType::BO) return p.status == command.control ? Verdict::Match : Verdict::Mismatch;
        bool same = p.status == 0 && static_cast<float>(p.value) == command.value;
        return same ? Verdict::Match : Verdict::Mismatch;
    }
    return Verdict::Mismatch;
}

Master::Master(netsim::Network& network, std::vector<OutstationLink> outstations, MasterConfig config,
               OperatorScript script)
    : network_(network), config_(config), script_(std::move(script)) {
    for (std::size_t i = 0; i < outstations.size(); ++i) {
        Peer peer;
        peer.link = outstations[i];
        peers_.push_back(std::move(peer));
        int os = static_cast<int>(i);
        peers_.back().link.conn->on_data([this, os](const net::Segment& s) { on_segment(os, s); });
    }
}

void Master::log(MasterEventKind kind, int outstation, std::string detail) {
    events_.push_back(MasterEvent{network_.now(), kind, outstation, std::move(detail)});
}

std::size_t Master::count(MasterEventKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(events_.begin(), events_.end(), [kind](const MasterEvent& e) { return e.kind == kind; }));
}

void Master::start(sim::SimTime end) {
    auto& events = network_.events();
    for (auto t = config_.first_poll; t < end; t += config_.polling_interval) {
        events.schedule_at(t, [this, end] { poll_cycle(end); });
    }
    for (const auto& rule : script_.rules) {
        if (!rule.trigger.at_s) continue;
        auto at = sim::from_s(*rule.trigger.at_s);
        auto until = rule.trigger.until_s ? sim::from_s(*rule.trigger.until_s) : end;
        const Rule* r = &rule;
        for (auto t = at; t < end && t <= until; t += sim::from_s(rule.trigger.every_s.value_or(0))) {
            if (t >= network_.now()) events.schedule_at(t, [this, r] { fire(*r, -1); });
            if (!rule.trigger.every_s) break;
        }
    }
}

void Master::poll_cycle(sim::SimTime) {
    for (int os = 0; os < static_cast<int>(peers_.size()); ++os) {
        auto& peer = peers_[os];
        if (peer.pending && network_.now() - peer.pending->sent >= config_.polling_interval) {
            bool read = peer.pending->kind == RequestKind::Read;
            log(read ? MasterEventKind::PollMissing : MasterEventKind::CommandMissing, os,
                read ? fmt::format("no response to READ ack={}", peer.pending->ack)
                     : fmt::format("no response to {} ack={}", peer.pending->command.describe(), peer.pending->ack));
            peer.pending.reset();
        }
        if (peer.pending) {
            log(MasterEventKind::PollSkipped, os, "request outstanding");
            continue;
        }
        send_request(os, RequestKind::Read, Command{});
    }
}

void Master::issue(Command command) {
    auto& peer = peers_.at(static_cast<std::size_t>(command.outstation));
    intents_[{command.outstation, command.type, command.index}] = command;
    peer.queue.push_back(std::move(command));
    pump(peer.queue.back().outstation);
}

void Master::pump(int os) {
    auto& peer = peers_[os];
    if (peer.pending || peer.queue.empty()) return;
    auto cmd = std::move(peer.queue.front());
    peer.queue.pop_front();
    send_request(os, RequestKind::Command, cmd);
}

void Master::send_request(int os, RequestKind kind, const Command& command) {
    auto& peer = peers_[os];
    Dnp3Packet packet;
    if (kind == RequestKind::Read) {
        packet = codec::build_read_request(peer.link.address, config_.address);
    } else if (command.type == PointType::BO) {
        packet = codec::build_direct_operate_binary(peer.link.address, config_.address, command.index, command.control);
    } else {
        packet = codec::build_direct_operate_analog(peer.link.address, config_.address, command.index, command.value);
    }
    std::uint8_t app_seq = peer.app_seq;
    peer.app_seq = (peer.app_seq + 1) & 0x0F;
    packet.app.app_control = static_cast<std::uint8_t>(codec::kAppFir | codec::kAppFin | app_seq);
    packet.transport.sequence = peer.transport_seq;
    peer.transport_seq = (peer.transport_seq + 1) & 0x3F;
    auto seg = peer.link.conn->send(codec::encode_frame(packet));
    peer.pending = Pending{kind, command, seg.ack, app_seq, network_.now()};
    if (kind == RequestKind::Read) {
        log(MasterEventKind::PollSent, os, fmt::format("READ ack={}", seg.ack));
    } else {
        log(MasterEventKind::CommandSent, os, fmt::format("{} ack={}", command.describe(), seg.ack));
    }
}

void Master::verify_ack(int os, const net::Segment& segment, const Dnp3Packet& response) {
    auto& peer = peers_.at(static_cast<std::size_t>(os));
    if (!peer.pending || segment.seq != peer.pending->ack ||
        response.app.app_sequence() != peer.pending->app_seq ||
        response.app.function != codec::FunctionCode::SolicitedResponse) {
        throw MasterError(MasterErrc::UncorrelatedResponse,
                          fmt::format("os{}: response seq={} app_seq={} matches no outstanding request", os,
                                      segment.seq, response.app.app_sequence()));
    }
    auto pending = *peer.pending;
    peer.pending.reset();
    if (pending.kind == RequestKind::Read) {
        try {
            for (auto& p : codec::parse_points(response)) {
                if (p.type == PointType::AO) peer.first_ao.try_emplace({p.type, p.index}, static_cast<float>(p.value));
                peer.snapshot[{p.type, p.index}] = std::move(p);
            }
        } catch (const codec::CodecError& e) {
            log(MasterEventKind::DecodeError, os, e.what());
        }
        on_snapshot(os);
    } else {
        VerdictRecord v;
        v.ts = network_.now();
        v.command = pending.command;
        v.verdict = verify_echo(pending.command, response);
        try {
            auto pts = codec::parse_points(response);
            if (!pts.empty()) {
                v.echoed_status = pts[0].status;
                v.echoed_value = pts[0].value;
            }
        } catch (const codec::CodecError&) {
        }
        verdicts_.push_back(v);
        log(MasterEventKind::Verdict, os, fmt::format("{} {}", pending.command.describe(), to_string(v.verdict)));
    }
    pump(os);
}

void Master::on_segment(int os, const net::Segment& segment) {
    Dnp3Packet response;
    try {
        response = codec::decode_frame(segment.payload);
    } catch (const codec::CodecError& e) {
        log(MasterEventKind::DecodeError, os, e.what());
        return;
    }
    try {
        verify_ack(os, segment, response);
    } catch (const MasterError& e) {
        log(MasterEventKind::Uncorrelated, os, e.what());
    }
}

void Master::on_snapshot(int os) {
    for (std::size_t r = 0; r < script_.rules.size(); ++r) {
        const auto& rule = script_.rules[r];
        if (!rule.trigger.point) continue;
        const auto& pred = *rule.trigger.point;
        if (pred.outstation >= 0 && pred.outstation != os) continue;
        const auto& snap = peers_[os].snapshot;
        auto it = snap.find({pred.type, pred.index});
        if (it == snap.end()) continue;
        double observed = codec::is_binary(pred.type) ? it->second.status : it->second.value;
        bool now_true = pred.holds(observed);
        bool& last = predicate_state_[{r, os}];
        if (now_true && !last) fire(rule, os);
        last = now_true;
    }
}

void Master::fire(const Rule& rule, int triggering) {
    std::vector<int> targets;
    if (rule.action.outstation >= 0) {
        targets.push_back(rule.action.outstation);
    } else if (triggering >= 0) {
        targets.push_back(triggering);
    } else {
        for (int i = 0; i < static_cast<int>(peers_.size()); ++i) targets.push_back(i);
    }
    for (int os : targets) {
        if (os >= static_cast<int>(peers_.size())) {
            log(MasterEventKind::CommandSkipped, os, rule.name + ": no such outstation");
            continue;
        }
        Command cmd;
        cmd.outstation = os;
        cmd.type = rule.action.type;
        cmd.index = rule.action.index;
        cmd.control = rule.action.control;
        cmd.rule = rule.name;
        if (cmd.type == PointType::AO) {
            if (rule.action.value) {
                cmd.value = *rule.action.value;
            } else {
                auto it = peers_[os].first_ao.find({PointType::AO, cmd.index});
                if (it == peers_[os].first_ao.end()) {
                    log(MasterEventKind::CommandSkipped, os, rule.name + ": no observed setpoint to restore");
                    continue;
                }
                cmd.value = it->second;
            }
        }
        issue(std::move(cmd));
    }
}

}  // namespace dnp3lab::endpoints
