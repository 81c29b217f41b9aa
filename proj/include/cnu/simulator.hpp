#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "cnu/model.hpp"
#include "cnu/stats.hpp"

namespace cnu {

/// Min-queue of timestamped events. Ties pop in insertion order.
template <class Payload>
class EventQueue {
public:
    void push(Nanos time, Payload payload) { heap_.push(Entry{time, next_seq_++, std::move(payload)}); }

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    Nanos next_time() const { return heap_.top().time; }

    std::pair<Nanos, Payload> pop()
    {
        Entry top = heap_.top();
        heap_.pop();
        return {top.time, std::move(top.payload)};
    }

private:
    struct Entry {
        Nanos time;
        std::uint64_t seq;
        Payload payload;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const
        {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    std::uint64_t next_seq_ = 0;
};

/// Scheduling error split into a per-switch clock offset in [0, sync_err]
/// and a per-command execution delay in [0, exec_err].
struct ClockModel {
    Nanos sync_err{0};
    Nanos exec_err{0};

    static ClockModel for_accuracy(Nanos delta) { return ClockModel{Nanos{0}, delta}; }
    Nanos accuracy() const { return sync_err + exec_err; }
};

/// Controller-side randomness.
struct ControlChannel {
    DelayModel controller_delay;  // message send -> update installed
    DelayModel message_gap;       // between consecutive controller messages
    ClockModel clock;

    /// uniform(0, Dc), uniform(0, Delta), offset 0 and jitter in [0, delta].
    static ControlChannel defaults(const SystemParameters& params);
};

struct Scenario {
    Network network;
    ForwardingState initial;
    UpdatePlan plan;
    SystemParameters params;
    ControlChannel channel;
    std::vector<TestFlow> flows;
};

struct RunOptions {
    std::uint64_t seed = 1;
    /// Every sample lands on the bound that lengthens the update: maximal
    /// gaps, delays and clock errors, except the very first singleton, which
    /// takes the zero lower bound.
    bool pin_to_bounds = false;
    /// [t0, t1) for test-flow injection. Defaults to the execution window
    /// widened by Dn plus one packet period on each side.
    std::optional<std::pair<Nanos, Nanos>> traffic_window;
};

// ---------------------------------------------------------------------------

/// Forwarding state as a function of time. A packet reaching a switch at t
/// sees the updates executed strictly before t.
class StateTimeline {
public:
    explicit StateTimeline(ForwardingState initial);

    /// Times must be non-decreasing across calls.
    void apply(Nanos at, const SingletonUpdate& update, std::vector<RuleKey>* missing = nullptr);

    Match lookup(SwitchId sw, const Packet& packet, PortId in_port, Nanos at) const;

    const ForwardingState& initial() const { return initial_; }
    const ForwardingState& current() const { return current_; }

private:
    ForwardingState initial_;
    ForwardingState current_;
    std::vector<std::vector<std::pair<Nanos, RuleTable>>> changes_;
    Nanos last_{Nanos::min()};
};

struct Hop {
    SwitchId sw;
    PortId in_port;
    Nanos arrival{0};
    Packet packet;  // as received, i.e. with the tag set by upstream hops
    Action action;
    std::optional<Generation> generation;
};

struct PacketTrace {
    PacketInstance instance;
    std::vector<Hop> hops;
    bool truncated = false;  // forwarding loop cut off after N hops
};

struct FlowTraces {
    FlowId flow;
    double rate_pps = 0.0;
    std::vector<PacketTrace> packets;
};

enum class FaultKind { BoundViolation, MissedSchedule };

const char* to_string(FaultKind kind);

struct Fault {
    FaultKind kind;
    Nanos time{0};
    std::optional<SwitchId> sw;
    int phase = 0;
    std::string detail;
};

struct Execution {
    std::size_t item = 0;  // index into the procedure's items
    SwitchId target;
    int phase = 0;
    Nanos sent{0};
    Nanos received{0};
    Nanos executed{0};
    std::optional<Nanos> scheduled;
};

struct LogEntry {
    Nanos time{0};
    std::string kind;
    std::string src;
    std::string dst;
    int phase = 0;
    std::string detail;
};

/// "time_ns kind src dst phase detail"
std::string format_log_line(const LogEntry& entry);

struct RunResult {
    std::uint64_t seed = 0;
    bool timed = false;
    std::optional<Schedule> schedule;

    /// First singleton execution to last singleton execution.
    Nanos update_duration{0};
    Nanos first_execution{0};
    Nanos last_execution{0};

    std::vector<Execution> executions;  // in execution order
    std::vector<Fault> faults;
    std::vector<FlowTraces> flows;
    std::vector<LogEntry> log;
    std::map<std::string, std::string> metadata;

    ForwardingState old_config;
    ForwardingState new_config;

    const FlowTraces* traces_for(const FlowId& flow) const;
};

// ---------------------------------------------------------------------------

/// Greedy untimed controller: messages of a phase are sent with sampled gaps
/// in [0, Delta]; after the last message of phase j the controller waits
/// max(Delta, Dc), or max(Delta, Dc + Dn) before a gc phase. Each switch
/// applies its update a sampled controller delay after the send.
RunResult run_untimed(const Scenario& scenario, const RunOptions& options);

/// Timed controller: every message is sent up front; a switch executes its
/// update at local clock time T_j, i.e. real time in [T_j, T_j + delta].
/// A message that arrives after that instant is executed on arrival and
/// recorded as a missed-schedule fault.
RunResult run_timed(const Scenario& scenario, const Schedule& schedule, const RunOptions& options);

/// Identical packets every 1/R from the flow's ingress over [t0, t1).
std::vector<PacketInstance> inject_flow(const Network& net, const TestFlow& flow, Nanos t0, Nanos t1);

/// Hop-by-hop forwarding against the timeline, sampling link delays from
/// `rng` (or taking their upper bounds when `pin_to_bounds`).
PacketTrace forward_packet(const Network& net, const StateTimeline& timeline, const PacketInstance& instance,
                           Rng& rng, bool pin_to_bounds = false);

}  // namespace cnu
