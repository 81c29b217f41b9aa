#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cnu/time.hpp"

namespace cnu {

struct SwitchId {
    std::uint32_t value = 0;
    auto operator<=>(const SwitchId&) const = default;
};

struct PortId {
    std::uint32_t value = 0;
    auto operator<=>(const PortId&) const = default;
};

/// A port on a particular switch.
struct Endpoint {
    SwitchId sw;
    PortId port;
    auto operator<=>(const Endpoint&) const = default;
};

/// Version tag carried in the packet header (the MPLS label in the path
/// update experiments).
struct VersionTag {
    std::uint32_t value = 0;
    auto operator<=>(const VersionTag&) const = default;
};

using FlowId = std::string;

// ---------------------------------------------------------------------------
// Delay models. Lower bounds are always zero.

struct ConstantDelay {
    Nanos value{0};
    auto operator<=>(const ConstantDelay&) const = default;
};

struct UniformDelay {
    Nanos hi{0};  // uniform on [0, hi]
    auto operator<=>(const UniformDelay&) const = default;
};

/// Exponential with the given mean, truncated to [0, cap].
struct ExponentialDelay {
    Nanos mean{0};
    Nanos cap{0};
    auto operator<=>(const ExponentialDelay&) const = default;
};

/// Draws uniformly from a recorded sample list.
struct EmpiricalDelay {
    std::vector<Nanos> samples;
    auto operator<=>(const EmpiricalDelay&) const = default;
};

using DelayModel = std::variant<ConstantDelay, UniformDelay, ExponentialDelay, EmpiricalDelay>;

/// Largest value the model can produce.
Nanos upper_bound(const DelayModel& model);
Nanos mean_of(const DelayModel& model);
/// Throws std::invalid_argument on negative values, empty sample lists or a
/// cap below zero.
void validate(const DelayModel& model);
std::string describe(const DelayModel& model);

// ---------------------------------------------------------------------------

/// Delay and accuracy bounds.
struct SystemParameters {
    Nanos d_c{0};          // controller-to-switch delay, including install time
    Nanos d_n{0};          // end-to-end network delay
    Nanos delta_msg{0};    // gap between consecutive controller messages
    Nanos delta_sched{0};  // scheduling error: T executes within [T, T + delta_sched]
    Nanos t_su{0};         // timed update setup time

    void validate() const;
    auto operator<=>(const SystemParameters&) const = default;
};

// ---------------------------------------------------------------------------

struct Link {
    Endpoint a;
    Endpoint b;
    DelayModel delay;
};

/// Switches, ports, links and ingress ports. Built once, then shared by
/// const reference.
class Network {
public:
    SwitchId add_switch(std::string name);
    PortId add_port(SwitchId sw);
    /// Allocates a fresh port on each switch and links them.
    std::size_t connect(SwitchId a, SwitchId b, DelayModel delay);
    void add_link(Endpoint a, Endpoint b, DelayModel delay);
    /// Allocates a fresh port facing the outside world.
    Endpoint add_ingress(SwitchId sw, std::string label);

    std::size_t switch_count() const { return names_.size(); }
    const std::string& name(SwitchId sw) const;
    std::optional<SwitchId> find(const std::string& name) const;
    bool contains(SwitchId sw) const { return sw.value < names_.size(); }
    bool has_port(Endpoint ep) const;
    std::uint32_t port_count(SwitchId sw) const;

    const std::vector<Link>& links() const { return links_; }
    const Link& link(std::size_t index) const { return links_.at(index); }

    struct Peer {
        Endpoint endpoint;
        std::size_t link;
    };
    /// The far end of the link attached to `ep`, if any.
    std::optional<Peer> peer(Endpoint ep) const;
    /// First link joining `from` to `to`, oriented from `from`.
    std::optional<std::pair<Endpoint, Peer>> link_between(SwitchId from, SwitchId to) const;

    const std::map<Endpoint, std::string>& ingress_ports() const { return ingress_; }
    bool is_ingress(Endpoint ep) const { return ingress_.count(ep) != 0; }
    std::optional<Endpoint> ingress(const std::string& label) const;

private:
    void check_free(Endpoint ep) const;

    std::vector<std::string> names_;
    std::map<std::string, SwitchId> by_name_;
    std::vector<std::uint32_t> ports_;
    std::vector<Link> links_;
    std::map<Endpoint, Peer> peers_;
    std::map<Endpoint, std::string> ingress_;
};

// ---------------------------------------------------------------------------

/// Packets are reduced to the fields forwarding can distinguish.
struct Packet {
    FlowId flow;
    std::optional<VersionTag> tag;
    auto operator<=>(const Packet&) const = default;
};

struct PacketInstance {
    Packet packet;
    Endpoint ingress;
    Nanos arrival{0};
};

struct TestFlow {
    FlowId id;
    Endpoint ingress;
    double rate_pps = 0.0;

    /// Spacing between consecutive instances, rounded to the nanosecond.
    Nanos period() const;
    Packet packet() const { return Packet{id, std::nullopt}; }
};

/// Packets per second for a bit rate and fixed packet size.
double packet_rate(double bits_per_second, std::size_t packet_bytes);

// ---------------------------------------------------------------------------
// Forwarding.

struct Forward {
    PortId out;
    auto operator<=>(const Forward&) const = default;
};

/// Rewrites the version tag, then forwards.
struct ForwardTagged {
    PortId out;
    VersionTag tag;
    auto operator<=>(const ForwardTagged&) const = default;
};

struct Drop {
    auto operator<=>(const Drop&) const = default;
};

/// Hands the packet to the outside world.
struct Deliver {
    auto operator<=>(const Deliver&) const = default;
};

using Action = std::variant<Forward, ForwardTagged, Drop, Deliver>;

std::string to_string(const Action& action);

/// Match key. An empty tag is a wildcard that matches any tag; an exact tag
/// match takes precedence.
struct RuleKey {
    FlowId flow;
    std::optional<VersionTag> tag;
    PortId in_port;
    auto operator<=>(const RuleKey&) const = default;
};

enum class Generation { Old, New };

const char* to_string(Generation g);

struct Rule {
    Action action;
    Generation generation = Generation::Old;
    auto operator<=>(const Rule&) const = default;
};

struct Match {
    Action action;
    std::optional<Generation> generation;  // empty on a table miss
};

using RuleTable = std::map<RuleKey, Rule>;

/// Lookup against a single table: exact tag, then wildcard, then Drop.
Match lookup(const RuleTable& table, const Packet& packet, PortId in_port);

/// One rule table per switch.
class ForwardingState {
public:
    ForwardingState() = default;
    explicit ForwardingState(std::size_t switch_count) : tables_(switch_count) {}

    std::size_t switch_count() const { return tables_.size(); }
    bool contains(SwitchId sw) const { return sw.value < tables_.size(); }

    const RuleTable& table(SwitchId sw) const;
    void set_rule(SwitchId sw, RuleKey key, Action action, Generation generation = Generation::Old);
    /// Returns false if there was no such rule.
    bool erase_rule(SwitchId sw, const RuleKey& key);

    Match lookup(SwitchId sw, const Packet& packet, PortId in_port) const;

    bool operator==(const ForwardingState&) const = default;

private:
    std::vector<RuleTable> tables_;
};

// ---------------------------------------------------------------------------
// Updates.

enum class UpdateMode { Install, Remove };

/// A partial replacement of one switch's forwarding function. For Remove the
/// actions are ignored and only the keys matter.
struct SingletonUpdate {
    SwitchId target;
    std::map<RuleKey, Action> entries;
    UpdateMode mode = UpdateMode::Install;
    auto operator<=>(const SingletonUpdate&) const = default;
};

/// Installs (generation New) or removes the entries of `u`. Keys that are
/// removed but absent are appended to `missing` and otherwise ignored.
ForwardingState apply_singleton(const ForwardingState& state, const SingletonUpdate& u,
                                std::vector<RuleKey>* missing = nullptr);

struct PhasedUpdate {
    SingletonUpdate update;
    int phase = 1;
    auto operator<=>(const PhasedUpdate&) const = default;
};

/// Singleton updates grouped into phases 1..k, every phase non-empty.
class UpdateProcedure {
public:
    UpdateProcedure() = default;
    /// Throws std::invalid_argument unless phases are contiguous from 1.
    explicit UpdateProcedure(std::vector<PhasedUpdate> items);

    const std::vector<PhasedUpdate>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    int phase_count() const { return phase_count_; }
    /// N_j for j = 1..k (index 0 holds phase 1).
    std::vector<std::size_t> phase_sizes() const;
    /// Number of Remove-mode updates in `phase`.
    std::size_t removal_count(int phase) const;

private:
    std::vector<PhasedUpdate> items_;
    int phase_count_ = 0;
};

/// A procedure plus the phases that are garbage collection, i.e. must wait for
/// en-route packets to drain before they start.
struct UpdatePlan {
    UpdateProcedure procedure;
    std::set<int> gc_phases;

    /// Throws unless every gc phase lies in 2..k.
    void validate() const;
};

/// Clock times per phase. Garbage-collection phases are ordinary numbered
/// phases here: for a two-phase update with GC, phase 3 carries Tg_1.
struct Schedule {
    std::map<int, Nanos> phase_times;
    std::optional<Nanos> knob_d;

    Nanos time_of(int phase) const;
    /// Throws if times decrease with the phase number.
    void validate() const;
};

struct TimedUpdateProcedure {
    UpdateProcedure procedure;
    Schedule schedule;

    void validate() const;
};

/// Same multiset of (singleton update, phase) pairs, ignoring times.
bool similar(const TimedUpdateProcedure& timed, const UpdateProcedure& untimed);

}  // namespace cnu
