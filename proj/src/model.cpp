#include "cnu/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cnu {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ---------------------------------------------------------------------------
// DelayModel

Nanos upper_bound(const DelayModel& model)
{
    return std::visit(overloaded{
                          [](const ConstantDelay& d) { return d.value; },
                          [](const UniformDelay& d) { return d.hi; },
                          [](const ExponentialDelay& d) { return d.cap; },
                          [](const EmpiricalDelay& d) {
                              return d.samples.empty() ? Nanos{0}
                                                       : *std::max_element(d.samples.begin(), d.samples.end());
                          },
                      },
                      model);
}

Nanos mean_of(const DelayModel& model)
{
    return std::visit(overloaded{
                          [](const ConstantDelay& d) { return d.value; },
                          [](const UniformDelay& d) { return d.hi / 2; },
                          [](const ExponentialDelay& d) { return d.mean; },
                          [](const EmpiricalDelay& d) {
                              if (d.samples.empty())
                                  return Nanos{0};
                              auto sum = std::accumulate(d.samples.begin(), d.samples.end(), Nanos{0});
                              return sum / static_cast<std::int64_t>(d.samples.size());
                          },
                      },
                      model);
}

void validate(const DelayModel& model)
{
    auto non_negative = [](Nanos v, const char* what) {
        if (v < Nanos{0})
            throw std::invalid_argument(std::string("delay model: negative ") + what);
    };
    std::visit(overloaded{
                   [&](const ConstantDelay& d) { non_negative(d.value, "constant"); },
                   [&](const UniformDelay& d) { non_negative(d.hi, "uniform upper bound"); },
                   [&](const ExponentialDelay& d) {
                       non_negative(d.mean, "exponential mean");
                       non_negative(d.cap, "exponential cap");
                   },
                   [&](const EmpiricalDelay& d) {
                       if (d.samples.empty())
                           throw std::invalid_argument("delay model: empirical sample list is empty");
                       for (auto s : d.samples)
                           non_negative(s, "empirical sample");
                   },
               },
               model);
}

std::string describe(const DelayModel& model)
{
    return std::visit(overloaded{
                          [](const ConstantDelay& d) { return "constant(" + to_string(d.value) + ")"; },
                          [](const UniformDelay& d) { return "uniform(0," + to_string(d.hi) + ")"; },
                          [](const ExponentialDelay& d) {
                              return "exponential(" + to_string(d.mean) + ",cap=" + to_string(d.cap) + ")";
                          },
                          [](const EmpiricalDelay& d) {
                              return "empirical(" + std::to_string(d.samples.size()) + " samples)";
                          },
                      },
                      model);
}

void SystemParameters::validate() const
{
    auto check = [](Nanos v, const char* name) {
        if (v < Nanos{0})
            throw std::invalid_argument(std::string("system parameter ") + name + " must be >= 0");
    };
    check(d_c, "d_c");
    check(d_n, "d_n");
    check(delta_msg, "delta_msg");
    check(delta_sched, "delta_sched");
    check(t_su, "t_su");
}

// ---------------------------------------------------------------------------
// Network

SwitchId Network::add_switch(std::string name)
{
    if (by_name_.count(name))
        throw std::invalid_argument("duplicate switch '" + name + "'");
    SwitchId id{static_cast<std::uint32_t>(names_.size())};
    by_name_.emplace(name, id);
    names_.push_back(std::move(name));
    ports_.push_back(0);
    return id;
}

PortId Network::add_port(SwitchId sw)
{
    if (!contains(sw))
        throw std::out_of_range("unknown switch " + std::to_string(sw.value));
    return PortId{++ports_[sw.value]};
}

bool Network::has_port(Endpoint ep) const
{
    return contains(ep.sw) && ep.port.value >= 1 && ep.port.value <= ports_[ep.sw.value];
}

std::uint32_t Network::port_count(SwitchId sw) const
{
    if (!contains(sw))
        throw std::out_of_range("unknown switch " + std::to_string(sw.value));
    return ports_[sw.value];
}

void Network::check_free(Endpoint ep) const
{
    if (!has_port(ep))
        throw std::invalid_argument("link endpoint " + std::to_string(ep.sw.value) + ":" +
                                    std::to_string(ep.port.value) + " does not exist");
    if (peers_.count(ep) || ingress_.count(ep))
        throw std::invalid_argument("port " + name(ep.sw) + ":" + std::to_string(ep.port.value) +
                                    " is already in use");
}

void Network::add_link(Endpoint a, Endpoint b, DelayModel delay)
{
    check_free(a);
    check_free(b);
    if (a == b)
        throw std::invalid_argument("link endpoints must differ");
    validate(delay);
    std::size_t index = links_.size();
    links_.push_back(Link{a, b, std::move(delay)});
    peers_.emplace(a, Peer{b, index});
    peers_.emplace(b, Peer{a, index});
}

std::size_t Network::connect(SwitchId a, SwitchId b, DelayModel delay)
{
    Endpoint ea{a, add_port(a)};
    Endpoint eb{b, add_port(b)};
    add_link(ea, eb, std::move(delay));
    return links_.size() - 1;
}

Endpoint Network::add_ingress(SwitchId sw, std::string label)
{
    Endpoint ep{sw, add_port(sw)};
    ingress_.emplace(ep, std::move(label));
    return ep;
}

const std::string& Network::name(SwitchId sw) const
{
    if (!contains(sw))
        throw std::out_of_range("unknown switch " + std::to_string(sw.value));
    return names_[sw.value];
}

std::optional<SwitchId> Network::find(const std::string& name) const
{
    auto it = by_name_.find(name);
    if (it == by_name_.end())
        return std::nullopt;
    return it->second;
}

std::optional<Network::Peer> Network::peer(Endpoint ep) const
{
    auto it = peers_.find(ep);
    if (it == peers_.end())
        return std::nullopt;
    return it->second;
}

std::optional<std::pair<Endpoint, Network::Peer>> Network::link_between(SwitchId from, SwitchId to) const
{
    // peers_ is ordered by endpoint, so this scans only `from`'s ports.
    for (auto it = peers_.lower_bound(Endpoint{from, PortId{0}}); it != peers_.end() && it->first.sw == from;
         ++it) {
        if (it->second.endpoint.sw == to)
            return std::make_pair(it->first, it->second);
    }
    return std::nullopt;
}

std::optional<Endpoint> Network::ingress(const std::string& label) const
{
    for (const auto& [ep, l] : ingress_)
        if (l == label)
            return ep;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Flows

Nanos TestFlow::period() const
{
    if (!(rate_pps > 0.0))
        throw std::invalid_argument("test flow '" + id + "': rate must be positive");
    return Nanos{std::llround(1e9 / rate_pps)};
}

double packet_rate(double bits_per_second, std::size_t packet_bytes)
{
    if (packet_bytes == 0)
        throw std::invalid_argument("packet size must be positive");
    return bits_per_second / (8.0 * static_cast<double>(packet_bytes));
}

// ---------------------------------------------------------------------------
// Forwarding

std::string to_string(const Action& action)
{
    return std::visit(overloaded{
                          [](const Forward& a) { return "fwd:" + std::to_string(a.out.value); },
                          [](const ForwardTagged& a) {
                              return "fwd:" + std::to_string(a.out.value) + "/tag:" + std::to_string(a.tag.value);
                          },
                          [](const Drop&) { return std::string("drop"); },
                          [](const Deliver&) { return std::string("deliver"); },
                      },
                      action);
}

const char* to_string(Generation g)
{
    return g == Generation::Old ? "old" : "new";
}

Match lookup(const RuleTable& table, const Packet& packet, PortId in_port)
{
    if (packet.tag) {
        if (auto it = table.find(RuleKey{packet.flow, packet.tag, in_port}); it != table.end())
            return Match{it->second.action, it->second.generation};
    }
    if (auto it = table.find(RuleKey{packet.flow, std::nullopt, in_port}); it != table.end())
        return Match{it->second.action, it->second.generation};
    return Match{Drop{}, std::nullopt};
}

const RuleTable& ForwardingState::table(SwitchId sw) const
{
    if (!contains(sw))
        throw std::out_of_range("forwarding state has no switch " + std::to_string(sw.value));
    return tables_[sw.value];
}

void ForwardingState::set_rule(SwitchId sw, RuleKey key, Action action, Generation generation)
{
    if (!contains(sw))
        throw std::out_of_range("forwarding state has no switch " + std::to_string(sw.value));
    tables_[sw.value].insert_or_assign(std::move(key), Rule{std::move(action), generation});
}

bool ForwardingState::erase_rule(SwitchId sw, const RuleKey& key)
{
    if (!contains(sw))
        throw std::out_of_range("forwarding state has no switch " + std::to_string(sw.value));
    return tables_[sw.value].erase(key) != 0;
}

Match ForwardingState::lookup(SwitchId sw, const Packet& packet, PortId in_port) const
{
    return cnu::lookup(table(sw), packet, in_port);
}

ForwardingState apply_singleton(const ForwardingState& state, const SingletonUpdate& u,
                                std::vector<RuleKey>* missing)
{
    if (!state.contains(u.target))
        throw std::invalid_argument("singleton update targets unknown switch " + std::to_string(u.target.value));
    ForwardingState next = state;
    for (const auto& [key, action] : u.entries) {
        if (u.mode == UpdateMode::Install) {
            next.set_rule(u.target, key, action, Generation::New);
        } else if (!next.erase_rule(u.target, key) && missing) {
            missing->push_back(key);
        }
    }
    return next;
}

// ---------------------------------------------------------------------------
// Procedures

UpdateProcedure::UpdateProcedure(std::vector<PhasedUpdate> items) : items_(std::move(items))
{
    std::set<int> phases;
    for (const auto& item : items_) {
        if (item.phase < 1)
            throw std::invalid_argument("phase numbers must be positive, got " + std::to_string(item.phase));
        phases.insert(item.phase);
    }
    phase_count_ = phases.empty() ? 0 : *phases.rbegin();
    if (static_cast<int>(phases.size()) != phase_count_)
        throw std::invalid_argument("phases must be contiguous from 1 with no empty phase");
}

std::vector<std::size_t> UpdateProcedure::phase_sizes() const
{
    std::vector<std::size_t> sizes(static_cast<std::size_t>(phase_count_), 0);
    for (const auto& item : items_)
        ++sizes[static_cast<std::size_t>(item.phase - 1)];
    return sizes;
}

std::size_t UpdateProcedure::removal_count(int phase) const
{
    return static_cast<std::size_t>(std::count_if(items_.begin(), items_.end(), [&](const PhasedUpdate& item) {
        return item.phase == phase && item.update.mode == UpdateMode::Remove;
    }));
}

void UpdatePlan::validate() const
{
    if (procedure.empty())
        throw std::invalid_argument("update procedure is empty");
    for (int g : gc_phases)
        if (g < 2 || g > procedure.phase_count())
            throw std::invalid_argument("garbage-collection phase " + std::to_string(g) +
                                        " must lie in 2.." + std::to_string(procedure.phase_count()));
}

Nanos Schedule::time_of(int phase) const
{
    auto it = phase_times.find(phase);
    if (it == phase_times.end())
        throw std::out_of_range("schedule has no time for phase " + std::to_string(phase));
    return it->second;
}

void Schedule::validate() const
{
    // Equal times are allowed: a zero scheduling error collapses phases.
    std::optional<Nanos> previous;
    for (const auto& [phase, t] : phase_times) {
        if (previous && t < *previous)
            throw std::invalid_argument("schedule time of phase " + std::to_string(phase) +
                                        " precedes the previous phase");
        previous = t;
    }
    if (knob_d && *knob_d < Nanos{0})
        throw std::invalid_argument("knob d must be >= 0");
}

void TimedUpdateProcedure::validate() const
{
    schedule.validate();
    for (int j = 1; j <= procedure.phase_count(); ++j)
        if (!schedule.phase_times.count(j))
            throw std::invalid_argument("schedule is missing phase " + std::to_string(j));
}

bool similar(const TimedUpdateProcedure& timed, const UpdateProcedure& untimed)
{
    if (timed.procedure.size() != untimed.size())
        return false;
    auto a = timed.procedure.items();
    auto b = untimed.items();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

}  // namespace cnu
