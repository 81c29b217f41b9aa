#include "cnu/simulator.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cnu {
namespace {

struct UpdateEvent {
    enum class Kind { Send, Receive, Execute };
    Kind kind;
    std::size_t item;
};

std::vector<std::size_t> phase_order(const UpdateProcedure& procedure)
{
    std::vector<std::size_t> order(procedure.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return procedure.items()[a].phase < procedure.items()[b].phase;
    });
    return order;
}

std::string describe_update(const SingletonUpdate& u)
{
    return std::string(u.mode == UpdateMode::Install ? "install" : "remove") +
           ";entries=" + std::to_string(u.entries.size());
}

/// State shared by both controller variants.
class Run {
public:
    Run(const Scenario& scenario, const RunOptions& options)
        : sc_(scenario), opt_(options), control_rng_(seed_for(options.seed, 1)),
          network_rng_(seed_for(options.seed, 2)), executions_(scenario.plan.procedure.size())
    {
        sc_.plan.validate();
        sc_.params.validate();
        validate(sc_.channel.controller_delay);
        validate(sc_.channel.message_gap);
        if (sc_.initial.switch_count() != sc_.network.switch_count())
            throw std::invalid_argument("initial forwarding state does not match the network");
        result_.seed = options.seed;
        result_.metadata["seed"] = std::to_string(options.seed);
        result_.metadata["pinned"] = options.pin_to_bounds ? "true" : "false";
        result_.metadata["controller_delay"] = describe(sc_.channel.controller_delay);
        result_.metadata["message_gap"] = describe(sc_.channel.message_gap);
        Nanos max_cap{0};
        bool any_exponential = false;
        for (const auto& link : sc_.network.links()) {
            if (const auto* e = std::get_if<ExponentialDelay>(&link.delay)) {
                any_exponential = true;
                max_cap = std::max(max_cap, e->cap);
            }
        }
        if (any_exponential)
            result_.metadata["link_exponential_max_cap_ns"] = to_string(max_cap);
    }

    const UpdateProcedure& procedure() const { return sc_.plan.procedure; }

    Nanos next_gap(bool first_in_phase)
    {
        if (first_in_phase)
            return Nanos{0};
        Nanos gap = opt_.pin_to_bounds ? sc_.params.delta_msg : sample(sc_.channel.message_gap, control_rng_);
        if (gap > sc_.params.delta_msg)
            fault(FaultKind::BoundViolation, Nanos{0}, std::nullopt, 0,
                  "message_gap=" + to_string(gap) + ">delta_msg");
        return gap;
    }

    Nanos controller_delay(bool first_overall)
    {
        if (opt_.pin_to_bounds)
            return first_overall ? Nanos{0} : sc_.params.d_c;
        Nanos c = sample(sc_.channel.controller_delay, control_rng_);
        if (c < Nanos{0})
            c = Nanos{0};
        return c;
    }

    void check_controller_delay(Nanos c, Nanos at, SwitchId sw, int phase)
    {
        if (c > sc_.params.d_c)
            fault(FaultKind::BoundViolation, at, sw, phase, "controller_delay=" + to_string(c) + ">d_c");
    }

    void plan_item(std::size_t item, Nanos sent, Nanos received, Nanos executed, std::optional<Nanos> scheduled,
                   bool with_receive)
    {
        const auto& pu = procedure().items()[item];
        executions_[item] = Execution{item, pu.update.target, pu.phase, sent, received, executed, scheduled};
        queue_.push(sent, UpdateEvent{UpdateEvent::Kind::Send, item});
        if (with_receive)
            queue_.push(received, UpdateEvent{UpdateEvent::Kind::Receive, item});
        queue_.push(executed, UpdateEvent{UpdateEvent::Kind::Execute, item});
    }

    void fault(FaultKind kind, Nanos at, std::optional<SwitchId> sw, int phase, std::string detail)
    {
        result_.faults.push_back(Fault{kind, at, sw, phase, detail});
        result_.log.push_back(LogEntry{at, "fault", to_string(kind), sw ? sc_.network.name(*sw) : "-", phase,
                                       std::move(detail)});
    }

    RunResult finish(bool timed, std::optional<Schedule> schedule)
    {
        StateTimeline timeline(sc_.initial);
        bool first = true;
        while (!queue_.empty()) {
            auto [at, ev] = queue_.pop();
            const auto& pu = procedure().items()[ev.item];
            const auto& dst = sc_.network.name(pu.update.target);
            switch (ev.kind) {
            case UpdateEvent::Kind::Send: {
                std::string detail = describe_update(pu.update);
                if (executions_[ev.item].scheduled)
                    detail += ";at=" + to_string(*executions_[ev.item].scheduled);
                result_.log.push_back(LogEntry{at, "send", "controller", dst, pu.phase, std::move(detail)});
                break;
            }
            case UpdateEvent::Kind::Receive:
                result_.log.push_back(LogEntry{at, "recv", "controller", dst, pu.phase, describe_update(pu.update)});
                break;
            case UpdateEvent::Kind::Execute: {
                std::vector<RuleKey> missing;
                timeline.apply(at, pu.update, &missing);
                result_.executions.push_back(executions_[ev.item]);
                if (first) {
                    result_.first_execution = at;
                    first = false;
                }
                result_.last_execution = at;
                result_.log.push_back(LogEntry{at, "exec", dst, dst, pu.phase, describe_update(pu.update)});
                if (!missing.empty())
                    result_.log.push_back(LogEntry{at, "warn", dst, dst, pu.phase,
                                                   "remove_missing=" + std::to_string(missing.size())});
                break;
            }
            }
        }
        result_.update_duration = result_.last_execution - result_.first_execution;
        result_.timed = timed;
        result_.schedule = std::move(schedule);
        forward_flows(timeline);
        result_.old_config = timeline.initial();
        result_.new_config = timeline.current();
        return std::move(result_);
    }

private:
    static Rng seed_for(std::uint64_t seed, std::uint32_t stream)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
        return Rng(seq);
    }

    void forward_flows(const StateTimeline& timeline)
    {
        for (const auto& flow : sc_.flows) {
            const Nanos period = flow.period();
            Nanos t0;
            Nanos t1;
            if (opt_.traffic_window) {
                std::tie(t0, t1) = *opt_.traffic_window;
            } else {
                // The old configuration holds before time 0 too, so the window may start earlier.
                t0 = result_.first_execution - sc_.params.d_n - period;
                auto slots = t0 / period;
                if (slots * period > t0)
                    --slots;
                t0 = slots * period;
                t1 = result_.last_execution + sc_.params.d_n + 2 * period;
            }
            FlowTraces traces{flow.id, flow.rate_pps, {}};
            std::size_t over_bound = 0;
            for (const auto& pi : inject_flow(sc_.network, flow, t0, t1)) {
                auto trace = forward_packet(sc_.network, timeline, pi, network_rng_, opt_.pin_to_bounds);
                if (!trace.hops.empty() && trace.hops.back().arrival - pi.arrival > sc_.params.d_n)
                    ++over_bound;
                traces.packets.push_back(std::move(trace));
            }
            if (over_bound)
                fault(FaultKind::BoundViolation, t0, flow.ingress.sw, 0,
                      "flow=" + flow.id + ";network_delay>d_n;packets=" + std::to_string(over_bound));
            result_.flows.push_back(std::move(traces));
        }
    }

    const Scenario& sc_;
    const RunOptions& opt_;
    Rng control_rng_;
    Rng network_rng_;
    EventQueue<UpdateEvent> queue_;
    std::vector<Execution> executions_;
    RunResult result_;
};

}  // namespace

ControlChannel ControlChannel::defaults(const SystemParameters& params)
{
    return ControlChannel{UniformDelay{params.d_c}, UniformDelay{params.delta_msg},
                          ClockModel::for_accuracy(params.delta_sched)};
}

const char* to_string(FaultKind kind)
{
    return kind == FaultKind::BoundViolation ? "bound_violation" : "missed_schedule";
}

std::string format_log_line(const LogEntry& e)
{
    std::ostringstream os;
    os << e.time.count() << ' ' << e.kind << ' ' << e.src << ' ' << e.dst << ' ' << e.phase << ' '
       << (e.detail.empty() ? "-" : e.detail);
    return os.str();
}

const FlowTraces* RunResult::traces_for(const FlowId& flow) const
{
    for (const auto& f : flows)
        if (f.flow == flow)
            return &f;
    return nullptr;
}

// ---------------------------------------------------------------------------

StateTimeline::StateTimeline(ForwardingState initial)
    : initial_(initial), current_(std::move(initial)), changes_(initial_.switch_count())
{
}

void StateTimeline::apply(Nanos at, const SingletonUpdate& update, std::vector<RuleKey>* missing)
{
    if (at < last_)
        throw std::logic_error("state timeline updates must be applied in time order");
    last_ = at;
    current_ = apply_singleton(current_, update, missing);
    changes_[update.target.value].emplace_back(at, current_.table(update.target));
}

Match StateTimeline::lookup(SwitchId sw, const Packet& packet, PortId in_port, Nanos at) const
{
    const auto& history = changes_.at(sw.value);
    auto it = std::lower_bound(history.begin(), history.end(), at,
                               [](const auto& change, Nanos t) { return change.first < t; });
    if (it == history.begin())
        return initial_.lookup(sw, packet, in_port);
    return cnu::lookup(std::prev(it)->second, packet, in_port);
}

// ---------------------------------------------------------------------------

RunResult run_untimed(const Scenario& scenario, const RunOptions& options)
{
    Run run(scenario, options);
    const auto& proc = run.procedure();
    const auto order = phase_order(proc);
    const auto& params = scenario.params;

    Nanos t{0};
    int phase = 0;
    bool first_overall = true;
    for (std::size_t n = 0; n < order.size(); ++n) {
        const auto& pu = proc.items()[order[n]];
        const bool first_in_phase = pu.phase != phase;
        if (first_in_phase && phase != 0) {
            const bool gc = scenario.plan.gc_phases.count(pu.phase) != 0;
            t += gc ? std::max(params.delta_msg, params.d_c + params.d_n) : std::max(params.delta_msg, params.d_c);
        }
        phase = pu.phase;
        t += run.next_gap(first_in_phase);
        const Nanos c = run.controller_delay(first_overall);
        first_overall = false;
        run.check_controller_delay(c, t, pu.update.target, pu.phase);
        run.plan_item(order[n], t, t + c, t + c, std::nullopt, false);
    }
    return run.finish(false, std::nullopt);
}

RunResult run_timed(const Scenario& scenario, const Schedule& schedule, const RunOptions& options)
{
    Run run(scenario, options);
    const auto& proc = run.procedure();
    TimedUpdateProcedure{proc, schedule}.validate();
    const auto& params = scenario.params;
    const auto& clock = scenario.channel.clock;
    if (clock.sync_err < Nanos{0} || clock.exec_err < Nanos{0})
        throw std::invalid_argument("clock model errors must be >= 0");
    if (schedule.phase_times.begin()->second < params.t_su)
        throw std::invalid_argument("first scheduled time precedes the setup time t_su");

    Rng clock_rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<Nanos> offsets(scenario.network.switch_count(), Nanos{0});
    for (auto& off : offsets) {
        if (options.pin_to_bounds)
            off = clock.sync_err;
        else if (clock.sync_err > Nanos{0})
            off = Nanos{std::uniform_int_distribution<std::int64_t>(0, clock.sync_err.count())(clock_rng)};
    }

    const auto order = phase_order(proc);
    Nanos t{0};
    int phase = 0;
    for (std::size_t n = 0; n < order.size(); ++n) {
        const auto& pu = proc.items()[order[n]];
        // Phase 0: all messages go out back to back, phase by phase.
        t += run.next_gap(n == 0);
        phase = pu.phase;
        const Nanos c = run.controller_delay(false);
        run.check_controller_delay(c, t, pu.update.target, phase);
        const Nanos arrival = t + c;

        const Nanos scheduled = schedule.time_of(phase);
        Nanos lateness;
        if (options.pin_to_bounds) {
            lateness = n == 0 ? Nanos{0} : clock.accuracy();
        } else {
            lateness = offsets[pu.update.target.value];
            if (clock.exec_err > Nanos{0})
                lateness += Nanos{std::uniform_int_distribution<std::int64_t>(0, clock.exec_err.count())(clock_rng)};
        }
        Nanos executed = scheduled + lateness;
        if (arrival > executed) {
            run.fault(FaultKind::MissedSchedule, arrival, pu.update.target, phase,
                      "scheduled=" + to_string(scheduled) + ";arrived=" + to_string(arrival));
            executed = arrival;
        } else if (lateness > params.delta_sched) {
            run.fault(FaultKind::BoundViolation, executed, pu.update.target, phase,
                      "lateness=" + to_string(lateness) + ">delta_sched");
        }
        run.plan_item(order[n], t, arrival, executed, scheduled, true);
    }
    return run.finish(true, schedule);
}

std::vector<PacketInstance> inject_flow(const Network& net, const TestFlow& flow, Nanos t0, Nanos t1)
{
    if (!net.is_ingress(flow.ingress))
        throw std::invalid_argument("test flow '" + flow.id + "' does not enter through an ingress port");
    const Nanos period = flow.period();
    if (period <= Nanos{0})
        throw std::invalid_argument("test flow '" + flow.id + "': rate too high for nanosecond spacing");
    std::vector<PacketInstance> out;
    for (Nanos t = t0; t < t1; t += period)
        out.push_back(PacketInstance{flow.packet(), flow.ingress, t});
    return out;
}

PacketTrace forward_packet(const Network& net, const StateTimeline& timeline, const PacketInstance& instance,
                           Rng& rng, bool pin_to_bounds)
{
    if (!net.is_ingress(instance.ingress))
        throw std::invalid_argument("packet instance does not arrive at an ingress port");
    PacketTrace trace{instance, {}, false};
    Packet packet = instance.packet;
    Endpoint at = instance.ingress;
    Nanos t = instance.arrival;
    const std::size_t max_hops = net.switch_count();
    for (;;) {
        if (trace.hops.size() >= max_hops) {
            trace.truncated = true;
            break;
        }
        const Match m = timeline.lookup(at.sw, packet, at.port, t);
        trace.hops.push_back(Hop{at.sw, at.port, t, packet, m.action, m.generation});

        std::optional<PortId> out;
        if (const auto* f = std::get_if<Forward>(&m.action)) {
            out = f->out;
        } else if (const auto* ft = std::get_if<ForwardTagged>(&m.action)) {
            out = ft->out;
            packet.tag = ft->tag;
        }
        if (!out)
            break;
        const auto peer = net.peer(Endpoint{at.sw, *out});
        if (!peer)
            break;  // leaves the network through an unlinked port
        const auto& link = net.link(peer->link);
        t += pin_to_bounds ? upper_bound(link.delay) : sample(link.delay, rng);
        at = peer->endpoint;
    }
    return trace;
}

}  // namespace cnu
