#include <stdexcept>
#include <doctest.h>

#include "cnu/planner.hpp"
#include "cnu/simulator.hpp"
#include "cnu/topology.hpp"

using namespace cnu;
using namespace std::chrono_literals;

namespace {

SystemParameters reference_params()
{
    SystemParameters p;
    p.d_n = 262us;
    p.d_c = 4865us;
    p.delta_sched = 1297us;
    p.delta_msg = 5240us;
    return p;
}

// Switches s0..s(n-1) in a line, ingress on s0.
Network line(std::size_t n, DelayModel delay)
{
    Network net;
    for (std::size_t i = 0; i < n; ++i)
        net.add_switch("s" + std::to_string(i));
    for (std::size_t i = 0; i + 1 < n; ++i)
        net.connect(SwitchId{static_cast<std::uint32_t>(i)}, SwitchId{static_cast<std::uint32_t>(i + 1)}, delay);
    net.add_ingress(SwitchId{0}, "in");
    return net;
}

// Synthetic k-phase plan over `net` whose singletons carry no rules.
UpdatePlan synthetic(const Network& net, const std::vector<std::size_t>& sizes, std::set<int> gc)
{
    std::vector<PhasedUpdate> items;
    std::uint32_t next = 0;
    for (std::size_t j = 0; j < sizes.size(); ++j)
        for (std::size_t i = 0; i < sizes[j]; ++i)
            items.push_back(PhasedUpdate{
                SingletonUpdate{SwitchId{next++ % static_cast<std::uint32_t>(net.switch_count())}, {},
                                UpdateMode::Install},
                static_cast<int>(j) + 1});
    return UpdatePlan{UpdateProcedure(std::move(items)), std::move(gc)};
}

Scenario scenario_for(Network net, UpdatePlan plan, SystemParameters params)
{
    params.t_su = default_setup_time(params, plan.procedure.size());
    ForwardingState initial(net.switch_count());
    return Scenario{std::move(net), std::move(initial), std::move(plan), params, ControlChannel::defaults(params), {}};
}

}  // namespace

TEST_CASE("event queue pops by time, ties in insertion order")
{
    EventQueue<int> q;
    q.push(5ns, 1);
    q.push(3ns, 2);
    q.push(5ns, 3);
    q.push(3ns, 4);
    std::vector<int> got;
    while (!q.empty())
        got.push_back(q.pop().second);
    CHECK(got == std::vector<int>{2, 4, 1, 3});
}

TEST_CASE("flow injection")
{
    auto net = line(2, ConstantDelay{1ms});
    TestFlow f{"f", *net.ingress("in"), 1000.0};
    auto pkts = inject_flow(net, f, 0ns, 10ms);
    REQUIRE(pkts.size() == 10);
    for (std::size_t i = 0; i < pkts.size(); ++i)
        CHECK(pkts[i].arrival == Nanos{static_cast<std::int64_t>(i) * 1000000});
    CHECK(inject_flow(net, f, 0ns, 500us).size() == 1);

    TestFlow fast{"g", *net.ingress("in"), packet_rate(40e6, 1000)};
    CHECK(fast.rate_pps == doctest::Approx(5000.0));
    CHECK(fast.period() == 200us);

    TestFlow bad{"h", Endpoint{SwitchId{1}, PortId{0}}, 10.0};
    CHECK_THROWS(inject_flow(net, bad, 0ns, 1ms));
}

TEST_CASE("timeline exposes updates strictly after their execution time")
{
    ForwardingState s(1);
    RuleKey k{"f", std::nullopt, PortId{0}};
    s.set_rule(SwitchId{0}, k, Forward{PortId{1}});
    StateTimeline tl(s);
    tl.apply(10ns, SingletonUpdate{SwitchId{0}, {{k, Forward{PortId{2}}}}, UpdateMode::Install});
    Packet p{"f", std::nullopt};
    CHECK(tl.lookup(SwitchId{0}, p, PortId{0}, 9ns).action == Action{Forward{PortId{1}}});
    CHECK(tl.lookup(SwitchId{0}, p, PortId{0}, 10ns).action == Action{Forward{PortId{1}}});
    CHECK(tl.lookup(SwitchId{0}, p, PortId{0}, 11ns).action == Action{Forward{PortId{2}}});
    CHECK(tl.lookup(SwitchId{0}, p, PortId{0}, 11ns).generation == Generation::New);
    CHECK_THROWS_AS(tl.apply(5ns, SingletonUpdate{SwitchId{0}, {}, UpdateMode::Install}), std::logic_error);
}

TEST_CASE("static forwarding follows the configured path with prefix-sum hop times")
{
    Network net;
    for (int i = 0; i < 4; ++i)
        net.add_switch("s" + std::to_string(i));
    const std::vector<Nanos> delays{3ms, 1ms, 7ms};
    for (std::uint32_t i = 0; i < 3; ++i)
        net.connect(SwitchId{i}, SwitchId{i + 1}, ConstantDelay{delays[i]});
    auto in = net.add_ingress(SwitchId{0}, "in");
    TestFlow f{"f", in, 100.0};
    Path path{SwitchId{0}, SwitchId{1}, SwitchId{2}, SwitchId{3}};
    ForwardingState s(net.switch_count());
    install_route(s, net, f, path, VersionTag{1});
    StateTimeline tl(s);
    Rng rng(1);
    auto trace = forward_packet(net, tl, PacketInstance{f.packet(), in, 2ms}, rng);
    REQUIRE(trace.hops.size() == 4);
    CHECK_FALSE(trace.truncated);
    Nanos expect = 2ms;
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(trace.hops[i].sw == path[i]);
        CHECK(trace.hops[i].arrival == expect);
        if (i < 3)
            expect += delays[i];
    }
    CHECK(trace.hops[0].packet.tag == std::nullopt);
    CHECK(trace.hops[1].packet.tag == VersionTag{1});
    CHECK(trace.hops.back().action == Action{Deliver{}});
}

TEST_CASE("forwarding loops are cut off and misses drop")
{
    auto net = line(2, ConstantDelay{1us});
    auto in = *net.ingress("in");
    auto fwd = net.link_between(SwitchId{0}, SwitchId{1});
    ForwardingState s(2);
    s.set_rule(SwitchId{0}, RuleKey{"f", std::nullopt, in.port}, Forward{fwd->first.port});
    s.set_rule(SwitchId{1}, RuleKey{"f", std::nullopt, fwd->second.endpoint.port},
               Forward{fwd->second.endpoint.port});
    s.set_rule(SwitchId{0}, RuleKey{"f", std::nullopt, fwd->first.port}, Forward{fwd->first.port});
    StateTimeline tl(s);
    Rng rng(1);
    auto loop = forward_packet(net, tl, PacketInstance{Packet{"f", std::nullopt}, in, 0ns}, rng);
    CHECK(loop.truncated);
    CHECK(loop.hops.size() == net.switch_count());

    auto miss = forward_packet(net, tl, PacketInstance{Packet{"g", std::nullopt}, in, 0ns}, rng);
    REQUIRE(miss.hops.size() == 1);
    CHECK(miss.hops[0].action == Action{Drop{}});
}

TEST_CASE("pinned untimed run equals the closed form exactly")
{
    const auto p = reference_params();
    auto net = line(3, ConstantDelay{100us});
    auto sc = scenario_for(net, synthetic(net, {3, 3, 3}, {3}), p);
    auto run = run_untimed(sc, RunOptions{1, true, std::nullopt});
    CHECK(run.update_duration == twophase_gc_worst_duration(3, 3, 3, p));
    CHECK(run.faults.empty());

    auto sc2 = scenario_for(net, synthetic(net, {4, 2}, {}), p);
    std::vector<std::size_t> sizes{4, 2};
    CHECK(run_untimed(sc2, RunOptions{1, true, std::nullopt}).update_duration == kphase_worst_duration(sizes, p));
}

TEST_CASE("single switch, single phase: duration zero, latency is the controller delay")
{
    auto p = reference_params();
    auto net = line(1, ConstantDelay{});
    auto sc = scenario_for(net, synthetic(net, {1}, {}), p);
    sc.channel.controller_delay = ConstantDelay{3ms};
    auto run = run_untimed(sc, RunOptions{});
    CHECK(run.update_duration == 0ns);
    REQUIRE(run.executions.size() == 1);
    CHECK(run.executions[0].executed - run.executions[0].sent == 3ms);
}

TEST_CASE("random untimed runs never exceed the closed form")
{
    const auto p = reference_params();
    auto net = line(4, ConstantDelay{100us});
    auto sc = scenario_for(net, synthetic(net, {3, 3, 3}, {3}), p);
    const auto bound = twophase_gc_worst_duration(3, 3, 3, p);
    for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
        auto run = run_untimed(sc, RunOptions{seed, false, std::nullopt});
        CHECK(run.update_duration <= bound);
        CHECK(run.faults.empty());
    }
}

TEST_CASE("timed runs")
{
    auto p = reference_params();
    auto net = line(3, ConstantDelay{100us});
    const PhaseShape shape{{3, 1, 3}, {3}};

    SUBCASE("delta = 0 gives exactly Dn")
    {
        auto q = p;
        q.delta_sched = 0ns;
        auto sc = scenario_for(net, synthetic(net, {3, 1, 3}, {3}), q);
        auto sched = worst_case_schedule(shape, sc.params.t_su, q);
        auto run = run_timed(sc, sched, RunOptions{3, false, std::nullopt});
        CHECK(run.update_duration == q.d_n);
        CHECK(run.faults.empty());
    }
    SUBCASE("executions land in [T, T + delta] and within the timed bound")
    {
        auto sc = scenario_for(net, synthetic(net, {3, 1, 3}, {3}), p);
        auto sched = worst_case_schedule(shape, sc.params.t_su, p);
        for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
            auto run = run_timed(sc, sched, RunOptions{seed, false, std::nullopt});
            CHECK(run.update_duration <= 4153us);
            for (const auto& e : run.executions) {
                REQUIRE(e.scheduled);
                CHECK(e.executed >= *e.scheduled);
                CHECK(e.executed <= *e.scheduled + p.delta_sched);
            }
            CHECK(run.faults.empty());
        }
        auto pinned = run_timed(sc, sched, RunOptions{1, true, std::nullopt});
        CHECK(pinned.update_duration == 4153us);
    }
    SUBCASE("late messages execute on arrival and are reported")
    {
        auto sc = scenario_for(net, synthetic(net, {3, 1, 3}, {3}), p);
        sc.params.t_su = 0ns;
        sc.channel.controller_delay = ConstantDelay{4ms};
        auto sched = worst_case_schedule(shape, 1ms, p);
        auto run = run_timed(sc, sched, RunOptions{1, false, std::nullopt});
        REQUIRE_FALSE(run.faults.empty());
        CHECK(run.faults[0].kind == FaultKind::MissedSchedule);
        for (const auto& e : run.executions)
            CHECK(e.executed >= e.received);
    }
    SUBCASE("schedule before the setup time is rejected")
    {
        auto sc = scenario_for(net, synthetic(net, {3, 1, 3}, {3}), p);
        CHECK_THROWS(run_timed(sc, worst_case_schedule(shape, sc.params.t_su - 1ns, p), RunOptions{}));
    }
}

TEST_CASE("delays beyond their bounds are reported, not hidden")
{
    auto p = reference_params();
    auto net = line(3, ConstantDelay{100us});
    auto sc = scenario_for(net, synthetic(net, {2, 2}, {}), p);
    sc.channel.controller_delay = ConstantDelay{p.d_c + 1us};
    auto run = run_untimed(sc, RunOptions{});
    REQUIRE_FALSE(run.faults.empty());
    CHECK(run.faults[0].kind == FaultKind::BoundViolation);
}

TEST_CASE("runs are deterministic per seed")
{
    auto p = reference_params();
    auto net = leaf_spine(12, UniformDelay{131us});
    auto routes = leaf_spine_routes(net, 2000.0);
    std::vector<UpdatePlan> plans;
    ForwardingState initial(net.switch_count());
    std::vector<TestFlow> flows;
    for (const auto& r : routes) {
        install_route(initial, net, r.flow, r.old_path, VersionTag{1});
        plans.push_back(path_change_plan(ProcedureKind::TwoPhaseGc, net, r.flow, r.old_path, r.new_path));
        flows.push_back(r.flow);
    }
    auto plan = merge_plans(plans);
    p.t_su = default_setup_time(p, plan.procedure.size());
    Scenario sc{net, initial, plan, p, ControlChannel::defaults(p), flows};
    auto a = run_untimed(sc, RunOptions{42, false, std::nullopt});
    auto b = run_untimed(sc, RunOptions{42, false, std::nullopt});
    auto c = run_untimed(sc, RunOptions{43, false, std::nullopt});
    CHECK(a.update_duration == b.update_duration);
    CHECK(a.update_duration != c.update_duration);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i)
        CHECK(format_log_line(a.log[i]) == format_log_line(b.log[i]));
    CHECK(a.new_config == b.new_config);
}

TEST_CASE("log line format")
{
    CHECK(format_log_line(LogEntry{12ns, "send", "controller", "s1", 2, "install"}) ==
          "12 send controller s1 2 install");
    CHECK(format_log_line(LogEntry{0ns, "exec", "a", "a", 1, ""}) == "0 exec a a 1 -");
}
