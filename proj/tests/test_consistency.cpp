#include <stdexcept>
#include <doctest.h>

#include "cnu/consistency.hpp"
#include "cnu/planner.hpp"
#include "cnu/simulator.hpp"
#include "cnu/topology.hpp"

using namespace cnu;
using namespace std::chrono_literals;

namespace {

struct Triangle {
    Network net;
    TestFlow flow;
    Path old_path;
    Path new_path;
};

// s0-s2 direct, and s0-s1-s2.
Triangle triangle(double rate)
{
    Triangle t;
    for (int i = 0; i < 3; ++i)
        t.net.add_switch("s" + std::to_string(i));
    t.net.connect(SwitchId{0}, SwitchId{2}, UniformDelay{2ms});
    t.net.connect(SwitchId{0}, SwitchId{1}, UniformDelay{1ms});
    t.net.connect(SwitchId{1}, SwitchId{2}, UniformDelay{1ms});
    t.flow = TestFlow{"f", t.net.add_ingress(SwitchId{0}, "in"), rate};
    t.old_path = {SwitchId{0}, SwitchId{2}};
    t.new_path = {SwitchId{0}, SwitchId{1}, SwitchId{2}};
    return t;
}

// Walks the packet through one static configuration and reports the
// (switch, action) sequence; nullopt when it loops.
std::optional<std::vector<std::pair<SwitchId, Action>>> static_walk(const Network& net, const ForwardingState& cfg,
                                                                    Endpoint ingress, Packet pkt)
{
    std::vector<std::pair<SwitchId, Action>> out;
    Endpoint at = ingress;
    for (std::size_t guard = 0; guard < 4 * net.switch_count(); ++guard) {
        Action a = cfg.lookup(at.sw, pkt, at.port).action;
        out.emplace_back(at.sw, a);
        PortId port;
        if (auto* f = std::get_if<Forward>(&a)) {
            port = f->out;
        } else if (auto* ft = std::get_if<ForwardTagged>(&a)) {
            port = ft->out;
            pkt.tag = ft->tag;
        } else {
            return out;
        }
        auto peer = net.peer(Endpoint{at.sw, port});
        if (!peer)
            return out;
        at = peer->endpoint;
    }
    return std::nullopt;
}

bool follows(const PacketTrace& trace, const std::optional<std::vector<std::pair<SwitchId, Action>>>& walk)
{
    if (trace.truncated || !walk || walk->size() != trace.hops.size())
        return false;
    for (std::size_t i = 0; i < trace.hops.size(); ++i)
        if ((*walk)[i].first != trace.hops[i].sw || (*walk)[i].second != trace.hops[i].action)
            return false;
    return true;
}

Scenario make_scenario(const Triangle& t, ProcedureKind kind, SystemParameters p)
{
    ForwardingState initial(t.net.switch_count());
    install_route(initial, t.net, t.flow, t.old_path, VersionTag{1});
    auto plan = path_change_plan(kind, t.net, t.flow, t.old_path, t.new_path);
    p.t_su = default_setup_time(p, plan.procedure.size());
    return Scenario{t.net, initial, plan, p, ControlChannel::defaults(p), {t.flow}};
}

}  // namespace

TEST_CASE("packet classification")
{
    auto t = triangle(1000.0);
    ForwardingState old_cfg(3);
    install_route(old_cfg, t.net, t.flow, t.old_path, VersionTag{1});
    ForwardingState new_cfg = old_cfg;
    install_route(new_cfg, t.net, t.flow, t.new_path, VersionTag{2});
    Rng rng(1);

    StateTimeline before(old_cfg);
    auto p_old = forward_packet(t.net, before, PacketInstance{t.flow.packet(), t.flow.ingress, 0ns}, rng);
    CHECK(classify_packet(p_old, old_cfg, new_cfg) == Verdict::ConsistentOld);

    StateTimeline after(new_cfg);
    auto p_new = forward_packet(t.net, after, PacketInstance{t.flow.packet(), t.flow.ingress, 0ns}, rng);
    CHECK(classify_packet(p_new, old_cfg, new_cfg) == Verdict::ConsistentNew);

    // New stamp at the ingress, old tag rules gone downstream: dropped mid-path.
    ForwardingState broken = old_cfg;
    auto rules = route_rules(t.net, t.flow, t.new_path, VersionTag{2});
    for (const auto& [k, a] : rules.front().wildcard)
        broken.set_rule(rules.front().sw, k, a);
    StateTimeline mixed(broken);
    auto p_mixed = forward_packet(t.net, mixed, PacketInstance{t.flow.packet(), t.flow.ingress, 0ns}, rng);
    CHECK(p_mixed.hops.size() == 2);
    CHECK(p_mixed.hops.back().action == Action{Drop{}});
    CHECK(classify_packet(p_mixed, old_cfg, new_cfg) == Verdict::Inconsistent);

    PacketTrace looping = p_old;
    looping.truncated = true;
    CHECK(classify_packet(looping, old_cfg, new_cfg) == Verdict::Inconsistent);

    PacketTrace alien = p_old;
    alien.hops[0].sw = SwitchId{9};
    CHECK_THROWS_AS(classify_packet(alien, old_cfg, new_cfg), std::invalid_argument);
}

TEST_CASE("measured counts agree with a whole-path oracle")
{
    SystemParameters p;
    p.d_c = 3ms;
    p.d_n = 2ms;
    p.delta_msg = 1ms;
    p.delta_sched = 1ms;
    auto t = triangle(20000.0);
    for (auto kind : {ProcedureKind::Ordered, ProcedureKind::TwoPhase, ProcedureKind::TwoPhaseGc}) {
        auto sc = make_scenario(t, kind, p);
        const auto shape = shape_of(sc.plan);
        for (std::uint64_t seed = 1; seed <= 60; ++seed) {
            RunResult run = seed % 2 ? run_untimed(sc, RunOptions{seed, false, std::nullopt})
                                     : run_timed(sc, knob_schedule(shape, sc.params.t_su, Nanos{(seed % 5) * 500000}, p),
                                                 RunOptions{seed, false, std::nullopt});
            const auto& traces = run.traces_for("f")->packets;
            std::size_t expected = 0;
            for (const auto& tr : traces) {
                auto w_old = static_walk(t.net, run.old_config, tr.instance.ingress, tr.instance.packet);
                auto w_new = static_walk(t.net, run.new_config, tr.instance.ingress, tr.instance.packet);
                if (!follows(tr, w_old) && !follows(tr, w_new))
                    ++expected;
            }
            auto report = measure_inconsistency(run, t.flow);
            CHECK(report.n_packets == traces.size());
            CHECK(report.n_inconsistent == expected);
            CHECK(report.inconsistency == inconsistency_time(expected, t.flow.rate_pps));
        }
    }
}

TEST_CASE("two-phase without gc never breaks a packet")
{
    SystemParameters p;
    p.d_c = 3ms;
    p.d_n = 2ms;
    p.delta_msg = 1ms;
    p.delta_sched = 1ms;
    auto t = triangle(20000.0);
    auto sc = make_scenario(t, ProcedureKind::TwoPhase, p);
    for (std::uint64_t seed = 1; seed <= 50; ++seed)
        CHECK(measure_inconsistency(run_untimed(sc, RunOptions{seed, false, std::nullopt}), t.flow).n_inconsistent ==
              0);
}

TEST_CASE("knob on a single 10 ms link: I = Dn - d")
{
    Network net;
    auto a = net.add_switch("s1");
    auto b = net.add_switch("s2");
    net.connect(a, b, ConstantDelay{10ms});
    const double rate = 10000.0;
    TestFlow flow{"f", net.add_ingress(a, "in"), rate};
    Path path{a, b};
    SystemParameters p;
    p.d_c = 1ms;
    p.d_n = 10ms;
    p.delta_msg = 100us;
    p.delta_sched = 0ns;
    ForwardingState initial(2);
    install_route(initial, net, flow, path, VersionTag{1});
    auto plan = path_change_plan(ProcedureKind::TwoPhaseGc, net, flow, path, path);
    p.t_su = default_setup_time(p, plan.procedure.size());
    Scenario sc{net, initial, plan, p, ControlChannel::defaults(p), {flow}};
    const auto shape = shape_of(plan);
    const Nanos tol{static_cast<std::int64_t>(1e9 / rate)};
    for (Nanos d : {0ms, 2ms, 4ms, 6ms, 8ms, 10ms, 12ms}) {
        auto run = run_timed(sc, knob_schedule(shape, p.t_su, d, p), RunOptions{7, false, std::nullopt});
        const Nanos expected = std::max(Nanos{0}, p.d_n - d);
        const Nanos got = measure_inconsistency(run, flow).inconsistency;
        INFO("d=", d.count(), " got=", got.count(), " expected=", expected.count());
        CHECK(got >= expected - tol);
        CHECK(got <= expected + tol);
        if (d >= p.d_n)
            CHECK(got == 0ns);
    }
}

TEST_CASE("inconsistency metric and knob schedule")
{
    CHECK(inconsistency_time(3, 1000.0) == 3ms);
    CHECK(inconsistency_time(0, 1.0) == 0ns);
    CHECK_THROWS_AS(inconsistency_time(1, 0.0), std::invalid_argument);

    RunResult empty;
    CHECK_THROWS_AS(measure_inconsistency(empty, TestFlow{"f", {}, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(measure_inconsistency(empty, TestFlow{"f", {}, 10.0}), std::invalid_argument);

    SystemParameters p;
    p.delta_sched = 2ns;
    p.d_n = 100ns;
    auto s = knob_schedule(0ns, 5ns, p);
    CHECK(s.phase_times == std::map<int, Nanos>{{1, 0ns}, {2, 2ns}, {3, 9ns}});
    CHECK(s.knob_d == 5ns);
    CHECK_THROWS(knob_schedule(0ns, -1ns, p));

    const PhaseShape shape{{2, 1, 2}, {3}};
    CHECK(knob_schedule(shape, 7ns, p.d_n, p).phase_times == worst_case_schedule(shape, 7ns, p).phase_times);

    CHECK(csv_header_inconsistency() == "flow_id,n_inconsistent,rate_pps,inconsistency_ns");
    CHECK(to_csv_row(InconsistencyReport{"f", 2, 4, 1000.0, 2ms}) == "f,2,1000,2000000");
}
