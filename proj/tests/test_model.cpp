#include <doctest.h>

#include <stdexcept>

#include "cnu/model.hpp"

using namespace cnu;
using namespace std::chrono_literals;

namespace {

PhasedUpdate item(std::uint32_t sw, int phase, UpdateMode mode = UpdateMode::Install)
{
    return PhasedUpdate{SingletonUpdate{SwitchId{sw}, {}, mode}, phase};
}

}  // namespace

TEST_CASE("network wiring")
{
    Network net;
    auto a = net.add_switch("a");
    auto b = net.add_switch("b");
    auto c = net.add_switch("c");
    net.connect(a, b, ConstantDelay{1ms});
    net.connect(b, c, UniformDelay{2ms});
    auto in = net.add_ingress(a, "a-in");

    CHECK(net.switch_count() == 3);
    CHECK(net.find("b") == b);
    CHECK_FALSE(net.find("zz"));
    CHECK(net.port_count(b) == 2);
    CHECK(net.is_ingress(in));
    CHECK(net.ingress("a-in") == in);
    CHECK_FALSE(net.peer(in));

    auto ab = net.link_between(a, b);
    REQUIRE(ab);
    CHECK(ab->first.sw == a);
    CHECK(ab->second.endpoint.sw == b);
    auto ba = net.link_between(b, a);
    REQUIRE(ba);
    CHECK(ba->first == ab->second.endpoint);
    CHECK_FALSE(net.link_between(a, c));

    CHECK_THROWS(net.add_link(ab->first, Endpoint{c, net.add_port(c)}, ConstantDelay{}));
    CHECK_THROWS(net.add_switch("a"));
}

TEST_CASE("delay model bounds")
{
    CHECK(upper_bound(ConstantDelay{3ms}) == 3ms);
    CHECK(upper_bound(UniformDelay{5ms}) == 5ms);
    CHECK(upper_bound(ExponentialDelay{1ms, 10ms}) == 10ms);
    CHECK(upper_bound(EmpiricalDelay{{1ms, 7ms, 2ms}}) == 7ms);
    CHECK(mean_of(UniformDelay{4ms}) == 2ms);
    CHECK_THROWS(validate(ConstantDelay{-1ns}));
    CHECK_THROWS(validate(EmpiricalDelay{}));
    CHECK_THROWS(validate(ExponentialDelay{1ms, -1ms}));
}

TEST_CASE("test flow period")
{
    TestFlow f{"f", {}, 5000.0};
    CHECK(f.period() == 200us);
    CHECK(TestFlow{"g", {}, 3.0}.period() == Nanos{333333333});
    CHECK_THROWS(TestFlow{"h", {}, 0.0}.period());
    CHECK(packet_rate(8000.0, 1) == doctest::Approx(1000.0));
}

TEST_CASE("lookup prefers exact tag over wildcard and misses drop")
{
    RuleTable t;
    PortId p{1};
    t[RuleKey{"f", std::nullopt, p}] = Rule{ForwardTagged{PortId{2}, VersionTag{1}}, Generation::Old};
    t[RuleKey{"f", VersionTag{7}, p}] = Rule{Forward{PortId{3}}, Generation::New};

    auto untagged = lookup(t, Packet{"f", std::nullopt}, p);
    CHECK(untagged.action == Action{ForwardTagged{PortId{2}, VersionTag{1}}});
    CHECK(untagged.generation == Generation::Old);

    auto tagged = lookup(t, Packet{"f", VersionTag{7}}, p);
    CHECK(tagged.action == Action{Forward{PortId{3}}});

    auto other_tag = lookup(t, Packet{"f", VersionTag{9}}, p);
    CHECK(other_tag.action == Action{ForwardTagged{PortId{2}, VersionTag{1}}});

    auto miss = lookup(t, Packet{"g", std::nullopt}, p);
    CHECK(miss.action == Action{Drop{}});
    CHECK_FALSE(miss.generation);
}

TEST_CASE("apply_singleton installs and removes")
{
    ForwardingState s(2);
    RuleKey k{"f", VersionTag{1}, PortId{0}};
    s.set_rule(SwitchId{0}, k, Forward{PortId{1}});

    RuleKey k2{"f", VersionTag{2}, PortId{0}};
    auto next = apply_singleton(s, SingletonUpdate{SwitchId{0}, {{k2, Deliver{}}}, UpdateMode::Install});
    CHECK(next.table(SwitchId{0}).at(k2).generation == Generation::New);
    CHECK(next.table(SwitchId{0}).size() == 2);
    CHECK(s.table(SwitchId{0}).size() == 1);

    std::vector<RuleKey> missing;
    RuleKey absent{"zz", std::nullopt, PortId{4}};
    auto removed = apply_singleton(next, SingletonUpdate{SwitchId{0}, {{k, Drop{}}, {absent, Drop{}}},
                                                         UpdateMode::Remove},
                                   &missing);
    CHECK(removed.table(SwitchId{0}).count(k) == 0);
    REQUIRE(missing.size() == 1);
    CHECK(missing[0] == absent);

    CHECK_THROWS(apply_singleton(s, SingletonUpdate{SwitchId{5}, {}, UpdateMode::Install}));
}

TEST_CASE("update procedures need contiguous non-empty phases")
{
    UpdateProcedure ok({item(0, 1), item(1, 1), item(0, 2), item(1, 3, UpdateMode::Remove)});
    CHECK(ok.phase_count() == 3);
    CHECK(ok.phase_sizes() == std::vector<std::size_t>{2, 1, 1});
    CHECK(ok.removal_count(3) == 1);
    CHECK(ok.removal_count(1) == 0);

    CHECK_THROWS_AS(UpdateProcedure({item(0, 1), item(0, 3)}), std::invalid_argument);
    CHECK_THROWS_AS(UpdateProcedure({item(0, 2)}), std::invalid_argument);
    CHECK_THROWS_AS(UpdateProcedure({item(0, 0)}), std::invalid_argument);

    UpdatePlan plan{ok, {3}};
    CHECK_NOTHROW(plan.validate());
    CHECK_THROWS((UpdatePlan{ok, {1}}.validate()));
    CHECK_THROWS((UpdatePlan{ok, {4}}.validate()));
}

TEST_CASE("schedules allow equal times but not decreasing ones")
{
    Schedule s{{{1, 10ms}, {2, 10ms}, {3, 12ms}}, std::nullopt};
    CHECK_NOTHROW(s.validate());
    CHECK(s.time_of(3) == 12ms);
    CHECK_THROWS(s.time_of(4));
    Schedule bad{{{1, 10ms}, {2, 9ms}}, std::nullopt};
    CHECK_THROWS(bad.validate());
}

TEST_CASE("timed procedure similarity ignores times and order")
{
    UpdateProcedure p({item(0, 1), item(1, 1), item(1, 2)});
    UpdateProcedure shuffled({item(1, 1), item(0, 1), item(1, 2)});
    TimedUpdateProcedure timed{shuffled, Schedule{{{1, 1ms}, {2, 2ms}}, std::nullopt}};
    CHECK(similar(timed, p));
    UpdateProcedure other({item(0, 1), item(1, 1), item(0, 2)});
    CHECK_FALSE(similar(timed, other));
}
