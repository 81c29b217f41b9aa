#include "cnu/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

namespace cnu {
namespace {

using json = nlohmann::json;

double radians(double deg)
{
    return deg * std::numbers::pi / 180.0;
}

std::string link_label(const TopologyFile::LinkSpec& l)
{
    return "link " + l.a + "-" + l.b;
}

GeoPoint read_point(const json& node, const std::string& id)
{
    if (!node.at("lat").is_number() || !node.at("lon").is_number())
        throw std::invalid_argument("node " + id + ": lat/lon must be numbers");
    GeoPoint p{node.at("lat").get<double>(), node.at("lon").get<double>()};
    if (p.lat < -90.0 || p.lat > 90.0 || p.lon < -180.0 || p.lon > 180.0)
        throw std::invalid_argument("node " + id + ": coordinates out of range");
    return p;
}

DelayModel make_delay(Nanos value, const GeoDelayOptions& options)
{
    if (options.mode == LinkDelayMode::Constant)
        return ConstantDelay{value};
    auto cap = Nanos{std::llround(static_cast<double>(value.count()) * options.cap_factor)};
    return ExponentialDelay{value, cap};
}

std::string switch_label(const Network& net, SwitchId sw)
{
    return net.contains(sw) ? net.name(sw) : "#" + std::to_string(sw.value);
}

// Hop-by-hop ports of a path: in_ports[i] and out_ports[i] for i < m - 1.
struct PathPorts {
    std::vector<PortId> in;
    std::vector<PortId> out;
};

PathPorts path_ports(const Network& net, const TestFlow& flow, const Path& path)
{
    if (path.empty())
        throw std::invalid_argument("flow " + flow.id + ": empty path");
    if (path.front() != flow.ingress.sw)
        throw std::invalid_argument("flow " + flow.id + ": path does not start at the flow's ingress switch");
    if (!net.is_ingress(flow.ingress))
        throw std::invalid_argument("flow " + flow.id + ": ingress endpoint is not an ingress port");
    PathPorts ports;
    ports.in.push_back(flow.ingress.port);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        auto hop = net.link_between(path[i], path[i + 1]);
        if (!hop)
            throw std::invalid_argument("flow " + flow.id + ": no link between " + switch_label(net, path[i]) +
                                        " and " + switch_label(net, path[i + 1]));
        ports.out.push_back(hop->first.port);
        ports.in.push_back(hop->second.endpoint.port);
    }
    return ports;
}

// All rules of a route, grouped per switch.
std::map<SwitchId, std::map<RuleKey, Action>> rules_by_switch(const std::vector<RouteRules>& route,
                                                              bool with_wildcards)
{
    std::map<SwitchId, std::map<RuleKey, Action>> out;
    for (const auto& hop : route) {
        auto& table = out[hop.sw];
        table.insert(hop.tagged.begin(), hop.tagged.end());
        if (with_wildcards)
            table.insert(hop.wildcard.begin(), hop.wildcard.end());
    }
    return out;
}

// Entries of `a` that `b` lacks or maps to a different action.
std::map<RuleKey, Action> difference(const std::map<RuleKey, Action>& a, const std::map<RuleKey, Action>& b)
{
    std::map<RuleKey, Action> out;
    for (const auto& [k, v] : a) {
        auto it = b.find(k);
        if (it == b.end() || it->second != v)
            out.emplace(k, v);
    }
    return out;
}

// Switches in first-visit order.
std::vector<SwitchId> unique_switches(const Path& path)
{
    std::vector<SwitchId> out;
    for (auto sw : path)
        if (std::find(out.begin(), out.end(), sw) == out.end())
            out.push_back(sw);
    return out;
}

void check_endpoints(const TestFlow& flow, const Path& old_path, const Path& new_path)
{
    if (old_path.empty() || new_path.empty())
        throw std::invalid_argument("flow " + flow.id + ": empty path");
    if (old_path.front() != new_path.front())
        throw std::invalid_argument("flow " + flow.id + ": old and new path have different ingress switches");
    if (old_path.back() != new_path.back())
        throw std::invalid_argument("flow " + flow.id + ": old and new path have different egress switches");
}

UpdatePlan two_phase(const Network& net, const TestFlow& flow, const Path& old_path, const Path& new_path,
                     VersionTag old_tag, VersionTag new_tag, bool with_gc)
{
    check_endpoints(flow, old_path, new_path);
    if (old_tag == new_tag)
        throw std::invalid_argument("flow " + flow.id + ": two-phase update needs distinct version tags");
    const auto old_route = route_rules(net, flow, old_path, old_tag);
    const auto new_route = route_rules(net, flow, new_path, new_tag);

    std::vector<PhasedUpdate> items;
    const auto installs = rules_by_switch(new_route, false);
    for (auto sw : unique_switches(new_path))
        items.push_back(PhasedUpdate{SingletonUpdate{sw, installs.at(sw), UpdateMode::Install}, 1});

    items.push_back(
        PhasedUpdate{SingletonUpdate{new_path.front(), new_route.front().wildcard, UpdateMode::Install}, 2});

    UpdatePlan plan;
    if (with_gc) {
        const auto removals = rules_by_switch(old_route, false);
        for (auto sw : unique_switches(old_path))
            items.push_back(PhasedUpdate{SingletonUpdate{sw, removals.at(sw), UpdateMode::Remove}, 3});
        plan.gc_phases = {3};
    }
    plan.procedure = UpdateProcedure(std::move(items));
    return plan;
}

UpdatePlan ordered(const Network& net, const TestFlow& flow, const Path& old_path, const Path& new_path,
                   VersionTag tag)
{
    check_endpoints(flow, old_path, new_path);
    const auto old_rules = rules_by_switch(route_rules(net, flow, old_path, tag), true);
    const auto new_rules = rules_by_switch(route_rules(net, flow, new_path, tag), true);

    std::vector<PhasedUpdate> items;
    int phase = 0;
    auto order = unique_switches(new_path);
    std::reverse(order.begin(), order.end());
    for (auto sw : order) {
        auto old_it = old_rules.find(sw);
        auto changed = old_it == old_rules.end() ? new_rules.at(sw) : difference(new_rules.at(sw), old_it->second);
        if (!changed.empty())
            items.push_back(PhasedUpdate{SingletonUpdate{sw, std::move(changed), UpdateMode::Install}, ++phase});
    }
    if (phase == 0)
        throw std::invalid_argument("flow " + flow.id + ": old and new path install identical rules");

    UpdatePlan plan;
    bool any_gc = false;
    for (auto sw : unique_switches(old_path)) {
        std::map<RuleKey, Action> stale;
        auto new_it = new_rules.find(sw);
        for (const auto& [k, a] : old_rules.at(sw))
            if (new_it == new_rules.end() || new_it->second.count(k) == 0)
                stale.emplace(k, a);
        if (!stale.empty()) {
            items.push_back(PhasedUpdate{SingletonUpdate{sw, std::move(stale), UpdateMode::Remove}, phase + 1});
            any_gc = true;
        }
    }
    if (any_gc)
        plan.gc_phases = {phase + 1};
    plan.procedure = UpdateProcedure(std::move(items));
    return plan;
}

}  // namespace

double haversine_km(GeoPoint a, GeoPoint b)
{
    const double dlat = radians(b.lat - a.lat);
    const double dlon = radians(b.lon - a.lon);
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(radians(a.lat)) * std::cos(radians(b.lat)) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

void TopologyFile::validate() const
{
    std::set<std::string> ids;
    for (const auto& n : nodes) {
        if (n.id.empty())
            throw std::invalid_argument("topology node with empty id");
        if (!ids.insert(n.id).second)
            throw std::invalid_argument("duplicate node id " + n.id);
    }
    for (const auto& l : links) {
        if (!ids.count(l.a) || !ids.count(l.b))
            throw std::invalid_argument(link_label(l) + " references an unknown node");
        if (l.a == l.b)
            throw std::invalid_argument(link_label(l) + " is a self-loop");
        if (l.delay && *l.delay < Nanos{0})
            throw std::invalid_argument(link_label(l) + " has a negative delay");
    }
    std::set<std::string> labels;
    for (const auto& in : ingress) {
        if (!ids.count(in.node))
            throw std::invalid_argument("ingress " + in.label + " references unknown node " + in.node);
        if (!labels.insert(in.label).second)
            throw std::invalid_argument("duplicate ingress label " + in.label);
    }
}

TopologyFile parse_topology(std::string_view json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("topology is not valid JSON: ") + e.what());
    }
    TopologyFile file;
    try {
        for (const auto& n : doc.at("nodes")) {
            TopologyFile::Node node;
            node.id = n.at("id").get<std::string>();
            if (n.contains("role") && n.at("role") != "switch")
                throw std::invalid_argument("node " + node.id + ": unsupported role");
            const bool has_lat = n.contains("lat"), has_lon = n.contains("lon");
            if (has_lat != has_lon)
                throw std::invalid_argument("node " + node.id + ": lat and lon must be given together");
            if (has_lat)
                node.location = read_point(n, node.id);
            file.nodes.push_back(std::move(node));
        }
        if (doc.contains("links")) {
            for (const auto& l : doc.at("links")) {
                TopologyFile::LinkSpec link{l.at("a").get<std::string>(), l.at("b").get<std::string>(), {}};
                if (l.contains("delay_ns"))
                    link.delay = Nanos{std::llround(l.at("delay_ns").get<double>())};
                file.links.push_back(std::move(link));
            }
        }
        if (doc.contains("ingress")) {
            for (const auto& in : doc.at("ingress")) {
                if (in.is_string()) {
                    auto id = in.get<std::string>();
                    file.ingress.push_back({id, id});
                } else {
                    auto node = in.at("node").get<std::string>();
                    auto label = in.contains("label") ? in.at("label").get<std::string>() : node;
                    file.ingress.push_back({node, label});
                }
            }
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed topology: ") + e.what());
    }
    file.validate();
    return file;
}

TopologyFile read_topology(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open topology " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_topology(buf.str());
}

Network load_topology(const TopologyFile& file, const GeoDelayOptions& options)
{
    file.validate();
    if (options.us_per_km < 0.0 || options.cap_factor < 1.0)
        throw std::invalid_argument("bad geo delay options");
    Network net;
    std::map<std::string, const TopologyFile::Node*> by_id;
    for (const auto& n : file.nodes) {
        net.add_switch(n.id);
        by_id[n.id] = &n;
    }
    for (const auto& l : file.links) {
        Nanos delay{0};
        if (l.delay) {
            delay = *l.delay;
        } else {
            const auto& a = by_id.at(l.a)->location;
            const auto& b = by_id.at(l.b)->location;
            if (!a || !b)
                throw std::invalid_argument(link_label(l) + " has no delay_ns and an endpoint lacks coordinates");
            delay = Nanos{std::llround(haversine_km(*a, *b) * options.us_per_km * 1000.0)};
        }
        net.connect(*net.find(l.a), *net.find(l.b), make_delay(delay, options));
    }
    for (const auto& in : file.ingress)
        net.add_ingress(*net.find(in.node), in.label);
    return net;
}

Network leaf_spine(std::size_t n, const DelayModel& link_delay)
{
    if (n == 0 || n % 3 != 0)
        throw std::invalid_argument("leaf-spine size must be a positive multiple of 3, got " + std::to_string(n));
    validate(link_delay);
    const std::size_t spines = n / 3;
    const std::size_t leaves = n - spines;
    Network net;
    std::vector<SwitchId> leaf, spine;
    for (std::size_t i = 1; i <= leaves; ++i)
        leaf.push_back(net.add_switch("leaf" + std::to_string(i)));
    for (std::size_t i = 1; i <= spines; ++i)
        spine.push_back(net.add_switch("spine" + std::to_string(i)));
    for (auto l : leaf)
        for (auto s : spine)
            net.connect(l, s, link_delay);
    for (auto l : leaf)
        net.add_ingress(l, net.name(l) + "-in");
    return net;
}

Path resolve_path(const Network& net, const std::vector<std::string>& names)
{
    Path path;
    for (const auto& name : names) {
        auto sw = net.find(name);
        if (!sw)
            throw std::invalid_argument("unknown switch " + name + " in path");
        path.push_back(*sw);
    }
    return path;
}

namespace {

template <class F>
Nanos path_sum(const Network& net, const Path& path, F per_link)
{
    Nanos total{0};
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        auto hop = net.link_between(path[i], path[i + 1]);
        if (!hop)
            throw std::invalid_argument("no link between " + switch_label(net, path[i]) + " and " +
                                        switch_label(net, path[i + 1]));
        total += per_link(net.link(hop->second.link).delay);
    }
    return total;
}

}  // namespace

Nanos path_delay_bound(const Network& net, const Path& path)
{
    return path_sum(net, path, [](const DelayModel& d) { return upper_bound(d); });
}

Nanos path_delay_mean(const Network& net, const Path& path)
{
    return path_sum(net, path, [](const DelayModel& d) { return mean_of(d); });
}

std::vector<RouteRules> route_rules(const Network& net, const TestFlow& flow, const Path& path, VersionTag tag)
{
    const auto ports = path_ports(net, flow, path);
    std::vector<RouteRules> out;
    for (std::size_t i = 0; i < path.size(); ++i) {
        RouteRules hop{path[i], {}, {}};
        const bool last = i + 1 == path.size();
        Action onward = last ? Action{Deliver{}} : Action{Forward{ports.out[i]}};
        hop.tagged.emplace(RuleKey{flow.id, tag, ports.in[i]}, onward);
        if (i == 0) {
            Action stamp = last ? Action{Deliver{}} : Action{ForwardTagged{ports.out[i], tag}};
            hop.wildcard.emplace(RuleKey{flow.id, std::nullopt, ports.in[i]}, stamp);
        }
        out.push_back(std::move(hop));
    }
    return out;
}

void install_route(ForwardingState& state, const Network& net, const TestFlow& flow, const Path& path,
                   VersionTag tag)
{
    if (state.switch_count() != net.switch_count())
        throw std::invalid_argument("forwarding state does not match the network");
    for (const auto& hop : route_rules(net, flow, path, tag)) {
        for (const auto& [k, a] : hop.tagged)
            state.set_rule(hop.sw, k, a, Generation::Old);
        for (const auto& [k, a] : hop.wildcard)
            state.set_rule(hop.sw, k, a, Generation::Old);
    }
}

UpdateProcedure update_for_path_change(const Network& net, const TestFlow& flow, const Path& old_path,
                                       const Path& new_path, VersionTag old_tag, VersionTag new_tag)
{
    return two_phase(net, flow, old_path, new_path, old_tag, new_tag, true).procedure;
}

UpdatePlan path_change_plan(ProcedureKind kind, const Network& net, const TestFlow& flow, const Path& old_path,
                            const Path& new_path, VersionTag old_tag, VersionTag new_tag)
{
    switch (kind) {
    case ProcedureKind::Ordered:
        return ordered(net, flow, old_path, new_path, old_tag);
    case ProcedureKind::TwoPhase:
        return two_phase(net, flow, old_path, new_path, old_tag, new_tag, false);
    case ProcedureKind::TwoPhaseGc:
        return two_phase(net, flow, old_path, new_path, old_tag, new_tag, true);
    }
    throw std::invalid_argument("unknown procedure kind");
}

UpdatePlan merge_plans(const std::vector<UpdatePlan>& plans)
{
    if (plans.empty())
        throw std::invalid_argument("nothing to merge");

    int install_phases = 0;
    bool any_gc = false;
    for (const auto& p : plans) {
        p.validate();
        const int k = p.procedure.phase_count();
        if (p.gc_phases.size() > 1 || (!p.gc_phases.empty() && *p.gc_phases.begin() != k))
            throw std::invalid_argument("merge_plans: gc must be the last phase of each plan");
        any_gc = any_gc || !p.gc_phases.empty();
        install_phases = std::max(install_phases, k - static_cast<int>(p.gc_phases.size()));
    }
    const int gc_phase = install_phases + 1;

    // (phase, target, mode) -> slot, in order of first appearance.
    std::map<std::tuple<int, SwitchId, UpdateMode>, std::size_t> slot;
    std::vector<PhasedUpdate> merged;
    for (const auto& p : plans) {
        for (const auto& item : p.procedure.items()) {
            const int phase = p.gc_phases.count(item.phase) ? gc_phase : item.phase;
            auto key = std::make_tuple(phase, item.update.target, item.update.mode);
            auto [it, fresh] = slot.emplace(key, merged.size());
            if (fresh) {
                merged.push_back(PhasedUpdate{SingletonUpdate{item.update.target, {}, item.update.mode}, phase});
            }
            auto& entries = merged[it->second].update.entries;
            for (const auto& [k, a] : item.update.entries) {
                auto [e, added] = entries.emplace(k, a);
                if (!added && e->second != a && item.update.mode == UpdateMode::Install)
                    throw std::invalid_argument("merge_plans: conflicting rules for flow " + k.flow);
            }
        }
    }
    std::stable_sort(merged.begin(), merged.end(),
                     [](const PhasedUpdate& a, const PhasedUpdate& b) { return a.phase < b.phase; });
    UpdatePlan out;
    out.procedure = UpdateProcedure(std::move(merged));
    if (any_gc)
        out.gc_phases = {gc_phase};
    return out;
}

std::vector<FlowRoute> leaf_spine_routes(const Network& net, double rate_pps)
{
    std::vector<SwitchId> leaves, spines;
    for (std::size_t i = 1;; ++i) {
        auto sw = net.find("leaf" + std::to_string(i));
        if (!sw)
            break;
        leaves.push_back(*sw);
    }
    for (std::size_t i = 1;; ++i) {
        auto sw = net.find("spine" + std::to_string(i));
        if (!sw)
            break;
        spines.push_back(*sw);
    }
    if (leaves.size() < 2 || spines.empty())
        throw std::invalid_argument("not a leaf-spine network");

    std::vector<FlowRoute> routes;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        auto ingress = net.ingress(net.name(leaves[i]) + "-in");
        if (!ingress)
            throw std::invalid_argument("leaf " + net.name(leaves[i]) + " has no ingress port");
        Path path{leaves[i], spines[i % spines.size()], leaves[(i + 1) % leaves.size()]};
        routes.push_back(FlowRoute{TestFlow{"f" + std::to_string(i + 1), *ingress, rate_pps}, path, path});
    }
    return routes;
}

}  // namespace cnu
