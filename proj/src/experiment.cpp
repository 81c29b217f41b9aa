#include "cnu/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

namespace cnu {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& field, const std::string& what)
{
    throw ConfigError(field + ": " + what);
}

std::string field_of(const std::string& parent, const std::string& key)
{
    return parent.empty() ? key : parent + "." + key;
}

std::string index_of(const std::string& parent, std::size_t i)
{
    return parent + "[" + std::to_string(i) + "]";
}

void only_keys(const json& obj, const std::string& field, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object())
        fail(field, "expected an object");
    for (const auto& [k, v] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
            fail(field_of(field, k), "unknown key");
    }
}

std::string get_string(const json& v, const std::string& field)
{
    if (!v.is_string())
        fail(field, "expected a string");
    return v.get<std::string>();
}

double get_number(const json& v, const std::string& field)
{
    if (!v.is_number())
        fail(field, "expected a number");
    return v.get<double>();
}

std::int64_t get_integer(const json& v, const std::string& field)
{
    if (!v.is_number_integer())
        fail(field, "expected an integer");
    return v.get<std::int64_t>();
}

Nanos get_duration(const json& v, const std::string& field)
{
    if (v.is_number_integer())
        return Nanos{v.get<std::int64_t>()};
    if (!v.is_string())
        fail(field, "expected a duration such as \"4.865ms\"");
    try {
        return parse_duration(v.get<std::string>());
    } catch (const std::exception& e) {
        fail(field, e.what());
    }
}

std::vector<std::string> get_names(const json& v, const std::string& field)
{
    if (!v.is_array())
        fail(field, "expected a list of switch names");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(get_string(v[i], index_of(field, i)));
    return out;
}

fs::path resolve(const fs::path& base, const std::string& p)
{
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

DelayModel get_delay(const json& v, const std::string& field, const fs::path& base)
{
    if (v.is_string() || v.is_number_integer())
        return ConstantDelay{get_duration(v, field)};
    only_keys(v, field, {"model", "value", "max", "mean", "cap", "cap_factor", "trace"});
    if (!v.contains("model"))
        fail(field_of(field, "model"), "missing");
    const auto model = get_string(v.at("model"), field_of(field, "model"));
    auto need = [&](const char* key) -> const json& {
        if (!v.contains(key))
            fail(field_of(field, key), "missing");
        return v.at(key);
    };
    DelayModel out;
    if (model == "constant") {
        out = ConstantDelay{get_duration(need("value"), field_of(field, "value"))};
    } else if (model == "uniform") {
        out = UniformDelay{get_duration(need("max"), field_of(field, "max"))};
    } else if (model == "exponential") {
        const Nanos mean = get_duration(need("mean"), field_of(field, "mean"));
        Nanos cap{0};
        if (v.contains("cap")) {
            cap = get_duration(v.at("cap"), field_of(field, "cap"));
        } else {
            double factor = v.contains("cap_factor") ? get_number(v.at("cap_factor"), field_of(field, "cap_factor"))
                                                     : 10.0;
            cap = Nanos{std::llround(static_cast<double>(mean.count()) * factor)};
        }
        out = ExponentialDelay{mean, cap};
    } else if (model == "empirical") {
        const auto path = resolve(base, get_string(need("trace"), field_of(field, "trace")));
        try {
            out = EmpiricalDelay{read_trace(path).samples};
        } catch (const std::exception& e) {
            fail(field_of(field, "trace"), e.what());
        }
    } else {
        fail(field_of(field, "model"), "unknown delay model '" + model + "'");
    }
    try {
        validate(out);
    } catch (const std::exception& e) {
        fail(field, e.what());
    }
    return out;
}

GeoDelayOptions get_geo(const json& v, const std::string& field)
{
    GeoDelayOptions geo;
    if (v.contains("us_per_km"))
        geo.us_per_km = get_number(v.at("us_per_km"), field_of(field, "us_per_km"));
    if (v.contains("cap_factor"))
        geo.cap_factor = get_number(v.at("cap_factor"), field_of(field, "cap_factor"));
    if (v.contains("delay_mode")) {
        auto mode = get_string(v.at("delay_mode"), field_of(field, "delay_mode"));
        if (mode == "constant")
            geo.mode = LinkDelayMode::Constant;
        else if (mode == "exponential")
            geo.mode = LinkDelayMode::Exponential;
        else
            fail(field_of(field, "delay_mode"), "expected constant or exponential");
    }
    if (geo.us_per_km < 0.0)
        fail(field_of(field, "us_per_km"), "must be >= 0");
    if (geo.cap_factor < 1.0)
        fail(field_of(field, "cap_factor"), "must be >= 1");
    return geo;
}

TopologySpec get_topology(const json& v, const fs::path& base)
{
    const std::string field = "topology";
    TopologySpec spec;
    if (!v.is_object() || !v.contains("kind"))
        fail(field_of(field, "kind"), "missing");
    const auto kind = get_string(v.at("kind"), field_of(field, "kind"));
    if (kind == "leaf-spine") {
        only_keys(v, field, {"kind", "n", "link_delay"});
        spec.kind = TopologySpec::Kind::LeafSpine;
        if (v.contains("n")) {
            auto n = get_integer(v.at("n"), field_of(field, "n"));
            if (n <= 0 || n % 3 != 0)
                fail(field_of(field, "n"), "must be a positive multiple of 3");
            spec.n = static_cast<std::size_t>(n);
        }
        if (v.contains("link_delay"))
            spec.link_delay = get_delay(v.at("link_delay"), field_of(field, "link_delay"), base);
        return spec;
    }
    spec.kind = TopologySpec::Kind::File;
    try {
        if (kind == "file") {
            only_keys(v, field, {"kind", "path", "us_per_km", "delay_mode", "cap_factor"});
            if (!v.contains("path"))
                fail(field_of(field, "path"), "missing");
            spec.file = read_topology(resolve(base, get_string(v.at("path"), field_of(field, "path"))));
        } else if (kind == "inline") {
            only_keys(v, field, {"kind", "nodes", "links", "ingress", "us_per_km", "delay_mode", "cap_factor"});
            json doc = json::object();
            for (const char* key : {"nodes", "links", "ingress"})
                if (v.contains(key))
                    doc[key] = v.at(key);
            spec.file = parse_topology(doc.dump());
        } else {
            fail(field_of(field, "kind"), "expected leaf-spine, file or inline");
        }
    } catch (const std::invalid_argument& e) {
        fail(field, e.what());
    }
    spec.geo = get_geo(v, field);
    return spec;
}

ProcedureSpec get_procedure(const json& v)
{
    const std::string field = "procedure";
    ProcedureSpec spec;
    std::string kind;
    if (v.is_string()) {
        kind = v.get<std::string>();
    } else {
        only_keys(v, field, {"kind", "phases", "sizes", "gc"});
        if (!v.contains("kind"))
            fail(field_of(field, "kind"), "missing");
        kind = get_string(v.at("kind"), field_of(field, "kind"));
    }
    if (kind == "ordered")
        spec.kind = ProcedureSpec::Kind::Ordered;
    else if (kind == "two-phase")
        spec.kind = ProcedureSpec::Kind::TwoPhase;
    else if (kind == "two-phase+gc")
        spec.kind = ProcedureSpec::Kind::TwoPhaseGc;
    else if (kind == "k-phase")
        spec.kind = ProcedureSpec::Kind::KPhase;
    else
        fail(field_of(field, "kind"), "expected ordered, two-phase, two-phase+gc or k-phase");

    if (spec.kind != ProcedureSpec::Kind::KPhase) {
        if (v.is_object() && (v.contains("phases") || v.contains("sizes") || v.contains("gc")))
            fail(field, "phases, sizes and gc apply to k-phase only");
        return spec;
    }
    const bool by_name = v.contains("phases"), by_size = v.contains("sizes");
    if (by_name == by_size)
        fail(field, "k-phase needs exactly one of phases or sizes");
    if (by_name) {
        const auto& phases = v.at("phases");
        if (!phases.is_array() || phases.empty())
            fail(field_of(field, "phases"), "expected a non-empty list");
        for (std::size_t j = 0; j < phases.size(); ++j) {
            auto names = get_names(phases[j], index_of(field_of(field, "phases"), j));
            if (names.empty())
                fail(index_of(field_of(field, "phases"), j), "phase is empty");
            spec.phases.push_back(std::move(names));
        }
    } else {
        const auto& sizes = v.at("sizes");
        if (!sizes.is_array() || sizes.empty())
            fail(field_of(field, "sizes"), "expected a non-empty list");
        for (std::size_t j = 0; j < sizes.size(); ++j) {
            auto n = get_integer(sizes[j], index_of(field_of(field, "sizes"), j));
            if (n <= 0)
                fail(index_of(field_of(field, "sizes"), j), "must be >= 1");
            spec.sizes.push_back(static_cast<std::size_t>(n));
        }
    }
    const int k = static_cast<int>(by_name ? spec.phases.size() : spec.sizes.size());
    if (v.contains("gc")) {
        const auto& gc = v.at("gc");
        if (!gc.is_array())
            fail(field_of(field, "gc"), "expected a list of phase numbers");
        for (std::size_t i = 0; i < gc.size(); ++i) {
            auto g = get_integer(gc[i], index_of(field_of(field, "gc"), i));
            if (g < 2 || g > k)
                fail(index_of(field_of(field, "gc"), i), "gc phase must lie in 2.." + std::to_string(k));
            spec.gc_phases.insert(static_cast<int>(g));
        }
    }
    return spec;
}

std::vector<FlowSpec> get_flows(const json& v)
{
    const std::string field = "flows";
    if (!v.is_array())
        fail(field, "expected a list of flows or \"auto\"");
    std::vector<FlowSpec> flows;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto f = index_of(field, i);
        const auto& e = v[i];
        only_keys(e, f, {"id", "ingress", "old_path", "new_path", "rate_pps", "old_tag", "new_tag"});
        for (const char* key : {"id", "ingress", "old_path"})
            if (!e.contains(key))
                fail(field_of(f, key), "missing");
        FlowSpec spec;
        spec.id = get_string(e.at("id"), field_of(f, "id"));
        spec.ingress = get_string(e.at("ingress"), field_of(f, "ingress"));
        spec.old_path = get_names(e.at("old_path"), field_of(f, "old_path"));
        spec.new_path = e.contains("new_path") ? get_names(e.at("new_path"), field_of(f, "new_path")) : spec.old_path;
        if (e.contains("rate_pps"))
            spec.rate_pps = get_number(e.at("rate_pps"), field_of(f, "rate_pps"));
        if (!(spec.rate_pps > 0.0))
            fail(field_of(f, "rate_pps"), "must be > 0");
        if (e.contains("old_tag"))
            spec.old_tag = VersionTag{static_cast<std::uint32_t>(get_integer(e.at("old_tag"), field_of(f, "old_tag")))};
        if (e.contains("new_tag"))
            spec.new_tag = VersionTag{static_cast<std::uint32_t>(get_integer(e.at("new_tag"), field_of(f, "new_tag")))};
        for (const auto& other : flows)
            if (other.id == spec.id)
                fail(field_of(f, "id"), "duplicate flow id " + spec.id);
        flows.push_back(std::move(spec));
    }
    return flows;
}

std::vector<std::uint64_t> get_seeds(const json& v)
{
    std::vector<std::uint64_t> seeds;
    if (v.is_string()) {
        try {
            seeds = parse_seed_list(v.get<std::string>());
        } catch (const std::exception& e) {
            fail("seeds", e.what());
        }
    } else if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto s = get_integer(v[i], index_of("seeds", i));
            if (s < 0)
                fail(index_of("seeds", i), "must be >= 0");
            seeds.push_back(static_cast<std::uint64_t>(s));
        }
    } else if (v.is_object()) {
        only_keys(v, "seeds", {"first", "count"});
        auto first = v.contains("first") ? get_integer(v.at("first"), "seeds.first") : 1;
        auto count = v.contains("count") ? get_integer(v.at("count"), "seeds.count") : 1;
        if (first < 0 || count <= 0)
            fail("seeds", "first must be >= 0 and count >= 1");
        for (std::int64_t i = 0; i < count; ++i)
            seeds.push_back(static_cast<std::uint64_t>(first + i));
    } else {
        fail("seeds", "expected a list, a range string or {first, count}");
    }
    if (seeds.empty())
        fail("seeds", "at least one seed required");
    return seeds;
}

std::int64_t grid_value(SweepAxis axis, const json& v, const std::string& field)
{
    if (axis == SweepAxis::N) {
        std::int64_t n = 0;
        if (v.is_string()) {
            try {
                n = std::stoll(v.get<std::string>());
            } catch (const std::exception&) {
                fail(field, "expected a switch count");
            }
        } else {
            n = get_integer(v, field);
        }
        if (n <= 0 || n % 3 != 0)
            fail(field, "N must be a positive multiple of 3");
        return n;
    }
    Nanos d = get_duration(v, field);
    if (d < Nanos{0})
        fail(field, "must be >= 0");
    return d.count();
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds)
{
    std::string out;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (i)
            out += ',';
        out += std::to_string(seeds[i]);
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

std::string axis_cell(const std::optional<std::int64_t>& v)
{
    return v ? std::to_string(*v) : std::string{};
}

std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::int64_t rounded(double v)
{
    return static_cast<std::int64_t>(std::llround(v));
}

void write_file(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("--config: cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

UpdatePlan kphase_plan(const ProcedureSpec& spec, const Network& net)
{
    std::vector<PhasedUpdate> items;
    auto mode_for = [&](int phase) { return spec.gc_phases.count(phase) ? UpdateMode::Remove : UpdateMode::Install; };
    if (!spec.phases.empty()) {
        for (std::size_t j = 0; j < spec.phases.size(); ++j) {
            const int phase = static_cast<int>(j) + 1;
            for (std::size_t i = 0; i < spec.phases[j].size(); ++i) {
                auto sw = net.find(spec.phases[j][i]);
                if (!sw)
                    fail(index_of(index_of("procedure.phases", j), i), "unknown switch " + spec.phases[j][i]);
                items.push_back(PhasedUpdate{SingletonUpdate{*sw, {}, mode_for(phase)}, phase});
            }
        }
    } else {
        std::uint32_t next = 0;
        const auto n = static_cast<std::uint32_t>(net.switch_count());
        for (std::size_t j = 0; j < spec.sizes.size(); ++j) {
            const int phase = static_cast<int>(j) + 1;
            for (std::size_t i = 0; i < spec.sizes[j]; ++i)
                items.push_back(PhasedUpdate{SingletonUpdate{SwitchId{next++ % n}, {}, mode_for(phase)}, phase});
        }
    }
    UpdatePlan plan{UpdateProcedure(std::move(items)), spec.gc_phases};
    plan.validate();
    return plan;
}

ProcedureKind kind_of(ProcedureSpec::Kind k)
{
    switch (k) {
    case ProcedureSpec::Kind::Ordered:
        return ProcedureKind::Ordered;
    case ProcedureSpec::Kind::TwoPhase:
        return ProcedureKind::TwoPhase;
    default:
        return ProcedureKind::TwoPhaseGc;
    }
}

ExperimentPoint materialize_unchecked(const ExperimentConfig& cfg, std::optional<std::int64_t> axis_value)
{
    ExperimentPoint pt;
    pt.axis_value = axis_value;
    SystemParameters params = cfg.params;
    bool auto_dn = cfg.auto_dn;
    std::size_t n = cfg.topology.n;
    std::optional<Nanos> knob_d = cfg.knob_d;
    if (axis_value) {
        const Nanos v{*axis_value};
        switch (cfg.axis) {
        case SweepAxis::N:
            n = static_cast<std::size_t>(*axis_value);
            break;
        case SweepAxis::Delta:
            params.delta_sched = v;
            break;
        case SweepAxis::Dc:
            params.d_c = v;
            break;
        case SweepAxis::Dn:
            params.d_n = v;
            auto_dn = false;
            break;
        case SweepAxis::D:
            knob_d = v;
            break;
        case SweepAxis::None:
            break;
        }
    }

    // Topology and flows.
    Network net = cfg.topology.kind == TopologySpec::Kind::LeafSpine ? leaf_spine(n, cfg.topology.link_delay)
                                                                      : load_topology(cfg.topology.file,
                                                                                      cfg.topology.geo);
    std::vector<FlowRoute> routes;
    std::vector<std::pair<VersionTag, VersionTag>> tags;
    if (cfg.auto_flows) {
        routes = leaf_spine_routes(net, cfg.auto_rate_pps);
        tags.assign(routes.size(), {VersionTag{1}, VersionTag{2}});
    } else {
        for (std::size_t i = 0; i < cfg.flows.size(); ++i) {
            const auto& f = cfg.flows[i];
            const auto field = index_of("flows", i);
            auto ingress = net.ingress(f.ingress);
            if (!ingress)
                fail(field_of(field, "ingress"), "no ingress port labelled " + f.ingress);
            Path old_path, new_path;
            try {
                old_path = resolve_path(net, f.old_path);
                new_path = resolve_path(net, f.new_path);
            } catch (const std::invalid_argument& e) {
                fail(field, e.what());
            }
            routes.push_back(FlowRoute{TestFlow{f.id, *ingress, f.rate_pps}, old_path, new_path});
            tags.emplace_back(f.old_tag, f.new_tag);
        }
    }

    // Procedure and initial configuration.
    UpdatePlan plan;
    ForwardingState initial(net.switch_count());
    for (std::size_t i = 0; i < routes.size(); ++i) {
        try {
            install_route(initial, net, routes[i].flow, routes[i].old_path, tags[i].first);
        } catch (const std::invalid_argument& e) {
            fail(index_of("flows", i), e.what());
        }
    }
    if (cfg.procedure.kind == ProcedureSpec::Kind::KPhase) {
        plan = kphase_plan(cfg.procedure, net);
    } else {
        if (routes.empty())
            fail("flows", "the procedure needs at least one flow");
        std::vector<UpdatePlan> plans;
        for (std::size_t i = 0; i < routes.size(); ++i) {
            try {
                plans.push_back(path_change_plan(kind_of(cfg.procedure.kind), net, routes[i].flow,
                                                 routes[i].old_path, routes[i].new_path, tags[i].first,
                                                 tags[i].second));
            } catch (const std::invalid_argument& e) {
                fail(index_of("flows", i), e.what());
            }
        }
        plan = merge_plans(plans);
    }

    if (auto_dn) {
        if (routes.empty())
            fail("params.d_n", "\"auto\" needs at least one flow");
        params.d_n = Nanos{0};
        for (const auto& r : routes)
            params.d_n = std::max({params.d_n, path_delay_bound(net, r.old_path), path_delay_bound(net, r.new_path)});
    }
    if (cfg.auto_tsu)
        params.t_su = default_setup_time(params, plan.procedure.size());
    try {
        params.validate();
    } catch (const std::invalid_argument& e) {
        fail("params", e.what());
    }

    ControlChannel channel = ControlChannel::defaults(params);
    if (cfg.controller_delay)
        channel.controller_delay = *cfg.controller_delay;
    if (cfg.message_gap)
        channel.message_gap = *cfg.message_gap;
    if (cfg.sync_err)
        channel.clock.sync_err = *cfg.sync_err;
    if (cfg.exec_err)
        channel.clock.exec_err = *cfg.exec_err;

    pt.shape = shape_of(plan);
    pt.mode = cfg.mode;
    const Nanos t1 = cfg.t1.value_or(params.t_su);
    std::optional<Nanos> drain;
    switch (cfg.mode) {
    case ScheduleMode::UntimedGreedy:
        pt.worst_case = untimed_worst_duration(pt.shape, params);
        break;
    case ScheduleMode::TimedWorstCase:
        pt.schedule = worst_case_schedule(pt.shape, t1, params);
        pt.worst_case = timed_worst_duration(pt.shape, params);
        break;
    case ScheduleMode::TimedKnob:
        if (!knob_d)
            fail("schedule.d", "timed-knob needs d (or a sweep over d)");
        drain = *knob_d;
        pt.schedule = knob_schedule(pt.shape, t1, *knob_d, params);
        pt.worst_case = timed_worst_duration(pt.shape, params, drain);
        break;
    case ScheduleMode::Simultaneous:
        pt.schedule = simultaneous_schedule(pt.shape, t1);
        pt.worst_case = params.delta_sched;
        break;
    }
    pt.comparison.untimed = untimed_worst_duration(pt.shape, params);
    pt.comparison.timed = timed_worst_duration(pt.shape, params, drain);
    pt.comparison.timed_wins = pt.comparison.timed < pt.comparison.untimed;

    std::vector<TestFlow> flows;
    for (const auto& r : routes)
        flows.push_back(r.flow);
    pt.scenario = Scenario{std::move(net), std::move(initial), std::move(plan), params, channel, std::move(flows)};
    pt.traffic_window = cfg.traffic_window;
    return pt;
}

json config_doc(std::string_view text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
}

struct RunSummary {
    Nanos duration{0};
    std::vector<Nanos> inconsistency;  // per flow
    std::size_t faults = 0;
};

RunSummary summarize(const ExperimentPoint& point, std::uint64_t seed, bool pinned)
{
    auto run = simulate(point, seed, pinned);
    RunSummary s{run.update_duration, {}, run.faults.size()};
    for (const auto& flow : point.scenario.flows)
        s.inconsistency.push_back(measure_inconsistency(run, flow).inconsistency);
    return s;
}

}  // namespace

const char* to_string(ScheduleMode mode)
{
    switch (mode) {
    case ScheduleMode::UntimedGreedy:
        return "untimed-greedy";
    case ScheduleMode::TimedWorstCase:
        return "timed-worst-case";
    case ScheduleMode::TimedKnob:
        return "timed-knob";
    case ScheduleMode::Simultaneous:
        return "simultaneous";
    }
    return "?";
}

const char* to_string(SweepAxis axis)
{
    switch (axis) {
    case SweepAxis::None:
        return "none";
    case SweepAxis::N:
        return "N";
    case SweepAxis::Delta:
        return "delta";
    case SweepAxis::Dc:
        return "dc";
    case SweepAxis::Dn:
        return "dn";
    case SweepAxis::D:
        return "d";
    }
    return "?";
}

SweepAxis parse_axis(std::string_view name)
{
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "n")
        return SweepAxis::N;
    if (s == "delta")
        return SweepAxis::Delta;
    if (s == "dc")
        return SweepAxis::Dc;
    if (s == "dn")
        return SweepAxis::Dn;
    if (s == "d")
        return SweepAxis::D;
    throw ConfigError("sweep.axis: expected one of N, delta, dc, dn, d (got '" + std::string(name) + "')");
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text)
{
    std::vector<std::uint64_t> seeds;
    std::string item;
    std::stringstream in{std::string(text)};
    while (std::getline(in, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
                   item.end());
        if (item.empty())
            continue;
        auto dash = item.find('-');
        try {
            std::size_t used = 0;
            if (dash == std::string::npos) {
                seeds.push_back(std::stoull(item, &used));
                if (used != item.size())
                    throw std::invalid_argument(item);
            } else {
                auto a = std::stoull(item.substr(0, dash));
                auto b = std::stoull(item.substr(dash + 1), &used);
                if (used != item.size() - dash - 1 || b < a)
                    throw std::invalid_argument(item);
                for (auto s = a; s <= b; ++s)
                    seeds.push_back(s);
            }
        } catch (const std::exception&) {
            throw ConfigError("seeds: cannot parse '" + item + "'");
        }
    }
    if (seeds.empty())
        throw ConfigError("seeds: empty seed list");
    return seeds;
}

ExperimentConfig parse_config(std::string_view json_text, const fs::path& base_dir)
{
    json doc = config_doc(json_text);
    if (!doc.is_object())
        throw ConfigError("config: expected a JSON object");
    only_keys(doc, "", {"name", "description", "topology", "procedure", "params", "channel", "schedule", "flows",
                        "flow_rate_pps", "seeds", "sweep", "pinned", "traffic_window"});

    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    if (!doc.contains("topology"))
        fail("topology", "missing");
    cfg.topology = get_topology(doc.at("topology"), base_dir);
    if (doc.contains("procedure"))
        cfg.procedure = get_procedure(doc.at("procedure"));

    // params
    if (!doc.contains("params"))
        fail("params", "missing");
    const auto& p = doc.at("params");
    only_keys(p, "params", {"d_c", "d_n", "delta_msg", "delta", "t_su"});
    for (const char* key : {"d_c", "d_n", "delta_msg", "delta"})
        if (!p.contains(key))
            fail(field_of("params", key), "missing");
    cfg.params.d_c = get_duration(p.at("d_c"), "params.d_c");
    cfg.params.delta_msg = get_duration(p.at("delta_msg"), "params.delta_msg");
    cfg.params.delta_sched = get_duration(p.at("delta"), "params.delta");
    if (p.at("d_n") == "auto")
        cfg.auto_dn = true;
    else
        cfg.params.d_n = get_duration(p.at("d_n"), "params.d_n");
    if (p.contains("t_su") && p.at("t_su") != "auto") {
        cfg.auto_tsu = false;
        cfg.params.t_su = get_duration(p.at("t_su"), "params.t_su");
    }
    for (auto [name, value] : {std::pair{"params.d_c", cfg.params.d_c}, {"params.d_n", cfg.params.d_n},
                               {"params.delta_msg", cfg.params.delta_msg}, {"params.delta", cfg.params.delta_sched},
                               {"params.t_su", cfg.params.t_su}})
        if (value < Nanos{0})
            fail(name, "must be >= 0");

    if (doc.contains("channel")) {
        const auto& c = doc.at("channel");
        only_keys(c, "channel", {"controller_delay", "message_gap", "sync_err", "exec_err"});
        if (c.contains("controller_delay"))
            cfg.controller_delay = get_delay(c.at("controller_delay"), "channel.controller_delay", base_dir);
        if (c.contains("message_gap"))
            cfg.message_gap = get_delay(c.at("message_gap"), "channel.message_gap", base_dir);
        if (c.contains("sync_err"))
            cfg.sync_err = get_duration(c.at("sync_err"), "channel.sync_err");
        if (c.contains("exec_err"))
            cfg.exec_err = get_duration(c.at("exec_err"), "channel.exec_err");
        if ((cfg.sync_err && *cfg.sync_err < Nanos{0}) || (cfg.exec_err && *cfg.exec_err < Nanos{0}))
            fail("channel", "clock errors must be >= 0");
    }

    if (doc.contains("schedule")) {
        const auto& s = doc.at("schedule");
        std::string mode;
        if (s.is_string()) {
            mode = s.get<std::string>();
        } else {
            only_keys(s, "schedule", {"mode", "d", "t1"});
            if (!s.contains("mode"))
                fail("schedule.mode", "missing");
            mode = get_string(s.at("mode"), "schedule.mode");
            if (s.contains("d"))
                cfg.knob_d = get_duration(s.at("d"), "schedule.d");
            if (s.contains("t1"))
                cfg.t1 = get_duration(s.at("t1"), "schedule.t1");
        }
        if (mode == "untimed-greedy")
            cfg.mode = ScheduleMode::UntimedGreedy;
        else if (mode == "timed-worst-case")
            cfg.mode = ScheduleMode::TimedWorstCase;
        else if (mode == "timed-knob")
            cfg.mode = ScheduleMode::TimedKnob;
        else if (mode == "simultaneous")
            cfg.mode = ScheduleMode::Simultaneous;
        else
            fail("schedule.mode", "expected untimed-greedy, timed-worst-case, timed-knob or simultaneous");
        if (cfg.knob_d && *cfg.knob_d < Nanos{0})
            fail("schedule.d", "must be >= 0");
    }

    if (doc.contains("flow_rate_pps")) {
        cfg.auto_rate_pps = get_number(doc.at("flow_rate_pps"), "flow_rate_pps");
        if (!(cfg.auto_rate_pps > 0.0))
            fail("flow_rate_pps", "must be > 0");
    }
    const bool leaf = cfg.topology.kind == TopologySpec::Kind::LeafSpine;
    if (!doc.contains("flows") || doc.at("flows") == "auto") {
        cfg.auto_flows = leaf;
        if (doc.contains("flows") && !leaf)
            fail("flows", "\"auto\" is only available on leaf-spine topologies");
    } else {
        cfg.flows = get_flows(doc.at("flows"));
    }

    if (doc.contains("seeds"))
        cfg.seeds = get_seeds(doc.at("seeds"));
    if (doc.contains("pinned")) {
        if (!doc.at("pinned").is_boolean())
            fail("pinned", "expected true or false");
        cfg.pinned = doc.at("pinned").get<bool>();
    }
    if (doc.contains("traffic_window")) {
        const auto& w = doc.at("traffic_window");
        if (!w.is_array() || w.size() != 2)
            fail("traffic_window", "expected [start, end]");
        auto t0 = get_duration(w[0], "traffic_window[0]");
        auto t1 = get_duration(w[1], "traffic_window[1]");
        if (t0 < Nanos{0} || t1 < t0)
            fail("traffic_window", "need 0 <= start <= end");
        cfg.traffic_window = std::make_pair(t0, t1);
    }

    if (doc.contains("sweep")) {
        const auto& s = doc.at("sweep");
        only_keys(s, "sweep", {"axis", "grid"});
        if (!s.contains("axis") || !s.contains("grid"))
            fail("sweep", "needs exactly one axis and a grid");
        cfg.axis = parse_axis(get_string(s.at("axis"), "sweep.axis"));
        const auto& g = s.at("grid");
        if (!g.is_array() || g.empty())
            fail("sweep.grid", "expected a non-empty list");
        for (std::size_t i = 0; i < g.size(); ++i)
            cfg.grid.push_back(grid_value(cfg.axis, g[i], index_of("sweep.grid", i)));
        if (cfg.axis == SweepAxis::N && !leaf)
            fail("sweep.axis", "N sweeps need a leaf-spine topology");
        if (cfg.axis == SweepAxis::N && !cfg.auto_flows && cfg.procedure.kind != ProcedureSpec::Kind::KPhase)
            fail("sweep.axis", "N sweeps regenerate flows; remove the explicit flow list");
        if (cfg.axis == SweepAxis::D && cfg.mode != ScheduleMode::TimedKnob)
            fail("sweep.axis", "d sweeps need schedule mode timed-knob");
    }
    if (cfg.mode == ScheduleMode::TimedKnob && !cfg.knob_d && cfg.axis != SweepAxis::D)
        fail("schedule.d", "timed-knob needs d (or a sweep over d)");

    json canon = doc;
    canon.erase("seeds");
    cfg.canonical = canon.dump();
    return cfg;
}

ExperimentConfig load_config(const fs::path& path)
{
    return parse_config(read_file(path), path.parent_path());
}

void set_sweep(ExperimentConfig& config, SweepAxis axis, const std::vector<std::string>& grid)
{
    json doc = config_doc(config.canonical);
    json values = json::array();
    for (const auto& g : grid)
        values.push_back(g);
    doc["sweep"] = json{{"axis", to_string(axis)}, {"grid", values}};
    auto seeds = config.seeds;
    config = parse_config(doc.dump(), config.base_dir);
    config.seeds = std::move(seeds);
}

std::string config_hash(const ExperimentConfig& config)
{
    return hex64(fnv1a64(config.canonical));
}

std::string metadata_line(const ExperimentConfig& config)
{
    return "# config_hash=" + config_hash(config) + " seeds=" + join_seeds(config.seeds);
}

ExperimentPoint materialize(const ExperimentConfig& config, std::optional<std::int64_t> axis_value)
{
    try {
        return materialize_unchecked(config, axis_value);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

std::vector<ExperimentPoint> materialize_all(const ExperimentConfig& config)
{
    std::vector<ExperimentPoint> points;
    if (config.axis == SweepAxis::None) {
        points.push_back(materialize(config));
        return points;
    }
    for (auto v : config.grid)
        points.push_back(materialize(config, v));
    return points;
}

RunResult simulate(const ExperimentPoint& point, std::uint64_t seed, bool pinned)
{
    RunOptions options{seed, pinned, point.traffic_window};
    auto run = point.schedule ? run_timed(point.scenario, *point.schedule, options)
                              : run_untimed(point.scenario, options);
    run.metadata["mode"] = to_string(point.mode);
    run.metadata["worst_case_ns"] = to_string(point.worst_case);
    return run;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, unsigned jobs)
{
    const auto points = materialize_all(config);
    const std::size_t n_seeds = config.seeds.size();
    const std::size_t n_tasks = points.size() * n_seeds;
    std::vector<RunSummary> results(n_tasks);
    std::vector<std::exception_ptr> errors(n_tasks);

    if (jobs == 0)
        jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n_tasks));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < n_tasks; t = next++) {
            try {
                results[t] = summarize(points[t / n_seeds], config.seeds[t % n_seeds], config.pinned);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < jobs; ++i)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    std::vector<SweepRow> rows;
    for (std::size_t p = 0; p < points.size(); ++p) {
        const auto& pt = points[p];
        SweepRow row;
        row.axis_value = pt.axis_value;
        row.runs = n_seeds;
        row.worst_case = pt.worst_case;
        row.min_duration = Nanos::max();
        row.max_duration = Nanos::min();
        const std::size_t n_flows = pt.scenario.flows.size();
        for (std::size_t f = 0; f < n_flows; ++f)
            row.flows.push_back(FlowStats{pt.scenario.flows[f].id, 0.0, Nanos::max(), Nanos::min()});
        double sum_duration = 0.0, sum_worst_flow = 0.0;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            const auto& r = results[p * n_seeds + s];
            sum_duration += static_cast<double>(r.duration.count());
            row.min_duration = std::min(row.min_duration, r.duration);
            row.max_duration = std::max(row.max_duration, r.duration);
            row.faults += r.faults;
            Nanos worst_flow{0};
            for (std::size_t f = 0; f < n_flows; ++f) {
                auto& fs = row.flows[f];
                fs.mean_ns += static_cast<double>(r.inconsistency[f].count());
                fs.min = std::min(fs.min, r.inconsistency[f]);
                fs.max = std::max(fs.max, r.inconsistency[f]);
                worst_flow = std::max(worst_flow, r.inconsistency[f]);
            }
            sum_worst_flow += static_cast<double>(worst_flow.count());
            row.max_inconsistency = std::max(row.max_inconsistency, worst_flow);
        }
        row.mean_duration_ns = sum_duration / static_cast<double>(n_seeds);
        row.mean_inconsistency_ns = sum_worst_flow / static_cast<double>(n_seeds);
        for (auto& fs : row.flows)
            fs.mean_ns /= static_cast<double>(n_seeds);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------

std::string plan_csv(const ExperimentConfig& config, const std::vector<ExperimentPoint>& points)
{
    std::string out = metadata_line(config) + "\naxis_value,untimed_worst_ns,timed_worst_ns,timed_wins\n";
    for (const auto& pt : points)
        out += axis_cell(pt.axis_value) + "," + to_string(pt.comparison.untimed) + "," +
               to_string(pt.comparison.timed) + "," + (pt.comparison.timed_wins ? "true" : "false") + "\n";
    return out;
}

namespace {

std::string plan_schedule_csv(const ExperimentConfig& config, const std::vector<ExperimentPoint>& points)
{
    std::string out = metadata_line(config) + "\naxis_value,phase,size,gc,time_ns\n";
    for (const auto& pt : points) {
        if (!pt.schedule)
            continue;
        for (const auto& [phase, t] : pt.schedule->phase_times)
            out += axis_cell(pt.axis_value) + "," + std::to_string(phase) + "," +
                   std::to_string(pt.shape.sizes[phase - 1]) + "," + (pt.shape.is_gc(phase) ? "true" : "false") +
                   "," + to_string(t) + "\n";
    }
    return out;
}

}  // namespace

std::string sweep_csv(const ExperimentConfig& config, const std::vector<SweepRow>& rows)
{
    std::string out = metadata_line(config) +
                      "\naxis_value,runs,sim_mean_ns,sim_min_ns,sim_max_ns,worst_case_ns,inconsistency_mean_ns,"
                      "inconsistency_max_ns,faults\n";
    for (const auto& r : rows)
        out += axis_cell(r.axis_value) + "," + std::to_string(r.runs) + "," +
               std::to_string(rounded(r.mean_duration_ns)) + "," + to_string(r.min_duration) + "," +
               to_string(r.max_duration) + "," + to_string(r.worst_case) + "," +
               std::to_string(rounded(r.mean_inconsistency_ns)) + "," + to_string(r.max_inconsistency) + "," +
               std::to_string(r.faults) + "\n";
    return out;
}

std::string sweep_flows_csv(const ExperimentConfig& config, const std::vector<SweepRow>& rows)
{
    std::string out = metadata_line(config) +
                      "\naxis_value,flow_id,inconsistency_mean_ns,inconsistency_min_ns,inconsistency_max_ns\n";
    for (const auto& r : rows)
        for (const auto& f : r.flows)
            out += axis_cell(r.axis_value) + "," + f.flow + "," + std::to_string(rounded(f.mean_ns)) + "," +
                   to_string(f.min) + "," + to_string(f.max) + "\n";
    return out;
}

std::string run_json(const RunResult& run, const std::vector<InconsistencyReport>& reports)
{
    ojson doc;
    doc["seed"] = run.seed;
    doc["timed"] = run.timed;
    if (run.schedule) {
        ojson times = ojson::object();
        for (const auto& [phase, t] : run.schedule->phase_times)
            times[std::to_string(phase)] = t.count();
        doc["schedule"] = {{"phase_times_ns", times}};
        if (run.schedule->knob_d)
            doc["schedule"]["knob_d_ns"] = run.schedule->knob_d->count();
    }
    doc["update_duration_ns"] = run.update_duration.count();
    doc["first_execution_ns"] = run.first_execution.count();
    doc["last_execution_ns"] = run.last_execution.count();
    ojson execs = ojson::array();
    for (const auto& e : run.executions) {
        ojson x{{"item", e.item},
                {"switch", e.target.value},
                {"phase", e.phase},
                {"sent_ns", e.sent.count()},
                {"received_ns", e.received.count()},
                {"executed_ns", e.executed.count()}};
        if (e.scheduled)
            x["scheduled_ns"] = e.scheduled->count();
        execs.push_back(std::move(x));
    }
    doc["executions"] = std::move(execs);
    ojson faults = ojson::array();
    for (const auto& f : run.faults) {
        ojson x{{"kind", to_string(f.kind)}, {"time_ns", f.time.count()}, {"phase", f.phase}, {"detail", f.detail}};
        if (f.sw)
            x["switch"] = f.sw->value;
        faults.push_back(std::move(x));
    }
    doc["faults"] = std::move(faults);
    ojson flows = ojson::array();
    for (const auto& r : reports)
        flows.push_back({{"flow", r.flow},
                         {"packets", r.n_packets},
                         {"n_inconsistent", r.n_inconsistent},
                         {"rate_pps", r.rate_pps},
                         {"inconsistency_ns", r.inconsistency.count()}});
    doc["flows"] = std::move(flows);
    ojson meta = ojson::object();
    for (const auto& [k, v] : run.metadata)
        meta[k] = v;
    doc["metadata"] = std::move(meta);
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

namespace {

struct CliOptions {
    std::string config;
    std::string out = ".";
    std::string seeds;
    std::string axis;
    std::vector<std::string> grid;
    unsigned jobs = 0;
    bool pinned = false;
    std::vector<std::string> traces;
    std::vector<double> percentiles{0.999, 0.9999, 0.99999};
};

ExperimentConfig config_from(const CliOptions& o)
{
    auto cfg = load_config(o.config);
    if (!o.axis.empty() || !o.grid.empty()) {
        if (o.axis.empty() || o.grid.empty())
            throw ConfigError("--axis and --grid must be given together");
        set_sweep(cfg, parse_axis(o.axis), o.grid);
    }
    if (!o.seeds.empty())
        cfg.seeds = parse_seed_list(o.seeds);
    if (o.pinned)
        cfg.pinned = true;
    return cfg;
}

void cmd_plan(const CliOptions& o, std::ostream& out)
{
    auto cfg = config_from(o);
    auto points = materialize_all(cfg);
    const fs::path dir(o.out);
    write_file(dir / "plan.csv", plan_csv(cfg, points));
    write_file(dir / "plan_schedule.csv", plan_schedule_csv(cfg, points));
    out << (dir / "plan.csv").string() << "\n";
}

void write_run(const fs::path& dir, const ExperimentConfig& cfg, const ExperimentPoint& pt, const RunResult& run)
{
    std::vector<InconsistencyReport> reports;
    std::string csv = metadata_line(cfg) + "\n" + csv_header_inconsistency() + "\n";
    for (const auto& flow : pt.scenario.flows) {
        reports.push_back(measure_inconsistency(run, flow));
        csv += to_csv_row(reports.back()) + "\n";
    }
    std::string faults = metadata_line(cfg) + "\nkind,time_ns,switch,phase,detail\n";
    for (const auto& f : run.faults)
        faults += std::string(to_string(f.kind)) + "," + to_string(f.time) + "," +
                  (f.sw ? pt.scenario.network.name(*f.sw) : std::string{}) + "," + std::to_string(f.phase) + "," +
                  f.detail + "\n";
    std::string log;
    for (const auto& e : run.log)
        log += format_log_line(e) + "\n";
    write_file(dir / "run.json", run_json(run, reports));
    write_file(dir / "inconsistency.csv", csv);
    write_file(dir / "faults.csv", faults);
    write_file(dir / "messages.log", log);
}

void cmd_simulate(const CliOptions& o, std::ostream& out)
{
    auto cfg = config_from(o);
    const auto points = materialize_all(cfg);
    std::size_t faults = 0;
    for (const auto& pt : points) {
        // One subdirectory per sweep point and per seed, when there are several.
        fs::path dir(o.out);
        if (pt.axis_value)
            dir /= std::string(to_string(cfg.axis)) + "-" + std::to_string(*pt.axis_value);
        for (auto seed : cfg.seeds) {
            const auto run = simulate(pt, seed, cfg.pinned);
            faults += run.faults.size();
            const auto sub = cfg.seeds.size() == 1 ? dir : dir / ("seed-" + std::to_string(seed));
            write_run(sub, cfg, pt, run);
        }
    }
    out << "runs=" << points.size() * cfg.seeds.size() << " faults=" << faults << "\n";
}

void cmd_sweep(const CliOptions& o, std::ostream& out)
{
    auto cfg = config_from(o);
    const auto rows = run_sweep(cfg, o.jobs);
    const fs::path dir(o.out);
    write_file(dir / "sweep.csv", sweep_csv(cfg, rows));
    write_file(dir / "sweep_flows.csv", sweep_flows_csv(cfg, rows));
    out << (dir / "sweep.csv").string() << "\n";
}

void cmd_analyze_trace(const CliOptions& o, std::ostream& out)
{
    if (o.traces.empty())
        throw ConfigError("analyze-trace: at least one trace file required");
    for (double p : o.percentiles)
        if (!(p > 0.0 && p <= 1.0))
            throw ConfigError("--percentiles: " + fixed(p, 6) + " is outside (0, 1]");
    std::string hashed = "percentiles=";
    for (double p : o.percentiles)
        hashed += fixed(p, 9) + ";";
    std::vector<DelayTrace> traces;
    for (const auto& path : o.traces) {
        DelayTrace t;
        try {
            t = read_trace(path);
        } catch (const std::exception& e) {
            throw ConfigError(path + ": " + e.what());
        }
        std::ifstream in(path, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        hashed += t.label + ":" + buf.str();
        traces.push_back(std::move(t));
    }
    std::string csv = "# config_hash=" + hex64(fnv1a64(hashed)) + " seeds=\nlabel,p,percentile_ns,mean_ns,ratio\n";
    for (const auto& t : traces)
        for (double p : o.percentiles)
            csv += t.label + "," + fixed(p, 6) + "," + to_string(percentile(t, p)) + "," + fixed(mean_ns(t), 3) +
                   "," + fixed(tail_ratio(t, p), 6) + "\n";
    const fs::path file = fs::path(o.out) / "trace_stats.csv";
    write_file(file, csv);
    out << file.string() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Consistent network update planner and simulator", "cnu"};
    app.require_subcommand(1);
    CliOptions o;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", o.config, "experiment configuration (JSON)")->required();
        cmd->add_option("--out", o.out, "output directory");
    };
    auto add_sweep = [&](CLI::App* cmd) {
        cmd->add_option("--axis", o.axis, "sweep axis: N, delta, dc, dn or d");
        cmd->add_option("--grid", o.grid, "sweep values, comma separated")->delimiter(',');
    };
    auto* plan = app.add_subcommand("plan", "worst-case durations per sweep point");
    add_common(plan);
    add_sweep(plan);
    auto* sim = app.add_subcommand("simulate", "simulate every sweep point once per seed");
    add_common(sim);
    add_sweep(sim);
    sim->add_option("--seeds", o.seeds, "seed list, e.g. 1,2,10-20");
    sim->add_flag("--pinned", o.pinned, "pin every delay to its bound");
    auto* sweep = app.add_subcommand("sweep", "simulate every sweep point and seed");
    add_common(sweep);
    add_sweep(sweep);
    sweep->add_option("--seeds", o.seeds, "seed list, e.g. 1,2,10-20");
    sweep->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
    sweep->add_flag("--pinned", o.pinned, "pin every delay to its bound");
    auto* analyze = app.add_subcommand("analyze-trace", "percentiles and tail ratios of delay traces");
    analyze->add_option("traces", o.traces, "trace files (one millisecond value per line)")->required();
    analyze->add_option("--percentiles", o.percentiles, "fractions in (0, 1]")->delimiter(',');
    analyze->add_option("--out", o.out, "output directory");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        if (plan->parsed())
            cmd_plan(o, out);
        else if (sim->parsed())
            cmd_simulate(o, out);
        else if (sweep->parsed())
            cmd_sweep(o, out);
        else if (analyze->parsed())
            cmd_analyze_trace(o, out);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::logic_error& e) {
        err << "invariant violation: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace cnu
