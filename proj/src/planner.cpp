#include "cnu/planner.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <stdexcept>

namespace cnu {
namespace {

void require_count(std::size_t n, const char* what)
{
    if (n == 0)
        throw std::invalid_argument(std::string(what) + " must be at least 1");
}

Nanos times(Nanos d, std::size_t n)
{
    return d * static_cast<std::int64_t>(n);
}

Nanos phase_boundary_wait(const SystemParameters& p, bool next_is_gc)
{
    return next_is_gc ? std::max(p.delta_msg, p.d_c + p.d_n) : std::max(p.delta_msg, p.d_c);
}

std::string node_name(char kind, int phase, std::size_t i)
{
    return std::string(1, kind) + "_" + std::to_string(phase) + "," + std::to_string(i);
}

}  // namespace

void PhaseShape::validate() const
{
    if (sizes.empty())
        throw std::invalid_argument("update procedure has no phases");
    for (std::size_t j = 0; j < sizes.size(); ++j)
        if (sizes[j] == 0)
            throw std::invalid_argument("phase " + std::to_string(j + 1) + " is empty");
    for (int g : gc_phases)
        if (g < 2 || g > phase_count())
            throw std::invalid_argument("garbage-collection phase " + std::to_string(g) + " must lie in 2.." +
                                        std::to_string(phase_count()));
}

PhaseShape shape_of(const UpdateProcedure& procedure, const std::set<int>& gc_phases)
{
    PhaseShape shape{procedure.phase_sizes(), gc_phases};
    shape.validate();
    return shape;
}

// ---------------------------------------------------------------------------

std::size_t PertGraph::add_node(std::string label)
{
    labels_.push_back(std::move(label));
    return labels_.size() - 1;
}

void PertGraph::add_edge(std::size_t from, std::size_t to, Nanos weight)
{
    if (from >= labels_.size() || to >= labels_.size())
        throw std::out_of_range("PERT edge references unknown node");
    if (weight < Nanos{0})
        throw std::invalid_argument("PERT edge weight must be >= 0");
    edges_.push_back(PertEdge{from, to, weight});
}

std::optional<std::size_t> PertGraph::find(const std::string& label) const
{
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
}

DurationReport longest_path(const PertGraph& graph)
{
    const std::size_t n = graph.node_count();
    if (n == 0)
        throw std::invalid_argument("PERT graph is empty");

    std::vector<std::vector<const PertEdge*>> out(n);
    std::vector<std::size_t> indegree(n, 0);
    for (const auto& e : graph.edges()) {
        out[e.from].push_back(&e);
        ++indegree[e.to];
    }

    // Kahn's algorithm; a node left unvisited sits on a cycle.
    std::deque<std::size_t> ready;
    for (std::size_t v = 0; v < n; ++v)
        if (indegree[v] == 0)
            ready.push_back(v);
    std::vector<std::size_t> order;
    order.reserve(n);
    while (!ready.empty()) {
        auto v = ready.front();
        ready.pop_front();
        order.push_back(v);
        for (const auto* e : out[v])
            if (--indegree[e->to] == 0)
                ready.push_back(e->to);
    }
    if (order.size() != n)
        throw std::invalid_argument("PERT graph contains a cycle");

    constexpr auto unreached = Nanos::min();
    constexpr auto none = std::numeric_limits<std::size_t>::max();
    std::vector<Nanos> best(n, unreached);
    std::vector<std::size_t> via(n, none);
    best[graph.start()] = Nanos{0};
    for (auto v : order) {
        if (best[v] == unreached)
            continue;
        for (const auto* e : out[v]) {
            if (best[v] + e->weight > best[e->to]) {
                best[e->to] = best[v] + e->weight;
                via[e->to] = v;
            }
        }
    }
    if (best[graph.finish()] == unreached)
        throw std::invalid_argument("PERT finish node is unreachable from start");

    DurationReport report{best[graph.finish()], {}};
    for (auto v = graph.finish(); v != none; v = via[v])
        report.critical_path.push_back(v);
    std::reverse(report.critical_path.begin(), report.critical_path.end());
    return report;
}

PertGraph build_pert_untimed(const PhaseShape& shape, const SystemParameters& params)
{
    shape.validate();
    PertGraph g;
    const auto start = g.add_node("C_start");
    g.set_start(start);

    std::vector<std::vector<std::size_t>> c_nodes(shape.sizes.size());
    std::vector<std::vector<std::size_t>> s_nodes(shape.sizes.size());
    for (int j = 1; j <= shape.phase_count(); ++j) {
        for (std::size_t i = 1; i <= shape.sizes[j - 1]; ++i) {
            c_nodes[j - 1].push_back(g.add_node(node_name('C', j, i)));
            s_nodes[j - 1].push_back(g.add_node(node_name('S', j, i)));
        }
    }
    const auto fin = g.add_node("C_fin");
    g.set_finish(fin);

    g.add_edge(start, c_nodes[0].front(), Nanos{0});
    for (int j = 1; j <= shape.phase_count(); ++j) {
        const auto& cs = c_nodes[j - 1];
        const auto& ss = s_nodes[j - 1];
        for (std::size_t i = 0; i < cs.size(); ++i) {
            g.add_edge(cs[i], ss[i], params.d_c);
            if (i + 1 < cs.size())
                g.add_edge(cs[i], cs[i + 1], params.delta_msg);
        }
        if (j == shape.phase_count()) {
            for (auto s : ss)
                g.add_edge(s, fin, Nanos{0});
            continue;
        }
        const bool next_gc = shape.is_gc(j + 1);
        const auto next = c_nodes[j].front();
        g.add_edge(cs.back(), next, phase_boundary_wait(params, next_gc));
        // Phase j must complete (and, before gc, drain) before phase j+1.
        for (auto s : ss)
            g.add_edge(s, next, next_gc ? params.d_n : Nanos{0});
    }
    return g;
}

PertGraph build_pert_untimed(const UpdateProcedure& procedure, const SystemParameters& params,
                             const std::set<int>& gc_phases)
{
    if (procedure.empty())
        throw std::invalid_argument("update procedure is empty");
    return build_pert_untimed(shape_of(procedure, gc_phases), params);
}

PertGraph build_pert_timed(const PhaseShape& shape, const SystemParameters& params, std::optional<Nanos> drain)
{
    shape.validate();
    const Nanos gc_gap = drain.value_or(params.d_n);
    PertGraph g;
    const auto start = g.add_node("T_start");
    g.set_start(start);

    std::vector<std::size_t> t_nodes;
    std::vector<std::vector<std::size_t>> s_nodes(shape.sizes.size());
    for (int j = 1; j <= shape.phase_count(); ++j) {
        t_nodes.push_back(g.add_node("T_" + std::to_string(j)));
        for (std::size_t i = 1; i <= shape.sizes[j - 1]; ++i)
            s_nodes[j - 1].push_back(g.add_node(node_name('S', j, i)));
    }
    const auto fin = g.add_node("T_fin");
    g.set_finish(fin);

    g.add_edge(start, t_nodes.front(), Nanos{0});
    for (int j = 1; j <= shape.phase_count(); ++j) {
        for (auto s : s_nodes[j - 1]) {
            g.add_edge(t_nodes[j - 1], s, params.delta_sched);
            g.add_edge(s, fin, Nanos{0});
        }
        if (j < shape.phase_count()) {
            Nanos gap = params.delta_sched + (shape.is_gc(j + 1) ? gc_gap : Nanos{0});
            g.add_edge(t_nodes[j - 1], t_nodes[j], gap);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------

Nanos phase_worst_duration(std::size_t n_j, const SystemParameters& params)
{
    require_count(n_j, "N_j");
    return times(params.delta_msg, n_j - 1) + params.d_c;
}

Nanos kphase_worst_duration(std::span<const std::size_t> sizes, const SystemParameters& params)
{
    if (sizes.empty())
        throw std::invalid_argument("k-phase duration needs at least one phase");
    Nanos total{0};
    for (auto n : sizes) {
        require_count(n, "N_j");
        total += times(params.delta_msg, n - 1);
    }
    return total + times(std::max(params.delta_msg, params.d_c), sizes.size() - 1) + params.d_c;
}

Nanos gc_tail_duration(std::size_t ng_j, const SystemParameters& params)
{
    require_count(ng_j, "NG_j");
    return std::max(params.delta_msg, params.d_c + params.d_n) + times(params.delta_msg, ng_j - 1) + params.d_c;
}

Nanos twophase_gc_worst_duration(std::size_t n1, std::size_t n2, std::size_t ng1, const SystemParameters& params)
{
    require_count(n1, "N_1");
    require_count(n2, "N_2");
    require_count(ng1, "NG_1");
    return times(params.delta_msg, n1 + n2 + ng1 - 3) + std::max(params.delta_msg, params.d_c) +
           std::max(params.delta_msg, params.d_c + params.d_n) + params.d_c;
}

Nanos timed_kphase_worst_duration(int k, const SystemParameters& params)
{
    if (k < 1)
        throw std::invalid_argument("k must be at least 1");
    return params.delta_sched * k;
}

Nanos timed_twophase_gc_worst_duration(const SystemParameters& params)
{
    return params.d_n + 3 * params.delta_sched;
}

Nanos untimed_worst_duration(const PhaseShape& shape, const SystemParameters& params)
{
    shape.validate();
    Nanos total = params.d_c;
    for (int j = 1; j <= shape.phase_count(); ++j) {
        total += times(params.delta_msg, shape.sizes[j - 1] - 1);
        if (j < shape.phase_count())
            total += phase_boundary_wait(params, shape.is_gc(j + 1));
    }
    return total;
}

Nanos timed_worst_duration(const PhaseShape& shape, const SystemParameters& params, std::optional<Nanos> drain)
{
    shape.validate();
    return params.delta_sched * shape.phase_count() +
           drain.value_or(params.d_n) * static_cast<std::int64_t>(shape.gc_phases.size());
}

// ---------------------------------------------------------------------------

Schedule worst_case_schedule(const PhaseShape& shape, Nanos t1, const SystemParameters& params)
{
    shape.validate();
    Schedule s;
    Nanos t = t1;
    for (int j = 1; j <= shape.phase_count(); ++j) {
        if (j > 1)
            t += params.delta_sched + (shape.is_gc(j) ? params.d_n : Nanos{0});
        s.phase_times[j] = t;
    }
    return s;
}

Schedule simultaneous_schedule(const PhaseShape& shape, Nanos t)
{
    shape.validate();
    Schedule s;
    for (int j = 1; j <= shape.phase_count(); ++j)
        s.phase_times[j] = t;
    return s;
}

Nanos default_setup_time(const SystemParameters& params, std::size_t message_count)
{
    return params.d_c + times(params.delta_msg, message_count);
}

TimedUntimedComparison compare_timed_untimed(const PhaseShape& shape, const SystemParameters& params)
{
    TimedUntimedComparison c;
    c.timed = timed_worst_duration(shape, params);
    c.untimed = untimed_worst_duration(shape, params);
    c.timed_wins = c.timed < c.untimed;
    return c;
}

TimedUntimedComparison compare_timed_untimed(const UpdateProcedure& procedure, const SystemParameters& params,
                                             const std::set<int>& gc_phases)
{
    return compare_timed_untimed(shape_of(procedure, gc_phases), params);
}

}  // namespace cnu
