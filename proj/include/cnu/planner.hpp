#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cnu/model.hpp"

namespace cnu {

/// What the worst-case analysis needs from a procedure: the phase sizes and
/// which phases are garbage collection.
struct PhaseShape {
    std::vector<std::size_t> sizes;  // sizes[j-1] = N_j
    std::set<int> gc_phases;

    int phase_count() const { return static_cast<int>(sizes.size()); }
    bool is_gc(int phase) const { return gc_phases.count(phase) != 0; }
    /// Throws std::invalid_argument on an empty phase list, an empty phase or
    /// a gc phase outside 2..k.
    void validate() const;
};

PhaseShape shape_of(const UpdateProcedure& procedure, const std::set<int>& gc_phases);
inline PhaseShape shape_of(const UpdatePlan& plan) { return shape_of(plan.procedure, plan.gc_phases); }

// ---------------------------------------------------------------------------
// PERT graphs

struct PertEdge {
    std::size_t from;
    std::size_t to;
    Nanos weight;
};

/// Event/activity graph. Nodes are events, edges carry the maximal delay
/// between two events.
class PertGraph {
public:
    std::size_t add_node(std::string label);
    void add_edge(std::size_t from, std::size_t to, Nanos weight);

    void set_start(std::size_t node) { start_ = node; }
    void set_finish(std::size_t node) { finish_ = node; }
    std::size_t start() const { return start_; }
    std::size_t finish() const { return finish_; }

    std::size_t node_count() const { return labels_.size(); }
    const std::string& label(std::size_t node) const { return labels_.at(node); }
    const std::vector<PertEdge>& edges() const { return edges_; }
    std::optional<std::size_t> find(const std::string& label) const;

private:
    std::vector<std::string> labels_;
    std::vector<PertEdge> edges_;
    std::size_t start_ = 0;
    std::size_t finish_ = 0;
};

struct DurationReport {
    Nanos worst_case{0};
    std::vector<std::size_t> critical_path;  // start .. finish
};

/// Maximum-weight start -> finish path by dynamic programming over a
/// topological order. Throws std::invalid_argument if the graph has a cycle
/// or finish is unreachable.
DurationReport longest_path(const PertGraph& graph);

/// Greedy untimed k-phase update: one controller message chain per phase
/// (C_{j,i} -Delta-> C_{j,i+1}), each message completing Dc later at S_{j,i},
/// and a wait of max(Delta, Dc) after the last message of a phase, or
/// max(Delta, Dc + Dn) when the next phase is garbage collection.
PertGraph build_pert_untimed(const PhaseShape& shape, const SystemParameters& params);
PertGraph build_pert_untimed(const UpdateProcedure& procedure, const SystemParameters& params,
                             const std::set<int>& gc_phases);

/// Timed update under a worst-case schedule: phase j starts at T_j and each
/// of its singletons completes within delta_sched. T_{j+1} follows T_j by
/// delta_sched, plus `drain` (Dn by default) before a gc phase.
PertGraph build_pert_timed(const PhaseShape& shape, const SystemParameters& params,
                           std::optional<Nanos> drain = std::nullopt);

// ---------------------------------------------------------------------------
// Closed forms. All throw std::invalid_argument on a zero count.

/// (N_j - 1) * Delta + Dc
Nanos phase_worst_duration(std::size_t n_j, const SystemParameters& params);

/// sum_j (N_j - 1) * Delta + (k - 1) * max(Delta, Dc) + Dc
Nanos kphase_worst_duration(std::span<const std::size_t> sizes, const SystemParameters& params);

/// From the last message of phase j until its garbage collection completes:
/// max(Delta, Dc + Dn) + (NG_j - 1) * Delta + Dc
Nanos gc_tail_duration(std::size_t ng_j, const SystemParameters& params);

/// (N1 + N2 + NG1 - 3) * Delta + max(Delta, Dc) + max(Delta, Dc + Dn) + Dc
Nanos twophase_gc_worst_duration(std::size_t n1, std::size_t n2, std::size_t ng1, const SystemParameters& params);

/// k * delta
Nanos timed_kphase_worst_duration(int k, const SystemParameters& params);

/// Dn + 3 * delta
Nanos timed_twophase_gc_worst_duration(const SystemParameters& params);

/// General untimed form for any shape: the k-phase sum with each boundary
/// before a gc phase widened to max(Delta, Dc + Dn).
Nanos untimed_worst_duration(const PhaseShape& shape, const SystemParameters& params);

/// General timed form: k * delta plus `drain` (Dn by default) per gc phase.
Nanos timed_worst_duration(const PhaseShape& shape, const SystemParameters& params,
                           std::optional<Nanos> drain = std::nullopt);

// ---------------------------------------------------------------------------
// Schedules

/// T_1 = t1, T_j = T_{j-1} + delta, and a gc phase at T_{j-1} + delta + Dn.
Schedule worst_case_schedule(const PhaseShape& shape, Nanos t1, const SystemParameters& params);

/// Every phase at `t`.
Schedule simultaneous_schedule(const PhaseShape& shape, Nanos t);

/// Setup lead time that guarantees every message lands before T_1 when all
/// samples respect the bounds: Dc + Delta * message_count.
Nanos default_setup_time(const SystemParameters& params, std::size_t message_count);

// ---------------------------------------------------------------------------

struct TimedUntimedComparison {
    Nanos timed{0};
    Nanos untimed{0};
    bool timed_wins = false;  // strictly shorter
};

TimedUntimedComparison compare_timed_untimed(const PhaseShape& shape, const SystemParameters& params);
TimedUntimedComparison compare_timed_untimed(const UpdateProcedure& procedure, const SystemParameters& params,
                                             const std::set<int>& gc_phases);

}  // namespace cnu
