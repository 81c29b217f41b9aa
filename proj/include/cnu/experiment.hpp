#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cnu/consistency.hpp"
#include "cnu/model.hpp"
#include "cnu/planner.hpp"
#include "cnu/simulator.hpp"
#include "cnu/topology.hpp"

namespace cnu {

/// Bad or unresolvable configuration. The message starts with the field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ScheduleMode { UntimedGreedy, TimedWorstCase, TimedKnob, Simultaneous };
enum class SweepAxis { None, N, Delta, Dc, Dn, D };

const char* to_string(ScheduleMode mode);
const char* to_string(SweepAxis axis);
SweepAxis parse_axis(std::string_view name);

struct TopologySpec {
    enum class Kind { LeafSpine, File };
    Kind kind = Kind::LeafSpine;
    std::size_t n = 12;
    DelayModel link_delay = ConstantDelay{};
    TopologyFile file;  // Kind::File, already parsed
    GeoDelayOptions geo;
};

struct FlowSpec {
    FlowId id;
    std::string ingress;  // ingress label
    std::vector<std::string> old_path;
    std::vector<std::string> new_path;
    double rate_pps = 1000.0;
    VersionTag old_tag{1};
    VersionTag new_tag{2};
};

struct ProcedureSpec {
    enum class Kind { Ordered, TwoPhase, TwoPhaseGc, KPhase };
    Kind kind = Kind::TwoPhaseGc;
    std::vector<std::vector<std::string>> phases;  // k-phase by switch name
    std::vector<std::size_t> sizes;                // k-phase by count
    std::set<int> gc_phases;                       // k-phase only
};

struct ExperimentConfig {
    TopologySpec topology;
    ProcedureSpec procedure;
    SystemParameters params;
    bool auto_dn = false;
    bool auto_tsu = true;

    std::optional<DelayModel> controller_delay;
    std::optional<DelayModel> message_gap;
    std::optional<Nanos> sync_err;
    std::optional<Nanos> exec_err;

    ScheduleMode mode = ScheduleMode::UntimedGreedy;
    std::optional<Nanos> knob_d;
    std::optional<Nanos> t1;

    /// Empty with auto_flows set: one flow per leaf (leaf-spine only).
    std::vector<FlowSpec> flows;
    bool auto_flows = false;
    double auto_rate_pps = 1000.0;

    std::vector<std::uint64_t> seeds{1};
    SweepAxis axis = SweepAxis::None;
    std::vector<std::int64_t> grid;  // switch count for N, nanoseconds otherwise

    bool pinned = false;
    std::optional<std::pair<Nanos, Nanos>> traffic_window;

    /// Canonical JSON of the effective configuration, minus seeds.
    std::string canonical;
    std::filesystem::path base_dir;
};

/// `base_dir` resolves relative file references. Throws ConfigError.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Replace the sweep and re-canonicalize. Grid entries are integers for N
/// and durations ("2ms") otherwise.
void set_sweep(ExperimentConfig& config, SweepAxis axis, const std::vector<std::string>& grid);

/// "1,2,5-8" -> {1,2,5,6,7,8}
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

/// FNV-1a 64 of the canonical config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// "# config_hash=<hex> seeds=<a,b,c>"
std::string metadata_line(const ExperimentConfig& config);

/// One fully resolved point of the (possibly trivial) sweep.
struct ExperimentPoint {
    std::optional<std::int64_t> axis_value;
    Scenario scenario;
    PhaseShape shape;
    ScheduleMode mode = ScheduleMode::UntimedGreedy;
    std::optional<Schedule> schedule;  // timed modes
    Nanos worst_case{0};               // planner bound for `mode`
    TimedUntimedComparison comparison;
    std::optional<std::pair<Nanos, Nanos>> traffic_window;
};

ExperimentPoint materialize(const ExperimentConfig& config, std::optional<std::int64_t> axis_value = std::nullopt);
std::vector<ExperimentPoint> materialize_all(const ExperimentConfig& config);

RunResult simulate(const ExperimentPoint& point, std::uint64_t seed, bool pinned = false);

struct FlowStats {
    FlowId flow;
    double mean_ns = 0.0;
    Nanos min{0};
    Nanos max{0};
};

struct SweepRow {
    std::optional<std::int64_t> axis_value;
    std::size_t runs = 0;
    double mean_duration_ns = 0.0;
    Nanos min_duration{0};
    Nanos max_duration{0};
    Nanos worst_case{0};
    double mean_inconsistency_ns = 0.0;  // per run: the worst flow
    Nanos max_inconsistency{0};
    std::size_t faults = 0;
    std::vector<FlowStats> flows;
};

/// Runs every (point, seed) pair on `jobs` threads (0 = hardware
/// concurrency) and aggregates per point. Results do not depend on `jobs`.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, unsigned jobs = 0);

// CSV and JSON writers. Every CSV begins with metadata_line().
std::string plan_csv(const ExperimentConfig& config, const std::vector<ExperimentPoint>& points);
std::string sweep_csv(const ExperimentConfig& config, const std::vector<SweepRow>& rows);
std::string sweep_flows_csv(const ExperimentConfig& config, const std::vector<SweepRow>& rows);
std::string run_json(const RunResult& run, const std::vector<InconsistencyReport>& reports);

/// Entry point behind the `cnu` binary; args exclude the program name.
/// Returns 0, 2 on configuration errors, 3 on invariant violations.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cnu
