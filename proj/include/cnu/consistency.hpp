#pragma once

#include <cstddef>
#include <string>

#include "cnu/model.hpp"
#include "cnu/planner.hpp"
#include "cnu/simulator.hpp"

namespace cnu {

enum class Verdict { ConsistentOld, ConsistentNew, Inconsistent };

const char* to_string(Verdict v);

/// A packet is consistent with a configuration when every hop's realized
/// action equals that configuration's action for the packet as received at
/// that hop. Truncated (looping) traces are inconsistent. Throws
/// std::invalid_argument if a hop names a switch neither configuration has.
Verdict classify_packet(const PacketTrace& trace, const ForwardingState& old_config,
                        const ForwardingState& new_config);

struct InconsistencyReport {
    FlowId flow;
    std::size_t n_inconsistent = 0;
    std::size_t n_packets = 0;
    double rate_pps = 0.0;
    Nanos inconsistency{0};  // n_inconsistent / rate
};

/// Counts the flow's inconsistently forwarded packets in `run`. Throws if the
/// flow has a non-positive rate or was not injected in the run.
InconsistencyReport measure_inconsistency(const RunResult& run, const TestFlow& flow);

/// n / R in nanoseconds, rounded.
Nanos inconsistency_time(std::size_t n_inconsistent, double rate_pps);

/// "flow_id,n_inconsistent,rate_pps,inconsistency_ns"
std::string csv_header_inconsistency();
std::string to_csv_row(const InconsistencyReport& report);

/// Two-phase update with garbage collection where the drain wait before GC
/// is the knob d: (T_1, T_1 + delta, T_1 + 2 delta + d). d = Dn gives the
/// worst-case schedule.
Schedule knob_schedule(Nanos t1, Nanos d, const SystemParameters& params);

/// Same rule for any shape: a gc phase starts delta + d after the phase
/// before it.
Schedule knob_schedule(const PhaseShape& shape, Nanos t1, Nanos d, const SystemParameters& params);

}  // namespace cnu
