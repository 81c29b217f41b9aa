#include "cnu/consistency.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cnu {

const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::ConsistentOld:
        return "consistent_old";
    case Verdict::ConsistentNew:
        return "consistent_new";
    case Verdict::Inconsistent:
        break;
    }
    return "inconsistent";
}

Verdict classify_packet(const PacketTrace& trace, const ForwardingState& old_config,
                        const ForwardingState& new_config)
{
    bool matches_old = !trace.truncated;
    bool matches_new = !trace.truncated;
    for (const auto& hop : trace.hops) {
        const bool in_old = old_config.contains(hop.sw);
        const bool in_new = new_config.contains(hop.sw);
        if (!in_old && !in_new)
            throw std::invalid_argument("trace visits switch " + std::to_string(hop.sw.value) +
                                        " absent from both configurations");
        if (matches_old)
            matches_old = in_old && old_config.lookup(hop.sw, hop.packet, hop.in_port).action == hop.action;
        if (matches_new)
            matches_new = in_new && new_config.lookup(hop.sw, hop.packet, hop.in_port).action == hop.action;
    }
    if (matches_old)
        return Verdict::ConsistentOld;
    if (matches_new)
        return Verdict::ConsistentNew;
    return Verdict::Inconsistent;
}

Nanos inconsistency_time(std::size_t n_inconsistent, double rate_pps)
{
    if (!(rate_pps > 0.0))
        throw std::invalid_argument("inconsistency metric needs a positive flow rate");
    return Nanos{std::llround(static_cast<double>(n_inconsistent) * 1e9 / rate_pps)};
}

InconsistencyReport measure_inconsistency(const RunResult& run, const TestFlow& flow)
{
    if (!(flow.rate_pps > 0.0))
        throw std::invalid_argument("test flow '" + flow.id + "' has zero rate");
    const FlowTraces* traces = run.traces_for(flow.id);
    if (!traces)
        throw std::invalid_argument("test flow '" + flow.id + "' was not injected in this run");
    InconsistencyReport report{flow.id, 0, traces->packets.size(), flow.rate_pps, Nanos{0}};
    for (const auto& trace : traces->packets)
        if (classify_packet(trace, run.old_config, run.new_config) == Verdict::Inconsistent)
            ++report.n_inconsistent;
    report.inconsistency = inconsistency_time(report.n_inconsistent, flow.rate_pps);
    return report;
}

std::string csv_header_inconsistency()
{
    return "flow_id,n_inconsistent,rate_pps,inconsistency_ns";
}

std::string to_csv_row(const InconsistencyReport& r)
{
    std::ostringstream os;
    os << r.flow << ',' << r.n_inconsistent << ',' << r.rate_pps << ',' << r.inconsistency.count();
    return os.str();
}

Schedule knob_schedule(const PhaseShape& shape, Nanos t1, Nanos d, const SystemParameters& params)
{
    if (d < Nanos{0})
        throw std::invalid_argument("knob d must be >= 0");
    SystemParameters drained = params;
    drained.d_n = d;
    Schedule s = worst_case_schedule(shape, t1, drained);
    s.knob_d = d;
    return s;
}

Schedule knob_schedule(Nanos t1, Nanos d, const SystemParameters& params)
{
    return knob_schedule(PhaseShape{{1, 1, 1}, {3}}, t1, d, params);
}

}  // namespace cnu
