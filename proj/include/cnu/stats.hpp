#pragma once

#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "cnu/model.hpp"

namespace cnu {

/// One random stream per simulation run.
using Rng = std::mt19937_64;

/// Draws a non-negative delay. Exponential models are sampled from the
/// distribution conditioned on [0, cap] (inverse CDF), never clamped.
Nanos sample(const DelayModel& model, Rng& rng);

struct DelayTrace {
    std::string label;
    std::vector<Nanos> samples;
};

/// Nearest-rank percentile: the ceil(p*n)-th smallest sample (1-based).
/// Requires 0 < p <= 1 and a non-empty trace.
Nanos percentile(const DelayTrace& trace, double p);

double mean_ns(const DelayTrace& trace);

/// percentile(trace, p) / mean(trace).
double tail_ratio(const DelayTrace& trace, double p);

/// One decimal millisecond value per line; blank lines and '#' comments are
/// skipped. Throws std::runtime_error naming the offending line.
DelayTrace parse_trace(std::istream& in, std::string label);
DelayTrace read_trace(const std::filesystem::path& path);

}  // namespace cnu
