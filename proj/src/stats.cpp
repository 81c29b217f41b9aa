#include "cnu/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace cnu {
namespace {

Nanos sample_exponential(const ExponentialDelay& d, Rng& rng)
{
    if (d.mean <= Nanos{0} || d.cap <= Nanos{0})
        return Nanos{0};
    const double mean = static_cast<double>(d.mean.count());
    const double mass = -std::expm1(-static_cast<double>(d.cap.count()) / mean);  // P(X <= cap)
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double x = -mean * std::log1p(-u * mass);
    return std::min(d.cap, Nanos{std::llround(x)});
}

}  // namespace

Nanos sample(const DelayModel& model, Rng& rng)
{
    if (const auto* c = std::get_if<ConstantDelay>(&model))
        return c->value;
    if (const auto* u = std::get_if<UniformDelay>(&model)) {
        if (u->hi <= Nanos{0})
            return Nanos{0};
        return Nanos{std::uniform_int_distribution<std::int64_t>(0, u->hi.count())(rng)};
    }
    if (const auto* e = std::get_if<ExponentialDelay>(&model))
        return sample_exponential(*e, rng);
    const auto& emp = std::get<EmpiricalDelay>(model);
    if (emp.samples.empty())
        throw std::invalid_argument("empirical delay model has no samples");
    std::uniform_int_distribution<std::size_t> pick(0, emp.samples.size() - 1);
    return emp.samples[pick(rng)];
}

Nanos percentile(const DelayTrace& trace, double p)
{
    if (trace.samples.empty())
        throw std::invalid_argument("percentile of empty trace '" + trace.label + "'");
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("percentile fraction must lie in (0, 1]");
    auto sorted = trace.samples;
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    // The slack absorbs representation error, e.g. 0.999 * 1000 = 999.0000000000001.
    auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

double mean_ns(const DelayTrace& trace)
{
    if (trace.samples.empty())
        throw std::invalid_argument("mean of empty trace '" + trace.label + "'");
    long double sum = 0;
    for (auto s : trace.samples)
        sum += static_cast<long double>(s.count());
    return static_cast<double>(sum / static_cast<long double>(trace.samples.size()));
}

double tail_ratio(const DelayTrace& trace, double p)
{
    const double mean = mean_ns(trace);
    if (mean <= 0.0)
        throw std::invalid_argument("tail ratio undefined for zero-mean trace '" + trace.label + "'");
    return static_cast<double>(percentile(trace, p).count()) / mean;
}

DelayTrace parse_trace(std::istream& in, std::string label)
{
    DelayTrace trace{std::move(label), {}};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            Nanos v = parse_milliseconds(line);
            if (v < Nanos{0})
                throw std::invalid_argument("negative delay");
            trace.samples.push_back(v);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(trace.label + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return trace;
}

DelayTrace read_trace(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open trace file " + path.string());
    auto trace = parse_trace(in, path.stem().string());
    if (trace.samples.empty())
        throw std::runtime_error("trace file " + path.string() + " contains no samples");
    return trace;
}

}  // namespace cnu
