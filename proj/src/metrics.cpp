#include "perfusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "perfusion/errors.hpp"

namespace perfusion {

double mad(std::span<const double> estimates, std::span<const double> truths) {
    if (estimates.empty()) throw std::invalid_argument("mad: empty input");
    if (estimates.size() != truths.size())
        throw std::invalid_argument("mad: estimate/truth length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) acc += std::abs(estimates[i] - truths[i]);
    return acc / static_cast<double>(estimates.size());
}

double optimal_scale(std::span<const double> estimates, std::span<const double> truths) {
    if (estimates.empty()) throw std::invalid_argument("optimal_scale: empty input");
    if (estimates.size() != truths.size())
        throw std::invalid_argument("optimal_scale: estimate/truth length mismatch");

    struct Entry {
        double ratio;
        double weight;
    };
    std::vector<Entry> entries;
    entries.reserve(estimates.size());
    double total_weight = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const double e = estimates[i];
        if (e == 0.0) continue;
        const double w = std::abs(e);
        entries.push_back({truths[i] / e, w});
        total_weight += w;
    }
    if (entries.empty()) throw DataError("optimal_scale: all estimates are zero");

    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.ratio < b.ratio; });

    const double half = 0.5 * total_weight;
    double cum = 0.0;
    for (const Entry& e : entries) {
        cum += e.weight;
        if (cum >= half) return e.ratio;
    }
    return entries.back().ratio; // unreachable barring rounding: cum ends at total
}

EvalResult scaled_cbf_mad(std::span<const double> estimates, std::span<const double> truths) {
    const double s = optimal_scale(estimates, truths);
    std::vector<double> scaled(estimates.begin(), estimates.end());
    for (double& v : scaled) v *= s;
    EvalResult r;
    r.mad = mad(scaled, truths);
    r.optimal_scale = s;
    r.n = estimates.size();
    return r;
}

} // namespace perfusion
