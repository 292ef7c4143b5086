#include "perfusion/augment.hpp"

#include <cstdlib>
#include <stdexcept>

#include "perfusion/parallel.hpp"

namespace perfusion {

void AugmentConfig::validate() const {
    if (shift_lo > shift_hi) throw std::invalid_argument("AugmentConfig: shift range lo > hi");
    if (!(scale_lo > 0.0 && scale_lo <= scale_hi))
        throw std::invalid_argument("AugmentConfig: scale range must satisfy 0 < lo <= hi");
    if (factor < 1) throw std::invalid_argument("AugmentConfig: factor must be >= 1");
}

std::vector<double> shift_curve(std::span<const double> curve, int k) {
    const auto n = static_cast<int>(curve.size());
    if (std::abs(k) >= n) throw std::invalid_argument("shift_curve: |k| must be < curve length");

    std::vector<double> out(curve.size());
    for (int i = 0; i < n; ++i) {
        const int src = i - k;
        if (src < 0)
            out[static_cast<std::size_t>(i)] = 0.0; // pre-bolus baseline
        else if (src > n - 1)
            out[static_cast<std::size_t>(i)] = curve[static_cast<std::size_t>(n - 1)]; // hold last
        else
            out[static_cast<std::size_t>(i)] = curve[static_cast<std::size_t>(src)];
    }
    return out;
}

Sample augment_sample(const Sample& s, const AugmentConfig& cfg, Rng& rng) {
    const int k = rng.uniform_int(cfg.shift_lo, cfg.shift_hi);
    const double c = rng.uniform(cfg.scale_lo, cfg.scale_hi);

    Sample out = s; // ground truth and aif_id carried over unchanged
    out.aif = shift_curve(s.aif, k);
    out.tcc = shift_curve(s.tcc, k);
    for (double& v : out.aif) v *= c;
    for (double& v : out.tcc) v *= c;
    return out;
}

Dataset expand_dataset(const Dataset& d, const AugmentConfig& cfg) {
    cfg.validate();
    if (d.empty()) throw std::invalid_argument("expand_dataset: empty dataset");

    Dataset out;
    out.grid = d.grid;
    out.sigma = d.sigma;
    out.samples.resize(d.size() * static_cast<std::size_t>(cfg.factor));

    parallel_for(out.samples.size(), [&](std::size_t q) {
        Rng rng(derive_stream(cfg.rng_seed, seed_tag::augment, q));
        const Sample& src = d.samples[q / static_cast<std::size_t>(cfg.factor)];
        out.samples[q] = augment_sample(src, cfg, rng);
    });
    return out;
}

} // namespace perfusion
