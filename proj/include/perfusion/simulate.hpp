// Synthetic CT-perfusion signal generator.
//
// AIF and IRF are gamma variates with parameters drawn from uniform ranges;
// the TCC is their continuous convolution sampled on the acquisition grid,
// with Gaussian noise added to both sampled curves. Ground truth CBF, Tmax
// and CBV come from the closed forms of the IRF, not from the discretized
// curves, so estimator error is measured against the exact answer.

#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "perfusion/gamma.hpp"
#include "perfusion/rng.hpp"
#include "perfusion/sample.hpp"

namespace perfusion {

using Range = std::pair<double, double>;

// Brain tissue density, g/ml. CBF is evaluated after optimal rescaling, so
// any positive constant here yields the same headline metric.
inline constexpr double kTissueDensity = 1.04;

// Conversion from an IRF peak in 1/s to CBF in ml/100g/min: x 6000 / rho.
inline constexpr double kCbfUnitFactor = 6000.0;

struct SimConfig {
    AcquisitionGrid grid{};

    Range aif_t0_range{0.0, 15.0};
    Range aif_alpha_range{1.5, 3.5};
    Range aif_beta_range{1.5, 3.5};
    Range aif_peak_range{100.0, 500.0}; // HU

    Range irf_t0_range{0.0, 10.0};
    Range irf_alpha_range{0.0, 0.5};
    Range irf_beta_range{2.5, 4.5};
    Range cbv_range{0.001, 0.06}; // CBF experiments; Tmax experiments use {0.02, 0.06}

    double noise_sigma = 1.0; // HU
    std::uint64_t rng_seed = 0;
    double fine_dt = 0.01; // internal convolution resolution, s

    void validate() const;
};

// Target parameter selection. Affects the CBV range used when generating
// experiment data and which metric the estimators are scored with.
enum class Target { Cbf, Tmax };

const char* target_name(Target t);
Target parse_target(const std::string& name); // "cbf" or "tmax"

// CBV range for a target: full range for CBF, 2-6% for Tmax (deconvolution
// Tmax is unusable on very weak signals, and that regime is clinically moot).
Range cbv_range_for(Target target);

// Draw AIF parameters: t0, alpha, beta uniform from their ranges, then amp
// solved so the curve maximum equals a uniform draw from aif_peak_range.
// Draw order: t0, alpha, beta, peak.
GammaParams draw_aif(const SimConfig& cfg, Rng& rng);

// Draw IRF parameters: t0, alpha, beta uniform from their ranges, then amp
// solved so the curve integral (the CBV) equals a uniform draw from cbv_range.
// Draw order: t0, alpha, beta, cbv.
GammaParams draw_irf(const SimConfig& cfg, Rng& rng);

// Build one sample from explicit curve parameters.
//
// The TCC is the continuous convolution (AIF * IRF) evaluated by trapezoidal
// quadrature on a fine uniform grid and read off at the acquisition times.
// The fine step is cfg.fine_dt rounded down so that the acquisition interval
// is an integer number of fine steps; sample times then fall exactly on fine
// nodes and no interpolation is needed.
//
// rng is consumed for noise only, in a fixed order: n AIF draws, then n TCC
// draws, one N(0, sigma^2) value per sampled point.
Sample synthesize_sample(const GammaParams& aif, const GammaParams& irf, const SimConfig& cfg,
                         Rng& rng);

// Noiseless TCC values at the acquisition times for explicit parameters.
// Shared by synthesize_sample and tests that need the clean curve.
std::vector<double> convolve_on_grid(const GammaParams& aif, const GammaParams& irf,
                                     const SimConfig& cfg);

// Generate n_aifs distinct AIFs with tccs_per_aif samples each (noise drawn
// independently per sample, including on the AIF vector). Reproducible and
// thread-count independent: AIF a uses stream (seed, aif_params, a), sample m
// uses stream (seed, sample, m) for its IRF params and noise.
Dataset generate_dataset(const SimConfig& cfg, std::size_t n_aifs, std::size_t tccs_per_aif);

} // namespace perfusion
