#include "perfusion/deconv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "perfusion/errors.hpp"
#include "perfusion/metrics.hpp"
#include "perfusion/parallel.hpp"
#include "perfusion/rng.hpp"

namespace perfusion {

void DeconvConfig::validate() const {
    if (!(lambda_rel > 0.0)) throw std::invalid_argument("DeconvConfig: lambda_rel must be > 0");
    grid.validate();
}

Eigen::MatrixXd build_volterra_matrix(std::span<const double> aif, const AcquisitionGrid& grid) {
    const int n = grid.n_samples;
    if (aif.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("build_volterra_matrix: AIF length does not match grid");

    const double dt = grid.dt();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double w = (j == 0 || j == i) ? 0.5 : 1.0;
            m(i, j) = dt * w * aif[static_cast<std::size_t>(i - j)];
        }
    }
    return m;
}

double tikhonov_filter(double singular_value, double lambda) {
    const double s2 = singular_value * singular_value;
    return s2 / (s2 + lambda * lambda);
}

VolterraSvd VolterraSvd::compute(std::span<const double> aif, const AcquisitionGrid& grid) {
    const Eigen::MatrixXd m = build_volterra_matrix(aif, grid);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU(), svd.singularValues(), svd.matrixV(), grid};
}

Irf VolterraSvd::solve(std::span<const double> tcc, double lambda_rel) const {
    const auto n = static_cast<int>(singular_values.size());
    if (tcc.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("tikhonov solve: TCC length does not match matrix");
    if (!(lambda_rel > 0.0)) throw std::invalid_argument("tikhonov solve: lambda_rel must be > 0");

    const double s_max = singular_values(0);
    if (s_max <= 0.0) throw NumericError("tikhonov solve: degenerate input (all-zero AIF)");
    const double lambda = lambda_rel * s_max;

    Eigen::Map<const Eigen::VectorXd> b(tcc.data(), n);
    // Coefficient per mode: f_k / s_k = s_k / (s_k^2 + lambda^2); safe at s_k = 0.
    Eigen::VectorXd coeff(n);
    for (int k = 0; k < n; ++k) {
        const double s = singular_values(k);
        coeff(k) = s / (s * s + lambda * lambda);
    }
    const Eigen::VectorXd h = v * (coeff.cwiseProduct(u.transpose() * b));

    Irf irf;
    irf.grid = grid;
    irf.values.assign(h.data(), h.data() + n);
    return irf;
}

Irf tikhonov_svd_solve(const Eigen::MatrixXd& volterra, std::span<const double> tcc,
                       double lambda_rel, const AcquisitionGrid& grid) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(volterra, Eigen::ComputeThinU | Eigen::ComputeThinV);
    VolterraSvd cache{svd.matrixU(), svd.singularValues(), svd.matrixV(), grid};
    return cache.solve(tcc, lambda_rel);
}

double estimate_cbf(const Irf& irf, double rho) {
    double peak = 0.0; // negative maxima clamp to zero
    for (double v : irf.values) peak = std::max(peak, v);
    return peak / rho * kCbfUnitFactor;
}

double estimate_tmax(const Irf& irf, bool spline_refine) {
    const auto n = irf.values.size();
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (irf.values[i] > irf.values[best]) best = i; // strict: ties keep earliest
    const double dt = irf.grid.dt();
    const double t_best = irf.grid.time(static_cast<int>(best));

    if (!spline_refine || best == 0 || best + 1 >= n) return t_best;

    // Vertex of the parabola through the peak and its neighbours.
    const double vm = irf.values[best - 1];
    const double v0 = irf.values[best];
    const double vp = irf.values[best + 1];
    const double denom = vm - 2.0 * v0 + vp;
    if (denom == 0.0) return t_best;
    const double offset = 0.5 * dt * (vm - vp) / denom;
    return std::clamp(t_best + offset, t_best - dt, t_best + dt);
}

DeconvEstimate deconvolve_sample(const Sample& s, const DeconvConfig& cfg) {
    cfg.validate();
    const Irf irf = tikhonov_svd_solve(build_volterra_matrix(s.aif, cfg.grid), s.tcc,
                                       cfg.lambda_rel, cfg.grid);
    return {estimate_cbf(irf), estimate_tmax(irf, cfg.spline_refine)};
}

std::vector<double> deconvolve_dataset(const Dataset& ds, const DeconvConfig& cfg, Target target) {
    cfg.validate();
    std::vector<double> estimates(ds.size());
    parallel_for(ds.size(), [&](std::size_t i) {
        const DeconvEstimate est = deconvolve_sample(ds.samples[i], cfg);
        estimates[i] = target == Target::Cbf ? est.cbf : est.tmax;
    });
    return estimates;
}

std::vector<double> lambda_grid() {
    std::vector<double> grid(10);
    for (int k = 0; k < 10; ++k) grid[static_cast<std::size_t>(k)] = 0.01 * std::pow(2.0, k);
    return grid;
}

double tune_lambda(const Dataset& train, Target target, const std::vector<double>& candidates,
                   std::size_t subsample_cap, std::uint64_t subsample_seed, bool spline_refine) {
    if (train.empty()) throw std::invalid_argument("tune_lambda: empty training set");
    if (candidates.empty()) throw std::invalid_argument("tune_lambda: no candidates");

    // Seeded partial Fisher-Yates subsample keeps tuning tractable on large sets.
    std::vector<std::size_t> idx(train.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::size_t m = train.size();
    if (m > subsample_cap) {
        Rng rng(derive_stream(subsample_seed, seed_tag::tune_subsample, 0));
        for (std::size_t i = 0; i < subsample_cap; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.uniform_int(
                                   0, static_cast<int>(train.size() - 1 - i)));
            std::swap(idx[i], idx[j]);
        }
        m = subsample_cap;
    }

    std::vector<double> sorted = candidates;
    std::sort(sorted.begin(), sorted.end());

    // One SVD per sample, reused across the whole candidate grid.
    std::vector<std::vector<double>> estimates(sorted.size(), std::vector<double>(m));
    std::vector<double> truths(m);
    parallel_for(m, [&](std::size_t i) {
        const Sample& s = train.samples[idx[i]];
        truths[i] = target == Target::Cbf ? s.cbf_true : s.tmax_true;
        const VolterraSvd svd = VolterraSvd::compute(s.aif, train.grid);
        for (std::size_t c = 0; c < sorted.size(); ++c) {
            const Irf irf = svd.solve(s.tcc, sorted[c]);
            estimates[c][i] =
                target == Target::Cbf ? estimate_cbf(irf) : estimate_tmax(irf, spline_refine);
        }
    });

    // Ascending scan with strict improvement: ties keep the smaller lambda.
    double best_lambda = sorted[0];
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sorted.size(); ++c) {
        double score;
        if (target == Target::Cbf) {
            bool any_nonzero = false;
            for (double e : estimates[c]) any_nonzero = any_nonzero || e != 0.0;
            // A lambda that clamps every estimate to zero scores as unusable.
            score = any_nonzero ? scaled_cbf_mad(estimates[c], truths).mad
                                : std::numeric_limits<double>::infinity();
        } else {
            score = mad(estimates[c], truths);
        }
        if (score < best_score) {
            best_score = score;
            best_lambda = sorted[c];
        }
    }
    return best_lambda;
}

} // namespace perfusion
