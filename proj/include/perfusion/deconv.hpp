// Baseline estimator: Tikhonov-regularized SVD deconvolution of the TCC by
// the AIF, with the causal convolution discretized by a lower-triangular
// trapezoidal (Volterra) matrix. CBF is read from the recovered IRF maximum,
// Tmax from its argmax with an optional three-point parabola refinement.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "perfusion/grid.hpp"
#include "perfusion/sample.hpp"
#include "perfusion/simulate.hpp"

namespace perfusion {

struct DeconvConfig {
    double lambda_rel = 0.01; // regularization relative to the largest singular value
    AcquisitionGrid grid{};
    bool spline_refine = true; // continuous Tmax via quadratic fit around the peak

    void validate() const;
};

struct Irf {
    std::vector<double> values; // 1/s
    AcquisitionGrid grid;
};

// Lower-triangular n x n matrix M with M(i,j) = dt * w * aif[i-j] for j <= i,
// where w = 1/2 at j = 0 and j = i, else 1. M*h is then the trapezoidal
// quadrature of integral_0^{t_i} aif(t_i - s) h(s) ds.
Eigen::MatrixXd build_volterra_matrix(std::span<const double> aif, const AcquisitionGrid& grid);

// Singular value attenuation f = s^2 / (s^2 + lambda^2).
double tikhonov_filter(double singular_value, double lambda);

// Precomputed SVD of a Volterra matrix, reusable across lambda values.
struct VolterraSvd {
    Eigen::MatrixXd u;
    Eigen::VectorXd singular_values;
    Eigen::MatrixXd v;
    AcquisitionGrid grid;

    static VolterraSvd compute(std::span<const double> aif, const AcquisitionGrid& grid);

    // Filtered inverse applied to the TCC: h = sum_k f_k (u_k . tcc) / s_k v_k
    // with lambda = lambda_rel * s_max. The result is invariant under
    // simultaneous sign flips of matching U/V columns. Throws NumericError
    // if the matrix is all zero (s_max = 0).
    Irf solve(std::span<const double> tcc, double lambda_rel) const;
};

// One-shot deconvolution: SVD + filtered solve.
Irf tikhonov_svd_solve(const Eigen::MatrixXd& volterra, std::span<const double> tcc,
                       double lambda_rel, const AcquisitionGrid& grid);

// CBF from the discrete IRF maximum, clamped at zero (heavy noise can make
// the recovered peak negative), converted to ml/100g/min.
double estimate_cbf(const Irf& irf, double rho = kTissueDensity);

// Tmax from the discrete argmax (ties -> earliest time). With spline_refine,
// an interior peak is replaced by the vertex of the parabola through the
// three surrounding points, clamped to that bracket.
double estimate_tmax(const Irf& irf, bool spline_refine = true);

struct DeconvEstimate {
    double cbf;
    double tmax;
};

DeconvEstimate deconvolve_sample(const Sample& s, const DeconvConfig& cfg);

// Per-sample estimates for a whole dataset (parallel across samples).
std::vector<double> deconvolve_dataset(const Dataset& ds, const DeconvConfig& cfg, Target target);

// The candidate regularization strengths: 0.01 * 2^k, k = 0..9.
std::vector<double> lambda_grid();

// Pick the candidate minimizing the evaluation metric (optimal-scale CBF MAD
// or Tmax MAD) on the training set; ties go to the smaller value. Training
// sets larger than subsample_cap are subsampled with a seeded shuffle.
double tune_lambda(const Dataset& train, Target target, const std::vector<double>& candidates,
                   std::size_t subsample_cap = 10000, std::uint64_t subsample_seed = 0,
                   bool spline_refine = true);

} // namespace perfusion
