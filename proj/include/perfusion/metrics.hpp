// Evaluation metrics: plain MAD for Tmax, optimally rescaled MAD for CBF.
//
// The CBF rescaling reflects clinical use of relative CBF: before scoring,
// all estimates are multiplied by the single factor s* that minimizes the
// MAD. That L1 problem has an exact combinatorial solution (see
// optimal_scale), so no iterative search is involved.

#pragma once

#include <cstddef>
#include <span>

namespace perfusion {

struct EvalResult {
    double mad = 0.0;
    double optimal_scale = 1.0; // 1.0 for Tmax
    std::size_t n = 0;
};

// Mean absolute difference. Throws on empty or mismatched inputs.
double mad(std::span<const double> estimates, std::span<const double> truths);

// The scale s* minimizing sum_i |s*e_i - t_i|.
//
// For e_i != 0 each term is |e_i| * |s - t_i/e_i|, so the objective is a
// weighted L1 distance over the ratios t_i/e_i with weights |e_i| and the
// minimizer is their weighted median (first ratio, in ascending order, whose
// cumulative weight reaches half the total - which picks the lower end of a
// flat optimum). Zero estimates contribute a constant and are skipped; all
// estimates zero is an error.
double optimal_scale(std::span<const double> estimates, std::span<const double> truths);

// MAD after applying the optimal scale; records the scale used.
EvalResult scaled_cbf_mad(std::span<const double> estimates, std::span<const double> truths);

} // namespace perfusion
