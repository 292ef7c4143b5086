// Gamma-variate curves: the analytic model for AIFs and IRFs.
//
//   g(t) = amp * (t - t0)^alpha * exp(-(t - t0)/beta)   for t past onset
//
// Peak position/value and the total integral have closed forms, which is
// what makes these curves usable as analytic ground truth.

#pragma once

#include <utility>

namespace perfusion {

struct GammaParams {
    double t0 = 0.0;    // onset time, s
    double alpha = 1.0; // shape exponent
    double beta = 1.0;  // decay scale, s
    double amp = 1.0;   // amplitude (HU for AIF, 1/s for IRF)

    void validate() const;
};

// Curve value at time t. Zero before onset; for alpha == 0 the curve jumps
// to amp exactly at t = t0 (discontinuous onset, a permitted degenerate case).
double gamma_variate(double t, const GammaParams& p);

struct GammaPeak {
    double t_peak;
    double value;
};

// Analytic maximum: t_peak = t0 + alpha*beta, value = amp*(alpha*beta)^alpha*e^-alpha.
GammaPeak gamma_peak(const GammaParams& p);

// Closed form of the integral from onset to infinity: amp * beta^(alpha+1) * Gamma(alpha+1).
double gamma_integral(const GammaParams& p);

// Amplitude such that gamma_peak(...).value == peak for the given shape.
double amp_for_peak(double t0, double alpha, double beta, double peak);

// Amplitude such that gamma_integral(...) == area for the given shape.
double amp_for_integral(double t0, double alpha, double beta, double area);

} // namespace perfusion
