#include "perfusion/gamma.hpp"

#include <cmath>
#include <stdexcept>

namespace perfusion {

void GammaParams::validate() const {
    if (!(t0 >= 0.0)) throw std::invalid_argument("GammaParams: t0 must be >= 0");
    if (!(alpha >= 0.0)) throw std::invalid_argument("GammaParams: alpha must be >= 0");
    if (!(beta > 0.0)) throw std::invalid_argument("GammaParams: beta must be > 0");
    if (!(amp > 0.0)) throw std::invalid_argument("GammaParams: amp must be > 0");
}

double gamma_variate(double t, const GammaParams& p) {
    const double x = t - p.t0;
    if (p.alpha == 0.0) {
        if (x < 0.0) return 0.0;
        return p.amp * std::exp(-x / p.beta);
    }
    if (x <= 0.0) return 0.0;
    return p.amp * std::pow(x, p.alpha) * std::exp(-x / p.beta);
}

GammaPeak gamma_peak(const GammaParams& p) {
    if (p.alpha == 0.0) return {p.t0, p.amp};
    const double ab = p.alpha * p.beta;
    return {p.t0 + ab, p.amp * std::pow(ab, p.alpha) * std::exp(-p.alpha)};
}

double gamma_integral(const GammaParams& p) {
    return p.amp * std::pow(p.beta, p.alpha + 1.0) * std::tgamma(p.alpha + 1.0);
}

double amp_for_peak(double t0, double alpha, double beta, double peak) {
    GammaParams unit{t0, alpha, beta, 1.0};
    return peak / gamma_peak(unit).value;
}

double amp_for_integral(double t0, double alpha, double beta, double area) {
    GammaParams unit{t0, alpha, beta, 1.0};
    return area / gamma_integral(unit);
}

} // namespace perfusion
