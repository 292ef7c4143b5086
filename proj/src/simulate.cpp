#include "perfusion/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "perfusion/parallel.hpp"

namespace perfusion {

namespace {

void check_range(const Range& r, const char* name) {
    if (!(r.first <= r.second))
        throw std::invalid_argument(std::string("SimConfig: ") + name + " has lo > hi");
}

} // namespace

void SimConfig::validate() const {
    grid.validate();
    check_range(aif_t0_range, "aif_t0_range");
    check_range(aif_alpha_range, "aif_alpha_range");
    check_range(aif_beta_range, "aif_beta_range");
    check_range(aif_peak_range, "aif_peak_range");
    check_range(irf_t0_range, "irf_t0_range");
    check_range(irf_alpha_range, "irf_alpha_range");
    check_range(irf_beta_range, "irf_beta_range");
    check_range(cbv_range, "cbv_range");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("SimConfig: noise_sigma must be >= 0");
    if (!(fine_dt > 0.0)) throw std::invalid_argument("SimConfig: fine_dt must be > 0");
    if (fine_dt > grid.dt() / 10.0)
        throw std::invalid_argument("SimConfig: fine_dt must be <= grid dt / 10");
}

Range cbv_range_for(Target target) {
    return target == Target::Cbf ? Range{0.001, 0.06} : Range{0.02, 0.06};
}

const char* target_name(Target t) { return t == Target::Cbf ? "cbf" : "tmax"; }

Target parse_target(const std::string& name) {
    if (name == "cbf") return Target::Cbf;
    if (name == "tmax") return Target::Tmax;
    throw std::invalid_argument("unknown target: " + name + " (expected cbf or tmax)");
}

GammaParams draw_aif(const SimConfig& cfg, Rng& rng) {
    GammaParams p;
    p.t0 = rng.uniform(cfg.aif_t0_range.first, cfg.aif_t0_range.second);
    p.alpha = rng.uniform(cfg.aif_alpha_range.first, cfg.aif_alpha_range.second);
    p.beta = rng.uniform(cfg.aif_beta_range.first, cfg.aif_beta_range.second);
    const double peak = rng.uniform(cfg.aif_peak_range.first, cfg.aif_peak_range.second);
    p.amp = amp_for_peak(p.t0, p.alpha, p.beta, peak);
    return p;
}

GammaParams draw_irf(const SimConfig& cfg, Rng& rng) {
    GammaParams p;
    p.t0 = rng.uniform(cfg.irf_t0_range.first, cfg.irf_t0_range.second);
    p.alpha = rng.uniform(cfg.irf_alpha_range.first, cfg.irf_alpha_range.second);
    p.beta = rng.uniform(cfg.irf_beta_range.first, cfg.irf_beta_range.second);
    const double cbv = rng.uniform(cfg.cbv_range.first, cfg.cbv_range.second);
    p.amp = amp_for_integral(p.t0, p.alpha, p.beta, cbv);
    return p;
}

std::vector<double> convolve_on_grid(const GammaParams& aif, const GammaParams& irf,
                                     const SimConfig& cfg) {
    const int n = cfg.grid.n_samples;
    const double coarse_dt = cfg.grid.dt();

    // Fine step: largest h <= fine_dt with coarse_dt an integer multiple,
    // so every acquisition time is a fine node.
    const int steps_per_sample = static_cast<int>(std::ceil(coarse_dt / cfg.fine_dt - 1e-12));
    const double h = coarse_dt / steps_per_sample;
    const int n_fine = steps_per_sample * (n - 1) + 1;

    std::vector<double> aif_fine(static_cast<std::size_t>(n_fine));
    std::vector<double> irf_fine(static_cast<std::size_t>(n_fine));
    for (int k = 0; k < n_fine; ++k) {
        const double t = k * h;
        aif_fine[static_cast<std::size_t>(k)] = gamma_variate(t, aif);
        irf_fine[static_cast<std::size_t>(k)] = gamma_variate(t, irf);
    }

    const auto integrand = [&](double t, double s) {
        return gamma_variate(s, aif) * gamma_variate(t - s, irf);
    };

    // TCC(t_i) = integral_0^{t_i} aif(s) irf(t_i - s) ds by the trapezoidal
    // rule on the fine nodes. The integrand can be near-discontinuous where
    // the IRF onset falls (small alpha makes (t-s-t0)^alpha rise almost like
    // a step), so the lattice cell containing s* = t_i - irf.t0 is replaced
    // by a trapezoid sum on a mesh graded geometrically into the onset.
    // Beyond s* the integrand is identically zero.
    std::vector<double> tcc(static_cast<std::size_t>(n), 0.0);
    for (int i = 1; i < n; ++i) {
        const int K = i * steps_per_sample;
        const double t = K * h;
        const double s_star = t - irf.t0;
        if (s_star <= 0.0) continue;

        const int j_k = std::min(K, static_cast<int>(s_star / h));
        double acc = 0.0;
        if (j_k >= 1) {
            acc = 0.5 * (aif_fine[0] * irf_fine[static_cast<std::size_t>(K)] +
                         aif_fine[static_cast<std::size_t>(j_k)] *
                             irf_fine[static_cast<std::size_t>(K - j_k)]);
            for (int j = 1; j < j_k; ++j)
                acc += aif_fine[static_cast<std::size_t>(j)] *
                       irf_fine[static_cast<std::size_t>(K - j)];
        }
        double value = h * acc;

        const double a = j_k * h;
        const double b = std::min(s_star, t);
        if (b > a) {
            double x0 = a;
            double f0 = integrand(t, a);
            const double width = b - a;
            for (int m = 1; m <= 45 && x0 < b; ++m) {
                const double x1 = b - std::ldexp(width, -m);
                if (x1 <= x0) break;
                value += 0.5 * (f0 + integrand(t, x1)) * (x1 - x0);
                x0 = x1;
                f0 = integrand(t, x1);
            }
            value += 0.5 * (f0 + integrand(t, b)) * (b - x0);
        }
        tcc[static_cast<std::size_t>(i)] = value;
    }
    return tcc;
}

Sample synthesize_sample(const GammaParams& aif, const GammaParams& irf, const SimConfig& cfg,
                         Rng& rng) {
    aif.validate();
    irf.validate();

    const int n = cfg.grid.n_samples;
    Sample s;
    s.aif.resize(static_cast<std::size_t>(n));
    s.tcc = convolve_on_grid(aif, irf, cfg);
    for (int i = 0; i < n; ++i)
        s.aif[static_cast<std::size_t>(i)] = gamma_variate(cfg.grid.time(i), aif);

    for (int i = 0; i < n; ++i) s.aif[static_cast<std::size_t>(i)] += cfg.noise_sigma * rng.normal();
    for (int i = 0; i < n; ++i) s.tcc[static_cast<std::size_t>(i)] += cfg.noise_sigma * rng.normal();

    const GammaPeak peak = gamma_peak(irf);
    s.tmax_true = irf.t0 + irf.alpha * irf.beta;
    s.cbf_true = peak.value / kTissueDensity * kCbfUnitFactor;
    s.cbv_true = gamma_integral(irf);
    return s;
}

Dataset generate_dataset(const SimConfig& cfg, std::size_t n_aifs, std::size_t tccs_per_aif) {
    cfg.validate();
    if (n_aifs < 1 || tccs_per_aif < 1)
        throw std::invalid_argument("generate_dataset: counts must be >= 1");

    Dataset ds;
    ds.grid = cfg.grid;
    ds.sigma = cfg.noise_sigma;
    ds.samples.resize(n_aifs * tccs_per_aif);

    parallel_for(ds.samples.size(), [&](std::size_t m) {
        const std::size_t a = m / tccs_per_aif;
        Rng aif_rng(derive_stream(cfg.rng_seed, seed_tag::aif_params, a));
        const GammaParams aif = draw_aif(cfg, aif_rng);

        Rng sample_rng(derive_stream(cfg.rng_seed, seed_tag::sample, m));
        const GammaParams irf = draw_irf(cfg, sample_rng);
        Sample s = synthesize_sample(aif, irf, cfg, sample_rng);
        s.aif_id = static_cast<std::uint32_t>(a);
        ds.samples[m] = std::move(s);
    });
    return ds;
}

} // namespace perfusion
