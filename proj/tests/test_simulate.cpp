#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "perfusion/simulate.hpp"

using namespace perfusion;

TEST_CASE("acquisition grid endpoints are exact") {
    const AcquisitionGrid g{19, 40.0};
    CHECK(g.time(0) == 0.0);
    CHECK(g.time(18) == 40.0);
    CHECK(g.dt() == doctest::Approx(40.0 / 18.0).epsilon(1e-15));
    CHECK_THROWS_AS((AcquisitionGrid{1, 40.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((AcquisitionGrid{19, 0.0}.validate()), std::invalid_argument);
}

TEST_CASE("sim config validation") {
    SimConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    SimConfig bad = cfg;
    bad.fine_dt = 1.0; // above dt/10
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.noise_sigma = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.aif_alpha_range = {3.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("draw_aif hits the requested peak") {
    SimConfig cfg;
    Rng rng(1);
    for (int trial = 0; trial < 10000; ++trial) {
        const GammaParams p = draw_aif(cfg, rng);
        const double peak = gamma_peak(p).value;
        CHECK(peak >= 100.0);
        CHECK(peak <= 500.0);
        CHECK(p.t0 >= 0.0);
        CHECK(p.t0 <= 15.0);
        CHECK(p.alpha >= 1.5);
        CHECK(p.alpha <= 3.5);
        CHECK(p.beta >= 1.5);
        CHECK(p.beta <= 3.5);
    }
}

TEST_CASE("draw_irf hits the requested CBV") {
    SimConfig cfg;
    SUBCASE("full range") {
        Rng rng(2);
        for (int trial = 0; trial < 10000; ++trial) {
            const GammaParams p = draw_irf(cfg, rng);
            const double cbv = gamma_integral(p);
            CHECK(cbv >= cfg.cbv_range.first);
            CHECK(cbv <= cfg.cbv_range.second);
        }
    }
    SUBCASE("tmax range") {
        cfg.cbv_range = cbv_range_for(Target::Tmax);
        Rng rng(3);
        for (int trial = 0; trial < 1000; ++trial) {
            const double cbv = gamma_integral(draw_irf(cfg, rng));
            CHECK(cbv >= 0.02);
            CHECK(cbv <= 0.06);
        }
    }
}

TEST_CASE("synthesized sample carries analytic ground truth") {
    SimConfig cfg;
    cfg.noise_sigma = 0.0;
    const GammaParams aif{5.0, 2.0, 2.0, 100.0};
    const GammaParams irf{4.0, 0.25, 3.0, 0.01};
    Rng rng(7);
    const Sample s = synthesize_sample(aif, irf, cfg, rng);
    CHECK(s.tmax_true == doctest::Approx(4.0 + 0.25 * 3.0).epsilon(1e-15));
    CHECK(s.cbv_true == doctest::Approx(gamma_integral(irf)).epsilon(1e-15));
    CHECK(s.cbf_true ==
          doctest::Approx(gamma_peak(irf).value / 1.04 * 6000.0).epsilon(1e-12));
    CHECK(s.aif.size() == 19);
    CHECK(s.tcc.size() == 19);
}

TEST_CASE("near-Dirac IRF reproduces a delayed scaled AIF") {
    SimConfig cfg;
    cfg.noise_sigma = 0.0;
    cfg.fine_dt = 0.001; // the near-delta needs a fine integration step
    const GammaParams aif{2.0, 2.5, 2.0, 50.0};
    const double cbv = 0.04;
    const GammaParams irf{4.4444444444444446, 0.0, 0.01, amp_for_integral(0.0, 0.0, 0.01, cbv)};
    Rng rng(1);
    const Sample s = synthesize_sample(aif, irf, cfg, rng);

    const double peak = gamma_peak(aif).value;
    for (int i = 0; i < cfg.grid.n_samples; ++i) {
        const double expected = cbv * gamma_variate(cfg.grid.time(i) - irf.t0, aif);
        CHECK(std::abs(s.tcc[static_cast<std::size_t>(i)] - expected) < 0.01 * peak);
    }
}

TEST_CASE("same seed gives a bit-identical sample") {
    SimConfig cfg;
    cfg.noise_sigma = 2.0;
    const GammaParams aif{5.0, 2.0, 2.0, 100.0};
    const GammaParams irf{4.0, 0.25, 3.0, 0.01};
    Rng r1(123), r2(123);
    const Sample a = synthesize_sample(aif, irf, cfg, r1);
    const Sample b = synthesize_sample(aif, irf, cfg, r2);
    CHECK(a.aif == b.aif);
    CHECK(a.tcc == b.tcc);
}

TEST_CASE("convolution converges under fine grid refinement") {
    SimConfig coarse, fine;
    coarse.noise_sigma = fine.noise_sigma = 0.0;
    coarse.fine_dt = 0.01;
    fine.fine_dt = 0.005;

    Rng draw_rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const GammaParams aif = draw_aif(coarse, draw_rng);
        const GammaParams irf = draw_irf(coarse, draw_rng);
        const auto a = convolve_on_grid(aif, irf, coarse);
        const auto b = convolve_on_grid(aif, irf, fine);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-3);
    }
}

TEST_CASE("convolution is linear in the IRF amplitude") {
    SimConfig cfg;
    cfg.noise_sigma = 0.0;
    const GammaParams aif{3.0, 2.0, 3.0, 80.0};
    GammaParams irf{2.0, 0.3, 3.5, 0.008};
    const auto base = convolve_on_grid(aif, irf, cfg);
    irf.amp *= 2.0;
    const auto doubled = convolve_on_grid(aif, irf, cfg);
    for (std::size_t i = 1; i < base.size(); ++i)
        CHECK(doubled[i] == doctest::Approx(2.0 * base[i]).epsilon(1e-9));
}

TEST_CASE("shifting the IRF onset by one grid step shifts the TCC") {
    SimConfig cfg;
    cfg.noise_sigma = 0.0;
    const double dt = cfg.grid.dt();
    const GammaParams aif{1.0, 2.0, 2.5, 120.0};
    GammaParams irf{3.0, 0.2, 3.0, 0.01};
    const auto base = convolve_on_grid(aif, irf, cfg);
    irf.t0 += dt;
    const auto shifted = convolve_on_grid(aif, irf, cfg);

    double peak = 0.0;
    for (double v : base) peak = std::max(peak, v);
    for (std::size_t i = 1; i < shifted.size(); ++i)
        CHECK(std::abs(shifted[i] - base[i - 1]) < 1e-3 * peak);
}

TEST_CASE("trapezoid convolution against adaptive quadrature") {
    SimConfig cfg;
    cfg.noise_sigma = 0.0;
    const GammaParams aif{2.0, 1.8, 2.2, 90.0};
    const GammaParams irf{1.0, 0.4, 4.0, 0.012};
    const auto tcc = convolve_on_grid(aif, irf, cfg);
    for (const int i : {3, 9, 18}) {
        const double t = cfg.grid.time(i);
        const double ref = oracles::integrate(
            [&](double s) { return gamma_variate(s, aif) * gamma_variate(t - s, irf); }, 0.0, t,
            1e-10);
        // Trapezoid at the default fine step carries ~1e-4 relative error.
        CHECK(tcc[static_cast<std::size_t>(i)] == doctest::Approx(ref).epsilon(2e-4));
    }
}

TEST_CASE("generate_dataset shapes, ids and reproducibility") {
    SimConfig cfg;
    cfg.rng_seed = 42;

    SUBCASE("single AIF shared by all samples") {
        const Dataset ds = generate_dataset(cfg, 1, 3);
        REQUIRE(ds.size() == 3);
        for (const Sample& s : ds.samples) CHECK(s.aif_id == 0);
    }
    SUBCASE("counts and distinct ids") {
        const Dataset ds = generate_dataset(cfg, 100, 10);
        REQUIRE(ds.size() == 1000);
        std::set<std::uint32_t> ids;
        for (const Sample& s : ds.samples) ids.insert(s.aif_id);
        CHECK(ids.size() == 100);
    }
    SUBCASE("bit-for-bit reproducible") {
        const Dataset a = generate_dataset(cfg, 50, 2);
        const Dataset b = generate_dataset(cfg, 50, 2);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a.samples[i].aif == b.samples[i].aif);
            CHECK(a.samples[i].tcc == b.samples[i].tcc);
            CHECK(a.samples[i].cbf_true == b.samples[i].cbf_true);
        }
    }
    SUBCASE("counts below one are rejected") {
        CHECK_THROWS_AS(generate_dataset(cfg, 0, 1), std::invalid_argument);
        CHECK_THROWS_AS(generate_dataset(cfg, 1, 0), std::invalid_argument);
    }
}

TEST_CASE("samples sharing an AIF have the same underlying curve parameters") {
    SimConfig cfg;
    cfg.rng_seed = 9;
    cfg.noise_sigma = 0.0;
    const Dataset ds = generate_dataset(cfg, 2, 3);
    REQUIRE(ds.size() == 6);
    // At sigma=0 the AIF vectors of samples 0..2 are identical (same draw).
    CHECK(ds.samples[0].aif == ds.samples[1].aif);
    CHECK(ds.samples[1].aif == ds.samples[2].aif);
    CHECK(ds.samples[3].aif == ds.samples[4].aif);
    CHECK(ds.samples[0].aif != ds.samples[3].aif);
    // TCCs differ (distinct IRFs).
    CHECK(ds.samples[0].tcc != ds.samples[1].tcc);
}
