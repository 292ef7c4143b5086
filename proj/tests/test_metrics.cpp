#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "perfusion/errors.hpp"
#include "perfusion/metrics.hpp"
#include "perfusion/rng.hpp"

using namespace perfusion;

namespace {

double l1_objective(double s, const std::vector<double>& e, const std::vector<double>& t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) acc += std::abs(s * e[i] - t[i]);
    return acc;
}

} // namespace

TEST_CASE("mad basics") {
    CHECK(mad(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0);
    CHECK(mad(std::vector<double>{1, 3}, std::vector<double>{2, 2}) == 1.0);
    CHECK(mad(std::vector<double>{0}, std::vector<double>{7}) == 7.0);
    CHECK_THROWS_AS(mad(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(mad(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("optimal_scale point cases") {
    CHECK(optimal_scale(std::vector<double>{1, 2}, std::vector<double>{2, 4}) == 2.0);
    CHECK(optimal_scale(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 9}) == 2.0);
    CHECK(optimal_scale(std::vector<double>{1}, std::vector<double>{5}) == 5.0);
}

TEST_CASE("optimal_scale matches golden-section search on the objective") {
    const std::vector<double> e{1, 1, 1};
    const std::vector<double> t{1, 2, 9};
    const double s_star = optimal_scale(e, t);
    const double s_gold = oracles::golden_section_min(
        [&](double s) { return l1_objective(s, e, t); }, 0.01, 100.0);
    CHECK(l1_objective(s_star, e, t) <= l1_objective(s_gold, e, t) + 1e-9);
}

TEST_CASE("optimal_scale matches dense grid scan on random instances") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 40));
        std::vector<double> e(n), t(n);
        for (std::size_t i = 0; i < n; ++i) {
            e[i] = rng.uniform(0.05, 10.0);
            t[i] = rng.uniform(0.0, 10.0);
        }
        const double s_star = optimal_scale(e, t);
        const double f_star = l1_objective(s_star, e, t);

        double best = f_star;
        for (int k = 0; k <= 100000; ++k) {
            const double s = 0.001 + (20.0 - 0.001) * k / 100000.0;
            best = std::min(best, l1_objective(s, e, t));
        }
        CHECK(f_star <= best * (1.0 + 1e-9) + 1e-12);
    }
}

TEST_CASE("optimal_scale skips zero estimates and rejects all-zero input") {
    // The zero entry contributes a constant loss; the rest decide the scale.
    CHECK(optimal_scale(std::vector<double>{0, 1}, std::vector<double>{100, 3}) == 3.0);
    CHECK_THROWS_AS(optimal_scale(std::vector<double>{0, 0}, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("optimal_scale equivariance under estimate rescaling") {
    Rng rng(9);
    // Power-of-two estimates make every division exact, so the identity
    // optimal_scale(c*e, t) = optimal_scale(e, t)/c holds bit for bit.
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 30));
        std::vector<double> e(n), t(n);
        for (std::size_t i = 0; i < n; ++i) {
            e[i] = std::ldexp(1.0, rng.uniform_int(-3, 6));
            t[i] = rng.uniform(0.1, 50.0);
        }
        const double s1 = optimal_scale(e, t);
        for (const double c : {0.5, 2.0, 10.0}) {
            std::vector<double> ce(e);
            for (double& v : ce) v *= c;
            CHECK(optimal_scale(ce, t) == s1 / c);
        }
    }
}

TEST_CASE("scaled_cbf_mad") {
    SUBCASE("proportional estimates rescale to zero error") {
        const std::vector<double> t{3, 5, 11};
        std::vector<double> e(t);
        for (double& v : e) v *= 4.0;
        const EvalResult r = scaled_cbf_mad(e, t);
        CHECK(r.mad == 0.0);
        CHECK(r.optimal_scale == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(r.n == 3);
    }
    SUBCASE("identity estimates give scale 1") {
        const std::vector<double> t{3, 5, 11};
        const EvalResult r = scaled_cbf_mad(t, t);
        CHECK(r.mad == 0.0);
        CHECK(r.optimal_scale == 1.0);
    }
    SUBCASE("returned scale beats a dense scan even with an outlier") {
        std::vector<double> e{1.0, 2.0, 3.0, 4.0, 50.0};
        const std::vector<double> t{2.1, 3.9, 6.2, 8.0, 10.0};
        const EvalResult r = scaled_cbf_mad(e, t);
        for (int k = 1; k <= 10000; ++k) {
            const double s = 5.0 * k / 10000.0;
            CHECK(r.mad * e.size() <= l1_objective(s, e, t) + 1e-9);
        }
    }
    SUBCASE("invariant under positive rescaling of estimates") {
        Rng rng(31);
        std::vector<double> e(50), t(50);
        for (std::size_t i = 0; i < e.size(); ++i) {
            e[i] = rng.uniform(0.1, 100.0);
            t[i] = rng.uniform(0.1, 100.0);
        }
        const double base = scaled_cbf_mad(e, t).mad;
        for (const double c : {0.037, 3.0, 260.0}) {
            std::vector<double> ce(e);
            for (double& v : ce) v *= c;
            CHECK(scaled_cbf_mad(ce, t).mad == doctest::Approx(base).epsilon(1e-12));
        }
    }
}
