#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "smolkit/diffusion.hpp"
#include "smolkit/errors.hpp"

using namespace smolkit;

namespace {

std::vector<double> bump(const Grid& g, double width) {
    std::vector<double> v(g.cell_count());
    for (std::size_t c = 0; c < v.size(); ++c) {
        const auto x = g.center(c);
        double r2 = 0.0;
        for (int i = 0; i < g.dim(); ++i) r2 += (x[i] - 0.5 * g.length()) * (x[i] - 0.5 * g.length());
        v[c] = std::exp(-r2 / (2 * width * width));
    }
    return v;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("constant field is invariant and t = 0 is the identity") {
    const Grid g(2, 1.0, 16);
    const std::vector<double> c(g.cell_count(), 3.5);
    for (double v : heat_step(g, c, 0.7, 0.3)) CHECK(v == doctest::Approx(3.5).epsilon(1e-14));
    const auto b = bump(g, 0.1);
    CHECK(heat_step(g, b, 0.7, 0.0) == b);
    CHECK(heat_step(g, b, 0.0, 1.0) == b);
}

TEST_CASE("single Fourier mode decays at the eigenvalue rate") {
    const double L = 2.0, D = 0.3, t = 0.4;
    const Grid g(1, L, 64);
    std::vector<double> v(64);
    for (std::size_t c = 0; c < 64; ++c) v[c] = 1.0 + std::cos(2 * std::numbers::pi * g.center(c)[0] / L);
    const auto out = heat_step(g, v, D, t);
    const double damp = std::exp(-D * std::pow(2 * std::numbers::pi / L, 2) * t);
    for (std::size_t c = 0; c < 64; ++c) {
        CHECK(out[c] == doctest::Approx(1.0 + damp * std::cos(2 * std::numbers::pi * g.center(c)[0] / L)).epsilon(1e-13));
    }
}

TEST_CASE("spectral propagator matches a direct DFT") {
    const Grid g(1, 1.0, 32);
    std::mt19937_64 rng(3);
    const auto v = oracle::random_vector(rng, 32, 0.5, 1.5);
    const auto a = heat_step(g, v, 0.05, 0.1);
    const auto b = oracle::dft_heat_1d(v, 1.0, 0.05, 0.1);
    for (std::size_t c = 0; c < 32; ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-12));
}

TEST_CASE("mean conservation and semigroup law") {
    for (int dim = 1; dim <= 3; ++dim) {
        const Grid g(dim, 1.0, dim == 3 ? 8 : 32);
        const auto b = bump(g, 0.15);
        const auto s1 = heat_step(g, b, 0.2, 0.05);
        CHECK(sum(s1) == doctest::Approx(sum(b)).epsilon(1e-13));
        const auto two = heat_step(g, s1, 0.2, 0.07);
        const auto one = heat_step(g, b, 0.2, 0.12);
        for (std::size_t c = 0; c < one.size(); ++c) CHECK(two[c] == doctest::Approx(one[c]).epsilon(1e-12));
        const double mx = *std::max_element(b.begin(), b.end());
        for (double v : one) CHECK(v <= mx + 1e-9);
    }
}

TEST_CASE("multipliers") {
    const HeatPropagator p(Grid(2, 1.0, 8));
    const auto m = p.multipliers(0.5, 0.1);
    CHECK(m.front() == 1.0);
    for (double v : m) {
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("clipping removes undershoot and keeps the cell sum") {
    const Grid g(1, 1.0, 64);
    std::vector<double> spike(64, 0.0);
    spike[10] = 1.0;
    std::vector<double> v = spike;
    const HeatPropagator p(g);
    const auto info = p.apply(v, 1e-6, 1e-3);
    CHECK(info.clipped > 0.0);
    for (double x : v) CHECK(x >= 0.0);
    CHECK(sum(v) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("heat majorant") {
    const Grid g(1, 1.0, 16);
    const MassField c = make_uniform(g, 4, 1, 2.0);
    const auto dp = DiffusionProfile::power_law(1.0, 0.5, 4);
    for (double v : heat_majorant(c, dp, 0.7)) CHECK(v == doctest::Approx(2.0));

    MassField f(g, 3);
    std::mt19937_64 rng(9);
    f.data() = oracle::random_vector(rng, f.data().size(), 0.0, 1.0);
    const auto u0 = heat_majorant(f, DiffusionProfile::power_law(1.0, 0.5, 3), 0.0);
    for (std::size_t x = 0; x < 16; ++x) CHECK(u0[x] == doctest::Approx(f(1, x) + 2 * f(2, x) + 3 * f(3, x)));

    CHECK_THROWS_AS(heat_majorant(f, DiffusionProfile::custom({1.0, 2.0, 2.0}), 0.1), PreconditionError);
}

TEST_CASE("comparison multiplier") {
    const Grid g(1, 1.0, 128);
    std::vector<double> pt(128, 0.0);
    pt[64] = 1.0;
    const auto same = comparison_multiplier(1.0, 1.0, pt, 0.1, g);
    CHECK(same.max_violation == 0.0);
    const auto r = comparison_multiplier(2.0, 1.0, pt, 0.1, g);
    CHECK(r.max_violation <= 1e-8 * r.scale);
    const std::vector<double> c(128, 1.0);
    CHECK(comparison_multiplier(2.0, 1.0, c, 0.1, g).max_violation == 0.0);
}

TEST_CASE("Crank-Nicolson cross-check converges to the spectral solution") {
    const Grid g(1, 1.0, 64);
    const auto b = bump(g, 0.1);
    const auto exact = heat_step(g, b, 0.01, 0.5);
    auto err = [&](int steps) {
        const auto cn = crank_nicolson(g, b, 0.01, 0.5, steps);
        double e = 0.0;
        for (std::size_t c = 0; c < b.size(); ++c) e = std::max(e, std::fabs(cn[c] - exact[c]));
        return e;
    };
    // Residual is dominated by the second-order spatial stencil once the time error is small.
    CHECK(err(200) < 5e-3);
    const Grid g2(2, 1.0, 16);
    const auto b2 = bump(g2, 0.2);
    const auto cn2 = crank_nicolson(g2, b2, 0.01, 0.1, 20);
    CHECK(sum(cn2) == doctest::Approx(sum(b2)).epsilon(1e-10));
}
