#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "smolkit/errors.hpp"
#include "smolkit/field.hpp"

using namespace smolkit;

namespace {

MassField random_field(const Grid& g, Mass N, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    MassField f(g, N);
    f.data() = oracle::random_vector(rng, f.data().size(), 0.0, 1.0);
    return f;
}

}  // namespace

TEST_CASE("grid geometry") {
    const Grid g(2, 2.0, 8);
    CHECK(g.cell_count() == 64);
    CHECK(g.cell_volume() == doctest::Approx(1.0 / 16));
    CHECK(g.volume() == doctest::Approx(4.0));
    for (std::size_t c = 0; c < g.cell_count(); ++c) CHECK(g.index(g.coords(c)) == c);
    CHECK(g.cell_of(g.center(37)) == 37);
    CHECK(g.cell_of({-0.1, 2.1, 0.0}) == g.index({7, 0, 0}));
    CHECK(g.min_image_distance(g.index({0, 0, 0}), g.index({7, 0, 0})) == doctest::Approx(0.25));
    CHECK_THROWS_AS(Grid(1, 1.0, 12), PreconditionError);
    CHECK_THROWS_AS(Grid(1, 1.0, 1), PreconditionError);
    CHECK_THROWS_AS(Grid(4, 1.0, 8), PreconditionError);
}

TEST_CASE("moment examples") {
    const Grid g(1, 1.0, 2);
    MassField f(g, 3);
    f(1, 0) = 2.0;
    f(3, 0) = 1.0;
    const auto d1 = DiffusionProfile::constant(1.0, 3);
    CHECK(moment(f, {2.0, false}, d1)[0] == 11.0);
    CHECK(moment(make_uniform(g, 3, 1, 0.7), {0.0, false}, d1)[1] == 0.7);

    const Grid g2(2, 1.0, 2);
    MassField h(g2, 2);
    h(1, 0) = 1.0;
    h(2, 0) = 1.0;
    const auto dinv = DiffusionProfile::power_law(1.0, 1.0, 2);
    CHECK(moment(h, {1.0, true}, dinv)[0] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("first moment integrates to total mass") {
    const Grid g(2, 1.5, 8);
    const MassField f = random_field(g, 12, 1);
    const auto d = DiffusionProfile::constant(1.0, 12);
    const double via_moment = integrate(g, moment(f, {1.0, false}, d));
    CHECK(via_moment == doctest::Approx(total_mass(f).excluding_gel).epsilon(1e-12));
}

TEST_CASE("moment is linear") {
    const Grid g(1, 1.0, 16);
    const MassField a = random_field(g, 10, 2), b = random_field(g, 10, 3);
    MassField s(g, 10);
    for (std::size_t i = 0; i < s.data().size(); ++i) s.data()[i] = a.data()[i] + b.data()[i];
    const auto d = DiffusionProfile::power_law(1.0, 0.3, 10);
    for (bool hat : {false, true}) {
        const auto ma = moment(a, {1.5, hat}, d), mb = moment(b, {1.5, hat}, d), ms = moment(s, {1.5, hat}, d);
        for (std::size_t c = 0; c < ms.size(); ++c) CHECK(ms[c] == doctest::Approx(ma[c] + mb[c]).epsilon(1e-12));
    }
}

TEST_CASE("high moments accumulate without overflow and reject it when unavoidable") {
    const Grid g(1, 1.0, 2);
    MassField f(g, 1000);
    f(1000, 0) = 1.0;
    const auto d = DiffusionProfile::constant(1.0, 1000);
    CHECK(moment(f, {6.0, false}, d)[0] == doctest::Approx(1e18));
    f(1000, 0) = 1e300;
    CHECK_THROWS(moment(f, {6.0, false}, d));
}

TEST_CASE("pair moments") {
    const Grid g(1, 1.0, 2);
    const MassField f = make_uniform(g, 2, 1, 1.0);
    const auto d = DiffusionProfile::constant(1.0, 2);
    const Kernel k = Kernel::constant(1.0, 2);
    CHECK(pair_moment_Y(f, 1.0, d, k, false)[0] == 4.0);
    CHECK(pair_moment_Y(f, 1.0, d, k, true)[0] == 2.0);
    CHECK(pair_moment_Y(MassField(g, 2), 1.0, d, k, true)[0] == 0.0);

    // Brute-force double loop at N = 16.
    const Mass N = 16;
    const MassField r = random_field(g, N, 4);
    const auto dp = DiffusionProfile::power_law(1.0, 0.5, N);
    const Kernel kk = Kernel::two_exponent(0.3, 0.8, N);
    for (double a : {0.0, 1.0, 1.7}) {
        double y = 0.0, yh = 0.0;
        for (int n = 1; n <= N; ++n) {
            for (int m = 1; m <= N; ++m) {
                const double ff = r(n, 0) * r(m, 0);
                y += n * m * (std::pow(n, a) + std::pow(m, a)) * (dp(n) + dp(m)) * ff;
                yh += (std::pow(n, a) * m + std::pow(m, a) * n) * kk(n, m) * ff;
            }
        }
        CHECK(pair_moment_Y(r, a, dp, kk, false)[0] == doctest::Approx(y).epsilon(1e-12));
        CHECK(pair_moment_Y(r, a, dp, kk, true)[0] == doctest::Approx(yh).epsilon(1e-12));
    }
}

TEST_CASE("total mass") {
    const Grid g(3, 2.0, 4);
    CHECK(total_mass(make_uniform(g, 4, 1, 1.0)).excluding_gel == doctest::Approx(8.0));
    CHECK(total_mass(make_uniform(g, 4, 2, 0.5)).excluding_gel == doctest::Approx(8.0));
    MassField e(g, 4);
    e.gel_reservoir = 3.0;
    CHECK(total_mass(e).excluding_gel == 0.0);
    CHECK(total_mass(e).including_gel == 3.0);
    CHECK(total_number(make_uniform(g, 4, 2, 0.5)) == doctest::Approx(4.0));
}

TEST_CASE("phi0") {
    CHECK(phi0(0.25, 1) == 0.375);
    CHECK(phi0(0.6, 1) == 0.0);
    CHECK(phi0(2.0, 3) == 0.5);
    CHECK(phi0(0.5, 2) == doctest::Approx(-std::log(0.5) / (2 * std::numbers::pi)));
    CHECK(phi0(1.5, 2) == 0.0);
    CHECK(std::isinf(phi0(0.0, 2)));
    CHECK(std::isinf(phi0(0.0, 3)));
    for (int dim = 1; dim <= 3; ++dim) {
        double prev = phi0(1e-3, dim);
        for (double r = 2e-3; r < 3.0; r += 1e-3) {
            const double v = phi0(r, dim);
            REQUIRE(v >= 0.0);
            REQUIRE(v <= prev + 1e-15);
            prev = v;
        }
    }
}

TEST_CASE("initial data functionals") {
    const Grid g(1, 1.0, 16);
    const auto z = initial_data_functionals(MassField(g, 4), 2.0);
    CHECK(z.A1 == 0.0);
    CHECK(z.A2 == 0.0);
    CHECK(z.A3 == 0.0);

    CHECK(initial_data_functionals(make_uniform(g, 4, 1, 1.0), 2.0).A3 == doctest::Approx(1.0));

    // Point mass of total mass 1 in one cell: direct double sum over offsets.
    MassField f(g, 1);
    const double h = g.spacing();
    f(1, 5) = 1.0 / h;
    double a1 = 0.0, a2 = 0.0;
    for (std::size_t x = 0; x < 16; ++x) {
        double s = 0.0;
        for (std::size_t y = 0; y < 16; ++y) {
            long off = std::labs(static_cast<long>(x) - static_cast<long>(y));
            off = std::min<long>(off, 16 - off);
            const double w = phi0(off * h, 1);
            s += f(1, y) * w * h;
            a1 += f(1, x) * f(1, y) * w * h * h;
        }
        a2 = std::max(a2, s);
    }
    const auto r = initial_data_functionals(f, 1.0);
    CHECK(r.A1 == doctest::Approx(a1).epsilon(1e-12));
    CHECK(r.A2 == doctest::Approx(a2).epsilon(1e-12));
    CHECK_FALSE(r.self_pairs_skipped);
    CHECK(initial_data_functionals(make_uniform(Grid(2, 1.0, 4), 1, 1, 1.0), 1.0).self_pairs_skipped);
}

TEST_CASE("field validity and helpers") {
    const Grid g(1, 1.0, 8);
    MassField f = make_uniform(g, 3, 2, 1.0);
    CHECK(f.valid());
    CHECK(f.species_is_zero(1));
    CHECK_FALSE(f.species_is_zero(2));
    f(1, 3) = -1.0;
    CHECK_FALSE(f.valid());
    f(1, 3) = std::nan("");
    CHECK_FALSE(f.valid());

    MassField blob(g, 1);
    add_gaussian(blob, 1, 1.0, 0.1, {0.0, 0.0, 0.0});
    CHECK(blob(1, 0) == doctest::Approx(std::exp(-0.0625 * 0.0625 / 0.02)));
    CHECK(blob(1, 7) == doctest::Approx(blob(1, 0)));  // minimal image
}
