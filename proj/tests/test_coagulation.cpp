#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "smolkit/coagulation.hpp"
#include "smolkit/errors.hpp"

using namespace smolkit;

namespace {

const Grid kCell(1, 1.0, 2);

MassField from_values(const std::vector<double>& c) {
    MassField f(kCell, static_cast<Mass>(c.size()));
    for (std::size_t n = 0; n < c.size(); ++n) {
        f(static_cast<Mass>(n + 1), 0) = c[n];
        f(static_cast<Mass>(n + 1), 1) = 0.5 * c[n];
    }
    return f;
}

Kernel random_kernel(std::mt19937_64& rng, Mass N) {
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<double> t(static_cast<std::size_t>(N * N));
    for (Mass i = 0; i < N; ++i) {
        for (Mass j = 0; j <= i; ++j) t[i * N + j] = t[j * N + i] = u(rng);
    }
    return Kernel::custom(t, N);
}

}  // namespace

TEST_CASE("gain examples") {
    const Kernel one = Kernel::constant(1.0, 4);
    const MassField mono = from_values({1, 0, 0, 0});
    CHECK(gain(mono, one, 2)[0] == 1.0);
    CHECK(gain(mono, one, 3)[0] == 0.0);
    CHECK(gain(mono, one, 1)[0] == 0.0);
    CHECK(gain(from_values({1, 1, 0, 0}), one, 3)[0] == 2.0);
    CHECK(gain(from_values({0, 0, 0, 0}), one, 4)[0] == 0.0);
}

TEST_CASE("loss examples") {
    CHECK(loss(from_values({1, 0}), Kernel::constant(1.0, 2), 1, {TruncationKind::GelReservoir, 2})[0] == 2.0);
    CHECK(loss(from_values({0, 1}), Kernel::constant(5.0, 2), 2, {TruncationKind::Cutoff, 2})[0] == 0.0);
    CHECK(loss(from_values({1, 1}), Kernel::constant(1.0, 2), 1, {TruncationKind::GelReservoir, 2})[0] == 4.0);
}

TEST_CASE("reaction rate examples") {
    const auto r = reaction_rates(from_values({1, 0, 0, 0}), Kernel::constant(1.0, 4), {TruncationKind::Cutoff, 4});
    CHECK(r(1, 0) == -2.0);
    CHECK(r(2, 0) == 1.0);
    CHECK(r(1, 0) + 2 * r(2, 0) == 0.0);

    const auto g = reaction_rates(from_values({1}), Kernel::constant(1.0, 1), {TruncationKind::GelReservoir, 1});
    CHECK(g(1, 0) == -2.0);
    CHECK(g.flux_to_gel[0] == 2.0);
}

TEST_CASE("rates agree with the ordered-pair oracle on random instances") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Mass N = 2 + trial % 9;
        const Kernel k = random_kernel(rng, N);
        auto c = oracle::random_vector(rng, static_cast<std::size_t>(N), 0.0, 1.5);
        if (trial % 3 == 0) c[static_cast<std::size_t>(N - 1)] = 0.0;
        for (auto kind : {TruncationKind::Cutoff, TruncationKind::GelReservoir}) {
            const TruncationPolicy pol(kind, N);
            std::vector<double> q(c.size());
            const double flux = cell_reaction_rates(c, k, pol, q);
            const auto ref = oracle::pair_rates(c, [&](int n, int m) { return k(n, m); },
                                                kind == TruncationKind::GelReservoir);
            double scale = 0.0;
            for (double v : ref.q) scale = std::max(scale, std::fabs(v));
            for (std::size_t n = 0; n < c.size(); ++n) REQUIRE(std::fabs(q[n] - ref.q[n]) <= 1e-13 * (1 + scale));
            CHECK(flux == doctest::Approx(ref.flux).epsilon(1e-12));

            // Mass balance and number depletion.
            double mass = 0.0, number = 0.0;
            for (std::size_t n = 0; n < c.size(); ++n) {
                mass += (n + 1.0) * q[n];
                number += q[n];
            }
            CHECK(std::fabs(mass + flux) <= 1e-12 * (1 + flux + scale * N * N));
            CHECK(number <= 1e-13 * (1 + scale));
        }
    }
}

TEST_CASE("absent species only gain") {
    std::mt19937_64 rng(5);
    const Mass N = 10;
    const Kernel k = random_kernel(rng, N);
    auto c = oracle::random_vector(rng, N, 0.1, 1.0);
    c[3] = 0.0;
    c[6] = 0.0;
    std::vector<double> q(N);
    cell_reaction_rates(c, k, {TruncationKind::GelReservoir, N}, q);
    CHECK(q[3] >= 0.0);
    CHECK(q[6] >= 0.0);
}

TEST_CASE("weighted sum examples") {
    const Kernel one = Kernel::constant(1.0, 4);
    const auto ident = weighted_sum(from_values({0.3, 0.2, 0.7, 0.1}), Kernel::sum(1.0, 4),
                                    [](Mass n) { return double(n); }, {TruncationKind::Cutoff, 4});
    CHECK(ident[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    const auto sq = weighted_sum(from_values({1, 0, 0, 0}), one, [](Mass n) { return double(n) * n; },
                                 {TruncationKind::Cutoff, 4});
    CHECK(sq[0] == 2.0);
}

TEST_CASE("weighted sum equals sum phi(n) Q_n and the pair oracle") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const Mass N = 2 + trial % 15;
        const Kernel k = random_kernel(rng, N);
        const auto c = oracle::random_vector(rng, N, 0.0, 1.0);
        const MassField f = from_values(c);
        const auto phi = [&](Mass n) { return std::sin(0.3 * n) + 0.01 * n * n; };
        for (auto kind : {TruncationKind::Cutoff, TruncationKind::GelReservoir}) {
            const TruncationPolicy pol(kind, N);
            const auto ws = weighted_sum(f, k, phi, pol);
            const double ref = oracle::pair_weighted_sum(c, [&](int n, int m) { return k(n, m); }, phi,
                                                         kind == TruncationKind::GelReservoir);
            CHECK(ws[0] == doctest::Approx(ref).epsilon(1e-12).scale(1.0));
            if (kind == TruncationKind::Cutoff) {
                const auto rates = reaction_rates(f, k, pol);
                double s = 0.0;
                for (Mass n = 1; n <= N; ++n) s += phi(n) * rates(n, 0);
                CHECK(ws[0] == doctest::Approx(s).epsilon(1e-12).scale(1.0));
            }
        }
    }
}

TEST_CASE("truncation policy") {
    CHECK(TruncationPolicy(TruncationKind::Cutoff, 10).partner_limit(3) == 7);
    CHECK(TruncationPolicy(TruncationKind::GelReservoir, 10).partner_limit(3) == 10);
    CHECK_THROWS_AS(TruncationPolicy(TruncationKind::Cutoff, 0), PreconditionError);
}
