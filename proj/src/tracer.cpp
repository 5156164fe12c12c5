#include "smolkit/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smolkit/diffusion.hpp"
#include "smolkit/errors.hpp"
#include "smolkit/parallel.hpp"

namespace smolkit {

FrozenSlice::FrozenSlice(const MassField& f, const Kernel& k, const TruncationPolicy& policy)
    : field_(f), kernel_(&k), policy_(policy) {
    if (f.n_max() != policy.n_max) throw PreconditionError("frozen slice: field n_max differs from policy");
    if (k.n_max() < policy.n_max) throw PreconditionError("frozen slice: kernel shorter than n_max");
    const Mass N = f.n_max();
    const std::size_t cells = f.cells();
    rates_.assign(static_cast<std::size_t>(N) * cells, 0.0);
    bounds_.assign(static_cast<std::size_t>(N), 0.0);
    for (Mass m = 1; m <= N; ++m) {
        double bound = 0.0;
        for (std::size_t cell = 0; cell < cells; ++cell) {
            double acc = 0.0;
            for (Mass n = 1; n <= policy.partner_limit(m); ++n) acc += k(n, m) * f(n, cell);
            acc *= kLossMultiplicity;
            rates_[static_cast<std::size_t>(m - 1) * cells + cell] = acc;
            bound = std::max(bound, acc);
        }
        bounds_[static_cast<std::size_t>(m - 1)] = bound;
        max_bound_ = std::max(max_bound_, bound);
    }
}

Mass FrozenSlice::sample_partner(Mass m, std::size_t cell, double u) const {
    const Mass limit = policy_.partner_limit(m);
    double total = 0.0;
    for (Mass n = 1; n <= limit; ++n) total += (*kernel_)(n, m) * field_(n, cell);
    const double target = u * total;
    double acc = 0.0;
    Mass last = 1;
    for (Mass n = 1; n <= limit; ++n) {
        const double w = (*kernel_)(n, m) * field_(n, cell);
        if (w <= 0.0) continue;
        acc += w;
        last = n;
        if (acc > target) return n;
    }
    return last;
}

// ---------------------------------------------------------------------------

InitialSampler::InitialSampler(const MassField& f0) : grid_(f0.grid()) {
    const Mass N = f0.n_max();
    mass_cdf_.resize(static_cast<std::size_t>(N));
    cell_cdf_.resize(static_cast<std::size_t>(N));
    double acc = 0.0;
    for (Mass n = 1; n <= N; ++n) {
        auto& cdf = cell_cdf_[static_cast<std::size_t>(n - 1)];
        cdf.resize(f0.cells());
        double s = 0.0;
        for (std::size_t cell = 0; cell < f0.cells(); ++cell) {
            s += f0(n, cell);
            cdf[cell] = s;
        }
        acc += s;
        mass_cdf_[static_cast<std::size_t>(n - 1)] = acc;
    }
    if (!(acc > 0.0)) throw PreconditionError("tracer sampling: initial field is identically zero");
    total_number_ = acc * f0.grid().cell_volume();
}

TracerState InitialSampler::sample(Philox4x32& rng) const {
    TracerState z;
    const double um = rng.uniform() * mass_cdf_.back();
    auto it = std::upper_bound(mass_cdf_.begin(), mass_cdf_.end(), um);
    if (it == mass_cdf_.end()) --it;
    std::size_t mi = static_cast<std::size_t>(it - mass_cdf_.begin());
    z.mass = static_cast<Mass>(mi + 1);

    const auto& cdf = cell_cdf_[mi];
    const double uc = rng.uniform() * cdf.back();
    auto ct = std::upper_bound(cdf.begin(), cdf.end(), uc);
    if (ct == cdf.end()) --ct;
    const std::size_t cell = static_cast<std::size_t>(ct - cdf.begin());

    const auto coords = grid_.coords(cell);
    const double h = grid_.spacing();
    for (int axis = 0; axis < grid_.dim(); ++axis) {
        z.x[static_cast<std::size_t>(axis)] = (coords[static_cast<std::size_t>(axis)] + rng.uniform()) * h;
    }
    return z;
}

TracerState sample_initial(const MassField& f0, Philox4x32& rng) { return InitialSampler(f0).sample(rng); }

// ---------------------------------------------------------------------------

namespace {

void brownian(TracerState& z, const Grid& grid, double d, double tau, Philox4x32& rng) {
    const double sigma = std::sqrt(kBrownianVarianceFactor * d * tau);
    const double L = grid.length();
    for (int axis = 0; axis < grid.dim(); ++axis) {
        double& x = z.x[static_cast<std::size_t>(axis)];
        x += sigma * rng.normal();
        x -= L * std::floor(x / L);
        if (x >= L) x = 0.0;
    }
}

}  // namespace

TracerState evolve_frozen(TracerState z, const FrozenSlice& slice, const DiffusionProfile& dp, double dt,
                          Philox4x32& rng, const TracerOptions& options, TracerCounters* counters) {
    if (z.is_cemetery()) return z;
    if (dt < 0.0) throw PreconditionError("evolve_frozen: dt must be >= 0");
    if (slice.rate_bound(z.mass) * dt > kThinningBound * (1.0 + 1e-12)) {
        throw PreconditionError("evolve_frozen: rate bound * dt = " + std::to_string(slice.rate_bound(z.mass) * dt) +
                                " exceeds the thinning bound");
    }
    const Grid& grid = slice.field().grid();
    const Mass N = slice.policy().n_max;
    double t = 0.0;
    for (;;) {
        const double bound = slice.rate_bound(z.mass);
        const double remaining = dt - t;
        const double tau = bound > 0.0 ? rng.exponential(bound) : remaining;
        if (tau >= remaining) {
            brownian(z, grid, dp(z.mass), remaining, rng);
            return z;
        }
        brownian(z, grid, dp(z.mass), tau, rng);
        t += tau;
        const std::size_t cell = grid.cell_of(z.x);
        if (rng.uniform() * bound >= slice.rate(z.mass, cell)) continue;  // thinned

        if (counters) ++counters->jumps;
        const Mass n = slice.sample_partner(z.mass, cell, rng.uniform());
        const bool success =
            options.immortal || rng.uniform() < static_cast<double>(z.mass) / static_cast<double>(z.mass + n);
        if (!success) return TracerState::cemetery();
        if (z.mass + n > N) {
            if (counters) counters->escaped = true;
            return TracerState::cemetery();
        }
        z.mass += n;
    }
}

TracerState evolve_frozen(const TracerState& z, const MassField& frozen, const Kernel& k,
                          const DiffusionProfile& dp, double dt, Philox4x32& rng,
                          const TruncationPolicy& policy, const TracerOptions& options) {
    const FrozenSlice slice(frozen, k, policy);
    return evolve_frozen(z, slice, dp, dt, rng, options);
}

// ---------------------------------------------------------------------------

TracerEnsemble simulate(const std::vector<MassField>& timeline, const Kernel& k, const DiffusionProfile& dp,
                        const TruncationPolicy& policy, const TracerEnsembleConfig& config, double slice_dt) {
    if (timeline.empty()) throw PreconditionError("tracer simulate: empty timeline");
    return simulate(timeline.front(), timeline, k, dp, policy, config, slice_dt);
}

TracerEnsemble simulate(const MassField& initial, const std::vector<MassField>& timeline, const Kernel& k,
                        const DiffusionProfile& dp, const TruncationPolicy& policy,
                        const TracerEnsembleConfig& config, double slice_dt) {
    if (timeline.empty()) throw PreconditionError("tracer simulate: empty timeline");
    if (!(initial.grid() == timeline.front().grid())) {
        throw PreconditionError("tracer simulate: initial field and timeline use different grids");
    }
    if (!(slice_dt > 0.0)) throw PreconditionError("tracer simulate: slice_dt must be > 0");
    const int slices = static_cast<int>(timeline.size());
    for (int r : config.record_slices) {
        if (r < 0 || r > slices) throw PreconditionError("tracer simulate: record slice out of range");
    }
    if (dp.n_max() < policy.n_max) throw PreconditionError("tracer simulate: diffusion profile shorter than n_max");

    std::vector<FrozenSlice> frozen;
    frozen.reserve(timeline.size());
    double max_bound = 0.0;
    for (const auto& f : timeline) {
        frozen.emplace_back(f, k, policy);
        max_bound = std::max(max_bound, frozen.back().max_rate_bound());
    }
    const int substeps = std::max(1, static_cast<int>(std::ceil(max_bound * slice_dt / kThinningBound - 1e-12)));
    const double sub_dt = slice_dt / substeps;

    TracerEnsemble out;
    out.config = config;
    out.substeps_per_slice = substeps;
    const InitialSampler sampler(initial);
    out.initial_number = sampler.total_number();

    std::vector<int> records = config.record_slices;
    std::sort(records.begin(), records.end());
    records.erase(std::unique(records.begin(), records.end()), records.end());
    const std::size_t R = records.size();

    // Per-trajectory compact states at each record point: mass (0 cemetery, -1 escaped), cell.
    const std::size_t count = config.count;
    std::vector<std::int32_t> rec_mass(count * R, 0);
    std::vector<std::uint32_t> rec_cell(count * R, 0);
    std::vector<std::uint64_t> jumps(count, 0);
    const int last_slice = R > 0 ? records.back() : 0;

    parallel_for(count, [&](std::size_t id) {
        Philox4x32 rng(config.seed, id);
        TracerCounters counters;
        TracerState z = sampler.sample(rng);
        std::size_t next = 0;
        auto store = [&](std::size_t r) {
            std::int32_t m = z.is_cemetery() ? (counters.escaped ? -1 : 0) : z.mass;
            rec_mass[id * R + r] = m;
            rec_cell[id * R + r] = z.is_cemetery() ? 0u : static_cast<std::uint32_t>(timeline.front().grid().cell_of(z.x));
        };
        for (int s = 0; s <= last_slice; ++s) {
            while (next < R && records[next] == s) store(next++);
            if (s == last_slice) break;
            const FrozenSlice& slice = frozen[static_cast<std::size_t>(std::min(s, slices - 1))];
            for (int sub = 0; sub < substeps && !z.is_cemetery(); ++sub) {
                z = evolve_frozen(z, slice, dp, sub_dt, rng, config.options, &counters);
            }
        }
        jumps[id] = counters.jumps;
    });

    const Mass N = policy.n_max;
    const std::size_t cells = timeline.front().cells();
    for (std::size_t r = 0; r < R; ++r) {
        TracerHistogram h;
        h.time = records[r] * slice_dt;
        h.n_max = N;
        h.cells = cells;
        h.counts.assign(static_cast<std::size_t>(N) * cells, 0);
        h.total = count;
        for (std::size_t id = 0; id < count; ++id) {
            const std::int32_t m = rec_mass[id * R + r];
            if (m <= 0) {
                ++h.cemetery;
                if (m < 0) ++h.escaped;
            } else {
                ++h.counts[static_cast<std::size_t>(m - 1) * cells + rec_cell[id * R + r]];
            }
        }
        out.histograms.push_back(std::move(h));
    }

    constexpr std::size_t kJumpBins = 64;
    out.jump_counts.assign(kJumpBins, 0);
    for (auto j : jumps) ++out.jump_counts[std::min<std::size_t>(j, kJumpBins - 1)];
    return out;
}

// ---------------------------------------------------------------------------

ConsistencyReport density_consistency(const TracerHistogram& hist, const MassField& f_pde, double m0) {
    if (!(m0 > 0.0)) throw PreconditionError("density consistency: M0 must be > 0");
    if (hist.cells != f_pde.cells() || hist.n_max > f_pde.n_max()) {
        throw PreconditionError("density consistency: histogram shape differs from field");
    }
    const double N = static_cast<double>(hist.total);
    const double vol = f_pde.grid().cell_volume();
    ConsistencyReport rep;
    std::vector<double> z_abs;
    double pooled_expected = 0.0, pooled_observed = 0.0;
    long double tv = 0.0L, alive = 0.0L, expected_alive = 0.0L;
    for (Mass m = 1; m <= hist.n_max; ++m) {
        for (std::size_t cell = 0; cell < hist.cells; ++cell) {
            const double q = f_pde(m, cell) * vol / m0;
            const double obs = static_cast<double>(hist(m, cell));
            const double p_hat = obs / N;
            tv += std::abs(p_hat - q);
            alive += p_hat;
            expected_alive += q;
            if (N * q >= kMinExpectedCount) {
                const double se = std::sqrt(q * (1.0 - q) / N);
                z_abs.push_back(std::abs(p_hat - q) / se);
            } else {
                pooled_expected += q;
                pooled_observed += p_hat;
                ++rep.pooled_bins;
            }
        }
    }
    if (rep.pooled_bins > 0 && pooled_expected > 0.0) {
        const double q = std::min(pooled_expected, 1.0);
        const double se = std::sqrt(std::max(q * (1.0 - q), q / N) / N);
        z_abs.push_back(std::abs(pooled_observed - q) / se);
    }
    rep.tv_distance = 0.5 * static_cast<double>(tv);
    rep.alive_fraction = static_cast<double>(alive);
    rep.expected_alive = static_cast<double>(expected_alive);
    rep.tested_bins = z_abs.size();
    if (!z_abs.empty()) {
        std::sort(z_abs.begin(), z_abs.end());
        auto quantile = [&](double p) {
            const std::size_t i = std::min(z_abs.size() - 1, static_cast<std::size_t>(p * (z_abs.size() - 1) + 0.5));
            return z_abs[i];
        };
        rep.max_abs_z = z_abs.back();
        rep.z_q50 = quantile(0.5);
        rep.z_q90 = quantile(0.9);
        rep.z_q99 = quantile(0.99);
    }
    return rep;
}

FocusingCheck focusing_bound_check(const TracerHistogram& hist, const Grid& grid, std::span<const double> u,
                                   const DiffusionProfile& dp, double exponent, double m0) {
    if (!dp.non_increasing()) throw PreconditionError("focusing check: diffusion profile must be non-increasing");
    if (u.size() != hist.cells) throw PreconditionError("focusing check: majorant size differs from histogram");
    const double half_dim = 0.5 * grid.dim();
    double denom = std::numeric_limits<double>::infinity();
    for (Mass m = 1; m <= hist.n_max; ++m) {
        denom = std::min(denom, std::pow(m, 1.0 - exponent) * std::pow(dp(m), half_dim));
    }
    const double factor = std::pow(dp(1), half_dim) / denom;
    const double N = static_cast<double>(hist.total);
    const double vol = grid.cell_volume();
    const double scale = m0 / (N * vol);  // count -> density

    FocusingCheck out;
    for (std::size_t cell = 0; cell < hist.cells; ++cell) {
        double est = 0.0, var = 0.0;
        for (Mass m = 1; m <= hist.n_max; ++m) {
            const double w = std::pow(m, exponent) * scale;
            const double c = static_cast<double>(hist(m, cell));
            est += w * c;
            var += w * w * c;  // Poisson approximation per bin
        }
        const double bound = factor * u[cell];
        const double se = std::sqrt(std::max(var, scale * scale));
        out.max_excess_sigma = std::max(out.max_excess_sigma, (est - bound) / se);
        if (bound > 0.0) out.max_ratio = std::max(out.max_ratio, est / bound);
    }
    return out;
}

}  // namespace smolkit
