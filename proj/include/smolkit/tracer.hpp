#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "smolkit/coagulation.hpp"
#include "smolkit/field.hpp"
#include "smolkit/kernels.hpp"
#include "smolkit/rng.hpp"

namespace smolkit {

/// Position and mass of the tracer, or the absorbing cemetery state.
struct TracerState {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    Mass mass = 1;
    bool alive = true;

    static TracerState cemetery() {
        TracerState z;
        z.alive = false;
        z.mass = 0;
        return z;
    }
    bool is_cemetery() const { return !alive; }
};

/// Largest admissible expected number of candidate jumps in one frozen substep.
inline constexpr double kThinningBound = 0.1;

/// Jump rates of the tracer against one frozen field. The tracer of mass m at cell x jumps to
/// m + n at rate kLossMultiplicity * alpha(n, m) f_n(x), over the partners the truncation admits.
class FrozenSlice {
  public:
    FrozenSlice(const MassField& f, const Kernel& k, const TruncationPolicy& policy);

    const MassField& field() const { return field_; }
    double rate(Mass m, std::size_t cell) const {
        return rates_[static_cast<std::size_t>(m - 1) * field_.cells() + cell];
    }
    /// max over cells of rate(m, .)
    double rate_bound(Mass m) const { return bounds_[static_cast<std::size_t>(m - 1)]; }
    double max_rate_bound() const { return max_bound_; }
    /// Partner mass drawn with probability proportional to alpha(n,m) f_n(cell); u in (0,1).
    Mass sample_partner(Mass m, std::size_t cell, double u) const;
    const TruncationPolicy& policy() const { return policy_; }

  private:
    MassField field_;
    const Kernel* kernel_;
    TruncationPolicy policy_;
    std::vector<double> rates_;
    std::vector<double> bounds_;
    double max_bound_ = 0.0;
};

struct TracerOptions {
    /// Skip the success draw so the tracer survives every transition.
    bool immortal = false;
};

/// Bookkeeping for one trajectory.
struct TracerCounters {
    std::uint64_t jumps = 0;
    bool escaped = false;  // merged past n_max under GelReservoir
};

/// Draws (mass, position): mass with probability int f_m / sum_n int f_n, then a cell with
/// probability proportional to f_m, then a uniform point in the cell.
class InitialSampler {
  public:
    explicit InitialSampler(const MassField& f0);
    TracerState sample(Philox4x32& rng) const;
    /// Total initial particle number M0 = sum_n int f_n dx.
    double total_number() const { return total_number_; }

  private:
    Grid grid_;
    std::vector<double> mass_cdf_;
    std::vector<std::vector<double>> cell_cdf_;
    double total_number_ = 0.0;
};

TracerState sample_initial(const MassField& f0, Philox4x32& rng);

/// Evolves z over [0, dt] against the frozen slice. Requires rate_bound(mass) * dt <= kThinningBound.
TracerState evolve_frozen(TracerState z, const FrozenSlice& slice, const DiffusionProfile& dp, double dt,
                          Philox4x32& rng, const TracerOptions& options = {},
                          TracerCounters* counters = nullptr);

TracerState evolve_frozen(const TracerState& z, const MassField& frozen, const Kernel& k,
                          const DiffusionProfile& dp, double dt, Philox4x32& rng,
                          const TruncationPolicy& policy, const TracerOptions& options = {});

/// Counts over (mass, cell) bins at one time.
struct TracerHistogram {
    double time = 0.0;
    Mass n_max = 0;
    std::size_t cells = 0;
    std::vector<std::uint64_t> counts;  // mass-major: counts[(m-1)*cells + cell]
    std::uint64_t cemetery = 0;
    std::uint64_t escaped = 0;  // subset of cemetery
    std::uint64_t total = 0;

    std::uint64_t operator()(Mass m, std::size_t cell) const {
        return counts[static_cast<std::size_t>(m - 1) * cells + cell];
    }
    bool operator==(const TracerHistogram&) const = default;
};

struct TracerEnsembleConfig {
    std::size_t count = 10000;
    std::uint64_t seed = 0;
    /// Slice boundaries at which histograms are taken (0 = initial time, S = final).
    std::vector<int> record_slices;
    TracerOptions options;
};

struct TracerEnsemble {
    TracerEnsembleConfig config;
    std::vector<TracerHistogram> histograms;
    /// jump_counts[j] = number of trajectories with exactly j candidate transitions accepted
    /// (last bin collects the overflow).
    std::vector<std::uint64_t> jump_counts;
    double initial_number = 0.0;  // M0
    int substeps_per_slice = 1;
};

/// Runs the ensemble against timeline slices [0], [1], ... each held for slice_dt. Slices are
/// subdivided so every substep respects kThinningBound. Each trajectory uses its own substream
/// keyed by (seed, trajectory index), so results do not depend on the worker count.
TracerEnsemble simulate(const std::vector<MassField>& timeline, const Kernel& k, const DiffusionProfile& dp,
                        const TruncationPolicy& policy, const TracerEnsembleConfig& config, double slice_dt);

/// Same, with the initial law taken from `initial` instead of timeline[0] (e.g. slices frozen at
/// midpoints).
TracerEnsemble simulate(const MassField& initial, const std::vector<MassField>& timeline, const Kernel& k,
                        const DiffusionProfile& dp, const TruncationPolicy& policy,
                        const TracerEnsembleConfig& config, double slice_dt);

struct ConsistencyReport {
    double tv_distance = 0.0;  // 1/2 sum over bins |p_hat - q|
    double max_abs_z = 0.0;
    double z_q50 = 0.0, z_q90 = 0.0, z_q99 = 0.0;  // quantiles of |z| over tested bins
    std::size_t tested_bins = 0;
    std::size_t pooled_bins = 0;  // sparse bins merged into one tail bin
    double alive_fraction = 0.0;
    double expected_alive = 0.0;  // sum_n int f_n(t) / M0
};

/// Minimum expected count for a bin to get its own z-score.
inline constexpr double kMinExpectedCount = 5.0;

/// Compares the empirical law of the tracer with f_n(x, t) / M0 bin by bin.
ConsistencyReport density_consistency(const TracerHistogram& hist, const MassField& f_pde, double m0);

struct FocusingCheck {
    double max_excess_sigma = 0.0;  // max over cells of (estimate - bound) / standard error
    double max_ratio = 0.0;         // max over cells of estimate / bound
};

/// Empirical sum_m m^exponent g_m(x) M0 against (d(1)^{dim/2} / min_m m^{1-exponent} d(m)^{dim/2}) u(x).
FocusingCheck focusing_bound_check(const TracerHistogram& hist, const Grid& grid, std::span<const double> u,
                                   const DiffusionProfile& dp, double exponent, double m0);

}  // namespace smolkit
