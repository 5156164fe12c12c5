#include "smolkit/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "smolkit/errors.hpp"
#include "smolkit/parallel.hpp"

namespace smolkit {

const char* to_string(Splitting s) { return s == Splitting::Strang ? "strang" : "lie"; }

void RunConfig::validate() const {
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw PreconditionError("run config: t_final must be >= 0");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("run config: dt must be > 0");
    if (!(output_stride > 0.0)) throw PreconditionError("run config: output stride must be > 0");
    if (policy.n_max < 1) throw PreconditionError("run config: n_max must be >= 1");
    for (double a : moment_exponents) {
        if (a < 0.0) throw PreconditionError("run config: moment exponents must be >= 0");
    }
}

int RunConfig::step_count() const {
    if (t_final == 0.0) return 0;
    return std::max(1, static_cast<int>(std::ceil(t_final / dt - 1e-9)));
}

double RunConfig::effective_dt() const {
    const int n = step_count();
    return n == 0 ? dt : t_final / n;
}

int RunConfig::steps_per_stride() const {
    return std::max(1, static_cast<int>(std::llround(output_stride / effective_dt())));
}

// ---------------------------------------------------------------------------

namespace {

struct LossPeak {
    double rate = 0.0;
    Mass n = 1;
};

// Largest per-particle loss rate over all species n for one cell.
LossPeak peak_loss_rate(std::span<const double> c, const Kernel& k, const TruncationPolicy& policy) {
    Mass top = 0;
    for (Mass n = static_cast<Mass>(c.size()); n >= 1; --n) {
        if (c[static_cast<std::size_t>(n - 1)] != 0.0) {
            top = n;
            break;
        }
    }
    LossPeak peak;
    if (top == 0) return peak;
    for (Mass n = 1; n <= policy.n_max; ++n) {
        const Mass limit = std::min(policy.partner_limit(n), top);
        double acc = 0.0;
        for (Mass m = 1; m <= limit; ++m) acc += k(n, m) * c[static_cast<std::size_t>(m - 1)];
        acc *= kLossMultiplicity;
        if (acc > peak.rate) {
            peak.rate = acc;
            peak.n = n;
        }
    }
    return peak;
}

struct Rk4Scratch {
    std::vector<double> k1, k2, k3, k4, tmp;
    explicit Rk4Scratch(std::size_t n) : k1(n), k2(n), k3(n), k4(n), tmp(n) {}
};

// Advances c in place; returns the reservoir increment (mass per volume).
double rk4_cell(std::span<double> c, const Kernel& k, const TruncationPolicy& policy, double dt,
                Rk4Scratch& s) {
    const std::size_t n = c.size();
    const double g1 = cell_reaction_rates(c, k, policy, s.k1);
    for (std::size_t i = 0; i < n; ++i) s.tmp[i] = c[i] + 0.5 * dt * s.k1[i];
    const double g2 = cell_reaction_rates(s.tmp, k, policy, s.k2);
    for (std::size_t i = 0; i < n; ++i) s.tmp[i] = c[i] + 0.5 * dt * s.k2[i];
    const double g3 = cell_reaction_rates(s.tmp, k, policy, s.k3);
    for (std::size_t i = 0; i < n; ++i) s.tmp[i] = c[i] + dt * s.k3[i];
    const double g4 = cell_reaction_rates(s.tmp, k, policy, s.k4);
    for (std::size_t i = 0; i < n; ++i) {
        c[i] += dt / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
    }
    return dt / 6.0 * (g1 + 2.0 * g2 + 2.0 * g3 + g4);
}

void check_finite(const MassField& f, double t) {
    for (Mass n = 1; n <= f.n_max(); ++n) {
        const auto s = f.species(n);
        for (std::size_t cell = 0; cell < s.size(); ++cell) {
            if (!std::isfinite(s[cell])) {
                std::ostringstream msg;
                msg << "non-finite density at t = " << t << ": f_" << n << "[cell " << cell << "] = " << s[cell]
                    << "; total mass before failure unavailable";
                throw std::runtime_error(msg.str());
            }
        }
    }
}

void record_point(RunRecord& rec, double t, const MassField& f, const DiffusionProfile& dp,
                  const RunConfig& cfg) {
    const auto totals = total_mass(f);
    rec.t.push_back(t);
    rec.mass.push_back(totals.excluding_gel);
    rec.mass_with_gel.push_back(totals.including_gel);
    rec.gel.push_back(f.gel_reservoir);
    rec.number.push_back(total_number(f));
    for (std::size_t j = 0; j < cfg.moment_exponents.size(); ++j) {
        const auto xa = moment(f, {cfg.moment_exponents[j], false}, dp);
        rec.moments[j].push_back(integrate(f.grid(), xa));
    }
    if (cfg.keep_snapshots) rec.snapshots.push_back(f);
}

}  // namespace

double stable_dt(const MassField& f, const Kernel& k, const TruncationPolicy& policy) {
    std::vector<double> peaks(f.cells(), 0.0);
    parallel_for(f.cells(), [&](std::size_t cell) {
        peaks[cell] = peak_loss_rate(f.cell_values(cell), k, policy).rate;
    });
    const double worst = *std::max_element(peaks.begin(), peaks.end());
    return worst > 0.0 ? kLossDominanceBound / worst : std::numeric_limits<double>::infinity();
}

double stable_dt(const HomogeneousState& s, const Kernel& k, const TruncationPolicy& policy) {
    const double worst = peak_loss_rate(s.c, k, policy).rate;
    return worst > 0.0 ? kLossDominanceBound / worst : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------

Integrator::Integrator(const Grid& grid, Kernel kernel, DiffusionProfile dp, RunConfig cfg)
    : prop_(grid), kernel_(std::move(kernel)), dp_(std::move(dp)), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (kernel_.n_max() < cfg_.policy.n_max) throw PreconditionError("integrator: kernel shorter than n_max");
    if (dp_.n_max() < cfg_.policy.n_max) throw PreconditionError("integrator: diffusion profile shorter than n_max");
}

double Integrator::diffuse(MassField& f, double t) const {
    std::vector<double> clipped(static_cast<std::size_t>(f.n_max()), 0.0);
    parallel_for(static_cast<std::size_t>(f.n_max()), [&](std::size_t i) {
        const Mass n = static_cast<Mass>(i + 1);
        clipped[i] = prop_.apply(f.species(n), dp_(n), t).clipped;
    });
    double total = 0.0;
    for (double c : clipped) total += c;
    return total * f.grid().cell_volume();
}

void Integrator::react(MassField& f, double dt) const {
    if (kernel_.is_zero()) return;
    const auto& policy = cfg_.policy;
    const std::size_t cells = f.cells();

    std::vector<LossPeak> peaks(cells);
    parallel_for(cells, [&](std::size_t cell) { peaks[cell] = peak_loss_rate(f.cell_values(cell), kernel_, policy); });
    for (std::size_t cell = 0; cell < cells; ++cell) {
        if (dt * peaks[cell].rate > kLossDominanceBound) {
            std::ostringstream msg;
            msg << "step size " << dt << " violates loss dominance at cell " << cell << ", mass " << peaks[cell].n
                << ": dt * loss rate = " << dt * peaks[cell].rate << " > " << kLossDominanceBound;
            throw StepSizeError(msg.str(), cell, peaks[cell].n, kLossDominanceBound / peaks[cell].rate);
        }
    }

    std::vector<double> gel(cells, 0.0);
    parallel_for(cells, [&](std::size_t cell) {
        auto c = f.cell_values(cell);
        Rk4Scratch scratch(c.size());
        gel[cell] = rk4_cell(c, kernel_, policy, dt, scratch);
        f.set_cell_values(cell, c);
    });
    long double g = 0.0L;
    for (double v : gel) g += v;
    f.gel_reservoir += static_cast<double>(g) * f.grid().cell_volume();
}

double Integrator::step(MassField& f, double dt) const {
    if (f.n_max() != cfg_.policy.n_max) throw PreconditionError("step: field n_max differs from policy");
    if (!(dt > 0.0)) throw PreconditionError("step: dt must be > 0");
    double clipped = 0.0;
    if (cfg_.splitting == Splitting::Strang) {
        clipped += diffuse(f, 0.5 * dt);
        react(f, dt);
        clipped += diffuse(f, 0.5 * dt);
    } else {
        clipped += diffuse(f, dt);
        react(f, dt);
    }
    return clipped;
}

double Integrator::guarded_step(MassField& f, double dt, int& halvings) const {
    if (!cfg_.auto_halve) return step(f, dt);
    int pieces = 1;
    for (;;) {
        MassField trial = f;
        try {
            double clipped = 0.0;
            for (int i = 0; i < pieces; ++i) clipped += step(trial, dt / pieces);
            f = std::move(trial);
            halvings += pieces - 1;
            return clipped;
        } catch (const StepSizeError&) {
            if (pieces >= (1 << 20)) throw;
            pieces *= 2;
        }
    }
}

RunRecord Integrator::run(MassField f, const std::vector<Monitor>& monitors) const {
    if (!f.valid()) throw PreconditionError("run: initial field must be finite and nonnegative");
    RunRecord rec;
    rec.moment_exponents = cfg_.moment_exponents;
    rec.moments.resize(cfg_.moment_exponents.size());

    auto emit = [&](double t) {
        record_point(rec, t, f, dp_, cfg_);
        for (const auto& m : monitors) m(t, f);
    };

    emit(0.0);
    const int steps = cfg_.step_count();
    const double dt = cfg_.effective_dt();
    const int stride = cfg_.steps_per_stride();
    for (int i = 1; i <= steps; ++i) {
        rec.clipped_mass += guarded_step(f, dt, rec.halvings);
        const double t = (i == steps) ? cfg_.t_final : i * dt;
        check_finite(f, t);
        if (i % stride == 0 || i == steps) emit(t);
    }
    rec.steps = steps;
    return rec;
}

MassField step(const MassField& f, const Kernel& k, const DiffusionProfile& dp, const RunConfig& cfg) {
    Integrator integ(f.grid(), k, dp, cfg);
    MassField out = f;
    integ.step(out, cfg.dt);
    return out;
}

RunRecord run(const MassField& f0, const Kernel& k, const DiffusionProfile& dp, const RunConfig& cfg,
              const std::vector<Monitor>& monitors) {
    return Integrator(f0.grid(), k, dp, cfg).run(f0, monitors);
}

// ---------------------------------------------------------------------------
// Spatially homogeneous path

void homogeneous_rk4_step(HomogeneousState& s, const Kernel& k, const TruncationPolicy& policy, double dt) {
    const double peak = peak_loss_rate(s.c, k, policy).rate;
    if (dt * peak > kLossDominanceBound) {
        const auto p = peak_loss_rate(s.c, k, policy);
        std::ostringstream msg;
        msg << "step size " << dt << " violates loss dominance at mass " << p.n << ": dt * loss rate = "
            << dt * p.rate << " > " << kLossDominanceBound;
        throw StepSizeError(msg.str(), 0, p.n, kLossDominanceBound / p.rate);
    }
    Rk4Scratch scratch(s.c.size());
    s.gel += rk4_cell(s.c, k, policy, dt, scratch);
}

namespace {

void record_homogeneous(RunRecord& rec, double t, const HomogeneousState& s) {
    long double mass = 0.0L, number = 0.0L;
    for (std::size_t i = 0; i < s.c.size(); ++i) {
        mass += static_cast<long double>(i + 1) * s.c[i];
        number += s.c[i];
    }
    rec.t.push_back(t);
    rec.mass.push_back(static_cast<double>(mass));
    rec.mass_with_gel.push_back(static_cast<double>(mass) + s.gel);
    rec.gel.push_back(s.gel);
    rec.number.push_back(static_cast<double>(number));
    for (std::size_t j = 0; j < rec.moment_exponents.size(); ++j) {
        long double acc = 0.0L;
        for (std::size_t i = 0; i < s.c.size(); ++i) {
            acc += std::pow(static_cast<long double>(i + 1), rec.moment_exponents[j]) * s.c[i];
        }
        rec.moments[j].push_back(static_cast<double>(acc));
    }
    rec.states.push_back(s);
}

}  // namespace

RunRecord homogeneous_run(const HomogeneousState& c0, const Kernel& k, const RunConfig& cfg) {
    cfg.validate();
    if (static_cast<Mass>(c0.c.size()) != cfg.policy.n_max) {
        throw PreconditionError("homogeneous run: state length differs from n_max");
    }
    if (std::any_of(c0.c.begin(), c0.c.end(), [](double v) { return !(v >= 0.0) || !std::isfinite(v); })) {
        throw PreconditionError("homogeneous run: concentrations must be finite and >= 0");
    }
    RunRecord rec;
    rec.moment_exponents = cfg.moment_exponents;
    rec.moments.resize(cfg.moment_exponents.size());

    HomogeneousState s = c0;
    record_homogeneous(rec, 0.0, s);
    const int steps = cfg.step_count();
    const double dt = cfg.effective_dt();
    const int stride = cfg.steps_per_stride();
    for (int i = 1; i <= steps; ++i) {
        if (!k.is_zero()) {
            if (cfg.auto_halve) {
                const double safe = stable_dt(s, k, cfg.policy);
                int pieces = 1;
                while (dt / pieces > safe && pieces < (1 << 20)) pieces *= 2;
                for (int p = 0; p < pieces; ++p) homogeneous_rk4_step(s, k, cfg.policy, dt / pieces);
                rec.halvings += pieces - 1;
            } else {
                homogeneous_rk4_step(s, k, cfg.policy, dt);
            }
        }
        const double t = (i == steps) ? cfg.t_final : i * dt;
        for (double v : s.c) {
            if (!std::isfinite(v)) {
                throw std::runtime_error("homogeneous run: non-finite concentration at t = " + std::to_string(t));
            }
        }
        if (i % stride == 0 || i == steps) record_homogeneous(rec, t, s);
    }
    rec.steps = steps;
    return rec;
}

}  // namespace smolkit
