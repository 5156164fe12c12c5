#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smolkit/coagulation.hpp"
#include "smolkit/diffusion.hpp"
#include "smolkit/field.hpp"
#include "smolkit/kernels.hpp"

namespace smolkit {

enum class Splitting { Strang, Lie };

const char* to_string(Splitting s);

/// Largest allowed dt * (per-particle loss rate) in one explicit reaction substep.
inline constexpr double kLossDominanceBound = 0.5;

struct RunConfig {
    double t_final = 1.0;
    double dt = 1e-3;
    Splitting splitting = Splitting::Strang;
    TruncationPolicy policy{TruncationKind::Cutoff, 64};
    /// Output interval in physical time; snapped to a whole number of steps.
    double output_stride = 0.1;
    std::uint64_t seed = 0;
    /// Subdivide a step into 2^k substeps when it would violate the loss-dominance bound.
    bool auto_halve = false;
    /// Exponents a whose integrated moments int X_a dx are recorded at each stride.
    std::vector<double> moment_exponents{0.0, 1.0, 2.0};
    bool keep_snapshots = false;

    /// Throws PreconditionError on invalid values.
    void validate() const;
    /// Number of steps and the (possibly shortened) uniform step covering [0, t_final].
    int step_count() const;
    double effective_dt() const;
    int steps_per_stride() const;
};

struct HomogeneousState {
    std::vector<double> c;  // c_1..c_N
    double gel = 0.0;       // mass per volume in the reservoir
};

/// Time series emitted by a run at every output stride (and at the final time).
struct RunRecord {
    std::vector<double> t;
    std::vector<double> mass;           // I(t), excluding the reservoir
    std::vector<double> mass_with_gel;  // I(t) + G(t)
    std::vector<double> gel;            // G(t)
    std::vector<double> number;         // sum_n int f_n dx
    std::vector<double> moment_exponents;
    std::vector<std::vector<double>> moments;  // moments[j][stride] = int X_{a_j} dx
    std::vector<MassField> snapshots;          // PDE runs with keep_snapshots
    std::vector<HomogeneousState> states;      // homogeneous runs (always kept)
    double clipped_mass = 0.0;                 // diffusion undershoot removed over the run
    int halvings = 0;                          // substeps added by auto-halving
    int steps = 0;

    std::size_t size() const { return t.size(); }
};

/// Called at every output stride with the current time and field.
using Monitor = std::function<void(double t, const MassField& f)>;

/// Largest dt satisfying dt * 2 sum_m alpha(n,m) f_m <= kLossDominanceBound for all n and cells.
double stable_dt(const MassField& f, const Kernel& k, const TruncationPolicy& policy);
double stable_dt(const HomogeneousState& s, const Kernel& k, const TruncationPolicy& policy);

/// Operator-splitting integrator for the coupled diffusion-coagulation system.
class Integrator {
  public:
    Integrator(const Grid& grid, Kernel kernel, DiffusionProfile dp, RunConfig cfg);

    /// One split step of length dt. Throws StepSizeError if the reaction substep would
    /// violate the loss-dominance bound. Returns clipped diffusion undershoot.
    double step(MassField& f, double dt) const;

    RunRecord run(MassField f0, const std::vector<Monitor>& monitors = {}) const;

    const RunConfig& config() const { return cfg_; }
    const Kernel& kernel() const { return kernel_; }
    const DiffusionProfile& diffusion() const { return dp_; }

  private:
    double diffuse(MassField& f, double t) const;
    void react(MassField& f, double dt) const;
    double guarded_step(MassField& f, double dt, int& halvings) const;

    HeatPropagator prop_;
    Kernel kernel_;
    DiffusionProfile dp_;
    RunConfig cfg_;
};

/// One split step with dt = cfg.dt.
MassField step(const MassField& f, const Kernel& k, const DiffusionProfile& dp, const RunConfig& cfg);

RunRecord run(const MassField& f0, const Kernel& k, const DiffusionProfile& dp, const RunConfig& cfg,
              const std::vector<Monitor>& monitors = {});

/// Classical RK4 on dc_n/dt = Q_n(c) (plus the reservoir ODE under GelReservoir).
RunRecord homogeneous_run(const HomogeneousState& c0, const Kernel& k, const RunConfig& cfg);

/// One RK4 step of the spatially homogeneous system in place.
void homogeneous_rk4_step(HomogeneousState& s, const Kernel& k, const TruncationPolicy& policy, double dt);

}  // namespace smolkit
