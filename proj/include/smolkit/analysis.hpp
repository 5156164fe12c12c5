#pragma once

#include <string>
#include <vector>

#include "smolkit/coagulation.hpp"
#include "smolkit/field.hpp"
#include "smolkit/integrator.hpp"
#include "smolkit/kernels.hpp"

namespace smolkit {

/// Outcome of one monitored inequality.
struct BoundReport {
    std::string name;
    double max_violation = 0.0;  // >= 0; meaning depends on the check (see each function)
    double max_ratio = 0.0;
    double min_ratio = 0.0;
    double at_time = 0.0;
    std::size_t at_cell = 0;
    double tolerance = 0.0;
    bool pass = true;
    std::string detail;
    std::vector<double> series;  // per-stride quantity, when the check has one
};

/// Largest e for which the weighted L-infinity moment bound holds, as a function of the moment
/// exponent a and the diffusion bracket exponents (two branches split at b1 * dim = 2).
double gamma_exponent(double a, double b1, double b2, int dim);

// ---------------------------------------------------------------------------
// Heat-majorant domination

struct MajorantSample {
    double t = 0.0;
    std::vector<double> xhat1;     // sum_n n d(n)^{dim/2} f_n
    std::vector<double> majorant;  // u = S_t^{d(1)} X_1(., 0)
};

/// Below this fraction of max bound the ratio is replaced by an excess normalised by the floor.
inline constexpr double kMajorantFloor = 1e-10;

/// max over samples and cells of X1hat / (d(1)^{dim/2} u) - 1, clipped at 0. Pass iff <= tolerance.
/// Throws HypothesisError when d is not non-increasing.
BoundReport check_lemma31(const std::vector<MajorantSample>& samples, const DiffusionProfile& dp, int dim,
                          double tolerance = 1e-6);

/// Monitor that appends a MajorantSample at every stride.
Monitor majorant_monitor(const MassField& f0, const DiffusionProfile& dp, std::vector<MajorantSample>& out);

// ---------------------------------------------------------------------------
// Uniqueness (L1 stability) bound

/// sup over snapshots and cells of sum_n n^2 f_n.
double observed_sup_second_moment(const std::vector<MassField>& snapshots);

/// X(t) = int sum_n n |f_n - g_n| dx.
double weighted_l1_distance(const MassField& f, const MassField& g);

/// max over strides of X(t) / (exp(4 c0 A t) X(0)); pass iff <= 1. Hypotheses alpha <= c0 n m and
/// sup sum n^2 f_n, sup sum n^2 g_n <= A are verified and raise HypothesisError when they fail.
BoundReport check_gronwall(const std::vector<double>& times, const std::vector<MassField>& f_rec,
                           const std::vector<MassField>& g_rec, const Kernel& k, double c0, double A);

// ---------------------------------------------------------------------------
// Moment plateau under refinement

struct MomentSummary {
    Mass n_max = 0;
    double sup_xa = 0.0;        // sup_t int X_a dx
    double int_y = 0.0;         // int_0^T int Y_{a-1} dx dt
    double int_yhat = 0.0;      // int_0^T int Yhat_{a-1} dx dt
    std::vector<double> times;
    std::vector<double> xa;     // int X_a dx per stride
    std::vector<double> y;      // int Y_{a-1} dx per stride
    std::vector<double> yhat;   // int Yhat_{a-1} dx per stride
};

/// Monitor accumulating the moment-bound quantities for exponent a (trapezoid rule in time).
class MomentAccumulator {
  public:
    MomentAccumulator(double a, const DiffusionProfile& dp, const Kernel& k);
    Monitor monitor();
    MomentSummary summary() const;

  private:
    double a_;
    DiffusionProfile dp_;
    const Kernel* k_;
    MomentSummary s_;
};

/// Relative increment allowed between successive refinements.
inline constexpr double kPlateauTolerance = 0.05;

/// Pass iff every successive relative increment of sup int X_a, int int Y_{a-1} and
/// int int Yhat_{a-1} is below kPlateauTolerance.
BoundReport check_moment_bound(const std::vector<MomentSummary>& refinements, double a);

/// Least-squares slope of log(values) against time (growth-rate diagnostic, not gated).
double exponential_growth_rate(const std::vector<double>& times, const std::vector<double>& values);

// ---------------------------------------------------------------------------
// Gelation

enum class GelVerdictKind { Conserving, Gelling, Inconclusive };

const char* to_string(GelVerdictKind v);

struct GelScanConfig {
    KernelSpec kernel;
    std::vector<Mass> n_list{128, 256, 512};
    double t_final = 1.0;
    /// Initial concentrations c_1, c_2, ...; truncated or zero-padded to each N.
    std::vector<double> initial{1.0};
    TruncationKind policy = TruncationKind::GelReservoir;
    /// Used only by range-derived kernels.
    DiffusionProfile diffusion = DiffusionProfile::constant(1.0, 1);
    /// Step count floor; each step is further halved as the loss-dominance bound requires.
    double dt = 1e-2;
};

struct GelVerdict {
    std::vector<Mass> n_list;
    std::vector<double> mass_ratio;  // I(T)/I(0)
    std::vector<double> gel;         // G(T)
    double initial_mass = 0.0;
    GelVerdictKind verdict = GelVerdictKind::Inconclusive;
    std::string trend;
};

/// Successive relative change of G(T) allowed for a gelling verdict.
inline constexpr double kGelConvergenceTolerance = 0.10;
/// G(T) / I(0) below which refinement halving is unobservable.
inline constexpr double kGelRoundoffFloor = 1e-14;

/// Verdict from a refinement series of G(T).
GelVerdict classify_gelation(std::vector<Mass> n_list, std::vector<double> gel, std::vector<double> mass_ratio,
                             double initial_mass);

GelVerdict gelation_scan(const GelScanConfig& cfg);

}  // namespace smolkit
