#pragma once

#include <memory>
#include <span>
#include <vector>

#include "smolkit/field.hpp"
#include "smolkit/kernels.hpp"

namespace smolkit {

/// Exact periodic solution operator of u_t = D Laplacian(u) on a Grid, via the discrete Fourier
/// transform. Mode k is damped by exp(-D |k|^2 t), so the zero mode (the mean) is untouched.
///
/// A Brownian particle with this generator has per-coordinate increment variance
/// kBrownianVarianceFactor * D * t; the tracer reads the same constant.
class HeatPropagator {
  public:
    explicit HeatPropagator(const Grid& grid);

    const Grid& grid() const { return grid_; }

    struct StepInfo {
        double clipped = 0.0;  // total negative undershoot removed (sum over cells)
    };

    /// Propagates g in place over time t. With clip = true, negative ringing is set to zero and
    /// the remaining values are rescaled so that the cell sum is unchanged.
    StepInfo apply(std::span<double> g, double D, double t, bool clip = true) const;

    /// exp(-D |k|^2 t) for every stored (half-spectrum) mode, in FFTW r2c order.
    std::vector<double> multipliers(double D, double t) const;

  private:
    struct Plans;
    Grid grid_;
    std::shared_ptr<const Plans> plans_;
    std::vector<double> k2_;  // |k|^2 per half-spectrum mode
};

inline constexpr double kBrownianVarianceFactor = 2.0;

/// Convenience wrapper around HeatPropagator::apply.
std::vector<double> heat_step(const Grid& grid, std::span<const double> g, double D, double t);

/// u(., t) = S_t^{d(1)} X_1(., 0). Requires d non-increasing.
std::vector<double> heat_majorant(const MassField& f0, const DiffusionProfile& dp, double t);

struct ComparisonCheck {
    double max_violation = 0.0;  // max over cells of (D2^{d/2} S^{D2} g - D1^{d/2} S^{D1} g)^+
    double scale = 0.0;          // max over cells of the left-hand side
};

/// Pointwise check of D1^{d/2} S_t^{D1} g >= D2^{d/2} S_t^{D2} g for D1 >= D2 > 0, g >= 0.
ComparisonCheck comparison_multiplier(double D1, double D2, std::span<const double> g, double t,
                                      const Grid& grid);

/// Real-space Crank-Nicolson integration of the same equation (second-order central Laplacian,
/// conjugate-gradient solves). Used to cross-check the spectral propagator.
std::vector<double> crank_nicolson(const Grid& grid, std::span<const double> g, double D, double t,
                                   int steps);

}  // namespace smolkit
