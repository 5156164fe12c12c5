#include "smolkit/diffusion.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "smolkit/errors.hpp"

namespace smolkit {

namespace {
// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex g_plan_mutex;
}  // namespace

struct HeatPropagator::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    std::size_t real_size = 0;
    std::size_t complex_size = 0;

    ~Plans() {
        std::lock_guard lock(g_plan_mutex);
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

HeatPropagator::HeatPropagator(const Grid& grid) : grid_(grid) {
    const int dim = grid.dim();
    const int M = grid.cells_per_side();
    std::vector<int> n(static_cast<std::size_t>(dim), M);

    auto plans = std::make_shared<Plans>();
    plans->real_size = grid.cell_count();
    plans->complex_size = grid.cell_count() / static_cast<std::size_t>(M) * static_cast<std::size_t>(M / 2 + 1);
    {
        std::lock_guard lock(g_plan_mutex);
        double* in = fftw_alloc_real(plans->real_size);
        fftw_complex* out = fftw_alloc_complex(plans->complex_size);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        plans->forward = fftw_plan_dft_r2c(dim, n.data(), in, out, flags);
        plans->backward = fftw_plan_dft_c2r(dim, n.data(), out, in, flags | FFTW_DESTROY_INPUT);
        fftw_free(in);
        fftw_free(out);
    }
    if (!plans->forward || !plans->backward) throw std::runtime_error("FFTW planning failed");
    plans_ = plans;

    // Wavenumbers: all but the last axis run over signed frequencies, the last over 0..M/2.
    k2_.resize(plans_->complex_size);
    const double dk = 2.0 * std::numbers::pi / grid.length();
    const int half = M / 2 + 1;
    for (std::size_t idx = 0; idx < k2_.size(); ++idx) {
        std::size_t rest = idx;
        double sum = 0.0;
        const int last = static_cast<int>(rest % static_cast<std::size_t>(half));
        rest /= static_cast<std::size_t>(half);
        sum += std::pow(last * dk, 2);
        for (int axis = 0; axis + 1 < dim; ++axis) {
            int j = static_cast<int>(rest % static_cast<std::size_t>(M));
            rest /= static_cast<std::size_t>(M);
            if (j > M / 2) j -= M;
            sum += std::pow(j * dk, 2);
        }
        k2_[idx] = sum;
    }
}

std::vector<double> HeatPropagator::multipliers(double D, double t) const {
    std::vector<double> m(k2_.size());
    for (std::size_t i = 0; i < k2_.size(); ++i) m[i] = std::exp(-D * k2_[i] * t);
    return m;
}

HeatPropagator::StepInfo HeatPropagator::apply(std::span<double> g, double D, double t, bool clip) const {
    if (D < 0.0 || t < 0.0) throw PreconditionError("heat step: need D >= 0 and t >= 0");
    if (g.size() != plans_->real_size) throw PreconditionError("heat step: field size differs from grid");
    StepInfo info;
    if (D == 0.0 || t == 0.0) return info;
    if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) return info;

    long double input_sum = 0.0L;
    for (double v : g) input_sum += v;

    std::vector<std::complex<double>> spec(plans_->complex_size);
    auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
    fftw_execute_dft_r2c(plans_->forward, g.data(), cplx);
    const double inv = 1.0 / static_cast<double>(g.size());
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= std::exp(-D * k2_[i] * t) * inv;
    fftw_execute_dft_c2r(plans_->backward, cplx, g.data());

    if (!clip) return info;
    long double negative = 0.0L;
    for (double v : g) {
        if (v < 0.0) negative -= v;
    }
    if (negative == 0.0L) return info;
    long double positive = 0.0L;
    for (double& v : g) {
        if (v < 0.0) v = 0.0;
        positive += v;
    }
    info.clipped = static_cast<double>(negative);
    if (positive > 0.0L) {
        const double scale = static_cast<double>(input_sum / positive);
        for (double& v : g) v *= scale;
    }
    return info;
}

std::vector<double> heat_step(const Grid& grid, std::span<const double> g, double D, double t) {
    std::vector<double> out(g.begin(), g.end());
    HeatPropagator(grid).apply(out, D, t);
    return out;
}

std::vector<double> heat_majorant(const MassField& f0, const DiffusionProfile& dp, double t) {
    if (!dp.non_increasing()) {
        throw PreconditionError("heat majorant: diffusion profile must be non-increasing (first increase at n = " +
                                std::to_string(*dp.first_increase()) + ")");
    }
    auto x1 = moment(f0, {1.0, false}, dp);
    HeatPropagator(f0.grid()).apply(x1, dp(1), t);
    return x1;
}

ComparisonCheck comparison_multiplier(double D1, double D2, std::span<const double> g, double t,
                                      const Grid& grid) {
    if (!(D2 > 0.0) || D1 < D2) throw PreconditionError("comparison: need D1 >= D2 > 0");
    if (std::any_of(g.begin(), g.end(), [](double v) { return v < 0.0; })) {
        throw PreconditionError("comparison: g must be nonnegative");
    }
    const HeatPropagator prop(grid);
    std::vector<double> lhs(g.begin(), g.end());
    std::vector<double> rhs(g.begin(), g.end());
    prop.apply(lhs, D1, t, false);
    prop.apply(rhs, D2, t, false);
    const double w1 = std::pow(D1, 0.5 * grid.dim());
    const double w2 = std::pow(D2, 0.5 * grid.dim());
    ComparisonCheck out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double l = w1 * lhs[i];
        const double r = w2 * rhs[i];
        out.max_violation = std::max(out.max_violation, r - l);
        out.scale = std::max(out.scale, l);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Crank-Nicolson fallback

namespace {

// out = u + s * Laplacian_h(u)
void apply_shifted_laplacian(const Grid& grid, std::span<const double> u, double s, std::span<double> out) {
    const double h2 = grid.spacing() * grid.spacing();
    for (std::size_t cell = 0; cell < u.size(); ++cell) {
        const auto c = grid.coords(cell);
        double lap = -2.0 * grid.dim() * u[cell];
        for (int axis = 0; axis < grid.dim(); ++axis) {
            auto up = c, down = c;
            up[static_cast<std::size_t>(axis)] += 1;
            down[static_cast<std::size_t>(axis)] -= 1;
            lap += u[grid.index(up)] + u[grid.index(down)];
        }
        out[cell] = u[cell] + s * lap / h2;
    }
}

}  // namespace

std::vector<double> crank_nicolson(const Grid& grid, std::span<const double> g, double D, double t,
                                   int steps) {
    if (D < 0.0 || t < 0.0 || steps < 1) throw PreconditionError("crank-nicolson: bad arguments");
    const std::size_t n = grid.cell_count();
    if (g.size() != n) throw PreconditionError("crank-nicolson: field size differs from grid");
    const double s = 0.5 * D * t / steps;
    std::vector<double> u(g.begin(), g.end()), rhs(n), x(n), r(n), p(n), ap(n);

    for (int step = 0; step < steps; ++step) {
        apply_shifted_laplacian(grid, u, s, rhs);
        // Solve (I - s L) x = rhs by CG; the operator is SPD.
        x = u;
        apply_shifted_laplacian(grid, x, -s, ap);
        double rr = 0.0, bb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = rhs[i] - ap[i];
            p[i] = r[i];
            rr += r[i] * r[i];
            bb += rhs[i] * rhs[i];
        }
        const double tol2 = 1e-30 * std::max(bb, 1e-300);
        for (std::size_t it = 0; it < 4 * n && rr > tol2; ++it) {
            apply_shifted_laplacian(grid, p, -s, ap);
            double pap = 0.0;
            for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
            const double alpha = rr / pap;
            double rr_new = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                rr_new += r[i] * r[i];
            }
            const double beta = rr_new / rr;
            rr = rr_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        }
        u.swap(x);
    }
    return u;
}

}  // namespace smolkit
