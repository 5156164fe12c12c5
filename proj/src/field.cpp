#include "smolkit/field.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "smolkit/errors.hpp"
#include "smolkit/parallel.hpp"

namespace smolkit {

Grid::Grid(int dim, double length, int cells_per_side) : dim_(dim), length_(length), m_(cells_per_side) {
    if (dim < 1 || dim > 3) throw PreconditionError("grid: dim must be 1, 2 or 3");
    if (!(length > 0.0) || !std::isfinite(length)) throw PreconditionError("grid: length must be > 0");
    if (m_ < 2 || (m_ & (m_ - 1)) != 0) {
        throw PreconditionError("grid: cells per side must be a power of two >= 2");
    }
    count_ = 1;
    for (int i = 0; i < dim_; ++i) count_ *= static_cast<std::size_t>(m_);
}

double Grid::cell_volume() const { return std::pow(spacing(), dim_); }

double Grid::volume() const { return std::pow(length_, dim_); }

std::array<int, 3> Grid::coords(std::size_t cell) const {
    std::array<int, 3> c{0, 0, 0};
    for (int k = dim_ - 1; k >= 0; --k) {
        c[static_cast<std::size_t>(k)] = static_cast<int>(cell % static_cast<std::size_t>(m_));
        cell /= static_cast<std::size_t>(m_);
    }
    return c;
}

std::size_t Grid::index(const std::array<int, 3>& c) const {
    std::size_t idx = 0;
    for (int k = 0; k < dim_; ++k) {
        const int v = ((c[static_cast<std::size_t>(k)] % m_) + m_) % m_;
        idx = idx * static_cast<std::size_t>(m_) + static_cast<std::size_t>(v);
    }
    return idx;
}

std::array<double, 3> Grid::center(std::size_t cell) const {
    const auto c = coords(cell);
    const double h = spacing();
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int k = 0; k < dim_; ++k) x[static_cast<std::size_t>(k)] = (c[static_cast<std::size_t>(k)] + 0.5) * h;
    return x;
}

std::size_t Grid::cell_of(const std::array<double, 3>& x) const {
    const double h = spacing();
    std::array<int, 3> c{0, 0, 0};
    for (int k = 0; k < dim_; ++k) {
        const double w = x[static_cast<std::size_t>(k)] - length_ * std::floor(x[static_cast<std::size_t>(k)] / length_);
        c[static_cast<std::size_t>(k)] = std::min(m_ - 1, static_cast<int>(w / h));
    }
    return index(c);
}

double Grid::min_image_distance(std::size_t a, std::size_t b) const {
    const auto ca = coords(a);
    const auto cb = coords(b);
    double r2 = 0.0;
    for (int k = 0; k < dim_; ++k) {
        int d = ((ca[static_cast<std::size_t>(k)] - cb[static_cast<std::size_t>(k)]) % m_ + m_) % m_;
        if (d > m_ / 2) d -= m_;
        const double dx = d * spacing();
        r2 += dx * dx;
    }
    return std::sqrt(r2);
}

// ---------------------------------------------------------------------------

MassField::MassField(Grid grid, Mass n_max) : grid_(grid), n_max_(n_max) {
    if (n_max < 1) throw PreconditionError("mass field: n_max must be >= 1");
    data_.assign(static_cast<std::size_t>(n_max) * grid_.cell_count(), 0.0);
}

std::vector<double> MassField::cell_values(std::size_t cell) const {
    std::vector<double> c(static_cast<std::size_t>(n_max_));
    for (Mass n = 1; n <= n_max_; ++n) c[static_cast<std::size_t>(n - 1)] = (*this)(n, cell);
    return c;
}

void MassField::set_cell_values(std::size_t cell, std::span<const double> c) {
    for (Mass n = 1; n <= n_max_; ++n) (*this)(n, cell) = c[static_cast<std::size_t>(n - 1)];
}

bool MassField::valid() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0 && std::isfinite(v); }) &&
           gel_reservoir >= 0.0 && std::isfinite(gel_reservoir);
}

bool MassField::species_is_zero(Mass n) const {
    const auto s = species(n);
    return std::all_of(s.begin(), s.end(), [](double v) { return v == 0.0; });
}

MassField make_uniform(const Grid& grid, Mass n_max, Mass species, double density) {
    if (species < 1 || species > n_max) throw PreconditionError("make_uniform: species out of range");
    if (density < 0.0) throw PreconditionError("make_uniform: density must be >= 0");
    MassField f(grid, n_max);
    for (auto& v : f.species(species)) v = density;
    return f;
}

void add_gaussian(MassField& f, Mass species, double amplitude, double width,
                  const std::array<double, 3>& centre) {
    if (species < 1 || species > f.n_max()) throw PreconditionError("add_gaussian: species out of range");
    if (!(width > 0.0) || amplitude < 0.0) throw PreconditionError("add_gaussian: need width > 0, amplitude >= 0");
    const Grid& g = f.grid();
    const double L = g.length();
    for (std::size_t cell = 0; cell < g.cell_count(); ++cell) {
        const auto x = g.center(cell);
        double r2 = 0.0;
        for (int k = 0; k < g.dim(); ++k) {
            double d = x[static_cast<std::size_t>(k)] - centre[static_cast<std::size_t>(k)];
            d -= L * std::round(d / L);
            r2 += d * d;
        }
        f(species, cell) += amplitude * std::exp(-r2 / (2.0 * width * width));
    }
}

// ---------------------------------------------------------------------------
// Moments

namespace {

std::vector<double> mass_weights(Mass n_max, double a, const DiffusionProfile* dp, int dim) {
    std::vector<double> w(static_cast<std::size_t>(n_max));
    for (Mass n = 1; n <= n_max; ++n) {
        double v = std::pow(static_cast<double>(n), a);
        if (dp != nullptr) v *= std::pow((*dp)(n), 0.5 * dim);
        w[static_cast<std::size_t>(n - 1)] = v;
    }
    return w;
}

void require_profile(const MassField& f, const DiffusionProfile& dp) {
    if (dp.n_max() < f.n_max()) throw PreconditionError("diffusion profile shorter than field n_max");
}

}  // namespace

std::vector<double> moment(const MassField& f, const MomentSpec& spec, const DiffusionProfile& dp) {
    if (spec.a < 0.0) throw PreconditionError("moment: exponent must be >= 0");
    if (spec.hat) require_profile(f, dp);
    const auto w = mass_weights(f.n_max(), spec.a, spec.hat ? &dp : nullptr, f.grid().dim());
    std::vector<double> out(f.cells(), 0.0);
    std::atomic<bool> overflow{false};
    parallel_for(f.cells(), [&](std::size_t cell) {
        long double acc = 0.0L;
        for (Mass n = 1; n <= f.n_max(); ++n) {
            acc += static_cast<long double>(w[static_cast<std::size_t>(n - 1)]) * f(n, cell);
        }
        out[cell] = static_cast<double>(acc);
        if (!std::isfinite(out[cell])) overflow = true;
    });
    if (overflow) {
        throw std::overflow_error("moment: a = " + std::to_string(spec.a) + " overflows double");
    }
    return out;
}

std::vector<double> pair_moment_Y(const MassField& f, double a, const DiffusionProfile& dp,
                                  const Kernel& k, bool hat) {
    if (a < 0.0) throw PreconditionError("pair moment: exponent must be >= 0");
    require_profile(f, dp);
    if (hat && k.n_max() < f.n_max()) throw PreconditionError("kernel shorter than field n_max");
    const Mass N = f.n_max();
    const auto pw = mass_weights(N, a, nullptr, 1);
    std::vector<double> out(f.cells(), 0.0);
    parallel_for(f.cells(), [&](std::size_t cell) {
        const auto c = f.cell_values(cell);
        long double acc = 0.0L;
        for (Mass n = 1; n <= N; ++n) {
            const double fn = c[static_cast<std::size_t>(n - 1)];
            if (fn == 0.0) continue;
            const double na = pw[static_cast<std::size_t>(n - 1)];
            for (Mass m = 1; m <= N; ++m) {
                const double fm = c[static_cast<std::size_t>(m - 1)];
                if (fm == 0.0) continue;
                const double ma = pw[static_cast<std::size_t>(m - 1)];
                double w;
                if (hat) {
                    w = (na * m + ma * n) * k(n, m);
                } else {
                    w = static_cast<double>(n) * m * (na + ma) * (dp(n) + dp(m));
                }
                acc += static_cast<long double>(w) * fn * fm;
            }
        }
        out[cell] = static_cast<double>(acc);
    });
    return out;
}

double integrate(const Grid& grid, std::span<const double> values) {
    long double acc = 0.0L;
    for (double v : values) acc += v;
    return static_cast<double>(acc) * grid.cell_volume();
}

MassTotals total_mass(const MassField& f) {
    long double acc = 0.0L;
    for (Mass n = 1; n <= f.n_max(); ++n) {
        long double s = 0.0L;
        for (double v : f.species(n)) s += v;
        acc += static_cast<long double>(n) * s;
    }
    MassTotals t;
    t.excluding_gel = static_cast<double>(acc) * f.grid().cell_volume();
    t.including_gel = t.excluding_gel + f.gel_reservoir;
    return t;
}

double total_number(const MassField& f) {
    long double acc = 0.0L;
    for (double v : f.data()) acc += v;
    return static_cast<double>(acc) * f.grid().cell_volume();
}

double phi0(double r, int dim) {
    r = std::abs(r);
    switch (dim) {
        case 1: return (2.0 * r <= 1.0) ? 0.5 * (1.0 - r) : 0.0;
        case 2:
            if (r == 0.0) return std::numeric_limits<double>::infinity();
            return (r <= 1.0) ? -std::log(r) / (2.0 * std::numbers::pi) : 0.0;
        case 3:
            if (r == 0.0) return std::numeric_limits<double>::infinity();
            return 1.0 / r;
        default: throw PreconditionError("phi0: dim must be 1, 2 or 3");
    }
}

InitialFunctionals initial_data_functionals(const MassField& f, double a) {
    const Grid& g = f.grid();
    const std::size_t cells = g.cell_count();
    // Unit profile: only plain moments enter these functionals.
    const auto dp = DiffusionProfile::constant(1.0, f.n_max());
    const auto xa = moment(f, {a, false}, dp);
    const auto x1 = moment(f, {1.0, false}, dp);
    const double vol = g.cell_volume();
    const bool skip_self = g.dim() >= 2;

    // Convolution of X_a with phi0 evaluated at every cell.
    std::vector<double> conv(cells, 0.0);
    parallel_for(cells, [&](std::size_t x) {
        long double acc = 0.0L;
        for (std::size_t y = 0; y < cells; ++y) {
            if (skip_self && x == y) continue;
            if (xa[y] == 0.0) continue;
            acc += static_cast<long double>(xa[y]) * phi0(g.min_image_distance(x, y), g.dim());
        }
        conv[x] = static_cast<double>(acc) * vol;
    });

    InitialFunctionals out;
    out.self_pairs_skipped = skip_self;
    long double a1 = 0.0L;
    double a2 = 0.0;
    for (std::size_t x = 0; x < cells; ++x) {
        // phi0 is even, so sum_y X_a(y) phi0(x-y) paired with X_1(x) gives the double integral.
        a1 += static_cast<long double>(x1[x]) * conv[x];
        a2 = std::max(a2, conv[x]);
    }
    out.A1 = static_cast<double>(a1) * vol;
    out.A2 = a2;
    out.A3 = integrate(g, xa);
    return out;
}

}  // namespace smolkit
