#include "smolkit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "smolkit/errors.hpp"

namespace smolkit {

const char* to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::Constant: return "constant";
        case KernelKind::Sum: return "sum";
        case KernelKind::SumPower: return "sum_power";
        case KernelKind::Product: return "product";
        case KernelKind::TwoExponent: return "two_exponent";
        case KernelKind::RangeDerived: return "range";
        case KernelKind::Custom: return "custom";
    }
    return "?";
}

const char* to_string(DiffusionKind kind) {
    switch (kind) {
        case DiffusionKind::Constant: return "constant";
        case DiffusionKind::PowerLaw: return "power";
        case DiffusionKind::BracketedPower: return "bracketed";
        case DiffusionKind::Custom: return "custom";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// DiffusionProfile

DiffusionProfile::DiffusionProfile(DiffusionKind kind, std::vector<double> params,
                                   std::vector<double> values)
    : kind_(kind), params_(std::move(params)), values_(std::move(values)) {
    if (values_.empty()) {
        throw PreconditionError("diffusion profile: n_max must be >= 1");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!(values_[i] > 0.0) || !std::isfinite(values_[i])) {
            throw PreconditionError("diffusion profile: d(" + std::to_string(i + 1) +
                                    ") must be positive and finite");
        }
    }
    non_increasing_ = !first_increase().has_value();
}

DiffusionProfile DiffusionProfile::constant(double value, Mass n_max) {
    return DiffusionProfile(DiffusionKind::Constant, {value},
                            std::vector<double>(static_cast<std::size_t>(std::max(n_max, 0)), value));
}

DiffusionProfile DiffusionProfile::power_law(double r2, double b2, Mass n_max) {
    std::vector<double> v(static_cast<std::size_t>(std::max(n_max, 0)));
    for (Mass n = 1; n <= n_max; ++n) v[static_cast<std::size_t>(n - 1)] = r2 * std::pow(n, -b2);
    return DiffusionProfile(DiffusionKind::PowerLaw, {r2, b2}, std::move(v));
}

DiffusionProfile DiffusionProfile::bracketed(double r1, double b1, double r2, double b2,
                                             Mass n_max) {
    if (!(r1 > 0.0 && r2 > 0.0) || r1 > r2 || b2 < 0.0 || b2 > b1) {
        throw PreconditionError("bracketed diffusion: need 0 < r1 <= r2 and 0 <= b2 <= b1");
    }
    const double coeff = std::sqrt(r1 * r2);
    const double expo = 0.5 * (b1 + b2);
    std::vector<double> v(static_cast<std::size_t>(std::max(n_max, 0)));
    for (Mass n = 1; n <= n_max; ++n) v[static_cast<std::size_t>(n - 1)] = coeff * std::pow(n, -expo);
    return DiffusionProfile(DiffusionKind::BracketedPower, {r1, b1, r2, b2}, std::move(v));
}

DiffusionProfile DiffusionProfile::custom(std::vector<double> values) {
    return DiffusionProfile(DiffusionKind::Custom, {}, std::move(values));
}

double DiffusionProfile::at(Mass n) const {
    if (n < 1 || n > n_max()) {
        throw std::out_of_range("diffusion profile: mass index " + std::to_string(n) +
                                " outside 1.." + std::to_string(n_max()));
    }
    return (*this)(n);
}

std::optional<Mass> DiffusionProfile::first_increase() const {
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
        if (values_[i + 1] > values_[i]) return static_cast<Mass>(i + 1);
    }
    return std::nullopt;
}

double DiffusionProfile::max_value() const {
    return *std::max_element(values_.begin(), values_.end());
}

double DiffusionProfile::min_value() const {
    return *std::min_element(values_.begin(), values_.end());
}

DiffusionProfile DiffusionProfile::resized(Mass n_max) const {
    switch (kind_) {
        case DiffusionKind::Constant: return constant(params_[0], n_max);
        case DiffusionKind::PowerLaw: return power_law(params_[0], params_[1], n_max);
        case DiffusionKind::BracketedPower:
            return bracketed(params_[0], params_[1], params_[2], params_[3], n_max);
        case DiffusionKind::Custom:
            if (n_max > this->n_max()) {
                throw PreconditionError("custom diffusion table has only " +
                                        std::to_string(this->n_max()) + " entries");
            }
            return custom(std::vector<double>(values_.begin(), values_.begin() + n_max));
    }
    return *this;
}

// ---------------------------------------------------------------------------
// RangeProfile

RangeProfile::RangeProfile(double chi_, double scale_) : chi(chi_), scale(scale_) {
    if (chi < 0.0 || !(scale > 0.0)) {
        throw PreconditionError("range profile: need chi >= 0 and scale > 0");
    }
}

double RangeProfile::operator()(Mass n) const { return scale * std::pow(static_cast<double>(n), chi); }

// ---------------------------------------------------------------------------
// Kernel

Kernel::Kernel(KernelKind kind, std::vector<double> params, Mass n_max,
               std::function<double(Mass, Mass)> fn)
    : kind_(kind), params_(std::move(params)), n_max_(n_max), fn_(std::move(fn)) {
    if (n_max_ < 1) throw PreconditionError("kernel: n_max must be >= 1");
    if (n_max_ <= kDenseLimit) {
        const auto n = static_cast<std::size_t>(n_max_);
        table_.resize(n * n);
        for (Mass i = 1; i <= n_max_; ++i) {
            for (Mass j = 1; j <= n_max_; ++j) {
                table_[static_cast<std::size_t>(i - 1) * n + static_cast<std::size_t>(j - 1)] = fn_(i, j);
            }
        }
        zero_ = std::all_of(table_.begin(), table_.end(), [](double v) { return v == 0.0; });
    }
}

Kernel Kernel::constant(double c, Mass n_max) {
    if (c < 0.0) throw PreconditionError("constant kernel: c must be >= 0");
    Kernel k(KernelKind::Constant, {c}, n_max, [c](Mass, Mass) { return c; });
    k.zero_ = (c == 0.0);
    return k;
}

Kernel Kernel::sum(double c0, Mass n_max) {
    if (c0 < 0.0) throw PreconditionError("sum kernel: C0 must be >= 0");
    return Kernel(KernelKind::Sum, {c0}, n_max,
                  [c0](Mass n, Mass m) { return c0 * static_cast<double>(n + m); });
}

Kernel Kernel::sum_power(double c0, double p, Mass n_max) {
    if (c0 < 0.0) throw PreconditionError("sum-power kernel: C0 must be >= 0");
    return Kernel(KernelKind::SumPower, {c0, p}, n_max,
                  [c0, p](Mass n, Mass m) { return c0 * std::pow(static_cast<double>(n + m), p); });
}

Kernel Kernel::product(double c, double a, Mass n_max) {
    if (c < 0.0) throw PreconditionError("product kernel: c must be >= 0");
    return Kernel(KernelKind::Product, {c, a}, n_max, [c, a](Mass n, Mass m) {
        return c * std::pow(static_cast<double>(n) * static_cast<double>(m), a);
    });
}

Kernel Kernel::two_exponent(double a, double b, Mass n_max) {
    return Kernel(KernelKind::TwoExponent, {a, b}, n_max, [a, b](Mass n, Mass m) {
        const double x = n, y = m;
        return std::pow(x, a) * std::pow(y, b) + std::pow(x, b) * std::pow(y, a);
    });
}

Kernel Kernel::kinetic_from_range(const DiffusionProfile& dp, const RangeProfile& rp, int dim,
                                  double c, Mass n_max) {
    if (dim < 3) {
        throw PreconditionError("kinetic kernel from range: unsupported dimension " +
                                std::to_string(dim) + " (requires dim >= 3)");
    }
    if (dp.n_max() < n_max) {
        throw PreconditionError("kinetic kernel from range: diffusion profile shorter than n_max");
    }
    if (c < 0.0) throw PreconditionError("kinetic kernel from range: c must be >= 0");
    const std::vector<double> d = dp.values();
    return Kernel(KernelKind::RangeDerived, {c, static_cast<double>(dim), rp.chi, rp.scale}, n_max,
                  [d, rp, dim, c](Mass n, Mass m) {
                      const double dsum = d[static_cast<std::size_t>(n - 1)] + d[static_cast<std::size_t>(m - 1)];
                      return c * dsum * std::pow(rp(n) + rp(m), dim - 2);
                  });
}

Kernel Kernel::custom(std::vector<double> table, Mass n_max) {
    const auto n = static_cast<std::size_t>(n_max);
    if (n_max < 1 || table.size() != n * n) {
        throw PreconditionError("custom kernel: table must be n_max x n_max");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = table[i * n + j];
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw PreconditionError("custom kernel: alpha(" + std::to_string(i + 1) + "," +
                                        std::to_string(j + 1) + ") must be finite and >= 0");
            }
            if (v != table[j * n + i]) {
                throw PreconditionError("custom kernel: asymmetric entry at (" + std::to_string(i + 1) +
                                        "," + std::to_string(j + 1) + ")");
            }
        }
    }
    auto shared = std::make_shared<const std::vector<double>>(std::move(table));
    return Kernel(KernelKind::Custom, {}, n_max, [shared, n](Mass a, Mass b) {
        return (*shared)[static_cast<std::size_t>(a - 1) * n + static_cast<std::size_t>(b - 1)];
    });
}

Kernel Kernel::from_csv(const std::string& path, Mass n_max) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("custom kernel: cannot open " + path);
    const auto n = static_cast<std::size_t>(n_max);
    std::vector<double> table(n * n, 0.0);
    std::vector<char> seen(n * n, 0);
    std::string line;
    int lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line.rfind("n,m,alpha", 0) != 0) {
                throw PreconditionError(path + ":" + std::to_string(lineno) +
                                        ": expected header `n,m,alpha`");
            }
            header = true;
            continue;
        }
        std::istringstream ss(line);
        std::string fn, fm, fa;
        if (!std::getline(ss, fn, ',') || !std::getline(ss, fm, ',') || !std::getline(ss, fa)) {
            throw PreconditionError(path + ":" + std::to_string(lineno) + ": expected n,m,alpha");
        }
        const Mass i = std::stoi(fn);
        const Mass j = std::stoi(fm);
        const double v = std::stod(fa);
        if (i < 1 || j < 1 || i > n_max || j > n_max) continue;
        const auto a = static_cast<std::size_t>(i - 1), b = static_cast<std::size_t>(j - 1);
        if (seen[a * n + b] && table[a * n + b] != v) {
            throw PreconditionError(path + ":" + std::to_string(lineno) + ": asymmetric entry (" +
                                    fn + "," + fm + ")");
        }
        table[a * n + b] = v;
        seen[a * n + b] = 1;
        if (a != b) {
            table[b * n + a] = v;
            seen[b * n + a] = 1;
        }
    }
    if (!header) throw PreconditionError(path + ": missing header `n,m,alpha`");
    for (std::size_t idx = 0; idx < seen.size(); ++idx) {
        if (!seen[idx]) {
            throw PreconditionError(path + ": no entry for (" + std::to_string(idx / n + 1) + "," +
                                    std::to_string(idx % n + 1) + ")");
        }
    }
    return custom(std::move(table), n_max);
}

Kernel Kernel::from_spec(const KernelSpec& spec, Mass n_max, const DiffusionProfile* dp) {
    switch (spec.kind) {
        case KernelKind::Constant: return constant(spec.c, n_max);
        case KernelKind::Sum: return sum(spec.c, n_max);
        case KernelKind::SumPower: return sum_power(spec.c, spec.a, n_max);
        case KernelKind::Product: return product(spec.c, spec.a, n_max);
        case KernelKind::TwoExponent: return two_exponent(spec.a, spec.b, n_max);
        case KernelKind::RangeDerived:
            if (dp == nullptr) throw PreconditionError("range kernel needs a diffusion profile");
            return kinetic_from_range(*dp, RangeProfile(spec.chi, spec.scale), spec.dim, spec.c,
                                      n_max);
        case KernelKind::Custom: return from_csv(spec.table_path, n_max);
    }
    throw PreconditionError("unknown kernel kind");
}

double Kernel::at(Mass n, Mass m) const {
    if (n < 1 || m < 1 || n > n_max_ || m > n_max_) {
        throw std::out_of_range("kernel: index (" + std::to_string(n) + "," + std::to_string(m) +
                                ") outside 1.." + std::to_string(n_max_));
    }
    return (*this)(n, m);
}

// ---------------------------------------------------------------------------
// Assumption certificates

namespace {

void require_range(const Kernel& k, const DiffusionProfile& dp, Mass n_max) {
    if (n_max < 1 || n_max > k.n_max() || n_max > dp.n_max()) {
        throw std::out_of_range("assumption check: n_max " + std::to_string(n_max) +
                                " exceeds kernel or profile range");
    }
}

std::optional<Mass> monotonicity_witness(const DiffusionProfile& dp, Mass n_max) {
    for (Mass n = 1; n < n_max; ++n) {
        if (dp(n + 1) > dp(n)) return n;
    }
    return std::nullopt;
}

std::optional<std::pair<Mass, Mass>> linear_growth_witness(const Kernel& k, double c0, Mass n_max) {
    for (Mass n = 1; n <= n_max; ++n) {
        for (Mass m = 1; m <= n_max; ++m) {
            if (k(n, m) > c0 * static_cast<double>(n + m)) return std::make_pair(n, m);
        }
    }
    return std::nullopt;
}

}  // namespace

AssumptionReport check_assumption_1_1(const Kernel& k, const DiffusionProfile& dp, double delta,
                                      Mass n_max) {
    if (!(delta > 0.0)) throw PreconditionError("check_assumption_1_1: delta must be > 0");
    require_range(k, dp, n_max);

    AssumptionReport rep;
    rep.certified_up_to = n_max;
    Mass last_violating_sum = 1;
    std::optional<std::pair<Mass, Mass>> first;
    for (Mass n = 1; n < n_max; ++n) {
        for (Mass m = 1; n + m <= n_max; ++m) {
            const double bound = delta * static_cast<double>(n + m) * (dp(n) + dp(m));
            if (k(n, m) > bound) {
                last_violating_sum = std::max(last_violating_sum, n + m);
                if (!first) first = std::make_pair(n, m);
            }
        }
    }
    rep.notes.push_back("d uniformly bounded on range: max d = " + std::to_string(dp.max_value()));
    if (first && last_violating_sum >= n_max) {
        rep.pass = false;
        rep.pair_witness = first;
        rep.reason = "alpha(n,m) > delta (n+m)(d(n)+d(m)) persists up to n+m = n_max";
        return rep;
    }
    rep.pass = true;
    rep.k0 = last_violating_sum;
    rep.notes.push_back("certified up to n_max = " + std::to_string(n_max));
    return rep;
}

AssumptionReport check_assumption_1_2(const Kernel& k, const DiffusionProfile& dp, double c0,
                                      double r1, double b1, double r2, double b2, Mass n_max) {
    if (!(r1 > 0.0 && r2 > 0.0) || b2 < 0.0 || b2 > b1) {
        throw PreconditionError("check_assumption_1_2: need r1, r2 > 0 and 0 <= b2 <= b1");
    }
    require_range(k, dp, n_max);

    AssumptionReport rep;
    rep.certified_up_to = n_max;
    if (auto n = monotonicity_witness(dp, n_max)) {
        rep.mass_witness = n;
        rep.reason = "d is not non-increasing";
        return rep;
    }
    for (Mass n = 1; n <= n_max; ++n) {
        const double lo = r1 * std::pow(n, -b1);
        const double hi = r2 * std::pow(n, -b2);
        // 1 ulp of slack: the bracketed profile sits exactly on pow() results.
        const double d = dp(n);
        if (d < lo * (1.0 - 4e-16) || d > hi * (1.0 + 4e-16)) {
            rep.mass_witness = n;
            rep.reason = "d(n) outside [r1 n^-b1, r2 n^-b2]";
            return rep;
        }
    }
    if (auto w = linear_growth_witness(k, c0, n_max)) {
        rep.pair_witness = w;
        rep.reason = "alpha(n,m) > C0 (n+m)";
        return rep;
    }
    rep.pass = true;
    rep.notes.push_back("certified up to n_max = " + std::to_string(n_max));
    return rep;
}

AssumptionReport check_assumption_1_3(const Kernel& k, const DiffusionProfile& dp, double c0,
                                      Mass n_max) {
    require_range(k, dp, n_max);

    AssumptionReport rep;
    rep.certified_up_to = n_max;
    if (auto n = monotonicity_witness(dp, n_max)) {
        rep.mass_witness = n;
        rep.reason = "d is not non-increasing";
        return rep;
    }
    const double dmin = dp(n_max);
    if (!(dmin > 0.0)) {
        rep.mass_witness = n_max;
        rep.reason = "d is not uniformly positive";
        return rep;
    }
    if (auto w = linear_growth_witness(k, c0, n_max)) {
        rep.pair_witness = w;
        rep.reason = "alpha(n,m) > C0 (n+m)";
        return rep;
    }
    rep.pass = true;
    if (dmin < dp(1)) {
        rep.notes.push_back("uniform positivity is range-limited: min d = " + std::to_string(dmin) +
                            " at n = " + std::to_string(n_max) + " and d decreases on the range");
    }
    rep.notes.push_back("certified up to n_max = " + std::to_string(n_max));
    return rep;
}

double product_bound_constant(const Kernel& k) {
    double c = 0.0;
    for (Mass n = 1; n <= k.n_max(); ++n) {
        for (Mass m = 1; m <= k.n_max(); ++m) {
            c = std::max(c, k(n, m) / (static_cast<double>(n) * static_cast<double>(m)));
        }
    }
    return c;
}

}  // namespace smolkit
