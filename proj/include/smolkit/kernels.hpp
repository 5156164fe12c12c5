#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace smolkit {

/// 1-based cluster mass index.
using Mass = int;

enum class KernelKind { Constant, Sum, SumPower, Product, TwoExponent, RangeDerived, Custom };

const char* to_string(KernelKind kind);

/// Diffusion rates d(n) for n = 1..n_max.
enum class DiffusionKind { Constant, PowerLaw, BracketedPower, Custom };

const char* to_string(DiffusionKind kind);

class DiffusionProfile {
  public:
    static DiffusionProfile constant(double value, Mass n_max);
    /// d(n) = r2 n^{-b2}
    static DiffusionProfile power_law(double r2, double b2, Mass n_max);
    /// Geometric mean of the bracket r1 n^{-b1} <= d(n) <= r2 n^{-b2}.
    static DiffusionProfile bracketed(double r1, double b1, double r2, double b2, Mass n_max);
    static DiffusionProfile custom(std::vector<double> values);

    double operator()(Mass n) const { return values_[static_cast<std::size_t>(n - 1)]; }
    double at(Mass n) const;

    Mass n_max() const { return static_cast<Mass>(values_.size()); }
    DiffusionKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<double>& values() const { return values_; }

    /// d(n+1) <= d(n) over the whole stored range.
    bool non_increasing() const { return non_increasing_; }
    /// First n with d(n+1) > d(n), if any.
    std::optional<Mass> first_increase() const;
    double max_value() const;
    double min_value() const;

    /// Same kind and parameters, resampled on 1..n_max.
    DiffusionProfile resized(Mass n_max) const;

  private:
    DiffusionProfile(DiffusionKind kind, std::vector<double> params, std::vector<double> values);

    DiffusionKind kind_;
    std::vector<double> params_;
    std::vector<double> values_;
    bool non_increasing_ = true;
};

/// Interaction range r(n) = scale * n^chi.
struct RangeProfile {
    double chi = 0.0;
    double scale = 1.0;

    RangeProfile(double chi_, double scale_);
    double operator()(Mass n) const;
};

/// Parameter bundle from which a Kernel can be rebuilt at any truncation.
struct KernelSpec {
    KernelKind kind = KernelKind::Constant;
    double c = 1.0;       // overall coefficient (C0 for sums)
    double a = 0.0;       // first exponent
    double b = 0.0;       // second exponent (TwoExponent)
    int dim = 3;          // RangeDerived only
    double chi = 0.0;     // RangeDerived only
    double scale = 1.0;   // RangeDerived only
    std::string table_path;  // Custom only

    bool operator==(const KernelSpec&) const = default;
};

/// Symmetric, nonnegative coagulation rate alpha(n, m) on 1..n_max.
class Kernel {
  public:
    static constexpr Mass kDenseLimit = 1024;

    static Kernel constant(double c, Mass n_max);
    /// c0 (n + m)
    static Kernel sum(double c0, Mass n_max);
    /// c0 (n + m)^p
    static Kernel sum_power(double c0, double p, Mass n_max);
    /// c (n m)^a
    static Kernel product(double c, double a, Mass n_max);
    /// n^a m^b + n^b m^a
    static Kernel two_exponent(double a, double b, Mass n_max);
    /// c (d(n) + d(m)) (r(n) + r(m))^{dim - 2}; requires dim >= 3.
    static Kernel kinetic_from_range(const DiffusionProfile& dp, const RangeProfile& rp, int dim,
                                     double c, Mass n_max);
    /// Dense n_max x n_max row-major table; rejected unless symmetric and nonnegative.
    static Kernel custom(std::vector<double> table, Mass n_max);
    /// CSV with header `n,m,alpha`; a lower (or upper) triangle is sufficient.
    static Kernel from_csv(const std::string& path, Mass n_max);

    /// Build from a spec. RangeDerived needs the diffusion profile.
    static Kernel from_spec(const KernelSpec& spec, Mass n_max,
                            const DiffusionProfile* dp = nullptr);

    /// Unchecked evaluation for hot loops.
    double operator()(Mass n, Mass m) const {
        if (!table_.empty()) {
            return table_[static_cast<std::size_t>(n - 1) * static_cast<std::size_t>(n_max_) +
                          static_cast<std::size_t>(m - 1)];
        }
        return fn_(n, m);
    }

    /// Range-checked evaluation; throws std::out_of_range.
    double at(Mass n, Mass m) const;

    Mass n_max() const { return n_max_; }
    KernelKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    bool dense() const { return !table_.empty(); }
    bool is_zero() const { return zero_; }

  private:
    Kernel(KernelKind kind, std::vector<double> params, Mass n_max,
           std::function<double(Mass, Mass)> fn);

    KernelKind kind_;
    std::vector<double> params_;
    Mass n_max_;
    std::function<double(Mass, Mass)> fn_;
    std::vector<double> table_;
    bool zero_ = false;
};

/// Result of a finite-range assumption certificate over 1..certified_up_to.
struct AssumptionReport {
    bool pass = false;
    Mass k0 = 0;
    Mass certified_up_to = 0;
    std::optional<std::pair<Mass, Mass>> pair_witness;
    std::optional<Mass> mass_witness;
    std::string reason;
    std::vector<std::string> notes;
};

/// alpha(n,m) <= delta (n+m)(d(n)+d(m)) for all k0 < n+m <= n_max.
AssumptionReport check_assumption_1_1(const Kernel& k, const DiffusionProfile& dp, double delta,
                                      Mass n_max);

/// d non-increasing, alpha <= c0 (n+m), r1 n^{-b1} <= d(n) <= r2 n^{-b2}.
AssumptionReport check_assumption_1_2(const Kernel& k, const DiffusionProfile& dp, double c0,
                                      double r1, double b1, double r2, double b2, Mass n_max);

/// d positive and non-increasing, alpha <= c0 (n+m).
AssumptionReport check_assumption_1_3(const Kernel& k, const DiffusionProfile& dp, double c0,
                                      Mass n_max);

/// Smallest c such that alpha(n,m) <= c n m on 1..n_max.
double product_bound_constant(const Kernel& k);

}  // namespace smolkit
