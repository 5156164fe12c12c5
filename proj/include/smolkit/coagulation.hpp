#pragma once

#include <functional>
#include <span>
#include <vector>

#include "smolkit/field.hpp"
#include "smolkit/kernels.hpp"

namespace smolkit {

/// Q_n^- counts each partner twice (ordered pairs); the tracer jump rate uses the same factor.
inline constexpr double kLossMultiplicity = 2.0;

enum class TruncationKind {
    Cutoff,        // pairs with n+m > n_max never react; truncated mass is exactly conserved
    GelReservoir,  // such pairs react and their product mass leaves into a reservoir
};

const char* to_string(TruncationKind kind);

struct TruncationPolicy {
    TruncationKind kind = TruncationKind::Cutoff;
    Mass n_max = 2;

    TruncationPolicy() = default;
    TruncationPolicy(TruncationKind kind_, Mass n_max_);

    /// Largest partner mass m that mass n may react with.
    Mass partner_limit(Mass n) const { return kind == TruncationKind::Cutoff ? n_max - n : n_max; }

    bool operator==(const TruncationPolicy&) const = default;
};

struct RateField {
    Mass n_max = 0;
    std::size_t cells = 0;
    std::vector<double> q;            // mass-major like MassField
    std::vector<double> flux_to_gel;  // product mass per volume per time leaving the system

    double operator()(Mass n, std::size_t cell) const {
        return q[static_cast<std::size_t>(n - 1) * cells + cell];
    }
};

// Single-cell kernels operating on c[0..N-1] = f_1..f_N. Shared by the PDE and ODE paths.

/// Q_n = Q_n^+ - Q_n^- for all n into `rates`; returns the gel flux (0 under Cutoff).
double cell_reaction_rates(std::span<const double> c, const Kernel& k, const TruncationPolicy& policy,
                           std::span<double> rates);
double cell_gain(std::span<const double> c, const Kernel& k, Mass n);
double cell_loss(std::span<const double> c, const Kernel& k, Mass n, const TruncationPolicy& policy);
/// Per-particle loss rate 2 sum_m alpha(n,m) c_m over admissible partners.
double cell_loss_rate(std::span<const double> c, const Kernel& k, Mass n, const TruncationPolicy& policy);

std::vector<double> gain(const MassField& f, const Kernel& k, Mass n);
std::vector<double> loss(const MassField& f, const Kernel& k, Mass n, const TruncationPolicy& policy);
RateField reaction_rates(const MassField& f, const Kernel& k, const TruncationPolicy& policy);

/// Per cell: sum over admissible ordered pairs of alpha(n,m)(phi(n+m) - phi(n) - phi(m)) f_n f_m.
/// Under Cutoff this equals sum_n phi(n) Q_n. Under GelReservoir it equals
/// sum_n phi(n) Q_n + sum_{n+m>n_max} alpha(n,m) phi(n+m) f_n f_m, so phi must cover 1..2 n_max.
std::vector<double> weighted_sum(const MassField& f, const Kernel& k,
                                 const std::function<double(Mass)>& phi,
                                 const TruncationPolicy& policy);

}  // namespace smolkit
