#include "smolkit/coagulation.hpp"

#include <algorithm>

#include "smolkit/errors.hpp"
#include "smolkit/parallel.hpp"

namespace smolkit {

const char* to_string(TruncationKind kind) {
    return kind == TruncationKind::Cutoff ? "cutoff" : "gel";
}

TruncationPolicy::TruncationPolicy(TruncationKind kind_, Mass n_max_) : kind(kind_), n_max(n_max_) {
    if (n_max < 1) throw PreconditionError("truncation policy: n_max must be >= 1");
}

namespace {

void require_shapes(std::span<const double> c, const Kernel& k, const TruncationPolicy& policy) {
    if (static_cast<Mass>(c.size()) != policy.n_max) {
        throw PreconditionError("reaction rates: state length differs from policy n_max");
    }
    if (k.n_max() < policy.n_max) throw PreconditionError("reaction rates: kernel shorter than n_max");
}

// Largest index with a nonzero concentration (0 if none).
Mass top_occupied(std::span<const double> c) {
    for (Mass n = static_cast<Mass>(c.size()); n >= 1; --n) {
        if (c[static_cast<std::size_t>(n - 1)] != 0.0) return n;
    }
    return 0;
}

double gain_upto(std::span<const double> c, const Kernel& k, Mass n) {
    // Ordered splits (m, n-m) and (n-m, m) contribute equally.
    double acc = 0.0;
    for (Mass m = 1; 2 * m < n; ++m) {
        acc += k(m, n - m) * c[static_cast<std::size_t>(m - 1)] * c[static_cast<std::size_t>(n - m - 1)];
    }
    acc *= 2.0;
    if (n % 2 == 0) {
        const double h = c[static_cast<std::size_t>(n / 2 - 1)];
        acc += k(n / 2, n / 2) * h * h;
    }
    return acc;
}

double partner_sum(std::span<const double> c, const Kernel& k, Mass n, Mass limit) {
    double acc = 0.0;
    for (Mass m = 1; m <= limit; ++m) acc += k(n, m) * c[static_cast<std::size_t>(m - 1)];
    return acc;
}

}  // namespace

double cell_gain(std::span<const double> c, const Kernel& k, Mass n) {
    if (n < 1 || n > static_cast<Mass>(c.size())) throw std::out_of_range("gain: mass index out of range");
    return gain_upto(c, k, n);
}

double cell_loss(std::span<const double> c, const Kernel& k, Mass n, const TruncationPolicy& policy) {
    require_shapes(c, k, policy);
    if (n < 1 || n > policy.n_max) throw std::out_of_range("loss: mass index out of range");
    const double cn = c[static_cast<std::size_t>(n - 1)];
    if (cn == 0.0) return 0.0;
    return kLossMultiplicity * cn * partner_sum(c, k, n, policy.partner_limit(n));
}

double cell_loss_rate(std::span<const double> c, const Kernel& k, Mass n, const TruncationPolicy& policy) {
    require_shapes(c, k, policy);
    const Mass limit = std::min(policy.partner_limit(n), top_occupied(c));
    return kLossMultiplicity * partner_sum(c, k, n, limit);
}

double cell_reaction_rates(std::span<const double> c, const Kernel& k, const TruncationPolicy& policy,
                           std::span<double> rates) {
    require_shapes(c, k, policy);
    const Mass N = policy.n_max;
    const Mass top = top_occupied(c);
    std::fill(rates.begin(), rates.end(), 0.0);
    if (top == 0) return 0.0;

    const Mass gain_top = std::min<Mass>(N, 2 * top);
    for (Mass n = 2; n <= gain_top; ++n) rates[static_cast<std::size_t>(n - 1)] = gain_upto(c, k, n);

    double flux = 0.0;
    for (Mass n = 1; n <= top; ++n) {
        const double cn = c[static_cast<std::size_t>(n - 1)];
        if (cn == 0.0) continue;
        const Mass limit = std::min(policy.partner_limit(n), top);
        double partners = 0.0;
        double escaping = 0.0;
        for (Mass m = 1; m <= limit; ++m) {
            const double term = k(n, m) * c[static_cast<std::size_t>(m - 1)];
            partners += term;
            if (n + m > N) escaping += static_cast<double>(n + m) * term;
        }
        rates[static_cast<std::size_t>(n - 1)] -= kLossMultiplicity * cn * partners;
        flux += cn * escaping;
    }
    // Ordered pairs (n,m) with n+m > N each lose n from species n and m from species m;
    // summed over ordered pairs that is sum (n+m) alpha c_n c_m.
    return policy.kind == TruncationKind::GelReservoir ? flux : 0.0;
}

std::vector<double> gain(const MassField& f, const Kernel& k, Mass n) {
    if (n < 1 || n > f.n_max()) throw std::out_of_range("gain: mass index out of range");
    std::vector<double> out(f.cells());
    parallel_for(f.cells(), [&](std::size_t cell) {
        const auto c = f.cell_values(cell);
        out[cell] = gain_upto(c, k, n);
    });
    return out;
}

std::vector<double> loss(const MassField& f, const Kernel& k, Mass n, const TruncationPolicy& policy) {
    std::vector<double> out(f.cells());
    parallel_for(f.cells(), [&](std::size_t cell) {
        const auto c = f.cell_values(cell);
        out[cell] = cell_loss(c, k, n, policy);
    });
    return out;
}

RateField reaction_rates(const MassField& f, const Kernel& k, const TruncationPolicy& policy) {
    if (f.n_max() != policy.n_max) throw PreconditionError("reaction rates: field n_max differs from policy");
    RateField r;
    r.n_max = f.n_max();
    r.cells = f.cells();
    r.q.assign(static_cast<std::size_t>(r.n_max) * r.cells, 0.0);
    r.flux_to_gel.assign(r.cells, 0.0);
    parallel_for(f.cells(), [&](std::size_t cell) {
        const auto c = f.cell_values(cell);
        std::vector<double> q(c.size());
        r.flux_to_gel[cell] = cell_reaction_rates(c, k, policy, q);
        for (Mass n = 1; n <= r.n_max; ++n) {
            r.q[static_cast<std::size_t>(n - 1) * r.cells + cell] = q[static_cast<std::size_t>(n - 1)];
        }
    });
    return r;
}

std::vector<double> weighted_sum(const MassField& f, const Kernel& k,
                                 const std::function<double(Mass)>& phi,
                                 const TruncationPolicy& policy) {
    if (f.n_max() != policy.n_max) throw PreconditionError("weighted sum: field n_max differs from policy");
    const Mass N = f.n_max();
    std::vector<double> phis(static_cast<std::size_t>(2 * N) + 1, 0.0);
    for (Mass n = 1; n <= 2 * N; ++n) phis[static_cast<std::size_t>(n)] = phi(n);
    std::vector<double> out(f.cells());
    parallel_for(f.cells(), [&](std::size_t cell) {
        const auto c = f.cell_values(cell);
        double acc = 0.0;
        for (Mass n = 1; n <= N; ++n) {
            const double cn = c[static_cast<std::size_t>(n - 1)];
            if (cn == 0.0) continue;
            for (Mass m = 1; m <= policy.partner_limit(n); ++m) {
                const double w = phis[static_cast<std::size_t>(n + m)] - phis[static_cast<std::size_t>(n)] -
                                 phis[static_cast<std::size_t>(m)];
                acc += k(n, m) * w * cn * c[static_cast<std::size_t>(m - 1)];
            }
        }
        out[cell] = acc;
    });
    return out;
}

}  // namespace smolkit
