#include "smolkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "smolkit/diffusion.hpp"
#include "smolkit/errors.hpp"

namespace smolkit {

double gamma_exponent(double a, double b1, double b2, int dim) {
    if (!(a >= 0.0) || !(b2 >= 0.0) || !(b1 >= b2) || dim < 1) {
        throw PreconditionError("gamma_exponent: requires a >= 0, 0 <= b2 <= b1, dim >= 1");
    }
    const double d = dim;
    const double base = (2.0 * a + b2 * d - 2.0) / (d + 2.0);
    if (b1 * d > 2.0) return base - b1 * (d + 1.0);
    return base - 0.5 * b1 * d - b1 - 1.0;
}

BoundReport check_lemma31(const std::vector<MajorantSample>& samples, const DiffusionProfile& dp, int dim,
                          double tolerance) {
    if (!dp.non_increasing()) {
        throw HypothesisError("heat-majorant check: diffusion profile increases at n = " +
                              std::to_string(*dp.first_increase()) + " (d must be non-increasing)");
    }
    BoundReport r;
    r.name = "heat_majorant";
    r.tolerance = tolerance;
    r.min_ratio = std::numeric_limits<double>::infinity();
    const double scale = std::pow(dp(1), 0.5 * dim);
    for (const auto& s : samples) {
        if (s.xhat1.size() != s.majorant.size()) {
            throw PreconditionError("heat-majorant check: sample sizes differ");
        }
        double max_bound = 0.0;
        for (double u : s.majorant) max_bound = std::max(max_bound, scale * u);
        const double floor = kMajorantFloor * max_bound;
        double worst = 0.0;
        for (std::size_t c = 0; c < s.xhat1.size(); ++c) {
            const double bound = scale * s.majorant[c];
            const double x = s.xhat1[c];
            double ratio;
            if (max_bound == 0.0) {
                ratio = (x > 0.0) ? std::numeric_limits<double>::infinity() : 0.0;
            } else {
                ratio = x / std::max(bound, floor);
                if (bound >= floor) {
                    r.max_ratio = std::max(r.max_ratio, ratio);
                    r.min_ratio = std::min(r.min_ratio, ratio);
                }
            }
            const double v = std::max(0.0, ratio - 1.0);
            if (v > r.max_violation) {
                r.max_violation = v;
                r.at_time = s.t;
                r.at_cell = c;
            }
            worst = std::max(worst, ratio);
        }
        r.series.push_back(worst);
    }
    if (!std::isfinite(r.min_ratio)) r.min_ratio = 0.0;
    r.pass = r.max_violation <= tolerance;
    std::ostringstream os;
    os << "max X1hat/(d(1)^{d/2} u) = " << r.max_ratio << ", min = " << r.min_ratio;
    r.detail = os.str();
    return r;
}

Monitor majorant_monitor(const MassField& f0, const DiffusionProfile& dp, std::vector<MajorantSample>& out) {
    return [f0, dp, &out](double t, const MassField& f) {
        MajorantSample s;
        s.t = t;
        s.xhat1 = moment(f, MomentSpec{1.0, true}, dp);
        s.majorant = heat_majorant(f0, dp, t);
        out.push_back(std::move(s));
    };
}

double observed_sup_second_moment(const std::vector<MassField>& snapshots) {
    double sup = 0.0;
    for (const auto& f : snapshots) {
        for (std::size_t c = 0; c < f.cells(); ++c) {
            double s = 0.0;
            for (Mass n = 1; n <= f.n_max(); ++n) s += static_cast<double>(n) * n * f(n, c);
            sup = std::max(sup, s);
        }
    }
    return sup;
}

double weighted_l1_distance(const MassField& f, const MassField& g) {
    if (!(f.grid() == g.grid()) || f.n_max() != g.n_max()) {
        throw PreconditionError("weighted_l1_distance: fields have different shapes");
    }
    long double total = 0.0L;
    for (Mass n = 1; n <= f.n_max(); ++n) {
        for (std::size_t c = 0; c < f.cells(); ++c) {
            total += static_cast<long double>(n) * std::fabs(f(n, c) - g(n, c));
        }
    }
    return static_cast<double>(total) * f.grid().cell_volume();
}

BoundReport check_gronwall(const std::vector<double>& times, const std::vector<MassField>& f_rec,
                           const std::vector<MassField>& g_rec, const Kernel& k, double c0, double A) {
    if (times.empty() || times.size() != f_rec.size() || times.size() != g_rec.size()) {
        throw PreconditionError("check_gronwall: times and records must be nonempty and aligned");
    }
    const double c = product_bound_constant(k);
    if (c > c0 * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "stability bound hypothesis violated: alpha(n,m) <= c0 n m needs c0 >= " << c << ", got " << c0;
        throw HypothesisError(os.str());
    }
    const double sup = std::max(observed_sup_second_moment(f_rec), observed_sup_second_moment(g_rec));
    if (sup > A * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "stability bound hypothesis violated: sup_x sum n^2 f_n = " << sup << " exceeds A = " << A;
        throw HypothesisError(os.str());
    }
    BoundReport r;
    r.name = "gronwall";
    r.tolerance = 0.0;
    r.min_ratio = std::numeric_limits<double>::infinity();
    const double x0 = weighted_l1_distance(f_rec.front(), g_rec.front());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double x = weighted_l1_distance(f_rec[i], g_rec[i]);
        r.series.push_back(x);
        double ratio;
        if (x0 == 0.0) {
            ratio = (x == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
        } else {
            ratio = x / (std::exp(4.0 * c0 * A * times[i]) * x0);
        }
        r.min_ratio = std::min(r.min_ratio, ratio);
        if (ratio >= r.max_ratio) {
            r.max_ratio = ratio;
            r.at_time = times[i];
        }
    }
    r.max_violation = std::max(0.0, r.max_ratio - 1.0);
    r.pass = r.max_ratio <= 1.0;
    std::ostringstream os;
    os << "X(0) = " << x0 << ", max X(t)/(exp(4 c0 A t) X(0)) = " << r.max_ratio << " (c0 = " << c0
       << ", A = " << A << ")";
    r.detail = os.str();
    return r;
}

MomentAccumulator::MomentAccumulator(double a, const DiffusionProfile& dp, const Kernel& k)
    : a_(a), dp_(dp), k_(&k) {}

Monitor MomentAccumulator::monitor() {
    return [this](double t, const MassField& f) {
        if (dp_.n_max() < f.n_max()) dp_ = dp_.resized(f.n_max());
        if (k_->n_max() < f.n_max()) throw PreconditionError("moment monitor: kernel shorter than field");
        s_.n_max = f.n_max();
        s_.times.push_back(t);
        s_.xa.push_back(integrate(f.grid(), moment(f, MomentSpec{a_, false}, dp_)));
        s_.y.push_back(integrate(f.grid(), pair_moment_Y(f, a_ - 1.0, dp_, *k_, false)));
        s_.yhat.push_back(integrate(f.grid(), pair_moment_Y(f, a_ - 1.0, dp_, *k_, true)));
    };
}

namespace {

double trapezoid(const std::vector<double>& t, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (v[i] + v[i - 1]);
    return s;
}

double relative_increment(double before, double after) {
    if (before == after) return 0.0;
    if (before == 0.0) return std::numeric_limits<double>::infinity();
    return std::fabs(after - before) / std::fabs(before);
}

}  // namespace

MomentSummary MomentAccumulator::summary() const {
    MomentSummary s = s_;
    s.sup_xa = s.xa.empty() ? 0.0 : *std::max_element(s.xa.begin(), s.xa.end());
    s.int_y = trapezoid(s.times, s.y);
    s.int_yhat = trapezoid(s.times, s.yhat);
    return s;
}

BoundReport check_moment_bound(const std::vector<MomentSummary>& refinements, double a) {
    BoundReport r;
    r.name = "moment_plateau";
    r.tolerance = kPlateauTolerance;
    r.min_ratio = std::numeric_limits<double>::infinity();
    std::ostringstream os;
    os << "a = " << a << ";";
    for (std::size_t i = 1; i < refinements.size(); ++i) {
        const auto& p = refinements[i - 1];
        const auto& q = refinements[i];
        const double inc[3] = {relative_increment(p.sup_xa, q.sup_xa), relative_increment(p.int_y, q.int_y),
                               relative_increment(p.int_yhat, q.int_yhat)};
        os << " N " << p.n_max << "->" << q.n_max << ": supX " << inc[0] << ", intY " << inc[1] << ", intYhat "
           << inc[2] << ";";
        for (double v : inc) {
            r.series.push_back(v);
            r.min_ratio = std::min(r.min_ratio, v);
            if (v > r.max_ratio) {
                r.max_ratio = v;
                r.at_cell = i;
            }
        }
    }
    if (!std::isfinite(r.min_ratio)) r.min_ratio = 0.0;
    r.max_violation = std::max(0.0, r.max_ratio - kPlateauTolerance);
    r.pass = r.max_ratio < kPlateauTolerance;
    r.detail = os.str();
    return r;
}

double exponential_growth_rate(const std::vector<double>& times, const std::vector<double>& values) {
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < times.size() && i < values.size(); ++i) {
        if (!(values[i] > 0.0)) continue;
        const double y = std::log(values[i]);
        st += times[i];
        sy += y;
        stt += times[i] * times[i];
        sty += times[i] * y;
        ++n;
    }
    const double den = n * stt - st * st;
    if (n < 2 || den == 0.0) return 0.0;
    return (n * sty - st * sy) / den;
}

const char* to_string(GelVerdictKind v) {
    switch (v) {
        case GelVerdictKind::Conserving: return "conserving";
        case GelVerdictKind::Gelling: return "gelling";
        case GelVerdictKind::Inconclusive: return "inconclusive";
    }
    return "?";
}

GelVerdict classify_gelation(std::vector<Mass> n_list, std::vector<double> gel, std::vector<double> mass_ratio,
                             double initial_mass) {
    if (n_list.size() != gel.size() || n_list.size() != mass_ratio.size() || n_list.empty()) {
        throw PreconditionError("classify_gelation: series must be nonempty and aligned");
    }
    GelVerdict v;
    v.n_list = std::move(n_list);
    v.gel = std::move(gel);
    v.mass_ratio = std::move(mass_ratio);
    v.initial_mass = initial_mass;
    const auto& g = v.gel;

    std::ostringstream os;
    os << "G(T):";
    for (std::size_t i = 0; i < g.size(); ++i) os << " N=" << v.n_list[i] << " " << g[i];

    const double floor = kGelRoundoffFloor * initial_mass;
    const bool negligible = std::all_of(g.begin(), g.end(), [&](double x) { return x <= floor; });
    bool halving = g.size() >= 2;
    bool increasing = true, decreasing = true, converged = g.size() >= 2;
    for (std::size_t i = 1; i < g.size(); ++i) {
        halving = halving && g[i] <= 0.5 * g[i - 1];
        increasing = increasing && g[i] >= g[i - 1];
        decreasing = decreasing && g[i] <= g[i - 1];
        converged = converged && g[i - 1] > 0.0 && std::fabs(g[i] - g[i - 1]) / g[i - 1] < kGelConvergenceTolerance;
    }
    const bool positive = std::all_of(g.begin(), g.end(), [&](double x) { return x > floor; });
    if (negligible) {
        v.verdict = GelVerdictKind::Conserving;
        os << "; below roundoff floor at every N";
    } else if (halving) {
        v.verdict = GelVerdictKind::Conserving;
        os << "; at least halves per refinement";
    } else if (positive && (increasing || decreasing) && converged) {
        v.verdict = GelVerdictKind::Gelling;
        os << "; monotone, successive change < " << kGelConvergenceTolerance;
    } else {
        v.verdict = GelVerdictKind::Inconclusive;
        os << "; no refinement trend";
    }
    v.trend = os.str();
    return v;
}

GelVerdict gelation_scan(const GelScanConfig& cfg) {
    if (cfg.n_list.empty()) throw PreconditionError("gelation_scan: empty N list");
    if (cfg.initial.empty()) throw PreconditionError("gelation_scan: empty initial data");
    std::vector<Mass> ns;
    std::vector<double> gel, ratio;
    double i0 = 0.0;
    for (std::size_t n = 0; n < cfg.initial.size(); ++n) i0 += static_cast<double>(n + 1) * cfg.initial[n];
    for (Mass N : cfg.n_list) {
        if (static_cast<std::size_t>(N) < cfg.initial.size()) {
            throw PreconditionError("gelation_scan: N = " + std::to_string(N) + " below initial data support");
        }
        const DiffusionProfile dp = cfg.diffusion.resized(N);
        const Kernel k = Kernel::from_spec(cfg.kernel, N, &dp);
        RunConfig rc;
        rc.t_final = cfg.t_final;
        rc.dt = std::min(cfg.dt, cfg.t_final);
        rc.policy = TruncationPolicy(cfg.policy, N);
        rc.output_stride = cfg.t_final;
        rc.auto_halve = true;
        rc.moment_exponents = {1.0};
        HomogeneousState s;
        s.c.assign(static_cast<std::size_t>(N), 0.0);
        std::copy(cfg.initial.begin(), cfg.initial.end(), s.c.begin());
        const RunRecord rec = homogeneous_run(s, k, rc);
        ns.push_back(N);
        gel.push_back(rec.gel.back());
        ratio.push_back(i0 > 0.0 ? rec.mass.back() / i0 : 1.0);
    }
    return classify_gelation(std::move(ns), std::move(gel), std::move(ratio), i0);
}

}  // namespace smolkit
