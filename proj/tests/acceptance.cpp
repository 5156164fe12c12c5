// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "smolkit/analysis.hpp"
#include "smolkit/coagulation.hpp"
#include "smolkit/integrator.hpp"
#include "smolkit/parallel.hpp"
#include "smolkit/scenario.hpp"
#include "smolkit/tracer.hpp"

using namespace smolkit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Sum kernel, d(n) = n^{-1/2}, dim 1, 64 cells, N = 128, T = 1.
struct BudgetRun {
    RunRecord rec;
    BoundReport majorant;
};

BudgetRun budget_run(TruncationKind policy) {
    const Mass N = 128;
    const Grid g(1, 1.0, 64);
    const auto dp = DiffusionProfile::power_law(1.0, 0.5, N);
    const Kernel k = Kernel::sum(1.0, N);
    MassField f = make_uniform(g, N, 1, 0.1);
    add_gaussian(f, 1, 0.5, 0.125, {0.5, 0, 0});
    RunConfig cfg;
    cfg.t_final = 1.0;
    cfg.dt = 0.0025;
    cfg.output_stride = 0.1;
    cfg.policy = {policy, N};
    std::vector<MajorantSample> samples;
    BudgetRun r;
    r.rec = run(f, k, dp, cfg, {majorant_monitor(f, dp, samples)});
    r.majorant = check_lemma31(samples, dp, 1, 1e-6);
    return r;
}

double max_drift(const std::vector<double>& series) {
    double d = 0.0;
    for (double v : series) d = std::max(d, std::fabs(v - series.front()) / series.front());
    return d;
}

Outcome criterion1() {
    const Mass N = 64;
    HomogeneousState s;
    s.c.assign(N, 0.0);
    s.c[0] = 1.0;
    RunConfig cfg;
    cfg.t_final = 1.0;
    cfg.dt = 1e-3;
    cfg.output_stride = 1.0;
    cfg.policy = {TruncationKind::Cutoff, N};
    const auto t0 = std::chrono::steady_clock::now();
    const RunRecord rec = homogeneous_run(s, Kernel::constant(1.0, N), cfg);
    const double runtime = seconds_since(t0);

    // Closed form against a fine independent integration first.
    std::vector<double> c0(N, 0.0);
    c0[0] = 1.0;
    const auto fine = oracle::rk4(c0, [](int, int) { return 1.0; }, false, 1.0, 100000);
    double oracle_err = 0.0, err = 0.0;
    for (int n = 1; n <= 20; ++n) {
        const double exact = oracle::constant_kernel_solution(n, 1.0);
        oracle_err = std::max(oracle_err, std::fabs(fine[n - 1] - exact) / exact);
        err = std::max(err, std::fabs(rec.states.back().c[n - 1] - exact) / exact);
    }
    return {err < 1e-4 && oracle_err < 1e-8 && runtime < 1.0,
            "max rel err n<=20 = " + fmt(err) + " (tol 1e-4), oracle cross-check " + fmt(oracle_err) +
                ", runtime " + fmt(runtime) + " s (limit 1 s)"};
}

Outcome criterion2(const BudgetRun& cut, const BudgetRun& res) {
    const double dc = max_drift(cut.rec.mass);
    const double dr = max_drift(res.rec.mass_with_gel);
    return {dc <= 1e-10 && dr <= 1e-10,
            "Cutoff max |I-I0|/I0 = " + fmt(dc) + ", GelReservoir max |I+G-I0|/I0 = " + fmt(dr) + " (tol 1e-10)"};
}

Outcome criterion3(const BudgetRun& cut) {
    const Mass N = 4;
    const Grid g(1, 1.0, 64);
    const auto dp = DiffusionProfile::constant(0.05, N);
    MassField f = make_uniform(g, N, 1, 0.3);
    add_gaussian(f, 1, 1.0, 0.1, {0.5, 0, 0});
    RunConfig cfg;
    cfg.t_final = 1.0;
    cfg.dt = 0.05;
    cfg.output_stride = 0.1;
    cfg.policy = {TruncationKind::Cutoff, N};
    std::vector<MajorantSample> samples;
    run(f, Kernel::constant(0.0, N), dp, cfg, {majorant_monitor(f, dp, samples)});
    const auto eq = check_lemma31(samples, dp, 1);
    const double eq_dev = std::max(std::fabs(eq.max_ratio - 1.0), std::fabs(eq.min_ratio - 1.0));
    return {cut.majorant.pass && cut.majorant.max_ratio <= 1.0 + 1e-6 && eq_dev <= 1e-12,
            "max ratio = " + fmt(cut.majorant.max_ratio) + " (tol 1+1e-6); zero-kernel equality |ratio-1| = " +
                fmt(eq_dev) + " (tol 1e-12)"};
}

Outcome criterion4() {
    const Mass N = 32;
    const Grid g(1, 1.0, 8);
    const Kernel k = Kernel::constant(1.0, N);
    const auto dp = DiffusionProfile::power_law(0.1, 0.5, N);
    const MassField f0 = make_uniform(g, N, 1, 1.0);
    const int slices = 64;
    const double T = 0.5, slice_dt = T / slices;
    // Solver snapshots every half slice; the tracer sees each slice frozen at its midpoint.
    RunConfig cfg;
    cfg.t_final = T;
    cfg.dt = 0.5 * slice_dt;
    cfg.output_stride = 0.5 * slice_dt;
    cfg.policy = {TruncationKind::Cutoff, N};
    cfg.keep_snapshots = true;
    const RunRecord rec = run(f0, k, dp, cfg);
    std::vector<MassField> timeline;
    for (int i = 0; i < slices; ++i) timeline.push_back(rec.snapshots[2 * i + 1]);
    TracerEnsembleConfig tc;
    tc.count = 200000;
    tc.seed = 20240601;
    tc.record_slices = {slices};
    const auto e = simulate(f0, timeline, k, dp, cfg.policy, tc, slice_dt);
    const auto r = density_consistency(e.histograms.back(), rec.snapshots.back(), e.initial_number);
    return {r.tv_distance <= 0.02 && r.max_abs_z <= 4.0,
            "TV = " + fmt(r.tv_distance) + " (tol 0.02), max |z| = " + fmt(r.max_abs_z) + " (limit 4), " +
                std::to_string(r.tested_bins) + " bins, alive " + fmt(r.alive_fraction) + " vs " +
                fmt(r.expected_alive)};
}

Outcome criterion5() {
    const Mass N = 32;
    const Grid g(1, 1.0, 32);
    const Kernel k = Kernel::constant(1.0, N);
    const auto dp = DiffusionProfile::power_law(0.1, 0.5, N);
    MassField f = make_uniform(g, N, 1, 0.5);
    add_gaussian(f, 1, 0.5, 0.1, {0.5, 0, 0});
    MassField h = f;
    for (double& v : h.data()) v *= 1.0 + 1e-3;
    RunConfig cfg;
    cfg.t_final = 1.0;
    cfg.dt = 0.01;
    cfg.output_stride = 0.1;
    cfg.policy = {TruncationKind::Cutoff, N};
    cfg.keep_snapshots = true;
    const RunRecord rf = run(f, k, dp, cfg), rg = run(h, k, dp, cfg);
    const double A = std::max(observed_sup_second_moment(rf.snapshots), observed_sup_second_moment(rg.snapshots));
    const auto r = check_gronwall(rf.t, rf.snapshots, rg.snapshots, k, 1.0, A);
    const auto same = check_gronwall(rf.t, rf.snapshots, rf.snapshots, k, 1.0, A);
    double control = 0.0, later = 0.0;
    for (double x : same.series) control = std::max(control, x);
    for (std::size_t i = 1; i < rf.t.size(); ++i) {
        later = std::max(later, r.series[i] / (std::exp(4.0 * A * rf.t[i]) * r.series[0]));
    }
    return {r.pass && control == 0.0,
            "max X(t)/(exp(4 c0 A t) X(0)) = " + fmt(r.max_ratio) + " (limit 1; " + fmt(later) + " for t > 0), A = " +
                fmt(A) +
                ", f=g control max X = " + fmt(control)};
}

Outcome criterion6() {
    GelScanConfig prod;
    prod.kernel.kind = KernelKind::Product;
    prod.kernel.c = 1.0;
    prod.kernel.a = 1.0;
    prod.n_list = {128, 256, 512};
    prod.t_final = 1.0;
    prod.initial = {1.0};
    prod.policy = TruncationKind::GelReservoir;
    const auto gel = gelation_scan(prod);

    GelScanConfig sub = prod;
    sub.kernel.a = 0.4;
    sub.diffusion = DiffusionProfile::power_law(1.0, 0.1, 1);
    const auto cons = gelation_scan(sub);

    const bool ok = gel.verdict == GelVerdictKind::Gelling && gel.gel.back() >= 0.1 * gel.initial_mass &&
                    cons.verdict == GelVerdictKind::Conserving;
    return {ok, std::string("nm: ") + to_string(gel.verdict) + ", G(1) = " + fmt(gel.gel[0]) + "/" +
                    fmt(gel.gel[1]) + "/" + fmt(gel.gel[2]) + " (need >= 0.1 I0); (nm)^0.4: " +
                    to_string(cons.verdict) + ", G(1) = " + fmt(cons.gel[0]) + "/" + fmt(cons.gel[1]) + "/" +
                    fmt(cons.gel[2])};
}

Outcome criterion7() {
    std::vector<MomentSummary> refs;
    for (Mass N : {128, 256}) {
        const Grid g(1, 1.0, 32);
        const auto dp = DiffusionProfile::constant(1.0, N);
        const Kernel k = Kernel::sum_power(1.0, 0.5, N);
        MassField f = make_uniform(g, N, 1, 0.5);
        add_gaussian(f, 1, 1.0, 0.1, {0.5, 0, 0});
        RunConfig cfg;
        cfg.t_final = 1.0;
        cfg.dt = 0.01;
        cfg.output_stride = 0.05;
        cfg.policy = {TruncationKind::Cutoff, N};
        MomentAccumulator acc(2.0, dp, k);
        run(f, k, dp, cfg, {acc.monitor()});
        refs.push_back(acc.summary());
    }
    const auto r = check_moment_bound(refs, 2.0);
    return {r.pass, "max relative change = " + fmt(r.max_ratio) + " (tol 0.05); sup int X2 = " +
                        fmt(refs[0].sup_xa) + " -> " + fmt(refs[1].sup_xa) + ", int int Y1 = " + fmt(refs[0].int_y) +
                        " -> " + fmt(refs[1].int_y)};
}

Outcome criterion8() {
    const double v1 = gamma_exponent(10, 0.5, 0.25, 3);
    const double v2 = gamma_exponent(10, 1.0, 0.5, 3);
    bool ok = std::fabs(v1 - 1.5) <= 1e-15 && std::fabs(v2 + 0.1) <= 1e-15;
    double cont = 0.0, slope_err = 0.0;
    for (int d = 1; d <= 3; ++d) {
        const double edge = 2.0 / d;
        cont = std::max(cont, std::fabs(gamma_exponent(3, edge, 0.1, d) -
                                        gamma_exponent(3, std::nextafter(edge, 10.0), 0.1, d)));
        for (double a = 0.0; a <= 10.0; a += 0.5) {
            for (double b1 : {0.2, edge, 1.5}) {
                const double s = gamma_exponent(a + 1, b1, 0.1, d) - gamma_exponent(a, b1, 0.1, d);
                ok = ok && s > 0.0;
                slope_err = std::max(slope_err, std::fabs(s - 2.0 / (d + 2)));
            }
        }
    }
    ok = ok && cont <= 1e-12 && slope_err <= 1e-12;
    return {ok, "gamma(10,.5,.25,3) = " + fmt(v1) + ", gamma(10,1,.5,3) = " + fmt(v2) + ", jump at b1 d = 2: " +
                    fmt(cont) + ", slope error " + fmt(slope_err)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome criterion9() {
    // Weighted-sum identity against the pair oracle.
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double ws_err = 0.0, ident = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Mass N = 2 + trial % 12;
        std::vector<double> t(N * N);
        for (Mass i = 0; i < N; ++i) {
            for (Mass j = 0; j <= i; ++j) t[i * N + j] = t[j * N + i] = 2.0 * u(rng);
        }
        const Kernel k = Kernel::custom(t, N);
        const auto c = oracle::random_vector(rng, N, 0.0, 1.0);
        MassField f(Grid(1, 1.0, 2), N);
        for (Mass n = 1; n <= N; ++n) f(n, 0) = c[n - 1];
        const auto phi = [](Mass n) { return std::cos(0.7 * n) + 0.1 * n * n; };
        for (auto kind : {TruncationKind::Cutoff, TruncationKind::GelReservoir}) {
            const double ws = weighted_sum(f, k, phi, {kind, N})[0];
            const double ref = oracle::pair_weighted_sum(c, [&](int n, int m) { return k(n, m); }, phi,
                                                         kind == TruncationKind::GelReservoir);
            ws_err = std::max(ws_err, std::fabs(ws - ref) / std::max(1.0, std::fabs(ref)));
        }
        ident = std::max(ident, std::fabs(weighted_sum(f, k, [](Mass n) { return double(n); },
                                                       {TruncationKind::Cutoff, N})[0]));
    }

    // Strang order under dt halving.
    const Mass N = 16;
    const Grid g(1, 1.0, 32);
    const Kernel k = Kernel::sum(1.0, N);
    const auto dp = DiffusionProfile::power_law(0.02, 0.5, N);
    MassField f0 = make_uniform(g, N, 1, 0.1);
    add_gaussian(f0, 1, 0.4, 0.1, {0.5, 0, 0});
    auto final_field = [&](double dt) {
        RunConfig cfg;
        cfg.t_final = 0.2;
        cfg.dt = dt;
        cfg.output_stride = 0.2;
        cfg.policy = {TruncationKind::Cutoff, N};
        cfg.keep_snapshots = true;
        return run(f0, k, dp, cfg).snapshots.back();
    };
    const MassField ref = final_field(0.025 / 16);
    auto err = [&](double dt) {
        const MassField f = final_field(dt);
        double e = 0.0;
        for (std::size_t i = 0; i < f.data().size(); ++i) e = std::max(e, std::fabs(f.data()[i] - ref.data()[i]));
        return e;
    };
    const double order = err(0.025) / err(0.0125);

    // Byte-identical outputs of a seeded tracer scenario with 1, 2 and 8 workers.
    Scenario s = parse_config_text(
        "name = determinism\nmode = tracer\nkernel.kind = constant\nintegrator.n_max = 16\n"
        "integrator.t_final = 0.25\nintegrator.dt = 0.01\nintegrator.stride = 0.125\n"
        "diffusion.kind = power\ndiffusion.r2 = 0.1\ndiffusion.b2 = 0.5\ngrid.cells = 8\n"
        "initial.kind = gaussian\ninitial.density = 0.5\ninitial.amplitude = 0.5\n"
        "tracer.count = 20000\ntracer.slices = 8\nseed = 7\nmonitors = mass\n");
    const fs::path root = fs::temp_directory_path() / "smolkit_acceptance";
    fs::remove_all(root);
    std::ostringstream log;
    std::vector<std::string> blobs;
    for (int w : {1, 2, 8}) {
        set_workers(w);
        const fs::path dir = root / ("w" + std::to_string(w));
        execute(s, dir.string(), log);
        std::string all;
        for (const char* name : {"series.csv", "histogram.csv", "tracer_summary.csv", "jumps.csv", "report.txt"}) {
            all += slurp(dir / name);
        }
        blobs.push_back(all);
    }
    set_workers(1);
    const bool identical = !blobs[0].empty() && blobs[0] == blobs[1] && blobs[0] == blobs[2];

    return {ws_err <= 1e-12 && ident <= 1e-12 && order >= 3.5 && identical,
            "weighted sum vs oracle " + fmt(ws_err) + " (tol 1e-12), phi=n sum " + fmt(ident) +
                ", splitting order factor " + fmt(order) + " (need >= 3.5), 1/2/8-worker outputs " +
                (identical ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
    int failed = 0;
    const auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << o.detail << " ["
                  << fmt(seconds_since(t0)) << " s]" << std::endl;
    };

    report(1, "constant-kernel exact solution", criterion1);
    BudgetRun cut, res;
    report(2, "exact mass conservation", [&] {
        cut = budget_run(TruncationKind::Cutoff);
        res = budget_run(TruncationKind::GelReservoir);
        return criterion2(cut, res);
    });
    report(3, "heat-majorant domination", [&] { return criterion3(cut); });
    report(4, "tracer consistency", criterion4);
    report(5, "stability bound", criterion5);
    report(6, "gelation dichotomy", criterion6);
    report(7, "moment plateau", criterion7);
    report(8, "gamma exponent", criterion8);
    report(9, "identity suite", criterion9);
    std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << std::endl;
    return failed == 0 ? 0 : 1;
}
