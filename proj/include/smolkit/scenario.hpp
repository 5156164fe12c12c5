#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "smolkit/coagulation.hpp"
#include "smolkit/integrator.hpp"
#include "smolkit/kernels.hpp"

namespace smolkit {

enum class Mode { Pde, Homogeneous, Tracer, Verify, Gelscan };

const char* to_string(Mode m);

struct DiffusionSpec {
    DiffusionKind kind = DiffusionKind::Constant;
    double value = 1.0;  // Constant
    double r1 = 1.0, b1 = 0.0, r2 = 1.0, b2 = 0.0;
    std::string file;  // Custom: CSV `n,d`

    DiffusionProfile build(Mass n_max) const;
    bool operator==(const DiffusionSpec&) const = default;
};

struct GridSpec {
    int dim = 1;
    double length = 1.0;
    int cells = 16;

    bool operator==(const GridSpec&) const = default;
};

enum class InitialKind { Monodisperse, Gaussian, Custom };

/// Monodisperse: uniform `density` on `species`.
/// Gaussian: `density` background plus a blob of `amplitude` and `width` at the domain centre.
/// Custom: CSV `n,cell,value` (missing entries are zero).
struct InitialSpec {
    InitialKind kind = InitialKind::Monodisperse;
    Mass species = 1;
    double density = 1.0;
    double amplitude = 0.0;
    double width = 0.1;
    std::string file;

    bool operator==(const InitialSpec&) const = default;
};

struct Scenario {
    std::string name = "scenario";
    Mode mode = Mode::Pde;
    KernelSpec kernel;
    DiffusionSpec diffusion;
    GridSpec grid;
    InitialSpec initial;

    double t_final = 1.0;
    double dt = 1e-3;
    Splitting splitting = Splitting::Strang;
    TruncationKind policy = TruncationKind::Cutoff;
    Mass n_max = 64;
    double stride = 0.1;
    bool auto_halve = false;

    /// Any of: mass, majorant, gronwall, plateau, assumptions.
    std::vector<std::string> monitors;
    std::vector<double> moments{0.0, 1.0, 2.0};

    double mass_tolerance = 1e-10;
    double majorant_tolerance = 1e-6;

    std::optional<double> gronwall_c0;  // unset: smallest c with alpha <= c n m
    std::optional<double> gronwall_A;   // unset: observed sup of sum n^2 f_n over both runs
    double gronwall_delta = 1e-3;       // g(0) = (1 + delta) f(0)

    double plateau_a = 2.0;
    std::vector<Mass> plateau_n_list{128, 256};

    double assumption_delta = 0.25;
    double assumption_c0 = 1.0;

    std::vector<Mass> gelscan_n_list{128, 256, 512};
    std::string gelscan_expect = "any";  // any | conserving | gelling

    std::size_t tracer_count = 10000;
    int tracer_slices = 16;
    bool tracer_immortal = false;
    double tracer_tv_tolerance = 0.02;
    double tracer_z_limit = 4.0;

    std::uint64_t seed = 0;
    std::string output_dir;  // empty: taken from the command line or environment
    bool write_snapshots = true;

    RunConfig run_config() const;
    bool operator==(const Scenario&) const = default;
};

/// Parses the `key = value` format. Relative file paths resolve against base_dir.
/// Throws ConfigError naming the key and line on any problem.
Scenario parse_config_text(const std::string& text, const std::string& base_dir = ".");
Scenario parse_config(const std::string& path);

/// Canonical text form; parse_config_text(serialize(s)) == s.
std::string serialize(const Scenario& s);

/// Shortest round-trip decimal form.
std::string format_number(double v);

inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitMonitorFailure = 2;

/// Environment variable consulted when neither --out nor output.dir is set.
inline constexpr const char* kOutputDirEnv = "SMOLKIT_OUTPUT_DIR";

/// Runs the scenario, writing series.csv, snapshots/ and report.txt under out_dir.
/// Returns kExitPass, kExitMonitorFailure, or throws on runtime and hypothesis errors.
int execute(const Scenario& s, const std::string& out_dir, std::ostream& log);

}  // namespace smolkit
