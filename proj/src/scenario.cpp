#include "smolkit/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "smolkit/analysis.hpp"
#include "smolkit/diffusion.hpp"
#include "smolkit/errors.hpp"
#include "smolkit/field.hpp"
#include "smolkit/tracer.hpp"

namespace fs = std::filesystem;

namespace smolkit {

const char* to_string(Mode m) {
    switch (m) {
        case Mode::Pde: return "pde";
        case Mode::Homogeneous: return "homogeneous";
        case Mode::Tracer: return "tracer";
        case Mode::Verify: return "verify";
        case Mode::Gelscan: return "gelscan";
    }
    return "?";
}

namespace {

const char* to_string(InitialKind k) {
    switch (k) {
        case InitialKind::Monodisperse: return "monodisperse";
        case InitialKind::Gaussian: return "gaussian";
        case InitialKind::Custom: return "custom";
    }
    return "?";
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    return out;
}

/// Location of the value being parsed, for diagnostics.
struct Where {
    std::string key;
    int line = 0;
    std::string base_dir;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("config line " + std::to_string(line) + ": key '" + key + "': " + msg);
    }
};

double as_double(const std::string& v, const Where& w) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) {
        w.fail("expected a finite number, got '" + v + "'");
    }
    return x;
}

long long as_integer(const std::string& v, const Where& w) {
    long long x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) w.fail("expected an integer, got '" + v + "'");
    return x;
}

int as_int(const std::string& v, const Where& w, long long lo, long long hi = 1LL << 30) {
    const long long x = as_integer(v, w);
    if (x < lo || x > hi) {
        w.fail("must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + v);
    }
    return static_cast<int>(x);
}

bool as_bool(const std::string& v, const Where& w) {
    if (v == "true") return true;
    if (v == "false") return false;
    w.fail("expected true or false, got '" + v + "'");
}

double positive(double x, const Where& w) {
    if (!(x > 0.0)) w.fail("must be > 0");
    return x;
}

double nonnegative(double x, const Where& w) {
    if (!(x >= 0.0)) w.fail("must be >= 0");
    return x;
}

template <class E>
E as_enum(const std::string& v, const Where& w, std::initializer_list<E> values) {
    std::string options;
    for (E e : values) {
        if (v == to_string(e)) return e;
        options += std::string(options.empty() ? "" : ", ") + to_string(e);
    }
    w.fail("expected one of {" + options + "}, got '" + v + "'");
}

std::string as_path(const std::string& v, const Where& w) {
    if (v.empty()) return v;
    fs::path p(v);
    if (p.is_relative()) p = fs::path(w.base_dir) / p;
    p = p.lexically_normal();
    if (!fs::exists(p)) w.fail("file not found: " + p.string());
    return p.string();
}

std::string join_numbers(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v[i]);
    return out;
}

std::string join_masses(const std::vector<Mass>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
    return out;
}

std::vector<double> as_number_list(const std::string& v, const Where& w) {
    std::vector<double> out;
    if (v.empty()) return out;
    for (const auto& item : split(v, ',')) out.push_back(as_double(item, w));
    return out;
}

std::vector<Mass> as_mass_list(const std::string& v, const Where& w) {
    std::vector<Mass> out;
    if (v.empty()) return out;
    for (const auto& item : split(v, ',')) out.push_back(as_int(item, w, 1));
    return out;
}

const std::set<std::string> kMonitorNames{"mass", "majorant", "gronwall", "plateau", "assumptions"};

struct KeyDef {
    const char* name;
    std::function<void(Scenario&, const std::string&, const Where&)> set;
    std::function<std::string(const Scenario&)> get;
};

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : "auto"; }

std::optional<double> as_opt_positive(const std::string& v, const Where& w) {
    if (v == "auto") return std::nullopt;
    return positive(as_double(v, w), w);
}

const std::vector<KeyDef>& key_table() {
    using S = Scenario;
    using W = Where;
    using Str = const std::string&;
    static const std::vector<KeyDef> table{
        {"name", [](S& s, Str v, const W& w) { if (v.empty()) w.fail("must not be empty"); s.name = v; },
         [](const S& s) { return s.name; }},
        {"mode",
         [](S& s, Str v, const W& w) {
             s.mode = as_enum(v, w, {Mode::Pde, Mode::Homogeneous, Mode::Tracer, Mode::Verify, Mode::Gelscan});
         },
         [](const S& s) { return std::string(to_string(s.mode)); }},
        {"seed", [](S& s, Str v, const W& w) { s.seed = static_cast<std::uint64_t>(as_int(v, w, 0, (1LL << 62))); },
         [](const S& s) { return std::to_string(s.seed); }},

        {"kernel.kind",
         [](S& s, Str v, const W& w) {
             s.kernel.kind = as_enum(v, w,
                                     {KernelKind::Constant, KernelKind::Sum, KernelKind::SumPower, KernelKind::Product,
                                      KernelKind::TwoExponent, KernelKind::RangeDerived, KernelKind::Custom});
         },
         [](const S& s) { return std::string(to_string(s.kernel.kind)); }},
        {"kernel.c", [](S& s, Str v, const W& w) { s.kernel.c = nonnegative(as_double(v, w), w); },
         [](const S& s) { return format_number(s.kernel.c); }},
        {"kernel.a", [](S& s, Str v, const W& w) { s.kernel.a = as_double(v, w); },
         [](const S& s) { return format_number(s.kernel.a); }},
        {"kernel.b", [](S& s, Str v, const W& w) { s.kernel.b = as_double(v, w); },
         [](const S& s) { return format_number(s.kernel.b); }},
        {"kernel.dim", [](S& s, Str v, const W& w) { s.kernel.dim = as_int(v, w, 1, 3); },
         [](const S& s) { return std::to_string(s.kernel.dim); }},
        {"kernel.chi", [](S& s, Str v, const W& w) { s.kernel.chi = as_double(v, w); },
         [](const S& s) { return format_number(s.kernel.chi); }},
        {"kernel.scale", [](S& s, Str v, const W& w) { s.kernel.scale = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.kernel.scale); }},
        {"kernel.file", [](S& s, Str v, const W& w) { s.kernel.table_path = as_path(v, w); },
         [](const S& s) { return s.kernel.table_path; }},

        {"diffusion.kind",
         [](S& s, Str v, const W& w) {
             s.diffusion.kind = as_enum(v, w,
                                        {DiffusionKind::Constant, DiffusionKind::PowerLaw,
                                         DiffusionKind::BracketedPower, DiffusionKind::Custom});
         },
         [](const S& s) { return std::string(to_string(s.diffusion.kind)); }},
        {"diffusion.value", [](S& s, Str v, const W& w) { s.diffusion.value = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.diffusion.value); }},
        {"diffusion.r1", [](S& s, Str v, const W& w) { s.diffusion.r1 = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.diffusion.r1); }},
        {"diffusion.b1", [](S& s, Str v, const W& w) { s.diffusion.b1 = nonnegative(as_double(v, w), w); },
         [](const S& s) { return format_number(s.diffusion.b1); }},
        {"diffusion.r2", [](S& s, Str v, const W& w) { s.diffusion.r2 = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.diffusion.r2); }},
        {"diffusion.b2", [](S& s, Str v, const W& w) { s.diffusion.b2 = nonnegative(as_double(v, w), w); },
         [](const S& s) { return format_number(s.diffusion.b2); }},
        {"diffusion.file", [](S& s, Str v, const W& w) { s.diffusion.file = as_path(v, w); },
         [](const S& s) { return s.diffusion.file; }},

        {"grid.dim", [](S& s, Str v, const W& w) { s.grid.dim = as_int(v, w, 1, 3); },
         [](const S& s) { return std::to_string(s.grid.dim); }},
        {"grid.length", [](S& s, Str v, const W& w) { s.grid.length = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.grid.length); }},
        {"grid.cells",
         [](S& s, Str v, const W& w) {
             const int m = as_int(v, w, 2, 4096);
             if ((m & (m - 1)) != 0) w.fail("must be a power of two");
             s.grid.cells = m;
         },
         [](const S& s) { return std::to_string(s.grid.cells); }},

        {"initial.kind",
         [](S& s, Str v, const W& w) {
             s.initial.kind = as_enum(v, w, {InitialKind::Monodisperse, InitialKind::Gaussian, InitialKind::Custom});
         },
         [](const S& s) { return std::string(to_string(s.initial.kind)); }},
        {"initial.species", [](S& s, Str v, const W& w) { s.initial.species = as_int(v, w, 1); },
         [](const S& s) { return std::to_string(s.initial.species); }},
        {"initial.density", [](S& s, Str v, const W& w) { s.initial.density = nonnegative(as_double(v, w), w); },
         [](const S& s) { return format_number(s.initial.density); }},
        {"initial.amplitude", [](S& s, Str v, const W& w) { s.initial.amplitude = nonnegative(as_double(v, w), w); },
         [](const S& s) { return format_number(s.initial.amplitude); }},
        {"initial.width", [](S& s, Str v, const W& w) { s.initial.width = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.initial.width); }},
        {"initial.file", [](S& s, Str v, const W& w) { s.initial.file = as_path(v, w); },
         [](const S& s) { return s.initial.file; }},

        {"integrator.t_final", [](S& s, Str v, const W& w) { s.t_final = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.t_final); }},
        {"integrator.dt", [](S& s, Str v, const W& w) { s.dt = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.dt); }},
        {"integrator.splitting",
         [](S& s, Str v, const W& w) { s.splitting = as_enum(v, w, {Splitting::Strang, Splitting::Lie}); },
         [](const S& s) { return std::string(to_string(s.splitting)); }},
        {"integrator.policy",
         [](S& s, Str v, const W& w) {
             s.policy = as_enum(v, w, {TruncationKind::Cutoff, TruncationKind::GelReservoir});
         },
         [](const S& s) { return std::string(to_string(s.policy)); }},
        {"integrator.n_max", [](S& s, Str v, const W& w) { s.n_max = as_int(v, w, 1, 1 << 16); },
         [](const S& s) { return std::to_string(s.n_max); }},
        {"integrator.stride", [](S& s, Str v, const W& w) { s.stride = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.stride); }},
        {"integrator.auto_halve", [](S& s, Str v, const W& w) { s.auto_halve = as_bool(v, w); },
         [](const S& s) { return std::string(s.auto_halve ? "true" : "false"); }},

        {"monitors",
         [](S& s, Str v, const W& w) {
             s.monitors.clear();
             if (v.empty()) return;
             for (const auto& m : split(v, ',')) {
                 if (!kMonitorNames.count(m)) {
                     w.fail("unknown monitor '" + m + "' (mass, majorant, gronwall, plateau, assumptions)");
                 }
                 s.monitors.push_back(m);
             }
         },
         [](const S& s) {
             std::string out;
             for (std::size_t i = 0; i < s.monitors.size(); ++i) out += (i ? ", " : "") + s.monitors[i];
             return out;
         }},
        {"moments",
         [](S& s, Str v, const W& w) {
             s.moments = as_number_list(v, w);
             for (double a : s.moments) {
                 if (a < 0.0) w.fail("moment exponents must be >= 0");
             }
         },
         [](const S& s) { return join_numbers(s.moments); }},

        {"mass.tolerance", [](S& s, Str v, const W& w) { s.mass_tolerance = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.mass_tolerance); }},
        {"majorant.tolerance",
         [](S& s, Str v, const W& w) { s.majorant_tolerance = nonnegative(as_double(v, w), w); },
         [](const S& s) { return format_number(s.majorant_tolerance); }},

        {"gronwall.c0", [](S& s, Str v, const W& w) { s.gronwall_c0 = as_opt_positive(v, w); },
         [](const S& s) { return opt_number(s.gronwall_c0); }},
        {"gronwall.A", [](S& s, Str v, const W& w) { s.gronwall_A = as_opt_positive(v, w); },
         [](const S& s) { return opt_number(s.gronwall_A); }},
        {"gronwall.delta", [](S& s, Str v, const W& w) { s.gronwall_delta = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.gronwall_delta); }},

        {"plateau.a", [](S& s, Str v, const W& w) { s.plateau_a = nonnegative(as_double(v, w), w); },
         [](const S& s) { return format_number(s.plateau_a); }},
        {"plateau.n_list",
         [](S& s, Str v, const W& w) {
             s.plateau_n_list = as_mass_list(v, w);
             if (s.plateau_n_list.size() < 2) w.fail("needs at least two truncations");
         },
         [](const S& s) { return join_masses(s.plateau_n_list); }},

        {"assumptions.delta", [](S& s, Str v, const W& w) { s.assumption_delta = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.assumption_delta); }},
        {"assumptions.c0", [](S& s, Str v, const W& w) { s.assumption_c0 = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.assumption_c0); }},

        {"gelscan.n_list",
         [](S& s, Str v, const W& w) {
             s.gelscan_n_list = as_mass_list(v, w);
             if (s.gelscan_n_list.empty()) w.fail("must not be empty");
         },
         [](const S& s) { return join_masses(s.gelscan_n_list); }},
        {"gelscan.expect",
         [](S& s, Str v, const W& w) {
             if (v != "any" && v != "conserving" && v != "gelling") w.fail("expected any, conserving or gelling");
             s.gelscan_expect = v;
         },
         [](const S& s) { return s.gelscan_expect; }},

        {"tracer.count", [](S& s, Str v, const W& w) { s.tracer_count = static_cast<std::size_t>(as_int(v, w, 1)); },
         [](const S& s) { return std::to_string(s.tracer_count); }},
        {"tracer.slices", [](S& s, Str v, const W& w) { s.tracer_slices = as_int(v, w, 1, 1 << 16); },
         [](const S& s) { return std::to_string(s.tracer_slices); }},
        {"tracer.immortal", [](S& s, Str v, const W& w) { s.tracer_immortal = as_bool(v, w); },
         [](const S& s) { return std::string(s.tracer_immortal ? "true" : "false"); }},
        {"tracer.tv_tolerance",
         [](S& s, Str v, const W& w) { s.tracer_tv_tolerance = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.tracer_tv_tolerance); }},
        {"tracer.z_limit", [](S& s, Str v, const W& w) { s.tracer_z_limit = positive(as_double(v, w), w); },
         [](const S& s) { return format_number(s.tracer_z_limit); }},

        {"output.dir", [](S& s, Str v, const W&) { s.output_dir = v; }, [](const S& s) { return s.output_dir; }},
        {"output.snapshots", [](S& s, Str v, const W& w) { s.write_snapshots = as_bool(v, w); },
         [](const S& s) { return std::string(s.write_snapshots ? "true" : "false"); }},
    };
    return table;
}

const std::set<std::string> kRequiredKeys{"mode", "kernel.kind", "integrator.n_max", "integrator.t_final",
                                          "integrator.dt"};

bool has_monitor(const Scenario& s, const std::string& m) {
    return std::find(s.monitors.begin(), s.monitors.end(), m) != s.monitors.end();
}

void validate_cross(const Scenario& s, const std::map<std::string, int>& lines) {
    auto fail = [&](const std::string& key, const std::string& msg) {
        const auto it = lines.find(key);
        const std::string where = it == lines.end() ? "config" : "config line " + std::to_string(it->second);
        throw ConfigError(where + ": key '" + key + "': " + msg);
    };
    if (s.initial.species > s.n_max) fail("initial.species", "exceeds integrator.n_max");
    if (s.kernel.kind == KernelKind::Custom && s.kernel.table_path.empty()) fail("kernel.file", "required for custom kernels");
    if (s.kernel.kind == KernelKind::RangeDerived && s.kernel.dim < 3) fail("kernel.dim", "range kernels need dim >= 3");
    if (s.diffusion.kind == DiffusionKind::Custom && s.diffusion.file.empty()) fail("diffusion.file", "required for custom profiles");
    if (s.diffusion.kind == DiffusionKind::BracketedPower && s.diffusion.r1 > s.diffusion.r2) {
        fail("diffusion.r1", "must not exceed diffusion.r2");
    }
    if (s.initial.kind == InitialKind::Custom && s.initial.file.empty()) fail("initial.file", "required for custom data");
    const bool spatial = s.mode == Mode::Pde || s.mode == Mode::Verify || s.mode == Mode::Tracer;
    for (const auto& m : s.monitors) {
        if (!spatial && m != "mass" && m != "assumptions") {
            fail("monitors", "monitor '" + m + "' needs a spatial mode (pde, verify or tracer)");
        }
    }
    if (s.mode == Mode::Tracer && s.policy == TruncationKind::GelReservoir && s.n_max < 2) {
        fail("integrator.n_max", "tracer runs need n_max >= 2");
    }
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

DiffusionProfile DiffusionSpec::build(Mass n_max) const {
    switch (kind) {
        case DiffusionKind::Constant: return DiffusionProfile::constant(value, n_max);
        case DiffusionKind::PowerLaw: return DiffusionProfile::power_law(r2, b2, n_max);
        case DiffusionKind::BracketedPower: return DiffusionProfile::bracketed(r1, b1, r2, b2, n_max);
        case DiffusionKind::Custom: {
            std::ifstream in(file);
            if (!in) throw ConfigError("cannot open diffusion table " + file);
            std::string line;
            std::getline(in, line);
            if (trim(line) != "n,d") throw ConfigError("diffusion table " + file + ": header must be n,d");
            std::vector<double> values(static_cast<std::size_t>(n_max), 0.0);
            std::vector<bool> seen(values.size(), false);
            int lineno = 1;
            while (std::getline(in, line)) {
                ++lineno;
                if (trim(line).empty()) continue;
                const auto cols = split(line, ',');
                const Where w{"diffusion.file", lineno, "."};
                if (cols.size() != 2) w.fail(file + ": expected two columns");
                const int n = as_int(cols[0], w, 1);
                if (n > n_max) continue;
                values[static_cast<std::size_t>(n - 1)] = as_double(cols[1], w);
                seen[static_cast<std::size_t>(n - 1)] = true;
            }
            const auto miss = std::find(seen.begin(), seen.end(), false);
            if (miss != seen.end()) {
                throw ConfigError("diffusion table " + file + ": missing n = " +
                                  std::to_string(miss - seen.begin() + 1));
            }
            return DiffusionProfile::custom(std::move(values));
        }
    }
    throw ConfigError("unknown diffusion kind");
}

RunConfig Scenario::run_config() const {
    RunConfig c;
    c.t_final = t_final;
    c.dt = dt;
    c.splitting = splitting;
    c.policy = TruncationPolicy(policy, n_max);
    c.output_stride = stride;
    c.seed = seed;
    c.auto_halve = auto_halve;
    c.moment_exponents = moments;
    return c;
}

Scenario parse_config_text(const std::string& text, const std::string& base_dir) {
    std::map<std::string, const KeyDef*> index;
    for (const auto& k : key_table()) index[k.name] = &k;

    Scenario s;
    std::map<std::string, int> lines;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = index.find(key);
        if (it == index.end()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (lines.count(key)) {
            throw ConfigError("config line " + std::to_string(lineno) + ": key '" + key + "' repeated (first on line " +
                              std::to_string(lines[key]) + ")");
        }
        lines[key] = lineno;
        it->second->set(s, value, Where{key, lineno, base_dir});
    }
    for (const auto& k : kRequiredKeys) {
        if (!lines.count(k)) throw ConfigError("config: missing required key '" + k + "'");
    }
    validate_cross(s, lines);
    return s;
}

Scenario parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const fs::path base = fs::path(path).parent_path();
    return parse_config_text(ss.str(), base.empty() ? "." : base.string());
}

std::string serialize(const Scenario& s) {
    std::string out = "# smolkit scenario v1\n";
    for (const auto& k : key_table()) {
        const std::string v = k.get(s);
        const std::string name = k.name;
        if (v.empty() && (name == "kernel.file" || name == "diffusion.file" || name == "initial.file" ||
                          name == "output.dir")) {
            continue;
        }
        out += name + " = " + v + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

constexpr const char* kSeriesHeader = "# smolkit series v1";

MassField read_custom_initial(const std::string& path, const Grid& grid, Mass n_max) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open initial data " + path);
    std::string line;
    std::getline(in, line);
    if (trim(line) != "n,cell,value") throw ConfigError("initial data " + path + ": header must be n,cell,value");
    MassField f(grid, n_max);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cols = split(line, ',');
        const Where w{"initial.file", lineno, "."};
        if (cols.size() != 3) w.fail(path + ": expected three columns");
        const int n = as_int(cols[0], w, 1, n_max);
        const int cell = as_int(cols[1], w, 0, static_cast<long long>(grid.cell_count()) - 1);
        const double v = as_double(cols[2], w);
        if (v < 0.0) w.fail(path + ": negative density");
        f(n, static_cast<std::size_t>(cell)) = v;
    }
    return f;
}

MassField initial_field(const Scenario& s, const Grid& grid) {
    switch (s.initial.kind) {
        case InitialKind::Monodisperse: return make_uniform(grid, s.n_max, s.initial.species, s.initial.density);
        case InitialKind::Gaussian: {
            MassField f = make_uniform(grid, s.n_max, s.initial.species, s.initial.density);
            const double c = 0.5 * grid.length();
            add_gaussian(f, s.initial.species, s.initial.amplitude, s.initial.width, {c, c, c});
            return f;
        }
        case InitialKind::Custom: return read_custom_initial(s.initial.file, grid, s.n_max);
    }
    throw ConfigError("unknown initial kind");
}

/// Spatial mean of each species.
std::vector<double> mean_concentrations(const MassField& f) {
    std::vector<double> c(static_cast<std::size_t>(f.n_max()), 0.0);
    for (Mass n = 1; n <= f.n_max(); ++n) {
        c[static_cast<std::size_t>(n - 1)] = integrate(f.grid(), f.species(n)) / f.grid().volume();
    }
    return c;
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;  // data[column][row]

    void add(std::string name, std::vector<double> values) {
        columns.push_back(std::move(name));
        data.push_back(std::move(values));
    }

    void write(const fs::path& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << kSeriesHeader << '\n';
        for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
        out << '\n';
        const std::size_t rows = data.empty() ? 0 : data.front().size();
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < columns.size(); ++j) {
                out << (j ? "," : "") << (i < data[j].size() ? format_number(data[j][i]) : "");
            }
            out << '\n';
        }
    }
};

std::string moment_column(double a) { return "X" + format_number(a); }

Table record_table(const RunRecord& rec) {
    Table t;
    t.add("t", rec.t);
    t.add("I", rec.mass);
    t.add("I_plus_gel", rec.mass_with_gel);
    t.add("G", rec.gel);
    for (std::size_t j = 0; j < rec.moment_exponents.size(); ++j) {
        t.add(moment_column(rec.moment_exponents[j]), rec.moments[j]);
    }
    return t;
}

std::string stride_name(std::size_t i) {
    std::ostringstream os;
    os << "stride_" << std::setw(4) << std::setfill('0') << i << ".csv";
    return os.str();
}

void write_field(const fs::path& path, const MassField& f) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "n,cell,value\n";
    for (Mass n = 1; n <= f.n_max(); ++n) {
        for (std::size_t c = 0; c < f.cells(); ++c) out << n << ',' << c << ',' << format_number(f(n, c)) << '\n';
    }
}

void write_state(const fs::path& path, const HomogeneousState& s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "n,value\n";
    for (std::size_t i = 0; i < s.c.size(); ++i) out << i + 1 << ',' << format_number(s.c[i]) << '\n';
    out << "gel," << format_number(s.gel) << '\n';
}

struct Outcome {
    std::string name;
    bool pass = true;
    std::string detail;
};

/// |I + G - I(0)| / I(0) per stride.
std::vector<double> mass_drift(const RunRecord& rec) {
    std::vector<double> d;
    const double i0 = rec.mass_with_gel.front();
    for (double v : rec.mass_with_gel) d.push_back(i0 > 0.0 ? std::fabs(v - i0) / i0 : std::fabs(v));
    return d;
}

Outcome mass_outcome(const std::vector<double>& drift, double tol) {
    const double worst = drift.empty() ? 0.0 : *std::max_element(drift.begin(), drift.end());
    std::ostringstream os;
    os << "max |I + G - I(0)| / I(0) = " << worst << " (tolerance " << tol << ")";
    return {"mass", worst <= tol, os.str()};
}

Outcome outcome_of(const BoundReport& r) { return {r.name, r.pass, r.detail}; }

void assumption_lines(const Scenario& s, const Kernel& k, const DiffusionProfile& dp, std::vector<std::string>& notes) {
    auto describe = [](const char* label, const AssumptionReport& r) {
        std::ostringstream os;
        os << label << ": " << (r.pass ? "certified" : "violated") << " up to N = " << r.certified_up_to;
        if (r.k0 > 0) os << ", k0 = " << r.k0;
        if (r.pair_witness) os << ", witness (" << r.pair_witness->first << "," << r.pair_witness->second << ")";
        if (r.mass_witness) os << ", witness n = " << *r.mass_witness;
        if (!r.reason.empty()) os << " [" << r.reason << "]";
        for (const auto& n : r.notes) os << " [" << n << "]";
        return os.str();
    };
    notes.push_back(describe("range-limited kernel bound (delta)",
                             check_assumption_1_1(k, dp, s.assumption_delta, s.n_max)));
    notes.push_back(describe("sublinear kernel with monotone diffusion (c0)",
                             check_assumption_1_3(k, dp, s.assumption_c0, s.n_max)));
    std::ostringstream os;
    os << "product bound constant max alpha(n,m)/(n m) = " << product_bound_constant(k);
    notes.push_back(os.str());
}

void write_report(const fs::path& dir, const Scenario& s, const std::vector<Outcome>& outcomes,
                  const std::vector<std::string>& notes, std::ostream& log) {
    std::ostringstream os;
    os << "scenario: " << s.name << '\n' << "mode: " << to_string(s.mode) << '\n';
    for (const auto& n : notes) os << "note: " << n << '\n';
    bool all = true;
    for (const auto& o : outcomes) {
        os << (o.pass ? "PASS " : "FAIL ") << o.name << ": " << o.detail << '\n';
        all = all && o.pass;
    }
    os << "result: " << (all ? "pass" : "fail") << '\n';
    std::ofstream out(dir / "report.txt");
    if (!out) throw std::runtime_error("cannot write report.txt");
    out << os.str();
    log << os.str();
}

void write_snapshots(const fs::path& dir, const RunRecord& rec) {
    const fs::path snap = dir / "snapshots";
    fs::create_directories(snap);
    for (std::size_t i = 0; i < rec.snapshots.size(); ++i) write_field(snap / stride_name(i), rec.snapshots[i]);
    for (std::size_t i = 0; i < rec.states.size(); ++i) write_state(snap / stride_name(i), rec.states[i]);
}

int finish(const fs::path& dir, const Scenario& s, const std::vector<Outcome>& outcomes,
           const std::vector<std::string>& notes, std::ostream& log) {
    write_report(dir, s, outcomes, notes, log);
    const bool all = std::all_of(outcomes.begin(), outcomes.end(), [](const Outcome& o) { return o.pass; });
    return all ? kExitPass : kExitMonitorFailure;
}

int execute_homogeneous(const Scenario& s, const fs::path& dir, std::ostream& log) {
    const DiffusionProfile dp = s.diffusion.build(s.n_max);
    const Kernel k = Kernel::from_spec(s.kernel, s.n_max, &dp);
    const Grid grid(s.grid.dim, s.grid.length, s.grid.cells);
    HomogeneousState c0;
    c0.c = mean_concentrations(initial_field(s, grid));
    const RunRecord rec = homogeneous_run(c0, k, s.run_config());

    Table t = record_table(rec);
    std::vector<Outcome> outcomes;
    std::vector<std::string> notes;
    if (has_monitor(s, "mass")) {
        auto drift = mass_drift(rec);
        outcomes.push_back(mass_outcome(drift, s.mass_tolerance));
        t.add("mass_drift", std::move(drift));
    }
    if (has_monitor(s, "assumptions")) assumption_lines(s, k, dp, notes);
    t.write(dir / "series.csv");
    if (s.write_snapshots) write_snapshots(dir, rec);
    return finish(dir, s, outcomes, notes, log);
}

MomentSummary plateau_run(const Scenario& s, const Grid& grid, Mass N) {
    Scenario r = s;
    r.n_max = N;
    const DiffusionProfile dp = r.diffusion.build(N);
    const Kernel k = Kernel::from_spec(r.kernel, N, &dp);
    MomentAccumulator acc(r.plateau_a, dp, k);
    RunConfig cfg = r.run_config();
    Integrator(grid, k, dp, cfg).run(initial_field(r, grid), {acc.monitor()});
    return acc.summary();
}

int execute_pde(const Scenario& s, const fs::path& dir, std::ostream& log) {
    const DiffusionProfile dp = s.diffusion.build(s.n_max);
    const Kernel k = Kernel::from_spec(s.kernel, s.n_max, &dp);
    const Grid grid(s.grid.dim, s.grid.length, s.grid.cells);
    const MassField f0 = initial_field(s, grid);

    std::vector<Outcome> outcomes;
    std::vector<std::string> notes;
    if (has_monitor(s, "assumptions") || s.mode == Mode::Verify) assumption_lines(s, k, dp, notes);

    RunConfig cfg = s.run_config();
    const bool gronwall = has_monitor(s, "gronwall");
    cfg.keep_snapshots = s.write_snapshots || gronwall;

    std::vector<MajorantSample> majorant;
    std::vector<Monitor> monitors;
    if (has_monitor(s, "majorant")) monitors.push_back(majorant_monitor(f0, dp, majorant));

    const Integrator integ(grid, k, dp, cfg);
    const RunRecord rec = integ.run(f0, monitors);
    Table t = record_table(rec);

    if (has_monitor(s, "mass")) {
        auto drift = mass_drift(rec);
        outcomes.push_back(mass_outcome(drift, s.mass_tolerance));
        t.add("mass_drift", std::move(drift));
    }
    if (has_monitor(s, "majorant")) {
        const BoundReport r = check_lemma31(majorant, dp, grid.dim(), s.majorant_tolerance);
        outcomes.push_back(outcome_of(r));
        t.add("majorant_ratio", r.series);
    }
    if (gronwall) {
        MassField g0 = f0;
        for (double& v : g0.data()) v *= 1.0 + s.gronwall_delta;
        const RunRecord grec = integ.run(g0);
        const double c0 = s.gronwall_c0.value_or(product_bound_constant(k));
        const double A = s.gronwall_A.value_or(
            std::max(observed_sup_second_moment(rec.snapshots), observed_sup_second_moment(grec.snapshots)));
        const BoundReport r = check_gronwall(rec.t, rec.snapshots, grec.snapshots, k, c0, A);
        outcomes.push_back(outcome_of(r));
        std::vector<double> ratio;
        const double x0 = r.series.front();
        for (std::size_t i = 0; i < r.series.size(); ++i) {
            ratio.push_back(x0 > 0.0 ? r.series[i] / (std::exp(4.0 * c0 * A * rec.t[i]) * x0) : 0.0);
        }
        t.add("gronwall_X", r.series);
        t.add("gronwall_ratio", std::move(ratio));
    }
    if (has_monitor(s, "plateau")) {
        std::vector<MomentSummary> runs;
        Table p;
        std::vector<double> ns, sup, iy, iyh;
        for (Mass N : s.plateau_n_list) {
            runs.push_back(plateau_run(s, grid, N));
            ns.push_back(N);
            sup.push_back(runs.back().sup_xa);
            iy.push_back(runs.back().int_y);
            iyh.push_back(runs.back().int_yhat);
        }
        p.add("n_max", ns);
        p.add("sup_int_Xa", sup);
        p.add("int_int_Y", iy);
        p.add("int_int_Yhat", iyh);
        p.write(dir / "plateau.csv");
        const BoundReport r = check_moment_bound(runs, s.plateau_a);
        outcomes.push_back(outcome_of(r));
        std::vector<double> xa = runs.back().xa;
        std::ostringstream os;
        os << "log-slope of int X_a over time at N = " << runs.back().n_max << ": "
           << exponential_growth_rate(runs.back().times, xa);
        notes.push_back(os.str());
    }
    t.write(dir / "series.csv");
    if (s.write_snapshots) write_snapshots(dir, rec);
    return finish(dir, s, outcomes, notes, log);
}

void write_histogram(const fs::path& path, const std::vector<TracerHistogram>& hs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << kSeriesHeader << "\ntime,mass,cell,count\n";
    for (const auto& h : hs) {
        for (Mass m = 1; m <= h.n_max; ++m) {
            for (std::size_t c = 0; c < h.cells; ++c) {
                if (h(m, c) > 0) out << format_number(h.time) << ',' << m << ',' << c << ',' << h(m, c) << '\n';
            }
        }
        out << format_number(h.time) << ",cemetery,," << h.cemetery << '\n';
    }
}

int execute_tracer(const Scenario& s, const fs::path& dir, std::ostream& log) {
    const DiffusionProfile dp = s.diffusion.build(s.n_max);
    const Kernel k = Kernel::from_spec(s.kernel, s.n_max, &dp);
    const Grid grid(s.grid.dim, s.grid.length, s.grid.cells);
    const MassField f0 = initial_field(s, grid);

    // Fields are frozen at slice midpoints, so the run records every half slice.
    const double slice_dt = s.t_final / s.tracer_slices;
    const double half = 0.5 * slice_dt;
    RunConfig cfg = s.run_config();
    cfg.dt = half / std::ceil(half / s.dt - 1e-9);
    cfg.output_stride = half;
    cfg.keep_snapshots = true;
    const RunRecord rec = Integrator(grid, k, dp, cfg).run(f0);
    if (rec.snapshots.size() != static_cast<std::size_t>(2 * s.tracer_slices + 1)) {
        throw std::runtime_error("tracer: solver did not produce one snapshot per half slice");
    }
    std::vector<MassField> timeline;
    for (int i = 0; i < s.tracer_slices; ++i) timeline.push_back(rec.snapshots[static_cast<std::size_t>(2 * i + 1)]);

    TracerEnsembleConfig tc;
    tc.count = s.tracer_count;
    tc.seed = s.seed;
    tc.record_slices = {0, s.tracer_slices};
    tc.options.immortal = s.tracer_immortal;
    const TruncationPolicy policy(s.policy, s.n_max);
    const TracerEnsemble ens = simulate(f0, timeline, k, dp, policy, tc, slice_dt);

    Table t = record_table(rec);
    std::vector<Outcome> outcomes;
    std::vector<std::string> notes;
    Table summary;
    std::vector<double> times, tv, zmax, q50, q90, q99, tested, pooled, alive, expected, cem, esc;
    for (std::size_t i = 0; i < ens.histograms.size(); ++i) {
        const auto& h = ens.histograms[i];
        const MassField& f = (i == 0) ? rec.snapshots.front() : rec.snapshots.back();
        const ConsistencyReport r = density_consistency(h, f, ens.initial_number);
        times.push_back(h.time);
        tv.push_back(r.tv_distance);
        zmax.push_back(r.max_abs_z);
        q50.push_back(r.z_q50);
        q90.push_back(r.z_q90);
        q99.push_back(r.z_q99);
        tested.push_back(static_cast<double>(r.tested_bins));
        pooled.push_back(static_cast<double>(r.pooled_bins));
        alive.push_back(r.alive_fraction);
        expected.push_back(r.expected_alive);
        cem.push_back(static_cast<double>(h.cemetery));
        esc.push_back(static_cast<double>(h.escaped));
        if (i + 1 == ens.histograms.size() && !s.tracer_immortal) {
            std::ostringstream os;
            os << "TV = " << r.tv_distance << " (tolerance " << s.tracer_tv_tolerance << "), max |z| = " << r.max_abs_z
               << " (limit " << s.tracer_z_limit << "), alive " << r.alive_fraction << " vs " << r.expected_alive;
            outcomes.push_back({"tracer_consistency",
                                r.tv_distance <= s.tracer_tv_tolerance && r.max_abs_z <= s.tracer_z_limit, os.str()});
        }
    }
    summary.add("time", times);
    summary.add("tv_distance", tv);
    summary.add("max_abs_z", zmax);
    summary.add("z_q50", q50);
    summary.add("z_q90", q90);
    summary.add("z_q99", q99);
    summary.add("tested_bins", tested);
    summary.add("pooled_bins", pooled);
    summary.add("alive_fraction", alive);
    summary.add("expected_alive", expected);
    summary.add("cemetery", cem);
    summary.add("escaped", esc);
    summary.write(dir / "tracer_summary.csv");
    write_histogram(dir / "histogram.csv", ens.histograms);
    {
        Table j;
        std::vector<double> idx, cnt;
        for (std::size_t i = 0; i < ens.jump_counts.size(); ++i) {
            idx.push_back(static_cast<double>(i));
            cnt.push_back(static_cast<double>(ens.jump_counts[i]));
        }
        j.add("jumps", idx);
        j.add("trajectories", cnt);
        j.write(dir / "jumps.csv");
    }
    std::ostringstream os;
    os << "trajectories " << s.tracer_count << ", slices " << s.tracer_slices << ", substeps per slice "
       << ens.substeps_per_slice << ", M0 = " << ens.initial_number;
    notes.push_back(os.str());
    if (s.mode == Mode::Tracer && has_monitor(s, "mass")) {
        auto drift = mass_drift(rec);
        outcomes.push_back(mass_outcome(drift, s.mass_tolerance));
        t.add("mass_drift", std::move(drift));
    }
    t.write(dir / "series.csv");
    if (s.write_snapshots) write_snapshots(dir, rec);
    return finish(dir, s, outcomes, notes, log);
}

int execute_gelscan(const Scenario& s, const fs::path& dir, std::ostream& log) {
    const Grid grid(s.grid.dim, s.grid.length, s.grid.cells);
    std::vector<double> c = mean_concentrations(initial_field(s, grid));
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();

    GelScanConfig g;
    g.kernel = s.kernel;
    g.n_list = s.gelscan_n_list;
    g.t_final = s.t_final;
    g.initial = c;
    g.policy = s.policy;
    g.diffusion = s.diffusion.build(*std::max_element(s.gelscan_n_list.begin(), s.gelscan_n_list.end()));
    g.dt = s.dt;
    const GelVerdict v = gelation_scan(g);

    Table t;
    std::vector<double> ns(v.n_list.begin(), v.n_list.end());
    t.add("n_max", ns);
    t.add("I_ratio", v.mass_ratio);
    t.add("G", v.gel);
    t.write(dir / "gelscan.csv");

    std::vector<Outcome> outcomes;
    std::ostringstream os;
    os << "verdict " << to_string(v.verdict) << "; " << v.trend << "; I(0) = " << v.initial_mass;
    const bool ok = s.gelscan_expect == "any" || s.gelscan_expect == to_string(v.verdict);
    outcomes.push_back({"gelscan", ok, os.str()});
    return finish(dir, s, outcomes, {}, log);
}

}  // namespace

int execute(const Scenario& s, const std::string& out_dir, std::ostream& log) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "scenario.cfg");
        cfg << serialize(s);
    }
    switch (s.mode) {
        case Mode::Homogeneous: return execute_homogeneous(s, dir, log);
        case Mode::Pde:
        case Mode::Verify: return execute_pde(s, dir, log);
        case Mode::Tracer: return execute_tracer(s, dir, log);
        case Mode::Gelscan: return execute_gelscan(s, dir, log);
    }
    throw ConfigError("unknown mode");
}

}  // namespace smolkit
