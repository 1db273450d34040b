// cli_io.cpp - config parsing, table writers and the tlc subcommands

#include "tlc/cli_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "tlc/bath.hpp"
#include "tlc/generators.hpp"
#include "tlc/thermo.hpp"

#ifndef TLC_VERSION
#define TLC_VERSION "0.0.0"
#endif

namespace tlc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_identifier(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
    });
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

// ---------------------------------------------------------------- key registry

enum class Kind { Number, Integer, Text, NumberList, Range };

struct KeySpec {
    const char* key;
    const char* def;
    Kind kind;
    std::vector<std::string> choices;  // for Text keys with a closed set
    const char* help;
};

const std::vector<KeySpec>& global_keys() {
    static const std::vector<KeySpec> k{
        {"omega_over_delta", "2", Kind::Number, {}, "driving frequency Omega/Delta"},
        {"lambda", "0.005", Kind::Number, {}, "system-bath coupling"},
        {"kT_over_delta", "0.1", Kind::Number, {}, "temperature kT/Delta"},
        {"omega_c_over_delta", "1000", Kind::Number, {}, "Ohmic cutoff omega_c/Delta"},
        {"i0", "1", Kind::Number, {}, "current scale I0"},
        {"quad_eta", "0.02,0.01,0.005,0.0025,0.00125", Kind::NumberList, {}, "damping values for the eta -> 0 extrapolation"},
        {"quad_rel_tol", "1e-06", Kind::Number, {}, "accepted relative error of each coefficient"},
        {"quad_max_subdivisions", "18", Kind::Integer, {}, "bisection depth per quadrature panel"},
        {"quad_u_max", "0", Kind::Number, {}, "time cutoff for direct u-quadrature checks (0: 40/eta_min)"},
        {"integrator", "exact_exponential", Kind::Text, {"exact_exponential", "rk4", "rk45"}, "propagation method"},
        {"integrator_step", "0.01", Kind::Number, {}, "rk4 step / rk45 initial step"},
        {"integrator_rel_tol", "1e-12", Kind::Number, {}, "rk45 relative tolerance"},
        {"integrator_abs_tol", "1e-14", Kind::Number, {}, "rk45 absolute tolerance"},
        {"integrator_stride", "1", Kind::Integer, {}, "keep every n-th time point"},
        {"seed", "42", Kind::Integer, {}, "random seed"},
        {"format", "csv", Kind::Text, {"csv", "jsonl"}, "output format"},
    };
    return k;
}

const std::map<std::string, std::vector<KeySpec>>& command_keys() {
    static const std::map<std::string, std::vector<KeySpec>> k{
        {"coeffs", {}},
        {"evolve",
         {{"initial", "0,0.5,-0.4", Kind::NumberList, {}, "initial Bloch vector r1,r2,r3 (rotated basis)"},
          {"dynamics", "redfield", Kind::Text, {"redfield", "cp"}, "generator"},
          {"t_max", "20", Kind::Number, {}, "final time (units 1/Delta)"},
          {"points", "2001", Kind::Integer, {}, "number of time points"},
          {"reference", "stationary", Kind::Text, {"stationary", "gibbs"}, "reference state of sigma"}}},
        {"stationary", {{"dynamics", "both", Kind::Text, {"redfield", "cp", "both"}, "generator"}}},
        {"scan",
         {{"mode", "pure-violations", Kind::Text, {"pure-violations", "sigma-surface", "positivity-map"}, "scan type"},
          {"dynamics", "both", Kind::Text, {"redfield", "cp", "both"}, "generator"},
          {"samples", "100000", Kind::Integer, {}, "pure states per temperature"},
          {"kt_list", "", Kind::NumberList, {}, "temperatures kT/Delta for pure-violations (empty: kT_over_delta)"},
          {"reference", "stationary", Kind::Text, {"stationary", "gibbs"}, "reference state of sigma"},
          {"r3", "0", Kind::Number, {}, "fixed r3 of the sigma surface"},
          {"grid_n", "101", Kind::Integer, {}, "sigma surface points per axis"},
          {"grid_min", "-1", Kind::Number, {}, "sigma surface lower bound"},
          {"grid_max", "1", Kind::Number, {}, "sigma surface upper bound"},
          {"re_min", "-4", Kind::Number, {}, "positivity map Re(alpha) lower bound"},
          {"re_max", "4", Kind::Number, {}, "positivity map Re(alpha) upper bound"},
          {"im_min", "-4", Kind::Number, {}, "positivity map Im(alpha) lower bound"},
          {"im_max", "4", Kind::Number, {}, "positivity map Im(alpha) upper bound"},
          {"n_re", "200", Kind::Integer, {}, "positivity map points along Re(alpha)"},
          {"n_im", "200", Kind::Integer, {}, "positivity map points along Im(alpha)"}}},
        {"sweep",
         {{"vary", "temperature", Kind::Text, {"temperature", "drive"}, "swept parameter"},
          {"range", "", Kind::Range, {}, "a:b:n (empty: 0.01:1:12 for temperature, 0.3:10:12 for drive)"},
          {"dynamics", "both", Kind::Text, {"both"}, "generators compared"},
          {"n_relax", "30", Kind::Number, {}, "horizon of the Redfield run in relaxation times"}}},
    };
    return k;
}

const KeySpec* find_key(const std::string& command, const std::string& key) {
    for (const auto& s : global_keys())
        if (key == s.key) return &s;
    const auto it = command_keys().find(command);
    if (it != command_keys().end())
        for (const auto& s : it->second)
            if (key == s.key) return &s;
    return nullptr;
}

bool known_anywhere(const std::string& key) {
    for (const auto& [cmd, keys] : command_keys())
        if (find_key(cmd, key)) return true;
    return false;
}

std::string canonical(const KeySpec& s, const std::string& raw) {
    const std::string v = trim(raw);
    const std::string key = s.key;
    switch (s.kind) {
    case Kind::Number: return format_number(parse_number(v, key));
    case Kind::Integer: {
        long long x = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
        if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw UsageError("invalid integer for " + key + ": '" + v + "'");
        return std::to_string(x);
    }
    case Kind::Text:
        if (!s.choices.empty() && std::find(s.choices.begin(), s.choices.end(), v) == s.choices.end()) {
            std::string opts;
            for (const auto& c : s.choices) opts += (opts.empty() ? "" : "|") + c;
            throw UsageError("invalid value for " + key + ": '" + v + "' (expected " + opts + ")");
        }
        return v;
    case Kind::NumberList: {
        if (v.empty()) return v;
        std::string out;
        for (const auto& e : split(v, ',')) out += (out.empty() ? "" : ",") + format_number(parse_number(e, key));
        return out;
    }
    case Kind::Range: {
        if (v.empty()) return v;
        const auto parts = split(v, ':');
        if (parts.size() != 3) throw UsageError("range must be a:b:n, got '" + v + "'");
        const double a = parse_number(parts[0], key), b = parse_number(parts[1], key);
        long long n = 0;
        const auto r = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), n);
        if (r.ec != std::errc() || r.ptr != parts[2].data() + parts[2].size() || n < 1)
            throw UsageError("range needs a positive point count, got '" + v + "'");
        return format_number(a) + ":" + format_number(b) + ":" + std::to_string(n);
    }
    }
    return v;
}

// Resolved key values of one run: defaults, then config file, then flags.
class Resolved {
public:
    Resolved(std::string command, const KeyValues& file, const KeyValues& flags, std::ostream& err)
        : command_(std::move(command)) {
        for (const auto& s : global_keys()) kv_[s.key] = canonical(s, s.def);
        for (const auto& s : command_keys().at(command_)) kv_[s.key] = canonical(s, s.def);
        auto merge = [&](const KeyValues& src, bool from_file) {
            for (const auto& [k, v] : src) {
                if (k == "command" || k == "tlc_version" || k == "generated_at" || is_result_key(k)) continue;
                const KeySpec* s = find_key(command_, k);
                if (!s) {
                    if (from_file && known_anywhere(k)) {
                        err << "note: ignoring key '" << k << "' (not used by " << command_ << ")\n";
                        continue;
                    }
                    throw UsageError("unknown configuration key: " + k);
                }
                kv_[k] = canonical(*s, v);
            }
        };
        merge(file, true);
        merge(flags, false);
    }

    const std::string& str(const std::string& k) const { return kv_.at(k); }
    double num(const std::string& k) const { return parse_number(kv_.at(k), k); }
    long long integer(const std::string& k) const { return std::stoll(kv_.at(k)); }
    std::vector<double> list(const std::string& k) const {
        std::vector<double> out;
        if (kv_.at(k).empty()) return out;
        for (const auto& e : split(kv_.at(k), ',')) out.push_back(parse_number(e, k));
        return out;
    }
    const KeyValues& all() const { return kv_; }
    const std::string& command() const { return command_; }

    // metadata entries in registry order
    std::vector<std::pair<std::string, std::string>> ordered() const {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& s : global_keys()) out.emplace_back(s.key, kv_.at(s.key));
        for (const auto& s : command_keys().at(command_)) out.emplace_back(s.key, kv_.at(s.key));
        return out;
    }

private:
    std::string command_;
    KeyValues kv_;
};

// ---------------------------------------------------------------- helpers

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string vec_string(const BlochState& r) {
    return format_number(r.r1) + "," + format_number(r.r2) + "," + format_number(r.r3);
}

std::vector<double> range_values(const std::string& spec) {
    const auto parts = split(spec, ':');
    const double a = parse_number(parts[0], "range"), b = parse_number(parts[1], "range");
    const int n = std::stoi(parts[2]);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return out;
}

std::vector<std::string> dynamics_list(const std::string& d) {
    if (d == "both") return {"redfield", "cp"};
    return {d};
}

struct Physics {
    DissCoefficients red;
    BlochGenerator gen_red, gen_cp;

    Physics(const PhysParams& p, const QuadratureConfig& q)
        : red(compute_coefficients(p, Convention::Redfield, q)),
          gen_red(build_redfield_generator(red, p)),
          gen_cp(build_cp_generator(red.converted(Convention::CPAveraged), p)) {}

    const BlochGenerator& gen(const std::string& dyn) const { return dyn == "cp" ? gen_cp : gen_red; }
};

BlochState reference_state(const std::string& ref, const BlochGenerator& gen, const PhysParams& p) {
    return ref == "gibbs" ? gibbs_state_eff(p) : stationary_state(gen).r;
}

PhysParams with_kT(PhysParams p, double kT) {
    if (!(kT > 0.0)) throw UsageError("kT_over_delta must be > 0");
    p.beta = 1.0 / kT;
    return p;
}

// ---------------------------------------------------------------- subcommands

OutputTable cmd_coeffs(const Resolved&, const RunConfig& cfg) {
    const auto c = compute_coefficients(cfg.params, Convention::Redfield, cfg.quad);
    const auto cp = c.converted(Convention::CPAveraged);
    OutputTable t;
    t.columns = {"name", "redfield", "cp_averaged", "error_estimate"};
    for (int k = 0; k < NCOEF; ++k)
        t.rows.push_back({std::string(coef_names[k]), c.value[k], cp.value[k], c.error[k]});
    const double ratio = c[K30] / c[K33];
    const double rerr = std::abs(ratio) * (c.error[K30] / std::abs(c[K30]) + c.error[K33] / std::abs(c[K33]));
    t.rows.push_back({std::string("k30_over_k33"), ratio, ratio, std::isfinite(rerr) ? rerr : kNaN});
    const double cf = closed_form_ratio(cfg.params);
    t.rows.push_back({std::string("closed_form_ratio"), cf, cf, 0.0});
    return t;
}

OutputTable cmd_evolve(const Resolved& r, const RunConfig& cfg) {
    const auto init = r.list("initial");
    if (init.size() != 3) throw UsageError("--initial needs three components r1,r2,r3");
    BlochState r0{init[0], init[1], init[2]};
    const double n0 = r0.norm();
    if (!std::isfinite(n0) || n0 > 1.0 + 1e-9) throw UsageError("--initial lies outside the Bloch ball");
    if (std::abs(n0 - 1.0) <= 1e-9) r0 = BlochState::from(r0.vec() / n0);  // typed pure state
    const double t_max = r.num("t_max");
    const long long points = r.integer("points");
    if (!(t_max > 0.0) || points < 2) throw UsageError("evolve needs t_max > 0 and points >= 2");
    const PhysParams& p = cfg.params;
    const Physics ph(p, cfg.quad);
    const BlochGenerator& gen = ph.gen(r.str("dynamics"));
    const BlochState ref = reference_state(r.str("reference"), gen, p);
    const Trajectory tr = evolve(r0, gen, linear_grid(0.0, t_max, static_cast<int>(points)), cfg.integ);
    const SigmaSeries ss = entropy_production_series(tr, gen, ref);
    const double window = two_period_window(p);
    std::vector<double> avg(tr.times.size(), kNaN);
    const bool fits = window <= tr.times.back() - tr.times.front();
    if (fits) avg = time_averaged_current(tr, p, window);

    OutputTable t;
    t.columns = {"t", "r1", "r2", "r3", "norm", "current", "current_avg_2periods", "sigma"};
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const auto& s = tr.states[i];
        t.rows.push_back({tr.times[i], s.r1, s.r2, s.r3, s.norm(), current(s, p), avg[i], ss.sigma[i]});
    }
    std::string iv;
    for (const auto& v : ss.violations) iv += (iv.empty() ? "" : ";") + format_number(v.t_a) + ":" + format_number(v.t_b);
    double max_norm = 0.0;
    for (const auto& e : tr.norm_excursions) max_norm = std::max(max_norm, e.second);
    t.metadata = {{"result.reference_state", vec_string(ref)},
                  {"result.violation_intervals", iv.empty() ? "none" : iv},
                  {"result.norm_excursions", std::to_string(tr.norm_excursions.size())},
                  {"result.max_excursion_norm", format_number(max_norm)}};
    if (!fits) t.metadata.emplace_back("result.notice", "run shorter than two periods; averaged current left empty");
    return t;
}

OutputTable cmd_stationary(const Resolved& r, const RunConfig& cfg) {
    const PhysParams& p = cfg.params;
    const Physics ph(p, cfg.quad);
    OutputTable t;
    t.columns = {"dynamics", "r1", "r2", "r3", "residual", "degenerate", "current_numeric", "current_closed_form",
                 "dist_gibbs_eff", "dist_gibbs_ls"};
    const BlochState g_eff = gibbs_state_eff(p);
    for (const auto& dyn : dynamics_list(r.str("dynamics"))) {
        const BlochGenerator& gen = ph.gen(dyn);
        const auto st = stationary_state(gen);
        const BlochState g_ls = gibbs_state_from_block(gen.h_eff + gen.h_ls, p.beta);
        t.rows.push_back({dyn, st.r.r1, st.r.r2, st.r.r3, st.residual, std::int64_t{st.degenerate ? 1 : 0},
                          current(st.r, p), asymptotic_current(p), trace_distance(st.r, g_eff),
                          trace_distance(st.r, g_ls)});
        if (st.degenerate) t.metadata.emplace_back("result.degenerate_" + dyn, "minimum-norm solution of a singular system");
    }
    return t;
}

OutputTable scan_pure(const Resolved& r, const RunConfig& cfg) {
    std::vector<double> kts = r.list("kt_list");
    if (kts.empty()) kts.push_back(r.num("kT_over_delta"));
    const long long n = r.integer("samples");
    if (n < 1) throw UsageError("samples must be > 0");
    const auto dyns = dynamics_list(r.str("dynamics"));
    struct Row {
        double fraction[2], se[2];
    };
    std::vector<Row> rows(kts.size());
    std::vector<PhysParams> ps;
    for (double kT : kts) ps.push_back(with_kT(cfg.params, kT));
    tbb::parallel_for(std::size_t{0}, kts.size(), [&](std::size_t i) {
        const Physics ph(ps[i], cfg.quad);
        for (std::size_t d = 0; d < dyns.size(); ++d) {
            ScanOptions opt;
            opt.seed = cfg.seed;
            const auto rep = scan_pure_state_violations(ph.gen(dyns[d]), BlochState{}, static_cast<std::size_t>(n), opt);
            rows[i].fraction[d] = rep.fraction_violating_t0;
            rows[i].se[d] = rep.standard_error;
        }
    });
    OutputTable t;
    t.columns = {"kT_over_delta", "beta", "dynamics", "fraction", "standard_error", "samples"};
    for (std::size_t i = 0; i < kts.size(); ++i)
        for (std::size_t d = 0; d < dyns.size(); ++d)
            t.rows.push_back({kts[i], ps[i].beta, dyns[d], rows[i].fraction[d], rows[i].se[d], std::int64_t{n}});
    return t;
}

OutputTable scan_surface(const Resolved& r, const RunConfig& cfg) {
    SurfaceGrid g;
    g.min = r.num("grid_min");
    g.max = r.num("grid_max");
    const long long gn = r.integer("grid_n");
    if (gn < 1 || gn > 100000 || !(g.max >= g.min)) throw UsageError("invalid sigma-surface grid");
    g.n = static_cast<int>(gn);
    const double r3 = r.num("r3");
    if (!(std::abs(r3) < 1.0)) throw UsageError("r3 must lie inside (-1, 1)");
    const PhysParams& p = cfg.params;
    const Physics ph(p, cfg.quad);
    OutputTable t;
    t.columns = {"dynamics", "r1", "r2", "sigma", "negative"};
    for (const auto& dyn : dynamics_list(r.str("dynamics"))) {
        const BlochGenerator& gen = ph.gen(dyn);
        const auto pts = sigma_surface(gen, reference_state(r.str("reference"), gen, p), r3, g);
        std::size_t skipped = 0, negative = 0;
        double min_sigma = std::numeric_limits<double>::infinity();
        for (const auto& sp : pts) {
            if (sp.skipped) {
                ++skipped;
                continue;
            }
            negative += sp.negative;
            min_sigma = std::min(min_sigma, sp.sigma);
            t.rows.push_back({dyn, sp.r1, sp.r2, sp.sigma, std::int64_t{sp.negative ? 1 : 0}});
        }
        t.metadata.emplace_back("result.skipped_points_" + dyn, std::to_string(skipped));
        t.metadata.emplace_back("result.negative_points_" + dyn, std::to_string(negative));
        t.metadata.emplace_back("result.min_sigma_" + dyn, format_number(min_sigma));
    }
    return t;
}

OutputTable scan_positivity(const Resolved& r, const RunConfig& cfg) {
    GridSpec g;
    g.re_min = r.num("re_min");
    g.re_max = r.num("re_max");
    g.im_min = r.num("im_min");
    g.im_max = r.num("im_max");
    const long long nr = r.integer("n_re"), ni = r.integer("n_im");
    if (nr < 1 || ni < 1 || nr * ni > 100000000 || !(g.re_max >= g.re_min) || !(g.im_max >= g.im_min))
        throw UsageError("invalid positivity-map grid");
    g.n_re = static_cast<int>(nr);
    g.n_im = static_cast<int>(ni);
    const auto v = compute_V(cfg.params, cfg.quad);
    const auto map = positivity_map(g, v);
    OutputTable t;
    t.columns = {"re_alpha", "im_alpha", "delta", "negative"};
    for (const auto& pt : map.points)
        t.rows.push_back({pt.alpha.real(), pt.alpha.imag(), pt.delta, std::int64_t{pt.negative ? 1 : 0}});
    t.metadata = {{"result.negative_fraction", format_number(map.negative_fraction)},
                  {"result.v_error", format_number(v.error)}};
    return t;
}

OutputTable cmd_scan(const Resolved& r, const RunConfig& cfg) {
    const std::string& mode = r.str("mode");
    if (mode == "pure-violations") return scan_pure(r, cfg);
    if (mode == "sigma-surface") return scan_surface(r, cfg);
    return scan_positivity(r, cfg);
}

OutputTable cmd_sweep(const Resolved& r, const RunConfig& cfg) {
    const bool temp = r.str("vary") == "temperature";
    std::string spec = r.str("range");
    if (spec.empty()) spec = temp ? "0.01:1:12" : "0.3:10:12";
    const auto values = range_values(spec);
    const double n_relax = r.num("n_relax");
    if (!(n_relax > 0.0)) throw UsageError("n_relax must be > 0");
    std::vector<PhysParams> ps;
    for (double v : values) {
        PhysParams p = cfg.params;
        if (temp) {
            p = with_kT(p, v);
        } else {
            if (!(v >= 0.0)) throw UsageError("drive values must be >= 0");
            p.omega_drive = v;
        }
        p.validate();
        ps.push_back(p);
    }
    std::vector<CurrentComparison> res(values.size());
    tbb::parallel_for(std::size_t{0}, values.size(), [&](std::size_t i) {
        const auto c = compute_coefficients(ps[i], Convention::Redfield, cfg.quad);
        res[i] = compare_asymptotic_currents(c, ps[i]);
        if (n_relax != 30.0) {
            res[i].redfield_long_time = long_time_current(build_redfield_generator(c, ps[i]), ps[i], figure3_state(), n_relax);
            res[i].gap = res[i].cp_numeric - res[i].redfield_long_time;
        }
    });
    OutputTable t;
    t.columns = {temp ? "kT_over_delta" : "omega_over_delta", "beta", "current_cp_closed_form", "current_cp_numeric",
                 "current_redfield", "difference", "error_estimate"};
    for (std::size_t i = 0; i < values.size(); ++i)
        t.rows.push_back({values[i], ps[i].beta, res[i].cp_closed_form, res[i].cp_numeric, res[i].redfield_long_time,
                          res[i].gap, res[i].error});
    return t;
}

using Command = std::function<OutputTable(const Resolved&, const RunConfig&)>;

const std::map<std::string, Command>& commands() {
    static const std::map<std::string, Command> c{
        {"coeffs", cmd_coeffs}, {"evolve", cmd_evolve}, {"stationary", cmd_stationary},
        {"scan", cmd_scan},     {"sweep", cmd_sweep},
    };
    return c;
}

const char* schema(const std::string& cmd) {
    if (cmd == "coeffs") return "columns: name, redfield, cp_averaged, error_estimate";
    if (cmd == "evolve") return "columns: t, r1, r2, r3, norm, current, current_avg_2periods, sigma";
    if (cmd == "stationary")
        return "columns: dynamics, r1, r2, r3, residual, degenerate, current_numeric, current_closed_form, "
               "dist_gibbs_eff, dist_gibbs_ls";
    if (cmd == "scan")
        return "columns: pure-violations: kT_over_delta, beta, dynamics, fraction, standard_error, samples; "
               "sigma-surface: dynamics, r1, r2, sigma, negative; positivity-map: re_alpha, im_alpha, delta, negative";
    if (cmd == "sweep")
        return "columns: kT_over_delta|omega_over_delta, beta, current_cp_closed_form, current_cp_numeric, "
               "current_redfield, difference, error_estimate";
    return "";
}

std::string flag_name(const std::string& key) {
    std::string f = key;
    std::replace(f.begin(), f.end(), '_', '-');
    return "--" + f;
}

int execute(const std::string& command, const KeyValues& file, const KeyValues& flags, int threads,
            const std::string& output, std::ostream& out, std::ostream& err) {
    if (file.count("command") && file.at("command") != command)
        throw UsageError("config was written by '" + file.at("command") + "', not '" + command + "'");
    if (file.count("tlc_version") && file.at("tlc_version") != TLC_VERSION)
        err << "note: config written by tlc " << file.at("tlc_version") << ", running " << TLC_VERSION << "\n";
    const Resolved res(command, file, flags, err);
    RunConfig cfg = run_config_from(res.all());
    if (threads < 0) throw UsageError("--threads must be >= 0");
    std::optional<tbb::global_control> limit;
    if (threads > 0) limit.emplace(tbb::global_control::max_allowed_parallelism, static_cast<std::size_t>(threads));
    tbb::task_arena arena(threads > 0 ? threads : tbb::task_arena::automatic);
    OutputTable table;
    arena.execute([&] { table = commands().at(command)(res, cfg); });

    std::vector<std::pair<std::string, std::string>> meta{{"tlc_version", TLC_VERSION}, {"command", command}};
    for (auto& kv : res.ordered()) meta.push_back(std::move(kv));
    meta.emplace_back("generated_at", utc_timestamp());
    for (auto& kv : table.metadata) meta.push_back(std::move(kv));
    table.metadata = std::move(meta);

    const Format f = res.str("format") == "jsonl" ? Format::JsonLines : Format::Csv;
    if (output.empty() || output == "-") {
        write_table(table, f, out);
    } else {
        std::ofstream os(output, std::ios::binary);
        if (!os) throw UsageError("cannot open output file: " + output);
        write_table(table, f, os);
        if (!os) throw std::runtime_error("write failed: " + output);
    }
    return 0;
}

} // namespace

// ---------------------------------------------------------------- public API

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_number(const std::string& raw, const std::string& key) {
    const std::string s = trim(raw);
    if (s == "nan") return kNaN;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* b = s.data();
    if (!s.empty() && s[0] == '+') ++b;
    const auto r = std::from_chars(b, s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw UsageError("invalid number for " + key + ": '" + s + "'");
    return v;
}

bool is_result_key(const std::string& key) { return key.rfind("result.", 0) == 0; }

KeyValues parse_config(std::istream& in) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    bool table_seen = false;   // metadata of a written table was found
    bool stray_line = false;   // a line that is neither key = value nor comment
    int first_stray = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty()) continue;
        if (s[0] == '{') {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(s);
            } catch (const nlohmann::json::exception&) {
                throw UsageError("config line " + std::to_string(lineno) + ": malformed JSON");
            }
            if (j.is_object() && j.contains("metadata") && j["metadata"].is_object()) {
                for (const auto& [k, v] : j["metadata"].items()) kv[k] = v.is_string() ? v.get<std::string>() : v.dump();
                table_seen = true;
            }
            continue;
        }
        if (s.front() == '[' && s.back() == ']') continue;  // INI section header
        const bool comment = s[0] == '#' || s[0] == ';';
        const std::string body = comment ? trim(s.substr(1)) : s;
        const auto eq = body.find('=');
        if (eq != std::string::npos) {
            const std::string key = trim(body.substr(0, eq));
            if (is_identifier(key)) {
                std::string val = trim(body.substr(eq + 1));
                if (val.size() >= 2 && val.front() == '"' && val.back() == '"') val = val.substr(1, val.size() - 2);
                kv[key] = val;
                if (comment) table_seen = true;
                continue;
            }
        }
        if (comment) continue;
        if (!stray_line) first_stray = lineno;
        stray_line = true;
    }
    if (stray_line && !table_seen) throw UsageError("config line " + std::to_string(first_stray) + ": expected key = value");
    return kv;
}

KeyValues load_config_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw UsageError("cannot open config file: " + path);
    return parse_config(is);
}

RunConfig run_config_from(const KeyValues& kv) {
    auto get = [&](const char* key) -> std::string {
        auto it = kv.find(key);
        if (it != kv.end()) return it->second;
        for (const auto& s : global_keys())
            if (std::string(key) == s.key) return s.def;
        throw UsageError(std::string("missing key ") + key);
    };
    auto num = [&](const char* key) { return parse_number(get(key), key); };
    auto integer = [&](const char* key) {
        const std::string v = trim(get(key));
        long long x = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
        if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw UsageError(std::string("invalid integer for ") + key);
        return x;
    };
    RunConfig c;
    c.params.delta = 1.0;
    c.params.omega_drive = num("omega_over_delta");
    c.params.lambda = num("lambda");
    const double kT = num("kT_over_delta");
    if (!(kT > 0.0) || !std::isfinite(kT)) throw UsageError("kT_over_delta must be a positive number");
    c.params.beta = 1.0 / kT;
    c.params.omega_c = num("omega_c_over_delta");
    c.params.i0 = num("i0");
    c.params.validate();

    c.quad.eta.clear();
    for (const auto& e : split(get("quad_eta"), ',')) c.quad.eta.push_back(parse_number(e, "quad_eta"));
    c.quad.rel_tol = num("quad_rel_tol");
    c.quad.max_subdivisions = static_cast<int>(integer("quad_max_subdivisions"));
    c.quad.u_max = num("quad_u_max");
    c.quad.validate();

    c.integ.method = method_from_string(get("integrator"));
    c.integ.step = num("integrator_step");
    c.integ.rel_tol = num("integrator_rel_tol");
    c.integ.abs_tol = num("integrator_abs_tol");
    c.integ.stride = static_cast<int>(integer("integrator_stride"));
    if (!(c.integ.step > 0.0) || !(c.integ.rel_tol > 0.0) || !(c.integ.abs_tol > 0.0) || c.integ.stride < 1)
        throw UsageError("integrator step, tolerances and stride must be positive");
    const long long seed = integer("seed");
    if (seed < 0) throw UsageError("seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
    return c;
}

std::string csv_quote(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

namespace {

std::string cell_text(const Cell& c) {
    if (const double* d = std::get_if<double>(&c)) return format_number(*d);
    if (const std::int64_t* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
}

} // namespace

void write_csv(const OutputTable& t, std::ostream& os) {
    for (const auto& [k, v] : t.metadata) os << "# " << k << " = " << v << "\r\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_quote(t.columns[i]);
    os << "\r\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_quote(cell_text(row[i]));
        os << "\r\n";
    }
}

void write_jsonl(const OutputTable& t, std::ostream& os) {
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : t.metadata) meta[k] = v;
    nlohmann::ordered_json head;
    head["metadata"] = meta;
    os << head.dump() << "\n";
    for (const auto& row : t.rows) {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            const Cell& c = row[i];
            if (const double* d = std::get_if<double>(&c)) {
                if (std::isnan(*d)) j[t.columns[i]] = nullptr;
                else if (std::isinf(*d)) j[t.columns[i]] = *d > 0 ? "inf" : "-inf";
                else j[t.columns[i]] = *d;
            } else if (const std::int64_t* n = std::get_if<std::int64_t>(&c)) {
                j[t.columns[i]] = *n;
            } else {
                j[t.columns[i]] = std::get<std::string>(c);
            }
        }
        os << j.dump() << "\n";
    }
}

void write_table(const OutputTable& t, Format f, std::ostream& os) {
    if (f == Format::Csv) write_csv(t, os);
    else write_jsonl(t, os);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"tlc: driven two-level circuit coupled to an Ohmic bath; Redfield vs averaged (CP) dynamics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(TLC_VERSION));

    struct Sub {
        CLI::App* app;
        std::map<std::string, std::string> values;
        std::map<std::string, CLI::Option*> opts;
        std::string config, output;
        int threads{0};
    };
    std::map<std::string, std::unique_ptr<Sub>> subs;
    auto add_common = [&](Sub& s) {
        s.app->add_option("--config", s.config, "key = value file, or a table written by tlc");
        s.app->add_option("--threads", s.threads, "worker threads (0: all cores); output does not depend on it");
        s.app->add_option("--output,-o", s.output, "output file (default stdout)");
    };
    const std::map<std::string, std::string> about{
        {"coeffs", "dissipator and Lamb-shift coefficients in both conventions"},
        {"evolve", "trajectory, current and entropy production from an initial state"},
        {"stationary", "stationary states, currents and distances to the Gibbs states"},
        {"scan", "pure-state violation fractions, sigma surfaces or the short-time positivity map"},
        {"sweep", "asymptotic currents over temperature or drive"},
    };
    for (const auto& [name, desc] : about) {
        auto s = std::make_unique<Sub>();
        s->app = app.add_subcommand(name, desc);
        s->app->footer(schema(name));
        add_common(*s);
        std::vector<const KeySpec*> keys;
        for (const auto& k : global_keys()) keys.push_back(&k);
        for (const auto& k : command_keys().at(name)) keys.push_back(&k);
        for (const KeySpec* k : keys) {
            std::string help = k->help;
            help += std::string(" [") + k->def + "]";
            s->opts[k->key] = s->app->add_option(flag_name(k->key), s->values[k->key], help);
        }
        subs[name] = std::move(s);
    }
    auto rerun = std::make_unique<Sub>();
    rerun->app = app.add_subcommand("rerun", "regenerate a table from the metadata it embeds");
    add_common(*rerun);
    rerun->app->get_option("--config")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }
    try {
        if (rerun->app->parsed()) {
            const KeyValues file = load_config_file(rerun->config);
            if (!file.count("command") || !commands().count(file.at("command")))
                throw UsageError("config has no valid 'command' entry");
            return execute(file.at("command"), file, {}, rerun->threads, rerun->output, out, err);
        }
        for (auto& [name, s] : subs) {
            if (!s->app->parsed()) continue;
            KeyValues flags;
            for (const auto& [k, opt] : s->opts)
                if (opt->count() > 0) flags[k] = s->values[k];
            const KeyValues file = s->config.empty() ? KeyValues{} : load_config_file(s->config);
            return execute(name, file, flags, s->threads, s->output, out, err);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const DomainError& e) {
        err << "invalid input: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace tlc
