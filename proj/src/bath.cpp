// bath.cpp - kernels, damped transforms and coefficient integrals

#include "tlc/bath.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace tlc {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
constexpr double kPi = std::numbers::pi;

// J(w) coth(beta w/2), finite limit 2/beta at w -> 0
double j_coth(double w, double beta, double wc) {
    if (w < 1e-12) return 2.0 / beta;
    return w * std::exp(-w / wc) * coth_stable(0.5 * beta * w);
}

// Bisection over single Gauss-Kronrod rules. The library's own recursion
// compares an error estimate that is not scaled by the panel width, so it
// over-refines narrow panels and reports inflated errors; the rule is used
// non-adaptively here and the estimate scaled explicitly.
template <class F>
double adaptive_gk(F& f, double a, double b, int depth, double tol, double& err) {
    double e = 0.0, l1 = 0.0;
    const double v = GK::integrate(f, a, b, 0, 0.0, &e, &l1);
    e *= 0.5 * (b - a);
    if (depth <= 0 || e <= tol * l1 || e <= 1e-300) {
        err += e;
        return v;
    }
    const double m = 0.5 * (a + b);
    return adaptive_gk(f, a, m, depth - 1, tol, err) + adaptive_gk(f, m, b, depth - 1, tol, err);
}

// Sum of adaptive panels over sorted edges; returns value, adds error.
template <class F>
double panels(F&& f, const std::vector<double>& edges, int depth, double tol, double& err) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        if (!(edges[i + 1] > edges[i])) continue;
        sum += adaptive_gk(f, edges[i], edges[i + 1], depth, tol, err);
    }
    return sum;
}

std::vector<double> sorted_edges(std::vector<double> e, double hi) {
    for (auto& x : e) x = std::clamp(x, 0.0, hi);
    e.push_back(0.0);
    e.push_back(hi);
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return e;
}

} // namespace

double spectral_density(double w, const SpectralDensity& sd) {
    if (w < 0.0) throw DomainError("spectral density: negative frequency");
    return w * std::exp(-w / sd.omega_c);
}

double coth_stable(double x) {
    if (x > 20.0) return 1.0;
    return 1.0 + 2.0 / std::expm1(2.0 * x);
}

double kernel_gs(double u, const SpectralDensity& sd) {
    const double p = 1.0 / sd.omega_c;
    const double q = p * p + u * u;
    return 2.0 * p * u / (q * q);
}

double kernel_gc(double u, const SpectralDensity& sd, double beta, double rel_tol) {
    // J coth = J + 2J/(e^{beta w}-1): closed-form zero-temperature part plus a
    // thermal part that decays like e^{-beta w}
    const double wc = sd.omega_c;
    const double p = 1.0 / wc;
    const double q = p * p + u * u;
    const double zero_t = (p * p - u * u) / (q * q);
    const double hi = std::min(40.0 * wc, 750.0 / beta);
    auto f = [&](double w) {
        const double bose = w > 0.0 ? w / std::expm1(beta * w) : 1.0 / beta;
        return 2.0 * bose * std::exp(-w / wc) * std::cos(w * u);
    };
    std::vector<double> e{1.0 / beta, 10.0 / beta, 50.0 / beta};
    const double au = std::abs(u);
    if (au > 0.0) {
        const double width = std::max(8.0 * 2.0 * kPi / au, hi / 2e4);
        for (double x = width; x < hi; x += width) e.push_back(x);
    }
    const auto edges = sorted_edges(std::move(e), hi);
    double err = 0.0;
    const double v = zero_t + panels(f, edges, 15, 1e-13, err);
    // roundoff relative to int|f| ~ (pi^2/3)/beta^2
    const double floor = 1e-13 * 4.0 / (beta * beta);
    if (err > rel_tol * std::abs(v) && err > floor) {
        std::ostringstream os;
        os << "kernel_gc: quadrature did not converge at u=" << u << ", error estimate " << err;
        throw NumericalError(os.str());
    }
    return v;
}

void QuadratureConfig::validate() const {
    if (eta.size() < 2) throw DomainError("quadrature: need at least two eta values");
    for (double e : eta)
        if (!(e > 0.0)) throw DomainError("quadrature: eta values must be > 0");
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw DomainError("quadrature: rel_tol must be in (0,1)");
    if (u_max < 0.0) throw DomainError("quadrature: u_max must be >= 0");
    if (max_subdivisions < 1) throw DomainError("quadrature: max_subdivisions must be >= 1");
}

double QuadratureConfig::eta_min() const { return *std::min_element(eta.begin(), eta.end()); }

double QuadratureConfig::resolved_u_max() const { return u_max > 0.0 ? u_max : 40.0 / eta_min(); }

const char* to_string(Convention c) { return c == Convention::Redfield ? "redfield" : "cp_averaged"; }

const std::array<const char*, NCOEF> coef_names{"k10", "k20", "k30", "k11", "k12", "k13",
                                                "k22", "k23", "k33", "h12", "h13", "h23"};

DissCoefficients DissCoefficients::converted(Convention to) const {
    DissCoefficients out = *this;
    if (to != convention) {
        for (Coef c : {K10, K12, K13, H23}) out.value[c] = -value[c];
        out.convention = to;
    }
    return out;
}

BathTransforms::BathTransforms(const PhysParams& p, const QuadratureConfig& qc) : p_(p), qc_(qc) {
    p_.validate();
    qc_.validate();
}

std::vector<double> BathTransforms::eta_grid(double a) const {
    // The damped value is the analytic continuation to a + i eta; the nearest
    // singularities are the first Matsubara pole and the branch point at 0.
    const double nu = 2.0 * kPi / p_.beta;
    const double scale = std::min(1.0, std::hypot(a, nu));
    std::vector<double> g = qc_.eta;
    std::sort(g.begin(), g.end(), std::greater<>());
    for (auto& e : g) e *= scale;
    return g;
}

double BathTransforms::damped(Kernel k, Trig t, double a, double eta, double* quad_err) const {
    a = std::abs(a);
    const double wc = p_.omega_c, beta = p_.beta;
    const double e2 = eta * eta;
    auto L = [e2, eta](double x) { return eta / (e2 + x * x); };
    auto D = [e2](double x) { return x / (e2 + x * x); };
    auto J = [wc](double w) { return w * std::exp(-w / wc); };

    std::vector<double> e;
    for (double m : {-64.0, -16.0, -4.0, -1.0, 0.0, 1.0, 4.0, 16.0, 64.0}) e.push_back(a + m * eta);
    for (double m : {1.0, 16.0, 64.0}) e.push_back(m * eta);
    for (double x : {1.0, 10.0, 100.0}) e.push_back(a + x);
    for (double x : {1.0, 10.0, 50.0}) e.push_back(x / beta);
    for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0}) e.push_back(x * wc);
    const auto edges = sorted_edges(std::move(e), 60.0 * wc);

    const int depth = qc_.max_subdivisions;
    const double tol = 1e-13;
    double err = 0.0, v = 0.0;
    if (k == Kernel::C && t == Trig::Cos) {
        v = panels([&](double w) { return j_coth(w, beta, wc) * 0.5 * (L(w - a) + L(w + a)); },
                   edges, depth, tol, err);
    } else if (k == Kernel::C && t == Trig::Sin) {
        v = panels([&](double w) { return j_coth(w, beta, wc) * 0.5 * (D(a - w) + D(a + w)); },
                   edges, depth, tol, err);
    } else if (k == Kernel::S && t == Trig::Sin) {
        v = panels([&](double w) { return J(w) * 0.5 * (L(w - a) - L(w + a)); }, edges, depth, tol, err);
    } else {
        // D(w-a)+D(w+a)-2D(w) rearranged so the large-w cancellation is exact;
        // the constant int Gamma_s e^{-eta u} du is excluded
        v = panels(
            [&](double w) {
                const double p0 = e2 + w * w;
                const double pm = e2 + (w - a) * (w - a);
                const double pp = e2 + (w + a) * (w + a);
                const double r = (w * w - a * w - e2) / pm - (w * w + a * w - e2) / pp;
                return J(w) * 0.5 * a * r / p0;
            },
            edges, depth, tol, err);
    }
    if (quad_err) *quad_err = err;
    return v;
}

double BathTransforms::damped_direct(Kernel k, Trig t, double a, double eta) const {
    a = std::abs(a);
    const SpectralDensity sd{p_.omega_c};
    const double beta = p_.beta;
    auto f = [&](double u) {
        const double g = k == Kernel::C ? kernel_gc(u, sd, beta, 1e-9) : kernel_gs(u, sd);
        double tr = t == Trig::Sin ? std::sin(a * u) : std::cos(a * u);
        // matches damped(): the constant int Gamma_s e^{-eta u} du is excluded
        if (k == Kernel::S && t == Trig::Cos) tr -= 1.0;
        return g * tr * std::exp(-eta * u);
    };
    const double u_max = qc_.resolved_u_max();
    std::vector<double> e;
    for (double x : {0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0}) e.push_back(x / p_.omega_c);
    double step = std::min(1.0, 0.25 * beta);
    if (a > 0.0) step = std::min(step, kPi / a);
    for (double x = step; x < u_max; x += step) e.push_back(x);
    const auto edges = sorted_edges(std::move(e), u_max);
    double err = 0.0;
    return panels(f, edges, qc_.max_subdivisions, 1e-10, err);
}

Extrapolated BathTransforms::transform(Kernel k, Trig t, double a) const {
    if (t == Trig::Sin && a == 0.0) return {0.0, 0.0};
    const double sign = (t == Trig::Sin && a < 0.0) ? -1.0 : 1.0;
    const auto key = std::make_tuple(static_cast<int>(k), static_cast<int>(t), std::abs(a));
    Extrapolated out;
    bool hit = false;
    {
        std::lock_guard<std::mutex> lk(cache_->m);
        auto it = cache_->v.find(key);
        if (it != cache_->v.end()) {
            out = it->second;
            hit = true;
        }
    }
    if (!hit) {
        out = compute(k, t, std::abs(a));
        std::lock_guard<std::mutex> lk(cache_->m);
        cache_->v[key] = out;
    }
    out.value *= sign;
    return out;
}

Extrapolated BathTransforms::compute(Kernel k, Trig t, double a) const {
    const auto xs = eta_grid(a);
    const std::size_t n = xs.size();
    std::vector<double> ys(n);
    double qerr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = 0.0;
        ys[i] = damped(k, t, a, xs[i], &e);
        qerr = std::max(qerr, e);
    }
    // Neville table evaluated at eta = 0; keep the last two diagonals
    std::vector<double> cur = ys, prev;
    for (std::size_t m = 1; m < n; ++m) {
        prev = cur;
        for (std::size_t i = 0; i + m < n; ++i)
            cur[i] = (xs[i + m] * prev[i] - xs[i] * prev[i + 1]) / (xs[i + m] - xs[i]);
        cur.resize(n - m);
    }
    const double top = cur[0];
    const double second = prev[1];  // order n-2 from the smallest etas
    // Neville weights for halving grids stay below ~4 in magnitude
    Extrapolated out{top, std::abs(top - second) + 4.0 * qerr};
    if (k == Kernel::S && t == Trig::Cos) out.value += p_.omega_c;  // int Gamma_s du = omega_c
    return out;
}

namespace {

struct Mode {
    double c;
    Trig t;
    double f;
};

// product-to-sum for f_w(u) f_O(u)
std::vector<Mode> expand(FW fw, FO fo, double w, double om) {
    const Mode a = fw == FW::One ? Mode{1, Trig::Cos, 0} : fw == FW::Cw ? Mode{1, Trig::Cos, w} : Mode{1, Trig::Sin, w};
    const Mode b = fo == FO::One ? Mode{1, Trig::Cos, 0} : fo == FO::CO ? Mode{1, Trig::Cos, om} : Mode{1, Trig::Sin, om};
    const double fa = a.f, fb = b.f;
    if (a.t == Trig::Cos && b.t == Trig::Cos) return {{0.5, Trig::Cos, fa + fb}, {0.5, Trig::Cos, fa - fb}};
    if (a.t == Trig::Sin && b.t == Trig::Sin) return {{0.5, Trig::Cos, fa - fb}, {-0.5, Trig::Cos, fa + fb}};
    if (a.t == Trig::Sin) return {{0.5, Trig::Sin, fa + fb}, {0.5, Trig::Sin, fa - fb}};
    return {{0.5, Trig::Sin, fa + fb}, {-0.5, Trig::Sin, fa - fb}};
}

} // namespace

Extrapolated integrate_terms(const std::vector<TrigTerm>& terms, const PhysParams& p,
                             const BathTransforms& bt) {
    const double w = p.omega_eff(), om = p.omega_drive;
    Extrapolated acc;
    for (const auto& term : terms) {
        for (const auto& m : expand(term.fw, term.fo, w, om)) {
            const auto v = bt.transform(term.kernel, m.t, m.f);
            acc.value += term.weight * m.c * v.value;
            acc.error += std::abs(term.weight * m.c) * v.error;
        }
    }
    return acc;
}

namespace {

// Integrands of the twelve coefficients in the Redfield convention.
std::array<std::vector<TrigTerm>, NCOEF> coefficient_terms(const PhysParams& p) {
    const double w = p.omega_eff();
    const double d = p.delta / w, r = p.omega_drive / w;
    const double A = (2.0 * p.omega_drive * p.omega_drive + p.delta * p.delta) / (w * w);
    constexpr auto C = Kernel::C, S = Kernel::S;
    std::array<std::vector<TrigTerm>, NCOEF> t;
    // First column (Gamma_s terms). The overall factor -2 is the normalisation
    // that reproduces the generator assembled directly from V1, V3; see the tests.
    t[K10] = {{-2 * d, S, FW::Sw, FO::SO}, {-2 * d * r, S, FW::Cw, FO::CO}, {2 * d * r, S, FW::One, FO::CO}};
    // bracket read as (1 + cos(w u)) sin(Omega u)
    t[K20] = {{2 * d, S, FW::One, FO::SO}, {2 * d, S, FW::Cw, FO::SO}, {-2 * d * r, S, FW::Sw, FO::CO}};
    t[K30] = {{2 * A, S, FW::Sw, FO::CO}, {-4 * r, S, FW::Cw, FO::SO}};
    t[K11] = {{2 * r, C, FW::Sw, FO::SO}, {2 * r * r, C, FW::Cw, FO::CO}, {2 * d * d, C, FW::One, FO::CO}};
    t[K12] = {{-d * d, C, FW::Sw, FO::CO}};
    // sign opposite to the form with (cos(w u) - 1); fixed by the same check
    t[K13] = {{d * r, C, FW::Sw, FO::CO}, {-d, C, FW::Cw, FO::SO}, {d, C, FW::One, FO::SO}};
    t[K22] = {{2.0, C, FW::Cw, FO::CO}, {2 * r, C, FW::Sw, FO::SO}, {2 * d * d, C, FW::One, FO::CO}};
    t[K23] = {{-d, C, FW::Sw, FO::SO}, {-d * r, C, FW::One, FO::CO}, {-d * r, C, FW::Cw, FO::CO}};
    t[K33] = {{2 * A, C, FW::Cw, FO::CO}, {4 * r, C, FW::Sw, FO::SO}};
    t[H12] = {{A, C, FW::Sw, FO::CO}, {-2 * r, C, FW::Cw, FO::SO}};
    t[H13] = {{d * r, C, FW::Sw, FO::CO}, {-d, C, FW::One, FO::SO}, {-d, C, FW::Cw, FO::SO}};
    t[H23] = {{-d, C, FW::Sw, FO::SO}, {d * r, C, FW::One, FO::CO}, {-d * r, C, FW::Cw, FO::CO}};
    return t;
}

} // namespace

DissCoefficients compute_coefficients(const PhysParams& p, Convention conv, const QuadratureConfig& qc) {
    const BathTransforms bt(p, qc);
    const auto terms = coefficient_terms(p);
    DissCoefficients out;
    out.convention = Convention::Redfield;
    double vmax = 0.0;
    for (int c = 0; c < NCOEF; ++c) {
        const auto v = integrate_terms(terms[c], p, bt);
        out.value[c] = v.value;
        out.error[c] = v.error;
        vmax = std::max(vmax, std::abs(v.value));
    }
    std::ostringstream bad;
    for (int c = 0; c < NCOEF; ++c) {
        const double scale = std::max(std::abs(out.value[c]), 1e-3 * vmax);
        if (!(out.error[c] <= qc.rel_tol * scale)) bad << ' ' << coef_names[c] << " (" << out.error[c] << ")";
    }
    if (!bad.str().empty()) throw NumericalError("coefficient extrapolation did not converge:" + bad.str());
    return out.converted(conv);
}

double closed_form_ratio(const PhysParams& p) {
    p.validate();
    const double w = p.omega_eff(), om = p.omega_drive;
    const SpectralDensity sd{p.omega_c};
    const double wp = w + om, wm = w - om;
    if (!(wm > 0.0)) throw DomainError("closed_form_ratio: requires omega_eff > Omega");
    const double jp = spectral_density(wp, sd), jm = spectral_density(wm, sd);
    const double cp = coth_stable(0.5 * p.beta * wp), cm = coth_stable(0.5 * p.beta * wm);
    const double num = wm * wm * jp + wp * wp * jm;
    const double den = wm * wm * cp * jp + wp * wp * cm * jm;
    return num / den;
}

} // namespace tlc
