// dynamics.cpp - exact and stepped propagation, stationary solve, currents

#include "tlc/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>

namespace tlc {

const char* to_string(Method m) {
    switch (m) {
    case Method::ExactExponential: return "exact_exponential";
    case Method::RK4: return "rk4";
    case Method::RK45: return "rk45";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "exact_exponential" || s == "exact") return Method::ExactExponential;
    if (s == "rk4" || s == "rk4_fixed") return Method::RK4;
    if (s == "rk45" || s == "rk45_adaptive") return Method::RK45;
    throw DomainError("unknown integrator method: " + s);
}

Propagator::Propagator(const Eigen::Matrix4d& L) : M_(-2.0 * L) {
    Eigen::EigenSolver<Eigen::Matrix4d> es(M_);
    if (es.info() == Eigen::Success) {
        V_ = es.eigenvectors();
        lam_ = es.eigenvalues();
        Eigen::JacobiSVD<Eigen::Matrix4cd> svd(V_);
        const auto& sv = svd.singularValues();
        const double cond = sv(0) / sv(3);
        if (std::isfinite(cond) && cond < 1e8) {
            Vinv_ = V_.inverse();
            const double rec = (V_ * lam_.asDiagonal() * Vinv_ - M_.cast<std::complex<double>>()).norm();
            diag_ = rec <= 1e-12 * std::max(1.0, M_.norm());
        }
    }
}

Eigen::Vector4d Propagator::operator()(double t, const Eigen::Vector4d& x0) const {
    if (t == 0.0) return {1.0, x0(1), x0(2), x0(3)};
    Eigen::Vector4d x;
    if (diag_) {
        const Eigen::Vector4cd e = (lam_ * t).array().exp();
        x = (V_ * (e.asDiagonal() * (Vinv_ * x0.cast<std::complex<double>>()))).real();
    } else {
        const Eigen::Matrix4d E = (M_ * t).exp();
        x = E * x0;
    }
    x(0) = 1.0;
    return x;
}

BlochState Propagator::operator()(double t, const BlochState& r0) const {
    const Eigen::Vector4d x = (*this)(t, Eigen::Vector4d(1.0, r0.r1, r0.r2, r0.r3));
    return {x(1), x(2), x(3)};
}

std::vector<double> linear_grid(double t0, double t1, int points) {
    if (points < 1) throw DomainError("time grid needs at least one point");
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i) g[i] = points == 1 ? t0 : t0 + (t1 - t0) * i / (points - 1);
    return g;
}

namespace {

using State = std::array<double, 4>;

void check_grid(const std::vector<double>& t) {
    if (t.empty()) throw DomainError("evolve: empty time grid");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) throw DomainError("evolve: time grid must be strictly increasing");
}

} // namespace

Trajectory evolve(const BlochState& r0, const BlochGenerator& gen, const std::vector<double>& t_grid,
                  const IntegratorConfig& cfg) {
    check_grid(t_grid);
    if (cfg.stride < 1) throw DomainError("evolve: stride must be >= 1");
    std::vector<BlochState> all(t_grid.size());
    if (cfg.method == Method::ExactExponential) {
        const Propagator P(gen.L);
        for (std::size_t i = 0; i < t_grid.size(); ++i) all[i] = P(t_grid[i] - t_grid[0], r0);
    } else {
        namespace ode = boost::numeric::odeint;
        const Eigen::Matrix4d M = -2.0 * gen.L;
        auto rhs = [&M](const State& x, State& dx, double) {
            for (int i = 0; i < 4; ++i) {
                double s = 0.0;
                for (int j = 0; j < 4; ++j) s += M(i, j) * x[j];
                dx[i] = s;
            }
        };
        State x{1.0, r0.r1, r0.r2, r0.r3};
        all[0] = r0;
        if (cfg.method == Method::RK4) {
            if (!(cfg.step > 0.0)) throw DomainError("evolve: rk4 step must be > 0");
            ode::runge_kutta4<State> st;
            for (std::size_t i = 1; i < t_grid.size(); ++i) {
                const double span = t_grid[i] - t_grid[i - 1];
                const auto n = static_cast<long>(std::ceil(span / cfg.step - 1e-9));
                const double h = span / n;
                double t = t_grid[i - 1];
                for (long k = 0; k < n; ++k, t += h) st.do_step(rhs, x, t, h);
                all[i] = {x[1], x[2], x[3]};
            }
        } else {
            if (!(cfg.rel_tol > 0.0 && cfg.abs_tol > 0.0)) throw DomainError("evolve: rk45 tolerances must be > 0");
            auto stepper = ode::make_controlled(cfg.abs_tol, cfg.rel_tol, ode::runge_kutta_dopri5<State>());
            std::size_t idx = 0;
            ode::integrate_times(stepper, rhs, x, t_grid.begin(), t_grid.end(),
                                 std::min(cfg.step, t_grid.size() > 1 ? t_grid[1] - t_grid[0] : cfg.step),
                                 [&](const State& s, double) { all[idx++] = {s[1], s[2], s[3]}; });
        }
    }
    Trajectory out;
    out.convention = gen.convention;
    for (std::size_t i = 0; i < t_grid.size(); i += cfg.stride) {
        out.times.push_back(t_grid[i]);
        out.states.push_back(all[i]);
    }
    // excursions are checked on every computed point, not only the kept ones
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double n = all[i].norm();
        if (n > 1.0 + cfg.norm_tol) out.norm_excursions.emplace_back(t_grid[i], n);
    }
    return out;
}

StationaryResult stationary_state(const BlochGenerator& gen) {
    const Eigen::Matrix3d B = gen.L.block<3, 3>(1, 1);
    const Eigen::Vector3d b = -gen.L.block<3, 1>(1, 0);
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    StationaryResult out;
    Eigen::Vector3d r;
    if (!(sv(2) > 1e-13 * sv(0))) {
        out.degenerate = true;
        svd.setThreshold(1e-13);
        r = svd.solve(b);
    } else {
        const Eigen::FullPivLU<Eigen::Matrix3d> lu(B);
        r = lu.solve(b);
        r += lu.solve(b - B * r);  // one step of refinement
    }
    out.r = BlochState::from(r);
    out.residual = (gen.L * Eigen::Vector4d(1.0, r(0), r(1), r(2))).norm();
    return out;
}

double relaxation_time(const BlochGenerator& gen) {
    const Propagator P(gen.L);
    double rate = std::numeric_limits<double>::infinity();
    const double scale = std::max(1.0, gen.L.cwiseAbs().maxCoeff());
    for (int i = 0; i < 4; ++i) {
        const double re = -P.rates()(i).real();
        if (re > 1e-14 * scale) rate = std::min(rate, re);
    }
    if (!std::isfinite(rate)) throw NumericalError("relaxation_time: no decaying mode");
    return 1.0 / rate;
}

double current(const BlochState& r, const PhysParams& p) { return p.i0 * expectation_sigma2(r, p); }

double asymptotic_current(const PhysParams& p) {
    return p.i0 * p.omega_drive / p.omega_eff() * closed_form_ratio(p);
}

double two_period_window(const PhysParams& p) { return 2.0 * (2.0 * std::numbers::pi / p.omega_eff()); }

std::vector<double> time_averaged_current(const Trajectory& traj, const PhysParams& p, double window) {
    const auto& t = traj.times;
    if (!(window > 0.0)) throw DomainError("time_averaged_current: window must be > 0");
    if (t.empty() || window > t.back() - t.front() + 1e-12 * std::max(1.0, window))
        throw DomainError("time_averaged_current: window longer than the trajectory");
    const std::size_t n = t.size();
    std::vector<double> I(n), cum(n, 0.0), out(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < n; ++i) I[i] = current(traj.states[i], p);
    for (std::size_t i = 1; i < n; ++i) cum[i] = cum[i - 1] + 0.5 * (I[i] + I[i - 1]) * (t[i] - t[i - 1]);
    // cumulative trapezoid, linear interpolation at the window start
    auto cum_at = [&](double s) {
        auto it = std::upper_bound(t.begin(), t.end(), s);
        std::size_t k = static_cast<std::size_t>(it - t.begin());
        if (k == 0) return 0.0;
        --k;
        if (k + 1 >= n) return cum[n - 1];
        const double h = s - t[k];
        const double Is = I[k] + (I[k + 1] - I[k]) * h / (t[k + 1] - t[k]);
        return cum[k] + 0.5 * (I[k] + Is) * h;
    };
    const double slack = 1e-12 * std::max(1.0, window);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = t[i] - window;
        if (s < t.front() - slack) continue;
        out[i] = (cum[i] - cum_at(std::max(s, t.front()))) / window;
    }
    return out;
}

double long_time_current(const BlochGenerator& gen, const PhysParams& p, const BlochState& r0, double n_relax) {
    const double t_end = n_relax * relaxation_time(gen);
    const double w = two_period_window(p);
    const Propagator P(gen.L);
    const BlochState start = P(t_end - w, r0);
    Trajectory tr;
    tr.times = linear_grid(0.0, w, 801);
    for (double t : tr.times) tr.states.push_back(P(t, start));
    return time_averaged_current(tr, p, w).back();
}

BlochState figure3_state() {
    const double r = -1.0 / std::sqrt(5.0);
    return {0.0, 2.0 * r, r};
}

CurrentComparison compare_asymptotic_currents(const DissCoefficients& c, const PhysParams& p) {
    if (c.convention != Convention::Redfield) throw DomainError("compare_asymptotic_currents: expects Redfield coefficients");
    auto currents = [&p](const DissCoefficients& cc) {
        const auto red = build_redfield_generator(cc, p);
        const auto cp = build_cp_generator(cc.converted(Convention::CPAveraged), p);
        return std::make_pair(current(stationary_state(cp).r, p), current(stationary_state(red).r, p));
    };
    CurrentComparison out;
    const auto red = build_redfield_generator(c, p);
    const auto base = currents(c);
    out.cp_closed_form = asymptotic_current(p);
    out.cp_numeric = base.first;
    out.redfield_stationary = base.second;
    out.redfield_long_time = long_time_current(red, p, figure3_state());
    out.gap = out.cp_numeric - out.redfield_long_time;
    // first-order propagation, one coefficient at a time
    double err = 0.0;
    for (int k = 0; k < NCOEF; ++k) {
        if (c.error[k] == 0.0) continue;
        DissCoefficients d = c;
        d.value[k] += c.error[k];
        const auto pert = currents(d);
        err += std::abs(pert.first - base.first) + std::abs(pert.second - base.second);
    }
    out.error = err + std::abs(out.redfield_long_time - out.redfield_stationary);
    return out;
}

} // namespace tlc
