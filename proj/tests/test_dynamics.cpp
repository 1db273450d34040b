// test_dynamics.cpp - propagation, stationary states and currents

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tlc/dynamics.hpp"

using namespace tlc;

namespace {

struct Fixture {
    PhysParams p;
    DissCoefficients red, cp;
    BlochGenerator g_red, g_cp;
    Fixture() {
        red = compute_coefficients(p, Convention::Redfield);
        cp = red.converted(Convention::CPAveraged);
        g_red = build_redfield_generator(red, p);
        g_cp = build_cp_generator(cp, p);
    }
};

const Fixture& fx() {
    static const Fixture f;
    return f;
}

BlochState random_ball(std::mt19937_64& g, double rmax = 0.999) {
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::Vector3d v(n(g), n(g), n(g));
    return BlochState::from(v.normalized() * rmax * std::cbrt(u(g)));
}

double sup_dist(const Trajectory& a, const Trajectory& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.states.size(); ++i)
        d = std::max(d, (a.states[i].vec() - b.states[i].vec()).cwiseAbs().maxCoeff());
    return d;
}

} // namespace

TEST_CASE("method names") {
    CHECK(method_from_string("exact_exponential") == Method::ExactExponential);
    CHECK(method_from_string("rk4_fixed") == Method::RK4);
    CHECK(method_from_string("rk45_adaptive") == Method::RK45);
    CHECK(method_from_string(to_string(Method::RK45)) == Method::RK45);
    CHECK_THROWS_AS(method_from_string("euler"), DomainError);
}

TEST_CASE("closed Hamiltonian rotation") {
    PhysParams p;
    p.lambda = 0.0;
    const auto g = build_redfield_generator(fx().red, p);
    const double w = p.omega_eff();
    const double period = 2.0 * std::numbers::pi / w;
    const auto grid = linear_grid(0.0, 3.0 * period, 301);
    const auto tr = evolve({1, 0, 0}, g, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        CHECK(tr.states[i].norm() == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(tr.states[i].r1 == doctest::Approx(std::cos(w * t)).scale(1.0).epsilon(1e-12));
        CHECK(std::abs(tr.states[i].r2) == doctest::Approx(std::abs(std::sin(w * t))).scale(1.0).epsilon(1e-12));
        CHECK(tr.states[i].r3 == doctest::Approx(0.0).scale(1.0).epsilon(1e-13));
    }
    CHECK((tr.states.back().vec() - Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);
    CHECK(tr.norm_excursions.empty());
}

TEST_CASE("stationary start stays put") {
    const auto& f = fx();
    for (const auto* g : {&f.g_red, &f.g_cp}) {
        const auto st = stationary_state(*g);
        const auto tr = evolve(st.r, *g, linear_grid(0.0, 1e5, 101));
        for (const auto& s : tr.states) CHECK((s.vec() - st.r.vec()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("grid and config validation") {
    const auto& f = fx();
    CHECK_THROWS_AS(evolve({0, 0, 0}, f.g_cp, {0.0, 1.0, 1.0}), DomainError);
    CHECK_THROWS_AS(evolve({0, 0, 0}, f.g_cp, {}), DomainError);
    IntegratorConfig bad;
    bad.step = 0.0;
    bad.method = Method::RK4;
    CHECK_THROWS_AS(evolve({0, 0, 0}, f.g_cp, {0.0, 1.0}, bad), DomainError);
}

TEST_CASE("rk4 is fourth order and rk45 matches the exponential") {
    const auto& f = fx();
    const BlochState r0{0.3, -0.5, 0.4};
    const auto grid = linear_grid(0.0, 100.0, 101);
    const auto exact = evolve(r0, f.g_red, grid);
    IntegratorConfig c;
    c.method = Method::RK4;
    c.step = 0.1;
    const double e1 = sup_dist(evolve(r0, f.g_red, grid, c), exact);
    c.step = 0.05;
    const double e2 = sup_dist(evolve(r0, f.g_red, grid, c), exact);
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.05));

    c.method = Method::RK45;
    CHECK(sup_dist(evolve(r0, f.g_red, grid, c), exact) < 1e-8);
    CHECK(sup_dist(evolve(r0, f.g_cp, grid, c), evolve(r0, f.g_cp, grid)) < 1e-8);
}

TEST_CASE("output stride") {
    const auto& f = fx();
    IntegratorConfig c;
    c.stride = 10;
    const auto tr = evolve({0, 0, 0.5}, f.g_cp, linear_grid(0.0, 10.0, 101), c);
    CHECK(tr.times.size() == 11);
    CHECK(tr.times.back() == 10.0);
    CHECK(tr.convention == Convention::CPAveraged);
}

TEST_CASE("stationary states") {
    const auto& f = fx();
    const auto cp = stationary_state(f.g_cp);
    CHECK_FALSE(cp.degenerate);
    CHECK(cp.r.r1 == 0.0);
    CHECK(cp.r.r2 == 0.0);
    CHECK(cp.r.r3 == doctest::Approx(-closed_form_ratio(f.p)).epsilon(1e-9));
    CHECK(cp.r.r3 == doctest::Approx(-0.835132).epsilon(1e-6));
    CHECK(cp.residual < 1e-12);

    const auto red = stationary_state(f.g_red);
    CHECK_FALSE(red.degenerate);
    CHECK(red.residual < 1e-12);
    // frozen Redfield stationary state
    CHECK(red.r.r1 == doctest::Approx(6.393e-5).epsilon(1e-3));
    CHECK(red.r.r2 == doctest::Approx(-8.145e-6).epsilon(1e-3));
    CHECK(red.r.r3 == doctest::Approx(-0.8347612).epsilon(1e-6));

    PhysParams p;
    p.lambda = 0.0;
    const auto h = stationary_state(build_cp_generator(f.cp, p));
    CHECK(h.degenerate);
}

TEST_CASE("currents") {
    const auto& f = fx();
    CHECK(current({0, 0, 0}, f.p) == 0.0);
    const BlochState r{0.2, -0.4, 0.5};
    CHECK(current(BlochState::from(0.3 * r.vec()), f.p) == doctest::Approx(0.3 * current(r, f.p)).epsilon(1e-14));
    const auto cp = stationary_state(f.g_cp);
    CHECK(current(cp.r, f.p) == doctest::Approx(asymptotic_current(f.p)).epsilon(1e-9));
    CHECK(asymptotic_current(f.p) == doctest::Approx(0.7469646).epsilon(1e-6));
    // coarse check against the quoted 0.746945
    CHECK(asymptotic_current(f.p) == doctest::Approx(0.746945).epsilon(5e-5));

    PhysParams q = f.p;
    q.omega_drive = 0.0;
    CHECK(asymptotic_current(q) == 0.0);
    q = f.p;
    q.beta = 1e4;
    CHECK(asymptotic_current(q) == doctest::Approx(q.omega_drive / q.omega_eff()).epsilon(1e-15));
    q.i0 = 2.5;
    CHECK(asymptotic_current(q) == doctest::Approx(2.5 * q.omega_drive / q.omega_eff()).epsilon(1e-15));
}

TEST_CASE("time-averaged current") {
    const auto& f = fx();
    const double win = two_period_window(f.p);
    CHECK(win == doctest::Approx(4.0 * std::numbers::pi / f.p.omega_eff()));

    // constant trajectory
    const auto st = stationary_state(f.g_cp);
    const auto flat = evolve(st.r, f.g_cp, linear_grid(0.0, 3.0 * win, 301));
    const auto avg = time_averaged_current(flat, f.p, win);
    for (std::size_t i = 0; i < avg.size(); ++i) {
        if (flat.times[i] < win - 1e-12) {
            CHECK(std::isnan(avg[i]));
        } else {
            CHECK(avg[i] == doctest::Approx(current(st.r, f.p)).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(time_averaged_current(flat, f.p, 4.0 * win), DomainError);
    CHECK_THROWS_AS(time_averaged_current(flat, f.p, 0.0), DomainError);

    // closed rotation: only the r3 part survives
    PhysParams p;
    p.lambda = 0.0;
    const auto g = build_redfield_generator(f.red, p);
    const auto rot = evolve({0.6, 0, 0.8}, g, linear_grid(0.0, 2.0 * win, 2001));
    const auto ra = time_averaged_current(rot, p, win);
    CHECK(ra.back() == doctest::Approx(-p.i0 * p.omega_drive * 0.8 / p.omega_eff()).epsilon(1e-10));

    // CP average settles at t = 20/(lambda^2 K33)
    const double t_end = 20.0 / (f.p.lambda * f.p.lambda * f.cp[K33]);
    const BlochState r_start = Propagator(f.g_cp.L)(t_end - 2.0 * win, figure3_state());
    const auto tr = evolve(r_start, f.g_cp, linear_grid(t_end - 2.0 * win, t_end, 401));
    const auto ta = time_averaged_current(tr, f.p, win);
    CHECK(std::abs(ta.back() / asymptotic_current(f.p) - 1.0) < 1e-4);
}

TEST_CASE("relaxation time") {
    const auto& f = fx();
    const double tau = relaxation_time(f.g_cp);
    CHECK(tau == doctest::Approx(11893.6).epsilon(1e-4));
    // slowest CP mode is the longitudinal decay 2 lambda^2 K33; transverse is lambda^2 (K11+K22)
    const double l2 = f.p.lambda * f.p.lambda;
    CHECK(tau == doctest::Approx(1.0 / (2.0 * l2 * f.cp[K33])).epsilon(1e-12));
    CHECK(2.0 * f.cp[K33] < f.cp[K11] + f.cp[K22]);
}

TEST_CASE("CP contraction and relative entropy monotonicity") {
    const auto& f = fx();
    const auto st = stationary_state(f.g_cp).r;
    const double tau = relaxation_time(f.g_cp);
    const auto grid = linear_grid(0.0, 3.0 * tau, 200);
    std::mt19937_64 g(21);
    for (int i = 0; i < 100; ++i) {
        const BlochState r0 = random_ball(g);
        const auto tr = evolve(r0, f.g_cp, grid);
        CHECK(tr.norm_excursions.empty());
        double prev = relative_entropy(tr.states[0], st);
        for (const auto& s : tr.states) {
            CHECK(s.norm() <= std::max(r0.norm(), 1.0) + 1e-12);
            const double d = relative_entropy(s, st);
            CHECK(d <= prev + 1e-12);
            prev = d;
        }
        // long-time limit after 30 relaxation times
        const Propagator prop(f.g_cp.L);
        CHECK((prop(30.0 * tau, r0).vec() - st.vec()).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("Redfield sends a pure state out of the Bloch sphere") {
    const auto& f = fx();
    const auto tr = evolve(figure3_state(), f.g_red, linear_grid(0.0, 5.0, 501));
    REQUIRE_FALSE(tr.norm_excursions.empty());
    double mx = 0.0;
    for (const auto& e : tr.norm_excursions) mx = std::max(mx, e.second);
    CHECK(mx > 1.0 + 1e-6);
    CHECK(figure3_state().norm() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("propagator") {
    const auto& f = fx();
    const Propagator prop(f.g_red.L);
    CHECK(prop.diagonal());
    const BlochState r0{0.1, 0.2, 0.3};
    CHECK((prop(0.0, r0).vec() - r0.vec()).norm() == 0.0);
    // semigroup property
    const auto a = prop(700.0, prop(300.0, r0));
    const auto b = prop(1000.0, r0);
    CHECK((a.vec() - b.vec()).cwiseAbs().maxCoeff() < 1e-12);
    // one zero rate, the rest decaying
    int zeros = 0;
    for (int i = 0; i < 4; ++i) {
        if (std::abs(prop.rates()(i)) < 1e-14) ++zeros;
        else CHECK(prop.rates()(i).real() < 0.0);
    }
    CHECK(zeros == 1);
}

TEST_CASE("current comparison at the reference point") {
    const auto& f = fx();
    const auto cmp = compare_asymptotic_currents(f.red, f.p);
    CHECK(cmp.cp_numeric == doctest::Approx(cmp.cp_closed_form).epsilon(1e-9));
    CHECK(cmp.redfield_long_time == doctest::Approx(cmp.redfield_stationary).epsilon(1e-9));
    CHECK(cmp.redfield_stationary == doctest::Approx(0.7466294).epsilon(1e-6));
    CHECK(cmp.error < 1e-8);
    CHECK(std::abs(cmp.gap) > 10.0 * cmp.error);
}
