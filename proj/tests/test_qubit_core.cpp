// test_qubit_core.cpp - states, entropies and distances

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tlc/qubit_core.hpp"

using namespace tlc;
using cd = std::complex<double>;

namespace {

BlochState random_ball(std::mt19937_64& g, double rmax = 0.999) {
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::Vector3d v(n(g), n(g), n(g));
    return BlochState::from(v.normalized() * rmax * std::cbrt(u(g)));
}

double max_abs(const Eigen::Matrix2cd& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("bloch_to_density examples") {
    Eigen::Matrix2cd e;
    e << 0.5, 0, 0, 0.5;
    CHECK(max_abs(bloch_to_density({0, 0, 0}) - e) == 0.0);
    e << 1, 0, 0, 0;
    CHECK(max_abs(bloch_to_density({0, 0, 1}) - e) == 0.0);
    e << 0.5, 0.5, 0.5, 0.5;
    CHECK(max_abs(bloch_to_density({1, 0, 0}) - e) == 0.0);
}

TEST_CASE("density_to_bloch examples and round trip") {
    Eigen::Matrix2cd m;
    m << 0.5, 0, 0, 0.5;
    CHECK(density_to_bloch(m).norm() == 0.0);
    m << 1, 0, 0, 0;
    CHECK(density_to_bloch(m).r3 == 1.0);
    std::mt19937_64 g(1);
    for (int i = 0; i < 100; ++i) {
        const BlochState r = random_ball(g);
        const BlochState back = density_to_bloch(bloch_to_density(r));
        CHECK((back.vec() - r.vec()).norm() < 1e-14);
    }
    m << 0.7, 0, 0, 0.7;
    CHECK_THROWS_AS(density_to_bloch(m), DomainError);
}

TEST_CASE("rotated Pauli triple is an su(2) basis") {
    const PhysParams p;
    const RotatedPaulis s(p);
    const cd I(0, 1);
    const Eigen::Matrix2cd one = Eigen::Matrix2cd::Identity();
    for (int i = 0; i < 3; ++i) CHECK(max_abs(s.s[i] * s.s[i] - one) < 1e-15);
    CHECK(max_abs(s.s[0] * s.s[1] - I * s.s[2]) < 1e-15);
    CHECK(max_abs(s.s[1] * s.s[2] - I * s.s[0]) < 1e-15);
    CHECK(max_abs(s.s[2] * s.s[0] - I * s.s[1]) < 1e-15);
    const Eigen::Vector3d o(0.1, -0.4, 0.3);
    CHECK((original_from_rotated(rotated_from_original(o, p), p) - o).norm() < 1e-15);
}

TEST_CASE("von Neumann entropy") {
    CHECK(von_neumann_entropy({0, 0, 0}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(von_neumann_entropy({0, 0, 1}) == 0.0);
    const double want = -0.75 * std::log(0.75) - 0.25 * std::log(0.25);
    CHECK(von_neumann_entropy({0.3, 0.0, 0.4}) == doctest::Approx(want).epsilon(1e-14));
    CHECK(want == doctest::Approx(0.562335).epsilon(1e-6));
    CHECK_THROWS_AS(von_neumann_entropy({1.0, 0.5, 0.0}), DomainError);

    // concavity along segments
    std::mt19937_64 g(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const BlochState a = random_ball(g), b = random_ball(g);
        const double t = u(g);
        const BlochState m = BlochState::from(t * a.vec() + (1 - t) * b.vec());
        CHECK(von_neumann_entropy(m) >= t * von_neumann_entropy(a) + (1 - t) * von_neumann_entropy(b) - 1e-14);
    }
}

TEST_CASE("relative entropy") {
    CHECK(std::abs(relative_entropy({0, 0.3, 0.2}, {0, 0.3, 0.2})) < 1e-15);
    const double want = 0.75 * std::log(1.5) + 0.25 * std::log(0.5);
    CHECK(relative_entropy({0, 0, 0.5}, {0, 0, 0}) == doctest::Approx(want).epsilon(1e-14));
    CHECK(want == doctest::Approx(0.130812).epsilon(1e-5));
    CHECK_THROWS_AS(relative_entropy({0, 0, 0.5}, {0, 0, 1}), DomainError);

    std::mt19937_64 g(3);
    for (int i = 0; i < 1000; ++i) {
        const BlochState a = random_ball(g), b = random_ball(g);
        const double s = relative_entropy(a, b);
        CHECK(s >= -1e-14);
        const double d = trace_distance(a, b);
        CHECK(s >= 2.0 * d * d - 1e-12);  // Pinsker
        // closed form against the spectral 2x2 logarithms
        const Eigen::Matrix2cd m = bloch_to_density(a) * (log_density(a) - log_density(b));
        CHECK(m.trace().real() == doctest::Approx(s).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("trace distance") {
    CHECK(trace_distance({0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}) == 0.0);
    CHECK(trace_distance({0, 0, 1}, {0, 0, -1}) == 1.0);
    CHECK(trace_distance({0, 0, -0.835132}, {0, 0, -1}) == doctest::Approx(0.082434).epsilon(1e-12));
}

TEST_CASE("expectation of the original sigma_2") {
    PhysParams p;
    p.omega_drive = 0.0;
    CHECK(expectation_sigma2({0, 1, 0}, p) == 1.0);
    p = PhysParams{};
    const double w = p.omega_eff();
    CHECK(expectation_sigma2({0, 0, 0.3}, p) == doctest::Approx(-p.omega_drive * 0.3 / w));
    CHECK(expectation_sigma2({0, p.delta / w, -p.omega_drive / w}, p) == doctest::Approx(1.0).epsilon(1e-15));
    // frozen: CP stationary state at the reference parameters (r3 from the closed-form ratio)
    CHECK(expectation_sigma2({0, 0, -0.8351318367777494}, p) == doctest::Approx(0.7469646228837).epsilon(1e-12));

    // linearity, and agreement with Tr(rho sigma_2) built from the rotated triple
    const RotatedPaulis s(p);
    std::mt19937_64 g(4);
    for (int i = 0; i < 50; ++i) {
        const BlochState r = random_ball(g);
        const Eigen::Matrix2cd rho =
            0.5 * (Eigen::Matrix2cd::Identity() + r.r1 * s.s[0] + r.r2 * s.s[1] + r.r3 * s.s[2]);
        CHECK(expectation_sigma2(r, p) == doctest::Approx((rho * pauli(2)).trace().real()).epsilon(1e-14));
        const BlochState r2 = BlochState::from(0.5 * r.vec());
        CHECK(expectation_sigma2(r2, p) == doctest::Approx(0.5 * expectation_sigma2(r, p)).epsilon(1e-14));
    }
}

TEST_CASE("log ratio series is continuous at the switch") {
    const double x = 1e-6;
    CHECK(log_ratio_over_x(x * (1 - 1e-12)) == doctest::Approx(log_ratio_over_x(x * (1 + 1e-12))).epsilon(1e-14));
    CHECK(log_ratio_over_x(0.0) == 2.0);
}

TEST_CASE("parameter validation") {
    PhysParams p;
    p.beta = 0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = PhysParams{};
    p.omega_c = -1;
    CHECK_THROWS_AS(p.validate(), DomainError);
}
