// qubit_core.cpp - conversions and 2x2 spectral formulas

#include "tlc/qubit_core.hpp"

#include <cmath>

namespace tlc {

namespace {
using cd = std::complex<double>;
constexpr cd I{0.0, 1.0};
} // namespace

void PhysParams::validate() const {
    if (!(delta > 0.0)) throw DomainError("delta must be > 0");
    if (!(omega_c > 0.0)) throw DomainError("omega_c must be > 0");
    if (!(beta > 0.0)) throw DomainError("beta must be > 0");
    if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
    if (!std::isfinite(omega_drive)) throw DomainError("omega_drive must be finite");
}

Eigen::Matrix2cd pauli(int k) {
    Eigen::Matrix2cd m;
    switch (k) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -I, I, 0; break;
    case 3: m << 1, 0, 0, -1; break;
    default: throw DomainError("pauli index out of range");
    }
    return m;
}

RotatedPaulis::RotatedPaulis(const PhysParams& p) {
    const double w = p.omega_eff();
    const double d = p.delta / w, o = p.omega_drive / w;
    s[0] = pauli(1);
    s[1] = d * pauli(2) + o * pauli(3);
    s[2] = d * pauli(3) - o * pauli(2);
}

DensityMatrix bloch_to_density(const BlochState& r) {
    DensityMatrix rho;
    rho << 0.5 * (1.0 + r.r3), 0.5 * cd(r.r1, -r.r2),
           0.5 * cd(r.r1, r.r2), 0.5 * (1.0 - r.r3);
    return rho;
}

BlochState density_to_bloch(const DensityMatrix& rho, double tol) {
    const cd tr = rho.trace();
    if (std::abs(tr - 1.0) > tol) throw DomainError("density matrix trace != 1");
    return {2.0 * std::real(rho(1, 0)), 2.0 * std::imag(rho(1, 0)),
            std::real(rho(0, 0) - rho(1, 1))};
}

BlochState rotated_from_original(const Eigen::Vector3d& o, const PhysParams& p) {
    const double w = p.omega_eff();
    return {o(0), (p.delta * o(1) + p.omega_drive * o(2)) / w,
            (p.delta * o(2) - p.omega_drive * o(1)) / w};
}

Eigen::Vector3d original_from_rotated(const BlochState& r, const PhysParams& p) {
    const double w = p.omega_eff();
    return {r.r1, (p.delta * r.r2 - p.omega_drive * r.r3) / w,
            (p.omega_drive * r.r2 + p.delta * r.r3) / w};
}

namespace {

double checked_norm(const BlochState& r, const LogGuard& g) {
    const double n = r.norm();
    if (!(n <= 1.0 + g.tol)) throw DomainError("Bloch vector outside the unit ball");
    return std::min(n, 1.0);
}

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

} // namespace

double log_ratio_over_x(double x) {
    if (std::abs(x) < 1e-6) return 2.0 + 2.0 * x * x / 3.0;
    return 2.0 * std::atanh(x) / x;
}

double von_neumann_entropy(const BlochState& r, const LogGuard& g) {
    const double n = checked_norm(r, g);
    return -xlogx(0.5 * (1.0 + n)) - xlogx(0.5 * (1.0 - n));
}

Eigen::Matrix2cd log_density(const BlochState& r, const LogGuard& g) {
    double n = checked_norm(r, g);
    double lo = 0.5 * (1.0 - n);
    if (lo <= 0.0 || n >= 1.0) {
        if (!g.clamp_pure) throw DomainError("log of a pure state is singular");
        lo = g.eps;
        n = 1.0 - 2.0 * g.eps;
    }
    const double hi = 0.5 * (1.0 + n);
    // log rho = (log hi + log lo)/2 + (log hi - log lo)/2 * n_hat.sigma
    const double a = 0.5 * (std::log(hi) + std::log(lo));
    const double b = 0.5 * std::log(hi / lo);
    Eigen::Matrix2cd m = a * pauli(0);
    const double rn = r.norm();
    if (rn > 0.0) {
        m += (b / rn) * (r.r1 * pauli(1) + r.r2 * pauli(2) + r.r3 * pauli(3));
    }
    return m;
}

double relative_entropy(const BlochState& ra, const BlochState& rb, const LogGuard& g) {
    const double na = checked_norm(ra, g);
    const double nb = rb.norm();
    if (!(nb < 1.0)) throw DomainError("relative entropy: reference state is not full rank");
    // Tr(ra log rb) = log((1-nb^2)/4)/2 + atanh(nb)/nb * ra.rb
    const double cross = 0.5 * std::log(0.25 * (1.0 - nb * nb))
                        + 0.5 * log_ratio_over_x(nb) * ra.vec().dot(rb.vec());
    const double neg_s = xlogx(0.5 * (1.0 + na)) + xlogx(0.5 * (1.0 - na));
    return neg_s - cross;
}

double trace_distance(const BlochState& ra, const BlochState& rb) {
    return 0.5 * (ra.vec() - rb.vec()).norm();
}

double expectation_sigma2(const BlochState& r, const PhysParams& p) {
    return (p.delta * r.r2 - p.omega_drive * r.r3) / p.omega_eff();
}

} // namespace tlc
