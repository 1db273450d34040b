// qubit_core.hpp - qubit states in the rotated Pauli basis, entropies and distances

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tlc {

// Input outside the domain of an operation (unphysical state, bad parameter).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Quadrature or linear-algebra failure; carries a short diagnostic.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All frequencies in units of the pumping amplitude Delta.
struct PhysParams {
    double delta{1.0};        // pumping amplitude
    double omega_drive{2.0};  // driving frequency Omega
    double lambda{0.005};     // system-bath coupling
    double beta{10.0};        // inverse temperature Delta/kT
    double omega_c{1000.0};   // Ohmic cutoff
    double i0{1.0};           // current scale

    double omega_eff() const { return std::hypot(delta, omega_drive); }
    void validate() const;
};

struct BlochState {
    double r1{0.0};
    double r2{0.0};
    double r3{0.0};

    Eigen::Vector3d vec() const { return {r1, r2, r3}; }
    double norm() const { return vec().norm(); }
    static BlochState from(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }
};

using DensityMatrix = Eigen::Matrix2cd;

// Rotated Pauli triple expressed in the original sigma_3 eigenbasis.
// hat1 = s1, hat2 = (D s2 + W s3)/w, hat3 = (D s3 - W s2)/w.
struct RotatedPaulis {
    Eigen::Matrix2cd s[3];
    explicit RotatedPaulis(const PhysParams& p);
};

// Pauli matrices in the basis where the operator at hand is diagonal.
Eigen::Matrix2cd pauli(int k);

// Density matrix in the basis where hat-sigma_3 = diag(1,-1). Accepts |r| > 1.
DensityMatrix bloch_to_density(const BlochState& r);
BlochState density_to_bloch(const DensityMatrix& rho, double tol = 1e-12);

// Bloch vectors w.r.t. the original triple (s1,s2,s3) vs. the rotated one.
BlochState rotated_from_original(const Eigen::Vector3d& orig, const PhysParams& p);
Eigen::Vector3d original_from_rotated(const BlochState& r, const PhysParams& p);

struct LogGuard {
    bool clamp_pure{false};  // clamp eigenvalues at eps instead of rejecting
    double eps{1e-15};
    double tol{1e-12};       // |r| <= 1 + tol accepted as physical
};

double von_neumann_entropy(const BlochState& r, const LogGuard& g = {});
double relative_entropy(const BlochState& ra, const BlochState& rb, const LogGuard& g = {});
double trace_distance(const BlochState& ra, const BlochState& rb);

// Tr(rho sigma_2) with sigma_2 the original (unrotated) Pauli matrix.
double expectation_sigma2(const BlochState& r, const PhysParams& p);

// log((1+x)/(1-x))/x, with the series near 0.
double log_ratio_over_x(double x);

// log(rho) as a 2x2 matrix in the rotated basis, via its spectral decomposition.
Eigen::Matrix2cd log_density(const BlochState& r, const LogGuard& g = {});

} // namespace tlc
