// generators.hpp - 4x4 Bloch generators, Kossakowski spectra, short-time positivity

#pragma once

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tlc/bath.hpp"
#include "tlc/qubit_core.hpp"

namespace tlc {

// dr/dt = -2 L (1, r). Blocks are stored with lambda^2 already applied.
struct BlochGenerator {
    Eigen::Matrix4d L = Eigen::Matrix4d::Zero();
    Eigen::Matrix4d h_eff = Eigen::Matrix4d::Zero();
    Eigen::Matrix4d h_ls = Eigen::Matrix4d::Zero();
    Eigen::Matrix4d diss = Eigen::Matrix4d::Zero();
    Convention convention{Convention::Redfield};
    double lambda{0.0};

    // (L (1, r))_{1..3}; the Bloch velocity is -2 times this
    Eigen::Vector3d apply(const BlochState& r) const;
    // L[rho] = -sum_i (L (1,r))_i hat-sigma_i, as a 2x2 matrix in the rotated basis
    Eigen::Matrix2cd superop(const BlochState& r) const;
};

Eigen::Matrix4d effective_hamiltonian_block(double omega_eff);

// Dissipator plus Lamb shift at unit coupling, before any averaging.
Eigen::Matrix4d pre_average_matrix(const DissCoefficients& c);

BlochGenerator build_redfield_generator(const DissCoefficients& c, const PhysParams& p);
BlochGenerator build_cp_generator(const DissCoefficients& c, const PhysParams& p);

// (1/2T) int_{-T}^{T} ds R(s)^T N R(s), R the Bloch rotation generated by h_eff
Eigen::Matrix4d rotation_average_numeric(const Eigen::Matrix4d& N, double omega_eff, double T);

struct KossakowskiSpectrum {
    std::vector<double> eigenvalues;  // ascending
    bool is_psd{false};
    Eigen::MatrixXcd K;
};

KossakowskiSpectrum redfield_kossakowski();
KossakowskiSpectrum cp_kossakowski(const BlochGenerator& gen);

// 3x3 Hermitian K in the rotated triple from the dissipator entries (unit coupling)
Eigen::Matrix3cd kossakowski_from_dissipator(const Eigen::Matrix4d& D);

struct WPair {
    Eigen::Matrix2cd W1;
    Eigen::Matrix2cd W3;
};

// U_eff(tau) sigma_xi(-tau) U_eff(tau)^dag in the original sigma_3 eigenbasis
WPair compute_W(double tau, const PhysParams& p);

struct ShortTimeOperators {
    Eigen::Matrix2cd V1 = Eigen::Matrix2cd::Zero();
    Eigen::Matrix2cd V3 = Eigen::Matrix2cd::Zero();
    Eigen::Matrix2d err1 = Eigen::Matrix2d::Zero();  // per-entry error (re and im combined)
    Eigen::Matrix2d err3 = Eigen::Matrix2d::Zero();
    double error{0.0};
};

ShortTimeOperators compute_V(const PhysParams& p, const QuadratureConfig& qc = {});

// Redfield generator assembled directly from V1, V3 (original basis), mapped
// to the rotated Bloch representation.
BlochGenerator generator_from_short_time(const ShortTimeOperators& v, const PhysParams& p);

double delta_alpha(std::complex<double> alpha, const ShortTimeOperators& v);

struct GridSpec {
    double re_min{-4.0}, re_max{4.0};
    double im_min{-4.0}, im_max{4.0};
    int n_re{200}, n_im{200};
};

struct PositivityPoint {
    std::complex<double> alpha;
    double delta;
    bool negative;
};

struct PositivityMap {
    std::vector<PositivityPoint> points;
    double negative_fraction{0.0};
};

PositivityMap positivity_map(const GridSpec& g, const ShortTimeOperators& v);

// Pure state (|0> + alpha|1>)/norm of the original basis, as a rotated Bloch vector.
BlochState alpha_state(std::complex<double> alpha, const PhysParams& p);

} // namespace tlc
