// bath.hpp - Ohmic bath kernels and the twelve generator coefficients

#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <string>
#include <vector>

#include "tlc/qubit_core.hpp"

namespace tlc {

struct SpectralDensity {
    double omega_c{1000.0};
};

// J(w) = w exp(-w/omega_c)
double spectral_density(double w, const SpectralDensity& sd);

// coth(x) for x > 0, equal to 1.0 for x > 20
double coth_stable(double x);

// Gamma_s(u) = int_0^inf J(w) sin(w u) dw, closed form
double kernel_gs(double u, const SpectralDensity& sd);

// Gamma_c(u) = int_0^inf J(w) coth(beta w/2) cos(w u) dw: zero-temperature part in
// closed form, thermal remainder by adaptive quadrature
double kernel_gc(double u, const SpectralDensity& sd, double beta, double rel_tol = 1e-10);

struct QuadratureConfig {
    double u_max{0.0};  // 0 means 40/eta_min; bounds the direct u-quadrature cross-check only
    std::vector<double> eta{0.02, 0.01, 0.005, 0.0025, 0.00125};
    double rel_tol{1e-6};
    int max_subdivisions{18};  // bisection depth per omega panel

    void validate() const;
    double eta_min() const;
    double resolved_u_max() const;
};

enum class Convention { Redfield, CPAveraged };
const char* to_string(Convention c);

enum Coef : int { K10, K20, K30, K11, K12, K13, K22, K23, K33, H12, H13, H23, NCOEF };
extern const std::array<const char*, NCOEF> coef_names;

// Coefficients before the lambda^2 factor, in units of Delta.
struct DissCoefficients {
    std::array<double, NCOEF> value{};
    std::array<double, NCOEF> error{};  // extrapolation spread plus quadrature error
    Convention convention{Convention::Redfield};

    double operator[](Coef c) const { return value[c]; }
    double& operator[](Coef c) { return value[c]; }

    // Same integrals in the other convention: k10, k12, k13, h23 change sign.
    DissCoefficients converted(Convention to) const;
};

enum class Kernel { C, S };  // Gamma_c or Gamma_s
enum class Trig { Cos, Sin };

struct Extrapolated {
    double value{0.0};
    double error{0.0};
};

// int_0^inf du Gamma_k(u) trig(a u), computed as the eta -> 0 limit of the
// damped integral with exp(-eta u). The u-integral of each damped kernel is
// done in closed form after exchanging the order with the spectral integral,
// leaving one smooth omega-integral per eta.
class BathTransforms {
public:
    BathTransforms(const PhysParams& p, const QuadratureConfig& qc);

    Extrapolated transform(Kernel k, Trig t, double a) const;
    // the damped value at a single eta; for S/Cos the constant omega_c is excluded
    double damped(Kernel k, Trig t, double a, double eta, double* quad_err = nullptr) const;
    // the same damped value by direct quadrature over u in [0, u_max] with the
    // kernel functions; slow, used to cross-check the closed-form u-integrals
    double damped_direct(Kernel k, Trig t, double a, double eta) const;
    // eta grid used at frequency a (scaled by the distance to the nearest singularity)
    std::vector<double> eta_grid(double a) const;

private:
    Extrapolated compute(Kernel k, Trig t, double a) const;

    PhysParams p_;
    QuadratureConfig qc_;
    // memo of transforms keyed by (kernel, trig, |a|)
    struct Cache {
        std::mutex m;
        std::map<std::tuple<int, int, double>, Extrapolated> v;
    };
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

DissCoefficients compute_coefficients(const PhysParams& p, Convention conv,
                                      const QuadratureConfig& qc = {});

// K30/K33 in closed form, using only the resonant parts
double closed_form_ratio(const PhysParams& p);

// Trigonometric monomials in omega_eff (1, c, s) times Omega (1, C, S)
enum class FW { One, Cw, Sw };
enum class FO { One, CO, SO };

struct TrigTerm {
    double weight;
    Kernel kernel;
    FW fw;
    FO fo;
};

// int_0^inf du Gamma_k(u) f_w(u) f_O(u) summed over terms; errors add in magnitude.
Extrapolated integrate_terms(const std::vector<TrigTerm>& terms, const PhysParams& p,
                             const BathTransforms& bt);

} // namespace tlc
