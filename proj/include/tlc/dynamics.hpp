// dynamics.hpp - propagation of Bloch states, stationary states and currents

#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tlc/generators.hpp"

namespace tlc {

enum class Method { ExactExponential, RK4, RK45 };
const char* to_string(Method m);
Method method_from_string(const std::string& s);

struct IntegratorConfig {
    Method method{Method::ExactExponential};
    double step{0.01};      // rk4 fixed step (upper bound between output times)
    double rel_tol{1e-12};  // rk45
    double abs_tol{1e-14};  // rk45
    int stride{1};          // keep every stride-th grid point
    double norm_tol{1e-12}; // |r| > 1 + norm_tol is recorded as an excursion
};

struct Trajectory {
    std::vector<double> times;
    std::vector<BlochState> states;
    std::vector<std::pair<double, double>> norm_excursions;  // (t, |r|)
    Convention convention{Convention::Redfield};
};

// exp(-2 L t) via eigendecomposition, scaling-and-squaring when ill conditioned
class Propagator {
public:
    explicit Propagator(const Eigen::Matrix4d& L);
    Eigen::Vector4d operator()(double t, const Eigen::Vector4d& x0) const;
    BlochState operator()(double t, const BlochState& r0) const;
    bool diagonal() const { return diag_; }
    // complex eigenvalues of -2L
    const Eigen::Vector4cd& rates() const { return lam_; }

private:
    Eigen::Matrix4d M_;
    Eigen::Matrix4cd V_, Vinv_;
    Eigen::Vector4cd lam_;
    bool diag_{false};
};

Trajectory evolve(const BlochState& r0, const BlochGenerator& gen, const std::vector<double>& t_grid,
                  const IntegratorConfig& cfg = {});

std::vector<double> linear_grid(double t0, double t1, int points);

struct StationaryResult {
    BlochState r;
    bool degenerate{false};
    double residual{0.0};
};

StationaryResult stationary_state(const BlochGenerator& gen);

// slowest nonzero decay time of -2L
double relaxation_time(const BlochGenerator& gen);

double current(const BlochState& r, const PhysParams& p);
double asymptotic_current(const PhysParams& p);

// trailing-window mean of the current; NaN until the window fits in the record
std::vector<double> time_averaged_current(const Trajectory& traj, const PhysParams& p, double window);
double two_period_window(const PhysParams& p);

// Mean current over the last two periods before n_relax relaxation times.
double long_time_current(const BlochGenerator& gen, const PhysParams& p, const BlochState& r0, double n_relax = 30.0);

// Initial state (0, 2r, r), r = -1/sqrt(5)
BlochState figure3_state();

struct CurrentComparison {
    double cp_closed_form{0.0};
    double cp_numeric{0.0};
    double redfield_stationary{0.0};
    double redfield_long_time{0.0};
    double gap{0.0};    // cp_numeric - redfield_long_time
    double error{0.0};  // coefficient errors propagated to both currents plus the time-limit residue
};

// c: Redfield-convention coefficients with error estimates
CurrentComparison compare_asymptotic_currents(const DissCoefficients& c, const PhysParams& p);

} // namespace tlc
