// thermo.hpp - entropy production, heat flow, Gibbs references, violation scans

#pragma once

#include <cstdint>
#include <vector>

#include "tlc/dynamics.hpp"
#include "tlc/generators.hpp"

namespace tlc {

enum class Reference { Stationary, Gibbs };
const char* to_string(Reference r);
Reference reference_from_string(const std::string& s);

// sigma = -Tr(L[rho](log rho - log rho_ref)) with 2x2 spectral logs
double entropy_production(const BlochState& r, const BlochGenerator& gen, const BlochState& r_ref);
// the same quantity from the Bloch closed form
double entropy_production_bloch(const BlochState& r, const BlochGenerator& gen, const BlochState& r_ref);

// d|r|^2/dt = -4 r.(L(1,r)); positive means the state moves outward
double radial_rate(const BlochState& r, const BlochGenerator& gen);
// sign of the divergent term of sigma for a pure state: true when sigma -> -inf
bool pure_state_violation(const BlochState& r, const BlochGenerator& gen);

struct Interval {
    double t_a;
    double t_b;
};

struct SigmaSeries {
    std::vector<double> sigma;  // +-inf on the boundary, NaN outside the ball
    std::vector<Interval> violations;
};

// sigma along a trajectory; sign changes refined by bisection with exact propagation
SigmaSeries entropy_production_series(const Trajectory& traj, const BlochGenerator& gen, const BlochState& r_ref,
                                      double time_tol = 1e-6);

double heat_rate(const BlochState& r, const BlochGenerator& gen, const PhysParams& p);
double external_entropy_rate(const BlochState& r, const BlochGenerator& gen, const PhysParams& p);
// -Tr(L[rho] log rho_ref); equals external_entropy_rate for the Gibbs reference
double entropy_flow(const BlochState& r, const BlochGenerator& gen, const BlochState& r_ref);

BlochState gibbs_state_eff(const PhysParams& p);
BlochState gibbs_state_ls(const PhysParams& p, const DissCoefficients& c);
// Gibbs state of the Hamiltonian encoded in the antisymmetric block of a generator
BlochState gibbs_state_from_block(const Eigen::Matrix4d& ham_block, double beta);

struct ViolationRecord {
    BlochState r0;
    double radial_rate;
    bool violating;
    std::vector<Interval> intervals;  // filled only when a trajectory horizon is requested
};

struct ViolationReport {
    double fraction_violating_t0{0.0};
    double standard_error{0.0};
    std::size_t sample_count{0};
    std::uint64_t seed{42};
    std::vector<ViolationRecord> records;
};

struct ScanOptions {
    std::uint64_t seed{42};
    bool keep_records{false};
    double t_max{0.0};   // > 0: also record sigma < 0 intervals up to t_max
    int points{2001};    // trajectory samples when t_max > 0
};

// uniform pure states from normalized Gaussian triples, fixed chunks seeded from the seed
std::vector<BlochState> sample_pure_states(std::size_t n, std::uint64_t seed);

ViolationReport scan_pure_state_violations(const BlochGenerator& gen, const BlochState& r_ref, std::size_t n,
                                           const ScanOptions& opt = {});

struct SurfacePoint {
    double r1, r2, sigma;
    bool negative;
    bool skipped;  // on or outside the unit sphere
};

struct SurfaceGrid {
    double min{-1.0}, max{1.0};
    int n{101};
};

std::vector<SurfacePoint> sigma_surface(const BlochGenerator& gen, const BlochState& r_ref, double r3_fixed,
                                        const SurfaceGrid& g = {});

} // namespace tlc
