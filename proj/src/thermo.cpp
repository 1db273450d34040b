// thermo.cpp - entropy production and second-law scans

#include "tlc/thermo.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

namespace tlc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPureTol = 1e-12;
constexpr std::size_t kChunk = 1024;

void require_interior_reference(const BlochState& r_ref) {
    if (!(r_ref.norm() < 1.0)) throw DomainError("entropy production: reference state lies on the Bloch sphere");
}

// sigma with boundary and exterior states mapped to +-inf / NaN
double sigma_extended(const BlochState& r, const BlochGenerator& gen, const BlochState& r_ref) {
    const double n = r.norm();
    if (n > 1.0 + kPureTol) return kNaN;
    if (n >= 1.0 - kPureTol) {
        const double rate = radial_rate(r, gen);
        if (rate > 0.0) return -kInf;
        if (rate < 0.0) return kInf;
        return kNaN;
    }
    return entropy_production(r, gen, r_ref);
}

bool is_negative(double s) { return s < 0.0; }

} // namespace

const char* to_string(Reference r) { return r == Reference::Stationary ? "stationary" : "gibbs"; }

Reference reference_from_string(const std::string& s) {
    if (s == "stationary") return Reference::Stationary;
    if (s == "gibbs") return Reference::Gibbs;
    throw DomainError("unknown reference state: " + s);
}

double entropy_production(const BlochState& r, const BlochGenerator& gen, const BlochState& r_ref) {
    if (!(r.norm() < 1.0)) throw DomainError("entropy production diverges on the Bloch sphere; use pure_state_violation");
    require_interior_reference(r_ref);
    const Eigen::Matrix2cd Lrho = gen.superop(r);
    const Eigen::Matrix2cd d = log_density(r) - log_density(r_ref);
    return -(Lrho * d).trace().real();
}

double entropy_production_bloch(const BlochState& r, const BlochGenerator& gen, const BlochState& r_ref) {
    if (!(r.norm() < 1.0)) throw DomainError("entropy production diverges on the Bloch sphere; use pure_state_violation");
    require_interior_reference(r_ref);
    const Eigen::Vector3d v = gen.apply(r);
    const Eigen::Vector3d w = log_ratio_over_x(r.norm()) * r.vec() - log_ratio_over_x(r_ref.norm()) * r_ref.vec();
    return v.dot(w);
}

double radial_rate(const BlochState& r, const BlochGenerator& gen) { return -4.0 * r.vec().dot(gen.apply(r)); }

bool pure_state_violation(const BlochState& r, const BlochGenerator& gen) { return radial_rate(r, gen) > 0.0; }

SigmaSeries entropy_production_series(const Trajectory& traj, const BlochGenerator& gen, const BlochState& r_ref,
                                      double time_tol) {
    require_interior_reference(r_ref);
    if (!(time_tol > 0.0)) throw DomainError("entropy_production_series: time tolerance must be > 0");
    const auto& t = traj.times;
    const std::size_t n = t.size();
    SigmaSeries out;
    out.sigma.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.sigma[i] = sigma_extended(traj.states[i], gen, r_ref);

    const Propagator P(gen.L);
    // first time in (t[i], t[i+1]] where the sign predicate differs from its value at t[i]
    auto refine = [&](std::size_t i) {
        const bool left = is_negative(out.sigma[i]);
        double a = t[i], b = t[i + 1];
        while (b - a > time_tol) {
            const double m = 0.5 * (a + b);
            const bool neg = is_negative(sigma_extended(P(m - t[i], traj.states[i]), gen, r_ref));
            (neg == left ? a : b) = m;
        }
        return 0.5 * (a + b);
    };
    std::size_t i = 0;
    while (i < n) {
        if (!is_negative(out.sigma[i])) {
            ++i;
            continue;
        }
        const double ta = i == 0 ? t[0] : refine(i - 1);
        std::size_t j = i;
        while (j + 1 < n && is_negative(out.sigma[j + 1])) ++j;
        const double tb = j + 1 < n ? refine(j) : t[j];
        out.violations.push_back({ta, tb});
        i = j + 1;
    }
    return out;
}

double heat_rate(const BlochState& r, const BlochGenerator& gen, const PhysParams& p) {
    return -p.omega_eff() * gen.apply(r)(2);
}

double external_entropy_rate(const BlochState& r, const BlochGenerator& gen, const PhysParams& p) {
    return p.beta * heat_rate(r, gen, p);
}

double entropy_flow(const BlochState& r, const BlochGenerator& gen, const BlochState& r_ref) {
    require_interior_reference(r_ref);
    return log_ratio_over_x(r_ref.norm()) * gen.apply(r).dot(r_ref.vec());
}

BlochState gibbs_state_eff(const PhysParams& p) { return {0.0, 0.0, -std::tanh(0.5 * p.beta * p.omega_eff())}; }

BlochState gibbs_state_from_block(const Eigen::Matrix4d& B, double beta) {
    // H = h.sigma/2 with B(i,j) = eps_ijk h_k / 2
    const double h1 = B(2, 3) - B(3, 2);
    const double h2 = B(3, 1) - B(1, 3);
    const double h3 = B(1, 2) - B(2, 1);
    const Eigen::Matrix2cd H = 0.5 * (h1 * pauli(1) + h2 * pauli(2) + h3 * pauli(3));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(H);
    const Eigen::Vector2d e = es.eigenvalues();
    // shift by the ground energy before exponentiating
    const Eigen::Vector2d w = (-beta * (e.array() - e(0))).exp();
    const Eigen::Matrix2cd rho = es.eigenvectors() * (w / w.sum()).cast<std::complex<double>>().asDiagonal()
                                 * es.eigenvectors().adjoint();
    return density_to_bloch(rho, 1e-10);
}

BlochState gibbs_state_ls(const PhysParams& p, const DissCoefficients& c) {
    Eigen::Matrix4d N = pre_average_matrix(c);
    const Eigen::Matrix4d A = 0.5 * (N - N.transpose());
    Eigen::Matrix4d B = effective_hamiltonian_block(p.omega_eff()) + p.lambda * p.lambda * A;
    B.row(0).setZero();
    B.col(0).setZero();
    return gibbs_state_from_block(B, p.beta);
}

std::vector<BlochState> sample_pure_states(std::size_t n, std::uint64_t seed) {
    std::vector<BlochState> out(n);
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, chunks), [&](const tbb::blocked_range<std::size_t>& rg) {
        for (std::size_t c = rg.begin(); c != rg.end(); ++c) {
            std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                             static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
            std::mt19937_64 eng(ss);
            std::normal_distribution<double> nd;
            const std::size_t end = std::min(n, (c + 1) * kChunk);
            for (std::size_t k = c * kChunk; k < end; ++k) {
                Eigen::Vector3d v;
                double norm = 0.0;
                do {
                    v = {nd(eng), nd(eng), nd(eng)};
                    norm = v.norm();
                } while (norm < 1e-12);
                out[k] = BlochState::from(v / norm);
            }
        }
    });
    return out;
}

ViolationReport scan_pure_state_violations(const BlochGenerator& gen, const BlochState& r_ref, std::size_t n,
                                           const ScanOptions& opt) {
    if (n == 0) throw DomainError("scan_pure_state_violations: sample count must be > 0");
    if (opt.t_max > 0.0) require_interior_reference(r_ref);
    const std::vector<BlochState> states = sample_pure_states(n, opt.seed);
    std::vector<ViolationRecord> recs(n);
    const std::vector<double> grid = opt.t_max > 0.0 ? linear_grid(0.0, opt.t_max, opt.points) : std::vector<double>{};
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n, kChunk), [&](const tbb::blocked_range<std::size_t>& rg) {
        for (std::size_t k = rg.begin(); k != rg.end(); ++k) {
            ViolationRecord& rec = recs[k];
            rec.r0 = states[k];
            rec.radial_rate = radial_rate(states[k], gen);
            rec.violating = rec.radial_rate > 0.0;
            if (!grid.empty()) {
                const Trajectory tr = evolve(states[k], gen, grid);
                rec.intervals = entropy_production_series(tr, gen, r_ref).violations;
            }
        }
    });
    ViolationReport rep;
    rep.sample_count = n;
    rep.seed = opt.seed;
    std::size_t count = 0;
    for (const auto& r : recs) count += r.violating ? 1 : 0;
    const double f = static_cast<double>(count) / static_cast<double>(n);
    rep.fraction_violating_t0 = f;
    rep.standard_error = std::sqrt(f * (1.0 - f) / static_cast<double>(n));
    if (opt.keep_records) rep.records = std::move(recs);
    return rep;
}

std::vector<SurfacePoint> sigma_surface(const BlochGenerator& gen, const BlochState& r_ref, double r3_fixed,
                                        const SurfaceGrid& g) {
    if (g.n < 1 || !(g.max >= g.min)) throw DomainError("sigma_surface: invalid grid");
    require_interior_reference(r_ref);
    const std::size_t n = static_cast<std::size_t>(g.n);
    std::vector<SurfacePoint> out(n * n);
    auto coord = [&](std::size_t i) { return n == 1 ? g.min : g.min + (g.max - g.min) * static_cast<double>(i) / (n - 1); };
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n * n), [&](const tbb::blocked_range<std::size_t>& rg) {
        for (std::size_t k = rg.begin(); k != rg.end(); ++k) {
            SurfacePoint& sp = out[k];
            sp.r1 = coord(k / n);
            sp.r2 = coord(k % n);
            const BlochState r{sp.r1, sp.r2, r3_fixed};
            sp.skipped = !(r.norm() < 1.0);
            sp.sigma = sp.skipped ? kNaN : entropy_production(r, gen, r_ref);
            sp.negative = !sp.skipped && sp.sigma < 0.0;
        }
    });
    return out;
}

} // namespace tlc
