// generators.cpp - Bloch generator assembly and positivity diagnostics

#include "tlc/generators.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

namespace tlc {

namespace {

using cd = std::complex<double>;
constexpr cd I{0.0, 1.0};

Eigen::Vector4d with_one(const BlochState& r) { return {1.0, r.r1, r.r2, r.r3}; }

// symmetric part plus first column, and antisymmetric part, of a spatial block
void split_blocks(const Eigen::Matrix4d& M, Eigen::Matrix4d& diss, Eigen::Matrix4d& ham) {
    diss.setZero();
    ham.setZero();
    for (int i = 1; i < 4; ++i) {
        diss(i, 0) = M(i, 0);
        for (int j = 1; j < 4; ++j) {
            diss(i, j) = 0.5 * (M(i, j) + M(j, i));
            ham(i, j) = 0.5 * (M(i, j) - M(j, i));
        }
    }
}

void require(const DissCoefficients& c, Convention want, const char* who) {
    if (c.convention != want) throw DomainError(std::string(who) + ": coefficient convention mismatch");
}

} // namespace

Eigen::Vector3d BlochGenerator::apply(const BlochState& r) const {
    return (L * with_one(r)).tail<3>();
}

Eigen::Matrix2cd BlochGenerator::superop(const BlochState& r) const {
    const Eigen::Vector3d v = apply(r);
    return -(v(0) * pauli(1) + v(1) * pauli(2) + v(2) * pauli(3));
}

Eigen::Matrix4d effective_hamiltonian_block(double omega_eff) {
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    h(1, 2) = 0.5 * omega_eff;
    h(2, 1) = -0.5 * omega_eff;
    return h;
}

Eigen::Matrix4d pre_average_matrix(const DissCoefficients& c) {
    Eigen::Matrix4d N = Eigen::Matrix4d::Zero();
    N(1, 0) = c[K10];
    N(2, 0) = c[K20];
    N(3, 0) = c[K30];
    N(1, 1) = c[K11];
    N(2, 2) = c[K22];
    N(3, 3) = c[K33];
    N(1, 2) = N(2, 1) = c[K12];
    N(1, 3) = N(3, 1) = c[K13];
    N(2, 3) = N(3, 2) = c[K23];
    N(1, 2) += c[H12];
    N(2, 1) -= c[H12];
    N(1, 3) += c[H13];
    N(3, 1) -= c[H13];
    N(2, 3) += c[H23];
    N(3, 2) -= c[H23];
    return N;
}

BlochGenerator build_redfield_generator(const DissCoefficients& c, const PhysParams& p) {
    require(c, Convention::Redfield, "build_redfield_generator");
    const double l2 = p.lambda * p.lambda;
    BlochGenerator g;
    g.convention = Convention::Redfield;
    g.lambda = p.lambda;
    g.h_eff = effective_hamiltonian_block(p.omega_eff());
    split_blocks(l2 * pre_average_matrix(c), g.diss, g.h_ls);
    g.L = g.h_eff + g.h_ls + g.diss;
    return g;
}

BlochGenerator build_cp_generator(const DissCoefficients& c, const PhysParams& p) {
    require(c, Convention::CPAveraged, "build_cp_generator");
    const Eigen::Matrix4d N = pre_average_matrix(c);
    // average over the rotation generated by h_eff in the (1,2) plane
    Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
    A(1, 1) = A(2, 2) = 0.5 * (N(1, 1) + N(2, 2));
    A(1, 2) = 0.5 * (N(1, 2) - N(2, 1));
    A(2, 1) = -A(1, 2);
    A(3, 3) = N(3, 3);
    A(3, 0) = N(3, 0);
    const double l2 = p.lambda * p.lambda;
    BlochGenerator g;
    g.convention = Convention::CPAveraged;
    g.lambda = p.lambda;
    g.h_eff = effective_hamiltonian_block(p.omega_eff());
    split_blocks(l2 * A, g.diss, g.h_ls);
    g.L = g.h_eff + g.h_ls + g.diss;
    return g;
}

Eigen::Matrix4d rotation_average_numeric(const Eigen::Matrix4d& N, double omega_eff, double T) {
    using GL = boost::math::quadrature::gauss<double, 10>;
    const double quarter = 0.5 * std::numbers::pi / omega_eff;
    auto rot = [&](double s) {
        Eigen::Matrix4d R = Eigen::Matrix4d::Identity();
        const double c = std::cos(omega_eff * s), sn = std::sin(omega_eff * s);
        R(1, 1) = c;
        R(1, 2) = -sn;
        R(2, 1) = sn;
        R(2, 2) = c;
        return R;
    };
    Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
    const auto& x = GL::abscissa();
    const auto& w = GL::weights();
    for (double a = -T; a < T; a += quarter) {
        const double b = std::min(a + quarter, T);
        const double h = 0.5 * (b - a), m = 0.5 * (b + a);
        for (std::size_t k = 0; k < x.size(); ++k) {
            for (double sg : {-1.0, 1.0}) {
                if (x[k] == 0.0 && sg < 0.0) continue;
                const Eigen::Matrix4d R = rot(m + sg * h * x[k]);
                acc += h * w[k] * (R.transpose() * N * R);
            }
        }
    }
    return acc / (2.0 * T);
}

Eigen::Matrix3cd kossakowski_from_dissipator(const Eigen::Matrix4d& D) {
    Eigen::Matrix3cd K;
    K(0, 0) = 0.5 * (D(2, 2) + D(3, 3) - D(1, 1));
    K(1, 1) = 0.5 * (D(1, 1) + D(3, 3) - D(2, 2));
    K(2, 2) = 0.5 * (D(1, 1) + D(2, 2) - D(3, 3));
    K(0, 1) = cd(-D(1, 2), -0.5 * D(3, 0));
    K(0, 2) = cd(-D(1, 3), 0.5 * D(2, 0));
    K(1, 2) = cd(-D(2, 3), -0.5 * D(1, 0));
    K(1, 0) = std::conj(K(0, 1));
    K(2, 0) = std::conj(K(0, 2));
    K(2, 1) = std::conj(K(1, 2));
    return K;
}

namespace {

KossakowskiSpectrum spectrum_of(const Eigen::MatrixXcd& K) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(K);
    KossakowskiSpectrum out;
    out.K = K;
    const auto& ev = es.eigenvalues();
    double mx = 0.0;
    for (int i = 0; i < ev.size(); ++i) {
        out.eigenvalues.push_back(ev(i));
        mx = std::max(mx, std::abs(ev(i)));
    }
    out.is_psd = out.eigenvalues.front() >= -1e-10 * mx;
    return out;
}

} // namespace

KossakowskiSpectrum redfield_kossakowski() {
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(4, 4);
    K(0, 1) = K(1, 0) = 1.0;
    K(2, 3) = K(3, 2) = 1.0;
    return spectrum_of(K);
}

KossakowskiSpectrum cp_kossakowski(const BlochGenerator& gen) {
    if (gen.convention != Convention::CPAveraged) throw DomainError("cp_kossakowski: not a CP-averaged generator");
    const double l2 = gen.lambda * gen.lambda;
    if (l2 == 0.0) return spectrum_of(Eigen::MatrixXcd::Zero(3, 3));
    const Eigen::Matrix4d D = gen.diss / l2;
    const Eigen::Matrix4d H = gen.h_ls / l2;
    const double scale = D.cwiseAbs().maxCoeff() + H.cwiseAbs().maxCoeff();
    const double tol = 1e-12 * std::max(scale, 1.0);
    const double stray = std::max({std::abs(D(1, 0)), std::abs(D(2, 0)), std::abs(D(1, 2)), std::abs(D(1, 3)),
                                   std::abs(D(2, 3)), std::abs(H(1, 3)), std::abs(H(2, 3)),
                                   std::abs(D(1, 1) - D(2, 2))});
    if (stray > tol) throw NumericalError("cp_kossakowski: generator outside the averaged sparsity pattern");
    return spectrum_of(kossakowski_from_dissipator(D));
}

WPair compute_W(double tau, const PhysParams& p) {
    const double w = p.omega_eff(), om = p.omega_drive, D = p.delta;
    const double C = std::cos(om * tau), S = std::sin(om * tau);
    const double c = std::cos(w * tau), s = std::sin(w * tau);
    const double w2 = w * w;
    WPair out;
    const double a1 = om * (C * s - c * S * om / w) / w - S * D * D / w2;
    const double re1 = c * C + s * S * om / w;
    const double im1 = S * D * om / w2 + D * (C * s - c * S * om / w) / w;
    out.W1 << a1, cd(re1, -im1), cd(re1, im1), -a1;
    const double a3 = C * D * D / w2 + om * (s * S + c * C * om / w) / w;
    const double re3 = c * S - C * s * om / w;
    const double im3 = D * (s * S + c * C * om / w) / w - C * D * om / w2;
    out.W3 << a3, cd(re3, -im3), cd(re3, im3), -a3;
    return out;
}

namespace {

struct MonoTerm {
    double weight;
    FW fw;
    FO fo;
};

// W entries as trigonometric polynomials: real and imaginary parts
struct EntryPoly {
    std::vector<MonoTerm> re, im;
};

std::array<EntryPoly, 4> w_polys(int xi, const PhysParams& p) {
    const double w = p.omega_eff();
    const double d = p.delta / w, r = p.omega_drive / w;
    std::array<EntryPoly, 4> e;  // (0,0), (0,1), (1,0), (1,1)
    if (xi == 1) {
        e[0].re = {{r, FW::Sw, FO::CO}, {-r * r, FW::Cw, FO::SO}, {-d * d, FW::One, FO::SO}};
        e[1].re = {{1.0, FW::Cw, FO::CO}, {r, FW::Sw, FO::SO}};
        e[1].im = {{-d * r, FW::One, FO::SO}, {-d, FW::Sw, FO::CO}, {d * r, FW::Cw, FO::SO}};
    } else {
        e[0].re = {{d * d, FW::One, FO::CO}, {r, FW::Sw, FO::SO}, {r * r, FW::Cw, FO::CO}};
        e[1].re = {{1.0, FW::Cw, FO::SO}, {-r, FW::Sw, FO::CO}};
        e[1].im = {{-d, FW::Sw, FO::SO}, {-d * r, FW::Cw, FO::CO}, {d * r, FW::One, FO::CO}};
    }
    e[2].re = e[1].re;
    for (auto t : e[1].im) e[2].im.push_back({-t.weight, t.fw, t.fo});
    for (auto t : e[0].re) e[3].re.push_back({-t.weight, t.fw, t.fo});
    return e;
}

std::vector<TrigTerm> with_kernel(const std::vector<MonoTerm>& m, Kernel k, double sign = 1.0) {
    std::vector<TrigTerm> out;
    for (const auto& t : m) out.push_back({sign * t.weight, k, t.fw, t.fo});
    return out;
}

} // namespace

ShortTimeOperators compute_V(const PhysParams& p, const QuadratureConfig& qc) {
    const BathTransforms bt(p, qc);
    ShortTimeOperators out;
    for (int xi : {1, 3}) {
        const auto polys = w_polys(xi, p);
        Eigen::Matrix2cd V;
        Eigen::Matrix2d E;
        for (int k = 0; k < 4; ++k) {
            // (Gc - i Gs)(Re W + i Im W)
            auto re = with_kernel(polys[k].re, Kernel::C);
            auto re2 = with_kernel(polys[k].im, Kernel::S);
            re.insert(re.end(), re2.begin(), re2.end());
            auto im = with_kernel(polys[k].im, Kernel::C);
            auto im2 = with_kernel(polys[k].re, Kernel::S, -1.0);
            im.insert(im.end(), im2.begin(), im2.end());
            const auto vr = integrate_terms(re, p, bt);
            const auto vi = integrate_terms(im, p, bt);
            V(k / 2, k % 2) = cd(vr.value, vi.value);
            E(k / 2, k % 2) = vr.error + vi.error;
        }
        if (xi == 1) {
            out.V1 = V;
            out.err1 = E;
        } else {
            out.V3 = V;
            out.err3 = E;
        }
    }
    out.error = std::max(out.err1.maxCoeff(), out.err3.maxCoeff());
    for (const auto* M : {&out.V1, &out.V3})
        if (!M->allFinite()) throw NumericalError("compute_V: non-finite entry");
    return out;
}

BlochGenerator generator_from_short_time(const ShortTimeOperators& v, const PhysParams& p) {
    const Eigen::Matrix2cd s1 = pauli(1), s3 = pauli(3);
    const Eigen::Matrix2cd H = 0.5 * (p.delta * s3 - p.omega_drive * pauli(2));
    const double l2 = p.lambda * p.lambda;
    auto Lrho = [&](const Eigen::Matrix2cd& rho) {
        Eigen::Matrix2cd out = -I * (H * rho - rho * H);
        for (const auto& [sx, V] : {std::pair{s1, v.V1}, std::pair{s3, v.V3}}) {
            const Eigen::Matrix2cd Vr = V * rho;
            const Eigen::Matrix2cd rV = rho * V.adjoint();
            out -= l2 * ((sx * Vr - Vr * sx) + (rV * sx - sx * rV));
        }
        return out;
    };
    const RotatedPaulis rp(p);
    const Eigen::Matrix2cd basis[4] = {pauli(0), rp.s[0], rp.s[1], rp.s[2]};
    Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
    for (int mu = 0; mu < 4; ++mu) {
        const Eigen::Matrix2cd out = Lrho(basis[mu]);
        for (int j = 1; j < 4; ++j) M(j, mu) = -0.25 * std::real((basis[j] * out).trace());
    }
    BlochGenerator g;
    g.convention = Convention::Redfield;
    g.lambda = p.lambda;
    g.h_eff = effective_hamiltonian_block(p.omega_eff());
    split_blocks(M - g.h_eff, g.diss, g.h_ls);
    g.L = g.h_eff + g.h_ls + g.diss;
    return g;
}

double delta_alpha(std::complex<double> a, const ShortTimeOperators& v) {
    const cd ac = std::conj(a);
    const auto& V1 = v.V1;
    const auto& V3 = v.V3;
    const cd t1 = (ac * ac - 1.0) * (a * (V1(0, 0) - V1(1, 1)) + a * a * V1(0, 1) - V1(1, 0));
    const cd t3 = 2.0 * ac * (a * (V3(0, 0) - V3(1, 1)) + a * a * V3(0, 1) - V3(1, 0));
    return std::real(t1 + t3);
}

PositivityMap positivity_map(const GridSpec& g, const ShortTimeOperators& v) {
    PositivityMap out;
    if (g.n_re <= 0 || g.n_im <= 0) return out;
    auto axis = [](double lo, double hi, int n, int i) { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); };
    std::size_t neg = 0;
    out.points.reserve(static_cast<std::size_t>(g.n_re) * g.n_im);
    for (int j = 0; j < g.n_im; ++j) {
        for (int i = 0; i < g.n_re; ++i) {
            const cd a(axis(g.re_min, g.re_max, g.n_re, i), axis(g.im_min, g.im_max, g.n_im, j));
            const double d = delta_alpha(a, v);
            out.points.push_back({a, d, d < 0.0});
            neg += d < 0.0;
        }
    }
    out.negative_fraction = static_cast<double>(neg) / out.points.size();
    return out;
}

BlochState alpha_state(std::complex<double> a, const PhysParams& p) {
    const double n = 1.0 + std::norm(a);
    const Eigen::Vector3d o(2.0 * a.real() / n, 2.0 * a.imag() / n, (1.0 - std::norm(a)) / n);
    return rotated_from_original(o, p);
}

} // namespace tlc
