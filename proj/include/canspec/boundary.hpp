#pragma once

// Boundary triples of canonical systems and everything read off from them.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "canspec/cansys.hpp"
#include "canspec/jmoebius.hpp"
#include "canspec/quadrature.hpp"

namespace canspec {

enum class TripleKind { full_regular, neumann_left, limit_point };

inline const char* to_string(TripleKind k) {
    switch (k) {
        case TripleKind::full_regular: return "full";
        case TripleKind::neumann_left: return "neumann";
        case TripleKind::limit_point: return "limit-point";
    }
    return "?";
}

inline void check_kind(const CanonicalSystem& sys, TripleKind kind) {
    if (kind == TripleKind::limit_point) {
        if (!sys.half_line()) throw Error("limit-point triple needs a half-line system");
        if (sys.p != 1) throw UnsupportedDimension("limit-point triple is implemented for p = 1");
    } else if (sys.half_line()) {
        throw NotRegular(std::string(to_string(kind)) + " triple needs a regular right endpoint");
    }
}

/// Dimension of the boundary space.
inline int boundary_dim(const CanonicalSystem& sys, TripleKind kind) {
    return kind == TripleKind::full_regular ? 2 * sys.p : sys.p;
}

namespace detail {

/// sum over segments of ||A_j|| length_j, the log-growth bound of U(b, z).
inline double growth_exponent(const CanonicalSystem& sys, cplx z) {
    double e = 0.0;
    for (const auto& s : sys.segments) e += spectral_norm(segment_generator(s, z)) * s.length;
    return e;
}

inline constexpr double kDirectExponent = 30.0;

/// Orthonormal basis of span P(b) G0 where P' = gen(segment) P, renormalized per substep.
template <class Gen>
CMat propagate_span(const CanonicalSystem& sys, const CMat& G0, Gen gen, double max_exponent = 8.0) {
    CMat G = orthonormal_basis(G0);
    for (const auto& s : sys.segments) {
        const CMat A = gen(s);
        const int steps = std::max(1, static_cast<int>(std::ceil(spectral_norm(A) * s.length / max_exponent)));
        const CMat E = (s.length / steps * A).exp();
        for (int k = 0; k < steps; ++k) {
            G = E * G;
            Eigen::HouseholderQR<CMat> qr(G);
            G = qr.householderQ() * CMat::Identity(G.rows(), G.cols());
        }
    }
    return G;
}

}  // namespace detail

namespace detail {

/// SpectralPoint unless X is invertible relative to the scale of the frame it was cut from.
inline void require_regular(const CMat& X, double scale, const char* what) {
    const double smin = singular_values(X).minCoeff();
    if (!(smin > scale / kCondLimit)) throw SpectralPoint(std::string(what) + " is numerically singular", scale / smin);
}

/// Decaying solution of one tail period: P v = mu v with |mu| < 1.
struct DecayingTail {
    cplx mu;
    CVec v;
    CMat generator;
};

inline DecayingTail decaying_tail(const CanonicalSystem& sys, cplx z) {
    const Segment& tail = *sys.tail;
    const CMat A = segment_generator(tail, z);
    const CMat P = (tail.length * A).exp();
    Eigen::ComplexEigenSolver<CMat> es(P);
    const auto& mu = es.eigenvalues();
    int k = std::abs(mu(0)) <= std::abs(mu(1)) ? 0 : 1;
    if (indivisible_type(tail.H)) {
        // rank-one tail: the square-integrable direction is annihilated by H
        const CMat H = tail.H.cast<cplx>();
        k = (H * es.eigenvectors().col(0)).norm() <= (H * es.eigenvectors().col(1)).norm() ? 0 : 1;
    } else if (!(std::abs(mu(k)) < 1.0 - 1e-13)) {
        throw SpectralPoint("tail has no decaying solution", 1.0 / std::max(1e-300, 1.0 - std::abs(mu(k))));
    }
    return {mu(k), es.eigenvectors().col(k), A};
}

/// m(z) for a periodic tail: the square-integrable solution continues the decaying Floquet solution.
inline cplx floquet_m(const CanonicalSystem& sys, cplx z) {
    if (z.imag() == 0.0) throw NotInHalfPlane("m(z) needs a non-real z");
    const DecayingTail d = decaying_tail(sys, z);
    const CVec w = FundamentalSolution(sys, z).at_mesh_end().partialPivLu().solve(d.v);
    if (!(std::abs(w(1)) > 1e-14 * w.norm())) throw SpectralPoint("square-integrable solution at a is (1, 0)", 1e16);
    return -w(0) / w(1);
}

}  // namespace detail

struct WeylDisk {
    cplx z;
    cplx center;
    double radius = 0.0;
    double truncation = 0.0;
};

struct LimitPointM {
    cplx m;
    WeylDisk disk;
    std::vector<WeylDisk> history;  // one disk per tail repetition count
};

/// m(z) as the limit of the Weyl disks {(s1 + h s2)/(c1 + h c2) : h real} over truncations.
inline LimitPointM limit_point_m(const CanonicalSystem& sys, cplx z, double tol = 1e-12, int max_repetitions = 64) {
    check_kind(sys, TripleKind::limit_point);
    if (z.imag() == 0.0) throw NotInHalfPlane("m(z) needs a non-real z");
    if (z.imag() < 0.0) {
        LimitPointM r = limit_point_m(sys, std::conj(z), tol, max_repetitions);
        r.m = std::conj(r.m);
        r.disk.z = z;
        r.disk.center = std::conj(r.disk.center);
        for (auto& d : r.history) {
            d.z = z;
            d.center = std::conj(d.center);
        }
        return r;
    }
    // U up to a positive scalar; the disk only depends on the ratio of entries and det U = 1
    CMat U = FundamentalSolution(sys, z).at_mesh_end();
    double log_kappa = 0.0;
    auto rescale = [&] {
        const double s = U.cwiseAbs().maxCoeff();
        U /= s;
        log_kappa += std::log(s);
    };
    rescale();
    const CMat step = segment_propagator(*sys.tail, z, sys.tail->length);
    LimitPointM out;
    double T = sys.mesh_end();
    for (int rep = 0; rep <= max_repetitions; ++rep) {
        if (rep > 0) {
            U = step * U;
            T += sys.tail->length;
            rescale();
        }
        const cplx c1 = U(0, 0), c2 = U(1, 0), s1 = U(0, 1), s2 = U(1, 1);
        const cplx den = c1 * std::conj(c2) - c2 * std::conj(c1);
        WeylDisk d{z, (s1 * std::conj(c2) - s2 * std::conj(c1)) / den, 0.0, T};
        // |det U| of the rescaled matrix equals exp(-2 log kappa)
        d.radius = std::exp(-2.0 * log_kappa) / std::abs(den);
        if (!std::isfinite(d.radius)) d.radius = std::abs(U.determinant()) / std::abs(den);
        out.history.push_back(d);
        if (d.radius <= tol * std::max(1.0, std::abs(d.center))) {
            out.m = d.center;
            out.disk = d;
            return out;
        }
    }
    throw NoShrinkage("Weyl disk radius stalls above tolerance", out.history.back().radius);
}

/// Weyl function of the chosen triple (1 x 1 for the limit-point triple).
inline CMat weyl_function(const CanonicalSystem& sys, TripleKind kind, cplx z) {
    check_kind(sys, kind);
    const int p = sys.p;
    if (kind == TripleKind::limit_point) return CMat::Constant(1, 1, detail::floquet_m(sys, z));
    const bool direct = detail::growth_exponent(sys, z) <= detail::kDirectExponent;
    if (kind == TripleKind::full_regular) {
        const int n = 2 * p;
        const CMat J = symplectic_j(p);
        CMat top, bottom;  // (I - U) and (I + U) up to a common right factor
        if (direct) {
            const CMat U = monodromy(sys, z);
            top = CMat::Identity(n, n) - U;
            bottom = CMat::Identity(n, n) + U;
        } else {
            CMat G0(2 * n, n);
            G0 << CMat::Identity(n, n), CMat::Identity(n, n);
            const CMat G = detail::propagate_span(sys, G0, [&](const Segment& s) {
                CMat A = CMat::Zero(2 * n, 2 * n);
                A.bottomRightCorner(n, n) = segment_generator(s, z);
                return A;
            });
            top = G.topRows(n) - G.bottomRows(n);
            bottom = G.topRows(n) + G.bottomRows(n);
        }
        detail::require_regular(bottom, std::max(spectral_norm(top), spectral_norm(bottom)), "I + U(z)");
        return -J * guarded_right_solve<SpectralPoint>(top, bottom, "I + U(z)", 1e300);
    }
    CMat c;
    if (direct) {
        c = monodromy(sys, z).leftCols(p);
    } else {
        CMat G0 = CMat::Zero(2 * p, p);
        G0.topRows(p) = CMat::Identity(p, p);
        c = detail::propagate_span(sys, G0, [&](const Segment& s) { return segment_generator(s, z); });
    }
    detail::require_regular(c.bottomRows(p), spectral_norm(c), "c2(b, z)");
    return guarded_right_solve<SpectralPoint>(c.topRows(p), c.bottomRows(p), "c2(b, z)", 1e300);
}

/// t -> gamma(z)(t), a 2p x dim matrix function.
struct GammaField {
    TripleKind kind;
    cplx z;
    std::function<CMat(double)> eval;
    double support_end;  // b, or a truncation point beyond which the field is negligible

    CMat operator()(double t) const { return eval(t); }
};


inline GammaField gamma_field(const CanonicalSystem& sys, TripleKind kind, cplx z) {
    check_kind(sys, kind);
    const int p = sys.p;
    auto U = std::make_shared<FundamentalSolution>(sys, z);
    if (kind == TripleKind::full_regular) {
        const int n = 2 * p;
        const CMat IU = CMat::Identity(n, n) + U->at_mesh_end();
        detail::require_regular(IU, 1.0 + spectral_norm(U->at_mesh_end()), "I + U(z)");
        const CMat inv = IU.partialPivLu().inverse();
        return {kind, z, [U, inv](double t) { return CMat(std::sqrt(2.0) * (*U)(t) * inv); }, sys.mesh_end()};
    }
    if (kind == TripleKind::neumann_left) {
        const CMat c2 = U->at_mesh_end().bottomLeftCorner(p, p);
        detail::require_regular(c2, spectral_norm(U->at_mesh_end().leftCols(p)), "c2(b, z)");
        const CMat inv = c2.partialPivLu().inverse();
        return {kind, z, [U, inv, p](double t) { return CMat((*U)(t).leftCols(p) * inv); }, sys.mesh_end()};
    }
    const cplx m = detail::floquet_m(sys, z);
    CVec ya(2);
    ya << -m, 1.0;
    // beyond the mesh the field is alpha mu^k exp(s A) v on the k-th tail period
    const detail::DecayingTail d = detail::decaying_tail(sys, z);
    const double T0 = sys.mesh_end(), L = sys.tail->length;
    const CVec ye = U->at_mesh_end() * ya;
    const cplx alpha = d.v.dot(ye) / d.v.squaredNorm();
    const double amu = std::abs(d.mu);
    const double periods = amu < 1.0 ? std::ceil(std::log(1e-9) / std::log(amu)) : 1e6;
    const CMat A = d.generator;
    const CVec v = d.v;
    const cplx mu = d.mu;
    return {kind, z,
            [U, ya, T0, L, alpha, A, v, mu](double t) {
                if (t <= T0) return CMat((*U)(t) * ya);
                const double k = std::floor((t - T0) / L);
                const double s = t - T0 - k * L;
                return CMat(alpha * std::pow(mu, k) * ((s * A).exp() * v));
            },
            T0 + (periods + 1) * L};
}

/// Boundary values (Gamma0, Gamma1) of a function with the given endpoint values.
inline std::pair<CVec, CVec> boundary_values(const CanonicalSystem& sys, TripleKind kind, const CVec& fa,
                                             const CVec& fb) {
    const int p = sys.p;
    if (kind == TripleKind::full_regular) {
        const CMat J = symplectic_j(p);
        return {(fa + fb) / std::sqrt(2.0), -J * (fa - fb) / std::sqrt(2.0)};
    }
    if (kind == TripleKind::neumann_left) return {fb.tail(p), fb.head(p)};
    return {fa.tail(p), -fa.head(p)};
}

namespace detail {

/// Phi(x) = int_lo^x U#(s, z) H f ds.
inline CVec sharp_integral(const CanonicalSystem& sys, cplx z, const VectorFunction& f, double lo, double x,
                           double lambda_bound) {
    const int n = 2 * sys.p;
    CVec acc = CVec::Zero(n);
    if (x <= lo) return acc;
    const Mesh mesh = build_mesh(sys, lo, x, lambda_bound);
    const auto Ub = fundamental_on_mesh(sys, std::conj(z), mesh);
    for (std::size_t i = 0; i < mesh.size(); ++i)
        acc += mesh.w[i] * (Ub[i].adjoint() * (mesh.parts[mesh.part[i]].seg.H.cast<cplx>() * f(mesh.t[i])));
    return acc;
}

inline double bound_for(cplx z) { return std::max(1.0, std::abs(z)); }

}  // namespace detail

/// (A0 - z)^{-1} f with A0 = ker Gamma0, from the integral kernels of the triple.
inline VectorFunction canonical_resolvent(const CanonicalSystem& sys, TripleKind kind, cplx z, const VectorFunction& f) {
    check_kind(sys, kind);
    const int p = sys.p;
    const int n = 2 * p;
    const CMat J = symplectic_j(p);
    auto U = std::make_shared<FundamentalSolution>(sys, z);
    const double lb = detail::bound_for(z);
    const double a = sys.a;
    const double b = kind == TripleKind::limit_point ? std::max(f.hi, sys.mesh_end()) : sys.mesh_end();
    const CVec total = detail::sharp_integral(sys, z, f, a, b, lb);
    CMat left;  // g(x) = U(x) (left * total - J Phi(x))
    if (kind == TripleKind::full_regular) {
        const CMat M = weyl_function(sys, kind, z);
        left = 0.5 * (J - J * M * J);
    } else if (kind == TripleKind::neumann_left) {
        const CMat Ub = U->at_mesh_end();
        const CMat c2 = Ub.bottomLeftCorner(p, p), s2 = Ub.bottomRightCorner(p, p);
        CMat D = CMat::Zero(n, n);
        D.topLeftCorner(p, p) = -CMat::Identity(p, p);
        D.topRightCorner(p, p) = -2.0 * guarded_solve<SpectralPoint>(c2, s2, "c2(b, z)");
        D.bottomRightCorner(p, p) = CMat::Identity(p, p);
        left = 0.5 * (CMat::Identity(n, n) - D) * J;
    } else {
        // v = (w1 + m w2, 0) with w = J Phi(infinity): the solution leaves along y = s - m c
        const cplx m = detail::floquet_m(sys, z);
        left = CMat::Zero(2, 2);
        left(0, 0) = 1.0;
        left(0, 1) = m;
        left = left * J;
    }
    const CVec v = left * total;
    const auto fcopy = f;
    return {[=](double x) {
                const CVec phi = detail::sharp_integral(sys, z, fcopy, a, std::min(x, b), lb);
                return CVec((*U)(x) * (v - J * phi));
            },
            sys.a, b};
}

/// Direct solution of J g' + F g - z H g = H f with C Gamma0 g + D Gamma1 g = 0.
inline VectorFunction solve_boundary_problem(const CanonicalSystem& sys, TripleKind kind, const MatrixPair& pair,
                                             cplx z, const VectorFunction& f) {
    check_kind(sys, kind);
    if (kind == TripleKind::limit_point) throw UnsupportedDimension("direct solve needs a regular endpoint");
    const int p = sys.p;
    const int n = 2 * p;
    const CMat J = symplectic_j(p);
    auto U = std::make_shared<FundamentalSolution>(sys, z);
    const CMat Ub = U->at_mesh_end();
    const double lb = detail::bound_for(z);
    const CVec total = detail::sharp_integral(sys, z, f, sys.a, sys.mesh_end(), lb);
    // g(a) = v, g(b) = U(b)(v - J total)
    CMat lhs, rhs_map;
    if (kind == TripleKind::full_regular) {
        const CMat Ca = (pair.C - pair.D * J) / std::sqrt(2.0);
        const CMat Cb = (pair.C + pair.D * J) / std::sqrt(2.0);
        lhs = Ca + Cb * Ub;
        rhs_map = Cb * Ub * J;
    } else {
        // u2(a) = 0 and C u2(b) + D u1(b) = 0
        CMat Bb(p, n);
        Bb << pair.D, pair.C;
        lhs = CMat::Zero(n, n);
        lhs.topRightCorner(p, p) = CMat::Identity(p, p);
        lhs.bottomRows(p) = Bb * Ub;
        rhs_map = CMat::Zero(n, n);
        rhs_map.bottomRows(p) = Bb * Ub * J;
    }
    const CVec v = guarded_solve<SpectralPoint>(lhs, rhs_map * total, "boundary problem");
    const auto fcopy = f;
    const double a = sys.a, b = sys.mesh_end();
    return {[=](double x) {
                const CVec phi = detail::sharp_integral(sys, z, fcopy, a, std::min(x, b), lb);
                return CVec((*U)(x) * (v - J * phi));
            },
            a, b};
}

/// R0 f - gamma(z) (C + D M)^{-1} D gamma(conj z)* f.
inline VectorFunction krein_resolvent(const CanonicalSystem& sys, TripleKind kind, const MatrixPair& pair, cplx z,
                                      const VectorFunction& f) {
    const VectorFunction r0 = canonical_resolvent(sys, kind, z, f);
    const GammaField gz = gamma_field(sys, kind, z);
    const GammaField gzb = gamma_field(sys, kind, std::conj(z));
    const double hi = kind == TripleKind::limit_point ? std::max(f.hi, sys.mesh_end()) : sys.mesh_end();
    const Mesh mesh = build_mesh(sys, sys.a, hi, detail::bound_for(z));
    CVec gstar = CVec::Zero(boundary_dim(sys, kind));
    for (std::size_t i = 0; i < mesh.size(); ++i)
        gstar += mesh.w[i] * (gzb(mesh.t[i]).adjoint() * (mesh.parts[mesh.part[i]].seg.H.cast<cplx>() * f(mesh.t[i])));
    const CMat M = weyl_function(sys, kind, z);
    const CVec h = guarded_solve<SpectralPoint>(pair.C + pair.D * M, pair.D * gstar, "C + D M(z)");
    return {[=](double x) { return CVec(r0(x) - gz(x) * h); }, r0.lo, r0.hi};
}

/// Preresolvent matrix [[M, 2(I + U#)^{-1}], [2(I + U)^{-1}, J(-M + Re M(i))J]].
inline CMat preresolvent_matrix(const CanonicalSystem& sys, cplx z) {
    check_kind(sys, TripleKind::full_regular);
    const int n = 2 * sys.p;
    const CMat J = symplectic_j(sys.p);
    const CMat I = CMat::Identity(n, n);
    const CMat U = monodromy(sys, z);
    const CMat Us = monodromy(sys, std::conj(z)).adjoint();
    const CMat M = weyl_function(sys, TripleKind::full_regular, z);
    const CMat ReMi = hermitian_part(weyl_function(sys, TripleKind::full_regular, cplx(0, 1)));
    CMat A(2 * n, 2 * n);
    A << M, 2.0 * guarded_solve<SpectralPoint>(I + Us, I, "I + U#(z)"),
        2.0 * guarded_solve<SpectralPoint>(I + U, I, "I + U(z)"), J * (-M + ReMi) * J;
    return A;
}

/// J Re M(i) J for the full triple.
inline CMat full_triple_K(const CanonicalSystem& sys) {
    const CMat J = symplectic_j(sys.p);
    return J * hermitian_part(weyl_function(sys, TripleKind::full_regular, cplx(0, 1))) * J;
}

/// Right (W) or left (W^l(z) = W(conj z)*) resolvent matrix of the triple.
inline ResolventMatrix resolvent_matrix(const CanonicalSystem& sys, TripleKind kind,
                                        ResolventKind side = ResolventKind::right) {
    check_kind(sys, kind);
    if (side == ResolventKind::preresolvent) throw std::invalid_argument("use preresolvent_matrix");
    const int p = sys.p;
    ResolventMatrix W;
    W.p = boundary_dim(sys, kind);
    if (kind == TripleKind::full_regular) {
        const int n = 2 * p;
        const CMat J = symplectic_j(p);
        const CMat K = full_triple_K(sys);
        const CMat I = CMat::Identity(n, n);
        W.kind = ResolventKind::left;
        W.eval = [sys, J, K, I, n](cplx z) {
            const CMat U = monodromy(sys, z);
            CMat Wl(2 * n, 2 * n);
            Wl << (U - I) * J + (U + I) * K, U + I, J * (U + I) * J + J * (U - I) * K, J * (U - I);
            return CMat(0.5 * Wl);
        };
        return side == ResolventKind::left ? W : W.dual();
    }
    if (kind == TripleKind::neumann_left) {
        W.kind = ResolventKind::left;
        W.eval = [sys, p](cplx z) {
            const CMat U = monodromy(sys, z);
            CMat Wl(2 * p, 2 * p);
            Wl << U.bottomRightCorner(p, p), U.bottomLeftCorner(p, p), U.topRightCorner(p, p), U.topLeftCorner(p, p);
            return Wl;
        };
        return side == ResolventKind::left ? W : W.dual();
    }
    W.kind = ResolventKind::right;
    W.eval = [sys](cplx z) {
        CMat Wr(2, 2);
        Wr << 0.0, -1.0, 1.0, weyl_function(sys, TripleKind::limit_point, z)(0, 0);
        return Wr;
    };
    return side == ResolventKind::right ? W : W.dual();
}

/// Kernel of the generalized Fourier transform at (x, lambda): F = int kernel(s)* H f.
inline CMat fourier_kernel_matrix(TripleKind kind, const CMat& U) {
    const auto n = U.rows();
    const auto p = n / 2;
    if (kind == TripleKind::full_regular) return U / std::sqrt(2.0);
    if (kind == TripleKind::neumann_left) return U.leftCols(p);
    return U.rightCols(p);
}

/// Cached transform of one function on a mesh resolving |lambda| <= lambda_max.
class FourierTransform {
public:
    FourierTransform(const CanonicalSystem& sys, TripleKind kind, const VectorFunction& f, double lambda_max)
        : sys_(sys), kind_(kind) {
        check_kind(sys, kind);
        const double hi = kind == TripleKind::limit_point ? f.hi : sys.mesh_end();
        if (kind == TripleKind::limit_point && !(std::isfinite(hi) && hi > sys.a))
            throw std::invalid_argument("limit-point transform needs compactly supported f");
        mesh_ = build_mesh(sys, sys.a, hi, std::max(1.0, lambda_max));
        for (std::size_t i = 0; i < mesh_.size(); ++i)
            hf_.push_back(mesh_.parts[mesh_.part[i]].seg.H.cast<cplx>() * f(mesh_.t[i]));
    }

    CVec operator()(double lambda) const {
        const auto U = fundamental_on_mesh(sys_, lambda, mesh_);
        CVec acc = CVec::Zero(boundary_dim(sys_, kind_));
        for (std::size_t i = 0; i < mesh_.size(); ++i)
            acc += mesh_.w[i] * (fourier_kernel_matrix(kind_, U[i]).adjoint() * hf_[i]);
        return acc;
    }

    const Mesh& mesh() const { return mesh_; }

private:
    CanonicalSystem sys_;
    TripleKind kind_;
    Mesh mesh_;
    std::vector<CVec> hf_;
};

inline CVec fourier_kernel(const CanonicalSystem& sys, TripleKind kind, double lambda, const VectorFunction& f) {
    return FourierTransform(sys, kind, f, std::abs(lambda))(lambda);
}

}  // namespace canspec
