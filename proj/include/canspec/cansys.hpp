#pragma once

// Canonical systems J f' + F f = z H f with piecewise constant coefficients.

#include <unsupported/Eigen/MatrixFunctions>

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "canspec/linalg.hpp"

namespace canspec {

struct Segment {
    double length = 1.0;
    RMat H;
    RMat F;
};

enum class RightEndpoint { regular, limit_point };

struct CanonicalSystem {
    int p = 1;
    double a = 0.0;
    std::vector<Segment> segments;
    std::optional<Segment> tail;  // repeated forever on a half-line
    RightEndpoint endpoint_right = RightEndpoint::regular;
    std::string name = "system";

    bool half_line() const { return endpoint_right == RightEndpoint::limit_point; }

    /// End of the explicit segments (b for a regular system).
    double mesh_end() const {
        double t = a;
        for (const auto& s : segments) t += s.length;
        return t;
    }

    double b() const { return half_line() ? std::numeric_limits<double>::infinity() : mesh_end(); }

    /// Segment active on [start, start + length) containing t; tail repetitions are expanded.
    Segment segment_at(double t, double* start = nullptr) const {
        double s0 = a;
        for (const auto& s : segments) {
            if (t < s0 + s.length) {
                if (start) *start = s0;
                return s;
            }
            s0 += s.length;
        }
        if (tail) {
            const double k = std::floor((t - s0) / tail->length);
            if (start) *start = s0 + k * tail->length;
            return *tail;
        }
        if (start) *start = s0 - segments.back().length;
        return segments.back();
    }

    /// Free system: H = I/2, F = 0.
    static CanonicalSystem free(int p, double length, RightEndpoint end = RightEndpoint::regular) {
        CanonicalSystem sys;
        sys.p = p;
        sys.name = "free";
        Segment seg{length, RMat::Identity(2 * p, 2 * p) / (2.0 * p), RMat::Zero(2 * p, 2 * p)};
        sys.segments.push_back(seg);
        sys.endpoint_right = end;
        if (end == RightEndpoint::limit_point) sys.tail = seg;
        return sys;
    }
};

inline RMat real_symplectic_j(int p) { return symplectic_j(p).real(); }

struct ValidationReport {
    std::vector<std::size_t> rank_one;  // p = 1 segments with rank-one H
    bool definiteness_checked = false;
};

namespace detail {

inline std::string segment_path(const CanonicalSystem& sys, std::size_t k, const char* field) {
    if (k == sys.segments.size()) return std::string("tail.") + field;
    return "segments[" + std::to_string(k) + "]." + field;
}

}  // namespace detail

/// Checks symmetry, PSD and trace normalization; for p = 1 also definiteness.
inline ValidationReport validate_system(const CanonicalSystem& sys) {
    ValidationReport rep;
    std::vector<std::size_t> bad;
    std::string msg;
    const int n = 2 * sys.p;
    std::vector<const Segment*> all;
    for (const auto& s : sys.segments) all.push_back(&s);
    if (sys.tail) all.push_back(&*sys.tail);
    if (sys.segments.empty()) throw InvalidCoefficients("segments: empty profile", {});
    if (sys.half_line() && !sys.tail) throw InvalidCoefficients("tail: required for a limit-point system", {});
    auto fail = [&](std::size_t k, const std::string& what) {
        if (bad.empty() || bad.back() != k) bad.push_back(k);
        if (!msg.empty()) msg += "; ";
        msg += what;
    };
    for (std::size_t k = 0; k < all.size(); ++k) {
        const Segment& s = *all[k];
        const auto hp = detail::segment_path(sys, k, "H");
        const auto fp = detail::segment_path(sys, k, "F");
        if (!(s.length > 0.0) || !std::isfinite(s.length)) fail(k, detail::segment_path(sys, k, "length") + ": must be positive");
        if (s.H.rows() != n || s.H.cols() != n) {
            fail(k, hp + ": expected " + std::to_string(n) + "x" + std::to_string(n));
            continue;
        }
        if (s.F.rows() != n || s.F.cols() != n) {
            fail(k, fp + ": expected " + std::to_string(n) + "x" + std::to_string(n));
            continue;
        }
        if ((s.H - s.H.transpose()).norm() > 1e-10) fail(k, hp + ": not symmetric");
        if (std::abs(s.H.trace() - 1.0) > 1e-10) fail(k, hp + ": trace " + std::to_string(s.H.trace()) + " != 1");
        Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (s.H + s.H.transpose()));
        if (es.eigenvalues().minCoeff() < -1e-10) fail(k, hp + ": not positive semidefinite");
        if ((s.F - s.F.transpose()).norm() > 1e-10) fail(k, fp + ": not symmetric");
        if (sys.p == 1 && es.eigenvalues().minCoeff() <= 1e-9) rep.rank_one.push_back(k);
    }
    if (!bad.empty()) throw InvalidCoefficients(msg, bad);

    if (sys.p == 1) {
        // a common null vector of H(t) U(t, 0) would be a solution carried by ker H
        const RMat J = real_symplectic_j(1);
        RMat stack(0, 2);
        RMat U = RMat::Identity(2, 2);
        for (const Segment* s : all) {
            const RMat A = J * s->F;  // U' = -J(0 H - F) U
            for (double frac : {0.0, 0.5, 1.0}) {
                const RMat V = (frac * s->length * A).exp() * U;
                RMat row = s->H * V;
                stack.conservativeResize(stack.rows() + 2, 2);
                stack.bottomRows(2) = row;
            }
            U = (s->length * A).exp() * U;
        }
        if (numerical_rank(stack.cast<cplx>()) < 2)
            throw InvalidCoefficients("definiteness fails: a nonzero solution lies in ker H", {});
        rep.definiteness_checked = true;
    }
    return rep;
}

/// -J (z H - F).
inline CMat segment_generator(const Segment& seg, cplx z) {
    const auto n = seg.H.rows();
    const CMat J = symplectic_j(static_cast<int>(n / 2));
    return -J * (z * seg.H.cast<cplx>() - seg.F.cast<cplx>());
}

inline CMat segment_propagator(const Segment& seg, cplx z, double dt) {
    return (dt * segment_generator(seg, z)).exp();
}

/// U(t, z) with U(a, z) = I; segment-start values are cached at construction.
class FundamentalSolution {
public:
    FundamentalSolution(const CanonicalSystem& sys, cplx z) : sys_(sys), z_(z) {
        const int n = 2 * sys.p;
        starts_.push_back(sys.a);
        values_.push_back(CMat::Identity(n, n));
        for (const auto& s : sys.segments) {
            gens_.push_back(segment_generator(s, z));
            values_.push_back((s.length * gens_.back()).exp() * values_.back());
            starts_.push_back(starts_.back() + s.length);
        }
        if (sys.tail) {
            tail_gen_ = segment_generator(*sys.tail, z);
            tail_step_ = (sys.tail->length * tail_gen_).exp();
        }
    }

    cplx z() const { return z_; }
    int p() const { return sys_.p; }
    const CanonicalSystem& system() const { return sys_; }

    CMat operator()(double t) const {
        const double end = starts_.back();
        const double tol = 1e-12 * std::max(1.0, std::abs(end));
        if (t < sys_.a - tol) throw OutOfInterval("t = " + std::to_string(t) + " is left of a");
        if (t <= end) {
            t = std::max(t, sys_.a);
            auto it = std::upper_bound(starts_.begin(), starts_.end() - 1, t);
            std::size_t j = static_cast<std::size_t>(it - starts_.begin());
            if (j > 0) --j;
            if (j >= gens_.size()) return values_.back();
            return ((t - starts_[j]) * gens_[j]).exp() * values_[j];
        }
        if (!sys_.tail) {
            if (t <= end + tol) return values_.back();
            throw OutOfInterval("t = " + std::to_string(t) + " is right of b");
        }
        const double L = sys_.tail->length;
        auto k = static_cast<long long>(std::floor((t - end) / L));
        const double rest = t - end - static_cast<double>(k) * L;
        CMat P = CMat::Identity(2 * p(), 2 * p());
        CMat base = tail_step_;
        for (; k > 0; k >>= 1) {
            if (k & 1) P = base * P;
            base = base * base;
        }
        return (rest * tail_gen_).exp() * P * values_.back();
    }

    CMat c(double t) const { return (*this)(t).leftCols(p()); }
    CMat s(double t) const { return (*this)(t).rightCols(p()); }
    CMat c1(double t) const { return c(t).topRows(p()); }
    CMat c2(double t) const { return c(t).bottomRows(p()); }
    CMat s1(double t) const { return s(t).topRows(p()); }
    CMat s2(double t) const { return s(t).bottomRows(p()); }

    /// U at the end of the explicit segments.
    const CMat& at_mesh_end() const { return values_.back(); }

private:
    CanonicalSystem sys_;
    cplx z_;
    std::vector<double> starts_;
    std::vector<CMat> values_;
    std::vector<CMat> gens_;
    CMat tail_gen_;
    CMat tail_step_;
};

inline CMat monodromy(const CanonicalSystem& sys, cplx z) {
    if (sys.half_line()) throw NotRegular("monodromy needs a regular right endpoint");
    return FundamentalSolution(sys, z).at_mesh_end();
}

/// Orthonormal basis of span U(t_end, z) G0, renormalized after every substep.
inline CMat propagate_subspace(const CanonicalSystem& sys, cplx z, const CMat& G0, double max_exponent = 8.0) {
    CMat G = orthonormal_basis(G0);
    for (const auto& s : sys.segments) {
        const CMat A = segment_generator(s, z);
        const double norm = spectral_norm(A) * s.length;
        const int steps = std::max(1, static_cast<int>(std::ceil(norm / max_exponent)));
        const CMat E = (s.length / steps * A).exp();
        for (int k = 0; k < steps; ++k) {
            G = E * G;
            Eigen::HouseholderQR<CMat> qr(G);
            G = qr.householderQ() * CMat::Identity(G.rows(), G.cols());
        }
    }
    return G;
}

struct IndivisibleRun {
    double from = 0.0;
    double to = 0.0;
    std::size_t first = 0;
    std::size_t last = 0;  // inclusive; segments.size() denotes the tail
    double psi = 0.0;
    bool at_left = false;
    bool at_right = false;
};

/// Type of a rank-one H = xi xi^T, xi = (cos psi, sin psi); nullopt if H is not of that form.
inline std::optional<double> indivisible_type(const RMat& H) {
    Eigen::SelfAdjointEigenSolver<RMat> es(H);
    const Eigen::Vector2d xi = es.eigenvectors().col(1);
    if ((H - xi * xi.transpose()).norm() > 1e-9) return std::nullopt;
    double psi = std::atan2(xi(1), xi(0));
    if (psi < 0) psi += M_PI;
    if (psi >= M_PI) psi -= M_PI;
    if (psi < 1e-12 || M_PI - psi < 1e-12) psi = 0.0;
    return psi;
}

inline std::vector<IndivisibleRun> detect_indivisible(const CanonicalSystem& sys) {
    if (sys.p != 1) throw UnsupportedDimension("indivisible intervals are classified for p = 1 only");
    std::vector<IndivisibleRun> runs;
    std::vector<const Segment*> all;
    for (const auto& s : sys.segments) all.push_back(&s);
    if (sys.tail) all.push_back(&*sys.tail);
    double t = sys.a;
    for (std::size_t k = 0; k < all.size(); ++k) {
        const bool is_tail = sys.tail && k == sys.segments.size();
        const double end = is_tail ? std::numeric_limits<double>::infinity() : t + all[k]->length;
        const auto psi = indivisible_type(all[k]->H);
        if (psi) {
            if (!runs.empty() && runs.back().last + 1 == k && std::abs(runs.back().psi - *psi) <= 1e-9) {
                runs.back().last = k;
                runs.back().to = end;
            } else {
                runs.push_back({t, end, k, k, *psi, k == 0, false});
            }
        }
        t = end;
    }
    for (auto& r : runs) r.at_right = r.last + 1 == all.size();
    return runs;
}

}  // namespace canspec
