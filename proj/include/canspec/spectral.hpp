#pragma once

// L-resolvents, spectral functions, Parseval checks and admissibility of parameters.

#include <nlohmann/json.hpp>
#include <map>
#include <variant>

#include "canspec/boundary.hpp"
#include "canspec/herglotz.hpp"

namespace canspec {

/// Constant selfadjoint relation ker[C, -D]-style pair: C Gamma0 + D Gamma1 = 0.
struct ConstantRelation {
    MatrixPair pair;
};

/// Real pair with A f(a) + B f(b) = 0, full triple only.
struct BoundaryPair {
    RMat A;
    RMat B;
};

using TauParameter = std::variant<ConstantRelation, HerglotzRep, BoundaryPair>;

/// [C D] = [A B] [[I, I], [-J, J]]^{-1}.
inline MatrixPair pair_from_boundary(const BoundaryPair& bp) {
    const int n = static_cast<int>(bp.A.rows());
    const CMat J = symplectic_j(n / 2);
    const CMat A = bp.A.cast<cplx>(), B = bp.B.cast<cplx>();
    return {0.5 * (A + B), 0.5 * (A - B) * J};
}

inline BoundaryPair boundary_from_pair(const MatrixPair& pair) {
    const CMat J = symplectic_j(static_cast<int>(pair.C.rows()) / 2);
    const CMat A = pair.C - pair.D * J, B = pair.C + pair.D * J;
    if (A.imag().norm() > 1e-12 * (1.0 + A.norm()) || B.imag().norm() > 1e-12 * (1.0 + B.norm()))
        throw std::invalid_argument("pair has no real (A, B) form");
    return {A.real(), B.real()};
}

inline int tau_dim(const TauParameter& tau) {
    if (const auto* c = std::get_if<ConstantRelation>(&tau)) return static_cast<int>(c->pair.C.rows());
    if (const auto* h = std::get_if<HerglotzRep>(&tau)) return h->p;
    return static_cast<int>(std::get<BoundaryPair>(tau).A.rows());
}

/// Checks the invariants of the parameter form.
inline void check_tau(const TauParameter& tau) {
    if (const auto* c = std::get_if<ConstantRelation>(&tau)) {
        if (!c->pair.selfadjoint()) throw std::invalid_argument("tau pair is not selfadjoint");
    } else if (const auto* h = std::get_if<HerglotzRep>(&tau)) {
        h->check();
    } else {
        const auto& bp = std::get<BoundaryPair>(tau);
        const int n = static_cast<int>(bp.A.rows());
        if (n % 2 || bp.A.cols() != n || bp.B.rows() != n || bp.B.cols() != n)
            throw std::invalid_argument("boundary pair must be two n x n matrices, n even");
        const RMat J = symplectic_j(n / 2).real();
        RMat AB(n, 2 * n);
        AB << bp.A, bp.B;
        if (numerical_rank(AB.cast<cplx>()) != n) throw RankDeficientPair("rank [A B] < n");
        if ((bp.A * J * bp.A.transpose() - bp.B * J * bp.B.transpose()).norm() > 1e-10 * (1.0 + AB.squaredNorm()))
            throw std::invalid_argument("boundary pair does not give a selfadjoint condition");
    }
}

/// Pair (C(z), D(z)) of the parameter at z.
inline MatrixPair pair_at(const TauParameter& tau, cplx z) {
    if (const auto* c = std::get_if<ConstantRelation>(&tau)) return c->pair;
    if (const auto* b = std::get_if<BoundaryPair>(&tau)) return pair_from_boundary(*b);
    const auto& h = std::get<HerglotzRep>(tau);
    if (h.beta.norm() > 0 || !h.atoms.empty() || h.ac) {
        if (z.imag() == 0.0) throw NotInHalfPlane("z-dependent tau needs a non-real z");
    }
    return pair_from_matrix(eval_herglotz(h, z));
}

inline NevanlinnaFamilySample family_at(const TauParameter& tau, cplx z) {
    if (const auto* h = std::get_if<HerglotzRep>(&tau)) {
        pair_at(tau, z);
        return {CMat::Identity(h->p, h->p), eval_herglotz(*h, z), z};
    }
    return family_from_pair(pair_at(tau, z), z);
}

enum class LRoute { automatic, left_pair, right_lft, boundary_pair };

/// r(z) = T_W[tau(z)] for the resolvent matrix of the triple.
inline CMat l_resolvent(const CanonicalSystem& sys, TripleKind kind, const TauParameter& tau, cplx z,
                        LRoute route = LRoute::automatic) {
    check_kind(sys, kind);
    if (tau_dim(tau) != boundary_dim(sys, kind))
        throw std::invalid_argument("tau has dimension " + std::to_string(tau_dim(tau)) + ", triple needs " +
                                    std::to_string(boundary_dim(sys, kind)));
    if (std::holds_alternative<BoundaryPair>(tau) && kind != TripleKind::full_regular)
        throw std::invalid_argument("boundary pairs parametrize the full triple only");
    if (route == LRoute::automatic) route = kind == TripleKind::full_regular ? LRoute::left_pair : LRoute::right_lft;
    switch (route) {
        case LRoute::left_pair:
            return lft_left(resolvent_matrix(sys, kind, ResolventKind::left), pair_at(tau, z), z);
        case LRoute::right_lft:
            return lft_right(resolvent_matrix(sys, kind, ResolventKind::right), family_at(tau, z), z);
        case LRoute::boundary_pair: {
            if (kind != TripleKind::full_regular) throw std::invalid_argument("boundary-pair route needs the full triple");
            const BoundaryPair bp = std::holds_alternative<BoundaryPair>(tau)
                                        ? std::get<BoundaryPair>(tau)
                                        : boundary_from_pair(pair_at(tau, z));
            const CMat U = monodromy(sys, z);
            const CMat J = symplectic_j(sys.p);
            const CMat A = bp.A.cast<cplx>(), BU = bp.B.cast<cplx>() * U;
            return guarded_solve(CMat(A + BU), CMat((-A + BU) * J), "A + B U(z)") + full_triple_K(sys);
        }
        default: break;
    }
    throw std::invalid_argument("unknown route");
}

inline MatrixFunction l_resolvent_function(const CanonicalSystem& sys, TripleKind kind, const TauParameter& tau,
                                           LRoute route = LRoute::automatic) {
    // the resolvent matrix is rebuilt per call; cache the full-triple constant once
    check_kind(sys, kind);
    if (kind == TripleKind::full_regular && route != LRoute::boundary_pair) {
        const auto Wl = resolvent_matrix(sys, kind, ResolventKind::left);
        const auto Wr = Wl.dual();
        return [Wl, Wr, tau, route](cplx z) {
            if (route == LRoute::right_lft) return lft_right(Wr, family_at(tau, z), z);
            return lft_left(Wl, pair_at(tau, z), z);
        };
    }
    return [sys, kind, tau, route](cplx z) { return l_resolvent(sys, kind, tau, z, route); };
}

/// sigma on [l1, l2) with step h from the L-resolvent of tau.
inline DistributionFunction spectral_function(const CanonicalSystem& sys, TripleKind kind, const TauParameter& tau,
                                              double l1, double l2, double h, LRoute route = LRoute::automatic,
                                              const StieltjesOptions& opt = {}) {
    return stieltjes_invert(l_resolvent_function(sys, kind, tau, route), l1, l2, h, opt);
}

// ---------------------------------------------------------------- admissibility

enum class Verdict { admissible, inadmissible, indeterminate };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::admissible: return "admissible";
        case Verdict::inadmissible: return "inadmissible";
        case Verdict::indeterminate: return "indeterminate";
    }
    return "?";
}

enum class Criterion { automatic, weyl_inverse_sum, tau_growth, indivisible_endpoint };

struct AdmissibilityReport {
    Verdict verdict = Verdict::indeterminate;
    std::string criterion;
    std::vector<std::pair<double, double>> samples;  // (y, ratio); ratio = inf where the denominator is singular

    nlohmann::json to_json() const {
        nlohmann::json s = nlohmann::json::array();
        for (const auto& [y, r] : samples) s.push_back({y, std::isfinite(r) ? nlohmann::json(r) : nlohmann::json()});
        return {{"verdict", to_string(verdict)}, {"criterion", criterion}, {"samples", s}};
    }
};

inline constexpr double kAdmissibleFinal = 1e-3;
inline constexpr double kInadmissibleFloor = 1e-2;

inline Verdict classify_ratios(const std::vector<std::pair<double, double>>& samples) {
    const std::size_t n = samples.size();
    for (const auto& s : samples)
        if (!std::isfinite(s.second)) return Verdict::inadmissible;
    const std::size_t from = n >= 4 ? n - 4 : 0;
    bool decreasing = true;
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t k = from; k < n; ++k) {
        lo = std::min(lo, samples[k].second);
        if (k > from && samples[k].second > samples[k - 1].second * (1.0 + 1e-9) + 1e-300) decreasing = false;
    }
    if (decreasing && samples.back().second < kAdmissibleFinal) return Verdict::admissible;
    if (lo >= kInadmissibleFloor) return Verdict::inadmissible;
    return Verdict::indeterminate;
}

inline std::vector<double> admissibility_grid() { return {1e1, 1e2, 1e3, 1e4, 1e5, 1e6}; }

namespace detail {

/// max(|(C + D M)^{-1} D|, |M - M (C + D M)^{-1} D M|) / y along z = i y.
inline double inverse_sum_ratio(const CanonicalSystem& sys, TripleKind kind, const TauParameter& tau, double y) {
    const cplx z(0.0, y);
    const CMat M = weyl_function(sys, kind, z);
    const MatrixPair pr = pair_at(tau, z);
    const CMat den = pr.C + pr.D * M;
    const double scale = std::max({1.0, spectral_norm(pr.C), spectral_norm(pr.D) * spectral_norm(M)});
    const double smin = singular_values(den).minCoeff();
    if (!(smin > scale / kCondLimit)) return std::numeric_limits<double>::infinity();
    const CMat Q = den.partialPivLu().solve(pr.D);
    const double adm1 = spectral_norm(Q);
    const double adm2 = spectral_norm(M - M * Q * M);
    return std::max(adm1, adm2) / y;
}

/// |X(iy)| / y with X = (sin psi tau + cos psi)(-cos psi tau + sin psi)^{-1} in family form.
inline double endpoint_ratio(const TauParameter& tau, double psi, double y) {
    const NevanlinnaFamilySample s = family_at(tau, cplx(0.0, y));
    const CMat num = std::sin(psi) * s.psi + std::cos(psi) * s.phi;
    const CMat den = -std::cos(psi) * s.psi + std::sin(psi) * s.phi;
    const double scale = std::max(spectral_norm(s.phi), spectral_norm(s.psi));
    const double smin = singular_values(den).minCoeff();
    if (!(smin > scale / kCondLimit)) return std::numeric_limits<double>::infinity();
    return spectral_norm(guarded_right_solve(num, den, "endpoint criterion", 1e300)) / y;
}

}  // namespace detail

inline AdmissibilityReport admissibility_test(const CanonicalSystem& sys, TripleKind kind, const TauParameter& tau,
                                              Criterion criterion = Criterion::automatic) {
    check_kind(sys, kind);
    AdmissibilityReport rep;
    std::optional<double> psi;
    bool run_at_endpoint = false;
    if (criterion == Criterion::automatic || criterion == Criterion::indivisible_endpoint ||
        criterion == Criterion::tau_growth) {
        if (kind != TripleKind::full_regular && sys.p == 1) {
            for (const auto& r : detect_indivisible(sys)) {
                const bool here = kind == TripleKind::neumann_left ? r.at_right : r.at_left;
                if (here) {
                    run_at_endpoint = true;
                    psi = r.psi;
                }
            }
            if (criterion == Criterion::automatic) criterion = Criterion::indivisible_endpoint;
        } else if (criterion == Criterion::automatic) {
            criterion = Criterion::weyl_inverse_sum;
        }
    }
    if (criterion == Criterion::indivisible_endpoint && !run_at_endpoint) {
        rep.criterion = "no indivisible interval at the endpoint";
        rep.verdict = Verdict::admissible;
        return rep;
    }
    for (double y : admissibility_grid()) {
        double ratio;
        switch (criterion) {
            case Criterion::weyl_inverse_sum:
                rep.criterion = "inverse-sum conditions on M(iy) and tau(iy)";
                ratio = detail::inverse_sum_ratio(sys, kind, tau, y);
                break;
            case Criterion::tau_growth:
                rep.criterion = "tau(iy) = o(y)";
                ratio = detail::endpoint_ratio(tau, M_PI / 2, y);
                break;
            default:
                rep.criterion = "indivisible endpoint of type psi = " + format_double(*psi);
                ratio = detail::endpoint_ratio(tau, *psi, y);
                break;
        }
        rep.samples.emplace_back(y, ratio);
    }
    rep.verdict = classify_ratios(rep.samples);
    return rep;
}

// ---------------------------------------------------------------- transforms

/// Replace the xi_psi component on every indivisible run by its H-mean (p = 1).
inline VectorFunction project_mul_part(const CanonicalSystem& sys, const VectorFunction& f) {
    if (sys.p != 1) return f;
    const auto runs = detect_indivisible(sys);
    if (runs.empty()) return f;
    struct Piece {
        double from, to;
        Eigen::Vector2d xi;
        cplx mean;
    };
    std::vector<Piece> pieces;
    for (const auto& r : runs) {
        const Eigen::Vector2d xi(std::cos(r.psi), std::sin(r.psi));
        cplx mean = 0.0;
        if (std::isfinite(r.to)) {
            const double len = r.to - r.from;
            for (int c = 0; c < 64; ++c)
                for (std::size_t k = 0; k < 8; ++k) {
                    const double t = r.from + len * (c + gl8::x[k]) / 64.0;
                    mean += len / 64.0 * gl8::w[k] * xi.cast<cplx>().dot(f(t));
                }
            mean /= len;
        }
        pieces.push_back({r.from, r.to, xi, mean});
    }
    return {[f, pieces](double t) {
                CVec v = f(t);
                for (const auto& p : pieces)
                    if (t >= p.from && t < p.to) {
                        const CVec xi = p.xi.cast<cplx>();
                        v += xi * (p.mean - xi.dot(v));
                    }
                return v;
            },
            f.lo, f.hi};
}

/// int over sigma of G(l)* dsigma(l) F(l): atoms exactly, density by the trapezoid rule.
template <class FT, class GT>
cplx sigma_pairing(const DistributionFunction& sigma, const FT& F, const GT& G) {
    cplx s = 0.0;
    for (const auto& a : sigma.atoms()) s += G(a.lambda).dot(a.weight * F(a.lambda));
    const auto& grid = sigma.grid();
    const auto& rho = sigma.density();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double w = 0.0;
        if (k > 0) w += 0.5 * (grid[k] - grid[k - 1]);
        if (k + 1 < grid.size()) w += 0.5 * (grid[k + 1] - grid[k]);
        if (rho[k].norm() == 0.0) continue;
        s += w * G(grid[k]).dot(rho[k] * F(grid[k]));
    }
    return s;
}

struct ParsevalResult {
    cplx lhs;
    cplx rhs;
    double defect;
};

/// |(f, g) - int G* dsigma F| / |(f, g)|, after projecting out indivisible-run fluctuations.
inline ParsevalResult parseval_check(const CanonicalSystem& sys, TripleKind kind, const DistributionFunction& sigma,
                                     const VectorFunction& f0, const VectorFunction& g0) {
    check_kind(sys, kind);
    const VectorFunction f = project_mul_part(sys, f0), g = project_mul_part(sys, g0);
    double lmax = 1.0;
    for (const auto& a : sigma.atoms()) lmax = std::max(lmax, std::abs(a.lambda));
    if (!sigma.grid().empty())
        lmax = std::max({lmax, std::abs(sigma.grid().front()), std::abs(sigma.grid().back())});
    const double hi = kind == TripleKind::limit_point ? std::max(f.hi, g.hi) : sys.mesh_end();
    const Mesh mesh = build_mesh(sys, sys.a, hi, 1.0);
    const cplx lhs = inner_product(mesh, sample(f, mesh), sample(g, mesh));
    const FourierTransform Ff(sys, kind, f, lmax), Fg(sys, kind, g, lmax);
    std::map<double, CVec> cf, cg;
    auto F = [&](double l) {
        auto it = cf.find(l);
        return it != cf.end() ? it->second : cf.emplace(l, Ff(l)).first->second;
    };
    auto G = [&](double l) {
        auto it = cg.find(l);
        return it != cg.end() ? it->second : cg.emplace(l, Fg(l)).first->second;
    };
    const cplx rhs = sigma_pairing(sigma, F, G);
    const double scale = std::abs(lhs);
    return {lhs, rhs, scale == 0.0 ? std::abs(rhs) : std::abs(lhs - rhs) / scale};
}

/// Bessel inequality int |Ff|^2 dsigma <= |f|^2 (up to rel_tol), from a diagonal Parseval check.
inline bool bessel_inequality_holds(const ParsevalResult& diag, double rel_tol = 1e-3) {
    return diag.rhs.real() <= diag.lhs.real() * (1.0 + rel_tol);
}

/// f(x) = int kernel(x, l) dsigma(l) F(l) at the given points.
inline std::vector<CVec> inverse_fourier(const CanonicalSystem& sys, TripleKind kind, const DistributionFunction& sigma,
                                         const std::function<CVec(double)>& F, const std::vector<double>& xs) {
    check_kind(sys, kind);
    const int n = 2 * sys.p;
    std::vector<CVec> out(xs.size(), CVec::Zero(n));
    auto add = [&](double l, const CMat& weight, double w) {
        const CVec Fl = F(l);
        if (Fl.norm() == 0.0) return;
        const FundamentalSolution U(sys, l);
        const CVec coef = w * (weight * Fl);
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] += fourier_kernel_matrix(kind, U(xs[i])) * coef;
    };
    for (const auto& a : sigma.atoms()) add(a.lambda, a.weight, 1.0);
    const auto& grid = sigma.grid();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (sigma.density()[k].norm() == 0.0) continue;
        double w = 0.0;
        if (k > 0) w += 0.5 * (grid[k] - grid[k - 1]);
        if (k + 1 < grid.size()) w += 0.5 * (grid[k + 1] - grid[k]);
        add(grid[k], sigma.density()[k], w);
    }
    return out;
}

/// Real z in [l1, l2] where C c2(b, z) + D c1(b, z) is singular: the Neumann-triple eigenvalues of tau = (C, D).
inline std::vector<double> eigenvalue_scan(const CanonicalSystem& sys, const MatrixPair& pair, double l1, double l2,
                                           int samples = 2000) {
    check_kind(sys, TripleKind::neumann_left);
    const int p = sys.p;
    auto smin = [&](double l) {
        const CMat U = monodromy(sys, l);
        const CMat X = pair.C * U.bottomLeftCorner(p, p) + pair.D * U.topLeftCorner(p, p);
        return singular_values(X).minCoeff();
    };
    std::vector<double> xs(samples + 1), vs(samples + 1);
    const double h = (l2 - l1) / samples;
    for (int k = 0; k <= samples; ++k) {
        xs[k] = l1 + k * h;
        vs[k] = smin(xs[k]);
    }
    double scale = 0.0;
    for (double v : vs) scale = std::max(scale, v);
    std::vector<double> out;
    for (int k = 0; k <= samples; ++k) {
        const double left = k > 0 ? vs[k - 1] : std::numeric_limits<double>::infinity();
        const double right = k < samples ? vs[k + 1] : std::numeric_limits<double>::infinity();
        if (!(vs[k] <= left && vs[k] < right)) continue;
        const double lo = std::max(l1, xs[k] - h), hi = std::min(l2, xs[k] + h);
        const double x = detail::golden_max([&](double l) { return -smin(l); }, lo, hi, 1e-12 * (1 + std::abs(xs[k])));
        if (smin(x) <= 1e-6 * std::max(1.0, scale)) out.push_back(x);
    }
    return out;
}

}  // namespace canspec
