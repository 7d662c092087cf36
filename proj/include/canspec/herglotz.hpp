#pragma once

// Herglotz functions: integral representation, kernel positivity, Stieltjes inversion.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "canspec/linalg.hpp"
#include "canspec/linrel.hpp"

namespace canspec {

struct Atom {
    double lambda;
    CMat weight;
};

/// Density samples rho(lambda_k) on an increasing grid.
struct SampledDensity {
    std::vector<double> lambda;
    std::vector<CMat> density;
};

/// alpha + beta z + int (1/(l - z) - l/(1 + l^2)) dsigma(l).
struct HerglotzRep {
    int p = 1;
    CMat alpha;
    CMat beta;
    std::vector<Atom> atoms;
    std::optional<SampledDensity> ac;

    static HerglotzRep constant(const CMat& a) {
        HerglotzRep r;
        r.p = static_cast<int>(a.rows());
        r.alpha = a;
        r.beta = CMat::Zero(r.p, r.p);
        return r;
    }

    static HerglotzRep scalar(double alpha, double beta, std::vector<std::pair<double, double>> atoms = {}) {
        HerglotzRep r;
        r.alpha = CMat::Constant(1, 1, alpha);
        r.beta = CMat::Constant(1, 1, beta);
        for (auto [l, w] : atoms) r.atoms.push_back({l, CMat::Constant(1, 1, w)});
        return r;
    }

    /// Throws std::invalid_argument when the data cannot represent a Herglotz function.
    void check() const {
        auto psd = [](const CMat& W) {
            const double tol = 1e-12 * std::max(1.0, W.norm());
            return (W - W.adjoint()).norm() <= tol && min_eigenvalue(W) >= -tol;
        };
        if (alpha.rows() != p || beta.rows() != p) throw std::invalid_argument("HerglotzRep: block size mismatch");
        if ((alpha - alpha.adjoint()).norm() > 1e-12 * std::max(1.0, alpha.norm()))
            throw std::invalid_argument("HerglotzRep: alpha is not Hermitian");
        if (!psd(beta)) throw std::invalid_argument("HerglotzRep: beta is not PSD");
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            if (!psd(atoms[j].weight)) throw std::invalid_argument("HerglotzRep: atom weight is not PSD");
            if (j > 0 && !(atoms[j].lambda > atoms[j - 1].lambda))
                throw std::invalid_argument("HerglotzRep: atoms must be strictly increasing");
        }
        if (ac) {
            if (ac->lambda.size() != ac->density.size()) throw std::invalid_argument("HerglotzRep: density size");
            for (const auto& d : ac->density)
                if (!psd(d)) throw std::invalid_argument("HerglotzRep: density is not PSD");
        }
    }
};

inline CMat eval_herglotz(const HerglotzRep& rep, cplx z) {
    CMat Q = rep.alpha + z * rep.beta;
    for (const auto& a : rep.atoms) {
        if (std::abs(z - a.lambda) < 1e-12) throw PoleAt(a.lambda);
        Q += (1.0 / (a.lambda - z) - a.lambda / (1.0 + a.lambda * a.lambda)) * a.weight;
    }
    if (rep.ac && rep.ac->lambda.size() >= 2) {
        const auto& L = rep.ac->lambda;
        const auto& R = rep.ac->density;
        auto kern = [z](double l) { return 1.0 / (l - z) - l / (1.0 + l * l); };
        for (std::size_t k = 0; k + 1 < L.size(); ++k) {
            const double h = L[k + 1] - L[k];
            Q += 0.5 * h * (kern(L[k]) * R[k] + kern(L[k + 1]) * R[k + 1]);
        }
    }
    return Q;
}

inline MatrixFunction as_function(const HerglotzRep& rep) {
    return [rep](cplx z) { return eval_herglotz(rep, z); };
}

/// tau(z) = ran col{I, Q(z)}.
inline std::function<NevanlinnaFamilySample(cplx)> herglotz_as_tau(const HerglotzRep& rep) {
    return [rep](cplx z) {
        return NevanlinnaFamilySample{CMat::Identity(rep.p, rep.p), eval_herglotz(rep, z), z};
    };
}

struct KernelGram {
    std::vector<cplx> nodes;
    CMat gram;
    double lambda_min = 0.0;
    bool certified = false;
};

/// Gram of N_zeta(z) = (Q(z) - Q(zeta)*) / (z - conj zeta) over the nodes.
inline KernelGram kernel_positivity(const MatrixFunction& Q, const std::vector<cplx>& nodes) {
    const auto m = nodes.size();
    std::vector<CMat> vals;
    vals.reserve(m);
    for (cplx z : nodes) vals.push_back(Q(z));
    const auto p = vals.empty() ? 0 : vals[0].rows();
    KernelGram out;
    out.nodes = nodes;
    out.gram = CMat::Zero(p * m, p * m);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k) {
            const cplx den = nodes[j] - std::conj(nodes[k]);
            CMat block;
            if (std::abs(den) < 1e-14 * std::max(1.0, std::abs(nodes[j]))) {
                if (j != k) throw ConjugateCollision("kernel nodes z = conj(zeta) for distinct nodes");
                const double d = 1e-6;
                block = (Q(nodes[j] + d) - Q(nodes[j] - d)) / (2 * d);
            } else {
                block = (vals[j] - vals[k].adjoint()) / den;
            }
            out.gram.block(j * p, k * p, p, p) = block;
        }
    out.gram = hermitian_part(out.gram);
    out.lambda_min = m ? min_eigenvalue(out.gram) : 0.0;
    out.certified = out.lambda_min >= -1e-8 * spectral_norm(out.gram);
    return out;
}

/// Left-continuous non-decreasing p x p function: atoms plus a sampled density.
class DistributionFunction {
public:
    DistributionFunction() = default;

    DistributionFunction(int p, std::vector<Atom> atoms, std::vector<double> grid, std::vector<CMat> density,
                         double origin)
        : p_(p), atoms_(std::move(atoms)), grid_(std::move(grid)), density_(std::move(density)), origin_(origin) {
        cumulate();
    }

    int p() const { return p_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<CMat>& density() const { return density_; }
    double origin() const { return origin_; }

    /// sigma(lambda), normalized so sigma(origin) = 0.
    CMat operator()(double lambda) const { return raw(lambda) - raw(origin_); }

    /// sigma(b) - sigma(a): atoms in [a, b) plus the density integral.
    CMat increment(double a, double b) const { return raw(b) - raw(a); }

    CMat total() const {
        CMat t = CMat::Zero(p_, p_);
        for (const auto& a : atoms_) t += a.weight;
        if (!cum_.empty()) t += cum_.back();
        return t;
    }

    DistributionFunction scaled(double c) const {
        DistributionFunction s = *this;
        for (auto& a : s.atoms_) a.weight *= c;
        for (auto& d : s.density_) d *= c;
        s.cumulate();
        return s;
    }

    /// Density at lambda by linear interpolation (zero outside the grid).
    CMat density_at(double lambda) const {
        if (grid_.size() < 2 || lambda < grid_.front() || lambda > grid_.back()) return CMat::Zero(p_, p_);
        auto it = std::upper_bound(grid_.begin(), grid_.end(), lambda);
        std::size_t k = std::min<std::size_t>(it - grid_.begin(), grid_.size() - 1);
        if (k == 0) k = 1;
        const double t = (lambda - grid_[k - 1]) / (grid_[k] - grid_[k - 1]);
        return (1 - t) * density_[k - 1] + t * density_[k];
    }

private:
    CMat raw(double lambda) const {
        CMat s = CMat::Zero(p_, p_);
        for (const auto& a : atoms_)
            if (a.lambda < lambda) s += a.weight;
        if (grid_.size() >= 2) {
            if (lambda >= grid_.back()) {
                s += cum_.back();
            } else if (lambda > grid_.front()) {
                auto it = std::upper_bound(grid_.begin(), grid_.end(), lambda);
                const std::size_t k = it - grid_.begin();
                const double h = grid_[k] - grid_[k - 1];
                const double t = lambda - grid_[k - 1];
                // trapezoid on the partial cell
                const CMat rho = density_[k - 1] + (t / h) * (density_[k] - density_[k - 1]);
                s += cum_[k - 1] + 0.5 * t * (density_[k - 1] + rho);
            }
        }
        return s;
    }

    void cumulate() {
        const std::size_t n = grid_.size();
        cum_.assign(n, CMat::Zero(p_, p_));
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double h = grid_[k + 1] - grid_[k];
            CMat cell;
            if (n < 3) {
                cell = 0.5 * h * (density_[k] + density_[k + 1]);
            } else if (k + 2 < n) {
                cell = h / 12.0 * (5.0 * density_[k] + 8.0 * density_[k + 1] - density_[k + 2]);
            } else {
                cell = h / 12.0 * (-density_[k - 1] + 8.0 * density_[k] + 5.0 * density_[k + 1]);
            }
            cum_[k + 1] = cum_[k] + cell;
        }
    }

    int p_ = 1;
    std::vector<Atom> atoms_;
    std::vector<double> grid_;
    std::vector<CMat> density_;
    std::vector<CMat> cum_;
    double origin_ = 0.0;
};

struct StieltjesOptions {
    std::vector<double> eps_seq{1e-2, 5e-3, 2.5e-3};
    double expected_min_jump = 0.1;
    int merge_steps = 3;
    int margin_steps = 6;
};

namespace detail {

inline CMat richardson(const CMat& v1, double nu1, const CMat& v2, double nu2) {
    return (nu1 * v2 - nu2 * v1) / (nu1 - nu2);
}

/// Value at nu = 0 of the polynomial through (nu_i, v_i).
inline CMat extrapolate_to_zero(const std::vector<CMat>& v, const std::vector<double>& nu) {
    CMat out = CMat::Zero(v[0].rows(), v[0].cols());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double L = 1.0;
        for (std::size_t j = 0; j < v.size(); ++j)
            if (j != i) L *= nu[j] / (nu[j] - nu[i]);
        out += L * v[i];
    }
    return out;
}

template <class F>
double golden_max(F f, double lo, double hi, double tol) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    while (hi - lo > tol) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// sigma on [l1, l2) from boundary values of Im r, 1/pi normalization.
inline DistributionFunction stieltjes_invert(const MatrixFunction& r, double l1, double l2, double h,
                                             const StieltjesOptions& opt = {}) {
    if (!(l2 > l1) || !(h > 0)) throw std::invalid_argument("stieltjes_invert: bad window or step");
    if (opt.eps_seq.size() < 3) throw std::invalid_argument("stieltjes_invert: need three eps values");
    const auto N = static_cast<long>(std::ceil((l2 - l1) / h - 1e-9));
    const double step = (l2 - l1) / static_cast<double>(N);
    const long m = opt.margin_steps;
    const std::size_t npts = static_cast<std::size_t>(N + 1 + 2 * m);
    auto mu = [&](std::size_t k) { return l1 + (static_cast<long>(k) - m) * step; };

    const auto& nu = opt.eps_seq;
    const std::size_t nn = nu.size();
    // Im r on the shifted lines
    std::vector<std::vector<CMat>> im(nn, std::vector<CMat>(npts));
    for (std::size_t e = 0; e < nn; ++e)
        for (std::size_t k = 0; k < npts; ++k) im[e][k] = imag_part(r(cplx(mu(k), nu[e])));
    const int p = static_cast<int>(im[0][0].rows());

    // atom candidates: local maxima of nu * tr Im r at the smallest nu
    const std::size_t last = nn - 1;
    const double threshold = 0.1 * opt.expected_min_jump;
    auto q = [&](double x, std::size_t e) { return nu[e] * imag_part(r(cplx(x, nu[e]))).trace().real(); };
    std::vector<double> qs(npts);
    for (std::size_t k = 0; k < npts; ++k) qs[k] = nu[last] * im[last][k].trace().real();
    std::vector<Atom> found;
    for (std::size_t k = 1; k + 1 < npts; ++k) {
        if (!(qs[k] >= qs[k - 1] && qs[k] > qs[k + 1] && qs[k] > threshold)) continue;
        double x = detail::golden_max([&](double t) { return q(t, last); }, mu(k) - step, mu(k) + step,
                                      1e-3 * nu[last]);
        // 1/q is a parabola in mu for a Lorentzian; its vertex is the atom
        for (int it = 0; it < 3; ++it) {
            const double s = 0.5 * nu[last];
            const double gm = 1.0 / q(x - s, last), g0 = 1.0 / q(x, last), gp = 1.0 / q(x + s, last);
            const double curv = gm - 2.0 * g0 + gp;
            if (!(curv > 0)) break;
            const double dx = s * (gm - gp) / (2.0 * curv);
            if (std::abs(dx) > s) break;
            x += dx;
        }
        const double qmin = q(x, last);
        const double qmax = q(x, 0);
        if (!(qmin > threshold) || qmin < 0.6 * qmax) continue;  // density bumps scale with nu
        if (!found.empty() && std::abs(found.back().lambda - x) <= opt.merge_steps * step) {
            if (qmin <= q(found.back().lambda, last)) continue;
            found.pop_back();
        }
        std::vector<CMat> w;
        for (std::size_t e = 0; e < nn; ++e) w.push_back(nu[e] * imag_part(r(cplx(x, nu[e]))));
        found.push_back({x, hermitian_part(detail::extrapolate_to_zero(w, nu))});
    }

    // remove Lorentzians, extrapolate density
    for (std::size_t e = 0; e < nn; ++e)
        for (std::size_t k = 0; k < npts; ++k)
            for (const auto& a : found) {
                const double d = mu(k) - a.lambda;
                im[e][k] -= (nu[e] / (d * d + nu[e] * nu[e])) * a.weight;
            }
    const double inv_pi = 1.0 / M_PI;
    std::vector<double> grid;
    std::vector<CMat> density;
    double d1 = 0.0, d2 = 0.0;
    const double guard = std::max(3.0 * step, 3.0 * nu[0]);
    for (long k = m; k <= N + m; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        grid.push_back(mu(kk));
        const CMat r12 = detail::richardson(im[last - 1][kk], nu[last - 1], im[last][kk], nu[last]);
        density.push_back(inv_pi * r12);
        // residues dominate right next to an atom
        bool near_atom = false;
        for (const auto& a : found) near_atom = near_atom || std::abs(mu(kk) - a.lambda) < guard;
        if (near_atom) continue;
        d1 = std::max(d1, (im[1][kk] - im[0][kk]).norm());
        d2 = std::max(d2, (im[last][kk] - im[last - 1][kk]).norm());
    }
    if (d2 > 1.5 * d1 + 1e-10) throw NoConvergence("Stieltjes extrapolation residual does not shrink with nu");

    std::vector<Atom> atoms;
    for (const auto& a : found)
        if (a.lambda >= l1 - 1e-9 * std::max(1.0, std::abs(l1)) && a.lambda < l2 - 1e-9 * std::max(1.0, std::abs(l2)))
            atoms.push_back(a);

    const double tol = 1e-6;
    for (const auto& a : atoms)
        if (min_eigenvalue(a.weight) < -tol) throw NonMonotone("atom weight has a negative eigenvalue");
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const CMat cell = 0.5 * (grid[k + 1] - grid[k]) * (density[k] + density[k + 1]);
        if (min_eigenvalue(cell) < -tol) throw NonMonotone("density increment has a negative eigenvalue");
    }
    const double origin = (l1 <= 0.0 && 0.0 <= l2) ? 0.0 : l1;
    return DistributionFunction(p, std::move(atoms), std::move(grid), std::move(density), origin);
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// CSV: lambda, sigma entries (re, im; row-major), kind, then jump or density entries.
inline std::string distribution_csv(const DistributionFunction& sigma, const std::string& system,
                                    const std::string& parameters) {
    std::ostringstream os;
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016" PRIx64, fnv1a(parameters));
    os << "# system=" << system << " hash=" << hash << "\n";
    const int p = sigma.p();
    os << "lambda";
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) os << ",sigma" << i + 1 << j + 1 << "_re,sigma" << i + 1 << j + 1 << "_im";
    os << ",kind";
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) os << ",v" << i + 1 << j + 1 << "_re,v" << i + 1 << j + 1 << "_im";
    os << "\n";
    auto row = [&](double l, const CMat& s, const char* kind, const CMat& v) {
        os << format_double(l);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) os << "," << format_double(s(i, j).real()) << "," << format_double(s(i, j).imag());
        os << "," << kind;
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) os << "," << format_double(v(i, j).real()) << "," << format_double(v(i, j).imag());
        os << "\n";
    };
    const auto& atoms = sigma.atoms();
    std::size_t a = 0;
    for (std::size_t k = 0; k < sigma.grid().size(); ++k) {
        const double l = sigma.grid()[k];
        while (a < atoms.size() && atoms[a].lambda < l) {
            row(atoms[a].lambda, sigma(atoms[a].lambda), "atom", atoms[a].weight);
            ++a;
        }
        row(l, sigma(l), "ac", sigma.density()[k]);
    }
    for (; a < atoms.size(); ++a) row(atoms[a].lambda, sigma(atoms[a].lambda), "atom", atoms[a].weight);
    return os.str();
}

}  // namespace canspec
