#pragma once

// Linear relations in C^n, Nevanlinna pairs and families at a fixed point.

#include <stdexcept>

#include "canspec/linalg.hpp"

namespace canspec {

/// A subspace of C^n x C^n. The stored basis is 2n x m with orthonormal columns;
/// the top n rows are the first component, the bottom n rows the second.
class LinearRelation {
public:
    LinearRelation(int n, const CMat& spanning) : n_(n) {
        if (spanning.rows() != 2 * n) throw std::invalid_argument("LinearRelation: basis must have 2n rows");
        basis_ = orthonormal_basis(spanning);
    }

    /// {col{u, M u}}.
    static LinearRelation graph(const CMat& M) {
        const auto n = static_cast<int>(M.rows());
        CMat B(2 * n, n);
        B << CMat::Identity(n, n), M;
        return LinearRelation(n, B);
    }

    /// {0} x C^n.
    static LinearRelation purely_multivalued(int n) {
        CMat B(2 * n, n);
        B << CMat::Zero(n, n), CMat::Identity(n, n);
        return LinearRelation(n, B);
    }

    int n() const { return n_; }
    int dim() const { return static_cast<int>(basis_.cols()); }
    const CMat& basis() const { return basis_; }
    CMat first() const { return basis_.topRows(n_); }
    CMat second() const { return basis_.bottomRows(n_); }

    bool contains(const LinearRelation& other) const {
        if (other.n_ != n_) return false;
        CMat both(2 * n_, dim() + other.dim());
        both << basis_, other.basis_;
        return numerical_rank(both) == dim();
    }

    bool operator==(const LinearRelation& other) const {
        return other.n_ == n_ && other.dim() == dim() && contains(other);
    }

private:
    int n_;
    CMat basis_;
};

/// [C D] describing ker[C, -D].
struct MatrixPair {
    CMat C;
    CMat D;

    int p() const { return static_cast<int>(C.rows()); }

    bool proper() const {
        CMat CD(C.rows(), C.cols() + D.cols());
        CD << C, D;
        return numerical_rank(CD) == p();
    }

    /// C D* = D C* and rank p: the pair describes a selfadjoint relation.
    bool selfadjoint() const {
        const CMat defect = C * D.adjoint() - D * C.adjoint();
        const double scale = std::max(1.0, C.norm() * D.norm());
        return proper() && defect.norm() <= 1e-10 * scale;
    }
};

/// tau(z) = ran col{phi(z), psi(z)}.
struct NevanlinnaFamilySample {
    CMat phi;
    CMat psi;
    cplx z;

    int p() const { return static_cast<int>(phi.rows()); }

    LinearRelation relation() const {
        CMat B(2 * p(), phi.cols());
        B << phi, psi;
        return LinearRelation(p(), B);
    }

    bool proper() const { return relation().dim() == p(); }
};

/// {col{u, u'} : C u - D u' = 0}.
inline LinearRelation relation_from_kernel_pair(const CMat& C, const CMat& D) {
    const auto p = static_cast<int>(C.rows());
    CMat CD(p, 2 * p);
    CD << C, -D;
    if (numerical_rank(CD) < p) throw RankDeficientPair("rank [C D] < p");
    return LinearRelation(p, null_space(CD));
}

inline LinearRelation relation_from_kernel_pair(const MatrixPair& pair) {
    return relation_from_kernel_pair(pair.C, pair.D);
}

struct RelationParts {
    CMat dom;
    CMat ker;
    CMat ran;
    CMat mul;
};

inline RelationParts relation_parts(const LinearRelation& T) {
    const CMat V = T.first();
    const CMat G = T.second();
    RelationParts parts;
    parts.dom = orthonormal_basis(V);
    parts.ran = orthonormal_basis(G);
    // Basis coordinates x with G x = 0 give the kernel V x; with V x = 0 the multivalued part G x.
    parts.ker = G.cols() ? orthonormal_basis(V * null_space(G)) : CMat(T.n(), 0);
    parts.mul = V.cols() ? orthonormal_basis(G * null_space(V)) : CMat(T.n(), 0);
    return parts;
}

/// T* = {col{u, f} : (f, v) = (u, g) for all col{v, g} in T}.
inline LinearRelation adjoint(const LinearRelation& T) {
    const int n = T.n();
    if (T.dim() == 0) return LinearRelation(n, CMat::Identity(2 * n, 2 * n));
    CMat constraints(T.dim(), 2 * n);
    constraints << -T.second().adjoint(), T.first().adjoint();
    return LinearRelation(n, null_space(constraints));
}

enum class Symmetry { symmetric, selfadjoint, neither };

inline Symmetry classify_symmetry(const LinearRelation& T) {
    const LinearRelation Ts = adjoint(T);
    if (!Ts.contains(T)) return Symmetry::neither;
    return T.dim() == Ts.dim() ? Symmetry::selfadjoint : Symmetry::symmetric;
}

/// Right factor normalization: (phi, psi) -> (phi, psi) R^{-1} with col{phi, psi} = Q R.
inline NevanlinnaFamilySample normalized(const NevanlinnaFamilySample& s) {
    const int p = s.p();
    CMat B(2 * p, s.phi.cols());
    B << s.phi, s.psi;
    const CMat Q = orthonormal_basis(B);
    return {Q.topRows(p), Q.bottomRows(p), s.z};
}

/// (C, D)(z) = (psi(conj z)*, phi(conj z)*), from the family sampled at conj z.
inline MatrixPair pair_from_family(const NevanlinnaFamilySample& at_conjugate) {
    return {at_conjugate.psi.adjoint(), at_conjugate.phi.adjoint()};
}

/// Family sample at z spanning ker[C(z), -D(z)].
inline NevanlinnaFamilySample family_from_pair(const MatrixPair& pair, cplx z) {
    const LinearRelation rel = relation_from_kernel_pair(pair);
    return {rel.first(), rel.second(), z};
}

/// Constant Hermitian tau as a pair: graph(tau) = ker[tau, -I].
inline MatrixPair pair_from_matrix(const CMat& tau) {
    return {tau, CMat::Identity(tau.rows(), tau.cols())};
}

/// tau = {0} x C^p, i.e. (C, D) = (I, 0).
inline MatrixPair multivalued_pair(int p) { return {CMat::Identity(p, p), CMat::Zero(p, p)}; }

}  // namespace canspec
