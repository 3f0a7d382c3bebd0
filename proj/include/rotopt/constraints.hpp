#pragma once

#include "rotopt/common.hpp"

namespace rotopt {

/// Union-find over scalar DOFs with a +-1 sign relative to the class root.
/// Inconsistent identifications (u = +v and u = -v) force the class to zero.
class SignedUnionFind {
public:
    explicit SignedUnionFind(int n);

    /// Impose u_a = sign * u_b.
    void link(int a, int b, double sign);
    /// Impose u_a = 0.
    void fix_zero(int a);

    /// (root, sign, zeroed) after full path compression.
    struct Resolved {
        int root;
        double sign;
        bool zeroed;
    };
    Resolved resolve(int a);

    int size() const { return static_cast<int>(parent_.size()); }

private:
    std::pair<int, double> find(int a);
    std::vector<int> parent_;
    std::vector<double> sign_;
    std::vector<char> zero_;
};

/// Reduction of a constrained scalar system: full = P * reduced.
struct DofMap {
    SpMat P;  // n_full x n_reduced
    int n_full = 0;
    int n_reduced = 0;

    SpMat reduce(const SpMat& K_full) const { return P.transpose() * K_full * P; }
    Vec reduce_vec(const Vec& f_full) const { return P.transpose() * f_full; }
    Vec expand(const Vec& u_reduced) const { return P * u_reduced; }
};

DofMap build_dof_map(SignedUnionFind& uf);

/// Vector-valued (2D displacement) reduction with per-pair 2x2 transforms
/// u_slave = R * u_master, plus fixed nodes. Chains are not supported; each
/// node is slave in at most one pair.
struct VectorConstraintSet {
    int n_nodes = 0;
    std::vector<int> fixed_nodes;
    struct RotPair {
        int slave, master;
        Mat2 transform;
    };
    std::vector<RotPair> pairs;
};

DofMap build_vector_dof_map(const VectorConstraintSet& cs);

}  // namespace rotopt
