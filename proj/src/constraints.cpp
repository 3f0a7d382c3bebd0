#include "rotopt/constraints.hpp"

#include <numeric>

namespace rotopt {

SignedUnionFind::SignedUnionFind(int n) : parent_(n), sign_(n, 1.0), zero_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), 0);
}

std::pair<int, double> SignedUnionFind::find(int a) {
    double s = 1.0;
    int r = a;
    while (parent_[r] != r) {
        s *= sign_[r];
        r = parent_[r];
    }
    // path compression
    int cur = a;
    double cs = 1.0;
    while (parent_[cur] != cur) {
        const int next = parent_[cur];
        const double snext = sign_[cur];
        parent_[cur] = r;
        sign_[cur] = s / cs;
        cs *= snext;
        cur = next;
    }
    return {r, s};
}

void SignedUnionFind::link(int a, int b, double sign) {
    auto [ra, sa] = find(a);
    auto [rb, sb] = find(b);
    if (ra == rb) {
        // u_a = sa u_ra, u_b = sb u_rb; requirement u_a = sign u_b
        if (sa != sign * sb) zero_[ra] = 1;
        return;
    }
    // attach ra under rb: u_ra = (sign * sb / sa) u_rb
    parent_[ra] = rb;
    sign_[ra] = sign * sb / sa;
    if (zero_[ra]) zero_[rb] = 1;
}

void SignedUnionFind::fix_zero(int a) {
    auto [r, s] = find(a);
    (void)s;
    zero_[r] = 1;
}

SignedUnionFind::Resolved SignedUnionFind::resolve(int a) {
    auto [r, s] = find(a);
    return {r, s, zero_[r] != 0};
}

DofMap build_dof_map(SignedUnionFind& uf) {
    const int n = uf.size();
    std::vector<int> red_index(n, -1);
    int n_red = 0;
    for (int i = 0; i < n; ++i) {
        const auto res = uf.resolve(i);
        if (res.root == i && !res.zeroed) red_index[i] = n_red++;
    }
    std::vector<Triplet> trip;
    trip.reserve(n);
    for (int i = 0; i < n; ++i) {
        const auto res = uf.resolve(i);
        if (res.zeroed) continue;
        trip.emplace_back(i, red_index[res.root], res.sign);
    }
    DofMap map;
    map.n_full = n;
    map.n_reduced = n_red;
    map.P.resize(n, n_red);
    map.P.setFromTriplets(trip.begin(), trip.end());
    return map;
}

DofMap build_vector_dof_map(const VectorConstraintSet& cs) {
    const int n_full = 2 * cs.n_nodes;
    std::vector<char> fixed(cs.n_nodes, 0);
    for (int f : cs.fixed_nodes) fixed[f] = 1;
    std::vector<int> master_of(cs.n_nodes, -1);
    std::vector<Mat2> transform_of(cs.n_nodes);
    for (const auto& p : cs.pairs) {
        master_of[p.slave] = p.master;
        transform_of[p.slave] = p.transform;
    }

    std::vector<int> red_index(cs.n_nodes, -1);
    int n_red = 0;
    for (int i = 0; i < cs.n_nodes; ++i)
        if (!fixed[i] && master_of[i] < 0) {
            red_index[i] = n_red;
            n_red += 2;
        }

    std::vector<Triplet> trip;
    for (int i = 0; i < cs.n_nodes; ++i) {
        if (fixed[i]) continue;
        if (master_of[i] < 0) {
            trip.emplace_back(2 * i, red_index[i], 1.0);
            trip.emplace_back(2 * i + 1, red_index[i] + 1, 1.0);
        } else {
            const int m = master_of[i];
            if (fixed[m]) continue;  // slave of a fixed node is zero
            if (master_of[m] >= 0)
                throw std::invalid_argument("vector constraints: chained pairs unsupported");
            const Mat2& R = transform_of[i];
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c)
                    if (R(r, c) != 0.0) trip.emplace_back(2 * i + r, red_index[m] + c, R(r, c));
        }
    }
    DofMap map;
    map.n_full = n_full;
    map.n_reduced = n_red;
    map.P.resize(n_full, n_red);
    map.P.setFromTriplets(trip.begin(), trip.end());
    return map;
}

}  // namespace rotopt
