#include "rotopt/fem.hpp"

namespace rotopt {

void add_tensor_stiffness(std::vector<Triplet>& trip,
                          const Eigen::Matrix<int, Eigen::Dynamic, 3>& tris,
                          const ElementCache& cache, const std::function<Mat2(int)>& coef) {
    const int ne = static_cast<int>(tris.rows());
    for (int e = 0; e < ne; ++e) {
        const Mat2 G = coef(e);
        const auto& g = cache.grad[e];
        const double area = cache.area[e];
        for (int i = 0; i < 3; ++i) {
            const Vec2 Ggi = G * g.col(i);
            for (int j = 0; j < 3; ++j) {
                const double v = area * Ggi.dot(g.col(j));
                trip.emplace_back(tris(e, j), tris(e, i), v);
            }
        }
    }
}

void add_scaled_mass(std::vector<Triplet>& trip,
                     const Eigen::Matrix<int, Eigen::Dynamic, 3>& tris,
                     const ElementCache& cache, const std::function<double(int)>& coef) {
    const int ne = static_cast<int>(tris.rows());
    for (int e = 0; e < ne; ++e) {
        const double c = coef(e);
        if (c == 0.0) continue;
        const double w = c * cache.area[e] / 12.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trip.emplace_back(tris(e, i), tris(e, j), w * (i == j ? 2.0 : 1.0));
    }
}

void apply_scaled_mass(Vec& y, const Vec& x,
                       const Eigen::Matrix<int, Eigen::Dynamic, 3>& tris,
                       const ElementCache& cache, const std::function<double(int)>& coef,
                       double alpha) {
    const int ne = static_cast<int>(tris.rows());
    for (int e = 0; e < ne; ++e) {
        const double c = coef(e);
        if (c == 0.0) continue;
        const double w = alpha * c * cache.area[e] / 12.0;
        const int a = tris(e, 0), b = tris(e, 1), d = tris(e, 2);
        const double xa = x[a], xb = x[b], xd = x[d];
        y[a] += w * (2.0 * xa + xb + xd);
        y[b] += w * (xa + 2.0 * xb + xd);
        y[d] += w * (xa + xb + 2.0 * xd);
    }
}

void add_robin_edges(std::vector<Triplet>& trip, Vec& rhs,
                     const Eigen::Matrix<double, Eigen::Dynamic, 2>& nodes,
                     const EdgeList& edges, double beta, double ambient) {
    for (const auto& [a, b] : edges) {
        const double len = (nodes.row(a) - nodes.row(b)).norm();
        const double m = beta * len / 6.0;
        trip.emplace_back(a, a, 2.0 * m);
        trip.emplace_back(b, b, 2.0 * m);
        trip.emplace_back(a, b, m);
        trip.emplace_back(b, a, m);
        rhs[a] += beta * ambient * len / 2.0;
        rhs[b] += beta * ambient * len / 2.0;
    }
}

void add_element_source(Vec& rhs, const Eigen::Matrix<int, Eigen::Dynamic, 3>& tris,
                        const ElementCache& cache, const Vec& source_per_element) {
    const int ne = static_cast<int>(tris.rows());
    for (int e = 0; e < ne; ++e) {
        const double s = source_per_element[e];
        if (s == 0.0) continue;
        const double w = s * cache.area[e] / 3.0;
        for (int v = 0; v < 3; ++v) rhs[tris(e, v)] += w;
    }
}

}  // namespace rotopt
