#pragma once

#include "rotopt/mesh.hpp"

#include <functional>

namespace rotopt {

/// int coef(e) grad(u).grad(v) with a per-element 2x2 tensor coefficient.
void add_tensor_stiffness(std::vector<Triplet>& trip,
                          const Eigen::Matrix<int, Eigen::Dynamic, 3>& tris,
                          const ElementCache& cache,
                          const std::function<Mat2(int)>& coef);

/// int coef(e) u v, consistent P1 mass; elements with zero coefficient skipped.
void add_scaled_mass(std::vector<Triplet>& trip,
                     const Eigen::Matrix<int, Eigen::Dynamic, 3>& tris,
                     const ElementCache& cache,
                     const std::function<double(int)>& coef);

/// y += alpha * M x restricted to elements with nonzero coef, without
/// materializing M.
void apply_scaled_mass(Vec& y, const Vec& x,
                       const Eigen::Matrix<int, Eigen::Dynamic, 3>& tris,
                       const ElementCache& cache,
                       const std::function<double(int)>& coef, double alpha);

/// Robin boundary edge contributions: int beta u v over the listed edges goes
/// into trip, int beta theta0 v into rhs.
void add_robin_edges(std::vector<Triplet>& trip, Vec& rhs,
                     const Eigen::Matrix<double, Eigen::Dynamic, 2>& nodes,
                     const EdgeList& edges, double beta, double ambient);

/// P1 load from an element-constant source density.
void add_element_source(Vec& rhs, const Eigen::Matrix<int, Eigen::Dynamic, 3>& tris,
                        const ElementCache& cache, const Vec& source_per_element);

}  // namespace rotopt
