#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rotopt {

using Vec = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using MatX = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

inline constexpr double kPi = 3.14159265358979323846;
// vacuum reluctivity 1/mu_0
inline constexpr double kNu0 = 1.0 / (4.0e-7 * kPi);

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }
inline double rpm2rads(double rpm) { return rpm * 2.0 * kPi / 60.0; }

// curl of a scalar out-of-plane potential: b = R * grad(a), R = [[0,1],[-1,0]]
inline Vec2 rot90cw(const Vec2& g) { return Vec2(g.y(), -g.x()); }
// transpose of the map above
inline Vec2 rot90ccw(const Vec2& g) { return Vec2(-g.y(), g.x()); }

}  // namespace rotopt
