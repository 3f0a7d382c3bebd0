#pragma once

#include "rotopt/common.hpp"

#include <array>

namespace rotopt {

/// Design materials in the fixed order used by the level-set simplex.
enum class MaterialId : int { Iron = 0, MagnetOne = 1, MagnetTwo = 2, Air = 3 };
inline constexpr int kMaterialCount = 4;

/// Saturating iron reluctivity nu(s), s = |b|^2. Exponential core with a C1
/// rational continuation that approaches nu_0 from below.
struct IronCurve {
    // nu(s) = k1*exp(k2*s) + k3 below the junction
    double k1 = 0.0, k2 = 0.0, k3 = 0.0;
    // nu(s) = nu0 - c1/(s - c2) above
    double s_junction = 0.0, c1 = 0.0, c2 = 0.0;
    // optional tabulated core (monotone cubic over s): overrides the
    // exponential part below its last sample
    bool from_table = false;
    Vec table_s, table_nu, table_d;  // PCHIP data: nodes, values, slopes

    double nu(double s) const;
    double dnu_ds(double s) const;
    /// Phi(s) = int_0^s nu(t) dt (twice the stored magnetic energy density).
    double nu_integral(double s) const;

    /// Fit of the exponential model through two (H, B) anchor points with a
    /// prescribed initial relative permeability.
    static IronCurve fit_brauer(double h1, double b1, double h2, double b2, double mu_r_initial);
    /// Monotone (H, B) table, H in A/m ascending, B in T ascending.
    static IronCurve from_bh_table(const Vec& h_values, const Vec& b_values);
};

struct MaterialSet {
    IronCurve iron;
    double nu_magnet = kNu0 / 1.05;
    double remanence = 1.216;                           // T
    std::array<double, 2> magnet_angle = {deg2rad(30.0), deg2rad(15.0)};

    std::array<double, kMaterialCount> sigma = {0.0, 6.7e5, 6.7e5, 0.0};    // S/m
    std::array<double, kMaterialCount> lambda = {16.0, 9.0, 9.0, 0.05};     // W/(m K)
    std::array<double, kMaterialCount> rho = {7650.0, 8400.0, 8400.0, 0.0};  // kg/m^3
    std::array<double, kMaterialCount> young = {200e9, 0.2e9, 0.2e9, 0.2e9};  // Pa
    double poisson = 1.0 / 3.0;

    double ambient = 40.0;       // deg C
    double beta_shaft = 0.235;   // W/(m^2 K)
    double beta_airgap = 260.0;  // W/(m^2 K)
    double stator_resistance = 3.2;  // Ohm
    int turns_per_slot = 60;
    double fill_factor = 0.6;
};

/// h(b) for one material: nu0*b for air, nu_m*(b - B_R e_i) for magnets,
/// nu(|b|^2)*b for iron.
Vec2 h_field(const MaterialSet& mat, MaterialId id, const Vec2& b);

/// Jacobian dh/db: nu*I for linear laws, nu(s)*I + 2 nu'(s) b b^T for iron.
Mat2 differential_reluctivity(const MaterialSet& mat, MaterialId id, const Vec2& b);

/// Linearized reluctivity nu evaluated at s = |b|^2 (frozen value used by the
/// topological-derivative contrast formulas).
double reluctivity_at(const MaterialSet& mat, MaterialId id, double s);

/// Magnet source term H_src = nu_m * B_R * (cos phi, sin phi); zero for
/// non-magnet materials. The weak form right-hand side is +int H_src . curl v.
Vec2 magnet_source(const MaterialSet& mat, MaterialId id);

}  // namespace rotopt
