#pragma once

#include "rotopt/constraints.hpp"
#include "rotopt/fem.hpp"
#include "rotopt/levelset.hpp"
#include "rotopt/rotation.hpp"

namespace rotopt {

/// Time discretization of one sixth of an electrical period (a rotation by
/// pole_span/3, 15 degrees mechanical for 4 pole pairs).
struct TimeGrid {
    int n_steps = 11;
    double mech_speed = rpm2rads(1000.0);  // rad/s
    int pole_pairs = 4;

    double period_sixth() const { return kPi / (3.0 * pole_pairs * mech_speed); }
    double tau() const { return period_sixth() / n_steps; }
    double mech_angle(double n) const { return kPi / pole_pairs / 3.0 * n / n_steps; }
    double elec_angle(double n) const { return kPi / 3.0 * n / n_steps; }
};

struct CurrentExcitation {
    double amplitude = 0.0;  // A
    double angle = 0.0;      // rad
    int turns_per_slot = 60;
    double fill_factor = 0.6;
};

struct PeriodicField {
    std::vector<Vec> a;       // N full nodal snapshots (rotor part in rotor frame)
    std::vector<Vec> lambda;  // per step, weak interface multiplier on the stator circle
    TimeGrid grid;
    CurrentExcitation excitation;
    bool with_eddies = false;
};

/// Assembled, design-bound magnetoquasistatic operator. Immutable; solver
/// instances may share it read-only.
struct MqsOperator {
    const Mesh* mesh = nullptr;
    const ElementCache* cache = nullptr;
    const MaterialSet* materials = nullptr;
    TimeGrid grid;
    RotationCoupling coupling;
    std::vector<DofMap> maps;               // per-step reduced DOF maps
    std::vector<MaterialId> elem_material;  // resolved per element
    Vec sigma_elem;                         // S/m per element
    SpMat sigma_mass;                       // conductivity-weighted magnet mass (no 1/tau)
    double area_aplus = 0.0;                // |D_{A+}|
    std::vector<int> stator_elems;          // elements on the lab-frame side
    std::vector<int> rotor_gap_elems;       // rotor airgap half (torque transport)
    std::array<std::vector<int>, 3> phase_elems;  // A+, C-, B+
    // airgap elements adjacent to each stator interface node: the flux trace
    // of the torque formula is taken from the nu0 side, like the multiplier
    std::vector<std::vector<int>> stator_if_adjacency;
    Eigen::VectorXi rotor_if_index;   // node -> rotor interface position or -1
    Eigen::VectorXi stator_if_index;  // node -> stator interface position or -1

    int n_nodes() const { return mesh->num_nodes(); }
};

MqsOperator build_mqs_operator(const Mesh& mesh, const ElementCache& cache,
                               const MaterialSet& materials, const Eigen::VectorXi& design_labels,
                               const TimeGrid& grid);

/// Three-phase winding current density at one time step, per element (A/m^2).
/// Fractional steps evaluate the phases at intermediate electrical angles.
Vec current_density(const Mesh& mesh, const ElementCache& cache, const CurrentExcitation& exc,
                    const TimeGrid& grid, double step, double area_aplus);
Vec current_density(const MqsOperator& op, const CurrentExcitation& exc, double step);

/// Full-space nonlinear residual of one step (no mass term): int h(curl a) .
/// curl v - f(v).
Vec step_residual(const MqsOperator& op, const CurrentExcitation& exc, int step, const Vec& a_full);
/// Full-space tangent of the same.
SpMat step_tangent(const MqsOperator& op, const Vec& a_full);
/// Tangent restricted to the lab-frame (stator) elements.
SpMat stator_tangent(const MqsOperator& op, const Vec& a_full);

struct MqsSolveOptions {
    double tol_rel = 1e-8;
    int max_newton = 60;
    bool marching_fallback = false;  // fixed-point over periods instead of monolithic
    int max_period_sweeps = 200;
    double periodic_tol = 1e-9;
    bool trace = false;
};

/// Solves the N-step time-periodic system. With with_eddies=false the steps
/// decouple into independent static solves; otherwise the cyclic system is
/// solved monolithically (or by marching over periods when requested).
/// Throws std::runtime_error with the last residual on Newton failure.
PeriodicField solve_periodic_mqs(const MqsOperator& op, const CurrentExcitation& exc,
                                 bool with_eddies, const MqsSolveOptions& options = {});

/// Mortar-style torque from the interface multiplier, averaged over the
/// steps. Full machine, driving-direction positive.
double torque_step(const MqsOperator& op, const PeriodicField& field, int step);
double average_torque(const MqsOperator& op, const PeriodicField& field);

/// Maxwell stress torque through a circle of the given radius (must lie
/// strictly inside the airgap). Full machine, driving-direction positive.
double maxwell_stress_torque(const MqsOperator& op, const Vec& a_full, double radius);

/// P^J = R_S I^2 / 2.
double joule_losses(const CurrentExcitation& exc, double stator_resistance);

/// Average EC loss density of one magnet region, per element (W/m^3), from
/// the per-step potential increments of a periodic field.
Vec ec_loss_density(const MqsOperator& op, const PeriodicField& field, MaterialId magnet);
/// Kernel over explicit increments (one vector of element-centroid increments
/// per step); exposed for the hand-computed oracles.
Vec ec_loss_density_from_increments(const Mesh& mesh, const ElementCache& cache,
                                    const std::vector<char>& in_region,
                                    const std::vector<Vec>& increments, double sigma, double tau);

/// P^EC = 2 N_pp l_z int p dx over the magnets.
double ec_losses(const MqsOperator& op, const Vec& density);

/// Element-centroid increment of step n (cyclic), rotor elements only.
Vec element_increments(const MqsOperator& op, const PeriodicField& field, int step);

struct EnergyBalance {
    double input = 0.0;       // electrical energy from the winding over t1
    double mechanical = 0.0;  // torque work over t1
    double eddy = 0.0;        // EC dissipation over t1
};
EnergyBalance energy_balance(const MqsOperator& op, const PeriodicField& field);

/// Value of a lab-frame (stator) nodal field transported back one sixth
/// period; rotor entries copied unchanged.
Vec stator_sixth_shift(const Mesh& mesh, const Vec& a_full);

}  // namespace rotopt
