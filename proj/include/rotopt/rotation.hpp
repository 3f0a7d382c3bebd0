#pragma once

#include "rotopt/mesh.hpp"

namespace rotopt {

/// Discrete sliding-interface coupling. At step n the rotor has turned by
/// n * step_angle (clockwise, following the stator field wave), which moves
/// each rotor interface node onto a stator interface node; wrap-around across
/// the pole boundary flips the sign (antiperiodicity).
struct RotationCoupling {
    int n_steps = 0;
    int units_per_step = 0;   // node intervals per time step
    int intervals = 0;        // interface intervals per pole
    double step_angle = 0.0;  // radians, magnitude

    /// Stator partner of rotor interface node index j (0..intervals) after
    /// `steps` steps, with the antiperiodic sign. Also accepts negative steps.
    std::pair<int, double> partner_of_rotor(int j, int steps) const;
    /// Inverse lookup: rotor node feeding stator interface index p.
    std::pair<int, double> rotor_source_of_stator(int p, int steps) const;
};

/// Throws std::invalid_argument when the interface spacing does not divide
/// the step angle (15 degrees mechanical / n_steps).
RotationCoupling rotation_coupling(const Mesh& mesh, int n_steps);

}  // namespace rotopt
