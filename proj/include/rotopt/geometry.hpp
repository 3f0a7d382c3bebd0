#pragma once

#include "rotopt/common.hpp"

namespace rotopt {

/// Cross-section geometry of one pole of the machine. All lengths in meters.
/// Radii must satisfy rotor_inner < shaft < ring_inner < rotor_outer <
/// interface < stator_inner < stator_outer.
struct MachineGeometry {
    int pole_pairs = 4;
    int slot_count = 48;
    double rotor_inner_radius = 17.7e-3;
    double rotor_outer_radius = 52.4e-3;
    double stator_inner_radius = 52.8e-3;
    double stator_outer_radius = 77.3e-3;
    double axial_length = 90e-3;
    // sliding-interface circle, mid-airgap by default
    double interface_radius = 52.6e-3;

    // rotor partition: shaft annulus [rotor_inner, shaft_radius],
    // design domain [shaft_radius, ring_inner_radius],
    // iron ring [ring_inner_radius, rotor_outer_radius]
    double shaft_radius = 28e-3;
    double ring_inner_radius = 50e-3;

    // winding slot layout inside the stator
    double slot_inner_offset = 0.8e-3;
    double slot_depth = 14e-3;
    double slot_width_frac = 0.5;

    double pole_span() const { return kPi / pole_pairs; }
    double slot_pitch() const { return 2.0 * kPi / slot_count; }
    int slots_per_pole() const { return slot_count / (2 * pole_pairs); }
    double airgap_thickness() const { return stator_inner_radius - rotor_outer_radius; }

    void validate() const;
};

}  // namespace rotopt
