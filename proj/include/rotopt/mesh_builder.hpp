#pragma once

#include "rotopt/mesh.hpp"

namespace rotopt {

struct MeshOptions {
    double target_edge_length = 0.95e-3;
    // interface spacing must divide the step angle, so the builder needs the
    // intended number of time steps per sixth period
    int n_steps = 11;
    // radial element layers per airgap half; the total across the gap must
    // resolve at least 3 layers
    int airgap_layers_per_half = 2;
};

/// Builds the one-pole machine mesh. Throws std::invalid_argument on invalid
/// geometry or airgap resolution below 3 radial layers.
Mesh build_machine_mesh(const MachineGeometry& geometry, const MeshOptions& options);

inline Mesh build_machine_mesh(const MachineGeometry& geometry, double target_edge_length) {
    MeshOptions opt;
    opt.target_edge_length = target_edge_length;
    return build_machine_mesh(geometry, opt);
}

}  // namespace rotopt
