#pragma once

#include "rotopt/initial_design.hpp"
#include "rotopt/mesh_builder.hpp"
#include "rotopt/optimizer.hpp"

#include <string>

namespace rotopt {

/// Full run configuration; defaults reproduce the reference machine.
struct RunConfig {
    MachineGeometry geometry;
    MeshOptions mesh;
    MaterialSet materials;
    std::string bh_table_path;
    // exponential iron-curve anchors used when no table is given
    double bh_fit_h1 = 500.0, bh_fit_b1 = 1.2;
    double bh_fit_h2 = 1e4, bh_fit_b2 = 1.8;
    double bh_fit_mu_r = 2000.0;

    int n_steps = 11;

    std::string trace_path;  // empty: bundled synthetic trace
    int trace_samples = 1800;
    double peak_speed_rpm = 27000.0;
    double peak_torque = 160.0;
    int speed_bins = 6;
    int torque_bins = 5;

    MtpaOptions mtpa;
    OptimizerOptions optimizer;
    double elastic_speed_rpm = -1.0;  // <0: drive-cycle peak

    VTypeLayout initial_layout;
    std::string initial_vtk;  // overrides the V layout when set

    std::string out_dir = "out";
    int workers = 1;
    unsigned seed = 0;
};

/// Parses the documented key = value format; unknown keys, unreadable files
/// and out-of-range values raise std::runtime_error naming the key. An empty
/// file yields the defaults.
RunConfig parse_config(const std::string& path);
RunConfig default_config();

/// Resolves the iron law (table file or fitted exponential model).
void finalize_materials(RunConfig& config);

/// The documented key list with current values, for the run manifest.
std::string config_echo(const RunConfig& config);

}  // namespace rotopt
