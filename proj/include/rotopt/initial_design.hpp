#pragma once

#include "rotopt/levelset.hpp"

#include <string>

namespace rotopt {

/// V-type two-magnet rotor layout: one rectangular bar per magnet, placed
/// symmetrically around the pole axis, long side perpendicular to the
/// magnetization direction. Everything else in the design domain is iron.
struct VTypeLayout {
    double bar_center_radius = 0.040;        // m
    double half_opening = deg2rad(7.0);      // bar center offset from the pole axis
    double bar_length = 0.016;               // m
    double bar_width = 0.004;                // m
};

Eigen::VectorXi vtype_labels(const Mesh& mesh, const ElementCache& cache,
                             const MaterialSet& materials, const VTypeLayout& layout);

/// Element labels from a VTK snapshot (CELL_DATA field "material").
Eigen::VectorXi labels_from_vtk(const Mesh& mesh, const std::string& path);

DesignState make_design(const Mesh& mesh, const ElementCache& cache,
                        const Eigen::VectorXi& labels);

}  // namespace rotopt
