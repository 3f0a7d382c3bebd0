#pragma once

#include "rotopt/mesh.hpp"

#include <map>
#include <string>

namespace rotopt {

/// Legacy ASCII VTK export: POINTS, CELLS, CELL_DATA (region + any extra
/// cell fields), POINT_DATA (any extra point fields, 1 or 3 components).
struct VtkFields {
    std::map<std::string, Vec> cell_scalars;
    std::map<std::string, Vec> point_scalars;
    std::map<std::string, MatX> point_vectors;  // n x 3
};

void write_vtk(const std::string& path, const Mesh& mesh, const VtkFields& fields = {});

/// Reads back a legacy ASCII VTK unstructured grid written by write_vtk;
/// returns nodes/triangles/regions and any CELL_DATA scalar fields.
struct VtkGrid {
    Eigen::Matrix<double, Eigen::Dynamic, 2> nodes;
    Eigen::Matrix<int, Eigen::Dynamic, 3> tris;
    std::map<std::string, Vec> cell_scalars;
};

VtkGrid read_vtk(const std::string& path);

}  // namespace rotopt
