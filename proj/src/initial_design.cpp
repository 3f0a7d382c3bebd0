#include "rotopt/initial_design.hpp"

#include "rotopt/vtk.hpp"

#include <cmath>

namespace rotopt {

Eigen::VectorXi vtype_labels(const Mesh& mesh, const ElementCache& cache,
                             const MaterialSet& materials, const VTypeLayout& layout) {
    Eigen::VectorXi labels = Eigen::VectorXi::Constant(
        static_cast<int>(mesh.design_elems.size()), static_cast<int>(MaterialId::Iron));
    const double pole_axis = mesh.geometry.pole_span() / 2.0;
    for (size_t d = 0; d < mesh.design_elems.size(); ++d) {
        const Vec2 c = cache.centroid.row(mesh.design_elems[d]);
        for (int m = 0; m < 2; ++m) {
            const double axis = pole_axis + (m == 0 ? layout.half_opening : -layout.half_opening);
            const double mag_dir = materials.magnet_angle[m];
            const Vec2 center(layout.bar_center_radius * std::cos(axis),
                              layout.bar_center_radius * std::sin(axis));
            const Vec2 long_dir(std::cos(mag_dir + kPi / 2.0), std::sin(mag_dir + kPi / 2.0));
            const Vec2 rel = c - center;
            const double along = rel.dot(long_dir);
            const double across = rel.dot(Vec2(-long_dir.y(), long_dir.x()));
            if (std::abs(along) < layout.bar_length / 2.0 &&
                std::abs(across) < layout.bar_width / 2.0)
                labels[static_cast<int>(d)] =
                    static_cast<int>(m == 0 ? MaterialId::MagnetOne : MaterialId::MagnetTwo);
        }
    }
    return labels;
}

Eigen::VectorXi labels_from_vtk(const Mesh& mesh, const std::string& path) {
    const VtkGrid grid = read_vtk(path);
    const auto it = grid.cell_scalars.find("material");
    if (it == grid.cell_scalars.end())
        throw std::runtime_error("initial design: VTK file lacks a 'material' cell field");
    if (grid.tris.rows() != mesh.tris.rows())
        throw std::runtime_error("initial design: VTK cell count does not match the mesh");
    Eigen::VectorXi labels(static_cast<int>(mesh.design_elems.size()));
    for (size_t d = 0; d < mesh.design_elems.size(); ++d) {
        const int m = static_cast<int>(std::lround(it->second[mesh.design_elems[d]]));
        if (m < 0 || m >= kMaterialCount)
            throw std::runtime_error("initial design: material id out of range in VTK file");
        labels[static_cast<int>(d)] = m;
    }
    return labels;
}

DesignState make_design(const Mesh& mesh, const ElementCache& cache,
                        const Eigen::VectorXi& labels) {
    DesignState design;
    design.labels = labels;
    design.psi = levelset_from_labels(mesh, cache, labels,
                                      SimplexGeometry::regular(kMaterialCount));
    return design;
}

}  // namespace rotopt
