#pragma once

#include "rotopt/materials.hpp"
#include "rotopt/mesh.hpp"

namespace rotopt {

/// Vertices of the regular unit simplex in R^{M-1} (unit edge lengths, sum
/// zero) and the sector matrices N_i with rows (V_i - V_j)^T.
struct SimplexGeometry {
    int m = 0;
    MatX vertices;                  // M x (M-1)
    std::vector<MatX> n_matrix;     // per material, (M-1) x (M-1)
    std::vector<MatX> n_inverse;

    static SimplexGeometry regular(int m_materials);
};

/// Nearest-vertex sector of a level-set value; ties broken by the lowest
/// material index.
MaterialId material_at(const Vec& psi_value, const SimplexGeometry& simplex);

/// Nodal vector level-set field over the design-domain nodes.
struct LevelSetField {
    MatX psi;  // n_design_nodes x (M-1)
};

struct DesignState {
    Eigen::VectorXi labels;  // MaterialId per design element
    LevelSetField psi;
};

/// Material of any mesh element under a design: fixed regions resolve to
/// their region material, design elements to the label.
MaterialId element_material(const Mesh& mesh, const Eigen::VectorXi& labels, int elem);

/// Element labels induced by the nodal field (centroid evaluation).
Eigen::VectorXi induced_labels(const Mesh& mesh, const LevelSetField& field,
                               const SimplexGeometry& simplex);

/// Initial nodal field from element labels (area-weighted vertex average).
LevelSetField levelset_from_labels(const Mesh& mesh, const ElementCache& cache,
                                   const Eigen::VectorXi& labels, const SimplexGeometry& simplex);

/// Convex combination psi <- (1-s) psi + s g where g is the mapped TD field
/// scaled by its maximal nodal norm.
LevelSetField levelset_update(const LevelSetField& field, const MatX& mapped_td, double s);

/// Nodewise scaling to unit norm; zero vectors left untouched.
LevelSetField renormalize_levelset(const LevelSetField& field);

}  // namespace rotopt
