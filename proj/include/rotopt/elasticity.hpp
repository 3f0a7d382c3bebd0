#pragma once

#include "rotopt/constraints.hpp"
#include "rotopt/levelset.hpp"
#include "rotopt/mesh.hpp"

namespace rotopt {

/// Plane-stress elasticity on the rotor under centrifugal load, clamped at
/// the shaft interface, traction-free rim, rotated periodic radial cuts.
struct ElasticField {
    Vec u;               // 2 dofs per submesh node (x0,y0,x1,y1,...)
    double speed = 0.0;  // rad/s
    MatX stress;         // per element: columns sxx, syy, sxy
};

struct ElasticOperator {
    const Mesh* mesh = nullptr;
    SubMesh sub;
    ElementCache cache;
    DofMap map;
    std::vector<MaterialId> elem_material;
    std::vector<Mat3> c_voigt;  // plane-stress stiffness per element
    Vec rho_elem;
    const MaterialSet* materials = nullptr;
    SpMat stiffness_red;
};

ElasticOperator build_elastic_operator(const Mesh& mesh, const MaterialSet& materials,
                                       const Eigen::VectorXi& design_labels);

/// Plane-stress Voigt stiffness for (E, nu).
Mat3 plane_stress_stiffness(double young, double poisson);

/// Voigt strain (exx, eyy, gxy) of one element from the displacement vector.
Vec3 element_strain(const ElasticOperator& op, const Vec& u, int elem);

ElasticField solve_elasticity(const ElasticOperator& op, double speed);

/// Squared Von-Mises stress per element: 1/2 (3 |sigma|^2 - tr(sigma)^2).
Vec von_mises_sq(const ElasticField& field);
double von_mises_sq_of(double sxx, double syy, double sxy);

/// Virtual work check data: (strain energy, load work).
std::pair<double, double> virtual_work(const ElasticOperator& op, const ElasticField& field);

/// Centrifugal load vector (full DOF space) at unit omega^2.
Vec centrifugal_load_unit(const ElasticOperator& op);

}  // namespace rotopt
