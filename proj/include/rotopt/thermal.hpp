#pragma once

#include "rotopt/constraints.hpp"
#include "rotopt/levelset.hpp"
#include "rotopt/mesh.hpp"

namespace rotopt {

/// Static heat conduction on the rotor (design domain + iron ring) with
/// Robin exchange to shaft and airgap and periodic radial cuts.
struct ThermalField {
    Vec theta;  // nodal temperature on the submesh, deg C
    double ambient = 40.0;
    double beta_shaft = 0.235;
    double beta_airgap = 260.0;
};

/// Design-bound thermal operator (reused by solves and adjoints).
struct ThermalOperator {
    const Mesh* mesh = nullptr;
    SubMesh sub;
    ElementCache cache;
    DofMap map;
    Vec lambda_elem;                 // W/(m K) per sub element
    std::vector<MaterialId> elem_material;
    const MaterialSet* materials = nullptr;
    SpMat stiffness_red;             // reduced conduction + Robin matrix
    Vec robin_rhs;                   // full-space Robin ambient load
};

ThermalOperator build_thermal_operator(const Mesh& mesh, const MaterialSet& materials,
                                       const Eigen::VectorXi& design_labels);

/// Solves -div(lambda grad theta) = source with the Robin boundaries.
/// `source` is per parent-mesh element (W/m^3); entries outside the rotor
/// submesh are ignored. Throws on non-positive conductivity.
ThermalField solve_heat(const ThermalOperator& op, const Vec& source_per_element);

/// Maximum nodal temperature over the magnet elements; ambient when no
/// magnets exist.
double max_magnet_temperature(const ThermalOperator& op, const ThermalField& field);

/// Total Robin boundary outflow (W/m per axial meter scale of the 2D model).
double robin_outflow(const ThermalOperator& op, const ThermalField& field);
double source_integral(const ThermalOperator& op, const Vec& source_per_element);

}  // namespace rotopt
