#pragma once

#include "rotopt/adjoint.hpp"
#include "rotopt/levelset.hpp"

#include <functional>

namespace rotopt {

/// Per design element of material i: the sensitivity vector
/// (d^{i->j} J)_{j != i} over the targets in ascending material order.
struct TDField {
    MatX values;  // n_design_elems x (M-1)
};

/// Everything the contrast formulas touch. Torque states carry their own
/// adjoints; the eddy/thermal/elastic blocks are optional (active weights).
struct TdContext {
    const Mesh* mesh = nullptr;
    const ElementCache* cache = nullptr;
    const MaterialSet* materials = nullptr;
    const Eigen::VectorXi* labels = nullptr;

    struct MqsBlock {
        const MqsOperator* op = nullptr;
        const PeriodicField* field = nullptr;
        const MqsAdjointField* adjoint = nullptr;
    };
    std::vector<MqsBlock> torque_blocks;  // sigma_m = 0 states, one per OP

    // C_t chain: eddy states + thermal co-state (both already weighted)
    MqsBlock eddy_block;
    const ThermalOperator* thermal_op = nullptr;
    const ThermalField* thermal_field = nullptr;
    const Vec* thermal_costate = nullptr;  // submesh nodal, includes w_t
    double w_t = 0.0;
    double theta_star = 80.0;

    // C_VM terms (elastic co-state already weighted)
    const ElasticOperator* elastic_op = nullptr;
    const ElasticField* elastic_field = nullptr;
    const Vec* elastic_costate = nullptr;  // full dofs, includes w_vm
    double w_vm = 0.0;
};

/// Fidelity level A: polarization contrast formulas on frozen states.
TDField topological_derivative_field(const TdContext& ctx);

/// Mapped nodal field sum_i chi_i N_i^{-1} d^i J, area-averaged to the design
/// nodes.
MatX map_td_to_nodes(const Mesh& mesh, const ElementCache& cache, const TDField& td,
                     const Eigen::VectorXi& labels, const SimplexGeometry& simplex);

/// Fidelity level B oracle: exact objective difference of flipping one design
/// element to the target material.
double flip_objective_delta(const std::function<double(const Eigen::VectorXi&)>& objective,
                            const Eigen::VectorXi& labels, int design_elem, MaterialId target,
                            double base_value);

/// Column index of target material j in the TD vector of material i.
int td_column(MaterialId current, MaterialId target);
/// Inverse of td_column.
MaterialId td_target(MaterialId current, int column);

}  // namespace rotopt
