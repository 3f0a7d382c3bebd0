#pragma once

#include "rotopt/elasticity.hpp"
#include "rotopt/mqs.hpp"
#include "rotopt/thermal.hpp"

namespace rotopt {

struct MqsAdjointField {
    std::vector<Vec> p;  // full nodal co-state per step
};

/// Solves the transposed cyclic system J^T q = -g for objective gradients
/// g_n = dF/da^n (full space). The adjoint couples the steps with reversed
/// time direction and the same periodic closure as the primal.
MqsAdjointField solve_mqs_adjoint(const MqsOperator& op, const PeriodicField& field,
                                  const std::vector<Vec>& objective_gradients);

/// dF/da^n for F = weight * average mortar torque of the field.
std::vector<Vec> torque_objective_gradients(const MqsOperator& op, const PeriodicField& field,
                                            double weight);

/// dF/da^n for F = sum_e weight_e * A_e * p^EC_e(a), the inner product of an
/// element weight field (thermal adjoint average) with the EC loss density.
/// weight_elem indexes parent-mesh elements.
std::vector<Vec> ec_source_gradients(const MqsOperator& op, const PeriodicField& field,
                                     const Vec& weight_elem);

/// Thermal co-state for a nodal objective gradient: K q = -dF/dtheta.
Vec thermal_adjoint(const ThermalOperator& op, const Vec& dF_dtheta_sub);

/// Elastic co-state: K w = -dF/du.
Vec elastic_adjoint(const ElasticOperator& op, const Vec& dF_du);

/// Directional derivative of an objective under a multiplicative element
/// perturbation of the magnetic material law, evaluated from primal and
/// adjoint states: dJ/deps = sum_n sum_e eta_e (h_e . curl p_e) A_e.
double mqs_material_directional_derivative(const MqsOperator& op, const PeriodicField& field,
                                           const MqsAdjointField& adjoint, const Vec& eta_elem);

}  // namespace rotopt
