#pragma once

#include "rotopt/drivecycle.hpp"
#include "rotopt/topder.hpp"

#include <string>

namespace rotopt {

struct ConstraintWeights {
    double w_t = 1e7;
    double w_vm = 1e10;
    double theta_star = 80.0;     // deg C
    double sigma_star = 500e6;    // Pa
    int p_exponent = 16;          // even, >= 2
};

/// C_t = int over magnets of (max{1, theta/theta*} - 1)^2 (vertex rule).
double constraint_temperature(const ThermalOperator& op, const ThermalField& field,
                              double theta_star);
/// dC_t/dtheta, submesh nodal.
Vec constraint_temperature_gradient(const ThermalOperator& op, const ThermalField& field,
                                    double theta_star);

/// C_VM = int over D u D_RI of (1 + (s_VM/(sigma*)^2)^p)^{1/p}; the power
/// mean is evaluated in log scale above 1 to avoid overflow.
double constraint_vonmises(const ElasticOperator& op, const ElasticField& field,
                           double sigma_star, int p_exponent);
/// dC_VM/du, full displacement dofs.
Vec constraint_vonmises_gradient(const ElasticOperator& op, const ElasticField& field,
                                 double sigma_star, int p_exponent);

/// J = -sum_k t_k omega_k Tbar_k at frozen currents.
double objective_torque(const DriveCycle& cycle, const std::vector<double>& torque_per_op);

struct OptimizerOptions {
    ConstraintWeights weights;
    double s_max = 0.5;
    double s_min = 1.0 / 1024.0;
    int max_iters = 400;
    double elastic_speed = -1.0;  // rad/s; <0 uses the drive-cycle peak
    int n_steps = 11;
    MtpaOptions mtpa;
    MqsSolveOptions solve;
    int workers = 1;
    char td_fidelity = 'A';
    int fidelity_b_flips = 200;  // level B: exact re-scoring of the largest entries
    int snapshot_stride = 0;     // 0: no snapshots
    std::string out_dir;
    bool log_efficiency = true;  // per-iteration eddy solves for the E column
};

struct IterationRecord {
    int iter = 0;
    double j_torque = 0.0;
    double c_t = 0.0;
    double c_vm = 0.0;
    double efficiency = 0.0;
    double max_theta = 0.0;
    double max_svm = 0.0;
    double step = 0.0;
    double total = 0.0;
    // active objective before/after the accepted update, both at the same
    // frozen MTPA currents (the line-search decrease contract)
    double frozen_before = 0.0;
    double frozen_after = 0.0;
};

struct OptimizationResult {
    DesignState design;
    std::vector<IterationRecord> history;
    bool converged = false;
    std::string stop_reason;
};

/// Evaluation of one design at frozen currents: objective, penalties, and
/// the metrics logged per iteration.
struct DesignEvaluation {
    double j_torque = 0.0, c_t = 0.0, c_vm = 0.0;
    double max_theta = 0.0, max_svm = 0.0;
    std::vector<double> torque_per_op;
    double total(const ConstraintWeights& w) const {
        return j_torque + w.w_t * c_t + w.w_vm * c_vm;
    }
};

/// Fig. 5 loop: MTPA refresh, primal + adjoint solves, TD field, level-set
/// update with a halving line search on the active objective.
OptimizationResult run_optimization(const Mesh& mesh, const ElementCache& cache,
                                    const MaterialSet& materials, const DriveCycle& cycle,
                                    const DesignState& initial, const OptimizerOptions& options);

}  // namespace rotopt
