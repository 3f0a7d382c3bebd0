#include "rotopt/optimizer.hpp"

#include "rotopt/csv.hpp"
#include "rotopt/vtk.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <thread>

namespace rotopt {

double constraint_temperature(const ThermalOperator& op, const ThermalField& field,
                              double theta_star) {
    if (!(theta_star > 0.0)) throw std::invalid_argument("constraint: theta_star must be positive");
    double acc = 0.0;
    for (int se = 0; se < op.sub.num_tris(); ++se) {
        const MaterialId m = op.elem_material[se];
        if (m != MaterialId::MagnetOne && m != MaterialId::MagnetTwo) continue;
        double hinge_sq = 0.0;
        for (int v = 0; v < 3; ++v) {
            const double h = std::max(0.0, field.theta[op.sub.tris(se, v)] / theta_star - 1.0);
            hinge_sq += h * h;
        }
        acc += op.cache.area[se] * hinge_sq / 3.0;
    }
    return acc;
}

Vec constraint_temperature_gradient(const ThermalOperator& op, const ThermalField& field,
                                    double theta_star) {
    Vec g = Vec::Zero(op.sub.num_nodes());
    for (int se = 0; se < op.sub.num_tris(); ++se) {
        const MaterialId m = op.elem_material[se];
        if (m != MaterialId::MagnetOne && m != MaterialId::MagnetTwo) continue;
        for (int v = 0; v < 3; ++v) {
            const int node = op.sub.tris(se, v);
            const double h = std::max(0.0, field.theta[node] / theta_star - 1.0);
            g[node] += op.cache.area[se] / 3.0 * 2.0 * h / theta_star;
        }
    }
    return g;
}

namespace {

// (1 + x^p)^{1/p} evaluated in log scale for large x
double power_mean_term(double x, int p) {
    if (x <= 0.0) return 1.0;
    if (x <= 1.0) return std::pow(1.0 + std::pow(x, p), 1.0 / p);
    return x * std::exp(std::log1p(std::pow(x, -p)) / p);
}

// d/dx of the above
double power_mean_term_dx(double x, int p) {
    if (x <= 0.0) return 0.0;
    if (x <= 1.0) {
        const double xp = std::pow(x, p);
        return std::pow(1.0 + xp, 1.0 / p - 1.0) * std::pow(x, p - 1);
    }
    const double t = std::pow(x, -p);
    return power_mean_term(x, p) / (x * (1.0 + t));
}

}  // namespace

double constraint_vonmises(const ElasticOperator& op, const ElasticField& field,
                           double sigma_star, int p_exponent) {
    if (p_exponent < 2 || p_exponent % 2 != 0)
        throw std::invalid_argument("constraint: p must be even and >= 2");
    const double s_star = sigma_star * sigma_star;
    const Vec svm = von_mises_sq(field);
    double acc = 0.0;
    for (int se = 0; se < op.sub.num_tris(); ++se)
        acc += op.cache.area[se] * power_mean_term(svm[se] / s_star, p_exponent);
    return acc;
}

Vec constraint_vonmises_gradient(const ElasticOperator& op, const ElasticField& field,
                                 double sigma_star, int p_exponent) {
    const double s_star = sigma_star * sigma_star;
    Vec g = Vec::Zero(2 * op.sub.num_nodes());
    for (int se = 0; se < op.sub.num_tris(); ++se) {
        const double sxx = field.stress(se, 0), syy = field.stress(se, 1),
                     sxy = field.stress(se, 2);
        const double svm = von_mises_sq_of(sxx, syy, sxy);
        const double dgdx = power_mean_term_dx(svm / s_star, p_exponent) / s_star;
        if (dgdx == 0.0) continue;
        // ds_vm/dsigma in Voigt components
        const double tr = sxx + syy;
        const Vec3 ds(3.0 * sxx - tr, 3.0 * syy - tr, 6.0 * sxy);
        // chain through sigma = C eps(u)
        const Vec3 dC = op.c_voigt[se].transpose() * ds;
        const double w = op.cache.area[se] * dgdx;
        const auto& grad = op.cache.grad[se];
        for (int v = 0; v < 3; ++v) {
            // B^T dC for node v
            g[2 * op.sub.tris(se, v)] += w * (grad(0, v) * dC[0] + grad(1, v) * dC[2]);
            g[2 * op.sub.tris(se, v) + 1] += w * (grad(1, v) * dC[1] + grad(0, v) * dC[2]);
        }
    }
    return g;
}

double objective_torque(const DriveCycle& cycle, const std::vector<double>& torque_per_op) {
    if (static_cast<int>(torque_per_op.size()) != cycle.size())
        throw std::invalid_argument("objective: torque list does not match the cycle");
    double acc = 0.0;
    for (int k = 0; k < cycle.size(); ++k)
        acc -= cycle.points[k].weight * cycle.points[k].speed * torque_per_op[k];
    return acc;
}

namespace {

void parallel_over(int count, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(workers, count); ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

struct LoopState {
    const Mesh* mesh;
    const ElementCache* cache;
    const MaterialSet* materials;
    const DriveCycle* cycle;
    const OptimizerOptions* opt;
    std::vector<std::pair<double, double>> currents;  // frozen (I_k, beta_k)
    double elastic_speed = 0.0;
};

CurrentExcitation excitation_of(const LoopState& st, int k) {
    CurrentExcitation exc;
    exc.amplitude = st.currents[k].first;
    exc.angle = st.currents[k].second;
    exc.turns_per_slot = st.materials->turns_per_slot;
    exc.fill_factor = st.materials->fill_factor;
    return exc;
}

// full evaluation at frozen currents; the solved states are kept for the
// adjoint pass
struct EvaluationStates {
    DesignEvaluation eval;
    std::vector<PeriodicField> torque_fields;
    MqsOperator op_torque;         // shared for all sigma=0 solves
    MqsOperator op_eddy;           // thermal-OP speed
    PeriodicField eddy_field;
    bool has_eddy = false;
    ThermalOperator thermal_op;
    ThermalField thermal_field;
    ElasticOperator elastic_op;
    ElasticField elastic_field;
    Vec ec_density;
};

EvaluationStates evaluate_design(const LoopState& st, const Eigen::VectorXi& labels) {
    EvaluationStates out;
    const DriveCycle& cycle = *st.cycle;
    TimeGrid grid;
    grid.n_steps = st.opt->n_steps;
    grid.pole_pairs = st.mesh->geometry.pole_pairs;
    grid.mech_speed = cycle.points[cycle.thermal_op].speed;
    out.op_torque = build_mqs_operator(*st.mesh, *st.cache, *st.materials, labels, grid);

    out.torque_fields.resize(cycle.size());
    out.eval.torque_per_op.resize(cycle.size());
    parallel_over(cycle.size(), st.opt->workers, [&](int k) {
        out.torque_fields[k] =
            solve_periodic_mqs(out.op_torque, excitation_of(st, k), false, st.opt->solve);
        out.eval.torque_per_op[k] = average_torque(out.op_torque, out.torque_fields[k]);
    });
    out.eval.j_torque = objective_torque(cycle, out.eval.torque_per_op);

    // thermal chain at the critical OP
    out.op_eddy = out.op_torque;  // same maps/materials; speed already the thermal OP's
    out.eddy_field =
        solve_periodic_mqs(out.op_eddy, excitation_of(st, cycle.thermal_op), true, st.opt->solve);
    out.has_eddy = true;
    out.ec_density = ec_loss_density(out.op_eddy, out.eddy_field, MaterialId::MagnetOne) +
                     ec_loss_density(out.op_eddy, out.eddy_field, MaterialId::MagnetTwo);
    out.thermal_op = build_thermal_operator(*st.mesh, *st.materials, labels);
    out.thermal_field = solve_heat(out.thermal_op, out.ec_density);
    out.eval.max_theta = max_magnet_temperature(out.thermal_op, out.thermal_field);
    out.eval.c_t =
        constraint_temperature(out.thermal_op, out.thermal_field, st.opt->weights.theta_star);

    out.elastic_op = build_elastic_operator(*st.mesh, *st.materials, labels);
    out.elastic_field = solve_elasticity(out.elastic_op, st.elastic_speed);
    out.eval.max_svm = std::sqrt(von_mises_sq(out.elastic_field).maxCoeff());
    out.eval.c_vm = constraint_vonmises(out.elastic_op, out.elastic_field,
                                        st.opt->weights.sigma_star, st.opt->weights.p_exponent);
    return out;
}

// cheaper variant for line-search trials: only the terms of the active
// objective are solved
DesignEvaluation evaluate_active(const LoopState& st, const Eigen::VectorXi& labels) {
    DesignEvaluation eval;
    const DriveCycle& cycle = *st.cycle;
    TimeGrid grid;
    grid.n_steps = st.opt->n_steps;
    grid.pole_pairs = st.mesh->geometry.pole_pairs;
    grid.mech_speed = cycle.points[cycle.thermal_op].speed;
    MqsOperator op = build_mqs_operator(*st.mesh, *st.cache, *st.materials, labels, grid);
    eval.torque_per_op.resize(cycle.size());
    parallel_over(cycle.size(), st.opt->workers, [&](int k) {
        const PeriodicField f = solve_periodic_mqs(op, excitation_of(st, k), false, st.opt->solve);
        eval.torque_per_op[k] = average_torque(op, f);
    });
    eval.j_torque = objective_torque(cycle, eval.torque_per_op);
    if (st.opt->weights.w_t > 0.0) {
        const PeriodicField ef =
            solve_periodic_mqs(op, excitation_of(st, cycle.thermal_op), true, st.opt->solve);
        const Vec density = ec_loss_density(op, ef, MaterialId::MagnetOne) +
                            ec_loss_density(op, ef, MaterialId::MagnetTwo);
        ThermalOperator top = build_thermal_operator(*st.mesh, *st.materials, labels);
        ThermalField tf = solve_heat(top, density);
        eval.c_t = constraint_temperature(top, tf, st.opt->weights.theta_star);
        eval.max_theta = max_magnet_temperature(top, tf);
    }
    if (st.opt->weights.w_vm > 0.0) {
        ElasticOperator eop = build_elastic_operator(*st.mesh, *st.materials, labels);
        ElasticField ef = solve_elasticity(eop, st.elastic_speed);
        eval.c_vm = constraint_vonmises(eop, ef, st.opt->weights.sigma_star,
                                        st.opt->weights.p_exponent);
        eval.max_svm = std::sqrt(von_mises_sq(ef).maxCoeff());
    }
    return eval;
}

TDField compute_td(const LoopState& st, const Eigen::VectorXi& labels, EvaluationStates& states) {
    TdContext ctx;
    ctx.mesh = st.mesh;
    ctx.cache = st.cache;
    ctx.materials = st.materials;
    ctx.labels = &labels;
    const DriveCycle& cycle = *st.cycle;

    // torque adjoints per OP (objective J = -sum t_k w_k Tbar_k)
    std::vector<MqsAdjointField> torque_adjoints(cycle.size());
    parallel_over(cycle.size(), st.opt->workers, [&](int k) {
        const double weight = -cycle.points[k].weight * cycle.points[k].speed;
        const std::vector<Vec> grads =
            torque_objective_gradients(states.op_torque, states.torque_fields[k], weight);
        torque_adjoints[k] = solve_mqs_adjoint(states.op_torque, states.torque_fields[k], grads);
    });
    ctx.torque_blocks.resize(cycle.size());
    for (int k = 0; k < cycle.size(); ++k)
        ctx.torque_blocks[k] = {&states.op_torque, &states.torque_fields[k], &torque_adjoints[k]};

    // C_t chain
    Vec thermal_q;
    MqsAdjointField eddy_adjoint;
    if (st.opt->weights.w_t > 0.0) {
        const Vec dct = st.opt->weights.w_t *
                        constraint_temperature_gradient(states.thermal_op, states.thermal_field,
                                                        st.opt->weights.theta_star);
        thermal_q = thermal_adjoint(states.thermal_op, dct);

        // element-averaged co-state drives the EC-source chain
        Vec q_elem = Vec::Zero(st.mesh->num_tris());
        for (int se = 0; se < states.thermal_op.sub.num_tris(); ++se) {
            double q = 0.0;
            for (int v = 0; v < 3; ++v) q += thermal_q[states.thermal_op.sub.tris(se, v)];
            q_elem[states.thermal_op.sub.elem_to_parent[se]] = q / 3.0;
        }
        std::vector<Vec> grads = ec_source_gradients(states.op_eddy, states.eddy_field, q_elem);
        for (Vec& gvec : grads) gvec = -gvec;  // L contains -q^T S(a)
        eddy_adjoint = solve_mqs_adjoint(states.op_eddy, states.eddy_field, grads);

        ctx.eddy_block = {&states.op_eddy, &states.eddy_field, &eddy_adjoint};
        ctx.thermal_op = &states.thermal_op;
        ctx.thermal_field = &states.thermal_field;
        ctx.thermal_costate = &thermal_q;
        ctx.w_t = st.opt->weights.w_t;
        ctx.theta_star = st.opt->weights.theta_star;
    }

    // C_VM terms
    Vec elastic_w;
    if (st.opt->weights.w_vm > 0.0) {
        const Vec dcv = st.opt->weights.w_vm *
                        constraint_vonmises_gradient(states.elastic_op, states.elastic_field,
                                                     st.opt->weights.sigma_star,
                                                     st.opt->weights.p_exponent);
        elastic_w = elastic_adjoint(states.elastic_op, dcv);
        ctx.elastic_op = &states.elastic_op;
        ctx.elastic_field = &states.elastic_field;
        ctx.elastic_costate = &elastic_w;
        ctx.w_vm = st.opt->weights.w_vm;
    }

    TDField td = topological_derivative_field(ctx);

    if (st.opt->td_fidelity == 'B') {
        // exact re-scoring of the largest entries by element flips
        struct Entry {
            double mag;
            int d, col;
        };
        std::vector<Entry> entries;
        for (int d = 0; d < td.values.rows(); ++d)
            for (int col = 0; col < td.values.cols(); ++col)
                entries.push_back({std::abs(td.values(d, col)), d, col});
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.mag > b.mag; });
        auto objective = [&](const Eigen::VectorXi& trial) {
            return evaluate_active(st, trial).total(st.opt->weights);
        };
        const double base = objective(labels);
        const int n_flips = std::min<int>(st.opt->fidelity_b_flips,
                                          static_cast<int>(entries.size()));
        for (int i = 0; i < n_flips; ++i) {
            const auto& en = entries[i];
            const MaterialId cur = static_cast<MaterialId>(labels[en.d]);
            const MaterialId tgt = td_target(cur, en.col);
            const double area = st.cache->area[st.mesh->design_elems[en.d]];
            td.values(en.d, en.col) =
                flip_objective_delta(objective, labels, en.d, tgt, base) / area;
        }
    }
    return td;
}

}  // namespace

OptimizationResult run_optimization(const Mesh& mesh, const ElementCache& cache,
                                    const MaterialSet& materials, const DriveCycle& cycle,
                                    const DesignState& initial, const OptimizerOptions& options) {
    LoopState st;
    st.mesh = &mesh;
    st.cache = &cache;
    st.materials = &materials;
    st.cycle = &cycle;
    st.opt = &options;
    st.elastic_speed = options.elastic_speed > 0.0 ? options.elastic_speed : cycle.peak_speed;

    const SimplexGeometry simplex = SimplexGeometry::regular(kMaterialCount);
    OptimizationResult result;
    result.design = initial;
    if (result.design.psi.psi.rows() == 0)
        result.design.psi = levelset_from_labels(mesh, cache, result.design.labels, simplex);

    const bool writing = !options.out_dir.empty();
    if (writing) std::filesystem::create_directories(options.out_dir);
    CsvTable log;
    log.header = {"iter", "J", "C_t", "C_VM", "E", "max_theta_C", "max_svm_Pa", "step"};

    std::vector<double> warm_angles;
    TimeGrid grid;
    grid.n_steps = options.n_steps;
    grid.pole_pairs = mesh.geometry.pole_pairs;

    auto snapshot = [&](int iter) {
        if (!writing || options.snapshot_stride <= 0 || iter % options.snapshot_stride != 0)
            return;
        VtkFields fields;
        Vec matfield = Vec::Zero(mesh.num_tris());
        for (int e = 0; e < mesh.num_tris(); ++e) {
            const int d = mesh.design_elem_index[e];
            matfield[e] = d >= 0 ? result.design.labels[d] : -1.0;
        }
        fields.cell_scalars["material"] = matfield;
        MatX psi3 = MatX::Zero(mesh.num_nodes(), 3);
        for (size_t i = 0; i < mesh.design_nodes.size(); ++i)
            psi3.row(mesh.design_nodes[i]) = result.design.psi.psi.row(static_cast<int>(i));
        fields.point_vectors["psi"] = psi3;
        char name[64];
        std::snprintf(name, sizeof(name), "design_%04d.vtk", iter);
        write_vtk(options.out_dir + "/" + name, mesh, fields);
    };

    double efficiency = 0.0;
    for (int iter = 0; iter < std::max(1, options.max_iters + 1); ++iter) {
        // (1) MTPA refresh for the current design
        MqsOperator op_mtpa =
            build_mqs_operator(mesh, cache, materials, result.design.labels, grid);
        MtpaOptions mtpa_opt = options.mtpa;
        if (!warm_angles.empty()) mtpa_opt.warm_start_angles = warm_angles;
        const MtpaTable table = build_mtpa_table(op_mtpa, mtpa_opt);
        warm_angles.assign(table.angle.begin() + 1, table.angle.end());
        st.currents.resize(cycle.size());
        for (int k = 0; k < cycle.size(); ++k)
            st.currents[k] = current_for_torque(table, cycle.points[k].torque);

        // (2) primal solves and metrics
        EvaluationStates states = evaluate_design(st, result.design.labels);
        if (options.log_efficiency) {
            const CycleReport report =
                evaluate_cycle(states.op_torque, cycle, table, options.workers);
            efficiency = report.efficiency;
        }
        IterationRecord rec;
        rec.iter = iter;
        rec.j_torque = states.eval.j_torque;
        rec.c_t = states.eval.c_t;
        rec.c_vm = states.eval.c_vm;
        rec.efficiency = efficiency;
        rec.max_theta = states.eval.max_theta;
        rec.max_svm = states.eval.max_svm;
        rec.total = states.eval.total(options.weights);
        result.history.push_back(rec);
        snapshot(iter);
        if (writing) {
            log.rows.push_back({static_cast<double>(iter), rec.j_torque, rec.c_t, rec.c_vm,
                                rec.efficiency, rec.max_theta, rec.max_svm, rec.step});
            write_csv(options.out_dir + "/history.csv", log);
        }
        if (iter >= options.max_iters) {
            result.converged = iter > 0;
            result.stop_reason = "max iterations reached";
            break;
        }

        // (3) adjoints and the TD field
        const TDField td = compute_td(st, result.design.labels, states);
        if (td.values.cwiseAbs().maxCoeff() == 0.0) {
            result.converged = true;
            result.stop_reason = "topological derivative identically zero";
            break;
        }
        const MatX mapped = map_td_to_nodes(mesh, cache, td, result.design.labels, simplex);

        // (4) halving line search on the active objective
        const double current_total = states.eval.total(options.weights);
        double s = options.s_max;
        bool accepted = false;
        LevelSetField psi_accept;
        Eigen::VectorXi labels_accept;
        double accepted_total = 0.0;
        while (s >= options.s_min) {
            LevelSetField trial = renormalize_levelset(
                levelset_update(result.design.psi, mapped, s));
            Eigen::VectorXi trial_labels = induced_labels(mesh, trial, simplex);
            if ((trial_labels.array() == result.design.labels.array()).all()) {
                s *= 0.5;  // no label change, the objective cannot strictly decrease
                continue;
            }
            const DesignEvaluation trial_eval = evaluate_active(st, trial_labels);
            if (trial_eval.total(options.weights) < current_total) {
                accepted = true;
                psi_accept = trial;
                labels_accept = trial_labels;
                accepted_total = trial_eval.total(options.weights);
                break;
            }
            s *= 0.5;
        }
        if (!accepted) {
            result.converged = true;
            result.stop_reason = "line search exhausted at s_min";
            break;
        }
        result.history.back().step = s;
        result.history.back().frozen_before = current_total;
        result.history.back().frozen_after = accepted_total;
        if (writing) {
            log.rows.back()[7] = s;
            write_csv(options.out_dir + "/history.csv", log);
        }

        // (5) accept
        result.design.psi = psi_accept;
        result.design.labels = labels_accept;
    }
    return result;
}

}  // namespace rotopt
