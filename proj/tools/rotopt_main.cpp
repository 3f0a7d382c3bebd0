#include "rotopt/adjoint.hpp"
#include "rotopt/config.hpp"
#include "rotopt/csv.hpp"
#include "rotopt/drivecycle.hpp"
#include "rotopt/initial_design.hpp"
#include "rotopt/mesh_builder.hpp"
#include "rotopt/optimizer.hpp"
#include "rotopt/vtk.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr const char* kVersion = "rotopt 0.1.0";

struct Workspace {
    rotopt::RunConfig config;
    rotopt::Mesh mesh;
    rotopt::ElementCache cache;
    rotopt::DriveCycle cycle;
    rotopt::DesignState design;
};

Workspace prepare(rotopt::RunConfig config) {
    Workspace ws;
    config.mesh.n_steps = config.n_steps;
    config.optimizer.n_steps = config.n_steps;
    config.optimizer.mtpa = config.mtpa;
    config.optimizer.workers = config.workers;
    if (config.elastic_speed_rpm > 0.0)
        config.optimizer.elastic_speed = rotopt::rpm2rads(config.elastic_speed_rpm);
    ws.config = config;
    ws.mesh = rotopt::build_machine_mesh(config.geometry, config.mesh);
    ws.cache = rotopt::build_element_cache(ws.mesh);

    std::vector<rotopt::TraceSample> trace;
    if (!config.trace_path.empty())
        trace = rotopt::read_trace_csv(config.trace_path);
    else
        trace = rotopt::synthetic_trace(rotopt::rpm2rads(config.peak_speed_rpm),
                                        config.peak_torque, config.trace_samples);
    ws.cycle = rotopt::cluster_cycle(trace, config.speed_bins, config.torque_bins);

    Eigen::VectorXi labels;
    if (!config.initial_vtk.empty())
        labels = rotopt::labels_from_vtk(ws.mesh, config.initial_vtk);
    else
        labels = rotopt::vtype_labels(ws.mesh, ws.cache, config.materials, config.initial_layout);
    ws.design = rotopt::make_design(ws.mesh, ws.cache, labels);
    return ws;
}

void write_manifest(const Workspace& ws, const std::string& command) {
    std::filesystem::create_directories(ws.config.out_dir);
    std::ofstream out(ws.config.out_dir + "/manifest.txt");
    out << kVersion << "\ncommand = " << command << "\n\n" << rotopt::config_echo(ws.config);
}

rotopt::MtpaTable run_mtpa(const Workspace& ws, const Eigen::VectorXi& labels) {
    rotopt::TimeGrid grid;
    grid.n_steps = ws.config.n_steps;
    grid.pole_pairs = ws.config.geometry.pole_pairs;
    grid.mech_speed = ws.cycle.points[ws.cycle.thermal_op].speed;
    const rotopt::MqsOperator op =
        rotopt::build_mqs_operator(ws.mesh, ws.cache, ws.config.materials, labels, grid);
    return rotopt::build_mtpa_table(op, ws.config.mtpa);
}

void write_mtpa_csv(const rotopt::MtpaTable& table, const std::string& path) {
    rotopt::CsvTable csv;
    csv.header = {"current_A", "angle_rad", "torque_Nm"};
    for (size_t i = 0; i < table.current.size(); ++i)
        csv.rows.push_back({table.current[i], table.angle[i], table.torque[i]});
    rotopt::write_csv(path, csv);
}

int cmd_mtpa(const Workspace& ws) {
    const rotopt::MtpaTable table = run_mtpa(ws, ws.design.labels);
    write_mtpa_csv(table, ws.config.out_dir + "/mtpa.csv");
    std::cout << "mtpa: wrote " << ws.config.out_dir << "/mtpa.csv with "
              << table.current.size() << " rows\n";
    return 0;
}

int cmd_analyze(const Workspace& ws) {
    using namespace rotopt;
    const RunConfig& cfg = ws.config;
    const MtpaTable table = run_mtpa(ws, ws.design.labels);
    write_mtpa_csv(table, cfg.out_dir + "/mtpa.csv");

    TimeGrid grid;
    grid.n_steps = cfg.n_steps;
    grid.pole_pairs = cfg.geometry.pole_pairs;
    grid.mech_speed = ws.cycle.points[ws.cycle.thermal_op].speed;
    const MqsOperator op =
        build_mqs_operator(ws.mesh, ws.cache, cfg.materials, ws.design.labels, grid);

    const CycleReport report = evaluate_cycle(op, ws.cycle, table, cfg.workers);
    CsvTable per_op;
    per_op.header = {"speed_rad_s", "torque_Nm", "weight", "current_A", "angle_rad",
                     "P_mech_W",    "P_joule_W", "P_eddy_W"};
    for (const auto& row : report.rows)
        per_op.rows.push_back({row.speed, row.torque, row.weight, row.current, row.angle,
                               row.p_mech, row.p_joule, row.p_eddy});
    write_csv(cfg.out_dir + "/efficiency_report.csv", per_op);

    // thermal and mechanical metrics at the critical points
    const auto [i_th, beta_th] =
        current_for_torque(table, ws.cycle.points[ws.cycle.thermal_op].torque);
    CurrentExcitation exc;
    exc.amplitude = i_th;
    exc.angle = beta_th;
    exc.turns_per_slot = cfg.materials.turns_per_slot;
    exc.fill_factor = cfg.materials.fill_factor;
    const PeriodicField field = solve_periodic_mqs(op, exc, true);
    const Vec density = ec_loss_density(op, field, MaterialId::MagnetOne) +
                        ec_loss_density(op, field, MaterialId::MagnetTwo);
    const ThermalOperator thermal_op =
        build_thermal_operator(ws.mesh, cfg.materials, ws.design.labels);
    const ThermalField thermal = solve_heat(thermal_op, density);
    const double max_theta = max_magnet_temperature(thermal_op, thermal);

    const double speed = cfg.elastic_speed_rpm > 0.0 ? rpm2rads(cfg.elastic_speed_rpm)
                                                     : ws.cycle.peak_speed;
    const ElasticOperator elastic_op =
        build_elastic_operator(ws.mesh, cfg.materials, ws.design.labels);
    const ElasticField elastic = solve_elasticity(elastic_op, speed);
    const double max_svm = std::sqrt(von_mises_sq(elastic).maxCoeff());

    CsvTable summary;
    summary.header = {"efficiency", "max_theta_C", "max_svm_Pa"};
    summary.rows.push_back({report.efficiency, max_theta, max_svm});
    write_csv(cfg.out_dir + "/analysis.csv", summary);

    // field snapshot at the thermal OP: a, |b| as point data; region and EC
    // density as cell data
    VtkFields fields;
    fields.point_scalars["a"] = field.a[0];
    Vec bmag_node = Vec::Zero(ws.mesh.num_nodes());
    Vec bweight = Vec::Zero(ws.mesh.num_nodes());
    for (int e = 0; e < ws.mesh.num_tris(); ++e) {
        Vec2 g = Vec2::Zero();
        for (int v = 0; v < 3; ++v)
            g += ws.cache.grad[e].col(v) * field.a[0][ws.mesh.tris(e, v)];
        const double bm = g.norm();
        for (int v = 0; v < 3; ++v) {
            bmag_node[ws.mesh.tris(e, v)] += ws.cache.area[e] * bm;
            bweight[ws.mesh.tris(e, v)] += ws.cache.area[e];
        }
    }
    for (int i = 0; i < ws.mesh.num_nodes(); ++i)
        if (bweight[i] > 0) bmag_node[i] /= bweight[i];
    fields.point_scalars["bmag"] = bmag_node;
    fields.cell_scalars["p_ec"] = density;
    Vec matfield = Vec::Zero(ws.mesh.num_tris());
    for (int e = 0; e < ws.mesh.num_tris(); ++e) {
        const int d = ws.mesh.design_elem_index[e];
        matfield[e] = d >= 0 ? ws.design.labels[d] : -1.0;
    }
    fields.cell_scalars["material"] = matfield;
    write_vtk(cfg.out_dir + "/fields_thermal_op.vtk", ws.mesh, fields);
    Vec theta_full = Vec::Zero(ws.mesh.num_nodes());
    for (size_t i = 0; i < thermal_op.sub.node_to_parent.size(); ++i)
        theta_full[thermal_op.sub.node_to_parent[i]] = thermal.theta[static_cast<int>(i)];
    VtkFields tf;
    tf.point_scalars["theta"] = theta_full;
    write_vtk(cfg.out_dir + "/temperature.vtk", ws.mesh, tf);

    std::cout << "analyze: E=" << report.efficiency << " max_theta=" << max_theta
              << " C max_svm=" << max_svm / 1e6 << " MPa\n";
    std::cout << "analyze: wrote analysis.csv, efficiency_report.csv, mtpa.csv and VTK fields to "
              << cfg.out_dir << "\n";
    return 0;
}

int cmd_optimize(const Workspace& ws) {
    using namespace rotopt;
    OptimizerOptions opt = ws.config.optimizer;
    opt.out_dir = ws.config.out_dir;
    if (opt.snapshot_stride <= 0) opt.snapshot_stride = 10;
    const OptimizationResult result =
        run_optimization(ws.mesh, ws.cache, ws.config.materials, ws.cycle, ws.design, opt);

    VtkFields fields;
    Vec matfield = Vec::Zero(ws.mesh.num_tris());
    for (int e = 0; e < ws.mesh.num_tris(); ++e) {
        const int d = ws.mesh.design_elem_index[e];
        matfield[e] = d >= 0 ? result.design.labels[d] : -1.0;
    }
    fields.cell_scalars["material"] = matfield;
    write_vtk(ws.config.out_dir + "/design_final.vtk", ws.mesh, fields);

    std::cout << "optimize: " << result.history.size() << " iterations, stop: "
              << result.stop_reason << "\n";
    if (!result.history.empty()) {
        const auto& last = result.history.back();
        std::cout << "optimize: final J=" << last.j_torque << " C_t=" << last.c_t
                  << " C_VM=" << last.c_vm << " E=" << last.efficiency << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kVersion) + " - drive-cycle rotor topology optimization"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int workers = 0, max_iters = -1;
    unsigned seed = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "run configuration file");
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    app.add_option("--workers", workers, "solver worker threads");
    app.add_option("--max-iters", max_iters, "optimization iteration cap");
    app.add_option("--seed", seed, "seed recorded in the manifest")->each([&](const std::string&) {
        seed_set = true;
    });

    auto* analyze = app.add_subcommand("analyze", "one-shot design evaluation");
    auto* mtpa = app.add_subcommand("mtpa", "maximum-torque-per-ampere table");
    auto* optimize = app.add_subcommand("optimize", "drive-cycle design optimization");

    CLI11_PARSE(app, argc, argv);

    try {
        rotopt::RunConfig config =
            config_path.empty() ? rotopt::default_config() : rotopt::parse_config(config_path);
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (workers > 0) config.workers = workers;
        if (max_iters >= 0) config.optimizer.max_iters = max_iters;
        if (seed_set) config.seed = seed;

        Workspace ws = prepare(config);
        std::string command = argv[0] ? argv[0] : "rotopt";
        for (int i = 1; i < argc; ++i) command += std::string(" ") + argv[i];
        write_manifest(ws, command);

        if (analyze->parsed()) return cmd_analyze(ws);
        if (mtpa->parsed()) return cmd_mtpa(ws);
        if (optimize->parsed()) return cmd_optimize(ws);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
