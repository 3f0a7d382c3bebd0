#include "rotopt/config.hpp"

#include "rotopt/csv.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace rotopt {

namespace {

struct KeyEntry {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        while (pos < value.size() && std::isspace(static_cast<unsigned char>(value[pos]))) ++pos;
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config: key '" + key + "': cannot parse number '" + value + "'");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    if (v != std::floor(v))
        throw std::runtime_error("config: key '" + key + "' expects an integer, got '" + value + "'");
    return static_cast<int>(v);
}

void require_positive(const std::string& key, double v) {
    if (!(v > 0.0)) throw std::runtime_error("config: key '" + key + "' must be positive");
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::map<std::string, KeyEntry> key_table() {
    std::map<std::string, KeyEntry> t;
    auto num = [&t](const std::string& key, auto getter, bool positive = true) {
        t[key] = {[key, getter, positive](RunConfig& c, const std::string& v) {
                      const double x = parse_double(key, v);
                      if (positive) require_positive(key, x);
                      *getter(c) = x;
                  },
                  [getter](const RunConfig& c) {
                      return fmt(*getter(const_cast<RunConfig&>(c)));
                  }};
    };
    auto integer = [&t](const std::string& key, auto getter, int lo) {
        t[key] = {[key, getter, lo](RunConfig& c, const std::string& v) {
                      const int x = parse_int(key, v);
                      if (x < lo)
                          throw std::runtime_error("config: key '" + key + "' must be >= " +
                                                   std::to_string(lo));
                      *getter(c) = x;
                  },
                  [getter](const RunConfig& c) {
                      return std::to_string(*getter(const_cast<RunConfig&>(c)));
                  }};
    };
    auto text = [&t](const std::string& key, auto getter) {
        t[key] = {[getter](RunConfig& c, const std::string& v) { *getter(c) = v; },
                  [getter](const RunConfig& c) { return *getter(const_cast<RunConfig&>(c)); }};
    };

    integer("geometry.pole_pairs", [](RunConfig& c) { return &c.geometry.pole_pairs; }, 1);
    integer("geometry.slot_count", [](RunConfig& c) { return &c.geometry.slot_count; }, 2);
    num("geometry.rotor_inner_radius", [](RunConfig& c) { return &c.geometry.rotor_inner_radius; });
    num("geometry.rotor_outer_radius", [](RunConfig& c) { return &c.geometry.rotor_outer_radius; });
    num("geometry.stator_inner_radius", [](RunConfig& c) { return &c.geometry.stator_inner_radius; });
    num("geometry.stator_outer_radius", [](RunConfig& c) { return &c.geometry.stator_outer_radius; });
    num("geometry.axial_length", [](RunConfig& c) { return &c.geometry.axial_length; });
    num("geometry.interface_radius", [](RunConfig& c) { return &c.geometry.interface_radius; });
    num("geometry.shaft_radius", [](RunConfig& c) { return &c.geometry.shaft_radius; });
    num("geometry.ring_inner_radius", [](RunConfig& c) { return &c.geometry.ring_inner_radius; });
    num("geometry.slot_inner_offset", [](RunConfig& c) { return &c.geometry.slot_inner_offset; });
    num("geometry.slot_depth", [](RunConfig& c) { return &c.geometry.slot_depth; });
    num("geometry.slot_width_frac", [](RunConfig& c) { return &c.geometry.slot_width_frac; });

    num("mesh.target_edge_length", [](RunConfig& c) { return &c.mesh.target_edge_length; });
    integer("mesh.airgap_layers_per_half",
            [](RunConfig& c) { return &c.mesh.airgap_layers_per_half; }, 1);

    num("materials.sigma_magnet", [](RunConfig& c) { return &c.materials.sigma[1]; });
    num("materials.lambda_iron", [](RunConfig& c) { return &c.materials.lambda[0]; });
    num("materials.lambda_magnet", [](RunConfig& c) { return &c.materials.lambda[1]; });
    num("materials.lambda_air", [](RunConfig& c) { return &c.materials.lambda[3]; });
    num("materials.rho_iron", [](RunConfig& c) { return &c.materials.rho[0]; });
    num("materials.rho_magnet", [](RunConfig& c) { return &c.materials.rho[1]; });
    num("materials.young_iron", [](RunConfig& c) { return &c.materials.young[0]; });
    num("materials.young_magnet", [](RunConfig& c) { return &c.materials.young[1]; });
    num("materials.young_air", [](RunConfig& c) { return &c.materials.young[3]; });
    num("materials.poisson", [](RunConfig& c) { return &c.materials.poisson; });
    num("materials.remanence", [](RunConfig& c) { return &c.materials.remanence; });
    num("materials.magnet_angle1_deg", [](RunConfig& c) { return &c.materials.magnet_angle[0]; });
    num("materials.magnet_angle2_deg", [](RunConfig& c) { return &c.materials.magnet_angle[1]; });
    num("materials.recoil_mu_r", [](RunConfig& c) { return &c.materials.nu_magnet; });
    num("materials.ambient", [](RunConfig& c) { return &c.materials.ambient; });
    num("materials.beta_shaft", [](RunConfig& c) { return &c.materials.beta_shaft; });
    num("materials.beta_airgap", [](RunConfig& c) { return &c.materials.beta_airgap; });
    num("materials.stator_resistance", [](RunConfig& c) { return &c.materials.stator_resistance; });
    integer("materials.turns_per_slot", [](RunConfig& c) { return &c.materials.turns_per_slot; }, 1);
    num("materials.fill_factor", [](RunConfig& c) { return &c.materials.fill_factor; });
    text("materials.bh_table", [](RunConfig& c) { return &c.bh_table_path; });
    num("materials.bh_fit_h1", [](RunConfig& c) { return &c.bh_fit_h1; });
    num("materials.bh_fit_b1", [](RunConfig& c) { return &c.bh_fit_b1; });
    num("materials.bh_fit_h2", [](RunConfig& c) { return &c.bh_fit_h2; });
    num("materials.bh_fit_b2", [](RunConfig& c) { return &c.bh_fit_b2; });
    num("materials.bh_fit_mu_r", [](RunConfig& c) { return &c.bh_fit_mu_r; });

    integer("time.n_steps", [](RunConfig& c) { return &c.n_steps; }, 1);

    text("drivecycle.trace", [](RunConfig& c) { return &c.trace_path; });
    integer("drivecycle.trace_samples", [](RunConfig& c) { return &c.trace_samples; }, 2);
    num("drivecycle.peak_speed_rpm", [](RunConfig& c) { return &c.peak_speed_rpm; });
    num("drivecycle.peak_torque", [](RunConfig& c) { return &c.peak_torque; });
    integer("drivecycle.speed_bins", [](RunConfig& c) { return &c.speed_bins; }, 1);
    integer("drivecycle.torque_bins", [](RunConfig& c) { return &c.torque_bins; }, 1);

    integer("mtpa.samples", [](RunConfig& c) { return &c.mtpa.samples; }, 1);
    num("mtpa.min_frac", [](RunConfig& c) { return &c.mtpa.min_frac; });
    num("mtpa.max_frac", [](RunConfig& c) { return &c.mtpa.max_frac; });
    num("mtpa.rated_current", [](RunConfig& c) { return &c.mtpa.rated_current; });
    num("mtpa.angle_tol", [](RunConfig& c) { return &c.mtpa.angle.tol; });

    t["optimizer.w_t"] = {[](RunConfig& c, const std::string& v) {
                              const double x = parse_double("optimizer.w_t", v);
                              if (x < 0) throw std::runtime_error("config: optimizer.w_t must be >= 0");
                              c.optimizer.weights.w_t = x;
                          },
                          [](const RunConfig& c) { return fmt(c.optimizer.weights.w_t); }};
    t["optimizer.w_vm"] = {[](RunConfig& c, const std::string& v) {
                               const double x = parse_double("optimizer.w_vm", v);
                               if (x < 0)
                                   throw std::runtime_error("config: optimizer.w_vm must be >= 0");
                               c.optimizer.weights.w_vm = x;
                           },
                           [](const RunConfig& c) { return fmt(c.optimizer.weights.w_vm); }};
    num("optimizer.theta_star", [](RunConfig& c) { return &c.optimizer.weights.theta_star; });
    num("optimizer.sigma_star", [](RunConfig& c) { return &c.optimizer.weights.sigma_star; });
    t["optimizer.p"] = {[](RunConfig& c, const std::string& v) {
                            const int x = parse_int("optimizer.p", v);
                            if (x < 2 || x % 2 != 0)
                                throw std::runtime_error(
                                    "config: optimizer.p must be even and >= 2");
                            c.optimizer.weights.p_exponent = x;
                        },
                        [](const RunConfig& c) {
                            return std::to_string(c.optimizer.weights.p_exponent);
                        }};
    num("optimizer.s_max", [](RunConfig& c) { return &c.optimizer.s_max; });
    num("optimizer.s_min", [](RunConfig& c) { return &c.optimizer.s_min; });
    integer("optimizer.max_iters", [](RunConfig& c) { return &c.optimizer.max_iters; }, 0);
    integer("optimizer.snapshot_stride", [](RunConfig& c) { return &c.optimizer.snapshot_stride; },
            0);
    t["optimizer.td_fidelity"] = {
        [](RunConfig& c, const std::string& v) {
            if (v != "A" && v != "B")
                throw std::runtime_error("config: optimizer.td_fidelity must be A or B");
            c.optimizer.td_fidelity = v[0];
        },
        [](const RunConfig& c) { return std::string(1, c.optimizer.td_fidelity); }};
    num("optimizer.elastic_speed_rpm", [](RunConfig& c) { return &c.elastic_speed_rpm; });

    num("initial.bar_center_radius", [](RunConfig& c) { return &c.initial_layout.bar_center_radius; });
    num("initial.half_opening_deg", [](RunConfig& c) { return &c.initial_layout.half_opening; });
    num("initial.bar_length", [](RunConfig& c) { return &c.initial_layout.bar_length; });
    num("initial.bar_width", [](RunConfig& c) { return &c.initial_layout.bar_width; });
    text("initial.design_vtk", [](RunConfig& c) { return &c.initial_vtk; });

    text("output.dir", [](RunConfig& c) { return &c.out_dir; });
    integer("run.workers", [](RunConfig& c) { return &c.workers; }, 1);
    t["run.seed"] = {[](RunConfig& c, const std::string& v) {
                         c.seed = static_cast<unsigned>(parse_int("run.seed", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.seed); }};
    return t;
}

// keys whose text value is converted after parsing
void post_process(RunConfig& c, const std::map<std::string, std::string>& raw) {
    if (raw.count("materials.magnet_angle1_deg"))
        c.materials.magnet_angle[0] = deg2rad(c.materials.magnet_angle[0]);
    if (raw.count("materials.magnet_angle2_deg"))
        c.materials.magnet_angle[1] = deg2rad(c.materials.magnet_angle[1]);
    if (raw.count("materials.recoil_mu_r")) c.materials.nu_magnet = kNu0 / c.materials.nu_magnet;
    if (raw.count("initial.half_opening_deg"))
        c.initial_layout.half_opening = deg2rad(c.initial_layout.half_opening);
}

}  // namespace

RunConfig default_config() {
    RunConfig c;
    finalize_materials(c);
    return c;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    RunConfig config;
    const auto table = key_table();
    std::map<std::string, std::string> raw;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: line " + std::to_string(line_no) +
                                     " is not of the form key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = table.find(key);
        if (it == table.end()) throw std::runtime_error("config: unknown key '" + key + "'");
        it->second.set(config, value);
        raw[key] = value;
    }
    post_process(config, raw);
    if (!config.bh_table_path.empty() && !std::filesystem::exists(config.bh_table_path))
        throw std::runtime_error("config: key 'materials.bh_table': file not found: " +
                                 config.bh_table_path);
    if (!config.trace_path.empty() && !std::filesystem::exists(config.trace_path))
        throw std::runtime_error("config: key 'drivecycle.trace': file not found: " +
                                 config.trace_path);
    if (!config.initial_vtk.empty() && !std::filesystem::exists(config.initial_vtk))
        throw std::runtime_error("config: key 'initial.design_vtk': file not found: " +
                                 config.initial_vtk);
    config.geometry.validate();
    finalize_materials(config);
    return config;
}

void finalize_materials(RunConfig& config) {
    if (!config.bh_table_path.empty()) {
        std::ifstream in(config.bh_table_path);
        if (!in) throw std::runtime_error("config: cannot open BH table " + config.bh_table_path);
        std::vector<double> hs, bs;
        double h, b;
        while (in >> h >> b) {
            hs.push_back(h);
            bs.push_back(b);
        }
        config.materials.iron = IronCurve::from_bh_table(
            Eigen::Map<Vec>(hs.data(), static_cast<int>(hs.size())),
            Eigen::Map<Vec>(bs.data(), static_cast<int>(bs.size())));
    } else {
        config.materials.iron =
            IronCurve::fit_brauer(config.bh_fit_h1, config.bh_fit_b1, config.bh_fit_h2,
                                  config.bh_fit_b2, config.bh_fit_mu_r);
    }
    config.materials.sigma[2] = config.materials.sigma[1];
    config.materials.lambda[2] = config.materials.lambda[1];
    config.materials.rho[2] = config.materials.rho[1];
    config.materials.young[2] = config.materials.young[1];
}

std::string config_echo(const RunConfig& config) {
    std::ostringstream out;
    for (const auto& [key, entry] : key_table()) out << key << " = " << entry.get(config) << "\n";
    return out.str();
}

}  // namespace rotopt
