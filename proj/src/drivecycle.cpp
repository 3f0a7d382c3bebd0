#include "rotopt/drivecycle.hpp"

#include "rotopt/csv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace rotopt {

DriveCycle cluster_cycle(const std::vector<TraceSample>& samples, int speed_bins,
                         int torque_bins) {
    if (samples.empty()) throw std::invalid_argument("drive cycle: empty trace");
    if (speed_bins < 1 || torque_bins < 1)
        throw std::invalid_argument("drive cycle: bin counts must be positive");

    // per-sample dwell time from consecutive time stamps
    std::vector<double> dt(samples.size(), 1.0);
    for (size_t i = 0; i + 1 < samples.size(); ++i) dt[i] = samples[i + 1].time - samples[i].time;
    if (samples.size() > 1) dt[samples.size() - 1] = dt[samples.size() - 2];

    double max_speed = 0.0, max_torque = 0.0, total = 0.0;
    for (const auto& s : samples) {
        if (s.torque <= 0.0) continue;  // motoring part only
        max_speed = std::max(max_speed, s.speed);
        max_torque = std::max(max_torque, s.torque);
    }
    if (max_torque <= 0.0)
        throw std::invalid_argument("drive cycle: no motoring samples in the trace");

    MatX time_in_cell = MatX::Zero(speed_bins, torque_bins);
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.torque <= 0.0) continue;
        const int si = std::min(speed_bins - 1,
                                static_cast<int>(s.speed / max_speed * speed_bins));
        const int ti = std::min(torque_bins - 1,
                                static_cast<int>(s.torque / max_torque * torque_bins));
        time_in_cell(si, ti) += dt[i];
        total += dt[i];
    }

    DriveCycle cycle;
    cycle.peak_speed = max_speed;
    cycle.peak_torque = max_torque;
    for (int si = 0; si < speed_bins; ++si)
        for (int ti = 0; ti < torque_bins; ++ti) {
            if (time_in_cell(si, ti) <= 0.0) continue;
            OperatingPoint op;
            op.speed = (si + 0.5) * max_speed / speed_bins;
            op.torque = (ti + 0.5) * max_torque / torque_bins;
            op.weight = time_in_cell(si, ti) / total;
            cycle.points.push_back(op);
        }
    for (int k = 0; k < cycle.size(); ++k) {
        if (cycle.thermal_op < 0) {
            cycle.thermal_op = k;
            continue;
        }
        const auto& cand = cycle.points[k];
        const auto& best = cycle.points[cycle.thermal_op];
        if (cand.speed > best.speed ||
            (cand.speed == best.speed && cand.torque > best.torque))
            cycle.thermal_op = k;
    }
    return cycle;
}

std::vector<TraceSample> read_trace_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    const int ct = table.column("time_s");
    const int cs = table.column("speed_rpm");
    const int cq = table.column("torque_Nm");
    if (ct < 0 || cs < 0 || cq < 0)
        throw std::runtime_error("trace csv: header must contain time_s,speed_rpm,torque_Nm");
    std::vector<TraceSample> samples;
    samples.reserve(table.rows.size());
    for (const auto& row : table.rows)
        samples.push_back({row[ct], rpm2rads(row[cs]), row[cq]});
    return samples;
}

std::vector<TraceSample> synthetic_trace(double peak_speed, double peak_torque, int n_samples) {
    // urban / extra-urban phases: speed envelope with superimposed
    // accelerations, torque from a crude drag + inertia split
    std::vector<TraceSample> samples;
    samples.reserve(n_samples);
    double raw_peak_speed = 0.0, raw_peak_torque = 0.0;
    std::vector<TraceSample> raw;
    for (int i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i);
        const double phase = t / n_samples;
        const double envelope = 0.25 + 0.75 * phase;
        const double wiggle = 0.5 + 0.5 * std::sin(t / 17.0) * std::sin(t / 7.3 + 1.0);
        const double speed = envelope * wiggle;
        const double accel = 0.9 * std::cos(t / 9.1) * std::sin(t / 23.0 + 0.4);
        const double torque = 0.25 * speed * speed + 0.75 * accel;
        raw.push_back({t, speed, torque});
        raw_peak_speed = std::max(raw_peak_speed, speed);
        if (torque > 0.0) raw_peak_torque = std::max(raw_peak_torque, torque);
    }
    for (auto& s : raw) {
        samples.push_back(
            {s.time, s.speed / raw_peak_speed * peak_speed, s.torque / raw_peak_torque * peak_torque});
    }
    return samples;
}

AngleSearchResult maximize_angle(const std::function<double(double)>& torque_of_angle,
                                 double initial_angle, const AngleSearchOptions& options) {
    AngleSearchResult result;
    int evals = 0;
    auto f = [&](double beta) {
        ++evals;
        return torque_of_angle(beta);
    };

    // coarse scan around the start
    double lo = initial_angle - options.bracket;
    double hi = initial_angle + options.bracket;
    double best_x = initial_angle;
    double best_f = f(initial_angle);
    double worst_f = best_f;
    const int np = std::max(3, options.coarse_points);
    for (int i = 0; i < np; ++i) {
        const double x = lo + (hi - lo) * i / (np - 1);
        const double fx = f(x);
        worst_f = std::min(worst_f, fx);
        if (fx > best_f) {
            best_f = fx;
            best_x = x;
        }
    }
    if (std::abs(best_f - worst_f) <= 1e-12 * (1.0 + std::abs(best_f))) {
        result.angle = initial_angle;
        result.torque = best_f;
        result.degenerate = true;
        result.evaluations = evals;
        return result;
    }

    double a = best_x - (hi - lo) / (np - 1);
    double b = best_x + (hi - lo) / (np - 1);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    int it = 0;
    while (b - a > options.tol && it++ < options.max_iters) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        }
    }
    if (it >= options.max_iters)
        throw std::runtime_error("mtpa: angle search exceeded max iterations; best so far " +
                                 std::to_string(0.5 * (a + b)));
    result.angle = 0.5 * (a + b);
    result.torque = f(result.angle);
    result.evaluations = evals;
    return result;
}

AngleSearchResult optimal_angle(const MqsOperator& op_no_eddy, double amplitude,
                                double initial_angle, const AngleSearchOptions& options) {
    if (!(amplitude > 0.0)) throw std::invalid_argument("mtpa: amplitude must be positive");
    auto torque_at = [&](double beta) {
        CurrentExcitation exc;
        exc.amplitude = amplitude;
        exc.angle = beta;
        exc.turns_per_slot = op_no_eddy.materials->turns_per_slot;
        exc.fill_factor = op_no_eddy.materials->fill_factor;
        const PeriodicField field = solve_periodic_mqs(op_no_eddy, exc, false);
        return average_torque(op_no_eddy, field);
    };
    return maximize_angle(torque_at, initial_angle, options);
}

MtpaTable build_mtpa_table(const MqsOperator& op_no_eddy, const MtpaOptions& options) {
    if (options.samples < 1) throw std::invalid_argument("mtpa: need at least one sample");
    MtpaTable table;
    table.current.push_back(0.0);
    table.torque.push_back(0.0);
    table.angle.push_back(0.0);

    // log-spaced amplitudes, warm-started angle chain
    double beta = deg2rad(115.0);  // typical interior-magnet MTPA neighborhood
    const double lo = options.min_frac * options.rated_current;
    const double hi = options.max_frac * options.rated_current;
    for (int i = 0; i < options.samples; ++i) {
        const double frac = options.samples == 1
                                ? 1.0
                                : static_cast<double>(i) / (options.samples - 1);
        const double amplitude = lo * std::pow(hi / lo, frac);
        AngleSearchOptions angle_opt = options.angle;
        const bool warm =
            options.warm_start_angles && i < static_cast<int>(options.warm_start_angles->size());
        if (warm) beta = (*options.warm_start_angles)[i];
        if (i == 0 && !warm) {
            // no prior: scan the whole circle once
            angle_opt.bracket = kPi;
            angle_opt.coarse_points = std::max(angle_opt.coarse_points, 25);
        }
        const AngleSearchResult res = optimal_angle(op_no_eddy, amplitude, beta, angle_opt);
        beta = res.angle;
        if (res.torque <= table.torque.back())
            throw std::runtime_error("mtpa: torque not increasing with current at I=" +
                                     std::to_string(amplitude));
        table.current.push_back(amplitude);
        table.angle.push_back(res.angle);
        table.torque.push_back(res.torque);
    }
    table.angle[0] = table.angle[1];
    return table;
}

std::pair<double, double> current_for_torque(const MtpaTable& table, double target_torque) {
    if (target_torque < 0.0)
        throw std::invalid_argument("mtpa: target torque must be non-negative");
    if (target_torque > table.torque.back())
        throw std::runtime_error("mtpa: torque unreachable at sampled currents (target " +
                                 std::to_string(target_torque) + " > max " +
                                 std::to_string(table.torque.back()) + ")");
    if (target_torque == 0.0) return {0.0, table.angle.front()};
    size_t i = 1;
    while (table.torque[i] < target_torque) ++i;
    const double t0 = table.torque[i - 1], t1 = table.torque[i];
    const double w = (target_torque - t0) / (t1 - t0);
    const double current = table.current[i - 1] + w * (table.current[i] - table.current[i - 1]);
    const double angle = table.angle[i - 1] + w * (table.angle[i] - table.angle[i - 1]);
    return {current, angle};
}

double efficiency_from_rows(const std::vector<OpEvaluation>& rows) {
    double num = 0.0, den = 0.0;
    for (const auto& r : rows) {
        num += r.weight * r.p_mech;
        den += r.weight * (r.p_mech + r.p_joule + r.p_eddy);
    }
    if (den <= 0.0) throw std::runtime_error("efficiency: non-positive input energy");
    return num / den;
}

CycleReport evaluate_cycle(const MqsOperator& op_eddy, const DriveCycle& cycle,
                           const MtpaTable& table, int workers) {
    CycleReport report;
    report.rows.resize(cycle.size());
    const double r_s = op_eddy.materials->stator_resistance;

    auto eval_op = [&](int k) {
        const auto& point = cycle.points[k];
        OpEvaluation row;
        row.speed = point.speed;
        row.torque = point.torque;
        row.weight = point.weight;
        std::tie(row.current, row.angle) = current_for_torque(table, point.torque);
        row.p_mech = point.speed * point.torque;
        CurrentExcitation exc;
        exc.amplitude = row.current;
        exc.angle = row.angle;
        exc.turns_per_slot = op_eddy.materials->turns_per_slot;
        exc.fill_factor = op_eddy.materials->fill_factor;
        row.p_joule = joule_losses(exc, r_s);
        MqsOperator op_at_speed = op_eddy;  // shallow: shares mesh/cache/materials
        op_at_speed.grid.mech_speed = point.speed;
        const PeriodicField field = solve_periodic_mqs(op_at_speed, exc, true);
        const Vec density = ec_loss_density(op_at_speed, field, MaterialId::MagnetOne) +
                            ec_loss_density(op_at_speed, field, MaterialId::MagnetTwo);
        row.p_eddy = ec_losses(op_at_speed, density);
        report.rows[k] = row;
    };

    if (workers <= 1) {
        for (int k = 0; k < cycle.size(); ++k) eval_op(k);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < std::min(workers, cycle.size()); ++w)
            pool.emplace_back([&] {
                for (int k = next.fetch_add(1); k < cycle.size(); k = next.fetch_add(1)) eval_op(k);
            });
        for (auto& t : pool) t.join();
    }
    report.efficiency = efficiency_from_rows(report.rows);
    return report;
}

}  // namespace rotopt
