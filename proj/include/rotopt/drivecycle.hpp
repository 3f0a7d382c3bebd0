#pragma once

#include "rotopt/mqs.hpp"

#include <functional>
#include <optional>

namespace rotopt {

struct OperatingPoint {
    double speed = 0.0;   // rad/s
    double torque = 0.0;  // N m
    double weight = 0.0;  // relative active time
};

struct DriveCycle {
    std::vector<OperatingPoint> points;
    double peak_speed = 0.0;
    double peak_torque = 0.0;
    int thermal_op = -1;  // maximal speed, then maximal torque

    int size() const { return static_cast<int>(points.size()); }
};

struct TraceSample {
    double time = 0.0;   // s
    double speed = 0.0;  // rad/s
    double torque = 0.0;  // N m
};

/// Bins the motoring part of a (time, speed, torque) trace on a
/// speed x torque grid; weights are relative time in each cell, OPs sit at
/// cell centers, empty cells dropped. Throws when every sample regenerates.
DriveCycle cluster_cycle(const std::vector<TraceSample>& samples, int speed_bins,
                         int torque_bins);

/// Trace CSV with header time_s,speed_rpm,torque_Nm.
std::vector<TraceSample> read_trace_csv(const std::string& path);

/// Deterministic synthetic motoring trace scaled to the given peaks (used by
/// the bundled sample data and the tests).
std::vector<TraceSample> synthetic_trace(double peak_speed, double peak_torque, int n_samples);

struct AngleSearchOptions {
    double tol = 1e-4;        // rad
    double bracket = kPi / 2; // search window half-width around the start
    int coarse_points = 13;
    int max_iters = 200;
};

struct AngleSearchResult {
    double angle = 0.0;
    double torque = 0.0;
    bool degenerate = false;  // flat objective
    int evaluations = 0;
};

/// 1D torque-angle maximization (golden section after coarse bracketing) on
/// an arbitrary objective; the design-bound overload evaluates the average
/// torque with sigma_m = 0 at the given amplitude.
AngleSearchResult maximize_angle(const std::function<double(double)>& torque_of_angle,
                                 double initial_angle, const AngleSearchOptions& options = {});

AngleSearchResult optimal_angle(const MqsOperator& op_no_eddy, double amplitude,
                                double initial_angle, const AngleSearchOptions& options = {});

struct MtpaTable {
    std::vector<double> current;  // ascending, starts at 0
    std::vector<double> angle;
    std::vector<double> torque;   // strictly increasing
};

struct MtpaOptions {
    int samples = 8;
    double min_frac = 0.05;
    double max_frac = 1.2;
    double rated_current = 40.0;
    AngleSearchOptions angle;
    std::optional<std::vector<double>> warm_start_angles;
};

MtpaTable build_mtpa_table(const MqsOperator& op_no_eddy, const MtpaOptions& options);

/// Monotone piecewise-linear inversion of the table. Throws when the target
/// torque exceeds the sampled range.
std::pair<double, double> current_for_torque(const MtpaTable& table, double target_torque);

struct OpEvaluation {
    double speed = 0.0, torque = 0.0, weight = 0.0;
    double current = 0.0, angle = 0.0;
    double p_mech = 0.0, p_joule = 0.0, p_eddy = 0.0;
};

struct CycleReport {
    std::vector<OpEvaluation> rows;
    double efficiency = 0.0;
};

double efficiency_from_rows(const std::vector<OpEvaluation>& rows);

/// Full drive-cycle efficiency: MTPA inversion per OP, Joule losses from the
/// amplitude, EC losses from the eddy solve at the MTPA currents.
CycleReport evaluate_cycle(const MqsOperator& op_eddy, const DriveCycle& cycle,
                           const MtpaTable& table, int workers = 1);

}  // namespace rotopt
