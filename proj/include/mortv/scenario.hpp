#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mortv/models.hpp"
#include "mortv/simulation.hpp"
#include "mortv/tv_reduction.hpp"

namespace mortv::cli {

/// One reduction method entry of a scenario.
struct MethodSpec {
    std::string name;     // report row label and CSV stem
    std::string strategy; // see known_strategies()
    int r = 10;
    int k = 10;        // matrix interpolation sample count
    int m_tilde = 10;  // two-step coarse input grid
    int q_tilde = 10;  // two-step coarse output grid
    std::string engine = "irka"; // two-step: irka | two-sided-krylov | balanced-truncation
    double s0 = 0.0;
    std::string criterion = "smallest-magnitude"; // modal: | smallest-real-part
    bool two_sided_modal = false;
    int irka_max_iters = 60;
    double irka_tol = 1e-6;
    Index bt_dense_limit = 2000;
};

const std::vector<std::string>& known_strategies();

struct TrajectorySpec {
    double from = 0.0;
    double to = 1.0;
    double velocity = 1.0; // magnitude; 0 allowed only with explicit t_end
};

struct InputSpec {
    std::string kind = "constant"; // constant | ramp | sine
    double amplitude = 1.0;
    double frequency = 1.0; // sine preset only
};

struct SimSpec {
    double dt = 1e-3;
    double t_end = 0.0; // 0 = derived from the trajectory
    std::string quadrature = "left"; // left | trapezoid
};

struct ScenarioConfig {
    std::string model_type = "beam"; // beam | heat-rod
    models::BeamParams beam;
    models::HeatRodParams heat;
    std::string coupling = "load-only"; // beam: load-only | sensor-only | combined; heat-rod: collocated
    double sensor_position = -1.0;      // beam load-only fixed sensor; < 0 = midspan
    double load_position = -1.0;        // beam sensor-only fixed load; < 0 = midspan
    std::string f_choice = "stiffness"; // stiffness | identity
    TrajectorySpec trajectory;
    InputSpec input;
    SimSpec sim;
    std::vector<MethodSpec> methods;
    std::filesystem::path output_dir = "out";
    bool desk = false; // scale the model dimension down 4x

    static ScenarioConfig from_json_file(const std::filesystem::path& file);
    static ScenarioConfig from_json_string(const std::string& text);

    /// Assembled model plus simulation setup shared by all methods.
    MovingBoundarySystem build_system() const;
    sim::SimConfig build_sim_config(const MovingBoundarySystem& sys) const;
};

struct MethodRow {
    std::string name;
    int r = 0;
    double abs_l2 = 0.0;
    double rel_l2 = 0.0;
    double offline_seconds = 0.0;
    double online_seconds = 0.0;
    bool stable = true;
    Index unstable_pencil_steps = 0;
    std::string error; // empty when the method completed
};

struct ComparisonReport {
    std::vector<MethodRow> rows; // rows[0] = full-order reference
};

/// Runs the full-order reference and every configured method, writes
/// per-method trajectory CSVs, error CSVs, report.csv / report.txt
/// (deterministic) and timings.csv into cfg.output_dir.
ComparisonReport run_scenario(const ScenarioConfig& cfg);

void write_report(const std::filesystem::path& dir, const ComparisonReport& report);

/// Plot script (gnuplot syntax, plain text) with output / absolute error /
/// relative error panels referencing the CSVs in report_dir.
void emit_gnuplot(const std::filesystem::path& report_dir);

/// Quick module-invariant self-check (for `mortv --seed-check`); returns
/// the number of failed checks and prints one line per check.
int seed_check();

} // namespace mortv::cli
