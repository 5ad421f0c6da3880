#include "mortv/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <random>
#include <sstream>

#include "json.hpp"

#include "mortv/numerics.hpp"

namespace mortv::cli {

using nlohmann::json;

const std::vector<std::string>& known_strategies() {
    static const std::vector<std::string> names = {
        "matrint-standard",       "matrint-extended", "matrint-fixed-output-basis",
        "matrint-fixed-input-basis", "matrint-modal", "two-step",
        "one-sided-fixed-basis",  "modal"};
    return names;
}

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += ", ";
        out += p;
    }
    return out;
}

std::string sanitize(const std::string& name) {
    std::string out = name;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

MethodSpec parse_method(const json& j) {
    MethodSpec m;
    m.name = j.at("name").get<std::string>();
    m.strategy = j.at("strategy").get<std::string>();
    const auto& valid = known_strategies();
    if (std::find(valid.begin(), valid.end(), m.strategy) == valid.end())
        throw ConfigError("unknown strategy '" + m.strategy + "' (valid: " + join(valid) + ")");
    m.r = j.value("r", m.r);
    m.k = j.value("k", m.k);
    m.m_tilde = j.value("m_tilde", m.m_tilde);
    m.q_tilde = j.value("q_tilde", m.q_tilde);
    m.engine = j.value("engine", m.engine);
    if (m.engine != "irka" && m.engine != "two-sided-krylov" && m.engine != "balanced-truncation")
        throw ConfigError("unknown engine '" + m.engine +
                          "' (valid: irka, two-sided-krylov, balanced-truncation)");
    m.s0 = j.value("s0", m.s0);
    m.criterion = j.value("criterion", m.criterion);
    if (m.criterion != "smallest-magnitude" && m.criterion != "smallest-real-part")
        throw ConfigError("unknown criterion '" + m.criterion + "'");
    m.two_sided_modal = j.value("two_sided_modal", m.two_sided_modal);
    m.irka_max_iters = j.value("irka_max_iters", m.irka_max_iters);
    m.irka_tol = j.value("irka_tol", m.irka_tol);
    m.bt_dense_limit = j.value("bt_dense_limit", m.bt_dense_limit);
    return m;
}

} // namespace

ScenarioConfig ScenarioConfig::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    try {
        ScenarioConfig cfg;
        const json& model = j.at("model");
        cfg.model_type = model.at("type").get<std::string>();
        if (cfg.model_type == "beam") {
            cfg.beam.length = model.value("length", cfg.beam.length);
            cfg.beam.num_elements = model.value("num_elements", cfg.beam.num_elements);
            cfg.beam.elastic_modulus = model.value("elastic_modulus", cfg.beam.elastic_modulus);
            cfg.beam.density = model.value("density", cfg.beam.density);
            cfg.beam.width = model.value("width", cfg.beam.width);
            cfg.beam.height = model.value("height", cfg.beam.height);
            cfg.beam.shear_correction = model.value("shear_correction", cfg.beam.shear_correction);
            cfg.beam.poisson_ratio = model.value("poisson_ratio", cfg.beam.poisson_ratio);
            cfg.beam.rayleigh_alpha = model.value("rayleigh_alpha", cfg.beam.rayleigh_alpha);
            cfg.beam.rayleigh_beta = model.value("rayleigh_beta", cfg.beam.rayleigh_beta);
            cfg.coupling = model.value("coupling", std::string("load-only"));
            if (cfg.coupling != "load-only" && cfg.coupling != "sensor-only" &&
                cfg.coupling != "combined")
                throw ConfigError("beam coupling must be load-only, sensor-only or combined");
            cfg.sensor_position = model.value("sensor_position", -1.0);
            cfg.load_position = model.value("load_position", -1.0);
            cfg.f_choice = model.value("f_choice", std::string("stiffness"));
            if (cfg.f_choice != "stiffness" && cfg.f_choice != "identity")
                throw ConfigError("f_choice must be stiffness or identity");
        } else if (cfg.model_type == "heat-rod") {
            cfg.heat.length = model.value("length", cfg.heat.length);
            cfg.heat.num_nodes = model.value("num_nodes", cfg.heat.num_nodes);
            cfg.heat.diffusivity = model.value("diffusivity", cfg.heat.diffusivity);
            cfg.heat.source_width = model.value("source_width", cfg.heat.source_width);
            cfg.heat.fem_mass = model.value("fem_mass", cfg.heat.fem_mass);
            cfg.coupling = model.value("coupling", std::string("collocated"));
            if (cfg.coupling != "collocated")
                throw ConfigError("heat-rod coupling is always collocated");
        } else {
            throw ConfigError("model type must be beam or heat-rod");
        }

        if (j.contains("trajectory")) {
            const json& t = j.at("trajectory");
            cfg.trajectory.from = t.value("from", cfg.trajectory.from);
            cfg.trajectory.to = t.value("to", cfg.trajectory.to);
            cfg.trajectory.velocity = t.value("velocity", cfg.trajectory.velocity);
        }
        if (j.contains("input")) {
            const json& in = j.at("input");
            cfg.input.kind = in.value("kind", cfg.input.kind);
            if (cfg.input.kind != "constant" && cfg.input.kind != "ramp" && cfg.input.kind != "sine")
                throw ConfigError("input kind must be constant, ramp or sine");
            cfg.input.amplitude = in.value("amplitude", cfg.input.amplitude);
            cfg.input.frequency = in.value("frequency", cfg.input.frequency);
        }
        if (j.contains("sim")) {
            const json& s = j.at("sim");
            cfg.sim.dt = s.value("dt", cfg.sim.dt);
            cfg.sim.t_end = s.value("t_end", cfg.sim.t_end);
            cfg.sim.quadrature = s.value("quadrature", cfg.sim.quadrature);
            if (cfg.sim.quadrature != "left" && cfg.sim.quadrature != "trapezoid")
                throw ConfigError("quadrature must be left or trapezoid");
        }
        for (const json& jm : j.value("methods", json::array())) cfg.methods.push_back(parse_method(jm));
        cfg.output_dir = j.value("output_dir", std::string("out"));
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
}

ScenarioConfig ScenarioConfig::from_json_file(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot open config: " + file.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return from_json_string(ss.str());
}

// ---------------------------------------------------------------------------
// Model assembly

MovingBoundarySystem ScenarioConfig::build_system() const {
    const double span = std::abs(trajectory.to - trajectory.from);
    double duration = sim.t_end;
    if (duration <= 0.0) {
        if (!(trajectory.velocity > 0.0) || span <= 0.0)
            throw ConfigError("need sim.t_end or a moving trajectory with velocity > 0");
        duration = span / trajectory.velocity;
    }
    Trajectory traj = span > 0.0
                          ? Trajectory::constant_velocity(trajectory.from, trajectory.to, duration)
                          : Trajectory::constant(trajectory.from, duration);

    if (model_type == "heat-rod") {
        models::HeatRodParams params = heat;
        if (desk) params.num_nodes = std::max(16, params.num_nodes / 4);
        return models::build_heat_rod(params, std::move(traj));
    }

    models::BeamParams params = beam;
    if (desk) params.num_elements = std::max(8, params.num_elements / 4);
    SecondOrderSystem second = models::build_beam(params);
    const FirstOrderF f =
        f_choice == "identity" ? FirstOrderF::Identity : FirstOrderF::Stiffness;
    if (coupling == "load-only") {
        const double sensor = sensor_position >= 0.0 ? sensor_position : 0.5 * params.length;
        return to_first_order(second, f, std::move(traj), Coupling::LoadOnly, sensor);
    }
    if (coupling == "sensor-only") {
        const double load = load_position >= 0.0 ? load_position : 0.5 * params.length;
        return to_first_order(second, f, std::move(traj), Coupling::SensorOnly, std::nullopt, load);
    }
    // combined: load and sensor ride together; the first-order embedding keeps
    // the maps structurally different, so the coupling is Independent
    return to_first_order(second, f, std::move(traj), Coupling::Independent);
}

sim::SimConfig ScenarioConfig::build_sim_config(const MovingBoundarySystem& sys) const {
    sim::SimConfig out;
    out.dt = sim.dt;
    out.t_end = sim.t_end > 0.0 ? sim.t_end : sys.trajectory.duration();
    out.quadrature = sim.quadrature == "trapezoid" ? sim::Quadrature::Trapezoid
                                                   : sim::Quadrature::LeftEndpoint;
    const double amp = input.amplitude;
    const double freq = input.frequency;
    const Index m = sys.m();
    if (input.kind == "constant") {
        out.input = [amp, m](double) { return Vector::Constant(m, amp); };
    } else if (input.kind == "ramp") {
        const double t_end = out.t_end;
        out.input = [amp, m, t_end](double t) { return Vector::Constant(m, amp * t / t_end); };
    } else {
        out.input = [amp, m, freq](double t) {
            return Vector::Constant(m, amp * std::sin(2.0 * M_PI * freq * t));
        };
    }
    return out;
}

// ---------------------------------------------------------------------------
// Method dispatch

namespace {

using Clock = std::chrono::steady_clock;

lti::EigCriterion criterion_of(const MethodSpec& m) {
    return m.criterion == "smallest-real-part" ? lti::EigCriterion::SmallestRealPart
                                               : lti::EigCriterion::SmallestMagnitude;
}

tv::MatrintMode matrint_mode_of(const std::string& strategy) {
    if (strategy == "matrint-standard") return tv::MatrintMode::Standard;
    if (strategy == "matrint-extended") return tv::MatrintMode::Extended;
    if (strategy == "matrint-fixed-output-basis") return tv::MatrintMode::FixedOutputBasis;
    if (strategy == "matrint-fixed-input-basis") return tv::MatrintMode::FixedInputBasis;
    return tv::MatrintMode::Modal;
}

std::vector<double> sample_grid(const MovingBoundarySystem& sys, int k) {
    const double lo = sys.trajectory.min_position();
    const double hi = sys.trajectory.max_position();
    std::vector<double> samples(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        samples[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (k - 1);
    return samples;
}

struct MethodOutcome {
    MethodRow row;
    sim::SimResult result;
    bool has_result = false;
};

MethodOutcome run_method(const MethodSpec& spec, const MovingBoundarySystem& sys,
                         const sim::SimConfig& simcfg, const sim::SimResult& reference) {
    MethodOutcome out;
    out.row.name = spec.name;
    out.row.r = spec.r;
    try {
        const auto t0 = Clock::now();
        lti::ReducedModel rom;
        sim::OnlineBinding binding;

        if (spec.strategy.rfind("matrint-", 0) == 0) {
            tv::MatrintOptions opts;
            opts.s0 = spec.s0;
            opts.criterion = criterion_of(spec);
            opts.modal_side = spec.two_sided_modal ? lti::ModalSide::TwoSided
                                                   : lti::ModalSide::OneSided;
            auto offline = std::make_shared<tv::MatrIntOffline>(tv::matrint_offline(
                sys, sample_grid(sys, spec.k), spec.r, matrint_mode_of(spec.strategy), opts));
            out.row.r = offline->order();
            binding = [offline](double p, double pdot) { return offline->online(p, pdot); };
            rom = offline->online(sys.trajectory.position(0.0), 0.0);
        } else if (spec.strategy == "two-step") {
            tv::TwoStepOptions opts;
            opts.s0 = spec.s0;
            opts.irka.max_iters = spec.irka_max_iters;
            opts.irka.tol = spec.irka_tol;
            opts.bt_dense_limit = spec.bt_dense_limit;
            tv::TwoStepEngine engine = tv::TwoStepEngine::Irka;
            if (spec.engine == "two-sided-krylov") engine = tv::TwoStepEngine::TwoSidedKrylov;
            if (spec.engine == "balanced-truncation") engine = tv::TwoStepEngine::BalancedTruncation;
            rom = tv::two_step_reduce(sys, spec.m_tilde, spec.q_tilde, engine, spec.r, opts);
        } else if (spec.strategy == "one-sided-fixed-basis") {
            rom = tv::one_sided_fixed_basis_reduce(sys, lti::KrylovConfig{spec.s0, spec.r});
        } else { // modal
            rom = tv::modal_reduce_combined(sys, spec.r, criterion_of(spec),
                                            spec.two_sided_modal ? lti::ModalSide::TwoSided
                                                                 : lti::ModalSide::OneSided);
            out.row.r = static_cast<int>(rom.order());
        }
        out.row.offline_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

        out.result = sim::simulate_reduced(rom, sys.trajectory, simcfg, binding);
        out.row.online_seconds = out.result.wall_time;
        out.row.stable = out.result.stable;
        out.row.unstable_pencil_steps = out.result.unstable_pencil_steps;
        out.has_result = true;

        const sim::L2Error err = sim::l2_error(reference, out.result, simcfg.quadrature);
        out.row.abs_l2 = err.absolute;
        out.row.rel_l2 = err.relative;
    } catch (const std::exception& e) {
        out.row.error = e.what();
        out.row.stable = false;
    }
    return out;
}

int thread_budget() {
    const char* env = std::getenv("MORTV_THREADS");
    if (!env) return 1;
    const int v = std::atoi(env);
    return v > 0 ? v : 1;
}

} // namespace

ComparisonReport run_scenario(const ScenarioConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);

    MovingBoundarySystem sys = cfg.build_system();
    sim::SimConfig simcfg = cfg.build_sim_config(sys);

    sim::SimResult reference = simulate_full(sys, simcfg);
    sim::write_csv(cfg.output_dir / "full.csv", reference);

    ComparisonReport report;
    MethodRow ref_row;
    ref_row.name = "full-order";
    ref_row.r = static_cast<int>(sys.n());
    ref_row.online_seconds = reference.wall_time;
    ref_row.stable = reference.stable;
    report.rows.push_back(ref_row);

    std::vector<MethodOutcome> outcomes(cfg.methods.size());
    const int threads = thread_budget();
    if (threads > 1 && cfg.methods.size() > 1) {
        std::vector<std::future<MethodOutcome>> futures;
        futures.reserve(cfg.methods.size());
        for (const MethodSpec& spec : cfg.methods)
            futures.push_back(std::async(std::launch::async, run_method, std::cref(spec),
                                         std::cref(sys), std::cref(simcfg), std::cref(reference)));
        for (std::size_t i = 0; i < futures.size(); ++i) outcomes[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < cfg.methods.size(); ++i)
            outcomes[i] = run_method(cfg.methods[i], sys, simcfg, reference);
    }

    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        MethodOutcome& oc = outcomes[i];
        if (oc.has_result) {
            const std::string stem = sanitize(cfg.methods[i].name);
            sim::write_csv(cfg.output_dir / (stem + ".csv"), oc.result);
            // per-step error trace for the plot script
            std::ofstream es(cfg.output_dir / (stem + "_error.csv"));
            es << "t,abs_error,rel_error\n";
            for (Index k = 0; k < reference.times.size(); ++k) {
                const double abs = (reference.outputs.col(k) - oc.result.outputs.col(k)).norm();
                const double den = reference.outputs.col(k).norm();
                es << fmt(reference.times(k)) << "," << fmt(abs) << ","
                   << fmt(den > 0 ? abs / den : 0.0) << "\n";
            }
        }
        report.rows.push_back(oc.row);
    }

    write_report(cfg.output_dir, report);
    return report;
}

void write_report(const std::filesystem::path& dir, const ComparisonReport& report) {
    // report.csv holds only deterministic columns; wall times go separately
    std::ofstream rc(dir / "report.csv");
    rc << "name,r,abs_l2,rel_l2,stable,unstable_pencil_steps,error\n";
    for (const MethodRow& row : report.rows) {
        rc << row.name << "," << row.r << "," << fmt(row.abs_l2) << "," << fmt(row.rel_l2) << ","
           << (row.stable ? 1 : 0) << "," << row.unstable_pencil_steps << ",\""
           << row.error << "\"\n";
    }
    std::ofstream tc(dir / "timings.csv");
    tc << "name,offline_seconds,online_seconds\n";
    for (const MethodRow& row : report.rows)
        tc << row.name << "," << fmt(row.offline_seconds) << "," << fmt(row.online_seconds) << "\n";

    std::ofstream txt(dir / "report.txt");
    char line[512];
    std::snprintf(line, sizeof(line), "%-28s %6s %12s %12s %10s %10s %8s %s\n", "method", "r",
                  "abs_l2", "rel_l2", "offline_s", "online_s", "stable", "error");
    txt << line;
    for (const MethodRow& row : report.rows) {
        std::snprintf(line, sizeof(line), "%-28s %6d %12.4e %12.4e %10.3f %10.3f %8s %s\n",
                      row.name.c_str(), row.r, row.abs_l2, row.rel_l2, row.offline_seconds,
                      row.online_seconds, row.stable ? "yes" : "NO", row.error.c_str());
        txt << line;
    }
}

void emit_gnuplot(const std::filesystem::path& report_dir) {
    namespace fs = std::filesystem;
    if (!fs::exists(report_dir / "full.csv"))
        throw MissingDataError("emit_gnuplot: full.csv not found in " + report_dir.string());

    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(report_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > 4 && name.substr(name.size() - 4) == ".csv" && name != "full.csv" &&
            name != "report.csv" && name != "timings.csv" &&
            name.find("_error.csv") == std::string::npos)
            stems.push_back(name.substr(0, name.size() - 4));
    }
    std::sort(stems.begin(), stems.end());

    std::ofstream gp(report_dir / "plot.gp");
    gp << "# gnuplot script generated by mortv\n";
    gp << "# trajectory CSVs: header t,y1..yq -> column 1 = t, column 2 = y1\n";
    gp << "# error CSVs: header t,abs_error,rel_error -> columns 1,2,3\n";
    gp << "set datafile separator ','\n";
    gp << "set key outside right\n";
    gp << "set grid\n";
    gp << "set term pngcairo size 1100,500\n\n";

    gp << "set output 'outputs.png'\n";
    gp << "set xlabel 't [s]'\nset ylabel 'y(t)'\n";
    gp << "plot 'full.csv' using 1:2 every ::1 with lines lw 2 title 'full-order'";
    for (const auto& stem : stems)
        gp << ", \\\n     '" << stem << ".csv' using 1:2 every ::1 with lines title '" << stem << "'";
    gp << "\n\n";

    gp << "set output 'abs_error.png'\n";
    gp << "set ylabel '|y - y_r|'\nset logscale y\n";
    bool first = true;
    for (const auto& stem : stems) {
        gp << (first ? "plot " : ", \\\n     ") << "'" << stem
           << "_error.csv' using 1:2 every ::1 with lines title '" << stem << "'";
        first = false;
    }
    gp << "\n\n";

    gp << "set output 'rel_error.png'\n";
    gp << "set ylabel '|y - y_r| / |y|'\n";
    first = true;
    for (const auto& stem : stems) {
        gp << (first ? "plot " : ", \\\n     ") << "'" << stem
           << "_error.csv' using 1:3 every ::1 with lines title '" << stem << "'";
        first = false;
    }
    gp << "\n";
}

// ---------------------------------------------------------------------------
// Built-in invariant self-check

namespace {

bool check(std::vector<std::string>& failures, bool ok, const std::string& what) {
    std::printf("[%s] %s\n", ok ? "ok" : "FAIL", what.c_str());
    if (!ok) failures.push_back(what);
    return ok;
}

} // namespace

int seed_check() {
    std::vector<std::string> failures;
    std::mt19937 gen(20240601);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    Matrix m(40, 6);
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = dist(gen);
    Matrix q = numerics::orthonormalize(m);
    check(failures, (q.transpose() * q - Matrix::Identity(6, 6)).norm() < 1e-12,
          "orthonormalize: Q'Q = I");

    std::vector<double> samples = {0.0, 0.3, 0.7, 1.2};
    bool weights_ok = true;
    for (int i = 0; i <= 50; ++i) {
        const double p = 1.2 * i / 50.0;
        const auto w = tv::interpolation_weights(samples, p);
        weights_ok = weights_ok && w.w_lo + w.w_hi == 1.0 && w.w_lo >= 0.0 && w.w_hi >= 0.0;
    }
    check(failures, weights_ok, "interpolation weights: partition of unity");

    models::HeatRodParams hp;
    hp.num_nodes = 40;
    hp.length = 1.0;
    hp.source_width = 0.1;
    MovingBoundarySystem rod =
        models::build_heat_rod(hp, Trajectory::constant_velocity(0.1, 0.9, 1.0));
    auto lr = tv::lowrank_input(rod, 9);
    bool exact = true;
    for (std::size_t j = 0; j < lr.node_positions.size(); ++j) {
        Matrix recon = lr.Bconst * lr.Btilde_at(lr.node_positions[j]);
        exact = exact && (recon - rod.b(lr.node_positions[j])).norm() == 0.0;
    }
    check(failures, exact, "two-step low-rank input: node exactness");

    Matrix ad = Matrix::Zero(2, 2);
    ad(0, 0) = -1;
    ad(1, 1) = -2;
    Matrix b(2, 1);
    b << 1, 1;
    Matrix p = numerics::solve_lyapunov(SystemMatrix(ad),
                                        SystemMatrix(Matrix(Matrix::Identity(2, 2))), b);
    Matrix res = ad * p + p * ad.transpose() + b * b.transpose();
    check(failures, res.norm() < 1e-10, "lyapunov: residual");

    return static_cast<int>(failures.size());
}

} // namespace mortv::cli
