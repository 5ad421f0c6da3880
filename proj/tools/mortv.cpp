#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "mortv/scenario.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mortv - model reduction benchmarks for systems with moving loads"};
    app.require_subcommand(1);

    std::string config_path, output_dir, methods_csv, plot_dir;
    bool desk = false, seed = false;

    CLI::App* run = app.add_subcommand("run", "run a scenario config");
    run->add_option("config", config_path, "JSON scenario config")->required();
    run->add_option("--output-dir", output_dir, "override the config's output directory");
    run->add_option("--methods", methods_csv, "comma-separated method name filter");
    run->add_flag("--desk", desk, "scale the model dimension down 4x for quick runs");
    run->add_flag("--seed-check", seed, "run the invariant self-check before the scenario");

    CLI::App* plot = app.add_subcommand("plot", "write plot.gp for an existing report directory");
    plot->add_option("dir", plot_dir, "report directory")->required();

    CLI::App* check = app.add_subcommand("seed-check", "run the invariant self-check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) return mortv::cli::seed_check() == 0 ? 0 : 1;

        if (plot->parsed()) {
            mortv::cli::emit_gnuplot(plot_dir);
            std::printf("wrote %s/plot.gp\n", plot_dir.c_str());
            return 0;
        }

        if (seed && mortv::cli::seed_check() != 0) return 1;

        mortv::cli::ScenarioConfig cfg = mortv::cli::ScenarioConfig::from_json_file(config_path);
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (desk) cfg.desk = true;
        if (!methods_csv.empty()) {
            const auto keep = split_csv(methods_csv);
            std::vector<mortv::cli::MethodSpec> filtered;
            for (const auto& m : cfg.methods)
                if (std::find(keep.begin(), keep.end(), m.name) != keep.end())
                    filtered.push_back(m);
            cfg.methods = std::move(filtered);
        }

        mortv::cli::ComparisonReport report = mortv::cli::run_scenario(cfg);
        mortv::cli::emit_gnuplot(cfg.output_dir);

        std::ifstream txt(cfg.output_dir / "report.txt");
        std::cout << txt.rdbuf();

        for (const auto& row : report.rows)
            if (!row.error.empty()) return 3;
        return 0;
    } catch (const mortv::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
