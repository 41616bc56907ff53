#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adaptcl/acceptance.hpp"
#include "adaptcl/errors.hpp"
#include "adaptcl/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int cmd_run(const std::string& config_path, const std::optional<std::string>& method,
            const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& output_dir) {
    adaptcl::ExperimentConfig cfg;
    try {
        cfg = adaptcl::load_config(config_path, method, seed);
        if (output_dir) cfg.output_dir = *output_dir;
    } catch (const adaptcl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        const adaptcl::ExperimentOutcome outcome = adaptcl::run_experiment_to_dir(cfg);
        std::cout << "method=" << outcome.report.method
                  << " sequence=" << outcome.report.sequence
                  << " acc=" << adaptcl::format_fixed(outcome.report.acc, 2);
        if (outcome.report.bwt) {
            std::cout << " bwt=" << adaptcl::format_fixed(*outcome.report.bwt, 2);
        }
        if (outcome.report.fwt) {
            std::cout << " fwt=" << adaptcl::format_fixed(*outcome.report.fwt, 2);
        }
        std::cout << " used_params=" << outcome.report.used_params << "\n";
        std::cout << "artifacts written to " << cfg.output_dir << "\n";
        return kExitOk;
    } catch (const adaptcl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const adaptcl::NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return kExitNumeric;
    }
}

int cmd_compare(const std::vector<std::string>& runs, const std::string& out) {
    const int rows = adaptcl::write_compare_csv(runs, out);
    if (rows == 0) {
        std::cerr << "compare: no usable runs\n";
        return 1;
    }
    std::cout << "wrote " << rows << " rows to " << out << "\n";
    return kExitOk;
}

int cmd_plot(const std::string& run, const std::string& what, const std::string& out) {
    adaptcl::PlotKind kind;
    if (what == "curves") {
        kind = adaptcl::PlotKind::curves;
    } else if (what == "keep_ratio") {
        kind = adaptcl::PlotKind::keep_ratio;
    } else {
        kind = adaptcl::PlotKind::layer_usage;
    }
    adaptcl::write_plot_svg(run, kind, out);
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& suite, const std::string& data_dir,
               bool inject_freeze_fault) {
    adaptcl::AcceptanceOptions options;
    options.data_dir = data_dir;
    options.inject_freeze_fault = inject_freeze_fault;
    const auto results = adaptcl::run_acceptance(
        suite == "full" ? adaptcl::AcceptanceSuite::full : adaptcl::AcceptanceSuite::quick,
        options);

    std::vector<std::string> failed;
    for (const auto& r : results) {
        nlohmann::ordered_json line;
        line["criterion"] = r.id;
        line["name"] = r.name;
        line["pass"] = r.passed;
        if (r.skipped) line["skipped"] = true;
        line["detail"] = r.detail;
        line["seconds"] = nlohmann::json::parse(adaptcl::format_fixed(r.seconds, 2));
        std::cout << line.dump() << "\n";
        if (!r.passed) failed.push_back(r.name);
    }
    if (!failed.empty()) {
        std::cerr << "failed criteria:";
        for (const auto& name : failed) std::cerr << ' ' << name;
        std::cerr << "\n";
        return 1;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AdaptCL continual-learning experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> method_override;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> output_override;
    auto* run = app.add_subcommand("run", "execute one configured experiment");
    run->add_option("--config", config_path, "JSON config file")->required();
    run->add_option("--method", method_override, "override the configured method");
    run->add_option("--seed", seed_override, "override the configured seed");
    run->add_option("--output-dir", output_override, "override the configured output_dir");

    std::vector<std::string> compare_runs;
    std::string compare_out = "table.csv";
    auto* compare = app.add_subcommand("compare", "tabulate finished runs");
    compare->add_option("--runs", compare_runs, "run directories")->required()->expected(-1);
    compare->add_option("--out", compare_out, "output CSV path");

    std::string plot_run, plot_what = "curves", plot_out = "plot.svg";
    auto* plot = app.add_subcommand("plot", "render a chart from a run directory");
    plot->add_option("--run", plot_run, "run directory")->required();
    plot->add_option("--what", plot_what, "curves | keep_ratio | layer_usage")
        ->check(CLI::IsMember({"curves", "keep_ratio", "layer_usage"}));
    plot->add_option("--out", plot_out, "output SVG path");

    std::string verify_suite = "quick", verify_data_dir;
    bool inject_fault = false;
    auto* verify = app.add_subcommand("verify", "run the acceptance suite");
    verify->add_option("--suite", verify_suite, "quick | full")
        ->check(CLI::IsMember({"quick", "full"}));
    verify->add_option("--data-dir", verify_data_dir, "IDX directory for the full suite");
    verify->add_flag("--inject-freeze-fault", inject_fault,
                     "negative control: corrupt a frozen weight mid-sequence");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (run->parsed()) {
            return cmd_run(config_path, method_override, seed_override, output_override);
        }
        if (compare->parsed()) return cmd_compare(compare_runs, compare_out);
        if (plot->parsed()) return cmd_plot(plot_run, plot_what, plot_out);
        if (verify->parsed()) return cmd_verify(verify_suite, verify_data_dir, inject_fault);
    } catch (const adaptcl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const adaptcl::NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
