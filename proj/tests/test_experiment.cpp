#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adaptcl/config.hpp"
#include "adaptcl/errors.hpp"
#include "adaptcl/experiment.hpp"

using namespace adaptcl;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("adaptcl_exp_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int count_occurrences(const std::string& hay, const std::string& needle) {
    int n = 0;
    std::size_t pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

// A quick config: tiny synthetic sequence so CLI tests stay fast.
std::string quick_config(const fs::path& out_dir, const std::string& method = "adaptcl") {
    return std::string("{\n") + "  \"method\": \"" + method + "\",\n" +
           R"(  "sequence": "synthetic_strong",
  "model": "toy_mlp",
  "seed": 5,
  "epochs_per_dataset": 3,
  "batch_size": 32,
  "learning_rate": 0.05,
  "synthetic_tasks": 2,
  "synthetic_train_per_class": 40,
  "synthetic_test_per_class": 15,
  "output_dir": ")" +
           out_dir.string() + "\"\n}\n";
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ADAPTCL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("run_experiment_to_dir writes the full artifact set") {
    TempDir tmp;
    const fs::path run_dir = tmp.path / "run";
    ExperimentConfig cfg = parse_config_json(quick_config(run_dir));
    const ExperimentOutcome outcome = run_experiment_to_dir(cfg);

    CHECK(fs::exists(run_dir / "manifest.json"));
    CHECK(fs::exists(run_dir / "history.csv"));
    CHECK(fs::exists(run_dir / "layer_usage.csv"));
    CHECK(fs::exists(run_dir / "r_matrix.csv"));
    CHECK(fs::exists(run_dir / "metrics.json"));
    CHECK(fs::exists(run_dir / "checkpoint_d0.aclk"));
    CHECK(fs::exists(run_dir / "checkpoint_d1.aclk"));

    const std::string metrics = slurp(run_dir / "metrics.json");
    CHECK(metrics.find("\"acc\"") != std::string::npos);
    CHECK(metrics.find("\"bwt\"") != std::string::npos);
    CHECK(metrics.find("\"fwt\"") != std::string::npos);
    CHECK(metrics.find("\"used_params\"") != std::string::npos);
    CHECK(outcome.report.bwt.has_value());

    const std::string manifest = slurp(run_dir / "manifest.json");
    CHECK(manifest.find("\"started_at\"") != std::string::npos);
    CHECK(manifest.find("\"finished_at\"") != std::string::npos);
    CHECK(manifest.find("\"crc32\"") != std::string::npos);
    CHECK(manifest.find("\"history.csv\"") != std::string::npos);

    const std::string history = slurp(run_dir / "history.csv");
    CHECK(history.rfind("dataset_idx,epoch,task_idx,test_accuracy,remaining_ratio,train_loss",
                        0) == 0);
}

TEST_CASE("metrics.json is byte-identical across reruns of the same config") {
    TempDir tmp;
    ExperimentConfig a = parse_config_json(quick_config(tmp.path / "a"));
    ExperimentConfig b = parse_config_json(quick_config(tmp.path / "b"));
    (void)run_experiment_to_dir(a);
    (void)run_experiment_to_dir(b);
    CHECK(slurp(tmp.path / "a" / "metrics.json") == slurp(tmp.path / "b" / "metrics.json"));
    CHECK(slurp(tmp.path / "a" / "history.csv") == slurp(tmp.path / "b" / "history.csv"));
    CHECK(slurp(tmp.path / "a" / "r_matrix.csv") == slurp(tmp.path / "b" / "r_matrix.csv"));
}

TEST_CASE("sml metrics omit transfer and multiply used params") {
    TempDir tmp;
    ExperimentConfig cfg = parse_config_json(quick_config(tmp.path / "sml", "sml"));
    const ExperimentOutcome outcome = run_experiment_to_dir(cfg);
    CHECK_FALSE(outcome.report.bwt.has_value());
    CHECK_FALSE(outcome.report.fwt.has_value());
    CHECK(outcome.report.used_params ==
          outcome.result.state.network.count_params() * 2);
    const std::string metrics = slurp(tmp.path / "sml" / "metrics.json");
    CHECK(metrics.find("\"bwt\": null") != std::string::npos);
}

TEST_CASE("compare produces the fixed column order and skips broken runs") {
    TempDir tmp;
    ExperimentConfig a = parse_config_json(quick_config(tmp.path / "a"));
    ExperimentConfig b = parse_config_json(quick_config(tmp.path / "b", "sgd"));
    (void)run_experiment_to_dir(a);
    (void)run_experiment_to_dir(b);
    fs::create_directories(tmp.path / "broken");

    const fs::path out = tmp.path / "table.csv";
    const int rows = write_compare_csv(
        {(tmp.path / "a").string(), (tmp.path / "broken").string(), (tmp.path / "b").string()},
        out.string());
    CHECK(rows == 2);
    const std::string csv = slurp(out);
    CHECK(csv.rfind("method,sequence,seed,acc,bwt,fwt,used_params", 0) == 0);
    CHECK(count_occurrences(csv, "\n") == 3);  // header + 2 rows
    CHECK(csv.find("adaptcl,synthetic_strong,5,") != std::string::npos);
    CHECK(csv.find("sgd,synthetic_strong,5,") != std::string::npos);
}

TEST_CASE("plots render with the expected structure") {
    TempDir tmp;
    ExperimentConfig cfg = parse_config_json(quick_config(tmp.path / "run"));
    (void)run_experiment_to_dir(cfg);

    write_plot_svg((tmp.path / "run").string(), PlotKind::curves,
                   (tmp.path / "curves.svg").string());
    const std::string curves = slurp(tmp.path / "curves.svg");
    CHECK(count_occurrences(curves, "<polyline") == 2);  // one per task
    CHECK(curves.find("stroke-dasharray") != std::string::npos);  // dataset marker

    write_plot_svg((tmp.path / "run").string(), PlotKind::keep_ratio,
                   (tmp.path / "keep.svg").string());
    const std::string keep = slurp(tmp.path / "keep.svg");
    CHECK(count_occurrences(keep, "<polyline") == 1);

    write_plot_svg((tmp.path / "run").string(), PlotKind::layer_usage,
                   (tmp.path / "usage.svg").string());
    const std::string usage = slurp(tmp.path / "usage.svg");
    CHECK(usage.find("<rect") != std::string::npos);
    CHECK(usage.find("dataset 1") != std::string::npos);

    // keep_ratio values plotted must lie in [0,1]: check the history source.
    std::ifstream f(tmp.path / "run" / "history.csv");
    std::string line;
    std::getline(f, line);
    while (std::getline(f, line)) {
        std::stringstream ss(line);
        std::string cell;
        for (int i = 0; i < 5; ++i) std::getline(ss, cell, ',');
        const double ratio = std::stod(cell);
        CHECK(ratio >= 0.0);
        CHECK(ratio <= 1.0);
    }
}

TEST_CASE("cli run + rerun give byte-identical metrics and exit 0") {
    TempDir tmp;
    const fs::path cfg_path = tmp.path / "cfg.json";
    {
        std::ofstream os(cfg_path);
        os << quick_config(tmp.path / "r1");
    }
    CHECK(run_cli("run --config " + cfg_path.string()) == 0);
    CHECK(run_cli("run --config " + cfg_path.string() + " --output-dir " +
                  (tmp.path / "r2").string()) == 0);
    CHECK(slurp(tmp.path / "r1" / "metrics.json") == slurp(tmp.path / "r2" / "metrics.json"));
}

TEST_CASE("cli rejects an unknown config key with exit code 2") {
    TempDir tmp;
    const fs::path cfg_path = tmp.path / "bad.json";
    {
        std::ofstream os(cfg_path);
        os << R"({"method": "sgd", "sequence": "synthetic_strong", "typo_key": 1,
                  "output_dir": ")"
           << (tmp.path / "x").string() << "\"}";
    }
    CHECK(run_cli("run --config " + cfg_path.string()) == 2);
}

TEST_CASE("cli rejects a missing config file with exit code 2") {
    CHECK(run_cli("run --config /nonexistent/cfg.json") == 2);
}

TEST_CASE("cli plot rejects an unknown --what with exit code 2") {
    TempDir tmp;
    CHECK(run_cli("plot --run " + tmp.path.string() + " --what bogus --out " +
                  (tmp.path / "x.svg").string()) == 2);
}

TEST_CASE("cli compare and plot run end to end") {
    TempDir tmp;
    const fs::path cfg_path = tmp.path / "cfg.json";
    {
        std::ofstream os(cfg_path);
        os << quick_config(tmp.path / "run");
    }
    REQUIRE(run_cli("run --config " + cfg_path.string()) == 0);
    CHECK(run_cli("compare --runs " + (tmp.path / "run").string() + " --out " +
                  (tmp.path / "t.csv").string()) == 0);
    CHECK(fs::exists(tmp.path / "t.csv"));
    CHECK(run_cli("plot --run " + (tmp.path / "run").string() + " --what curves --out " +
                  (tmp.path / "c.svg").string()) == 0);
    CHECK(fs::exists(tmp.path / "c.svg"));
}

TEST_CASE("shipped preset configs parse") {
    const fs::path dir(ADAPTCL_CONFIG_DIR);
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        CHECK_NOTHROW(load_config(entry.path().string()));
    }
}

TEST_CASE("method override via cli flag is honored") {
    TempDir tmp;
    const fs::path cfg_path = tmp.path / "cfg.json";
    {
        std::ofstream os(cfg_path);
        os << quick_config(tmp.path / "m");
    }
    REQUIRE(run_cli("run --config " + cfg_path.string() + " --method sgd --output-dir " +
                    (tmp.path / "m").string()) == 0);
    const std::string metrics = slurp(tmp.path / "m" / "metrics.json");
    CHECK(metrics.find("\"method\": \"sgd\"") != std::string::npos);
}
