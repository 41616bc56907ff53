#pragma once

#include <string>
#include <vector>

#include "adaptcl/config.hpp"
#include "adaptcl/metrics.hpp"
#include "adaptcl/trainer.hpp"

namespace adaptcl {

/// Builds the configured task sequence (synthetic presets are generated;
/// MNIST presets load IDX files from data_dir / ADAPTCL_DATA_DIR).
TaskSequence build_task_sequence(const ExperimentConfig& cfg);

/// Builds the configured model with the experiment seed.
Network build_network(const ExperimentConfig& cfg, const TaskSequence& seq);

/// Turns a finished run into the summary row. For SML the score is the mean
/// of the diagonal and transfer metrics are not applicable.
MetricsReport summarize(Method method, const std::string& sequence,
                        std::uint64_t seed, const ResultMatrix& matrix,
                        std::int64_t used_params, bool fwt_paper_indexing);

struct ExperimentOutcome {
    SequenceResult result;
    MetricsReport report;
};

/// Dispatches to the configured method over the configured sequence.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const TrainerHooks& hooks = {});

/// Runs the experiment and writes every run-directory artifact: manifest
/// (opened before training, finalized with checksums after), history.csv,
/// layer_usage.csv, r_matrix.csv, metrics.json and per-dataset checkpoints.
ExperimentOutcome run_experiment_to_dir(const ExperimentConfig& cfg);

/// One row per run directory: method,sequence,seed,acc,bwt,fwt,used_params.
/// Directories without metrics.json are skipped with a warning; returns the
/// number of rows written.
int write_compare_csv(const std::vector<std::string>& run_dirs,
                      const std::string& out_path);

enum class PlotKind { curves, keep_ratio, layer_usage };

/// Renders one of the run charts from the run directory's CSV artifacts.
void write_plot_svg(const std::string& run_dir, PlotKind kind,
                    const std::string& out_path);

/// Fixed-point helpers shared by the CSV/JSON emitters (2-decimal percents).
std::string format_fixed(double v, int decimals);

}  // namespace adaptcl
