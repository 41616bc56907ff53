#include "adaptcl/experiment.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "adaptcl/checkpoint.hpp"
#include "adaptcl/errors.hpp"
#include "adaptcl/svg.hpp"

#ifndef ADAPTCL_VERSION
#define ADAPTCL_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace adaptcl {

namespace {

std::string iso_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::uint32_t file_crc32(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    uLong crc = crc32(0L, Z_NULL, 0);
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof(buf));
        const std::streamsize got = f.gcount();
        if (got > 0) {
            crc = crc32(crc, reinterpret_cast<const Bytef*>(buf),
                        static_cast<uInt>(got));
        }
    }
    return static_cast<std::uint32_t>(crc);
}

std::string resolve_data_dir(const ExperimentConfig& cfg) {
    if (!cfg.data_dir.empty()) return cfg.data_dir;
    if (const char* env = std::getenv("ADAPTCL_DATA_DIR")) return env;
    return {};
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

TaskSequence build_task_sequence(const ExperimentConfig& cfg) {
    if (!cfg.explicit_tasks.empty()) {
        const std::string dir = resolve_data_dir(cfg);
        if (dir.empty()) {
            throw ConfigError("explicit MNIST task lists need data_dir or ADAPTCL_DATA_DIR");
        }
        return mnist_variant_sequence(dir, cfg.explicit_tasks, cfg.seed, cfg.shared_stats);
    }
    if (cfg.sequence == "mnist_strong" || cfg.sequence == "mnist_mild") {
        const std::string dir = resolve_data_dir(cfg);
        if (dir.empty()) {
            throw ConfigError("sequence '" + cfg.sequence +
                              "' needs data_dir or ADAPTCL_DATA_DIR");
        }
        std::vector<VariantSpec> variants(3);
        variants[0].kind = VariantKind::identity;
        variants[1].kind = VariantKind::permute;
        variants[2].kind = cfg.sequence == "mnist_strong" ? VariantKind::invert
                                                          : VariantKind::rotate;
        TaskSequence seq = mnist_variant_sequence(dir, variants, cfg.seed, cfg.shared_stats);
        seq.name = cfg.sequence;
        return seq;
    }
    return synthetic_sequence(cfg.synthetic);
}

Network build_network(const ExperimentConfig& cfg, const TaskSequence& seq) {
    switch (cfg.model) {
        case ModelKind::lenet5:
            if (seq.image_h != 32 || seq.image_w != 32) {
                throw ConfigError("lenet5 expects 32x32 inputs");
            }
            return build_lenet5(cfg.seed, seq.classes);
        case ModelKind::toy_mlp:
            return build_toy_mlp(cfg.seed, static_cast<int>(seq.image_h),
                                 static_cast<int>(seq.image_w), seq.classes);
        case ModelKind::toy_cnn:
            return build_toy_cnn(cfg.seed, static_cast<int>(seq.image_h),
                                 static_cast<int>(seq.image_w), seq.classes);
    }
    throw ConfigError("unknown model");
}

MetricsReport summarize(Method method, const std::string& sequence,
                        std::uint64_t seed, const ResultMatrix& matrix,
                        std::int64_t used_params, bool fwt_paper_indexing) {
    MetricsReport rep;
    rep.method = method_name(method);
    rep.sequence = sequence;
    rep.seed = seed;
    rep.used_params = used_params;
    if (method == Method::sml) {
        double acc = 0.0;
        for (int i = 0; i < matrix.t; ++i) acc += matrix.at(i, i);
        rep.acc = acc / static_cast<double>(matrix.t);
        // no transfer by construction; bwt/fwt stay absent
    } else {
        rep.acc = compute_acc(matrix);
        rep.bwt = compute_bwt(matrix);
        rep.fwt = compute_fwt(matrix, fwt_paper_indexing);
    }
    return rep;
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const TrainerHooks& hooks) {
    const TaskSequence seq = build_task_sequence(cfg);
    ExperimentOutcome outcome;
    switch (cfg.method) {
        case Method::adaptcl:
            outcome.result = run_sequence(build_network(cfg, seq), seq, cfg.train, hooks);
            break;
        case Method::sgd:
            outcome.result = train_sgd_naive(build_network(cfg, seq), seq, cfg.train, hooks);
            break;
        case Method::ewc:
            outcome.result = train_ewc(build_network(cfg, seq), seq, cfg.train, cfg.ewc, hooks);
            break;
        case Method::packnet_star:
            outcome.result = train_packnet_star(build_network(cfg, seq), seq, cfg.train,
                                                cfg.packnet, hooks);
            break;
        case Method::sml:
            outcome.result = train_sml([&] { return build_network(cfg, seq); }, seq,
                                       cfg.train, hooks);
            break;
    }
    std::int64_t used = outcome.result.state.network.count_used();
    if (cfg.method == Method::sml) {
        used = outcome.result.state.network.count_params() *
               static_cast<std::int64_t>(seq.size());
    }
    outcome.report = summarize(cfg.method, seq.name, cfg.seed, outcome.result.matrix,
                               used, cfg.fwt_paper_indexing);
    return outcome;
}

namespace {

void write_history_csv(const fs::path& path, const SequenceRunState& state) {
    std::ofstream os(path);
    os << "dataset_idx,epoch,task_idx,test_accuracy,remaining_ratio,train_loss\n";
    for (const EpochRecord& rec : state.history) {
        for (std::size_t task = 0; task < rec.task_accuracy.size(); ++task) {
            os << rec.dataset_idx << ',' << rec.epoch << ',' << task << ','
               << format_fixed(rec.task_accuracy[task], 4) << ','
               << format_fixed(rec.remaining_ratio, 6) << ','
               << format_fixed(rec.train_loss, 6) << '\n';
        }
    }
}

void write_layer_usage_csv(const fs::path& path, const SequenceRunState& state) {
    std::ofstream os(path);
    os << "dataset_idx,layer_idx,layer_name,used_fraction\n";
    for (const LayerUsageRecord& rec : state.layer_usage) {
        os << rec.dataset_idx << ',' << rec.layer_idx << ',' << rec.layer_name << ','
           << format_fixed(rec.used_fraction, 6) << '\n';
    }
}

void write_matrix_csv(const fs::path& path, const ResultMatrix& m) {
    std::ofstream os(path);
    os << "row";
    for (int j = 0; j < m.t; ++j) os << ",task" << j;
    os << '\n';
    os << "b_bar";
    for (int j = 0; j < m.t; ++j) os << ',' << format_fixed(m.b_bar[static_cast<std::size_t>(j)], 4);
    os << '\n';
    for (int i = 0; i < m.t; ++i) {
        os << "after_d" << i;
        for (int j = 0; j < m.t; ++j) os << ',' << format_fixed(m.at(i, j), 4);
        os << '\n';
    }
}

void write_metrics_json(const fs::path& path, const MetricsReport& rep) {
    nlohmann::ordered_json j;
    j["acc"] = nlohmann::json::parse(format_fixed(rep.acc, 2));
    j["bwt"] = rep.bwt ? nlohmann::ordered_json(nlohmann::json::parse(format_fixed(*rep.bwt, 2)))
                       : nlohmann::ordered_json(nullptr);
    j["fwt"] = rep.fwt ? nlohmann::ordered_json(nlohmann::json::parse(format_fixed(*rep.fwt, 2)))
                       : nlohmann::ordered_json(nullptr);
    j["used_params"] = rep.used_params;
    j["method"] = rep.method;
    j["sequence"] = rep.sequence;
    j["seed"] = rep.seed;
    std::ofstream os(path);
    os << j.dump(2) << '\n';
}

}  // namespace

ExperimentOutcome run_experiment_to_dir(const ExperimentConfig& cfg) {
    if (cfg.output_dir.empty()) throw ConfigError("output_dir is required for a run");
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);

    nlohmann::ordered_json manifest;
    manifest["config"] = nlohmann::json::parse(cfg.source_json.empty() ? "{}" : cfg.source_json);
    manifest["method"] = method_name(cfg.method);
    manifest["seed"] = cfg.seed;
    manifest["code_version"] = ADAPTCL_VERSION;
    manifest["started_at"] = iso_utc_now();
    {
        std::ofstream os(dir / "manifest.json");
        os << manifest.dump(2) << '\n';
    }

    TrainerHooks hooks;
    hooks.on_dataset_end = [&](Network& net, int dataset_idx) {
        save_network((dir / ("checkpoint_d" + std::to_string(dataset_idx) + ".aclk")).string(),
                     net);
    };

    ExperimentOutcome outcome = run_experiment(cfg, hooks);

    write_history_csv(dir / "history.csv", outcome.result.state);
    write_layer_usage_csv(dir / "layer_usage.csv", outcome.result.state);
    write_matrix_csv(dir / "r_matrix.csv", outcome.result.matrix);
    write_metrics_json(dir / "metrics.json", outcome.report);

    manifest["finished_at"] = iso_utc_now();
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
            paths.push_back(entry.path());
        }
    }
    std::sort(paths.begin(), paths.end());
    for (const fs::path& p : paths) {
        nlohmann::ordered_json f;
        f["name"] = p.filename().string();
        f["size"] = static_cast<std::uint64_t>(fs::file_size(p));
        char crc[16];
        std::snprintf(crc, sizeof(crc), "%08x", file_crc32(p));
        f["crc32"] = crc;
        files.push_back(f);
    }
    manifest["files"] = files;
    {
        std::ofstream os(dir / "manifest.json");
        os << manifest.dump(2) << '\n';
    }
    return outcome;
}

int write_compare_csv(const std::vector<std::string>& run_dirs,
                      const std::string& out_path) {
    std::ofstream os(out_path);
    os << "method,sequence,seed,acc,bwt,fwt,used_params\n";
    int rows = 0;
    for (const std::string& run : run_dirs) {
        const fs::path metrics = fs::path(run) / "metrics.json";
        std::ifstream f(metrics);
        if (!f) {
            std::cerr << "compare: skipping " << run << " (no metrics.json)\n";
            continue;
        }
        nlohmann::json j;
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            std::cerr << "compare: skipping " << run << " (" << e.what() << ")\n";
            continue;
        }
        auto num_or_blank = [&](const char* key) -> std::string {
            if (!j.contains(key) || j.at(key).is_null()) return "";
            return format_fixed(j.at(key).get<double>(), 2);
        };
        os << j.value("method", "?") << ',' << j.value("sequence", "?") << ','
           << j.value("seed", 0) << ',' << num_or_blank("acc") << ','
           << num_or_blank("bwt") << ',' << num_or_blank("fwt") << ','
           << j.value("used_params", 0) << '\n';
        ++rows;
    }
    return rows;
}

namespace {

struct HistoryRow {
    int dataset_idx, epoch, task_idx;
    double accuracy, ratio, loss;
};

std::vector<HistoryRow> read_history(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("missing run history: " + path.string());
    std::string line;
    std::getline(f, line);  // header
    std::vector<HistoryRow> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 6) throw FormatError("malformed history row: " + line);
        rows.push_back({std::stoi(cells[0]), std::stoi(cells[1]), std::stoi(cells[2]),
                        std::stod(cells[3]), std::stod(cells[4]), std::stod(cells[5])});
    }
    return rows;
}

}  // namespace

void write_plot_svg(const std::string& run_dir, PlotKind kind,
                    const std::string& out_path) {
    const fs::path dir(run_dir);
    std::string svg;
    if (kind == PlotKind::curves || kind == PlotKind::keep_ratio) {
        const std::vector<HistoryRow> rows = read_history(dir / "history.csv");
        int max_task = 0, max_dataset = 0;
        for (const auto& r : rows) {
            max_task = std::max(max_task, r.task_idx);
            max_dataset = std::max(max_dataset, r.dataset_idx);
        }
        // Dataset boundaries fall after each dataset's last epoch.
        std::vector<double> markers;
        int last_epoch_of_dataset = 0;
        for (int d = 0; d < max_dataset; ++d) {
            for (const auto& r : rows) {
                if (r.dataset_idx == d) last_epoch_of_dataset = std::max(last_epoch_of_dataset, r.epoch);
            }
            markers.push_back(static_cast<double>(last_epoch_of_dataset));
        }
        if (kind == PlotKind::curves) {
            std::vector<SvgSeries> series(static_cast<std::size_t>(max_task) + 1);
            for (int t = 0; t <= max_task; ++t) {
                series[static_cast<std::size_t>(t)].label = "task " + std::to_string(t);
            }
            for (const auto& r : rows) {
                auto& s = series[static_cast<std::size_t>(r.task_idx)];
                s.x.push_back(r.epoch);
                s.y.push_back(r.accuracy);
            }
            SvgChartSpec spec;
            spec.title = "Test accuracy per task";
            spec.x_label = "epoch";
            spec.y_label = "accuracy (%)";
            spec.y_min = 0.0;
            spec.y_max = 100.0;
            spec.x_markers = markers;
            svg = render_line_chart(spec, series);
        } else {
            SvgSeries s;
            s.label = "remaining ratio";
            for (const auto& r : rows) {
                if (r.task_idx != 0) continue;  // ratio repeats across task rows
                s.x.push_back(r.epoch);
                s.y.push_back(r.ratio);
            }
            SvgChartSpec spec;
            spec.title = "Model keep ratio";
            spec.x_label = "epoch";
            spec.y_label = "remaining ratio";
            spec.y_min = 0.0;
            spec.y_max = 1.0;
            spec.x_markers = markers;
            svg = render_line_chart(spec, {s});
        }
    } else {
        std::ifstream f(dir / "layer_usage.csv");
        if (!f) throw FormatError("missing layer_usage.csv in " + run_dir);
        std::string line;
        std::getline(f, line);
        std::vector<SvgBarGroup> groups;
        int n_datasets = 0;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto cells = split_csv_line(line);
            if (cells.size() != 4) throw FormatError("malformed layer_usage row: " + line);
            const int dataset = std::stoi(cells[0]);
            const int layer = std::stoi(cells[1]);
            n_datasets = std::max(n_datasets, dataset + 1);
            if (static_cast<std::size_t>(layer) >= groups.size()) {
                groups.resize(static_cast<std::size_t>(layer) + 1);
            }
            groups[static_cast<std::size_t>(layer)].label = cells[2];
            auto& vals = groups[static_cast<std::size_t>(layer)].values;
            if (static_cast<std::size_t>(dataset) >= vals.size()) {
                vals.resize(static_cast<std::size_t>(dataset) + 1, 0.0);
            }
            vals[static_cast<std::size_t>(dataset)] = std::stod(cells[3]);
        }
        std::vector<std::string> labels;
        for (int d = 0; d < n_datasets; ++d) labels.push_back("dataset " + std::to_string(d));
        svg = render_grouped_bars("Per-layer used fraction", labels, groups);
    }
    std::ofstream os(out_path);
    if (!os) throw FormatError("cannot write plot: " + out_path);
    os << svg;
}

}  // namespace adaptcl
