#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adaptcl/baselines.hpp"
#include "adaptcl/datasets.hpp"
#include "adaptcl/trainer.hpp"

namespace adaptcl {

enum class Method { adaptcl, sgd, ewc, packnet_star, sml };

const char* method_name(Method m);
Method parse_method(const std::string& name);

enum class ModelKind { lenet5, toy_mlp, toy_cnn };

const char* model_name(ModelKind m);

/// Parsed and validated experiment description. Every documented key is
/// consumed; unknown keys and method-specific keys supplied for the wrong
/// method are rejected up front (ConfigError names the offending key).
struct ExperimentConfig {
    Method method = Method::adaptcl;
    std::string sequence = "synthetic_strong";
    std::vector<VariantSpec> explicit_tasks;  // when sequence is a task list
    ModelKind model = ModelKind::toy_cnn;
    bool model_explicit = false;
    std::uint64_t seed = 5;
    std::string output_dir;
    std::string data_dir;  // falls back to ADAPTCL_DATA_DIR
    bool shared_stats = false;
    bool fwt_paper_indexing = false;

    TrainConfig train;

    // Method-specific.
    EwcConfig ewc;
    PackNetConfig packnet;

    // Synthetic sequence sizing.
    SyntheticConfig synthetic;

    /// Raw JSON text the config was parsed from (manifest snapshot).
    std::string source_json;
};

/// Parses a JSON config file. `method_override` / `seed_override` mirror the
/// CLI flags and are applied after validation.
ExperimentConfig load_config(const std::string& path,
                             const std::optional<std::string>& method_override = {},
                             const std::optional<std::uint64_t>& seed_override = {});

ExperimentConfig parse_config_json(const std::string& json_text,
                                   const std::optional<std::string>& method_override = {},
                                   const std::optional<std::uint64_t>& seed_override = {});

}  // namespace adaptcl
