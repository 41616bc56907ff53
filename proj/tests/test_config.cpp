#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adaptcl/config.hpp"
#include "adaptcl/errors.hpp"

using namespace adaptcl;

TEST_CASE("minimal config parses with defaults") {
    const ExperimentConfig cfg = parse_config_json(R"({"method": "adaptcl"})");
    CHECK(cfg.method == Method::adaptcl);
    CHECK(cfg.sequence == "synthetic_strong");
    CHECK(cfg.model == ModelKind::toy_cnn);
    CHECK(cfg.seed == 5);
    CHECK(cfg.train.epochs_per_dataset == 20);
    CHECK(cfg.train.batch_size == 32);
    CHECK(cfg.train.learning_rate == doctest::Approx(0.001f));
    CHECK(cfg.train.momentum == doctest::Approx(0.9f));
    CHECK(cfg.train.nesterov);
}

TEST_CASE("unknown keys are rejected by name") {
    CHECK_THROWS_WITH_AS(parse_config_json(R"({"method": "sgd", "learning_rte": 0.1})"),
                         doctest::Contains("learning_rte"), ConfigError);
}

TEST_CASE("method-specific keys are rejected for other methods") {
    CHECK_THROWS_WITH_AS(parse_config_json(R"({"method": "sgd", "alpha": 0.001})"),
                         doctest::Contains("alpha"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_json(R"({"method": "adaptcl", "lambda": 1.0})"),
                         doctest::Contains("lambda"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config_json(R"({"method": "ewc", "prune_fraction": 0.5})"),
        doctest::Contains("prune_fraction"), ConfigError);
    // And accepted for their own method.
    CHECK(parse_config_json(R"({"method": "ewc", "lambda": 0.3})").ewc.lambda ==
          doctest::Approx(0.3));
    CHECK(parse_config_json(R"({"method": "packnet_star", "prune_fraction": 0.25})")
              .packnet.prune_fraction == doctest::Approx(0.25));
}

TEST_CASE("sequence presets select sensible default models") {
    CHECK(parse_config_json(R"({"method": "sgd", "sequence": "mnist_strong"})").model ==
          ModelKind::lenet5);
    CHECK(parse_config_json(R"({"method": "sgd", "sequence": "synthetic_mild"})").model ==
          ModelKind::toy_cnn);
    CHECK_THROWS_AS(parse_config_json(R"({"method": "sgd", "sequence": "bogus"})"),
                    ConfigError);
}

TEST_CASE("explicit task lists parse into variant specs") {
    const ExperimentConfig cfg = parse_config_json(R"({
        "method": "sgd",
        "sequence": [{"variant": "identity"},
                     {"variant": "rotate", "rotation_max_degrees": 30}]
    })");
    REQUIRE(cfg.explicit_tasks.size() == 2);
    CHECK(cfg.explicit_tasks[0].kind == VariantKind::identity);
    CHECK(cfg.explicit_tasks[1].kind == VariantKind::rotate);
    CHECK(cfg.explicit_tasks[1].rotation_max_degrees == doctest::Approx(30.0f));
    CHECK(cfg.model == ModelKind::lenet5);
}

TEST_CASE("rotation ranges outside [0,45] are rejected") {
    CHECK_THROWS_AS(parse_config_json(R"({
        "method": "sgd",
        "sequence": [{"variant": "rotate", "rotation_max_degrees": 90}]
    })"),
                    ConfigError);
}

TEST_CASE("synthetic sizing keys only apply to synthetic sequences") {
    CHECK_THROWS_WITH_AS(parse_config_json(R"({
        "method": "sgd", "sequence": "mnist_mild", "synthetic_tasks": 4
    })"),
                         doctest::Contains("synthetic_tasks"), ConfigError);
    const ExperimentConfig cfg = parse_config_json(R"({
        "method": "sgd", "sequence": "synthetic_strong",
        "synthetic_tasks": 4, "synthetic_classes": 6,
        "synthetic_train_per_class": 99, "synthetic_test_per_class": 11
    })");
    CHECK(cfg.synthetic.n_tasks == 4);
    CHECK(cfg.synthetic.classes == 6);
    CHECK(cfg.synthetic.train_per_class == 99);
    CHECK(cfg.synthetic.test_per_class == 11);
}

TEST_CASE("identical preset defaults to two copies of task zero") {
    const ExperimentConfig cfg =
        parse_config_json(R"({"method": "adaptcl", "sequence": "synthetic_identical"})");
    CHECK(cfg.synthetic.identical_tasks);
    CHECK(cfg.synthetic.n_tasks == 2);
}

TEST_CASE("overrides replace method and seed after parsing") {
    const ExperimentConfig cfg = parse_config_json(
        R"({"method": "adaptcl", "seed": 11})", std::string("sgd"), std::uint64_t{17});
    CHECK(cfg.method == Method::sgd);
    CHECK(cfg.seed == 17);
    CHECK(cfg.train.seed == 17);
}

TEST_CASE("numeric validation failures name the problem") {
    CHECK_THROWS_AS(parse_config_json(R"({"method": "sgd", "learning_rate": -1})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"method": "sgd", "epochs_per_dataset": 0})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"method": "ewc", "lambda": -0.5})"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_config_json(R"({"method": "packnet_star", "prune_fraction": 1.5})"),
        ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"method": "packnet_star",
        "epochs_per_dataset": 10, "retrain_epochs": 10})"),
                    ConfigError);
}

TEST_CASE("malformed json is a config error") {
    CHECK_THROWS_AS(parse_config_json("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"(["array"])"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"sequence": "synthetic_strong"})"), ConfigError);
}

TEST_CASE("wrong value types are config errors") {
    CHECK_THROWS_AS(parse_config_json(R"({"method": "sgd", "batch_size": "many"})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"method": "sgd", "nesterov": 3})"),
                    ConfigError);
}
