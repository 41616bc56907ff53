#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace adaptcl {

class Network;
struct PreparedDataset;

/// T x T accuracy matrix: entry (i, j) is the test accuracy (percent) on
/// task j after finishing task i, plus the random-init baseline vector.
struct ResultMatrix {
    int t = 0;
    std::vector<double> r;      // row-major T x T, percent
    std::vector<double> b_bar;  // length T, percent at random init

    explicit ResultMatrix(int t_count = 0)
        : t(t_count),
          r(static_cast<std::size_t>(t_count) * static_cast<std::size_t>(t_count), 0.0),
          b_bar(static_cast<std::size_t>(t_count), 0.0) {}

    double& at(int i, int j) { return r[static_cast<std::size_t>(i) * t + j]; }
    double at(int i, int j) const { return r[static_cast<std::size_t>(i) * t + j]; }
};

struct MetricsReport {
    double acc = 0.0;
    std::optional<double> bwt;  // absent when T < 2 (or not applicable)
    std::optional<double> fwt;
    std::int64_t used_params = 0;
    std::string method;
    std::string sequence;
    std::uint64_t seed = 5;
};

/// Percent of argmax-correct predictions; ties pick the lowest class index.
double accuracy(Network& net, const PreparedDataset& dataset,
                std::int64_t eval_batch = 256);

/// Mean of the final row.
double compute_acc(const ResultMatrix& m);

/// Mean over earlier tasks of (final accuracy - accuracy right after that
/// task); negative values mean forgetting. Absent for T < 2.
std::optional<double> compute_bwt(const ResultMatrix& m);

/// Mean zero-shot gain over random init on tasks not yet trained. The
/// default sums the (i-1, i) terms for i = 2..T; `paper_indexing` stops the
/// sum at T-1 while keeping the 1/(T-1) normalizer.
std::optional<double> compute_fwt(const ResultMatrix& m, bool paper_indexing = false);

}  // namespace adaptcl
