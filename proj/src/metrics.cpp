#include "adaptcl/metrics.hpp"

#include <algorithm>

#include "adaptcl/datasets.hpp"
#include "adaptcl/errors.hpp"
#include "adaptcl/layers.hpp"

namespace adaptcl {

double accuracy(Network& net, const PreparedDataset& dataset, std::int64_t eval_batch) {
    const std::int64_t n = dataset.size();
    if (n == 0) throw InputError("accuracy: empty dataset");
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::int64_t correct = 0;
    std::vector<int> labels;
    for (std::int64_t first = 0; first < n; first += eval_batch) {
        const std::int64_t count = std::min(eval_batch, n - first);
        const Tensor batch = dataset.batch(order, first, count, &labels);
        const Tensor logits = net.forward(batch, /*train=*/false);
        const std::int64_t classes = logits.dim(1);
        for (std::int64_t b = 0; b < count; ++b) {
            const float* row = logits.data.data() + b * classes;
            std::int64_t best = 0;
            for (std::int64_t k = 1; k < classes; ++k) {
                if (row[k] > row[best]) best = k;  // strict: ties keep lowest index
            }
            if (best == labels[static_cast<std::size_t>(b)]) ++correct;
        }
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(n);
}

double compute_acc(const ResultMatrix& m) {
    double acc = 0.0;
    for (int j = 0; j < m.t; ++j) acc += m.at(m.t - 1, j);
    return acc / static_cast<double>(m.t);
}

std::optional<double> compute_bwt(const ResultMatrix& m) {
    if (m.t < 2) return std::nullopt;
    double s = 0.0;
    for (int i = 0; i < m.t - 1; ++i) {
        s += m.at(m.t - 1, i) - m.at(i, i);
    }
    return s / static_cast<double>(m.t - 1);
}

std::optional<double> compute_fwt(const ResultMatrix& m, bool paper_indexing) {
    if (m.t < 2) return std::nullopt;
    const int last = paper_indexing ? m.t - 1 : m.t;  // 1-based upper limit
    double s = 0.0;
    for (int i = 2; i <= last; ++i) {
        s += m.at(i - 2, i - 1) - m.b_bar[static_cast<std::size_t>(i - 1)];
    }
    return s / static_cast<double>(m.t - 1);
}

}  // namespace adaptcl
