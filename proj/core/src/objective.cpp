#include "asls/objective.hpp"

#include <numeric>
#include <string>
#include <vector>

namespace asls {

Weights FiniteSumObjective::grad(Index i, const Weights& w) const {
    Weights out = Weights::Zero(static_cast<Eigen::Index>(dim()));
    add_grad(i, w, 1.0, out);
    return out;
}

void FiniteSumObjective::check_batch(BatchView batch) const {
    if (batch.empty()) {
        throw std::invalid_argument("empty mini-batch");
    }
    for (Index i : batch) {
        if (i >= size()) {
            throw std::out_of_range("batch index " + std::to_string(i) + " >= n = " +
                                    std::to_string(size()));
        }
    }
}

double FiniteSumObjective::batch_value(BatchView batch, const Weights& w) const {
    check_batch(batch);
    double acc = 0.0;
    for (Index i : batch) {
        acc += value(i, w);
    }
    return acc / static_cast<double>(batch.size());
}

Weights FiniteSumObjective::batch_grad(BatchView batch, const Weights& w) const {
    check_batch(batch);
    Weights out = Weights::Zero(static_cast<Eigen::Index>(dim()));
    for (Index i : batch) {
        add_grad(i, w, 1.0, out);
    }
    out /= static_cast<double>(batch.size());
    return out;
}

double FiniteSumObjective::batch_f_star(BatchView batch) const {
    check_batch(batch);
    double acc = 0.0;
    for (Index i : batch) {
        acc += f_star(i);
    }
    return acc / static_cast<double>(batch.size());
}

double FiniteSumObjective::full_value(const Weights& w) const {
    std::vector<Index> all(size());
    std::iota(all.begin(), all.end(), Index{0});
    return batch_value(all, w);
}

Weights FiniteSumObjective::full_grad(const Weights& w) const {
    std::vector<Index> all(size());
    std::iota(all.begin(), all.end(), Index{0});
    return batch_grad(all, w);
}

}  // namespace asls
