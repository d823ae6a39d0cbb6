#include "asls/types.hpp"

#include <cmath>

namespace asls {

bool all_finite(const Weights& v) noexcept {
    return first_non_finite(v) == static_cast<Index>(v.size());
}

double sum_sq(const Weights& v) noexcept {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        acc += v[j] * v[j];
    }
    return acc;
}

Index first_non_finite(const Weights& v) noexcept {
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (!std::isfinite(v[j])) {
            return static_cast<Index>(j);
        }
    }
    return static_cast<Index>(v.size());
}

void require_same_dim(const Weights& a, const Weights& b, const char* what) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    }
}

}  // namespace asls
