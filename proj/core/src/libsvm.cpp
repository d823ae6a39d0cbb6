#include "asls/libsvm.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string_view>
#include <vector>

#include <Eigen/SparseCore>

namespace asls {

namespace {

bool parse_double(std::string_view text, double& out) {
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    if (text.empty()) {
        return false;
    }
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

bool parse_index(std::string_view text, Index& out) {
    if (text.empty()) {
        return false;
    }
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

bool subset_of(const std::set<double>& seen, std::initializer_list<double> allowed) {
    return std::all_of(seen.begin(), seen.end(), [&](double v) {
        return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
    });
}

bool mappable(const std::set<double>& seen) {
    return subset_of(seen, {-1.0, 1.0}) || subset_of(seen, {0.0, 1.0}) ||
           subset_of(seen, {1.0, 2.0});
}

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

Dataset parse_libsvm(std::istream& in, Index min_features) {
    std::vector<Eigen::Triplet<double>> entries;
    std::vector<double> raw_labels;
    std::set<double> seen;
    Index features = min_features;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        std::string_view rest(line);
        auto next_token = [&rest]() -> std::string_view {
            const auto begin = rest.find_first_not_of(" \t");
            if (begin == std::string_view::npos) {
                rest = {};
                return {};
            }
            rest.remove_prefix(begin);
            const auto end = std::min(rest.find_first_of(" \t"), rest.size());
            const auto token = rest.substr(0, end);
            rest.remove_prefix(end);
            return token;
        };

        const auto label_token = next_token();
        if (label_token.empty() || label_token.front() == '#') {
            continue;
        }
        double label = 0.0;
        if (!parse_double(label_token, label)) {
            throw ParseError(line_no, "malformed label '" + std::string(label_token) + "'");
        }
        seen.insert(label);
        if (!mappable(seen)) {
            throw ParseError(line_no, "label " + std::string(label_token) +
                                          " does not fit a binary {-1,+1}, {0,1} or {1,2} label set");
        }
        const auto row = static_cast<int>(raw_labels.size());
        raw_labels.push_back(label);

        Index previous = 0;
        for (auto token = next_token(); !token.empty(); token = next_token()) {
            const auto colon = token.find(':');
            Index index = 0;
            double value = 0.0;
            if (colon == std::string_view::npos || !parse_index(token.substr(0, colon), index) ||
                !parse_double(token.substr(colon + 1), value)) {
                throw ParseError(line_no, "malformed feature '" + std::string(token) + "'");
            }
            if (index == 0) {
                throw ParseError(line_no, "feature indices are 1-based");
            }
            if (index <= previous) {
                throw ParseError(line_no, "feature index " + std::to_string(index) +
                                              " does not increase");
            }
            previous = index;
            features = std::max(features, index);
            entries.emplace_back(row, static_cast<int>(index - 1), value);
        }
    }

    const bool zero_one = !subset_of(seen, {-1.0, 1.0}) && subset_of(seen, {0.0, 1.0});
    const bool one_two = !subset_of(seen, {-1.0, 1.0}) && !zero_one;
    Dataset ds;
    ds.labels.reserve(raw_labels.size());
    for (double label : raw_labels) {
        if (zero_one) {
            ds.labels.push_back(label == 1.0 ? 1.0 : -1.0);
        } else if (one_two) {
            ds.labels.push_back(label == 2.0 ? 1.0 : -1.0);
        } else {
            ds.labels.push_back(label);
        }
    }
    ds.features.resize(static_cast<Eigen::Index>(raw_labels.size()),
                       static_cast<Eigen::Index>(features));
    ds.features.setFromTriplets(entries.begin(), entries.end());
    ds.features.makeCompressed();
    ds.validate();
    return ds;
}

Dataset load_libsvm(const std::string& path, Index min_features) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open LIBSVM file '" + path + "'");
    }
    return parse_libsvm(in, min_features);
}

void write_libsvm(std::ostream& out, const Dataset& ds) {
    char buf[64];
    for (Index i = 0; i < ds.rows(); ++i) {
        out << (ds.labels[i] > 0.0 ? "+1" : "-1");
        for (SparseRows::InnerIterator it(ds.features, static_cast<Eigen::Index>(i)); it; ++it) {
            std::snprintf(buf, sizeof buf, " %lld:%.17g", static_cast<long long>(it.index() + 1),
                          it.value());
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace asls
