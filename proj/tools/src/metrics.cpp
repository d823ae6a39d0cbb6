#include "asls/cli/metrics.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace asls::cli {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double parse_double(const std::string& s, std::size_t line) {
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw std::runtime_error("metrics line " + std::to_string(line) + ": bad number '" + s +
                                 "'");
    }
    return x;
}

unsigned long long parse_uint(const std::string& s, std::size_t line) {
    char* end = nullptr;
    const auto x = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || s.front() == '-') {
        throw std::runtime_error("metrics line " + std::to_string(line) + ": bad integer '" + s +
                                 "'");
    }
    return x;
}

}  // namespace

std::vector<MetricsRow> metrics_rows(const std::string& run_name, const TrajectoryRecord& traj) {
    std::map<Index, double> epoch_loss;
    for (const auto& e : traj.epochs) epoch_loss[e.k] = e.train_loss;

    std::vector<MetricsRow> rows;
    rows.reserve(traj.steps.size());
    for (const auto& s : traj.steps) {
        MetricsRow r;
        r.run_name = run_name;
        r.seed = traj.seed;
        r.epoch = s.epoch;
        r.iter = s.k;
        const auto it = epoch_loss.find(s.k);
        r.train_loss = it == epoch_loss.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
        r.step_size = s.eta;
        r.grad_norm_sq = s.grad_norm_sq;
        r.precond_norm_sq = s.precond_norm_sq;
        r.backtracks = s.backtracks;
        r.a_min = s.a_min;
        r.a_max = s.a_max;
        r.trace_a = s.trace_a;
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_metrics(std::ostream& out, const std::vector<MetricsRow>& rows) {
    out << kMetricsHeader << '\n';
    for (const auto& r : rows) {
        if (r.run_name.find_first_of(",\n\"") != std::string::npos) {
            throw std::invalid_argument("run name cannot contain commas, quotes or newlines: " +
                                        r.run_name);
        }
        out << r.run_name << ',' << r.seed << ',' << r.epoch << ',' << r.iter << ','
            << fmt(r.train_loss) << ',' << fmt(r.step_size) << ',' << fmt(r.grad_norm_sq) << ','
            << fmt(r.precond_norm_sq) << ',' << r.backtracks << ',' << fmt(r.a_min) << ','
            << fmt(r.a_max) << ',' << fmt(r.trace_a) << '\n';
    }
}

void write_metrics(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_metrics(out, rows);
}

std::vector<MetricsRow> read_metrics(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) {
        throw std::runtime_error("metrics: unexpected header");
    }
    std::vector<MetricsRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 12) {
            throw std::runtime_error("metrics line " + std::to_string(lineno) + ": expected 12 fields");
        }
        MetricsRow r;
        r.run_name = f[0];
        r.seed = parse_uint(f[1], lineno);
        r.epoch = static_cast<int>(parse_uint(f[2], lineno));
        r.iter = parse_uint(f[3], lineno);
        r.train_loss = parse_double(f[4], lineno);
        r.step_size = parse_double(f[5], lineno);
        r.grad_norm_sq = parse_double(f[6], lineno);
        r.precond_norm_sq = parse_double(f[7], lineno);
        r.backtracks = static_cast<int>(parse_uint(f[8], lineno));
        r.a_min = parse_double(f[9], lineno);
        r.a_max = parse_double(f[10], lineno);
        r.trace_a = parse_double(f[11], lineno);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return read_metrics(in);
}

std::string_view to_string(PlotPanel panel) noexcept {
    return panel == PlotPanel::train_loss ? "train_loss" : "step_size";
}

nlohmann::json emit_plot_data(const std::vector<MetricsRow>& rows,
                              const std::vector<std::string>& run_names, PlotPanel panel) {
    nlohmann::json series = nlohmann::json::array();
    for (const auto& name : run_names) {
        // Last row of each epoch, per seed.
        std::map<std::uint64_t, std::map<int, const MetricsRow*>> by_seed;
        for (const auto& r : rows) {
            if (r.run_name != name) continue;
            auto& slot = by_seed[r.seed][r.epoch];
            if (slot == nullptr || r.iter >= slot->iter) slot = &r;
        }
        if (by_seed.empty()) throw std::invalid_argument("unknown run: " + name);
        for (const auto& [seed, epochs] : by_seed) {
            std::vector<double> x;
            std::vector<double> y;
            for (const auto& [epoch, row] : epochs) {
                x.push_back(epoch);
                y.push_back(panel == PlotPanel::train_loss ? row->train_loss : row->step_size);
            }
            series.push_back(
                {{"name", by_seed.size() == 1 ? name : name + "@" + std::to_string(seed)},
                 {"x", x},
                 {"y", y}});
        }
    }
    return {{"panel", std::string(to_string(panel))}, {"series", series}};
}

}  // namespace asls::cli
