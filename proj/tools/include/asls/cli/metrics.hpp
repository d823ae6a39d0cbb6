#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "asls/optimizer.hpp"

namespace asls::cli {

inline constexpr std::string_view kMetricsHeader =
    "run_name,seed,epoch,iter,train_loss,step_size,grad_norm_sq,precond_norm_sq,backtracks,"
    "a_min,a_max,trace_A";

/// One CSV row per optimizer step. train_loss holds the full training loss on
/// the last step of each epoch and NaN elsewhere.
struct MetricsRow {
    std::string run_name;
    std::uint64_t seed = 0;
    int epoch = 0;
    Index iter = 0;
    double train_loss = 0.0;
    double step_size = 0.0;
    double grad_norm_sq = 0.0;
    double precond_norm_sq = 0.0;
    int backtracks = 0;
    double a_min = 0.0;
    double a_max = 0.0;
    double trace_a = 0.0;
};

[[nodiscard]] std::vector<MetricsRow> metrics_rows(const std::string& run_name,
                                                   const TrajectoryRecord& traj);

/// Header plus rows, floats at 17 significant digits, rows in the given order.
void write_metrics(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_metrics(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

/// Inverse of write_metrics. Throws std::runtime_error on a wrong header or a malformed row.
[[nodiscard]] std::vector<MetricsRow> read_metrics(std::istream& in);
[[nodiscard]] std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

enum class PlotPanel { train_loss, step_size };

[[nodiscard]] std::string_view to_string(PlotPanel panel) noexcept;

/// {"panel": ..., "series": [{"name", "x": epochs, "y": values}]}, one value per
/// epoch taken from the last step of that epoch. A run name with several seeds
/// yields one series per seed named "name@seed". Throws std::invalid_argument
/// naming any requested run that has no rows.
[[nodiscard]] nlohmann::json emit_plot_data(const std::vector<MetricsRow>& rows,
                                            const std::vector<std::string>& run_names,
                                            PlotPanel panel);

}  // namespace asls::cli
