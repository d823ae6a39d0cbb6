#include "asls/cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "asls/analysis.hpp"
#include "asls/cli/config.hpp"
#include "asls/cli/metrics.hpp"
#include "asls/cli/trajectory_io.hpp"

namespace asls::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Task {
    std::string id;
    NamedRun run;
    std::optional<double> grid_eta;
};

struct Outcome {
    bool ok = false;
    std::string error;
    std::vector<MetricsRow> rows;
    json summary;
};

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::vector<Task> expand(const ExperimentConfig& cfg, std::optional<std::uint64_t> seed,
                         const std::vector<double>& grid) {
    std::vector<Task> tasks;
    for (const auto& base : cfg.runs) {
        const std::uint64_t first = seed.value_or(base.config.seed);
        const std::size_t variants = grid.empty() ? 1 : grid.size();
        for (std::size_t v = 0; v < variants; ++v) {
            for (int rep = 0; rep < cfg.repetitions; ++rep) {
                Task t{base.name, base, std::nullopt};
                t.run.config.seed = first + static_cast<std::uint64_t>(rep);
                if (!grid.empty()) {
                    t.run.name = base.name + "_eta" + std::to_string(v);
                    t.run.config.step_size.kind = StepSizeKind::constant;
                    t.run.config.step_size.constant_eta = grid[v];
                    t.grid_eta = grid[v];
                }
                t.id = t.run.name;
                if (cfg.repetitions > 1) t.id += "_s" + std::to_string(t.run.config.seed);
                tasks.push_back(std::move(t));
            }
        }
    }
    return tasks;
}

Outcome execute(const Task& task, const Problem& problem, const fs::path& out_dir) {
    Outcome o;
    const auto& c = task.run.config;
    o.summary = {{"id", task.id},
                 {"name", task.run.name},
                 {"seed", c.seed},
                 {"optimizer", std::string(to_string(c.optimizer))},
                 {"step_size", std::string(to_string(c.step_size.kind))}};
    if (task.grid_eta) o.summary["eta"] = *task.grid_eta;
    const fs::path dir = out_dir / "runs" / task.id;
    fs::create_directories(dir);
    try {
        const RunResult result = run(*problem.objective, c, problem.initial_point(c.seed));
        o.rows = metrics_rows(task.run.name, result.trajectory);
        write_metrics(dir / "metrics.csv", o.rows);
        save_trajectory(dir / "trajectory.json", result.trajectory);
        const auto& epochs = result.trajectory.epochs;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : epochs) best = std::min(best, e.train_loss);
        o.ok = true;
        o.summary["status"] = "ok";
        o.summary["steps"] = result.trajectory.steps.size();
        o.summary["final_train_loss"] = epochs.empty() ? json() : json(epochs.back().train_loss);
        o.summary["best_train_loss"] = best;
        o.summary["averaged_train_loss"] = problem.objective->full_value(result.averaged_weights);
    } catch (const NumericalError& e) {
        o.error = e.what();
        o.summary["status"] = "diverged";
        o.summary["error"] = o.error;
    }
    return o;
}

// Runs the tasks on `jobs` threads; outputs are ordered by task regardless.
std::vector<Outcome> execute_all(const std::vector<Task>& tasks, const Problem& problem,
                                 const fs::path& out_dir, int jobs) {
    std::vector<Outcome> outcomes(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                outcomes[i] = execute(tasks[i], problem, out_dir);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return outcomes;
}

int run_experiment(const fs::path& config_path, std::optional<fs::path> out_opt,
                   std::optional<std::uint64_t> seed, int jobs, const std::vector<double>& grid,
                   std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg;
    Problem problem;
    std::vector<Task> tasks;
    try {
        cfg = load_experiment(config_path);
        problem = make_problem(cfg.problem, data_dir_from_env());
        tasks = expand(cfg, seed, grid);
        for (auto& t : tasks) {
            t.run.resolve(*problem.objective);
            t.run.config.validate(problem.objective->size());
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    }

    const fs::path out_dir = out_opt.value_or(cfg.output_dir);
    fs::create_directories(out_dir);
    const auto outcomes = execute_all(tasks, problem, out_dir, jobs);

    std::vector<MetricsRow> all_rows;
    json runs = json::array();
    std::vector<std::string> names;
    bool all_ok = true;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& o = outcomes[i];
        runs.push_back(o.summary);
        all_ok = all_ok && o.ok;
        if (!o.ok) {
            err << tasks[i].id << ": " << o.error << '\n';
            continue;
        }
        all_rows.insert(all_rows.end(), o.rows.begin(), o.rows.end());
        if (std::find(names.begin(), names.end(), tasks[i].run.name) == names.end()) {
            names.push_back(tasks[i].run.name);
        }
        out << tasks[i].id << ": final_train_loss=" << o.summary["final_train_loss"].dump() << '\n';
    }
    write_metrics(out_dir / "metrics.csv", all_rows);
    write_json(out_dir / "summary.json",
               {{"problem", problem.description}, {"config", config_path.string()}, {"runs", runs}});
    if (!names.empty()) {
        write_json(out_dir / "plot_train_loss.json",
                   emit_plot_data(all_rows, names, PlotPanel::train_loss));
        write_json(out_dir / "plot_step_size.json",
                   emit_plot_data(all_rows, names, PlotPanel::step_size));
    }
    out << "wrote " << (out_dir / "summary.json").string() << '\n';
    // A diverging grid point is a result of a sweep, not a failure of it.
    return all_ok || !grid.empty() ? kExitOk : kExitFailure;
}

int gen_data(const fs::path& config_path, std::optional<fs::path> out_opt, std::ostream& out,
             std::ostream& err) {
    try {
        const auto cfg = load_experiment(config_path);
        const fs::path dir = out_opt ? *out_opt : data_dir_from_env().value_or("data");
        for (const auto& file : write_problem_data(cfg.problem, dir)) out << file.string() << '\n';
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitOk;
}

json check(const std::string& name, bool passed, const std::string& detail = {}) {
    json j = {{"check", name}, {"passed", passed}};
    if (!detail.empty()) j["detail"] = detail;
    return j;
}

json verify_trajectory(const TrajectoryRecord& traj, bool& hard_ok) {
    json hard = json::array();
    json soft = json::array();

    std::optional<Index> bad_eta;
    std::optional<Index> bad_k;
    std::optional<Index> increase;
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
        const auto& s = traj.steps[i];
        if (!bad_eta && !(s.eta > 0.0 && std::isfinite(s.eta))) bad_eta = i;
        if (!bad_k && s.k != i) bad_k = i;
        if (!increase && i > 0 && s.eta > traj.steps[i - 1].eta) increase = i;
    }
    auto at = [](std::optional<Index> i) {
        return i ? "first at step " + std::to_string(*i) : std::string();
    };
    hard.push_back(check("step_size_positive", !bad_eta, at(bad_eta)));
    hard.push_back(check("iteration_counter", !bad_k, at(bad_k)));
    if (traj.step_size.conservative()) {
        hard.push_back(check("conservative_non_increasing", !increase, at(increase)));
    }
    if (traj.preconditioner.kind == PreconditionerKind::amsgrad) {
        const auto dec = first_preconditioner_decrease(traj);
        hard.push_back(check("amsgrad_monotone", check_amsgrad_monotone(traj), at(dec)));
    }
    if (traj.preconditioner.kind == PreconditionerKind::adagrad && !traj.preconditioner.clamp) {
        const auto report = check_adagrad_lemmas(traj);
        hard.push_back(check("adagrad_lemmas", report.passed(), report.to_text()));
    }
    const auto kind = traj.step_size.kind;
    const bool bounded = kind == StepSizeKind::lipschitz_ls || kind == StepSizeKind::armijo_ls ||
                         kind == StepSizeKind::sps || kind == StepSizeKind::armijo_sps;
    if (bounded && traj.l_max && !traj.steps.empty()) {
        TheoryInputs theory;
        theory.l_max = *traj.l_max;
        theory.a_min = std::numeric_limits<double>::infinity();
        theory.a_max = 0.0;
        for (const auto& s : traj.steps) {
            theory.a_min = std::min(theory.a_min, s.a_min);
            theory.a_max = std::max(theory.a_max, s.a_max);
        }
        theory.dim = traj.dim;
        const auto report = check_step_bounds(traj, theory);
        soft.push_back({{"check", "step_bounds"},
                        {"passed", report.passed()},
                        {"violation_fraction", report.violation_fraction()},
                        {"detail", report.to_text()}});
    }
    for (const auto& h : hard) hard_ok = hard_ok && h["passed"].get<bool>();
    return {{"hard", hard}, {"soft", soft}};
}

int verify(const fs::path& out_dir, std::ostream& out, std::ostream& err) {
    const fs::path runs_dir = out_dir / "runs";
    std::vector<fs::path> files;
    if (fs::is_directory(runs_dir)) {
        for (const auto& entry : fs::directory_iterator(runs_dir)) {
            const auto file = entry.path() / "trajectory.json";
            if (fs::exists(file)) files.push_back(file);
        }
    }
    if (files.empty()) {
        err << "verify: no trajectories under " << runs_dir.string() << '\n';
        return kExitUsage;
    }
    std::sort(files.begin(), files.end());

    bool all_ok = true;
    json report = json::array();
    for (const auto& file : files) {
        const std::string id = file.parent_path().filename().string();
        bool ok = true;
        json entry;
        try {
            entry = verify_trajectory(load_trajectory(file), ok);
        } catch (const std::exception& e) {
            ok = false;
            entry = {{"hard", json::array({check("load", false, e.what())})}, {"soft", json::array()}};
        }
        entry["id"] = id;
        entry["passed"] = ok;
        out << (ok ? "PASS " : "FAIL ") << id << '\n';
        for (const auto& h : entry["hard"]) {
            if (!h["passed"].get<bool>()) out << "  " << h["check"].get<std::string>() << ": " << h.value("detail", "") << '\n';
        }
        all_ok = all_ok && ok;
        report.push_back(std::move(entry));
    }
    const fs::path report_path = out_dir / "verify_report.json";
    write_json(report_path, {{"passed", all_ok}, {"runs", report}});
    if (!all_ok) {
        err << "verify: invariant failure; report at " << report_path.string() << '\n';
        return kExitFailure;
    }
    out << "verify: all invariants hold; report at " << report_path.string() << '\n';
    return kExitOk;
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
    const auto a = spec.find(':');
    const auto b = a == std::string::npos ? a : spec.find(':', a + 1);
    if (b == std::string::npos) throw std::invalid_argument("grid must be LO:HI:COUNT");
    double lo = 0.0;
    double hi = 0.0;
    long count = 0;
    try {
        std::size_t used = 0;
        lo = std::stod(spec.substr(0, a), &used);
        if (used != a) throw std::invalid_argument("lo");
        const auto hi_text = spec.substr(a + 1, b - a - 1);
        hi = std::stod(hi_text, &used);
        if (used != hi_text.size()) throw std::invalid_argument("hi");
        const auto count_text = spec.substr(b + 1);
        count = std::stol(count_text, &used);
        if (used != count_text.size()) throw std::invalid_argument("count");
    } catch (const std::exception&) {
        throw std::invalid_argument("grid must be LO:HI:COUNT, got '" + spec + "'");
    }
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi) || count < 1) {
        throw std::invalid_argument("grid needs 0 < LO <= HI and COUNT >= 1");
    }
    if (count == 1) return {lo};
    std::vector<double> values;
    const double l0 = std::log10(lo);
    const double l1 = std::log10(hi);
    for (long i = 0; i < count; ++i) {
        values.push_back(std::pow(10.0, l0 + (l1 - l0) * static_cast<double>(i) /
                                             static_cast<double>(count - 1)));
    }
    values.front() = lo;
    values.back() = hi;
    return values;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adaptive step-size optimizers: experiments and invariant checks", "asls"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string grid;

    auto* run_cmd = app.add_subcommand("run", "run every configured optimizer");
    auto* gen_cmd = app.add_subcommand("gen-data", "write the generated dataset files");
    auto* verify_cmd = app.add_subcommand("verify", "check invariants of saved trajectories");
    auto* sweep_cmd = app.add_subcommand("sweep", "constant step-size grid for every run");

    for (auto* cmd : {run_cmd, gen_cmd, sweep_cmd}) {
        cmd->add_option("--config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
    }
    CLI::Option* seed_opts[2];
    int idx = 0;
    for (auto* cmd : {run_cmd, sweep_cmd}) {
        seed_opts[idx++] = cmd->add_option("--seed", seed, "base seed (overrides the config)");
        cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    }
    for (auto* cmd : {run_cmd, gen_cmd, sweep_cmd, verify_cmd}) {
        cmd->add_option("--out", out_dir, "output directory");
    }
    sweep_cmd->add_option("--grid", grid, "LO:HI:COUNT, log-spaced")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const std::optional<fs::path> out_opt =
        out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir);
    try {
        if (*run_cmd || *sweep_cmd) {
            const bool seeded = *run_cmd ? seed_opts[0]->count() > 0 : seed_opts[1]->count() > 0;
            std::vector<double> values;
            if (*sweep_cmd) values = parse_grid(grid);
            return run_experiment(config, out_opt, seeded ? std::optional(seed) : std::nullopt,
                                  jobs, values, out, err);
        }
        if (*gen_cmd) return gen_data(config, out_opt, out, err);
        return verify(out_opt.value_or("out"), out, err);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

int main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace asls::cli
