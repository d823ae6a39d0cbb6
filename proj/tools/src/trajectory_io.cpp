#include "asls/cli/trajectory_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace asls::cli {

using nlohmann::json;

namespace {

// JSON has no inf/nan; those travel as strings.
json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

double num_from(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw std::runtime_error("expected a number, got " + j.dump());
}

json precond_to_json(const PreconditionerOptions& p) {
    json j = {{"kind", std::string(to_string(p.kind))},
              {"beta2", p.beta2},
              {"epsilon", p.epsilon},
              {"bias_correction", p.bias_correction}};
    if (p.clamp) j["clamp"] = {p.clamp->a_min, p.clamp->a_max};
    return j;
}

PreconditionerOptions precond_from_json(const json& j) {
    PreconditionerOptions p;
    p.kind = preconditioner_kind_from_string(j.at("kind").get<std::string>());
    p.beta2 = j.at("beta2").get<double>();
    p.epsilon = j.at("epsilon").get<double>();
    p.bias_correction = j.at("bias_correction").get<bool>();
    if (j.contains("clamp")) p.clamp = PrecondBounds{j["clamp"].at(0), j["clamp"].at(1)};
    return p;
}

}  // namespace

json step_size_to_json(const StepSizeConfig& cfg) {
    const auto& ls = cfg.line_search;
    const auto& sps = cfg.sps;
    json j = {
        {"kind", std::string(to_string(cfg.kind))},
        {"constant_eta", cfg.constant_eta},
        {"line_search",
         {{"mode", ls.mode == LineSearchMode::armijo ? "armijo" : "lipschitz"},
          {"c", ls.c},
          {"eta_max", ls.eta_max},
          {"backtrack_factor", ls.backtrack_factor},
          {"max_backtracks", ls.max_backtracks},
          {"reset_option", ls.reset_option},
          {"reset_growth", ls.reset_growth},
          {"conservative", ls.conservative}}},
        {"sps",
         {{"mode", sps.mode == SpsMode::armijo ? "armijo" : "plain"},
          {"c", sps.c},
          {"eta_max", sps.eta_max},
          {"conservative", sps.conservative}}},
        {"theory",
         {{"theorem", std::string(to_string(cfg.theory.theorem))},
          {"l_max", cfg.theory.l_max},
          {"beta", cfg.theory.beta}}},
    };
    if (sps.smoothing_tau) j["sps"]["smoothing_tau"] = *sps.smoothing_tau;
    if (cfg.theory.a_min) j["theory"]["a_min"] = *cfg.theory.a_min;
    return j;
}

StepSizeConfig step_size_from_json(const json& j) {
    StepSizeConfig cfg;
    cfg.kind = step_size_kind_from_string(j.at("kind").get<std::string>());
    cfg.constant_eta = j.at("constant_eta").get<double>();
    const auto& ls = j.at("line_search");
    cfg.line_search.mode =
        ls.at("mode") == "armijo" ? LineSearchMode::armijo : LineSearchMode::lipschitz;
    cfg.line_search.c = ls.at("c");
    cfg.line_search.eta_max = ls.at("eta_max");
    cfg.line_search.backtrack_factor = ls.at("backtrack_factor");
    cfg.line_search.max_backtracks = ls.at("max_backtracks");
    cfg.line_search.reset_option = ls.at("reset_option");
    cfg.line_search.reset_growth = ls.at("reset_growth");
    cfg.line_search.conservative = ls.at("conservative");
    const auto& sps = j.at("sps");
    cfg.sps.mode = sps.at("mode") == "armijo" ? SpsMode::armijo : SpsMode::plain;
    cfg.sps.c = sps.at("c");
    cfg.sps.eta_max = sps.at("eta_max");
    cfg.sps.conservative = sps.at("conservative");
    if (sps.contains("smoothing_tau")) cfg.sps.smoothing_tau = sps["smoothing_tau"].get<double>();
    const auto& th = j.at("theory");
    cfg.theory.theorem = theorem_from_string(th.at("theorem").get<std::string>());
    cfg.theory.l_max = th.at("l_max");
    cfg.theory.beta = th.at("beta");
    if (th.contains("a_min")) cfg.theory.a_min = th["a_min"].get<double>();
    return cfg;
}

json trajectory_to_json(const TrajectoryRecord& traj) {
    json steps = json::array();
    for (const auto& s : traj.steps) {
        json r = {{"k", s.k},
                  {"epoch", s.epoch},
                  {"batch_loss", num(s.batch_loss)},
                  {"eta", num(s.eta)},
                  {"eta_start", num(s.eta_start)},
                  {"eta_bound", num(s.eta_bound)},
                  {"grad_norm_sq", num(s.grad_norm_sq)},
                  {"precond_norm_sq", num(s.precond_norm_sq)},
                  {"backtracks", s.backtracks},
                  {"warning", s.warning},
                  {"a_min", num(s.a_min)},
                  {"a_max", num(s.a_max)},
                  {"trace_a", num(s.trace_a)},
                  {"min_delta_a", num(s.min_delta_a)}};
        if (!s.diagonal.empty()) r["diagonal"] = s.diagonal;
        steps.push_back(std::move(r));
    }
    json epochs = json::array();
    for (const auto& e : traj.epochs) {
        epochs.push_back({{"epoch", e.epoch}, {"k", e.k}, {"train_loss", num(e.train_loss)}});
    }
    json j = {{"optimizer", std::string(to_string(traj.optimizer))},
              {"preconditioner", precond_to_json(traj.preconditioner)},
              {"step_size", step_size_to_json(traj.step_size)},
              {"momentum",
               {{"kind", std::string(to_string(traj.momentum.kind))},
                {"beta", traj.momentum.beta},
                {"gamma", traj.momentum.gamma}}},
              {"dim", traj.dim},
              {"n", traj.n},
              {"batch_size", traj.batch_size},
              {"seed", traj.seed},
              {"steps", std::move(steps)},
              {"epochs", std::move(epochs)}};
    if (traj.l_max) j["l_max"] = *traj.l_max;
    return j;
}

TrajectoryRecord trajectory_from_json(const json& j) {
    TrajectoryRecord t;
    t.optimizer = optimizer_kind_from_string(j.at("optimizer").get<std::string>());
    t.preconditioner = precond_from_json(j.at("preconditioner"));
    t.step_size = step_size_from_json(j.at("step_size"));
    const auto& m = j.at("momentum");
    t.momentum.kind = momentum_kind_from_string(m.at("kind").get<std::string>());
    t.momentum.beta = m.at("beta");
    t.momentum.gamma = m.at("gamma");
    t.dim = j.at("dim");
    t.n = j.at("n");
    t.batch_size = j.at("batch_size");
    t.seed = j.at("seed");
    if (j.contains("l_max")) t.l_max = j["l_max"].get<double>();
    for (const auto& r : j.at("steps")) {
        StepRecord s;
        s.k = r.at("k");
        s.epoch = r.at("epoch");
        s.batch_loss = num_from(r.at("batch_loss"));
        s.eta = num_from(r.at("eta"));
        s.eta_start = num_from(r.at("eta_start"));
        s.eta_bound = num_from(r.at("eta_bound"));
        s.grad_norm_sq = num_from(r.at("grad_norm_sq"));
        s.precond_norm_sq = num_from(r.at("precond_norm_sq"));
        s.backtracks = r.at("backtracks");
        s.warning = r.at("warning");
        s.a_min = num_from(r.at("a_min"));
        s.a_max = num_from(r.at("a_max"));
        s.trace_a = num_from(r.at("trace_a"));
        s.min_delta_a = num_from(r.at("min_delta_a"));
        if (r.contains("diagonal")) s.diagonal = r["diagonal"].get<std::vector<double>>();
        t.steps.push_back(std::move(s));
    }
    for (const auto& r : j.at("epochs")) {
        t.epochs.push_back({r.at("epoch"), r.at("k"), num_from(r.at("train_loss"))});
    }
    return t;
}

void save_trajectory(const std::filesystem::path& path, const TrajectoryRecord& traj) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << trajectory_to_json(traj).dump() << '\n';
}

TrajectoryRecord load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return trajectory_from_json(json::parse(in));
}

}  // namespace asls::cli
