#include "asls/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "asls/libsvm.hpp"
#include "asls/problems.hpp"

namespace asls::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void allow_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": bad value for '" + key + "': " + obj.at(key).dump());
    }
}

template <class T>
T require(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    return get_or<T>(obj, key, T{}, where);
}

template <class Fn>
auto enum_value(const json& obj, const char* key, const std::string& where, Fn from_string) {
    const auto name = require<std::string>(obj, key, where);
    try {
        return from_string(name);
    } catch (const std::exception&) {
        throw ConfigError(where + ": unknown " + key + " '" + name + "'");
    }
}

MomentumConfig parse_momentum(const json& j, OptimizerKind opt, const std::string& where) {
    MomentumConfig m;
    if (j.is_null()) {
        const bool adam_like = opt == OptimizerKind::adam || opt == OptimizerKind::amsgrad;
        m.kind = adam_like ? MomentumKind::moving_average : MomentumKind::none;
        m.beta = adam_like ? 0.9 : 0.0;
        m.gamma = 0.0;
        return m;
    }
    allow_keys(j, {"kind", "beta", "gamma"}, where);
    m.kind = enum_value(j, "kind", where, momentum_kind_from_string);
    m.beta = get_or(j, "beta", m.kind == MomentumKind::moving_average ? 0.9 : 0.0, where);
    m.gamma = get_or(j, "gamma", m.kind == MomentumKind::heavy_ball ? 0.25 : 0.0, where);
    return m;
}

StepSizeConfig parse_step_size(const json& j, const MomentumConfig& momentum, NamedRun& run,
                               const std::string& where) {
    StepSizeConfig s;
    if (j.is_null()) throw ConfigError(where + ": missing 'step_size'");
    allow_keys(j,
               {"kind", "eta", "c", "eta_max", "backtrack_factor", "max_backtracks", "reset",
                "reset_growth", "conservative", "smoothing", "smoothing_tau", "theorem", "l_max",
                "beta", "a_min"},
               where);
    s.kind = enum_value(j, "kind", where, step_size_kind_from_string);
    s.constant_eta = get_or(j, "eta", 1e-2, where);

    auto& ls = s.line_search;
    ls.mode = s.kind == StepSizeKind::lipschitz_ls ? LineSearchMode::lipschitz : LineSearchMode::armijo;
    ls.c = get_or(j, "c", 0.5, where);
    ls.eta_max = get_or(j, "eta_max", 10.0, where);
    ls.backtrack_factor = get_or(j, "backtrack_factor", 0.5, where);
    ls.max_backtracks = get_or(j, "max_backtracks", 100, where);
    ls.reset_option = get_or(j, "reset", 1, where);
    ls.reset_growth = get_or(j, "reset_growth", 2.0, where);
    ls.conservative = get_or(j, "conservative", false, where);

    auto& sps = s.sps;
    sps.mode = s.kind == StepSizeKind::sps ? SpsMode::plain : SpsMode::armijo;
    sps.c = ls.c;
    sps.eta_max = ls.eta_max;
    sps.conservative = ls.conservative;
    if (j.contains("smoothing_tau")) {
        sps.smoothing_tau = get_or(j, "smoothing_tau", 1.0, where);
    } else if (get_or(j, "smoothing", false, where)) {
        run.auto_smoothing = true;
    }

    auto& th = s.theory;
    if (s.kind == StepSizeKind::theory) {
        th.theorem = enum_value(j, "theorem", where, theorem_from_string);
    }
    th.beta = get_or(j, "beta", momentum.beta, where);
    if (j.contains("a_min")) th.a_min = get_or(j, "a_min", 1.0, where);
    if (j.contains("l_max")) {
        th.l_max = get_or(j, "l_max", 1.0, where);
    } else {
        run.auto_l_max = s.kind == StepSizeKind::theory;
    }
    return s;
}

json parse_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// Generation parameters with defaults filled in; the hash of this object names
// the cache file.
json canonical_generation(const json& problem) {
    const std::string where = "problem";
    const auto type = require<std::string>(problem, "type", where);
    if (type == "separable") {
        allow_keys(problem, {"type", "n", "d", "margin", "seed"}, where);
        const SeparableConfig def;
        return {{"type", type},
                {"n", get_or(problem, "n", def.n, where)},
                {"d", get_or(problem, "d", def.d, where)},
                {"margin", get_or(problem, "margin", def.margin, where)},
                {"seed", get_or(problem, "seed", def.seed, where)}};
    }
    if (type == "matrix_factorization") {
        allow_keys(problem,
                   {"type", "rank", "seed", "rows", "cols", "samples", "condition_number",
                    "top_singular_value", "init_scale"},
                   where);
        const MatrixFactorizationOptions def;
        return {{"type", type},
                {"rank", require<Index>(problem, "rank", where)},
                {"seed", get_or<std::uint64_t>(problem, "seed", 0, where)},
                {"rows", get_or(problem, "rows", def.rows, where)},
                {"cols", get_or(problem, "cols", def.cols, where)},
                {"samples", get_or(problem, "samples", def.samples, where)},
                {"condition_number", get_or(problem, "condition_number", def.condition_number, where)},
                {"top_singular_value",
                 get_or(problem, "top_singular_value", def.top_singular_value, where)}};
    }
    if (type == "libsvm") {
        allow_keys(problem, {"type", "path", "rbf_bandwidth", "min_features"}, where);
        return nullptr;
    }
    throw ConfigError("problem: unknown type '" + type + "'");
}

SeparableConfig separable_config(const json& g) {
    return {g["n"].get<Index>(), g["d"].get<Index>(), g["margin"].get<double>(),
            g["seed"].get<std::uint64_t>()};
}

MatrixFactorizationProblem generate_mf(const json& g) {
    MatrixFactorizationOptions o;
    o.rows = g["rows"];
    o.cols = g["cols"];
    o.samples = g["samples"];
    o.condition_number = g["condition_number"];
    o.top_singular_value = g["top_singular_value"];
    return gen_matrix_factorization(g["rank"].get<Index>(), g["seed"].get<std::uint64_t>(), o);
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    return {{"rows", m.rows()},
            {"cols", m.cols()},
            {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto data = j.at("data").get<std::vector<double>>();
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw std::runtime_error("cached matrix has the wrong size");
    }
    return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

json mf_to_json(const MatrixFactorizationProblem& p) {
    return {{"rank", p.rank},
            {"target", matrix_to_json(p.target)},
            {"samples", matrix_to_json(p.samples)},
            {"singular_values", matrix_to_json(p.singular_values)},
            {"w2_full", matrix_to_json(p.w2_full)},
            {"w1_full", matrix_to_json(p.w1_full)}};
}

MatrixFactorizationProblem mf_from_json(const json& j) {
    MatrixFactorizationProblem p;
    p.rank = j.at("rank");
    p.target = matrix_from_json(j.at("target"));
    p.samples = matrix_from_json(j.at("samples"));
    p.singular_values = matrix_from_json(j.at("singular_values"));
    p.w2_full = matrix_from_json(j.at("w2_full"));
    p.w1_full = matrix_from_json(j.at("w1_full"));
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    // Write then rename so concurrent readers never see a partial file.
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
    }
    fs::rename(tmp, path);
}

std::string libsvm_text(const Dataset& ds) {
    std::ostringstream out;
    write_libsvm(out, ds);
    return out.str();
}

}  // namespace

void NamedRun::resolve(const FiniteSumObjective& obj) {
    auto& s = config.step_size;
    if (auto_l_max) {
        const auto bound = obj.smoothness_bound();
        if (!bound) throw ConfigError(name + ": problem has no smoothness bound; set l_max");
        s.theory.l_max = *bound;
        auto_l_max = false;
    }
    if (auto_smoothing) {
        const double ratio =
            static_cast<double>(config.batch_size) / static_cast<double>(obj.size());
        s.sps.smoothing_tau = std::pow(2.0, ratio);
        auto_smoothing = false;
    }
}

void ExperimentConfig::validate() const {
    if (runs.empty()) throw ConfigError("no runs");
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    std::set<std::string> names;
    for (const auto& r : runs) {
        if (!names.insert(r.name).second) throw ConfigError("duplicate run name '" + r.name + "'");
    }
}

NamedRun parse_run(const json& block) {
    NamedRun run;
    run.name = require<std::string>(block, "name", "run");
    const std::string where = "run '" + run.name + "'";
    if (run.name.empty() || run.name.find_first_of(",\"/\\\n") != std::string::npos) {
        throw ConfigError(where + ": name must be nonempty without , \" / \\");
    }
    allow_keys(block,
               {"name", "optimizer", "batch_size", "epochs", "max_steps", "seed", "epsilon",
                "beta2", "bias_correction", "clamp", "averaging", "record_diagonals", "momentum",
                "step_size"},
               where);
    auto& c = run.config;
    c.optimizer = enum_value(block, "optimizer", where, optimizer_kind_from_string);
    c.batch_size = get_or<Index>(block, "batch_size", 128, where);
    c.epochs = get_or(block, "epochs", 50, where);
    if (block.contains("max_steps")) c.max_steps = get_or<Index>(block, "max_steps", 0, where);
    c.seed = get_or<std::uint64_t>(block, "seed", 0, where);
    c.epsilon = get_or(block, "epsilon", 1e-8, where);
    c.beta2 = get_or(block, "beta2", 0.999, where);
    c.bias_correction = get_or(block, "bias_correction", true, where);
    if (block.contains("clamp")) {
        const auto v = get_or(block, "clamp", std::vector<double>{}, where);
        if (v.size() != 2) throw ConfigError(where + ": clamp must be [a_min, a_max]");
        c.clamp = PrecondBounds{v[0], v[1]};
    }
    const auto avg = get_or<std::string>(block, "averaging", "uniform", where);
    if (avg != "uniform" && avg != "last") throw ConfigError(where + ": averaging must be uniform or last");
    c.averaging = avg == "uniform" ? Averaging::uniform : Averaging::last;
    c.record_diagonals = get_or(block, "record_diagonals", false, where);
    c.momentum = parse_momentum(block.value("momentum", json()), c.optimizer, where + " momentum");
    c.step_size =
        parse_step_size(block.value("step_size", json()), c.momentum, run, where + " step_size");
    try {
        c.momentum.validate();
        c.step_size.validate();
        c.preconditioner_options().validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return run;
}

ExperimentConfig parse_experiment(const json& doc) {
    allow_keys(doc, {"problem", "defaults", "runs", "repetitions", "output_dir"}, "config");
    ExperimentConfig cfg;
    if (!doc.contains("problem")) throw ConfigError("config: missing 'problem'");
    cfg.problem = doc["problem"];
    (void)canonical_generation(cfg.problem);
    cfg.repetitions = get_or(doc, "repetitions", 1, "config");
    cfg.output_dir = get_or<std::string>(doc, "output_dir", "out", "config");
    const json defaults = doc.value("defaults", json::object());
    if (!defaults.is_object()) throw ConfigError("config: defaults must be an object");
    if (!doc.contains("runs") || !doc["runs"].is_array()) {
        throw ConfigError("config: 'runs' must be an array");
    }
    for (const auto& block : doc["runs"]) {
        json merged = defaults;
        merged.merge_patch(block);
        cfg.runs.push_back(parse_run(merged));
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment(const fs::path& path) {
    return parse_experiment(parse_json_file(path));
}

std::uint64_t content_hash(const json& value) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char ch : value.dump()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex_digest(std::uint64_t hash) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string cache_stem(const json& problem) {
    const json g = canonical_generation(problem);
    if (g.is_null()) return {};
    return g["type"].get<std::string>() + "-" + hex_digest(content_hash(g));
}

std::vector<fs::path> write_problem_data(const json& problem, const fs::path& dir) {
    const json g = canonical_generation(problem);
    if (g.is_null()) throw ConfigError("problem type 'libsvm' has nothing to generate");
    fs::create_directories(dir);
    const std::string stem = cache_stem(problem);
    std::vector<fs::path> written;
    json meta = {{"problem", g}};
    if (g["type"] == "separable") {
        const auto data = gen_separable(separable_config(g));
        const fs::path file = dir / (stem + ".libsvm");
        write_text(file, libsvm_text(data.data));
        written.push_back(file);
        meta["w_true"] = std::vector<double>(data.w_true.data(), data.w_true.data() + data.w_true.size());
        meta["min_margin"] = min_margin(data.data, data.w_true);
    } else {
        const fs::path file = dir / (stem + ".json");
        write_text(file, mf_to_json(generate_mf(g)).dump());
        written.push_back(file);
    }
    const fs::path meta_file = dir / (stem + ".meta.json");
    write_text(meta_file, meta.dump(2) + "\n");
    written.push_back(meta_file);
    return written;
}

Problem make_problem(const json& problem, const std::optional<fs::path>& cache_dir) {
    const json g = canonical_generation(problem);
    Problem out;
    if (g.is_null()) {
        const auto path = require<std::string>(problem, "path", "problem");
        const auto min_features = get_or<Index>(problem, "min_features", 0, "problem");
        Dataset ds = load_libsvm(path, min_features);
        if (problem.contains("rbf_bandwidth")) {
            ds = rbf_map(ds, KernelConfig{get_or(problem, "rbf_bandwidth", 1.0, "problem")});
        }
        auto obj = std::make_shared<LogisticObjective>(std::move(ds));
        const Index d = obj->dim();
        out.objective = obj;
        out.initial_point = [d](std::uint64_t) { return Weights::Zero(static_cast<Eigen::Index>(d)).eval(); };
        out.description = "libsvm:" + path;
        return out;
    }

    const std::string stem = cache_stem(problem);
    out.description = stem;
    if (g["type"] == "separable") {
        const auto cfg = separable_config(g);
        Dataset ds;
        const std::optional<fs::path> file =
            cache_dir ? std::optional(*cache_dir / (stem + ".libsvm")) : std::nullopt;
        if (file) {
            if (!fs::exists(*file)) write_problem_data(problem, *cache_dir);
            ds = load_libsvm(file->string(), cfg.d);
        } else {
            ds = gen_separable(cfg).data;
        }
        auto obj = std::make_shared<LogisticObjective>(std::move(ds));
        out.objective = obj;
        out.initial_point = [d = cfg.d](std::uint64_t) {
            return Weights::Zero(static_cast<Eigen::Index>(d)).eval();
        };
        return out;
    }

    MatrixFactorizationProblem mf;
    const std::optional<fs::path> file =
        cache_dir ? std::optional(*cache_dir / (stem + ".json")) : std::nullopt;
    if (file) {
        if (!fs::exists(*file)) write_problem_data(problem, *cache_dir);
        std::ifstream in(*file);
        mf = mf_from_json(json::parse(in));
    } else {
        mf = generate_mf(g);
    }
    const double scale = get_or(problem, "init_scale", 0.1, "problem");
    auto obj = std::make_shared<MatrixFactorizationObjective>(std::move(mf));
    out.objective = obj;
    out.initial_point = [obj, scale](std::uint64_t seed) {
        return obj->problem().initial_point(seed, scale);
    };
    return out;
}

std::optional<fs::path> data_dir_from_env() {
    const char* dir = std::getenv("ASLS_DATA_DIR");
    if (dir == nullptr || *dir == '\0') return std::nullopt;
    return fs::path(dir);
}

}  // namespace asls::cli
