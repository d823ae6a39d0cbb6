#include "asls/problems.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace asls {

namespace {

Eigen::MatrixXd gaussian_matrix(std::mt19937_64& rng, Index rows, Index cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            m(i, j) = normal(rng);
        }
    }
    return m;
}

Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, Index size) {
    const Eigen::MatrixXd g = gaussian_matrix(rng, size, size);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
}

// The one place W2 * W1 is formed. The target is built through it as well, so
// the exact factorization reproduces it bit for bit.
Eigen::MatrixXd compose(const Eigen::MatrixXd& w2, const Eigen::MatrixXd& w1) {
    Eigen::MatrixXd product = w2 * w1;
    return product;
}

}  // namespace

// ---------------------------------------------------------------- Dataset

double Dataset::row_dot(Index i, const Weights& w) const {
    double acc = 0.0;
    for (SparseRows::InnerIterator it(features, static_cast<Eigen::Index>(i)); it; ++it) {
        acc += it.value() * w[it.index()];
    }
    return acc;
}

void Dataset::add_row(Index i, double scale, Weights& out) const {
    for (SparseRows::InnerIterator it(features, static_cast<Eigen::Index>(i)); it; ++it) {
        out[it.index()] += scale * it.value();
    }
}

double Dataset::row_norm_sq(Index i) const {
    double acc = 0.0;
    for (SparseRows::InnerIterator it(features, static_cast<Eigen::Index>(i)); it; ++it) {
        acc += it.value() * it.value();
    }
    return acc;
}

void Dataset::validate() const {
    if (static_cast<Index>(features.rows()) != labels.size()) {
        throw std::invalid_argument("dataset has " + std::to_string(features.rows()) +
                                    " rows but " + std::to_string(labels.size()) + " labels");
    }
    for (Index i = 0; i < labels.size(); ++i) {
        if (labels[i] != 1.0 && labels[i] != -1.0) {
            throw std::invalid_argument("label " + std::to_string(i) + " is not +-1");
        }
    }
    const double* values = features.valuePtr();
    for (Eigen::Index k = 0; k < features.nonZeros(); ++k) {
        if (!std::isfinite(values[k])) {
            throw std::invalid_argument("dataset contains a non-finite feature");
        }
    }
}

bool operator==(const Dataset& a, const Dataset& b) {
    if (a.labels != b.labels || a.features.rows() != b.features.rows() ||
        a.features.cols() != b.features.cols()) {
        return false;
    }
    const Eigen::MatrixXd diff = Eigen::MatrixXd(a.features) - Eigen::MatrixXd(b.features);
    return diff.size() == 0 || diff.cwiseAbs().maxCoeff() == 0.0;
}

// ---------------------------------------------------------- separable data

SeparableData gen_separable(const SeparableConfig& cfg) {
    if (!(cfg.margin > 0.0)) {
        throw std::invalid_argument("margin must be positive");
    }
    if (cfg.n == 0 || cfg.d == 0) {
        throw std::invalid_argument("separable dataset needs n, d > 0");
    }
    std::mt19937_64 rng(cfg.seed);
    Weights w_true = gaussian_matrix(rng, cfg.d, 1).col(0);
    w_true /= w_true.norm();
    Eigen::MatrixXd x = gaussian_matrix(rng, cfg.n, cfg.d);

    std::vector<double> labels(cfg.n);
    for (Index i = 0; i < cfg.n; ++i) {
        auto row = x.row(static_cast<Eigen::Index>(i));
        // Accumulate in column order, as Dataset::row_dot does, so the
        // certificate holds under the same arithmetic that checks it.
        auto dot = [&] {
            double acc = 0.0;
            for (Eigen::Index j = 0; j < row.size(); ++j) {
                acc += row[j] * w_true[j];
            }
            return acc;
        };
        const double z = dot();
        const double y = z >= 0.0 ? 1.0 : -1.0;
        labels[i] = y;
        // Push the point out along w_true until the certificate holds as evaluated.
        double target = cfg.margin;
        while (y * dot() < cfg.margin) {
            row += (y * target - dot()) * w_true.transpose();
            target += 1e-12 * cfg.margin;
        }
    }

    SeparableData out;
    out.data.features = x.sparseView(0.0, 0.0);
    out.data.features.makeCompressed();
    out.data.labels = std::move(labels);
    out.w_true = std::move(w_true);
    return out;
}

double min_margin(const Dataset& ds, const Weights& w) {
    double best = HUGE_VAL;
    for (Index i = 0; i < ds.rows(); ++i) {
        best = std::min(best, ds.labels[i] * ds.row_dot(i, w));
    }
    return best;
}

// ---------------------------------------------------------------- logistic

double softplus(double t) noexcept {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) noexcept {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double lmax_logistic(const Dataset& ds) {
    double best = 0.0;
    for (Index i = 0; i < ds.rows(); ++i) {
        best = std::max(best, ds.row_norm_sq(i));
    }
    return best / 4.0;
}

LogisticObjective::LogisticObjective(Dataset data) : data_(std::move(data)) {
    data_.validate();
    l_max_ = lmax_logistic(data_);
}

double LogisticObjective::value(Index i, const Weights& w) const {
    return softplus(-data_.labels[i] * data_.row_dot(i, w));
}

void LogisticObjective::add_grad(Index i, const Weights& w, double scale, Weights& out) const {
    const double y = data_.labels[i];
    const double z = y * data_.row_dot(i, w);
    data_.add_row(i, -scale * y * sigmoid(-z), out);
}

// -------------------------------------------------------------------- RBF

Dataset rbf_map(const Dataset& ds, const KernelConfig& cfg) {
    if (!(cfg.bandwidth > 0.0)) {
        throw std::invalid_argument("RBF bandwidth must be positive");
    }
    const Eigen::MatrixXd x(ds.features);
    const auto n = x.rows();
    const Eigen::VectorXd sq = x.rowwise().squaredNorm();
    const Eigen::MatrixXd gram = x * x.transpose();
    const double scale = 1.0 / (2.0 * cfg.bandwidth * cfg.bandwidth);

    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dist = std::max(0.0, sq[i] + sq[j] - 2.0 * gram(i, j));
            k(i, j) = std::exp(-dist * scale);
            k(j, i) = k(i, j);
        }
    }
    Dataset out;
    out.features = k.sparseView(0.0, 0.0);
    out.features.makeCompressed();
    out.labels = ds.labels;
    return out;
}

// --------------------------------------------------- matrix factorization

Index MatrixFactorizationProblem::dim() const noexcept {
    return rank * static_cast<Index>(target.cols()) + static_cast<Index>(target.rows()) * rank;
}

Eigen::MatrixXd MatrixFactorizationProblem::w1(const Weights& w) const {
    const auto r = static_cast<Eigen::Index>(rank);
    return Eigen::Map<const Eigen::MatrixXd>(w.data(), r, target.cols());
}

Eigen::MatrixXd MatrixFactorizationProblem::w2(const Weights& w) const {
    const auto r = static_cast<Eigen::Index>(rank);
    return Eigen::Map<const Eigen::MatrixXd>(w.data() + r * target.cols(), target.rows(), r);
}

Weights MatrixFactorizationProblem::pack(const Eigen::MatrixXd& w1m,
                                         const Eigen::MatrixXd& w2m) const {
    const auto r = static_cast<Eigen::Index>(rank);
    if (w1m.rows() != r || w1m.cols() != target.cols() || w2m.rows() != target.rows() ||
        w2m.cols() != r) {
        throw std::invalid_argument("factor shapes do not match the problem rank");
    }
    Weights w(static_cast<Eigen::Index>(dim()));
    Eigen::Map<Eigen::MatrixXd>(w.data(), r, target.cols()) = w1m;
    Eigen::Map<Eigen::MatrixXd>(w.data() + r * target.cols(), target.rows(), r) = w2m;
    return w;
}

std::optional<Weights> MatrixFactorizationProblem::exact_factorization() const {
    const auto r = static_cast<Eigen::Index>(rank);
    if (r < target.cols()) {
        return std::nullopt;
    }
    if (r == w2_full.cols()) {
        return pack(w1_full, w2_full);
    }
    // Drops rows of W1 that are identically zero; equal to target up to rounding.
    return pack(w1_full.topRows(r), w2_full.leftCols(r));
}

Weights MatrixFactorizationProblem::initial_point(std::uint64_t seed, double scale) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    Weights w(static_cast<Eigen::Index>(dim()));
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        w[j] = normal(rng);
    }
    return w;
}

double MatrixFactorizationProblem::condition_number() const {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(target);
    const auto& s = svd.singularValues();
    return s.maxCoeff() / s.minCoeff();
}

MatrixFactorizationProblem gen_matrix_factorization(Index rank, std::uint64_t seed,
                                                    const MatrixFactorizationOptions& options) {
    if (options.cols == 0 || options.rows < options.cols) {
        throw std::invalid_argument("matrix factorization needs rows >= cols > 0");
    }
    if (rank == 0 || rank > options.rows) {
        throw std::invalid_argument("rank must lie in [1, " + std::to_string(options.rows) + "]");
    }
    if (!(options.condition_number >= 1.0) || !(options.top_singular_value > 0.0)) {
        throw std::invalid_argument("condition number must be >= 1 and scale positive");
    }
    std::mt19937_64 rng(seed);
    const auto rows = static_cast<Eigen::Index>(options.rows);
    const auto cols = static_cast<Eigen::Index>(options.cols);

    MatrixFactorizationProblem p;
    p.rank = rank;
    p.singular_values.resize(cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        const double frac = cols == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(cols - 1);
        p.singular_values[j] =
            options.top_singular_value * std::pow(options.condition_number, -frac);
    }
    const Eigen::MatrixXd u = random_orthogonal(rng, options.rows);
    const Eigen::MatrixXd v = random_orthogonal(rng, options.cols);

    p.w2_full = u;
    p.w1_full = Eigen::MatrixXd::Zero(rows, cols);
    p.w1_full.topRows(cols) = p.singular_values.asDiagonal() * v.transpose();
    p.target = compose(p.w2_full, p.w1_full);
    p.samples = gaussian_matrix(rng, options.samples, options.cols);
    return p;
}

MatrixFactorizationObjective::MatrixFactorizationObjective(MatrixFactorizationProblem problem)
    : problem_(std::move(problem)) {}

Index MatrixFactorizationObjective::size() const {
    return static_cast<Index>(problem_.samples.rows());
}

Index MatrixFactorizationObjective::dim() const { return problem_.dim(); }

Eigen::MatrixXd MatrixFactorizationObjective::residual_map(const Eigen::MatrixXd& w1,
                                                           const Eigen::MatrixXd& w2) const {
    Eigen::MatrixXd e = compose(w2, w1);
    e -= problem_.target;
    return e;
}

double MatrixFactorizationObjective::value(Index i, const Weights& w) const {
    const Eigen::MatrixXd e = residual_map(problem_.w1(w), problem_.w2(w));
    const Eigen::VectorXd r = e * problem_.samples.row(static_cast<Eigen::Index>(i)).transpose();
    return r.squaredNorm();
}

void MatrixFactorizationObjective::accumulate_grad(const Eigen::MatrixXd& w1,
                                                   const Eigen::MatrixXd& w2,
                                                   const Eigen::MatrixXd& e, Index i, double scale,
                                                   Weights& out) const {
    const auto r = static_cast<Eigen::Index>(problem_.rank);
    const auto cols = problem_.target.cols();
    const auto rows = problem_.target.rows();
    const Eigen::VectorXd x = problem_.samples.row(static_cast<Eigen::Index>(i)).transpose();
    const Eigen::VectorXd res = e * x;
    const Eigen::VectorXd hidden = w1 * x;
    Eigen::Map<Eigen::MatrixXd> g1(out.data(), r, cols);
    Eigen::Map<Eigen::MatrixXd> g2(out.data() + r * cols, rows, r);
    g1.noalias() += (2.0 * scale) * (w2.transpose() * res) * x.transpose();
    g2.noalias() += (2.0 * scale) * res * hidden.transpose();
}

void MatrixFactorizationObjective::add_grad(Index i, const Weights& w, double scale,
                                            Weights& out) const {
    const Eigen::MatrixXd w1 = problem_.w1(w);
    const Eigen::MatrixXd w2 = problem_.w2(w);
    accumulate_grad(w1, w2, residual_map(w1, w2), i, scale, out);
}

double MatrixFactorizationObjective::batch_value(BatchView batch, const Weights& w) const {
    check_batch(batch);
    const Eigen::MatrixXd e = residual_map(problem_.w1(w), problem_.w2(w));
    double acc = 0.0;
    for (Index i : batch) {
        const Eigen::VectorXd r =
            e * problem_.samples.row(static_cast<Eigen::Index>(i)).transpose();
        acc += r.squaredNorm();
    }
    return acc / static_cast<double>(batch.size());
}

Weights MatrixFactorizationObjective::batch_grad(BatchView batch, const Weights& w) const {
    check_batch(batch);
    const Eigen::MatrixXd w1 = problem_.w1(w);
    const Eigen::MatrixXd w2 = problem_.w2(w);
    const Eigen::MatrixXd e = residual_map(w1, w2);
    Weights out = Weights::Zero(static_cast<Eigen::Index>(dim()));
    for (Index i : batch) {
        accumulate_grad(w1, w2, e, i, 1.0, out);
    }
    out /= static_cast<double>(batch.size());
    return out;
}

// ---------------------------------------------------------------- quadratic

QuadraticObjective::QuadraticObjective(Eigen::MatrixXd curvatures, Eigen::MatrixXd centers)
    : curv_(std::move(curvatures)), centers_(std::move(centers)) {
    if (curv_.rows() != centers_.rows() || curv_.cols() != centers_.cols()) {
        throw std::invalid_argument("curvature and center matrices must have the same shape");
    }
    if ((curv_.array() < 0.0).any()) {
        throw std::invalid_argument("curvatures must be nonnegative");
    }
}

double QuadraticObjective::value(Index i, const Weights& w) const {
    const auto row = static_cast<Eigen::Index>(i);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < curv_.cols(); ++j) {
        const double diff = w[j] - centers_(row, j);
        acc += curv_(row, j) * diff * diff;
    }
    return 0.5 * acc;
}

void QuadraticObjective::add_grad(Index i, const Weights& w, double scale, Weights& out) const {
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < curv_.cols(); ++j) {
        out[j] += scale * curv_(row, j) * (w[j] - centers_(row, j));
    }
}

std::optional<double> QuadraticObjective::smoothness_bound() const {
    return curv_.size() == 0 ? 0.0 : curv_.maxCoeff();
}

// ------------------------------------------------------------ least squares

LeastSquaresObjective::LeastSquaresObjective(Eigen::MatrixXd features, Eigen::VectorXd targets)
    : x_(std::move(features)), y_(std::move(targets)) {
    if (x_.rows() != y_.size()) {
        throw std::invalid_argument("least squares: row/target count mismatch");
    }
}

double LeastSquaresObjective::value(Index i, const Weights& w) const {
    const auto row = static_cast<Eigen::Index>(i);
    const double r = x_.row(row).dot(w) - y_[row];
    return 0.5 * r * r;
}

void LeastSquaresObjective::add_grad(Index i, const Weights& w, double scale, Weights& out) const {
    const auto row = static_cast<Eigen::Index>(i);
    const double r = x_.row(row).dot(w) - y_[row];
    out += (scale * r) * x_.row(row).transpose();
}

std::optional<double> LeastSquaresObjective::smoothness_bound() const {
    return x_.rows() == 0 ? 0.0 : x_.rowwise().squaredNorm().maxCoeff();
}

}  // namespace asls
