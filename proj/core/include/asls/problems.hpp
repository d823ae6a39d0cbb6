#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "asls/objective.hpp"
#include "asls/types.hpp"

namespace asls {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Binary classification data: one sparse feature row and one +-1 label per example.
struct Dataset {
    SparseRows features;
    std::vector<double> labels;

    [[nodiscard]] Index rows() const noexcept { return static_cast<Index>(features.rows()); }
    [[nodiscard]] Index cols() const noexcept { return static_cast<Index>(features.cols()); }

    [[nodiscard]] double row_dot(Index i, const Weights& w) const;
    /// out += scale * x_i
    void add_row(Index i, double scale, Weights& out) const;
    [[nodiscard]] double row_norm_sq(Index i) const;

    /// Throws std::invalid_argument on non +-1 labels, non-finite features or
    /// a row/label count mismatch.
    void validate() const;

    friend bool operator==(const Dataset& a, const Dataset& b);
};

struct SeparableConfig {
    Index n = 1000;
    Index d = 20;
    double margin = 0.1;
    std::uint64_t seed = 0;
};

struct SeparableData {
    Dataset data;
    /// Unit-norm separator with y_i <w_true, x_i> >= margin for every i.
    Weights w_true;
};

/// Gaussian features labelled by a random unit separator; points closer than
/// `margin` to the separating hyperplane are pushed out along w_true.
[[nodiscard]] SeparableData gen_separable(const SeparableConfig& cfg);

/// min_i y_i <w, x_i>
[[nodiscard]] double min_margin(const Dataset& ds, const Weights& w);

/// f_i(w) = log(1 + exp(-y_i <x_i, w>)), f_i* = 0.
class LogisticObjective final : public FiniteSumObjective {
public:
    explicit LogisticObjective(Dataset data);

    [[nodiscard]] Index size() const override { return data_.rows(); }
    [[nodiscard]] Index dim() const override { return data_.cols(); }
    [[nodiscard]] double value(Index i, const Weights& w) const override;
    void add_grad(Index i, const Weights& w, double scale, Weights& out) const override;
    [[nodiscard]] std::optional<double> smoothness_bound() const override { return l_max_; }

    [[nodiscard]] const Dataset& data() const noexcept { return data_; }

private:
    Dataset data_;
    double l_max_;
};

/// Exact per-component smoothness of the logistic loss: max_i ||x_i||^2 / 4.
[[nodiscard]] double lmax_logistic(const Dataset& ds);

/// log(1 + exp(t)) without overflow.
[[nodiscard]] double softplus(double t) noexcept;
/// 1 / (1 + exp(-t)) without overflow.
[[nodiscard]] double sigmoid(double t) noexcept;

struct KernelConfig {
    double bandwidth = 1.0;
};

/// Replaces every example by its kernel row (K(x_i, x_1), ..., K(x_i, x_n)) with
/// K(x, y) = exp(-||x - y||^2 / (2 bandwidth^2)). The result is n x n, exactly
/// symmetric, with a unit diagonal.
[[nodiscard]] Dataset rbf_map(const Dataset& ds, const KernelConfig& cfg);

struct MatrixFactorizationOptions {
    Index rows = 10;
    Index cols = 6;
    Index samples = 1000;
    double condition_number = 1e10;
    double top_singular_value = 1.0;
};

/// Linear two-layer factorization min E ||W2 W1 x - A x||^2 over a fixed sample
/// set. The weight vector stacks vec(W1) (rank x cols) then vec(W2) (rows x rank),
/// both column-major.
struct MatrixFactorizationProblem {
    Eigen::MatrixXd target;
    /// One sample per row.
    Eigen::MatrixXd samples;
    Eigen::VectorXd singular_values;
    Index rank = 1;
    /// Factors with W2 * W1 == target in floating point, stored at full rank
    /// (rows x rows and rows x cols).
    Eigen::MatrixXd w2_full;
    Eigen::MatrixXd w1_full;

    [[nodiscard]] Index dim() const noexcept;
    [[nodiscard]] Eigen::MatrixXd w1(const Weights& w) const;
    [[nodiscard]] Eigen::MatrixXd w2(const Weights& w) const;
    [[nodiscard]] Weights pack(const Eigen::MatrixXd& w1, const Eigen::MatrixXd& w2) const;
    /// Exact factorization at this rank; empty when rank < rank(target).
    [[nodiscard]] std::optional<Weights> exact_factorization() const;
    /// Entries drawn i.i.d. from N(0, scale^2).
    [[nodiscard]] Weights initial_point(std::uint64_t seed, double scale) const;
    /// Ratio of the extreme singular values of target, computed by SVD.
    [[nodiscard]] double condition_number() const;
};

[[nodiscard]] MatrixFactorizationProblem gen_matrix_factorization(
    Index rank, std::uint64_t seed, const MatrixFactorizationOptions& options = {});

/// f_i(W1, W2) = ||W2 W1 x_i - A x_i||^2, f_i* = 0.
class MatrixFactorizationObjective final : public FiniteSumObjective {
public:
    explicit MatrixFactorizationObjective(MatrixFactorizationProblem problem);

    [[nodiscard]] Index size() const override;
    [[nodiscard]] Index dim() const override;
    [[nodiscard]] double value(Index i, const Weights& w) const override;
    void add_grad(Index i, const Weights& w, double scale, Weights& out) const override;
    [[nodiscard]] double batch_value(BatchView batch, const Weights& w) const override;
    [[nodiscard]] Weights batch_grad(BatchView batch, const Weights& w) const override;

    [[nodiscard]] const MatrixFactorizationProblem& problem() const noexcept { return problem_; }

private:
    [[nodiscard]] Eigen::MatrixXd residual_map(const Eigen::MatrixXd& w1,
                                               const Eigen::MatrixXd& w2) const;
    void accumulate_grad(const Eigen::MatrixXd& w1, const Eigen::MatrixXd& w2,
                         const Eigen::MatrixXd& residual_map, Index i, double scale,
                         Weights& out) const;

    MatrixFactorizationProblem problem_;
};

/// Separable quadratic f_i(w) = 1/2 sum_j h_ij (w_j - c_ij)^2 with h_ij >= 0, f_i* = 0.
class QuadraticObjective final : public FiniteSumObjective {
public:
    QuadraticObjective(Eigen::MatrixXd curvatures, Eigen::MatrixXd centers);

    [[nodiscard]] Index size() const override { return static_cast<Index>(curv_.rows()); }
    [[nodiscard]] Index dim() const override { return static_cast<Index>(curv_.cols()); }
    [[nodiscard]] double value(Index i, const Weights& w) const override;
    void add_grad(Index i, const Weights& w, double scale, Weights& out) const override;
    [[nodiscard]] std::optional<double> smoothness_bound() const override;

private:
    Eigen::MatrixXd curv_;
    Eigen::MatrixXd centers_;
};

/// f_i(w) = 1/2 (<x_i, w> - y_i)^2, f_i* = 0.
class LeastSquaresObjective final : public FiniteSumObjective {
public:
    LeastSquaresObjective(Eigen::MatrixXd features, Eigen::VectorXd targets);

    [[nodiscard]] Index size() const override { return static_cast<Index>(x_.rows()); }
    [[nodiscard]] Index dim() const override { return static_cast<Index>(x_.cols()); }
    [[nodiscard]] double value(Index i, const Weights& w) const override;
    void add_grad(Index i, const Weights& w, double scale, Weights& out) const override;
    [[nodiscard]] std::optional<double> smoothness_bound() const override;

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
};

}  // namespace asls
