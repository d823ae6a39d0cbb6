#include <doctest.h>

#include <cmath>
#include <random>

#include "asls/problems.hpp"
#include "oracles.hpp"

using namespace asls;

namespace {

Weights random_weights(std::mt19937_64& rng, Index d, double scale) {
    std::normal_distribution<double> normal(0.0, scale);
    Weights w(static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = normal(rng);
    return w;
}

double rel_err(const oracle::Vec& fd, const Weights& g) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < fd.size(); ++j) {
        const double diff = fd[j] - g[static_cast<Eigen::Index>(j)];
        num += diff * diff;
        den += fd[j] * fd[j];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

Dataset dense(const std::vector<std::vector<double>>& rows, std::vector<double> labels) {
    Dataset ds;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(rows.front().size()));
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            if (rows[i][j] != 0.0) t.emplace_back(static_cast<int>(i), static_cast<int>(j), rows[i][j]);
        }
    }
    ds.features.setFromTriplets(t.begin(), t.end());
    ds.labels = std::move(labels);
    return ds;
}

}  // namespace

TEST_CASE("separable data certifies its margin") {
    for (double m : {0.01, 0.1, 0.5, 1.0}) {
        const auto data = gen_separable({1000, 20, m, 3});
        CHECK(data.data.rows() == 1000);
        CHECK(data.data.cols() == 20);
        CHECK(data.w_true.norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(min_margin(data.data, data.w_true) >= m);
        for (double y : data.data.labels) CHECK(std::abs(y) == 1.0);
    }
}

TEST_CASE("larger margin keeps the data separable with a larger gap") {
    double prev = 0.0;
    for (double m : {0.01, 0.05, 0.1, 0.5, 1.0, 2.0}) {
        const auto data = gen_separable({300, 10, m, 8});
        const double got = min_margin(data.data, data.w_true);
        CHECK(got >= m);
        CHECK(got >= prev);
        prev = got;
    }
}

TEST_CASE("separable generation is deterministic under the seed") {
    const auto a = gen_separable({100, 5, 0.1, 42});
    const auto b = gen_separable({100, 5, 0.1, 42});
    const auto c = gen_separable({100, 5, 0.1, 43});
    CHECK(a.data == b.data);
    CHECK(a.w_true == b.w_true);
    CHECK_FALSE(a.data == c.data);
}

TEST_CASE("logistic loss at zero is log 2") {
    const LogisticObjective obj(gen_separable({50, 4, 0.1, 1}).data);
    const Weights w = Weights::Zero(4);
    for (Index i = 0; i < obj.size(); ++i) CHECK(obj.value(i, w) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("logistic gradient matches finite differences") {
    const LogisticObjective obj(gen_separable({200, 8, 0.1, 2}).data);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<Index> pick(0, obj.size() - 1);
    for (int t = 0; t < 20; ++t) {
        const Index i = pick(rng);
        const Weights w = random_weights(rng, obj.dim(), 1.0);
        const auto fd = oracle::finite_difference(obj, i, w, 1e-6);
        const Weights g = obj.grad(i, w);
        for (std::size_t j = 0; j < fd.size(); ++j) {
            CHECK(std::abs(fd[j] - g[static_cast<Eigen::Index>(j)]) < 1e-6);
        }
    }
}

TEST_CASE("logistic loss vanishes far along the separator") {
    const double m = 0.1;
    const auto data = gen_separable({200, 6, m, 4});
    const LogisticObjective obj(data.data);
    const Weights w = 50.0 * data.w_true / data.w_true.squaredNorm() / m;
    for (Index i = 0; i < obj.size(); ++i) CHECK(obj.value(i, w) < 1e-8);
}

TEST_CASE("logistic stays finite at extreme margins") {
    const LogisticObjective obj(dense({{1.0}}, {1.0}));
    CHECK(obj.value(0, Weights::Constant(1, -1e4)) == doctest::Approx(1e4));
    CHECK(obj.value(0, Weights::Constant(1, 1e4)) == 0.0);
    CHECK(std::isfinite(obj.grad(0, Weights::Constant(1, -1e4))[0]));
    CHECK(softplus(-800.0) == 0.0);
    CHECK(softplus(800.0) == 800.0);
    CHECK(sigmoid(-800.0) == 0.0);
    CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("lmax_logistic") {
    CHECK(lmax_logistic(dense({{2.0, 0.0}}, {1.0})) == 1.0);
    CHECK(lmax_logistic(dense({{2.0, 0.0}}, {-1.0})) == 1.0);
    const auto ds = gen_separable({30, 3, 0.1, 9}).data;
    Dataset doubled = ds;
    doubled.features *= 2.0;
    CHECK(lmax_logistic(doubled) == doctest::Approx(4.0 * lmax_logistic(ds)).epsilon(1e-14));
    const LogisticObjective obj(ds);
    REQUIRE(obj.smoothness_bound());
    CHECK(*obj.smoothness_bound() == lmax_logistic(ds));
}

TEST_CASE("batch value is the mean of component values") {
    const LogisticObjective obj(gen_separable({100, 5, 0.1, 6}).data);
    std::mt19937_64 rng(1);
    const Weights w = random_weights(rng, 5, 1.0);
    const std::vector<Index> batch{3, 3, 17, 99, 0, 42};
    double mean = 0.0;
    for (Index i : batch) mean += obj.value(i, w);
    mean /= static_cast<double>(batch.size());
    CHECK(std::abs(obj.batch_value(batch, w) - mean) <= 1e-12 * static_cast<double>(batch.size()));
    CHECK(obj.value(5, w) == obj.value(5, w));
}

TEST_CASE("rbf features") {
    const auto ds = gen_separable({40, 3, 0.1, 12}).data;
    const Dataset k = rbf_map(ds, {1.5});
    CHECK(k.rows() == 40);
    CHECK(k.cols() == 40);
    CHECK(k.labels == ds.labels);
    const Eigen::MatrixXd m = k.features.toDense();
    for (int i = 0; i < 40; ++i) {
        CHECK(m(i, i) == 1.0);
        for (int j = 0; j < 40; ++j) CHECK(std::abs(m(i, j) - m(j, i)) <= 1e-14);
    }
    const Dataset wide = rbf_map(ds, {1e6});
    CHECK(wide.features.toDense().minCoeff() > 0.999);
    CHECK_THROWS_AS((void)rbf_map(ds, {0.0}), std::invalid_argument);
}

TEST_CASE("matrix factorization is interpolated at the analytic factors") {
    const MatrixFactorizationObjective obj(gen_matrix_factorization(10, 0));
    const auto w = obj.problem().exact_factorization();
    REQUIRE(w);
    for (Index i = 0; i < obj.size(); ++i) CHECK(obj.value(i, *w) == 0.0);
    CHECK(obj.full_grad(*w).norm() == 0.0);
    CHECK_FALSE(gen_matrix_factorization(4, 0).exact_factorization());
}

TEST_CASE("matrix factorization target has the requested conditioning") {
    const auto p = gen_matrix_factorization(4, 1);
    CHECK(p.condition_number() >= 0.99e10);
    CHECK(p.condition_number() <= 1.01e10);
    CHECK(p.target.rows() == 10);
    CHECK(p.target.cols() == 6);
    CHECK(p.dim() == 4 * 6 + 10 * 4);
    CHECK(gen_matrix_factorization(1, 1).target == p.target);
}

TEST_CASE("matrix factorization gradient matches finite differences") {
    for (Index rank : {1, 4, 10}) {
        const MatrixFactorizationObjective obj(gen_matrix_factorization(rank, 2));
        std::mt19937_64 rng(rank);
        std::uniform_int_distribution<Index> pick(0, obj.size() - 1);
        for (int t = 0; t < 20; ++t) {
            const Index i = pick(rng);
            const Weights w = random_weights(rng, obj.dim(), 0.5);
            CHECK(rel_err(oracle::finite_difference(obj, i, w, 1e-6), obj.grad(i, w)) < 1e-5);
        }
    }
}

TEST_CASE("matrix factorization batch overrides agree with the component sums") {
    const MatrixFactorizationObjective obj(gen_matrix_factorization(3, 4));
    std::mt19937_64 rng(9);
    const Weights w = random_weights(rng, obj.dim(), 0.3);
    const std::vector<Index> batch{0, 5, 5, 999};
    double mean = 0.0;
    Weights g = Weights::Zero(static_cast<Eigen::Index>(obj.dim()));
    for (Index i : batch) {
        mean += obj.value(i, w) / 4.0;
        obj.add_grad(i, w, 0.25, g);
    }
    CHECK(obj.batch_value(batch, w) == doctest::Approx(mean).epsilon(1e-12));
    CHECK((obj.batch_grad(batch, w) - g).norm() <= 1e-12 * g.norm());
}

TEST_CASE("matrix factorization packing") {
    const auto p = gen_matrix_factorization(2, 0);
    std::mt19937_64 rng(3);
    const Weights w = random_weights(rng, p.dim(), 1.0);
    CHECK(p.pack(p.w1(w), p.w2(w)) == w);
    CHECK(p.w1(w).rows() == 2);
    CHECK(p.w2(w).cols() == 2);
    CHECK(p.initial_point(5, 0.1) == p.initial_point(5, 0.1));
    CHECK_THROWS_AS((void)gen_matrix_factorization(0, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)gen_matrix_factorization(11, 0), std::invalid_argument);
}

TEST_CASE("quadratic and least squares smoothness") {
    Eigen::MatrixXd h(2, 2);
    h << 1.0, 3.0, 0.5, 2.0;
    const QuadraticObjective q(h, Eigen::MatrixXd::Zero(2, 2));
    CHECK(*q.smoothness_bound() == 3.0);
    Eigen::MatrixXd x(2, 2);
    x << 1.0, 2.0, 0.0, 1.0;
    const LeastSquaresObjective ls(x, Eigen::VectorXd::Zero(2));
    CHECK(*ls.smoothness_bound() == 5.0);
    const Weights w = oracle::to_weights({0.3, -0.2});
    CHECK(rel_err(oracle::finite_difference(ls, 0, w, 1e-6), ls.grad(0, w)) < 1e-8);
}

TEST_CASE("dataset validation") {
    Dataset ds = dense({{1.0, 0.0}}, {1.0});
    CHECK_NOTHROW(ds.validate());
    ds.labels = {0.5};
    CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
    ds.labels = {1.0, -1.0};
    CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
}
