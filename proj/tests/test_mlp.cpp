#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "screwgrasp/mlp.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace screwgrasp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_batch(int rows, int cols, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = u(rng);
    return m;
}

double train_loss(MlpModel model, const MatrixXd& x, const VectorXd& y) {
    ForwardCache cache;
    mlp_forward(model, x, MlpMode::train, &cache);
    return (cache.pred - y).squaredNorm() / static_cast<double>(y.size());
}

// Flat views over every trainable parameter of a model and the matching
// analytic gradient, in declaration order.
void collect(MlpModel& m, MlpGradients& g, std::vector<double*>& params,
             std::vector<double>& grads) {
    const auto push = [&](auto& mat, auto& gmat) {
        for (Eigen::Index i = 0; i < mat.size(); ++i) {
            params.push_back(mat.data() + i);
            grads.push_back(gmat.data()[i]);
        }
    };
    for (int k = 0; k < MlpModel::kHiddenLayers; ++k) {
        push(m.hidden[k].weight, g.hidden[k].weight);
        push(m.hidden[k].bias, g.hidden[k].bias);
        push(m.norms[k].gamma, g.norms[k].gamma);
        push(m.norms[k].beta, g.norms[k].beta);
    }
    push(m.head.weight, g.head.weight);
    push(m.head.bias, g.head.bias);
}

double max_grad_rel_error(const MlpModel& model, const MatrixXd& x, const VectorXd& y) {
    MlpModel work = model;
    ForwardCache cache;
    mlp_forward(work, x, MlpMode::train, &cache);
    MlpGradients g = mlp_backward(work, cache, y);

    std::vector<double*> params;
    std::vector<double> analytic;
    MlpModel fd_model = model;
    collect(fd_model, g, params, analytic);

    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = *params[i];
        *params[i] = saved + h;
        const double lp = train_loss(fd_model, x, y);
        *params[i] = saved - h;
        const double lm = train_loss(fd_model, x, y);
        *params[i] = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
        worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("deterministic initialization") {
    const MlpModel a = mlp_init(12, 32, 5);
    const MlpModel b = mlp_init(12, 32, 5);
    for (int k = 0; k < MlpModel::kHiddenLayers; ++k) {
        CHECK(a.hidden[k].weight == b.hidden[k].weight);
        CHECK(a.hidden[k].bias == b.hidden[k].bias);
    }
    CHECK(a.head.weight == b.head.weight);

    const MlpModel c = mlp_init(12, 32, 6);
    CHECK(a.hidden[0].weight != c.hidden[0].weight);
}

TEST_CASE("parameter count closed form") {
    const int w = 256, in = 12;
    const MlpModel m = mlp_init(in, w, 1);
    const std::size_t expect = static_cast<std::size_t>(w) * in + w
                               + 7 * (static_cast<std::size_t>(w) * w + w)
                               + 8 * (2 * static_cast<std::size_t>(w))  // gamma, beta
                               + w + 1;                                 // head
    CHECK(m.parameter_count() == expect);
}

TEST_CASE("fresh model on zero input is deterministic in eval mode") {
    MlpModel m = mlp_init(12, 16, 3);
    const MatrixXd zeros = MatrixXd::Zero(4, 12);
    const VectorXd out1 = mlp_forward(m, zeros, MlpMode::eval);
    const VectorXd out2 = mlp_forward(m, zeros, MlpMode::eval);
    CHECK(out1 == out2);
    for (Eigen::Index i = 1; i < out1.size(); ++i) CHECK(out1(i) == out1(0));
}

TEST_CASE("eval outputs stay in [0,1] and leave no state behind") {
    MlpModel m = mlp_init(12, 16, 4);
    const MatrixXd x = 100.0 * random_batch(32, 12, 9);
    const VectorXd out = mlp_forward(m, x, MlpMode::eval);
    CHECK(out.minCoeff() >= 0.0);
    CHECK(out.maxCoeff() <= 1.0);
    const VectorXd again = mlp_forward(m, x, MlpMode::eval);
    CHECK(out == again);
}

TEST_CASE("duplicating a batch leaves train-mode statistics unchanged") {
    MlpModel m = mlp_init(12, 16, 4);
    const MatrixXd x = random_batch(8, 12, 10);
    MatrixXd doubled(16, 12);
    doubled << x, x;

    MlpModel m1 = m;
    ForwardCache c1;
    const VectorXd out1 = mlp_forward(m1, x, MlpMode::train, &c1);
    MlpModel m2 = m;
    ForwardCache c2;
    const VectorXd out2 = mlp_forward(m2, doubled, MlpMode::train, &c2);
    for (int r = 0; r < 8; ++r) {
        CHECK(out1(r) == doctest::Approx(out2(r)).epsilon(1e-12));
        CHECK(out1(r) == doctest::Approx(out2(r + 8)).epsilon(1e-12));
    }

    // Mean-normalized loss gives identical gradients under duplication.
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    VectorXd y(8);
    for (int i = 0; i < 8; ++i) y(i) = u(rng);
    VectorXd y2(16);
    y2 << y, y;
    const MlpGradients g1 = mlp_backward(m1, c1, y);
    const MlpGradients g2 = mlp_backward(m2, c2, y2);
    CHECK(g1.loss == doctest::Approx(g2.loss).epsilon(1e-12));
    for (int k = 0; k < MlpModel::kHiddenLayers; ++k) {
        CHECK((g1.hidden[k].weight - g2.hidden[k].weight).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("gradients match central finite differences") {
    const MlpModel m = mlp_init(12, 8, 42);
    const MatrixXd x = random_batch(4, 12, 13);
    VectorXd y(4);
    y << 0.1, 0.7, 0.4, 0.9;
    CHECK(max_grad_rel_error(m, x, y) <= 1e-4);
}

TEST_CASE("zero-error batch zeroes the head bias gradient") {
    MlpModel m = mlp_init(12, 8, 21);
    const MatrixXd x = random_batch(6, 12, 22);
    ForwardCache cache;
    const VectorXd pred = mlp_forward(m, x, MlpMode::train, &cache);
    const MlpGradients g = mlp_backward(m, cache, pred);
    CHECK(g.loss == doctest::Approx(0.0));
    CHECK(std::abs(g.head.bias(0)) < 1e-15);
}

TEST_CASE("stale cache is rejected") {
    MlpModel m = mlp_init(12, 8, 23);
    ForwardCache cache;
    CHECK_THROWS_AS(mlp_backward(m, cache, VectorXd::Zero(4)), std::invalid_argument);
}

TEST_CASE("batch-norm train/eval consistency after freezing") {
    MlpModel m = mlp_init(12, 16, 31);
    const MatrixXd x = random_batch(256, 12, 32);
    freeze_batch_stats(m, x);
    MlpModel mm = m;
    ForwardCache cache;
    const VectorXd train_out = mlp_forward(mm, x, MlpMode::train, &cache);
    const VectorXd eval_out = predict_batch(m, x);
    for (Eigen::Index i = 0; i < train_out.size(); ++i) {
        const double clamped = std::clamp(train_out(i), 0.0, 1.0);
        CHECK(std::abs(clamped - eval_out(i)) < 1e-3);
    }
}

TEST_CASE("overfit-ten-samples oracle") {
    MlpModel m = mlp_init(12, 32, 77);
    const MatrixXd x = random_batch(10, 12, 78);
    std::mt19937 rng(79);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    VectorXd y(10);
    for (int i = 0; i < 10; ++i) y(i) = u(rng);

    TrainConfig cfg;
    cfg.lr = 0.01;
    cfg.batch_size = 10;
    cfg.epochs = 2000;  // one step per epoch on this tiny set
    cfg.seed = 80;
    const auto trace = mlp_train(m, x, y, cfg);
    CHECK(trace.back() <= 1e-4);
}

TEST_CASE("training is seed-deterministic and improves the loss") {
    const MatrixXd x = random_batch(64, 12, 101);
    VectorXd y = x.col(0).cwiseAbs();
    y = y / y.maxCoeff();

    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.seed = 5;

    MlpModel m1 = mlp_init(12, 16, 50);
    const auto t1 = mlp_train(m1, x, y, cfg);
    MlpModel m2 = mlp_init(12, 16, 50);
    const auto t2 = mlp_train(m2, x, y, cfg);
    CHECK(t1 == t2);
    CHECK(t1.back() < t1.front());
    CHECK(predict_batch(m1, x) == predict_batch(m2, x));
}

TEST_CASE("predict_batch shape and dimension checks") {
    MlpModel m = mlp_init(12, 8, 1);
    const MatrixXd x = random_batch(646, 12, 2);
    CHECK(predict_batch(m, x).size() == 646);
    MatrixXd two_rows = random_batch(2, 12, 3);
    two_rows.row(1) = two_rows.row(0);
    const VectorXd same = predict_batch(m, two_rows);
    CHECK(same(0) == same(1));
    CHECK_THROWS_AS(predict_batch(m, MatrixXd::Zero(3, 11)), std::invalid_argument);
    CHECK_THROWS_AS(mlp_forward(m, MatrixXd::Zero(1, 12), MlpMode::train),
                    std::invalid_argument);
}
