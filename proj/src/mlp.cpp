#include "screwgrasp/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace screwgrasp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Skip connections span layers (3,4), (5,6), (7,8): the output of layer 2k
// gains the block input for k >= 2.
bool block_closes_at(int layer_idx) {  // 0-based
    return layer_idx >= 3 && layer_idx % 2 == 1;
}

void fill_uniform(std::mt19937& rng, double bound, MatrixXd& m) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
    }
}

void fill_uniform(std::mt19937& rng, double bound, VectorXd& v) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : hidden) n += l.weight.size() + l.bias.size();
    for (const BatchNormLayer& b : norms) n += b.gamma.size() + b.beta.size();
    n += head.weight.size() + head.bias.size();
    return n;
}

MlpModel mlp_init(int input_dim, int hidden_width, unsigned seed) {
    if (input_dim <= 0 || hidden_width <= 0) {
        throw std::invalid_argument("model dimensions must be positive");
    }
    std::mt19937 rng(seed);
    MlpModel m;
    m.input_dim = input_dim;
    m.hidden_width = hidden_width;
    m.hidden.resize(MlpModel::kHiddenLayers);
    m.norms.resize(MlpModel::kHiddenLayers);
    for (int k = 0; k < MlpModel::kHiddenLayers; ++k) {
        const int fan_in = k == 0 ? input_dim : hidden_width;
        const double bound = std::sqrt(1.0 / fan_in);
        m.hidden[k].weight.resize(hidden_width, fan_in);
        m.hidden[k].bias.resize(hidden_width);
        fill_uniform(rng, bound, m.hidden[k].weight);
        fill_uniform(rng, bound, m.hidden[k].bias);
        m.norms[k].gamma = VectorXd::Ones(hidden_width);
        m.norms[k].beta = VectorXd::Zero(hidden_width);
        m.norms[k].running_mean = VectorXd::Zero(hidden_width);
        m.norms[k].running_var = VectorXd::Ones(hidden_width);
    }
    const double bound = std::sqrt(1.0 / hidden_width);
    m.head.weight.resize(1, hidden_width);
    m.head.bias.resize(1);
    fill_uniform(rng, bound, m.head.weight);
    fill_uniform(rng, bound, m.head.bias);
    return m;
}

VectorXd mlp_forward(MlpModel& model, const MatrixXd& batch, MlpMode mode,
                     ForwardCache* cache) {
    if (batch.cols() != model.input_dim) {
        throw std::invalid_argument("feature dimension mismatch");
    }
    const Eigen::Index n = batch.rows();
    if (mode == MlpMode::train && n < 2) {
        throw std::invalid_argument("train-mode batch needs at least 2 rows");
    }
    if (cache) {
        cache->input = batch;
        cache->lin_in.assign(MlpModel::kHiddenLayers, {});
        cache->xhat.assign(MlpModel::kHiddenLayers, {});
        cache->bn_out.assign(MlpModel::kHiddenLayers, {});
        cache->mean.assign(MlpModel::kHiddenLayers, {});
        cache->inv_std.assign(MlpModel::kHiddenLayers, {});
    }

    MatrixXd cur = batch;
    MatrixXd block_in;
    for (int k = 0; k < MlpModel::kHiddenLayers; ++k) {
        if (k % 2 == 0) block_in = cur;
        if (cache) cache->lin_in[k] = cur;

        MatrixXd z = (cur * model.hidden[k].weight.transpose()).rowwise() +
                     model.hidden[k].bias.transpose();

        BatchNormLayer& bn = model.norms[k];
        VectorXd mean, var;
        if (mode == MlpMode::train) {
            mean = z.colwise().mean();
            var = (z.rowwise() - mean.transpose()).array().square().colwise().mean();
            bn.running_mean = (1.0 - MlpModel::kBnMomentum) * bn.running_mean +
                              MlpModel::kBnMomentum * mean;
            bn.running_var = (1.0 - MlpModel::kBnMomentum) * bn.running_var +
                             MlpModel::kBnMomentum * var;
        } else {
            mean = bn.running_mean;
            var = bn.running_var;
        }
        const VectorXd inv_std = (var.array() + MlpModel::kBnEps).rsqrt();
        MatrixXd xhat =
            (z.rowwise() - mean.transpose()).array().rowwise() * inv_std.transpose().array();
        MatrixXd out = (xhat.array().rowwise() * bn.gamma.transpose().array()).rowwise() +
                       bn.beta.transpose().array();

        if (cache) {
            cache->xhat[k] = xhat;
            cache->bn_out[k] = out;
            cache->mean[k] = mean;
            cache->inv_std[k] = inv_std;
        }

        cur = out.cwiseMax(0.0);
        if (block_closes_at(k)) cur += block_in;
    }

    if (cache) cache->head_in = cur;
    VectorXd pred = (cur * model.head.weight.transpose()).col(0).array() + model.head.bias(0);
    if (mode == MlpMode::eval) {
        pred = pred.cwiseMax(0.0).cwiseMin(1.0);
    }
    if (cache) cache->pred = pred;
    return pred;
}

MlpGradients mlp_backward(const MlpModel& model, const ForwardCache& cache,
                          const VectorXd& targets) {
    if (cache.pred.size() == 0 || cache.lin_in.empty()) {
        throw std::invalid_argument("stale forward cache");
    }
    if (targets.size() != cache.pred.size()) {
        throw std::invalid_argument("target batch size mismatch");
    }
    const Eigen::Index n = cache.pred.size();

    MlpGradients g;
    g.hidden.resize(MlpModel::kHiddenLayers);
    g.norms.resize(MlpModel::kHiddenLayers);

    const VectorXd err = cache.pred - targets;
    g.loss = err.squaredNorm() / static_cast<double>(n);
    const VectorXd dpred = 2.0 * err / static_cast<double>(n);

    g.head.weight = dpred.transpose() * cache.head_in;
    g.head.bias = VectorXd::Constant(1, dpred.sum());

    // d[k] = dL/d(output of layer k, after ReLU and any skip add). Slot k
    // collects the through-path term from iteration k+1 and, at block
    // boundaries, the identity branch from iteration k+2; both run first.
    std::vector<MatrixXd> d(MlpModel::kHiddenLayers);
    const auto add_to = [](MatrixXd& slot, const MatrixXd& term) {
        if (slot.size() == 0) {
            slot = term;
        } else {
            slot += term;
        }
    };
    d[MlpModel::kHiddenLayers - 1] = dpred * model.head.weight;

    for (int k = MlpModel::kHiddenLayers - 1; k >= 0; --k) {
        const MatrixXd grad_out = d[k];

        // ReLU
        MatrixXd dbn =
            (cache.bn_out[k].array() > 0.0).cast<double>().array() * grad_out.array();

        // Batch norm through the batch statistics
        const BatchNormLayer& bn = model.norms[k];
        g.norms[k].gamma = (dbn.array() * cache.xhat[k].array()).colwise().sum();
        g.norms[k].beta = dbn.colwise().sum();

        MatrixXd dxhat = dbn.array().rowwise() * bn.gamma.transpose().array();
        const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
        const Eigen::RowVectorXd sum_dxhat_xhat =
            (dxhat.array() * cache.xhat[k].array()).colwise().sum();
        MatrixXd dz = (static_cast<double>(n) * dxhat.array()).rowwise() - sum_dxhat.array();
        dz.array() -= cache.xhat[k].array().rowwise() * sum_dxhat_xhat.array();
        dz.array().rowwise() *=
            (cache.inv_std[k].transpose() / static_cast<double>(n)).array();

        // Linear
        g.hidden[k].weight = dz.transpose() * cache.lin_in[k];
        g.hidden[k].bias = dz.colwise().sum();

        if (k >= 1) {
            add_to(d[k - 1], dz * model.hidden[k].weight);
            if (block_closes_at(k)) add_to(d[k - 2], grad_out);  // identity branch
        }
    }
    return g;
}

std::vector<double> mlp_train(MlpModel& model, const MatrixXd& features,
                              const VectorXd& labels, const TrainConfig& cfg) {
    if (features.rows() == 0 || features.rows() != labels.size()) {
        throw std::invalid_argument("empty or mismatched training data");
    }
    if (cfg.batch_size < 2) {
        throw std::invalid_argument("batch size must be at least 2");
    }
    const Eigen::Index n = features.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937 rng(cfg.seed);

    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(cfg.epochs));
    ForwardCache cache;
    MatrixXd xb;
    VectorXd yb;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        Eigen::Index seen = 0;
        for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
            const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, n - start);
            if (bs < 2) break;  // batch norm needs more than one row
            xb.resize(bs, features.cols());
            yb.resize(bs);
            for (Eigen::Index r = 0; r < bs; ++r) {
                xb.row(r) = features.row(order[static_cast<std::size_t>(start + r)]);
                yb(r) = labels(order[static_cast<std::size_t>(start + r)]);
            }
            mlp_forward(model, xb, MlpMode::train, &cache);
            const MlpGradients g = mlp_backward(model, cache, yb);
            if (!std::isfinite(g.loss)) {
                throw std::runtime_error("training diverged (non-finite loss)");
            }
            loss_sum += g.loss * static_cast<double>(bs);
            seen += bs;

            for (int k = 0; k < MlpModel::kHiddenLayers; ++k) {
                model.hidden[k].weight -= cfg.lr * g.hidden[k].weight;
                model.hidden[k].bias -= cfg.lr * g.hidden[k].bias;
                model.norms[k].gamma -= cfg.lr * g.norms[k].gamma;
                model.norms[k].beta -= cfg.lr * g.norms[k].beta;
            }
            model.head.weight -= cfg.lr * g.head.weight;
            model.head.bias -= cfg.lr * g.head.bias;
        }
        trace.push_back(loss_sum / static_cast<double>(std::max<Eigen::Index>(seen, 1)));
    }
    return trace;
}

VectorXd predict_batch(const MlpModel& model, const MatrixXd& features) {
    MlpModel& mutable_model = const_cast<MlpModel&>(model);
    return mlp_forward(mutable_model, features, MlpMode::eval);
}

VectorXd predict_batch_raw(const MlpModel& model, const MatrixXd& features) {
    MlpModel work = model;
    ForwardCache cache;
    mlp_forward(work, features, MlpMode::eval, &cache);
    // Recompute the head without the clamp; eval mode leaves no state behind.
    return (cache.head_in * model.head.weight.transpose()).col(0).array() +
           model.head.bias(0);
}

void freeze_batch_stats(MlpModel& model, const MatrixXd& batch) {
    if (batch.cols() != model.input_dim || batch.rows() < 2) {
        throw std::invalid_argument("freeze needs a batch of matching width, >= 2 rows");
    }
    MatrixXd cur = batch;
    MatrixXd block_in;
    for (int k = 0; k < MlpModel::kHiddenLayers; ++k) {
        if (k % 2 == 0) block_in = cur;
        MatrixXd z = (cur * model.hidden[k].weight.transpose()).rowwise() +
                     model.hidden[k].bias.transpose();
        BatchNormLayer& bn = model.norms[k];
        bn.running_mean = z.colwise().mean();
        bn.running_var =
            (z.rowwise() - bn.running_mean.transpose()).array().square().colwise().mean();
        const VectorXd inv_std = (bn.running_var.array() + MlpModel::kBnEps).rsqrt();
        MatrixXd xhat = (z.rowwise() - bn.running_mean.transpose()).array().rowwise() *
                        inv_std.transpose().array();
        MatrixXd out = (xhat.array().rowwise() * bn.gamma.transpose().array()).rowwise() +
                       bn.beta.transpose().array();
        cur = out.cwiseMax(0.0);
        if (block_closes_at(k)) cur += block_in;
    }
}

}  // namespace screwgrasp
