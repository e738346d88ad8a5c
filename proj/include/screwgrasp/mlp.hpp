#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace screwgrasp {

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
};

struct BatchNormLayer {
    Eigen::VectorXd gamma, beta;
    Eigen::VectorXd running_mean, running_var;
};

/// Fully connected regressor: eight hidden layers of Linear -> BatchNorm ->
/// ReLU, identity skip connections across each two-layer block from the
/// second block on (the first block changes width), and a scalar linear head.
/// Eval-mode outputs are clamped to [0, 1].
struct MlpModel {
    int input_dim = 12;
    int hidden_width = 256;
    static constexpr int kHiddenLayers = 8;
    static constexpr double kBnMomentum = 0.1;
    static constexpr double kBnEps = 1e-5;

    std::vector<DenseLayer> hidden;     // kHiddenLayers entries
    std::vector<BatchNormLayer> norms;  // one per hidden layer
    DenseLayer head;                    // 1 x hidden_width

    std::size_t parameter_count() const;  // trainable parameters only
};

/// Scaled-uniform fan-in initialization, deterministic per seed.
MlpModel mlp_init(int input_dim, int hidden_width, unsigned seed);

enum class MlpMode { train, eval };

struct ForwardCache {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> lin_in;   // input of each linear
    std::vector<Eigen::MatrixXd> xhat;     // batch-normalized activations
    std::vector<Eigen::MatrixXd> bn_out;   // pre-ReLU
    std::vector<Eigen::VectorXd> mean;     // batch statistics
    std::vector<Eigen::VectorXd> inv_std;
    Eigen::MatrixXd head_in;
    Eigen::VectorXd pred;
};

/// Forward pass over a row-per-sample batch. Train mode uses batch statistics
/// (batch >= 2) and updates running statistics; eval mode uses running
/// statistics and clamps the output to [0, 1].
Eigen::VectorXd mlp_forward(MlpModel& model, const Eigen::MatrixXd& batch, MlpMode mode,
                            ForwardCache* cache = nullptr);

struct BatchNormGrad {
    Eigen::VectorXd gamma, beta;
};

struct MlpGradients {
    std::vector<DenseLayer> hidden;      // dW, db per layer
    std::vector<BatchNormGrad> norms;
    DenseLayer head;
    double loss = 0.0;  // mean squared error of the cached batch
};

/// Exact backpropagation of the mean-squared-error loss through head, skip
/// adds, ReLU, batch norm (batch statistics) and the linear layers.
MlpGradients mlp_backward(const MlpModel& model, const ForwardCache& cache,
                          const Eigen::VectorXd& targets);

struct TrainConfig {
    double lr = 0.001;
    int epochs = 150;
    int batch_size = 150;
    unsigned seed = 7;
};

/// Minibatch SGD with seeded epoch shuffles; returns the per-epoch mean
/// training loss. Throws on divergence (NaN loss).
std::vector<double> mlp_train(MlpModel& model, const Eigen::MatrixXd& features,
                              const Eigen::VectorXd& labels, const TrainConfig& cfg);

/// Eval-mode predictions, one scalar in [0, 1] per row.
Eigen::VectorXd predict_batch(const MlpModel& model, const Eigen::MatrixXd& features);

/// Eval-mode predictions without the output clamp; monotone with
/// predict_batch and free of saturation ties, so rankings stay informative.
Eigen::VectorXd predict_batch_raw(const MlpModel& model, const Eigen::MatrixXd& features);

/// Pins the running statistics to the batch statistics of `batch`.
void freeze_batch_stats(MlpModel& model, const Eigen::MatrixXd& batch);

}  // namespace screwgrasp
