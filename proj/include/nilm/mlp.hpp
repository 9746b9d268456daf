#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "nilm/common.hpp"
#include "nilm/forest.hpp"  // DataMatrix

namespace nilm {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct MlpConfig {
    std::vector<size_t> layer_sizes{128, 256, 256, 256, 1};
    double leaky_alpha = 0.05;  // LeakyReLU slope on the hidden layers
    double dropout = 0.05;      // hidden layers, training only
    AdamConfig adam;
    size_t batch_size = 256;
    int max_epochs = 200;
    int patience = 10;          // early stopping on validation MAE
    double val_fraction = 0.1;
    double outlier_fraction = 0.0;  // optional trim of extreme targets, off by default
};

struct MlpModel {
    std::vector<size_t> sizes;             // layer widths, input first
    std::vector<std::vector<double>> W;    // W[l]: sizes[l+1] x sizes[l], row-major
    std::vector<std::vector<double>> b;    // b[l]: sizes[l+1]
    double leaky_alpha = 0.05;

    // Inference forward pass (dropout off). live0 > 0 promises that input
    // entries at index >= live0 are zero, which lets the first layer skip
    // them; the result is unchanged.
    double forward_scalar(std::span<const double> x, size_t live0 = 0) const;

    void save(std::ostream& os) const;
    static MlpModel load(std::istream& is);
};

struct MlpGradients {
    std::vector<std::vector<double>> dW;
    std::vector<std::vector<double>> db;
};

// Mean-squared-error loss over the given rows and its analytic gradients
// (dropout off). Exposed so the finite-difference oracle can check every
// layer.
double mlp_loss_and_gradients(const MlpModel& model, const DataMatrix& X,
                              std::span<const double> y, MlpGradients* grads);

MlpModel make_mlp(const std::vector<size_t>& sizes, double leaky_alpha, uint64_t seed);

struct MlpTrainResult {
    MlpModel model;
    int epochs_run = 0;
    double best_val_mae = 0.0;
};

// Minibatch Adam on MSE with inverted dropout and early stopping on
// validation MAE. Deterministic for a fixed seed (single threaded).
MlpTrainResult train_mlp(const DataMatrix& X, std::span<const double> y, const MlpConfig& cfg,
                         uint64_t seed);

}  // namespace nilm
