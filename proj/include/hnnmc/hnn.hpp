#pragma once

#include <string>
#include <vector>

#include "hnnmc/dynamics.hpp"

namespace hnnmc {

// Piecewise-linear activations are excluded: the sampler consumes the
// network's input-gradient, which must exist everywhere.
enum class Activation : std::uint32_t { Tanh = 0, Sine = 1 };

/// Multilayer perceptron whose summed latent outputs approximate the
/// Hamiltonian. Input is q concatenated with p (length 2d). latent_dim = d
/// for the latent variant, 1 for the plain network. Inputs are standardized
/// per dimension with statistics stored in the model; input-gradients are
/// un-standardized on the way out.
struct HnnModel {
  int input_dim = 0;                // 2d
  int latent_dim = 1;
  Activation activation = Activation::Tanh;
  std::vector<Mat> weights;         // hidden layers, then the latent output layer
  std::vector<Vec> biases;
  Vec input_mean, input_scale;      // identity until train() sets them
  std::uint32_t version = 1;

  int phase_dim() const { return input_dim / 2; }
  int hidden_layers() const { return static_cast<int>(weights.size()) - 1; }
};

/// Fresh model with Glorot-uniform weights and identity standardization.
HnnModel make_hnn_model(int input_dim, int latent_dim, int hidden_layers, int hidden_units,
                        Activation activation, Rng& rng);

struct ForwardResult {
  double h_theta = 0.0;
  Vec latents;
};

ForwardResult forward(const HnnModel& model, const Vec& x);

struct HnnGradients {
  Vec dh_dq, dh_dp;
};

/// Exact input-gradient of the network function (reverse sweep through the
/// layers). Dynamics map: dq/dt = dH/dp, dp/dt = -dH/dq.
HnnGradients predict_gradients(const HnnModel& model, const Vec& x);

/// Gradient predictions for a batch (inputs in columns of X, gradients in
/// columns of G). The parallel path processes columns with OpenMP using the
/// same per-sample kernel, so it is bit-identical to the serial path.
void predict_gradients_batch(const HnnModel& model, const Mat& X, Mat& G, bool parallel = true);

/// Phase-space points paired with exact time derivatives, columns = samples.
/// inputs rows: q then p; labels rows: dq/dt then dp/dt.
struct TrainingDataset {
  Mat inputs;
  Mat labels;
  int size() const { return static_cast<int>(inputs.cols()); }
  void append(const TrainingDataset& other);
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 512;
  double learning_rate = 1e-3;
  int hidden_layers = 3;    // network shape defaults per the benchmark setup
  int hidden_units = 100;
  std::uint64_t rng_seed = 0;
  double val_fraction = 0.1;
  int patience = 20;        // early-stopping patience on validation loss
  Activation activation = Activation::Tanh;
};

/// Mean over the batch of |dq/dt - dH/dp|^2 + |dp/dt + dH/dq|^2.
double hnn_loss(const HnnModel& model, const TrainingDataset& data);

/// Loss and its gradient with respect to every weight and bias (the training
/// pathway; exposed for diagnostics and gradient checks).
struct LossGradients {
  double loss = 0.0;
  std::vector<Mat> d_weights;
  std::vector<Vec> d_biases;
};
LossGradients hnn_loss_gradient(const HnnModel& model, const TrainingDataset& data);

struct TrainResult {
  std::vector<double> loss_history;       // per-epoch training loss
  std::vector<double> val_history;        // per-epoch validation loss
  std::vector<double> best_history;       // running minimum of val loss
  int epochs_run = 0;
  bool diverged = false;
};

/// Adam minimization of hnn_loss. Differentiates the network's input-gradient
/// with respect to the weights (second-order pathway). Standardization
/// statistics are computed from the training split and stored in the model.
/// Keeps the best-validation weights; on divergence restores them and flags.
TrainResult train(HnnModel& model, const TrainingDataset& data, const TrainConfig& cfg);

/// Exact-gradient trajectories from `n_starts` initializer draws; every
/// visited state contributes one (input, exact dynamics) pair, so a full
/// trajectory yields L+1 pairs. Failed trajectories are truncated.
TrainingDataset generate_training_data(const HamiltonianSystem& sys, int n_starts, int L,
                                       double dt, Rng& rng,
                                       std::shared_ptr<std::atomic<long long>> grad_counter = nullptr);

/// dq/dt = dH/dp, dp/dt = -dH/dq from the network. The model must outlive the
/// provider; a retrained model is swapped in only at level boundaries.
GradientProvider hnn_gradient_provider(const HnnModel* model,
                                       std::shared_ptr<std::atomic<long long>> counter = nullptr);

/// Versioned little-endian binary of shapes, weights, and normalization
/// statistics. load_model rejects unknown versions or a bad magic.
void save_model(const HnnModel& model, const std::string& path);
HnnModel load_model(const std::string& path);

void export_dataset_csv(const TrainingDataset& data, const std::string& path);

}  // namespace hnnmc
