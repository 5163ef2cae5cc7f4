#pragma once

#include <vector>

#include "diffbias/denoiser.hpp"
#include "diffbias/rng.hpp"

namespace diffbias {

struct MlpOptions {
  int bottleneck = 1;
  int width = 64;
  int epochs = 500;
  double lr = 1e-4;
  int batch = 128;
  /// Training noise levels are the sigma_t, t = 1..T, of a T-step cosine schedule.
  int schedule_steps = 50;
  std::uint64_t seed = 0;
};

struct MlpLayer {
  Matrix weight;  // out x in
  Vector bias;
};

/// Fully connected net with SiLU after every layer but the last. Inputs and
/// outputs are column-major batches (features x batch).
class MlpNetwork {
 public:
  MlpNetwork() = default;
  explicit MlpNetwork(std::vector<MlpLayer> layers);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
  static MlpNetwork initialize(const std::vector<int>& widths, Rng& rng);

  std::vector<int> widths() const;
  const std::vector<MlpLayer>& layers() const { return layers_; }
  std::vector<MlpLayer>& layers() { return layers_; }

  Matrix forward(const Matrix& inputs) const;
  /// Mean over the batch of |net(input) - target|^2; fills `grad` (same
  /// shapes as the layers) when non-null.
  double loss_and_grad(const Matrix& inputs, const Matrix& targets, std::vector<MlpLayer>* grad) const;

  nlohmann::json to_json() const;
  static MlpNetwork from_json(const nlohmann::json& j);

 private:
  std::vector<MlpLayer> layers_;
};

double silu(double x);
double silu_derivative(double x);

class Adam {
 public:
  Adam(const std::vector<MlpLayer>& shape, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step(std::vector<MlpLayer>& params, const std::vector<MlpLayer>& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<MlpLayer> m_, v_;
};

struct MlpTrainingLog {
  /// Mean training loss per epoch (standardized units).
  std::vector<double> loss_curve;
  /// Loss on a fixed probe batch before any update. With PyTorch-style init
  /// this sits near E|x_std|^2 = d, the cost of predicting the frame center.
  double initial_probe_loss = 0.0;
  double final_probe_loss = 0.0;
  nlohmann::json to_json() const;
};

/// Encoder-bottleneck-decoder denoiser with widths [d+1, w, h, w, d].
/// In frame coordinates (y_s = (y - c)/s, sigma_s = sigma/s) the net sees
/// y_s / sqrt(1 + sigma_s^2) and log(sigma_s)/4 and predicts x_s directly;
/// there is no skip connection, so outputs lie on an h-dimensional image.
class MlpBottleneckDenoiser final : public Denoiser {
 public:
  MlpBottleneckDenoiser(MlpNetwork network, Frame frame, MlpOptions options, MlpTrainingLog log = {});
  static MlpBottleneckDenoiser from_parameters(const nlohmann::json& descriptor, const nlohmann::json& params);

  int dim() const override { return static_cast<int>(frame_.center.size()); }
  Vector denoise(const Vector& y, double sigma) const override;
  Matrix denoise_batch(const Matrix& ys, double sigma) const override;
  nlohmann::json descriptor() const override;
  nlohmann::json parameters() const override;
  const Frame& frame() const override { return frame_; }

  const MlpNetwork& network() const { return network_; }
  const MlpTrainingLog& log() const { return log_; }
  int bottleneck() const { return options_.bottleneck; }

 private:
  MlpNetwork network_;
  Frame frame_;
  MlpOptions options_;
  MlpTrainingLog log_;
};

/// Network inputs for standardized rows `ys_std` at standardized noise level.
Matrix mlp_inputs(const Matrix& ys_std, double sigma_std);

/// Adam on the denoising loss. Each epoch visits the data once in shuffled
/// mini-batches; every example gets its own t ~ U{1..T} and fresh noise.
/// Throws TrainingError on a non-finite loss.
MlpBottleneckDenoiser fit_mlp(const Dataset& data, const MlpOptions& options);

}  // namespace diffbias
