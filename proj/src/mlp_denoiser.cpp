#include "diffbias/mlp_denoiser.hpp"

#include <cmath>
#include <numeric>

#include "diffbias/error.hpp"
#include "diffbias/schedule.hpp"

namespace diffbias {

namespace {

constexpr int kProbeBatch = 1024;

nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != rows * cols) throw ValidationError("matrix block has wrong size");
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

Matrix silu_of(const Matrix& z) { return z.unaryExpr([](double x) { return silu(x); }); }

// Sample a batch of (input, target) columns from standardized data.
void draw_batch(const Matrix& xs, const std::vector<Index>& rows, const NoiseSchedule& schedule, Rng& rng,
                Matrix& inputs, Matrix& targets) {
  const Index d = xs.cols();
  const auto b = static_cast<Index>(rows.size());
  inputs.resize(d + 1, b);
  targets.resize(d, b);
  for (Index j = 0; j < b; ++j) {
    const auto t = 1 + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(schedule.steps)));
    const double sigma = schedule.sigma[t];
    const double radius = std::sqrt(1.0 + sigma * sigma);
    for (Index k = 0; k < d; ++k) {
      const double x = xs(rows[static_cast<std::size_t>(j)], k);
      targets(k, j) = x;
      inputs(k, j) = (x + sigma * rng.normal()) / radius;
    }
    inputs(d, j) = std::log(sigma) / 4.0;
  }
}

}  // namespace

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_derivative(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

// ---- network ----------------------------------------------------------------

MlpNetwork::MlpNetwork(std::vector<MlpLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ValidationError("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bias.size() != layers_[l].weight.rows()) throw ValidationError("bias/weight shape mismatch");
    if (l > 0 && layers_[l].weight.cols() != layers_[l - 1].weight.rows())
      throw ValidationError("consecutive layer shapes do not chain");
  }
}

MlpNetwork MlpNetwork::initialize(const std::vector<int>& widths, Rng& rng) {
  if (widths.size() < 2) throw ValidationError("network needs at least input and output widths");
  std::vector<MlpLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    if (in < 1 || out < 1) throw ValidationError("layer widths must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    MlpLayer layer{Matrix(out, in), Vector(out)};
    for (Index c = 0; c < in; ++c)
      for (Index r = 0; r < out; ++r) layer.weight(r, c) = bound * (2.0 * rng.uniform() - 1.0);
    for (Index r = 0; r < out; ++r) layer.bias(r) = bound * (2.0 * rng.uniform() - 1.0);
    layers.push_back(std::move(layer));
  }
  return MlpNetwork(std::move(layers));
}

std::vector<int> MlpNetwork::widths() const {
  std::vector<int> w;
  if (layers_.empty()) return w;
  w.push_back(static_cast<int>(layers_.front().weight.cols()));
  for (const auto& l : layers_) w.push_back(static_cast<int>(l.weight.rows()));
  return w;
}

Matrix MlpNetwork::forward(const Matrix& inputs) const {
  Matrix a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = (layers_[l].weight * a).colwise() + layers_[l].bias;
    a = l + 1 < layers_.size() ? silu_of(z) : std::move(z);
  }
  return a;
}

double MlpNetwork::loss_and_grad(const Matrix& inputs, const Matrix& targets, std::vector<MlpLayer>* grad) const {
  const std::size_t depth = layers_.size();
  const auto batch = static_cast<double>(inputs.cols());
  std::vector<Matrix> acts(depth + 1);
  std::vector<Matrix> pre(depth);
  acts[0] = inputs;
  for (std::size_t l = 0; l < depth; ++l) {
    pre[l] = (layers_[l].weight * acts[l]).colwise() + layers_[l].bias;
    acts[l + 1] = l + 1 < depth ? silu_of(pre[l]) : pre[l];
  }
  const Matrix residual = acts[depth] - targets;
  const double loss = residual.squaredNorm() / batch;
  if (!grad) return loss;

  grad->resize(depth);
  Matrix g = (2.0 / batch) * residual;
  for (std::size_t l = depth; l-- > 0;) {
    if (l + 1 < depth) g = g.cwiseProduct(pre[l].unaryExpr([](double x) { return silu_derivative(x); }));
    (*grad)[l].weight.noalias() = g * acts[l].transpose();
    (*grad)[l].bias = g.rowwise().sum();
    if (l > 0) g = layers_[l].weight.transpose() * g;
  }
  return loss;
}

nlohmann::json MlpNetwork::to_json() const {
  auto layers = nlohmann::json::array();
  for (const auto& l : layers_)
    layers.push_back({{"weight", matrix_to_json(l.weight)},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  return {{"layers", layers}};
}

MlpNetwork MlpNetwork::from_json(const nlohmann::json& j) {
  std::vector<MlpLayer> layers;
  for (const auto& l : j.at("layers")) {
    const auto bias = l.at("bias").get<std::vector<double>>();
    layers.push_back({matrix_from_json(l.at("weight")),
                      Eigen::Map<const Vector>(bias.data(), static_cast<Index>(bias.size()))});
  }
  return MlpNetwork(std::move(layers));
}

// ---- Adam -------------------------------------------------------------------

Adam::Adam(const std::vector<MlpLayer>& shape, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& l : shape) {
    m_.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    v_.push_back(m_.back());
  }
}

void Adam::step(std::vector<MlpLayer>& params, const std::vector<MlpLayer>& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t l = 0; l < params.size(); ++l) {
    update(params[l].weight, grad[l].weight, m_[l].weight, v_[l].weight);
    update(params[l].bias, grad[l].bias, m_[l].bias, v_[l].bias);
  }
}

// ---- denoiser ---------------------------------------------------------------

nlohmann::json MlpTrainingLog::to_json() const {
  return {{"loss_curve", loss_curve},
          {"initial_probe_loss", initial_probe_loss},
          {"final_probe_loss", final_probe_loss}};
}

MlpBottleneckDenoiser::MlpBottleneckDenoiser(MlpNetwork network, Frame frame, MlpOptions options,
                                             MlpTrainingLog log)
    : network_(std::move(network)), frame_(std::move(frame)), options_(options), log_(std::move(log)) {
  const auto w = network_.widths();
  const int d = dim();
  if (w.size() != 5 || w.front() != d + 1 || w.back() != d)
    throw ValidationError("bottleneck network must have widths [d+1, w, h, w, d]");
}

Matrix mlp_inputs(const Matrix& ys_std, double sigma_std) {
  const Index d = ys_std.cols();
  Matrix in(d + 1, ys_std.rows());
  in.topRows(d) = ys_std.transpose() / std::sqrt(1.0 + sigma_std * sigma_std);
  in.row(d).setConstant(std::log(sigma_std) / 4.0);
  return in;
}

Matrix MlpBottleneckDenoiser::denoise_batch(const Matrix& ys, double sigma) const {
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
  const Matrix ys_std = (ys.rowwise() - frame_.center.transpose()) / frame_.scale;
  const Matrix out = network_.forward(mlp_inputs(ys_std, sigma / frame_.scale));
  return (frame_.scale * out.transpose()).rowwise() + frame_.center.transpose();
}

Vector MlpBottleneckDenoiser::denoise(const Vector& y, double sigma) const {
  return denoise_batch(y.transpose(), sigma).row(0).transpose();
}

nlohmann::json MlpBottleneckDenoiser::descriptor() const {
  return {{"family", "mlp_bottleneck"},
          {"dim", dim()},
          {"widths", network_.widths()},
          {"bottleneck", options_.bottleneck},
          {"width", options_.width},
          {"activation", "silu"},
          {"epochs", options_.epochs},
          {"lr", options_.lr},
          {"batch", options_.batch},
          {"schedule_steps", options_.schedule_steps},
          {"seed", options_.seed},
          {"sigma_sampling", "per example, t ~ U{1..T} of the cosine schedule"},
          {"inputs", "y_std / sqrt(1 + sigma_std^2), log(sigma_std) / 4"}};
}

nlohmann::json MlpBottleneckDenoiser::parameters() const {
  return {{"network", network_.to_json()}, {"frame", frame_to_json(frame_)}};
}

MlpBottleneckDenoiser MlpBottleneckDenoiser::from_parameters(const nlohmann::json& descriptor,
                                                             const nlohmann::json& params) {
  MlpOptions o;
  o.bottleneck = descriptor.at("bottleneck").get<int>();
  o.width = descriptor.at("width").get<int>();
  o.epochs = descriptor.at("epochs").get<int>();
  o.lr = descriptor.at("lr").get<double>();
  o.batch = descriptor.at("batch").get<int>();
  o.schedule_steps = descriptor.at("schedule_steps").get<int>();
  o.seed = descriptor.at("seed").get<std::uint64_t>();
  return MlpBottleneckDenoiser(MlpNetwork::from_json(params.at("network")), frame_from_json(params.at("frame")),
                               o);
}

MlpBottleneckDenoiser fit_mlp(const Dataset& data, const MlpOptions& options) {
  if (options.bottleneck < 1) throw ValidationError("bottleneck h must be >= 1");
  if (options.width < options.bottleneck) throw ValidationError("width must be >= bottleneck");
  if (options.epochs < 0) throw ValidationError("epochs must be >= 0");
  if (!(options.lr > 0.0)) throw ValidationError("learning rate must be positive");
  if (options.batch < 1) throw ValidationError("batch size must be >= 1");

  const Frame frame = frame_of(data);
  const Matrix xs = (data.points().rowwise() - frame.center.transpose()) / frame.scale;
  const auto schedule = cosine_schedule(options.schedule_steps);
  const int d = data.dim();

  Rng init_rng(derive_seed(options.seed, 1));
  MlpNetwork net = MlpNetwork::initialize({d + 1, options.width, options.bottleneck, options.width, d}, init_rng);

  Matrix probe_in, probe_target;
  {
    Rng probe_rng(derive_seed(options.seed, 3));
    std::vector<Index> rows(kProbeBatch);
    for (auto& r : rows) r = static_cast<Index>(probe_rng.below(static_cast<std::uint64_t>(data.size())));
    draw_batch(xs, rows, schedule, probe_rng, probe_in, probe_target);
  }

  MlpTrainingLog log;
  log.initial_probe_loss = net.loss_and_grad(probe_in, probe_target, nullptr);

  Rng rng(derive_seed(options.seed, 2));
  Adam adam(net.layers(), options.lr);
  std::vector<Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<MlpLayer> grad;
  Matrix in, target;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(options.batch));
      const std::vector<Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(stop));
      draw_batch(xs, rows, schedule, rng, in, target);
      const double loss = net.loss_and_grad(in, target, &grad);
      if (!std::isfinite(loss))
        throw TrainingError("training loss became non-finite at epoch " + std::to_string(epoch), epoch);
      adam.step(net.layers(), grad);
      total += loss * static_cast<double>(rows.size());
    }
    log.loss_curve.push_back(total / static_cast<double>(order.size()));
  }
  log.final_probe_loss = net.loss_and_grad(probe_in, probe_target, nullptr);
  if (!std::isfinite(log.final_probe_loss))
    throw TrainingError("probe loss is non-finite after training", options.epochs);
  return MlpBottleneckDenoiser(std::move(net), frame, options, std::move(log));
}

}  // namespace diffbias
