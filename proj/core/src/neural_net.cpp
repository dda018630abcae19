#include "mlml/neural_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mlml/csv.hpp"
#include "mlml/random.hpp"

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

namespace mlml {

NetworkArchitecture NetworkArchitecture::fully_connected(std::size_t input_dimension, std::size_t hidden_layers,
                                                         std::size_t width) {
  NetworkArchitecture a;
  a.widths.push_back(input_dimension);
  for (std::size_t i = 0; i < hidden_layers; ++i) a.widths.push_back(width);
  a.widths.push_back(1);
  a.validate();
  return a;
}

std::size_t NetworkArchitecture::parameter_count() const {
  std::size_t m = 0;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) m += (widths[k] + 1) * widths[k + 1];
  return m;
}

void NetworkArchitecture::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("network: need at least input and output widths");
  for (std::size_t w : widths) {
    if (w == 0) throw std::invalid_argument("network: layer widths must be >= 1");
  }
  if (widths.back() != 1) throw std::invalid_argument("network: output width must be 1");
}

NetworkParameters::NetworkParameters(NetworkArchitecture architecture)
    : NetworkParameters(architecture, std::vector<double>(architecture.parameter_count(), 0.0)) {}

NetworkParameters::NetworkParameters(NetworkArchitecture architecture, std::vector<double> values)
    : architecture_(std::move(architecture)), values_(std::move(values)) {
  architecture_.validate();
  if (values_.size() != architecture_.parameter_count()) {
    throw std::invalid_argument("network: expected " + std::to_string(architecture_.parameter_count()) +
                                " parameters, got " + std::to_string(values_.size()));
  }
  std::size_t off = 0;
  for (std::size_t k = 0; k < architecture_.affine_count(); ++k) {
    offsets_.push_back(off);
    off += (architecture_.widths[k] + 1) * architecture_.widths[k + 1];
  }
  offsets_.push_back(off);
}

std::span<double> NetworkParameters::weights(std::size_t k) {
  const auto& w = architecture_.widths;
  return {values_.data() + offsets_.at(k), w[k] * w[k + 1]};
}

std::span<const double> NetworkParameters::weights(std::size_t k) const {
  const auto& w = architecture_.widths;
  return {values_.data() + offsets_.at(k), w[k] * w[k + 1]};
}

std::span<double> NetworkParameters::biases(std::size_t k) {
  const auto& w = architecture_.widths;
  return {values_.data() + offsets_.at(k) + w[k] * w[k + 1], w[k + 1]};
}

std::span<const double> NetworkParameters::biases(std::size_t k) const {
  const auto& w = architecture_.widths;
  return {values_.data() + offsets_.at(k) + w[k] * w[k + 1], w[k + 1]};
}

bool NetworkParameters::is_weight(std::size_t index) const {
  const auto& w = architecture_.widths;
  for (std::size_t k = 0; k < architecture_.affine_count(); ++k) {
    if (index < offsets_[k + 1]) return index < offsets_[k] + w[k] * w[k + 1];
  }
  throw std::out_of_range("network: parameter index out of range");
}

NetworkParameters he_init(const NetworkArchitecture& architecture, std::uint64_t seed) {
  NetworkParameters p(architecture);
  Rng rng(seed);
  for (std::size_t k = 0; k < architecture.affine_count(); ++k) {
    const double sd = std::sqrt(2.0 / static_cast<double>(architecture.widths[k]));
    for (double& w : p.weights(k)) w = sd * rng.normal();
  }
  return p;
}

double forward(const NetworkParameters& params, std::span<const double> y) {
  const auto& arch = params.architecture();
  if (y.size() != arch.input_dimension()) {
    throw std::invalid_argument("forward: input dimension " + std::to_string(y.size()) + ", expected " +
                                std::to_string(arch.input_dimension()));
  }
  std::vector<double> in(y.begin(), y.end());
  std::vector<double> out;
  const std::size_t last = arch.affine_count() - 1;
  for (std::size_t k = 0; k <= last; ++k) {
    const std::size_t din = arch.widths[k];
    const std::size_t dout = arch.widths[k + 1];
    auto w = params.weights(k);
    auto b = params.biases(k);
    out.assign(dout, 0.0);
    for (std::size_t j = 0; j < dout; ++j) {
      double s = b[j];
      for (std::size_t i = 0; i < din; ++i) s += w[j * din + i] * in[i];
      out[j] = (k < last) ? std::max(s, 0.0) : s;
    }
    in.swap(out);
  }
  return in[0];
}

namespace {

// out (dout x n) = W (dout x din) * in (din x n) + b, feature-major.
void affine_batch(std::span<const double> w, std::span<const double> b, const double* in, double* out,
                  std::size_t din, std::size_t dout, std::size_t n, bool relu) {
  for (std::size_t j = 0; j < dout; ++j) {
    double* o = out + j * n;
    const double bj = b[j];
#pragma omp simd
    for (std::size_t s = 0; s < n; ++s) o[s] = bj;
    for (std::size_t i = 0; i < din; ++i) {
      const double wji = w[j * din + i];
      const double* x = in + i * n;
#pragma omp simd
      for (std::size_t s = 0; s < n; ++s) o[s] += wji * x[s];
    }
    if (relu) {
#pragma omp simd
      for (std::size_t s = 0; s < n; ++s) o[s] = o[s] > 0.0 ? o[s] : 0.0;
    }
  }
}

std::vector<double> transpose_inputs(std::span<const double> inputs, std::size_t d) {
  const std::size_t n = inputs.size() / d;
  std::vector<double> t(inputs.size());
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < d; ++i) t[i * n + s] = inputs[s * d + i];
  return t;
}

// Moments of dead units decay into subnormals within a few thousand epochs,
// which slows every epoch several-fold; flush them while training.
class FlushSubnormals {
#if defined(__SSE2__)
 public:
  FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~FlushSubnormals() { _mm_setcsr(saved_); }
  FlushSubnormals(const FlushSubnormals&) = delete;
  FlushSubnormals& operator=(const FlushSubnormals&) = delete;

 private:
  unsigned saved_;
#endif
};

inline double signum(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

void check_exponent(int e, const char* what) {
  if (e != 1 && e != 2) throw std::invalid_argument(std::string(what) + " must be 1 or 2");
}

}  // namespace

std::vector<double> forward_batch(const NetworkParameters& params, std::span<const double> inputs) {
  const auto& arch = params.architecture();
  const std::size_t d = arch.input_dimension();
  if (inputs.size() % d != 0) throw std::invalid_argument("forward_batch: input size not a multiple of dimension");
  const std::size_t n = inputs.size() / d;
  if (n == 0) return {};
  std::vector<double> in = transpose_inputs(inputs, d);
  std::vector<double> out;
  const std::size_t last = arch.affine_count() - 1;
  for (std::size_t k = 0; k <= last; ++k) {
    out.assign(arch.widths[k + 1] * n, 0.0);
    affine_batch(params.weights(k), params.biases(k), in.data(), out.data(), arch.widths[k], arch.widths[k + 1], n,
                 k < last);
    in.swap(out);
  }
  return in;
}

FullBatchGradient::FullBatchGradient(const NetworkArchitecture& architecture, const Dataset& data)
    : architecture_(architecture), samples_(data.size()), targets_(data.targets().begin(), data.targets().end()) {
  architecture_.validate();
  if (data.dimension() != architecture_.input_dimension()) {
    throw std::invalid_argument("training data dimension does not match the network input");
  }
  if (samples_ == 0) throw std::invalid_argument("training data is empty");
  activations_.resize(architecture_.widths.size());
  activations_[0] = transpose_inputs(data.inputs(), data.dimension());
  std::size_t widest = 1;
  for (std::size_t k = 1; k < architecture_.widths.size(); ++k) {
    activations_[k].assign(architecture_.widths[k] * samples_, 0.0);
    widest = std::max(widest, architecture_.widths[k]);
  }
  delta_.assign(widest * samples_, 0.0);
  delta_prev_.assign(widest * samples_, 0.0);
}

double FullBatchGradient::evaluate(const NetworkParameters& params, const LossSpec& spec, std::span<double> gradient) {
  check_exponent(spec.loss_exponent, "loss exponent");
  check_exponent(spec.reg_exponent, "regularization exponent");
  if (!(params.architecture() == architecture_)) throw std::invalid_argument("gradient: architecture mismatch");
  if (gradient.size() != architecture_.parameter_count()) throw std::invalid_argument("gradient: size mismatch");

  const std::size_t n = samples_;
  const std::size_t layers = architecture_.affine_count();
  const auto& w = architecture_.widths;
  for (std::size_t k = 0; k < layers; ++k) {
    affine_batch(params.weights(k), params.biases(k), activations_[k].data(), activations_[k + 1].data(), w[k],
                 w[k + 1], n, k + 1 < layers);
  }

  // Output residuals -> dLoss/dOutput.
  const double* pred = activations_[layers].data();
  const double* t = targets_.data();
  double* delta = delta_.data();
  const double inv_n = 1.0 / static_cast<double>(n);
  double data_loss = 0.0;
  if (spec.loss_exponent == 2) {
#pragma omp simd reduction(+ : data_loss)
    for (std::size_t s = 0; s < n; ++s) {
      const double r = pred[s] - t[s];
      data_loss += r * r;
      delta[s] = 2.0 * r * inv_n;
    }
  } else {
#pragma omp simd reduction(+ : data_loss)
    for (std::size_t s = 0; s < n; ++s) {
      const double r = pred[s] - t[s];
      data_loss += std::abs(r);
      delta[s] = static_cast<double>((r > 0.0) - (r < 0.0)) * inv_n;
    }
  }
  double loss = data_loss * inv_n;

  std::size_t offset = params.values().size();
  for (std::size_t k = layers; k-- > 0;) {
    const std::size_t din = w[k];
    const std::size_t dout = w[k + 1];
    offset -= (din + 1) * dout;
    double* gw = gradient.data() + offset;
    double* gb = gw + din * dout;
    const double* a = activations_[k].data();
    for (std::size_t j = 0; j < dout; ++j) {
      const double* dj = delta + j * n;
      double sb = 0.0;
#pragma omp simd reduction(+ : sb)
      for (std::size_t s = 0; s < n; ++s) sb += dj[s];
      gb[j] = sb;
      for (std::size_t i = 0; i < din; ++i) {
        const double* ai = a + i * n;
        double sw = 0.0;
#pragma omp simd reduction(+ : sw)
        for (std::size_t s = 0; s < n; ++s) sw += dj[s] * ai[s];
        gw[j * din + i] = sw;
      }
    }
    if (k == 0) break;
    // Back-propagate through W_k and the relu that produced activations_[k].
    auto wk = params.weights(k);
    double* dp = delta_prev_.data();
    for (std::size_t i = 0; i < din; ++i) {
      double* di = dp + i * n;
      const double* ai = a + i * n;
#pragma omp simd
      for (std::size_t s = 0; s < n; ++s) di[s] = 0.0;
      for (std::size_t j = 0; j < dout; ++j) {
        const double wji = wk[j * din + i];
        const double* dj = delta + j * n;
#pragma omp simd
        for (std::size_t s = 0; s < n; ++s) di[s] += wji * dj[s];
      }
#pragma omp simd
      for (std::size_t s = 0; s < n; ++s) di[s] = ai[s] > 0.0 ? di[s] : 0.0;
    }
    delta_.swap(delta_prev_);
    delta = delta_.data();
  }

  if (spec.reg_weight != 0.0) {
    const double lam = spec.reg_weight;
    double reg = 0.0;
    for (std::size_t k = 0; k < layers; ++k) {
      auto wk = params.weights(k);
      const std::size_t off = static_cast<std::size_t>(wk.data() - params.values().data());
      for (std::size_t i = 0; i < wk.size(); ++i) {
        const double v = wk[i];
        if (spec.reg_exponent == 2) {
          reg += v * v;
          gradient[off + i] += 2.0 * lam * v;
        } else {
          reg += std::abs(v);
          gradient[off + i] += lam * signum(v);
        }
      }
    }
    loss += lam * reg;
  }
  return loss;
}

LossAndGradient loss_and_gradient(const NetworkParameters& params, const Dataset& data, const LossSpec& spec) {
  FullBatchGradient fb(params.architecture(), data);
  LossAndGradient out;
  out.gradient.assign(params.values().size(), 0.0);
  out.loss = fb.evaluate(params, spec, out.gradient);
  return out;
}

AdamState::AdamState(std::size_t size, AdamHyperparameters h)
    : first_moment(size, 0.0), second_moment(size, 0.0), hyper(h) {}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> gradient, double learning_rate) {
  const std::size_t m = params.size();
  if (gradient.size() != m || state.first_moment.size() != m) throw std::invalid_argument("adam_step: size mismatch");
  ++state.step;
  const double b1 = state.hyper.beta1;
  const double b2 = state.hyper.beta2;
  const double eps = state.hyper.epsilon;
  const double c1 = 1.0 / (1.0 - std::pow(b1, static_cast<double>(state.step)));
  const double c2 = 1.0 / (1.0 - std::pow(b2, static_cast<double>(state.step)));
  double* mo = state.first_moment.data();
  double* vo = state.second_moment.data();
  double* th = params.data();
  const double* g = gradient.data();
#pragma omp simd
  for (std::size_t i = 0; i < m; ++i) {
    mo[i] = b1 * mo[i] + (1.0 - b1) * g[i];
    vo[i] = b2 * vo[i] + (1.0 - b2) * g[i] * g[i];
    th[i] -= learning_rate * (mo[i] * c1) / (std::sqrt(vo[i] * c2) + eps);
  }
}

void TrainingConfig::validate() const {
  check_exponent(loss_exponent, "loss exponent");
  check_exponent(reg_exponent, "regularization exponent");
  if (!(reg_weight >= 0.0)) throw std::invalid_argument("regularization weight must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (epochs == 0) throw std::invalid_argument("epochs must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in [0, 1)");
  }
}

double regression_error(std::span<const double> predictions, std::span<const double> targets, int p) {
  check_exponent(p, "error exponent");
  if (predictions.size() != targets.size()) throw std::invalid_argument("regression_error: size mismatch");
  if (predictions.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = std::abs(predictions[i] - targets[i]);
    s += (p == 2) ? r * r : r;
  }
  s /= static_cast<double>(predictions.size());
  return (p == 2) ? std::sqrt(s) : s;
}

TrainedNetwork::TrainedNetwork(NetworkParameters params, double target_shift, double target_scale,
                               TrainingConfig config, ErrorReport report)
    : params_(std::move(params)), shift_(target_shift), scale_(target_scale), config_(config), report_(report) {
  if (!(scale_ > 0.0) || !std::isfinite(shift_)) throw std::invalid_argument("network: invalid target scaling");
}

double TrainedNetwork::predict(std::span<const double> y) const { return shift_ + scale_ * forward(params_, y); }

std::vector<double> TrainedNetwork::predict_batch(std::span<const double> inputs) const {
  auto out = forward_batch(params_, inputs);
  for (double& v : out) v = shift_ + scale_ * v;
  return out;
}

nlohmann::json TrainedNetwork::to_json() const {
  nlohmann::json j;
  j["format"] = "mlml.network";
  j["version"] = 1;
  j["widths"] = params_.architecture().widths;
  j["parameters"] = std::vector<double>(params_.values().begin(), params_.values().end());
  j["target_shift"] = shift_;
  j["target_scale"] = scale_;
  j["training"] = {{"loss_exponent", config_.loss_exponent},
                   {"reg_exponent", config_.reg_exponent},
                   {"reg_weight", config_.reg_weight},
                   {"learning_rate", config_.learning_rate},
                   {"epochs", config_.epochs},
                   {"seed", config_.seed},
                   {"validation_fraction", config_.validation_fraction},
                   {"standardize_targets", config_.standardize_targets}};
  j["report"] = {{"training_error", report_.training_error},
                 {"validation_error", report_.validation_error},
                 {"validation_gap", report_.validation_gap},
                 {"samples", report_.samples},
                 {"validation_samples", report_.validation_samples}};
  if (!loss_history_.empty()) j["loss_history"] = loss_history_;
  return j;
}

TrainedNetwork TrainedNetwork::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "mlml.network") throw DataError("not a network file");
    if (j.at("version").get<int>() != 1) throw DataError("unsupported network file version");
    NetworkArchitecture arch{j.at("widths").get<std::vector<std::size_t>>()};
    NetworkParameters params(arch, j.at("parameters").get<std::vector<double>>());
    const auto& t = j.at("training");
    TrainingConfig c;
    c.loss_exponent = t.at("loss_exponent").get<int>();
    c.reg_exponent = t.at("reg_exponent").get<int>();
    c.reg_weight = t.at("reg_weight").get<double>();
    c.learning_rate = t.at("learning_rate").get<double>();
    c.epochs = t.at("epochs").get<std::size_t>();
    c.seed = t.at("seed").get<std::uint64_t>();
    c.validation_fraction = t.at("validation_fraction").get<double>();
    c.standardize_targets = t.at("standardize_targets").get<bool>();
    const auto& r = j.at("report");
    ErrorReport rep;
    rep.training_error = r.at("training_error").get<double>();
    rep.validation_error = r.at("validation_error").get<double>();
    rep.validation_gap = r.at("validation_gap").get<double>();
    rep.samples = r.at("samples").get<std::size_t>();
    rep.validation_samples = r.at("validation_samples").get<std::size_t>();
    TrainedNetwork net(std::move(params), j.at("target_shift").get<double>(), j.at("target_scale").get<double>(), c,
                       rep);
    if (j.contains("loss_history")) net.set_loss_history(j["loss_history"].get<std::vector<double>>());
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed network file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed network file: ") + e.what());
  }
}

void TrainedNetwork::save(const std::filesystem::path& path) const { atomic_write_file(path, to_json().dump(1)); }

TrainedNetwork TrainedNetwork::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

TrainedNetwork train(const Dataset& data, const NetworkArchitecture& architecture, const TrainingConfig& config) {
  config.validate();
  auto [training, validation] = data.split_validation(config.validation_fraction, derive_seed(config.seed, {1}));
  return train(training, validation, architecture, config);
}

TrainedNetwork train(const Dataset& training, const Dataset& validation, const NetworkArchitecture& architecture,
                     const TrainingConfig& config) {
  config.validate();
  architecture.validate();
  if (training.empty()) throw std::invalid_argument("train: no training samples");
  if (!validation.empty() && validation.dimension() != training.dimension()) {
    throw std::invalid_argument("train: validation dimension mismatch");
  }

  double shift = 0.0;
  double scale = 1.0;
  if (config.standardize_targets) {
    auto t = training.targets();
    shift = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
    double ss = 0.0;
    for (double v : t) ss += (v - shift) * (v - shift);
    const double sd = std::sqrt(ss / static_cast<double>(t.size()));
    if (sd > 0.0 && std::isfinite(sd)) scale = sd;
  }
  std::vector<double> scaled(training.targets().begin(), training.targets().end());
  for (double& v : scaled) v = (v - shift) / scale;
  const Dataset scaled_set(training.dimension(), std::vector<double>(training.inputs().begin(), training.inputs().end()),
                           std::move(scaled));

  NetworkParameters params = he_init(architecture, derive_seed(config.seed, {2}));
  const FlushSubnormals flush;
  FullBatchGradient fb(architecture, scaled_set);
  AdamState adam(params.values().size());
  std::vector<double> grad(params.values().size(), 0.0);
  const LossSpec spec = config.loss_spec();
  std::vector<double> history;
  if (config.record_loss_history) history.reserve(config.epochs);
  for (std::size_t e = 0; e < config.epochs; ++e) {
    const double loss = fb.evaluate(params, spec, grad);
    if (!std::isfinite(loss)) throw std::runtime_error("train: loss diverged at epoch " + std::to_string(e));
    if (config.record_loss_history) history.push_back(loss);
    adam_step(adam, params.values(), grad, config.learning_rate);
  }

  TrainedNetwork net(std::move(params), shift, scale, config, ErrorReport{});
  ErrorReport rep;
  rep.samples = training.size();
  rep.validation_samples = validation.size();
  rep.training_error = regression_error(net.predict_batch(training.inputs()), training.targets(), config.loss_exponent);
  if (!validation.empty()) {
    rep.validation_error =
        regression_error(net.predict_batch(validation.inputs()), validation.targets(), config.loss_exponent);
  }
  rep.validation_gap = std::abs(rep.validation_error - rep.training_error);
  TrainedNetwork result(net.parameters(), shift, scale, config, rep);
  result.set_loss_history(std::move(history));
  return result;
}

}  // namespace mlml
