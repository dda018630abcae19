#include "mlml/gaussian_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mlml/csv.hpp"
#include "mlml/parallel.hpp"

namespace mlml {

std::string KernelSpec::name() const {
  if (kind == KernelKind::kSquaredExponential) return "rbf";
  if (nu == 0.5) return "matern0.5";
  if (nu == 1.5) return "matern1.5";
  if (nu == 2.5) return "matern2.5";
  return "matern?";
}

void KernelSpec::validate() const {
  if (!(length_scale > 0.0) || !std::isfinite(length_scale)) {
    throw std::invalid_argument("kernel: length scale must be finite and > 0");
  }
  if (kind == KernelKind::kMatern && nu != 0.5 && nu != 1.5 && nu != 2.5) {
    throw UnsupportedKernelError("kernel: Matern smoothness must be 0.5, 1.5 or 2.5");
  }
}

double kernel_of_distance(const KernelSpec& spec, double r) {
  const double s = r / spec.length_scale;
  if (spec.kind == KernelKind::kSquaredExponential) return std::exp(-0.5 * s * s);
  if (spec.nu == 0.5) return std::exp(-s);
  if (spec.nu == 1.5) {
    const double a = std::numbers::sqrt3 * s;
    return (1.0 + a) * std::exp(-a);
  }
  if (spec.nu == 2.5) {
    const double a = std::sqrt(5.0) * s;
    return (1.0 + a + a * a / 3.0) * std::exp(-a);
  }
  throw UnsupportedKernelError("kernel: Matern smoothness must be 0.5, 1.5 or 2.5");
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> a, std::span<const double> b) {
  spec.validate();
  if (a.size() != b.size()) throw std::invalid_argument("kernel: input dimension mismatch");
  return kernel_of_distance(spec, std::sqrt(squared_distance(a, b)));
}

DenseMatrix gram_matrix(const Dataset& data, const KernelSpec& spec) {
  spec.validate();
  const std::size_t n = data.size();
  DenseMatrix g(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    g(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double v = kernel_of_distance(spec, std::sqrt(squared_distance(data.input(i), data.input(j))));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

namespace {

void check_distinct(const Dataset& data) {
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto x = data.input(a);
    auto y = data.input(b);
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
  });
  for (std::size_t k = 1; k < n; ++k) {
    auto x = data.input(order[k - 1]);
    auto y = data.input(order[k]);
    if (std::equal(x.begin(), x.end(), y.begin())) {
      throw DuplicateInputError("GP fit: training inputs " + std::to_string(order[k - 1]) + " and " +
                                std::to_string(order[k]) + " coincide");
    }
  }
}

}  // namespace

GPModel GPModel::fit(const Dataset& data, const KernelSpec& spec, bool center_targets) {
  spec.validate();
  if (data.empty()) throw std::invalid_argument("GP fit: need at least one training point");
  check_distinct(data);

  GPModel m;
  m.data_ = data;
  m.spec_ = spec;
  m.center_ = center_targets;
  auto t = data.targets();
  m.mean_ = center_targets ? std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size()) : 0.0;
  m.centered_.assign(t.begin(), t.end());
  for (double& v : m.centered_) v -= m.mean_;

  const DenseMatrix g = gram_matrix(data, spec);
  for (double jitter = kInitialJitter;; jitter *= 10.0) {
    DenseMatrix a = g;
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += jitter;
    try {
      m.factor_ = cholesky(a);
      m.jitter_ = jitter;
      break;
    } catch (const NotPositiveDefiniteError&) {
      if (jitter >= kMaxJitter * 0.5) throw;
    }
  }
  m.weights_ = solve_spd(m.factor_, m.centered_);
  return m;
}

GPModel::Prediction GPModel::predict(std::span<const double> y) const {
  if (y.size() != data_.dimension()) throw std::invalid_argument("GP predict: input dimension mismatch");
  const std::size_t n = data_.size();
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = kernel_of_distance(spec_, std::sqrt(squared_distance(y, data_.input(i))));
  double mean = mean_;
  for (std::size_t i = 0; i < n; ++i) mean += k[i] * weights_[i];
  const std::vector<double> v = forward_substitute(factor_, k);
  double vv = 0.0;
  for (double x : v) vv += x * x;
  return {mean, std::max(0.0, 1.0 - vv)};
}

std::vector<double> GPModel::predict_batch(std::span<const double> inputs) const {
  const std::size_t d = data_.dimension();
  if (inputs.size() % d != 0) throw std::invalid_argument("GP predict: input size not a multiple of dimension");
  const std::size_t n = data_.size();
  std::vector<double> out(inputs.size() / d);
  for (std::size_t s = 0; s < out.size(); ++s) {
    auto y = inputs.subspan(s * d, d);
    double mean = mean_;
    for (std::size_t i = 0; i < n; ++i) {
      mean += kernel_of_distance(spec_, std::sqrt(squared_distance(y, data_.input(i)))) * weights_[i];
    }
    out[s] = mean;
  }
  return out;
}

double GPModel::negative_log_marginal_likelihood() const {
  double quad = 0.0;
  for (std::size_t i = 0; i < centered_.size(); ++i) quad += centered_[i] * weights_[i];
  const double n = static_cast<double>(centered_.size());
  return 0.5 * quad + 0.5 * log_det_from_factor(factor_) + 0.5 * n * std::log(2.0 * std::numbers::pi);
}

nlohmann::json GPModel::to_json() const {
  nlohmann::json j;
  j["format"] = "mlml.gp";
  j["version"] = 1;
  j["kernel"] = spec_.name();
  j["length_scale"] = spec_.length_scale;
  j["center_targets"] = center_;
  j["jitter"] = jitter_;
  j["dimension"] = data_.dimension();
  j["inputs"] = std::vector<double>(data_.inputs().begin(), data_.inputs().end());
  j["targets"] = std::vector<double>(data_.targets().begin(), data_.targets().end());
  return j;
}

GPModel GPModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "mlml.gp") throw DataError("not a GP file");
    if (j.at("version").get<int>() != 1) throw DataError("unsupported GP file version");
    const std::string kind = j.at("kernel").get<std::string>();
    const double ls = j.at("length_scale").get<double>();
    KernelSpec spec;
    if (kind == "rbf") spec = KernelSpec::rbf(ls);
    else if (kind == "matern0.5") spec = KernelSpec::matern(0.5, ls);
    else if (kind == "matern1.5") spec = KernelSpec::matern(1.5, ls);
    else if (kind == "matern2.5") spec = KernelSpec::matern(2.5, ls);
    else throw DataError("unknown GP kernel '" + kind + "'");
    Dataset data(j.at("dimension").get<std::size_t>(), j.at("inputs").get<std::vector<double>>(),
                 j.at("targets").get<std::vector<double>>());
    return fit(data, spec, j.at("center_targets").get<bool>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed GP file: ") + e.what());
  }
}

namespace {

double nlml_or_inf(const Dataset& data, const KernelSpec& spec, bool center) {
  try {
    return GPModel::fit(data, spec, center).negative_log_marginal_likelihood();
  } catch (const NotPositiveDefiniteError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

LengthScaleSearch select_length_scale(const Dataset& data, KernelKind kind, double nu, bool center_targets) {
  if (data.size() < 2) throw std::invalid_argument("select_length_scale: need at least two points");
  const auto make = [&](double ls) {
    return kind == KernelKind::kSquaredExponential ? KernelSpec::rbf(ls) : KernelSpec::matern(nu, ls);
  };
  make(1.0).validate();

  LengthScaleSearch out;
  const double lo = -2.0;
  const double hi = 1.0;
  const std::size_t m = kLengthScaleGridPoints;
  std::size_t best = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double ls = std::pow(10.0, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1));
    out.grid.push_back(ls);
    out.grid_nlml.push_back(nlml_or_inf(data, make(ls), center_targets));
    if (out.grid_nlml[i] < out.grid_nlml[best]) best = i;
  }
  out.length_scale = out.grid[best];
  out.nlml = out.grid_nlml[best];
  if (!std::isfinite(out.nlml)) throw NotPositiveDefiniteError(0);
  if (best == 0 || best + 1 == m) return out;

  // Golden-section search in log(length scale) over the bracketing cells.
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(out.grid[best - 1]);
  double b = std::log(out.grid[best + 1]);
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = nlml_or_inf(data, make(std::exp(c)), center_targets);
  double fd = nlml_or_inf(data, make(std::exp(d)), center_targets);
  for (int it = 0; it < 40 && (b - a) > 1e-6; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = nlml_or_inf(data, make(std::exp(c)), center_targets);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = nlml_or_inf(data, make(std::exp(d)), center_targets);
    }
  }
  const double x = fc <= fd ? c : d;
  const double fx = std::min(fc, fd);
  if (fx <= out.nlml) {
    out.length_scale = std::exp(x);
    out.nlml = fx;
  }
  return out;
}

std::vector<KernelSpec> default_kernel_candidates() {
  return {KernelSpec::rbf(1.0), KernelSpec::matern(0.5, 1.0), KernelSpec::matern(1.5, 1.0),
          KernelSpec::matern(2.5, 1.0)};
}

KernelSelection select_kernel(const Dataset& training, const Dataset& validation,
                              const std::vector<KernelSpec>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("select_kernel: no candidates");
  if (validation.empty()) throw std::invalid_argument("select_kernel: empty validation set");
  const std::size_t c = candidates.size();
  std::vector<KernelSpec> tuned(candidates);
  std::vector<double> errors(c, std::numeric_limits<double>::infinity());
  parallel_for(c, default_worker_count(), [&](std::size_t i) {
    try {
      tuned[i].length_scale = select_length_scale(training, candidates[i].kind, candidates[i].nu).length_scale;
      const GPModel gp = GPModel::fit(training, tuned[i]);
      const auto pred = gp.predict_batch(validation.inputs());
      double s = 0.0;
      for (std::size_t k = 0; k < pred.size(); ++k) s += std::abs(pred[k] - validation.target(k));
      errors[i] = s / static_cast<double>(pred.size());
    } catch (const NotPositiveDefiniteError&) {
    }
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < c; ++i) {
    if (errors[i] < errors[best]) best = i;
  }
  if (!std::isfinite(errors[best])) throw NotPositiveDefiniteError(0);
  return {tuned[best], errors[best], tuned, errors};
}

}  // namespace mlml
