#include "mlml/ensemble.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mlml/csv.hpp"
#include "mlml/linalg.hpp"
#include "mlml/parallel.hpp"
#include "mlml/random.hpp"

namespace mlml {

void HyperparameterGrid::validate() const {
  if (reg_exponents.empty() || reg_weights.empty() || init_seeds == 0) {
    throw std::invalid_argument("hyperparameter grid: every axis needs at least one entry");
  }
  for (int q : reg_exponents) {
    if (q != 1 && q != 2) throw std::invalid_argument("hyperparameter grid: q must be 1 or 2");
  }
  for (double l : reg_weights) {
    if (!(l >= 0.0)) throw std::invalid_argument("hyperparameter grid: lambda must be >= 0");
  }
  for (const auto& k : kernels) k.validate();
}

BlendWeights blend_weights(std::span<const double> nn_predictions, std::span<const double> gp_predictions,
                           std::span<const double> targets, std::size_t n_train, std::size_t threshold) {
  if (n_train <= threshold) return {0.5, 0.5, false};
  const LeastSquares2 ls = lstsq_2(nn_predictions, gp_predictions, targets);
  if (ls.singular) return {0.5, 0.5, false};
  return {ls.alpha1, ls.alpha2, true};
}

SurrogateEnsemble::SurrogateEnsemble(std::optional<TrainedNetwork> nn, std::optional<GPModel> gp, double alpha_nn,
                                     double alpha_gp)
    : nn_(std::move(nn)), gp_(std::move(gp)), alpha_nn_(alpha_nn), alpha_gp_(alpha_gp) {
  if (!nn_ && !gp_) throw std::invalid_argument("ensemble: needs at least one member");
  if (!nn_) alpha_nn_ = 0.0;
  if (!gp_) alpha_gp_ = 0.0;
}

double SurrogateEnsemble::predict(std::span<const double> y) const {
  double out = 0.0;
  if (nn_) out += alpha_nn_ * nn_->predict(y);
  if (gp_) out += alpha_gp_ * gp_->predict_mean(y);
  return out;
}

std::vector<double> SurrogateEnsemble::predict_batch(std::span<const double> inputs) const {
  std::vector<double> out;
  if (nn_) {
    out = nn_->predict_batch(inputs);
    for (double& v : out) v *= alpha_nn_;
  }
  if (gp_) {
    const auto g = gp_->predict_batch(inputs);
    if (out.empty()) out.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] += alpha_gp_ * g[i];
  }
  return out;
}

std::string grid_log_csv(std::span<const GridCellResult> log) {
  std::ostringstream os;
  os << "cell,q,lambda,seed_index,seed,training_error,validation_error\n";
  for (const auto& c : log) {
    os << c.cell << ',' << c.reg_exponent << ',' << format_double(c.reg_weight) << ',' << c.seed_index << ','
       << c.seed << ',' << format_double(c.training_error) << ',' << format_double(c.validation_error) << '\n';
  }
  return os.str();
}

void SurrogateEnsemble::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json m;
  m["format"] = "mlml.ensemble";
  m["version"] = 1;
  m["alpha_nn"] = alpha_nn_;
  m["alpha_gp"] = alpha_gp_;
  m["validation_error"] = validation_error_;
  m["nn"] = nn_ ? nlohmann::json("nn.json") : nlohmann::json(nullptr);
  m["gp"] = gp_ ? nlohmann::json("gp.json") : nlohmann::json(nullptr);
  m["grid_log"] = "grid.csv";
  if (nn_) nn_->save(dir / "nn.json");
  if (gp_) atomic_write_file(dir / "gp.json", gp_->to_json().dump(1));
  atomic_write_file(dir / "grid.csv", grid_log_csv(grid_log_));
  atomic_write_file(dir / "manifest.json", m.dump(1));
}

SurrogateEnsemble SurrogateEnsemble::load(const std::filesystem::path& dir) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(dir / "manifest.json"));
    if (m.at("format").get<std::string>() != "mlml.ensemble") throw DataError("not an ensemble manifest");
    std::optional<TrainedNetwork> nn;
    std::optional<GPModel> gp;
    if (!m.at("nn").is_null()) nn = TrainedNetwork::load(dir / m["nn"].get<std::string>());
    if (!m.at("gp").is_null()) {
      gp = GPModel::from_json(nlohmann::json::parse(read_file(dir / m["gp"].get<std::string>())));
    }
    SurrogateEnsemble e(std::move(nn), std::move(gp), m.at("alpha_nn").get<double>(), m.at("alpha_gp").get<double>());
    e.set_validation_error(m.value("validation_error", 0.0));
    const auto grid_path = dir / m.at("grid_log").get<std::string>();
    if (std::filesystem::exists(grid_path)) {
      const CsvTable t = read_csv(grid_path);
      std::vector<GridCellResult> log;
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        GridCellResult c;
        c.cell = static_cast<std::size_t>(t.number(r, 0));
        c.reg_exponent = static_cast<int>(t.number(r, 1));
        c.reg_weight = t.number(r, 2);
        c.seed_index = static_cast<std::size_t>(t.number(r, 3));
        c.seed = std::stoull(t.rows[r][4]);
        c.training_error = t.number(r, 5);
        c.validation_error = t.number(r, 6);
        log.push_back(c);
      }
      e.set_grid_log(std::move(log));
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError((dir / "manifest.json").string() + ": " + ex.what());
  }
}

SurrogateEnsemble ensemble_train(const Dataset& data, const EnsembleConfig& config, std::uint64_t seed) {
  config.grid.validate();
  config.training.validate();
  if (data.size() < 4) throw std::invalid_argument("ensemble_train: need at least four samples");
  const auto arch = NetworkArchitecture::fully_connected(data.dimension(), config.hidden_layers, config.width);
  auto [training, validation] = data.split_validation(config.training.validation_fraction, derive_seed(seed, {0}));
  const std::size_t workers = config.workers ? config.workers : default_worker_count();

  const auto& g = config.grid;
  std::vector<GridCellResult> cells;
  for (int q : g.reg_exponents) {
    for (double lam : g.reg_weights) {
      for (std::size_t s = 0; s < g.init_seeds; ++s) {
        GridCellResult c;
        c.cell = cells.size();
        c.reg_exponent = q;
        c.reg_weight = lam;
        c.seed_index = s;
        c.seed = derive_seed(seed, {1, s});
        cells.push_back(c);
      }
    }
  }
  std::vector<std::optional<TrainedNetwork>> nets(cells.size());
  parallel_for(cells.size(), workers, [&](std::size_t i) {
    TrainingConfig tc = config.training;
    tc.reg_exponent = cells[i].reg_exponent;
    tc.reg_weight = cells[i].reg_weight;
    tc.seed = cells[i].seed;
    nets[i] = train(training, validation, arch, tc);
    cells[i].training_error = nets[i]->report().training_error;
    cells[i].validation_error = nets[i]->report().validation_error;
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    if (cells[i].validation_error < cells[best].validation_error) best = i;
  }
  TrainedNetwork nn = std::move(*nets[best]);
  nets.clear();

  std::optional<GPModel> gp;
  if (config.blend == BlendMode::kAuto && !g.kernels.empty() && !validation.empty()) {
    const KernelSelection sel = select_kernel(training, validation, g.kernels);
    gp = GPModel::fit(training, sel.spec);
  }

  BlendWeights w{1.0, 0.0, false};
  if (gp) {
    const auto pn = nn.predict_batch(validation.inputs());
    const auto pg = gp->predict_batch(validation.inputs());
    w = blend_weights(pn, pg, validation.targets(), data.size(), config.least_squares_threshold);
  }
  SurrogateEnsemble ens(std::move(nn), std::move(gp), w.nn, w.gp);
  if (!validation.empty()) {
    const auto p = ens.predict_batch(validation.inputs());
    ens.set_validation_error(regression_error(p, validation.targets(), config.training.loss_exponent));
  }
  ens.set_grid_log(std::move(cells));
  return ens;
}

}  // namespace mlml
