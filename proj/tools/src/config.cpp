#include "mlml_cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "mlml/csv.hpp"
#include "mlml/param_space.hpp"

namespace mlml::cli {

namespace {

class Section {
 public:
  Section(YAML::Node node, std::string path, const std::string& source)
      : node_(std::move(node)), path_(std::move(path)), source_(source) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail(node_, "expected a mapping");
  }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    const auto mark = at.Mark();
    std::string where = source_;
    if (mark.line >= 0) where += ":" + std::to_string(mark.line + 1);
    throw ConfigError(where + ": " + (path_.empty() ? "" : path_ + ": ") + msg);
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node find(const std::string& key) {
    seen_.insert(key);
    if (!node_ || node_.IsNull()) return YAML::Node(YAML::NodeType::Undefined);
    const YAML::Node& n = node_;
    return n[key];
  }

  Section child(const std::string& key) { return Section(find(key), key_path(key), source_); }

  template <class T>
  void get(const std::string& key, T& out) {
    const YAML::Node n = find(key);
    if (!n) return;
    out = convert<T>(n, key);
  }

  template <class T>
  T convert(const YAML::Node& n, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        const long long v = n.as<long long>();
        if (v < 0) fail(n, key + ": must be non-negative");
        return static_cast<T>(v);
      } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
        return std::filesystem::path(n.as<std::string>());
      } else {
        return n.as<T>();
      }
    } catch (const YAML::BadConversion&) {
      fail(n, key + ": wrong type");
    }
  }

  template <class T>
  void get_list(const std::string& key, std::vector<T>& out) {
    const YAML::Node n = find(key);
    if (!n) return;
    if (!n.IsSequence()) fail(n, key + ": expected a list");
    out.clear();
    for (const auto& item : n) out.push_back(convert<T>(item, key));
  }

  void finish() const {
    if (!node_ || node_.IsNull()) return;
    for (const auto& kv : node_) {
      const auto k = kv.first.as<std::string>();
      if (!seen_.count(k)) fail(kv.first, "unknown key '" + k + "'");
    }
  }

  const std::string& source() const { return source_; }

 private:
  YAML::Node node_;
  std::string path_;
  const std::string& source_;
  std::set<std::string> seen_;
};

KernelSpec parse_kernel(const std::string& name, const Section& s, const YAML::Node& at) {
  if (name == "rbf") return KernelSpec::rbf(1.0);
  if (name == "matern0.5") return KernelSpec::matern(0.5, 1.0);
  if (name == "matern1.5") return KernelSpec::matern(1.5, 1.0);
  if (name == "matern2.5") return KernelSpec::matern(2.5, 1.0);
  s.fail(at, "unknown kernel '" + name + "' (expected rbf, matern0.5, matern1.5 or matern2.5)");
}

void read_model(Section s, ModelSection& m) {
  Section nom = s.child("nominal");
  nom.get("air_density", m.nominal.air_density);
  nom.get("radius", m.nominal.radius);
  nom.get("drag_coefficient", m.nominal.drag_coefficient);
  nom.get("mass", m.nominal.mass);
  nom.get("height", m.nominal.height);
  double deg = m.nominal.launch_angle * 180.0 / std::numbers::pi;
  nom.get("launch_angle_deg", deg);
  m.nominal.launch_angle = deg * std::numbers::pi / 180.0;
  nom.get("speed", m.nominal.speed);
  nom.get("gravity", m.nominal.gravity);
  nom.finish();
  s.get("epsilon", m.epsilon);
  s.get("coarsest_step", m.coarsest_step);
  s.get("finest_level", m.finest_level);
  s.get("cost_exponent", m.cost_exponent);
  if (YAML::Node d = s.find("drag")) {
    const auto v = s.convert<std::string>(d, "drag");
    if (v == "horizontal") m.drag = DragModel::kHorizontal;
    else if (v == "along-velocity") m.drag = DragModel::kAlongVelocity;
    else s.fail(d, "drag: expected 'horizontal' or 'along-velocity'");
  }
  s.finish();
}

void read_sampling(Section s, SamplingSection& m) {
  if (YAML::Node p = s.find("provenance")) {
    const auto v = s.convert<std::string>(p, "provenance");
    if (v == "random") m.provenance = PointProvenance::kRandom;
    else if (v == "sobol") m.provenance = PointProvenance::kSobol;
    else s.fail(p, "provenance: expected 'random' or 'sobol'");
  }
  s.get("pool_size", m.pool_size);
  s.get("test_size", m.test_size);
  s.finish();
}

void read_training(Section s, TrainingSection& t) {
  s.get("hidden_layers", t.hidden_layers);
  s.get("width", t.width);
  s.get("loss_exponent", t.loss_exponent);
  s.get("learning_rate", t.learning_rate);
  s.get("epochs", t.epochs);
  s.get("validation_fraction", t.validation_fraction);
  s.get("init_seeds", t.init_seeds);
  s.get_list("reg_exponents", t.reg_exponents);
  s.get_list("reg_weights", t.reg_weights);
  if (YAML::Node k = s.find("kernels")) {
    if (!k.IsSequence()) s.fail(k, "kernels: expected a list");
    t.kernels.clear();
    for (const auto& item : k) t.kernels.push_back(parse_kernel(s.convert<std::string>(item, "kernels"), s, item));
  }
  if (YAML::Node b = s.find("blend")) {
    const auto v = s.convert<std::string>(b, "blend");
    if (v == "auto") t.blend = BlendMode::kAuto;
    else if (v == "nn-only") t.blend = BlendMode::kNnOnly;
    else s.fail(b, "blend: expected 'auto' or 'nn-only'");
  }
  s.get("least_squares_threshold", t.least_squares_threshold);
  if (YAML::Node m = s.find("search")) {
    const auto v = s.convert<std::string>(m, "search");
    if (v == "fixed") t.search = SearchMode::kFixed;
    else if (v == "reference") t.search = SearchMode::kReference;
    else if (v == "per-detail") t.search = SearchMode::kPerDetail;
    else s.fail(m, "search: expected 'fixed', 'reference' or 'per-detail'");
  }
  s.get("search_samples", t.search_samples);
  Section f = s.child("fixed");
  f.get("reg_exponent", t.fixed_reg_exponent);
  f.get("reg_weight", t.fixed_reg_weight);
  f.finish();
  s.finish();
}

void read_multilevel(Section s, MultilevelSection& m) {
  if (YAML::Node q = s.find("sequences")) {
    if (!q.IsSequence()) s.fail(q, "sequences: expected a list of lists");
    m.sequences.clear();
    for (const auto& item : q) {
      if (!item.IsSequence()) s.fail(item, "sequences: each entry must be a list of level indices");
      std::vector<int> seq;
      for (const auto& l : item) seq.push_back(s.convert<int>(l, "sequences"));
      m.sequences.push_back(seq);
    }
  }
  s.get_list("coarse_counts", m.coarse_counts);
  s.get_list("fine_counts", m.fine_counts);
  s.finish();
}

void read_uq(Section s, UqSection& u) {
  s.get("evaluation_samples", u.evaluation_samples);
  Section r = s.child("reference");
  r.get("step", u.reference_step);
  r.get("samples", u.reference_samples);
  r.finish();
  s.get("mc_repetitions", u.mc_repetitions);
  s.get_list("sl2mc_samples", u.sl2mc_samples);
  if (YAML::Node c = s.find("configurations")) {
    if (!c.IsSequence()) s.fail(c, "configurations: expected a list");
    u.configurations.clear();
    for (const auto& item : c) {
      Section e(item, s.key_path("configurations"), s.source());
      UqConfiguration cfg;
      e.get("coarse", cfg.coarse);
      e.get("fine", cfg.fine);
      e.get_list("sequence", cfg.sequence);
      e.finish();
      u.configurations.push_back(cfg);
    }
  }
  s.finish();
}

void read_bound(Section s, BoundStudySection& b) {
  s.get_list("sizes", b.sizes);
  s.get("repetitions", b.repetitions);
  s.get("validation_sets", b.validation_sets);
  s.get("full_repetitions", b.full_repetitions);
  s.get("full_validation_sets", b.full_validation_sets);
  s.get("full_fidelity", b.full_fidelity);
  s.get("pool_size", b.pool_size);
  s.get("loss_exponent", b.loss_exponent);
  s.get("reg_exponent", b.reg_exponent);
  s.get("reg_weight", b.reg_weight);
  s.get("learning_rate", b.learning_rate);
  s.get("epochs", b.epochs);
  s.get("level", b.level);
  s.finish();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  ExperimentConfig c;
  Section s(root, "", source);
  if (!root || root.IsNull()) throw ConfigError(source + ": empty configuration");
  const YAML::Node version = s.find("schema_version");
  if (!version) throw ConfigError(source + ": missing schema_version");
  c.schema_version = s.convert<int>(version, "schema_version");
  if (c.schema_version != kSchemaVersion) {
    s.fail(version, "unsupported schema_version " + std::to_string(c.schema_version) + " (expected " +
                        std::to_string(kSchemaVersion) + ")");
  }
  s.get("seed", c.seed);
  s.get("output_dir", c.output_dir);
  s.get("workers", c.workers);
  read_model(s.child("model"), c.model);
  read_sampling(s.child("sampling"), c.sampling);
  read_training(s.child("training"), c.training);
  read_multilevel(s.child("multilevel"), c.multilevel);
  read_uq(s.child("uq"), c.uq);
  read_bound(s.child("bound_study"), c.bound_study);
  s.finish();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ": cannot read configuration (" + e.what() + ")");
  }
  return parse_config(text, path.string());
}

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("invalid configuration: " + msg);
}

}  // namespace

void validate(const ExperimentConfig& c) {
  try {
    c.model.nominal.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid configuration: model.nominal: ") + e.what());
  }
  require(c.model.epsilon >= 0.0 && c.model.epsilon < 1.0, "model.epsilon must lie in [0, 1)");
  require(c.model.coarsest_step > 0.0, "model.coarsest_step must be > 0");
  require(c.model.finest_level >= 1, "model.finest_level must be >= 1");
  require(c.model.cost_exponent > 0.0, "model.cost_exponent must be > 0");
  require(c.sampling.pool_size >= 2, "sampling.pool_size must be >= 2");
  require(c.sampling.test_size >= 2, "sampling.test_size must be >= 2");
  if (c.sampling.provenance == PointProvenance::kSobol) {
    require(kProjectileDimension <= kMaxSobolDimension, "Sobol dimension unsupported");
  }
  const auto& t = c.training;
  require(t.hidden_layers >= 1 && t.width >= 1, "training: network must have hidden layers");
  require(t.loss_exponent == 1 || t.loss_exponent == 2, "training.loss_exponent must be 1 or 2");
  require(t.learning_rate > 0.0, "training.learning_rate must be > 0");
  require(t.epochs >= 1, "training.epochs must be >= 1");
  require(t.validation_fraction > 0.0 && t.validation_fraction < 1.0,
          "training.validation_fraction must lie in (0, 1)");
  require(t.init_seeds >= 1, "training.init_seeds must be >= 1");
  require(!t.reg_exponents.empty() && !t.reg_weights.empty(), "training: empty hyperparameter grid");
  for (int q : t.reg_exponents) require(q == 1 || q == 2, "training.reg_exponents entries must be 1 or 2");
  for (double l : t.reg_weights) require(l >= 0.0, "training.reg_weights entries must be >= 0");
  require(t.fixed_reg_exponent == 1 || t.fixed_reg_exponent == 2, "training.fixed.reg_exponent must be 1 or 2");
  require(t.fixed_reg_weight >= 0.0, "training.fixed.reg_weight must be >= 0");
  require(t.search_samples >= 4, "training.search_samples must be >= 4");
  require(t.blend == BlendMode::kNnOnly || !t.kernels.empty(), "training.blend 'auto' needs kernels");

  const auto& m = c.multilevel;
  require(!m.sequences.empty() && !m.coarse_counts.empty() && !m.fine_counts.empty(),
          "multilevel: sequences, coarse_counts and fine_counts must be non-empty");
  for (const auto& seq : m.sequences) {
    try {
      validate_level_indices(seq, c.model.finest_level);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("invalid configuration: multilevel.sequences: ") + e.what());
    }
  }
  for (std::size_t n0 : m.coarse_counts) {
    for (std::size_t nl : m.fine_counts) {
      require(nl >= 2 && n0 >= nl, "multilevel: need coarse_counts >= fine_counts >= 2");
    }
  }

  const auto& u = c.uq;
  require(u.evaluation_samples >= 2, "uq.evaluation_samples must be >= 2");
  require(u.reference_step > 0.0, "uq.reference.step must be > 0");
  require(u.reference_samples >= 2, "uq.reference.samples must be >= 2");
  require(u.mc_repetitions >= 1, "uq.mc_repetitions must be >= 1");
  for (std::size_t n : u.sl2mc_samples) require(n >= 2, "uq.sl2mc_samples entries must be >= 2");
  for (const auto& cfg : u.configurations) {
    try {
      validate_level_indices(cfg.sequence, c.model.finest_level);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("invalid configuration: uq.configurations: ") + e.what());
    }
    require(cfg.fine >= 2 && cfg.coarse >= cfg.fine, "uq.configurations: need coarse >= fine >= 2");
  }

  const auto& b = c.bound_study;
  require(!b.sizes.empty(), "bound_study.sizes must be non-empty");
  for (std::size_t n : b.sizes) require(n >= 2 && n < b.pool_size, "bound_study.sizes must lie in [2, pool_size)");
  require(b.repetitions >= 1 && b.validation_sets >= 1, "bound_study: repetitions and validation_sets must be >= 1");
  require(b.full_repetitions >= 1 && b.full_validation_sets >= 1, "bound_study: full settings must be >= 1");
  require(b.loss_exponent == 1 || b.loss_exponent == 2, "bound_study.loss_exponent must be 1 or 2");
  require(b.reg_exponent == 1 || b.reg_exponent == 2, "bound_study.reg_exponent must be 1 or 2");
  require(b.level >= 0 && b.level <= c.model.finest_level, "bound_study.level outside the ladder");
  require(b.epochs >= 1 && b.learning_rate > 0.0, "bound_study: epochs and learning_rate must be positive");
}

ProjectileModel ExperimentConfig::make_model() const {
  return ProjectileModel(ResolutionLadder(model.coarsest_step, model.finest_level, model.cost_exponent),
                         PerturbationSpec{model.nominal, model.epsilon}, model.drag);
}

EnsembleConfig ExperimentConfig::search_config() const {
  EnsembleConfig e;
  e.grid.reg_exponents = training.reg_exponents;
  e.grid.reg_weights = training.reg_weights;
  e.grid.init_seeds = training.init_seeds;
  e.grid.kernels = training.blend == BlendMode::kAuto ? training.kernels : std::vector<KernelSpec>{};
  e.hidden_layers = training.hidden_layers;
  e.width = training.width;
  e.training.loss_exponent = training.loss_exponent;
  e.training.learning_rate = training.learning_rate;
  e.training.epochs = training.epochs;
  e.training.validation_fraction = training.validation_fraction;
  e.blend = training.blend;
  e.least_squares_threshold = training.least_squares_threshold;
  e.workers = workers;
  return e;
}

EnsembleConfig ExperimentConfig::ensemble_config(int reg_exponent, double reg_weight) const {
  EnsembleConfig e = search_config();
  e.grid.reg_exponents = {reg_exponent};
  e.grid.reg_weights = {reg_weight};
  return e;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string data_fingerprint(const ExperimentConfig& c) {
  std::ostringstream os;
  const auto& n = c.model.nominal;
  os << "v1|" << c.seed << '|' << format_double(n.air_density) << '|' << format_double(n.radius) << '|'
     << format_double(n.drag_coefficient) << '|' << format_double(n.mass) << '|' << format_double(n.height) << '|'
     << format_double(n.launch_angle) << '|' << format_double(n.speed) << '|' << format_double(n.gravity) << '|'
     << format_double(c.model.epsilon) << '|' << format_double(c.model.coarsest_step) << '|' << c.model.finest_level
     << '|' << format_double(c.model.cost_exponent) << '|' << static_cast<int>(c.model.drag) << '|'
     << static_cast<int>(c.sampling.provenance) << '|' << c.sampling.pool_size << '|' << c.sampling.test_size;
  return fnv1a_hex(os.str());
}

}  // namespace mlml::cli
