#include "mlml/multilevel.hpp"

#include <cmath>
#include <exception>

#include "mlml/csv.hpp"
#include "mlml/parallel.hpp"
#include "mlml/random.hpp"

namespace mlml {

LevelSequence::LevelSequence(int finest_level, std::vector<int> indices)
    : finest_level_(finest_level), indices_(std::move(indices)) {
  validate_level_indices(indices_, finest_level_);
}

double LevelSequence::complexity() const {
  const double n = static_cast<double>(detail_count());
  return n * n / static_cast<double>(finest_level_);
}

std::string LevelSequence::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(indices_[i]);
  }
  return s;
}

LevelSequence build_sequence(int finest_level, std::vector<int> indices) {
  return LevelSequence(finest_level, std::move(indices));
}

double sample_cost(const LevelSequence& sequence, const ResolutionLadder& ladder, std::size_t k) {
  const auto& idx = sequence.indices();
  if (k == 0) return ladder.cost(idx[0]);
  return ladder.cost(idx.at(k)) + ladder.cost(idx.at(k - 1));
}

namespace {

void check_allocation(const LevelSequence& sequence, const SampleAllocation& allocation) {
  if (allocation.ladder_indices != sequence.indices() || allocation.counts.size() != sequence.indices().size()) {
    throw std::invalid_argument("sample allocation does not match the level sequence");
  }
}

std::vector<double> gather(std::span<const double> values, std::size_t d, std::size_t first, std::size_t count) {
  return {values.begin() + static_cast<std::ptrdiff_t>(first * d),
          values.begin() + static_cast<std::ptrdiff_t>((first + count) * d)};
}

}  // namespace

double generation_cost(const LevelSequence& sequence, const SampleAllocation& allocation,
                       const ResolutionLadder& ladder) {
  check_allocation(sequence, allocation);
  double c = 0.0;
  for (std::size_t k = 0; k < allocation.counts.size(); ++k) {
    c += static_cast<double>(allocation.counts[k]) * sample_cost(sequence, ladder, k);
  }
  return c;
}

LevelData generate_level_data(const LevelModel& model, const LevelSequence& sequence,
                              const SampleAllocation& allocation, const PointStream& points, std::size_t workers) {
  check_allocation(sequence, allocation);
  if (points.space().dimension() != model.dimension()) {
    throw std::invalid_argument("generate_level_data: point dimension does not match the model");
  }
  const std::size_t d = model.dimension();
  const SampleSet pool = points.block(0, allocation.total());
  const auto& idx = sequence.indices();
  const std::size_t sets = idx.size();
  std::vector<std::size_t> first(sets, 0);
  for (std::size_t k = 1; k < sets; ++k) first[k] = first[k - 1] + allocation.counts[k - 1];

  std::vector<std::vector<double>> targets(sets);
  for (std::size_t k = 0; k < sets; ++k) targets[k].resize(allocation.counts[k]);
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t k = 0; k < sets; ++k)
    for (std::size_t i = 0; i < allocation.counts[k]; ++i) jobs.emplace_back(k, i);

  parallel_for(jobs.size(), workers ? workers : default_worker_count(), [&](std::size_t j) {
    const auto [k, i] = jobs[j];
    const auto y = pool.point(first[k] + i);
    try {
      targets[k][i] = (k == 0) ? model.evaluate(y, idx[0]) : evaluate_detail(model, y, k, idx);
    } catch (const std::exception& e) {
      throw ForwardModelError(std::string("forward model failed: ") + e.what(), std::vector<double>(y.begin(), y.end()));
    }
  });

  LevelData out;
  out.base = Dataset(d, gather(pool.values(), d, 0, allocation.counts[0]), std::move(targets[0]));
  for (std::size_t k = 1; k < sets; ++k) {
    out.details.emplace_back(d, gather(pool.values(), d, first[k], allocation.counts[k]), std::move(targets[k]));
  }
  out.generation_cost = generation_cost(sequence, allocation, model.ladder());
  return out;
}

LevelData assemble_level_data(const SampleSet& pool, const std::vector<std::vector<double>>& values,
                              const LevelSequence& sequence, const SampleAllocation& allocation,
                              const ResolutionLadder& ladder) {
  check_allocation(sequence, allocation);
  const auto& idx = sequence.indices();
  const std::size_t d = pool.dimension();
  if (allocation.total() > pool.size()) throw std::invalid_argument("assemble_level_data: pool too small");
  for (int l : idx) {
    if (static_cast<std::size_t>(l) >= values.size() || values[l].size() < allocation.total()) {
      throw std::invalid_argument("assemble_level_data: missing level values");
    }
  }
  LevelData out;
  std::size_t first = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t n = allocation.counts[k];
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = (k == 0) ? values[idx[0]][first + i] : values[idx[k]][first + i] - values[idx[k - 1]][first + i];
    }
    Dataset ds(d, gather(pool.values(), d, first, n), std::move(t));
    if (k == 0) out.base = std::move(ds);
    else out.details.push_back(std::move(ds));
    first += n;
  }
  out.generation_cost = generation_cost(sequence, allocation, ladder);
  return out;
}

MultilevelSurrogate::MultilevelSurrogate(LevelSequence sequence, SampleAllocation allocation, SurrogateEnsemble base,
                                         std::vector<SurrogateEnsemble> details, double generation_cost)
    : sequence_(std::move(sequence)),
      allocation_(std::move(allocation)),
      base_(std::move(base)),
      details_(std::move(details)),
      generation_cost_(generation_cost) {
  if (details_.size() != sequence_.detail_count()) {
    throw std::invalid_argument("multilevel surrogate: need one detail surrogate per sequence step");
  }
}

double MultilevelSurrogate::predict(std::span<const double> y) const {
  double v = base_.predict(y);
  for (const auto& d : details_) v += d.predict(y);
  return v;
}

std::vector<double> MultilevelSurrogate::predict_batch(std::span<const double> inputs) const {
  auto out = base_.predict_batch(inputs);
  for (const auto& d : details_) {
    const auto p = d.predict_batch(inputs);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
  }
  return out;
}

void MultilevelSurrogate::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json m;
  m["format"] = "mlml.multilevel";
  m["version"] = 1;
  m["finest_level"] = sequence_.finest_level();
  m["sequence"] = sequence_.indices();
  m["counts"] = allocation_.counts;
  m["exponent"] = allocation_.exponent;
  m["generation_cost"] = generation_cost_;
  base_.save(dir / "base");
  for (std::size_t k = 0; k < details_.size(); ++k) details_[k].save(dir / ("detail_" + std::to_string(k + 1)));
  atomic_write_file(dir / "manifest.json", m.dump(1));
}

MultilevelSurrogate MultilevelSurrogate::load(const std::filesystem::path& dir) {
  try {
    const auto m = nlohmann::json::parse(read_file(dir / "manifest.json"));
    if (m.at("format").get<std::string>() != "mlml.multilevel") throw DataError("not a multilevel manifest");
    LevelSequence seq(m.at("finest_level").get<int>(), m.at("sequence").get<std::vector<int>>());
    SampleAllocation alloc;
    alloc.ladder_indices = seq.indices();
    alloc.counts = m.at("counts").get<std::vector<std::size_t>>();
    alloc.exponent = m.at("exponent").get<double>();
    auto base = SurrogateEnsemble::load(dir / "base");
    std::vector<SurrogateEnsemble> details;
    for (std::size_t k = 1; k <= seq.detail_count(); ++k) {
      details.push_back(SurrogateEnsemble::load(dir / ("detail_" + std::to_string(k))));
    }
    return MultilevelSurrogate(std::move(seq), std::move(alloc), std::move(base), std::move(details),
                               m.at("generation_cost").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / "manifest.json").string() + ": " + e.what());
  }
}

MultilevelSurrogate train_multilevel(const LevelData& data, const LevelSequence& sequence,
                                     const SampleAllocation& allocation, const MultilevelTrainingConfig& config,
                                     std::uint64_t seed) {
  if (data.details.size() != sequence.detail_count()) {
    throw std::invalid_argument("train_multilevel: dataset count does not match the sequence");
  }
  SurrogateEnsemble base = ensemble_train(data.base, config.base, derive_seed(seed, {0}));
  std::vector<SurrogateEnsemble> details;
  for (std::size_t k = 0; k < data.details.size(); ++k) {
    details.push_back(ensemble_train(data.details[k], config.detail, derive_seed(seed, {k + 1})));
  }
  return MultilevelSurrogate(sequence, allocation, std::move(base), std::move(details), data.generation_cost);
}

bool WellTrainedReport::all_well_trained() const {
  for (const auto& e : entries) {
    if (!e.verdict) return false;
  }
  return true;
}

WellTrainedReport well_trained_check(std::span<const SurrogateDiagnostics> surrogates) {
  WellTrainedReport r;
  for (const auto& s : surrogates) {
    if (s.samples == 0) throw std::invalid_argument("well_trained_check: sample count must be >= 1");
    WellTrainedEntry e;
    e.diagnostics = s;
    e.threshold = s.map_std / std::sqrt(static_cast<double>(s.samples));
    e.errors_below_threshold = s.training_error < e.threshold && s.validation_gap < e.threshold;
    if (s.map_std > 0.0) {
      const double ratio = s.surrogate_std / s.map_std;
      e.std_comparable = ratio >= 0.5 && ratio <= 2.0;
    } else {
      e.std_comparable = s.surrogate_std == 0.0;
    }
    e.verdict = e.errors_below_threshold && e.std_comparable;
    r.entries.push_back(e);
  }
  return r;
}

double estimate_speedup(std::span<const double> variances, const LevelSequence& sequence, double cost_exponent,
                        double total_variance) {
  if (variances.size() != sequence.indices().size()) {
    throw std::invalid_argument("estimate_speedup: need one variance per dataset");
  }
  if (!(total_variance > 0.0)) throw std::invalid_argument("estimate_speedup: total variance must be > 0");
  for (double v : variances) {
    if (!(v >= 0.0)) throw std::invalid_argument("estimate_speedup: variances must be >= 0");
  }
  const int big_l = sequence.finest_level();
  const auto& idx = sequence.indices();
  double bracket = variances[0] * std::exp2(-big_l * cost_exponent);
  for (std::size_t k = 1; k < idx.size(); ++k) {
    bracket += variances[k] * std::exp2(-(big_l - idx[k]) * cost_exponent);
  }
  const double inverse = static_cast<double>(big_l) / total_variance * bracket;
  return 1.0 / inverse;
}

std::size_t matched_cost_samples(double total_cost, const ResolutionLadder& ladder) {
  if (!(total_cost >= 0.0)) throw std::invalid_argument("matched_cost_samples: cost must be >= 0");
  const double c = ladder.cost(ladder.finest_level());
  auto n = static_cast<std::size_t>(std::floor(total_cost / c));
  // Guard against the quotient rounding up past the budget.
  while (n > 0 && static_cast<double>(n) * c > total_cost) --n;
  return n;
}

}  // namespace mlml
