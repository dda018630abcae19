#include "mlml_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mlml/csv.hpp"
#include "mlml/parallel.hpp"
#include "mlml/random.hpp"
#include "mlml/uq.hpp"

namespace mlml::cli {

namespace {

std::size_t workers_of(const ExperimentConfig& c) { return c.workers ? c.workers : default_worker_count(); }

std::string points_csv(const SampleSet& pts, int level, std::span<const double> values) {
  std::ostringstream os;
  for (std::size_t j = 0; j < pts.dimension(); ++j) os << 'y' << j << ',';
  os << "level,value\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (double v : pts.point(i)) os << format_double(v) << ',';
    os << level << ',' << format_double(values[i]) << '\n';
  }
  return os.str();
}

std::pair<SampleSet, std::vector<double>> parse_points(const std::filesystem::path& path, std::size_t dimension,
                                                       int level, const Provenance& provenance) {
  const CsvTable t = read_csv(path);
  if (t.header.size() != dimension + 2) throw DataError(path.string() + ": unexpected column count");
  std::vector<double> pts;
  std::vector<double> values;
  pts.reserve(t.rows.size() * dimension);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t j = 0; j < dimension; ++j) pts.push_back(t.number(r, j));
    if (t.number(r, dimension) != level) throw DataError(path.string() + ": unexpected level in row " + std::to_string(r + 1));
    values.push_back(t.number(r, dimension + 1));
  }
  return {SampleSet(dimension, std::move(pts), provenance), std::move(values)};
}

std::vector<double> evaluate_points(const LevelModel& model, const SampleSet& pts, double step, std::size_t workers) {
  std::vector<double> v(pts.size());
  parallel_for(pts.size(), workers, [&](std::size_t i) { v[i] = model.evaluate_at_step(pts.point(i), step); });
  return v;
}

std::string level_file(int l) { return "level_" + std::to_string(l) + ".csv"; }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

Dataset pool_dataset(const DataStore& data, std::size_t first, std::size_t count, std::span<const double> values) {
  const std::size_t d = data.pool.dimension();
  if (first + count > data.pool.size()) {
    throw DataError("the training pool holds " + std::to_string(data.pool.size()) + " points but " +
                    std::to_string(first + count) + " are needed; raise sampling.pool_size and rerun gen-data");
  }
  auto pv = data.pool.values();
  return Dataset(d, std::vector<double>(pv.begin() + first * d, pv.begin() + (first + count) * d),
                 std::vector<double>(values.begin() + first, values.begin() + first + count));
}

std::uint64_t sequence_code(const std::vector<int>& seq) {
  std::uint64_t c = 0;
  for (int l : seq) c |= std::uint64_t{1} << l;
  return c;
}

}  // namespace

PointStream pool_stream(const ExperimentConfig& c) {
  const ParameterSpace space(kProjectileDimension);
  if (c.sampling.provenance == PointProvenance::kSobol) return PointStream(space, SobolProvenance{0});
  return PointStream(space, RandomProvenance{derive_seed(c.seed, {kPoolTag}), 0});
}

PointStream test_stream(const ExperimentConfig& c) {
  return PointStream(ParameterSpace(kProjectileDimension), RandomProvenance{derive_seed(c.seed, {kTestTag}), 0});
}

std::filesystem::path data_dir(const ExperimentConfig& c) { return c.output_dir / "data"; }

DataStore generate_data(const ExperimentConfig& c) {
  const ProjectileModel model = c.make_model();
  const auto& ladder = model.ladder();
  const std::size_t workers = workers_of(c);
  DataStore d;
  d.pool = pool_stream(c).block(0, c.sampling.pool_size);
  for (int l = 0; l <= ladder.finest_level(); ++l) d.levels.push_back(evaluate_points(model, d.pool, ladder.step(l), workers));
  d.test = test_stream(c).block(0, c.sampling.test_size);
  d.test_truth = evaluate_points(model, d.test, ladder.step(ladder.finest_level()), workers);
  return d;
}

GenDataResult cmd_gen_data(const ExperimentConfig& c, std::ostream& log) {
  const auto dir = data_dir(c);
  const auto manifest_path = dir / "manifest.json";
  const std::string fingerprint = data_fingerprint(c);
  GenDataResult result;
  std::vector<std::string> names;
  for (int l = 0; l <= c.model.finest_level; ++l) names.push_back(level_file(l));
  names.push_back("test.csv");
  for (const auto& n : names) result.files.push_back(dir / n);

  if (std::filesystem::exists(manifest_path)) {
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(read_file(manifest_path));
      if (m.at("format").get<std::string>() != "mlml.data") throw DataError("wrong format tag");
      m.at("fingerprint").get<std::string>();
      m.at("files").get<std::map<std::string, std::string>>();
    } catch (const std::exception& e) {
      throw DataError(manifest_path.string() + " is corrupted (" + e.what() + "); delete " + dir.string() +
                      " and rerun gen-data");
    }
    bool intact = m["fingerprint"].get<std::string>() == fingerprint;
    const auto files = m["files"].get<std::map<std::string, std::string>>();
    for (const auto& n : names) {
      if (!intact) break;
      const auto it = files.find(n);
      intact = it != files.end() && std::filesystem::exists(dir / n) && fnv1a_hex(read_file(dir / n)) == it->second;
    }
    if (intact) {
      log << "gen-data: " << dir.string() << " is up to date (fingerprint " << fingerprint << ")\n";
      result.skipped = true;
      return result;
    }
  }

  log << "gen-data: evaluating " << c.sampling.pool_size << " pool points on " << c.model.finest_level + 1
      << " levels and " << c.sampling.test_size << " test points\n";
  const DataStore d = generate_data(c);
  std::filesystem::create_directories(dir);
  nlohmann::json m;
  m["format"] = "mlml.data";
  m["version"] = 1;
  m["fingerprint"] = fingerprint;
  m["pool"] = describe(d.pool.provenance());
  m["test"] = describe(d.test.provenance());
  const auto& nom = c.model.nominal;
  m["model"] = {{"nominal",
                 {nom.air_density, nom.radius, nom.drag_coefficient, nom.mass, nom.height, nom.launch_angle, nom.speed}},
                {"gravity", nom.gravity},
                {"epsilon", c.model.epsilon},
                {"coarsest_step", c.model.coarsest_step},
                {"finest_level", c.model.finest_level},
                {"cost_exponent", c.model.cost_exponent},
                {"drag", c.model.drag == DragModel::kHorizontal ? "horizontal" : "along-velocity"}};
  m["seed"] = c.seed;
  nlohmann::json files = nlohmann::json::object();
  for (int l = 0; l <= c.model.finest_level; ++l) {
    const std::string text = points_csv(d.pool, l, d.levels[l]);
    atomic_write_file(dir / level_file(l), text);
    files[level_file(l)] = fnv1a_hex(text);
  }
  const std::string test_text = points_csv(d.test, c.model.finest_level, d.test_truth);
  atomic_write_file(dir / "test.csv", test_text);
  files["test.csv"] = fnv1a_hex(test_text);
  m["files"] = files;
  atomic_write_file(manifest_path, m.dump(1));
  log << "gen-data: wrote " << names.size() << " files to " << dir.string() << '\n';
  return result;
}

DataStore load_data(const ExperimentConfig& c) {
  const auto dir = data_dir(c);
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw DataError("no generated data in " + dir.string() + "; run gen-data first");
  }
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(manifest_path));
    if (m.at("format").get<std::string>() != "mlml.data") throw DataError("wrong format tag");
  } catch (const std::exception& e) {
    throw DataError(manifest_path.string() + " is corrupted (" + e.what() + "); delete " + dir.string() +
                    " and rerun gen-data");
  }
  if (m.value("fingerprint", "") != data_fingerprint(c)) {
    throw DataError("data in " + dir.string() + " was generated from a different configuration; rerun gen-data");
  }
  DataStore d;
  const Provenance pool_origin = pool_stream(c).origin();
  for (int l = 0; l <= c.model.finest_level; ++l) {
    auto [pts, values] = parse_points(dir / level_file(l), kProjectileDimension, l, pool_origin);
    if (l == 0) d.pool = std::move(pts);
    else if (pts.values().size() != d.pool.values().size()) throw DataError(level_file(l) + ": row count mismatch");
    d.levels.push_back(std::move(values));
  }
  auto [test, truth] = parse_points(dir / "test.csv", kProjectileDimension, c.model.finest_level, test_stream(c).origin());
  d.test = std::move(test);
  d.test_truth = std::move(truth);
  return d;
}

EnsembleConfig base_ensemble_config(const ExperimentConfig& c, const Hyperparameters& h) {
  return h.per_surrogate_search ? c.search_config() : c.ensemble_config(h.base_reg_exponent, h.base_reg_weight);
}

EnsembleConfig detail_ensemble_config(const ExperimentConfig& c, const Hyperparameters& h) {
  return h.per_surrogate_search ? c.search_config() : c.ensemble_config(h.detail_reg_exponent, h.detail_reg_weight);
}

Hyperparameters resolve_hyperparameters(const ExperimentConfig& c, const DataStore& data, std::ostream& log) {
  Hyperparameters h;
  const auto& t = c.training;
  if (t.search == SearchMode::kFixed) {
    h.base_reg_exponent = h.detail_reg_exponent = t.fixed_reg_exponent;
    h.base_reg_weight = h.detail_reg_weight = t.fixed_reg_weight;
    return h;
  }
  if (t.search == SearchMode::kPerDetail) {
    h.per_surrogate_search = true;
    return h;
  }

  // Cache key covers the data and every setting that shapes the search.
  std::ostringstream key;
  key << data_fingerprint(c) << '|' << t.hidden_layers << '|' << t.width << '|' << t.loss_exponent << '|'
      << format_double(t.learning_rate) << '|' << t.epochs << '|' << format_double(t.validation_fraction) << '|'
      << t.init_seeds << '|' << t.search_samples << '|' << static_cast<int>(t.blend);
  for (int q : t.reg_exponents) key << "|q" << q;
  for (double l : t.reg_weights) key << "|l" << format_double(l);
  const std::string digest = fnv1a_hex(key.str());
  const auto cache = c.output_dir / "search.json";
  if (std::filesystem::exists(cache)) {
    try {
      const auto j = nlohmann::json::parse(read_file(cache));
      if (j.at("key").get<std::string>() == digest) {
        h.base_reg_exponent = j.at("base").at("q").get<int>();
        h.base_reg_weight = j.at("base").at("lambda").get<double>();
        h.detail_reg_exponent = j.at("detail").at("q").get<int>();
        h.detail_reg_weight = j.at("detail").at("lambda").get<double>();
        log << "search: reusing " << cache.string() << '\n';
        return h;
      }
    } catch (const nlohmann::json::exception&) {
      log << "search: ignoring unreadable " << cache.string() << '\n';
    }
  }

  const std::size_t n = t.search_samples;
  const EnsembleConfig grid = c.search_config();
  log << "search: " << grid.grid.cell_count() << " cells on " << n << " samples for the base map and D_ref\n";
  const Dataset base = pool_dataset(data, 0, n, data.levels[0]);
  std::vector<double> dref(data.levels[1].size());
  for (std::size_t i = 0; i < dref.size(); ++i) dref[i] = data.levels[1][i] - data.levels[0][i];
  const Dataset detail = pool_dataset(data, 0, n, dref);
  const auto best_of = [](const SurrogateEnsemble& e) {
    const auto& log_rows = e.grid_log();
    const auto it = std::min_element(log_rows.begin(), log_rows.end(), [](const auto& a, const auto& b) {
      return a.validation_error < b.validation_error;
    });
    return *it;
  };
  const auto b = best_of(ensemble_train(base, grid, derive_seed(c.seed, {kSearchTag, 0})));
  const auto d = best_of(ensemble_train(detail, grid, derive_seed(c.seed, {kSearchTag, 1})));
  h.base_reg_exponent = b.reg_exponent;
  h.base_reg_weight = b.reg_weight;
  h.detail_reg_exponent = d.reg_exponent;
  h.detail_reg_weight = d.reg_weight;
  log << "search: base q=" << b.reg_exponent << " lambda=" << b.reg_weight << ", detail q=" << d.reg_exponent
      << " lambda=" << d.reg_weight << '\n';
  nlohmann::json j{{"key", digest},
                   {"base", {{"q", b.reg_exponent}, {"lambda", b.reg_weight}}},
                   {"detail", {{"q", d.reg_exponent}, {"lambda", d.reg_weight}}}};
  std::filesystem::create_directories(c.output_dir);
  atomic_write_file(cache, j.dump(1));
  return h;
}

SurrogateEnsemble train_single_level(const ExperimentConfig& c, const DataStore& data, const Hyperparameters& h,
                                     std::size_t samples) {
  const Dataset ds = pool_dataset(data, 0, samples, data.levels.at(static_cast<std::size_t>(c.model.finest_level)));
  return ensemble_train(ds, base_ensemble_config(c, h), derive_seed(c.seed, {kSingleTag, samples}));
}

namespace {

struct MultilevelParts {
  LevelSequence sequence;
  SampleAllocation allocation;
  LevelData data;
};

MultilevelParts prepare_multilevel(const ExperimentConfig& c, const DataStore& data, const std::vector<int>& seq,
                                   std::size_t coarse, std::size_t fine) {
  const ResolutionLadder ladder(c.model.coarsest_step, c.model.finest_level, c.model.cost_exponent);
  LevelSequence sequence(c.model.finest_level, seq);
  SampleAllocation alloc = allocate_samples(seq, coarse, fine, c.model.finest_level);
  if (alloc.total() > data.pool.size()) {
    throw DataError("configuration " + sequence.to_string() + " needs " + std::to_string(alloc.total()) +
                    " pool points but only " + std::to_string(data.pool.size()) +
                    " exist; raise sampling.pool_size and rerun gen-data");
  }
  LevelData ld = assemble_level_data(data.pool, data.levels, sequence, alloc, ladder);
  return {std::move(sequence), std::move(alloc), std::move(ld)};
}

SurrogateEnsemble train_base(const ExperimentConfig& c, const LevelData& ld, const Hyperparameters& h,
                             std::size_t coarse) {
  return ensemble_train(ld.base, base_ensemble_config(c, h), derive_seed(c.seed, {kBaseTag, coarse}));
}

SurrogateEnsemble train_detail(const ExperimentConfig& c, const LevelData& ld, const Hyperparameters& h,
                               const std::vector<int>& seq, std::size_t coarse, std::size_t fine, std::size_t k) {
  return ensemble_train(ld.details[k], detail_ensemble_config(c, h),
                        derive_seed(c.seed, {kDetailTag, sequence_code(seq), coarse, fine, k}));
}

}  // namespace

MultilevelSurrogate train_multilevel_from_pool(const ExperimentConfig& c, const DataStore& data,
                                               const Hyperparameters& h, const std::vector<int>& seq,
                                               std::size_t coarse, std::size_t fine) {
  MultilevelParts p = prepare_multilevel(c, data, seq, coarse, fine);
  SurrogateEnsemble base = train_base(c, p.data, h, coarse);
  std::vector<SurrogateEnsemble> details;
  for (std::size_t k = 0; k < p.data.details.size(); ++k) details.push_back(train_detail(c, p.data, h, seq, coarse, fine, k));
  return MultilevelSurrogate(std::move(p.sequence), std::move(p.allocation), std::move(base), std::move(details),
                             p.data.generation_cost);
}

void cmd_train_sl(const ExperimentConfig& c, std::size_t samples, std::ostream& log) {
  const DataStore data = load_data(c);
  const Hyperparameters h = resolve_hyperparameters(c, data, log);
  const SurrogateEnsemble sl = train_single_level(c, data, h, samples);
  const auto dir = c.output_dir / "models" / ("sl_" + std::to_string(samples));
  sl.save(dir);
  const double err = prediction_error(sl.predict_batch(data.test.values()), data.test_truth, 2);
  const ResolutionLadder ladder(c.model.coarsest_step, c.model.finest_level, c.model.cost_exponent);
  log << "train-sl: " << samples << " samples, cost " << fmt(static_cast<double>(samples) * ladder.cost(ladder.finest_level()))
      << ", relative test error " << fmt(err) << ", saved to " << dir.string() << '\n';
}

void cmd_train_ml(const ExperimentConfig& c, const std::vector<int>& seq, std::size_t coarse, std::size_t fine,
                  std::ostream& log) {
  const DataStore data = load_data(c);
  const Hyperparameters h = resolve_hyperparameters(c, data, log);
  const MultilevelSurrogate ml = train_multilevel_from_pool(c, data, h, seq, coarse, fine);
  const auto dir = c.output_dir / "models" /
                   ("ml_" + ml.sequence().to_string() + "_" + std::to_string(coarse) + "_" + std::to_string(fine));
  ml.save(dir);
  const double err = prediction_error(ml.predict_batch(data.test.values()), data.test_truth, 2);
  log << "train-ml: sequence " << ml.sequence().to_string() << " (c_ml " << fmt(ml.sequence().complexity())
      << "), counts";
  for (std::size_t n : ml.allocation().counts) log << ' ' << n;
  log << ", cost " << fmt(ml.generation_cost()) << ", relative test error " << fmt(err) << ", saved to "
      << dir.string() << '\n';

  // Well-trained diagnostics against map statistics over the whole pool.
  const auto& idx = ml.sequence().indices();
  std::vector<SurrogateDiagnostics> diag;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const SurrogateEnsemble& e = k == 0 ? ml.base() : ml.details()[k - 1];
    std::vector<double> target(data.pool.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
      target[i] = k == 0 ? data.levels[idx[0]][i] : data.levels[idx[k]][i] - data.levels[idx[k - 1]][i];
    }
    SurrogateDiagnostics s;
    s.name = k == 0 ? "base" : "detail " + std::to_string(k);
    s.samples = ml.allocation().counts[k];
    if (e.nn()) {
      s.training_error = e.nn()->report().training_error;
      s.validation_gap = e.nn()->report().validation_gap;
    }
    s.map_std = sample_std(target);
    s.surrogate_std = sample_std(e.predict_batch(data.test.values()));
    diag.push_back(s);
  }
  for (const auto& entry : well_trained_check(diag).entries) {
    const auto& s = entry.diagnostics;
    log << "  " << s.name << ": N " << s.samples << ", E_T " << fmt(s.training_error) << ", E_TV "
        << fmt(s.validation_gap) << ", threshold " << fmt(entry.threshold) << ", std " << fmt(s.surrogate_std)
        << " vs " << fmt(s.map_std) << (entry.verdict ? ", well-trained\n" : ", not well-trained\n");
  }
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& c, const DataStore& data, const Hyperparameters& h,
                                std::ostream& log) {
  const ResolutionLadder ladder(c.model.coarsest_step, c.model.finest_level, c.model.cost_exponent);
  const auto test_inputs = data.test.values();
  std::map<std::size_t, std::vector<double>> base_cache;
  std::map<std::size_t, std::vector<double>> single_cache;
  std::vector<SweepRow> rows;
  const std::size_t total =
      c.multilevel.sequences.size() * c.multilevel.coarse_counts.size() * c.multilevel.fine_counts.size();
  for (const auto& seq : c.multilevel.sequences) {
    for (std::size_t coarse : c.multilevel.coarse_counts) {
      for (std::size_t fine : c.multilevel.fine_counts) {
        MultilevelParts p = prepare_multilevel(c, data, seq, coarse, fine);
        auto it = base_cache.find(coarse);
        if (it == base_cache.end()) {
          it = base_cache.emplace(coarse, train_base(c, p.data, h, coarse).predict_batch(test_inputs)).first;
        }
        std::vector<double> ml = it->second;
        for (std::size_t k = 0; k < p.data.details.size(); ++k) {
          const auto d = train_detail(c, p.data, h, seq, coarse, fine, k).predict_batch(test_inputs);
          for (std::size_t i = 0; i < ml.size(); ++i) ml[i] += d[i];
        }
        SweepRow r;
        r.sequence = p.sequence.to_string();
        r.complexity = p.sequence.complexity();
        r.coarse = coarse;
        r.fine = fine;
        r.ml_cost = p.data.generation_cost;
        r.sl_samples = std::max<std::size_t>(4, matched_cost_samples(r.ml_cost, ladder));
        r.sl_cost = static_cast<double>(r.sl_samples) * ladder.cost(ladder.finest_level());
        auto st = single_cache.find(r.sl_samples);
        if (st == single_cache.end()) {
          st = single_cache.emplace(r.sl_samples, train_single_level(c, data, h, r.sl_samples).predict_batch(test_inputs))
                   .first;
        }
        r.ml_error = prediction_error(ml, data.test_truth, 2);
        r.sl_error = prediction_error(st->second, data.test_truth, 2);
        r.gain = gain(r.sl_error, r.ml_error);
        rows.push_back(r);
        log << "sweep " << rows.size() << '/' << total << ": " << r.sequence << " N0=" << coarse << " NL=" << fine
            << " cost=" << fmt(r.ml_cost) << " N_sl=" << r.sl_samples << " E_ml=" << fmt(r.ml_error)
            << " E_sl=" << fmt(r.sl_error) << " gain=" << fmt(r.gain) << std::endl;
      }
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "sequence,c_ml,N0,NL,ml_cost,sl_samples,sl_cost,ml_error,sl_error,gain\n";
  for (const auto& r : rows) {
    os << r.sequence << ',' << format_double(r.complexity) << ',' << r.coarse << ',' << r.fine << ','
       << format_double(r.ml_cost) << ',' << r.sl_samples << ',' << format_double(r.sl_cost) << ','
       << format_double(r.ml_error) << ',' << format_double(r.sl_error) << ',' << format_double(r.gain) << '\n';
  }
  return os.str();
}

std::vector<SweepRow> cmd_sweep(const ExperimentConfig& c, std::ostream& log) {
  const DataStore data = load_data(c);
  const Hyperparameters h = resolve_hyperparameters(c, data, log);
  auto rows = run_sweep(c, data, h, log);
  std::filesystem::create_directories(c.output_dir);
  atomic_write_file(c.output_dir / "sweep.csv", sweep_csv(rows));
  log << "sweep: wrote " << (c.output_dir / "sweep.csv").string() << '\n';
  return rows;
}

std::vector<UqRow> run_uq(const ExperimentConfig& c, const DataStore& data, const Hyperparameters& h,
                          std::ostream& log) {
  const ProjectileModel model = c.make_model();
  const auto& ladder = model.ladder();
  const std::size_t workers = workers_of(c);
  const ParameterSpace space(kProjectileDimension);
  const double fine_cost = ladder.cost(ladder.finest_level());

  const EmpiricalMeasure reference = push_forward_at_step(
      model, c.uq.reference_step,
      PointStream(space, RandomProvenance{derive_seed(c.seed, {kReferenceTag}), 0}), c.uq.reference_samples, workers);
  const MeasureStats ref = measure_stats(reference);
  log << "uq: reference mean " << fmt(ref.mean) << ", std " << fmt(ref.std) << " from " << reference.size()
      << " samples\n";
  std::filesystem::create_directories(c.output_dir / "uq");
  write_measure(c.output_dir / "uq" / "reference.csv", reference);

  const PointStream eval(space, RandomProvenance{derive_seed(c.seed, {kEvaluationTag}), 0});
  const auto row_for = [&](const std::string& method, const std::string& id, const EmpiricalMeasure& m) {
    const MeasureStats s = measure_stats(m);
    UqRow r;
    r.method = method;
    r.config_id = id;
    r.cost = m.cost;
    r.w1 = wasserstein1(m, reference);
    r.mean_error = std::abs(s.mean - ref.mean) / std::abs(ref.mean);
    r.std_error = std::abs(s.std - ref.std) / ref.std;
    return r;
  };

  std::vector<UqRow> rows;
  std::vector<std::size_t> mc_sizes;
  for (const auto& cfg : c.uq.configurations) {
    const MultilevelSurrogate ml = train_multilevel_from_pool(c, data, h, cfg.sequence, cfg.coarse, cfg.fine);
    const EmpiricalMeasure m = push_forward_surrogate([&](std::span<const double> in) { return ml.predict_batch(in); },
                                                      eval, c.uq.evaluation_samples, ml.generation_cost(),
                                                      MeasureSource::kMl2mc);
    const std::string id = ml.sequence().to_string() + "/" + std::to_string(cfg.coarse) + "/" + std::to_string(cfg.fine);
    rows.push_back(row_for("ml2mc", id, m));
    mc_sizes.push_back(std::max<std::size_t>(4, matched_cost_samples(ml.generation_cost(), ladder)));
    log << "uq: ml2mc " << id << " cost " << fmt(m.cost) << " W1 " << fmt(rows.back().w1) << std::endl;
  }
  for (std::size_t n : c.uq.sl2mc_samples) {
    const SurrogateEnsemble sl = train_single_level(c, data, h, n);
    EmpiricalMeasure m = push_forward_surrogate([&](std::span<const double> in) { return sl.predict_batch(in); }, eval,
                                                c.uq.evaluation_samples, static_cast<double>(n) * fine_cost,
                                                MeasureSource::kSl2mc);
    rows.push_back(row_for("sl2mc", std::to_string(n), m));
    mc_sizes.push_back(n);
    log << "uq: sl2mc N=" << n << " cost " << fmt(m.cost) << " W1 " << fmt(rows.back().w1) << std::endl;
  }
  std::sort(mc_sizes.begin(), mc_sizes.end());
  mc_sizes.erase(std::unique(mc_sizes.begin(), mc_sizes.end()), mc_sizes.end());
  for (std::size_t j : mc_sizes) {
    UqRow acc;
    acc.method = "mc";
    acc.config_id = std::to_string(j);
    acc.repetitions = c.uq.mc_repetitions;
    for (std::size_t r = 0; r < c.uq.mc_repetitions; ++r) {
      const PointStream pts(space, RandomProvenance{derive_seed(c.seed, {kMcTag, j, r}), 0});
      const UqRow one = row_for("mc", acc.config_id, push_forward_direct(model, ladder.finest_level(), pts, j, workers));
      acc.cost = one.cost;
      acc.w1 += one.w1;
      acc.mean_error += one.mean_error;
      acc.std_error += one.std_error;
    }
    const double reps = static_cast<double>(c.uq.mc_repetitions);
    acc.w1 /= reps;
    acc.mean_error /= reps;
    acc.std_error /= reps;
    rows.push_back(acc);
    log << "uq: mc J=" << j << " cost " << fmt(acc.cost) << " mean W1 " << fmt(acc.w1) << std::endl;
  }
  return rows;
}

std::string uq_csv(const std::vector<UqRow>& rows) {
  std::ostringstream os;
  os << "method,config,cost,w1,mean_error,std_error,repetitions\n";
  for (const auto& r : rows) {
    os << r.method << ',' << r.config_id << ',' << format_double(r.cost) << ',' << format_double(r.w1) << ','
       << format_double(r.mean_error) << ',' << format_double(r.std_error) << ',' << r.repetitions << '\n';
  }
  return os.str();
}

std::vector<UqRow> cmd_uq(const ExperimentConfig& c, std::ostream& log) {
  const DataStore data = load_data(c);
  const Hyperparameters h = resolve_hyperparameters(c, data, log);
  auto rows = run_uq(c, data, h, log);
  atomic_write_file(c.output_dir / "uq.csv", uq_csv(rows));
  log << "uq: wrote " << (c.output_dir / "uq.csv").string() << '\n';
  return rows;
}

ErrorStudyConfig bound_study_config(const ExperimentConfig& c) {
  const auto& b = c.bound_study;
  ErrorStudyConfig e;
  e.sizes = b.sizes;
  e.repetitions = b.full_fidelity ? b.full_repetitions : b.repetitions;
  e.validation_sets = b.full_fidelity ? b.full_validation_sets : b.validation_sets;
  e.pool_size = b.pool_size;
  e.hidden_layers = c.training.hidden_layers;
  e.width = c.training.width;
  e.training.loss_exponent = b.loss_exponent;
  e.training.reg_exponent = b.reg_exponent;
  e.training.reg_weight = b.reg_weight;
  e.training.learning_rate = b.learning_rate;
  e.training.epochs = b.epochs;
  e.training.validation_fraction = 0.0;
  e.level = b.level;
  e.seed = derive_seed(c.seed, {kBoundTag});
  e.workers = c.workers;
  return e;
}

std::vector<ErrorStudyRow> cmd_bound_study(const ExperimentConfig& c, std::ostream& log) {
  const ErrorStudyConfig e = bound_study_config(c);
  log << "bound-study: K=" << e.repetitions << ", validation sets=" << e.validation_sets << ", sizes";
  for (std::size_t n : e.sizes) log << ' ' << n;
  log << std::endl;
  const ProjectileModel model = c.make_model();
  auto rows = cumulative_error_study(model, e);
  std::filesystem::create_directories(c.output_dir);
  atomic_write_file(c.output_dir / "bound_study.csv", error_study_csv(rows));
  for (const auto& r : rows) {
    log << "  N=" << r.size << " E_G=" << fmt(r.generalization_error) << " bound=" << fmt(r.bound)
        << " compression=" << fmt(r.compression) << '\n';
  }
  log << "bound-study: wrote " << (c.output_dir / "bound_study.csv").string() << '\n';
  return rows;
}

std::vector<int> parse_sequence(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("malformed level sequence '" + text + "' (expected e.g. 0,3,6)");
    }
  }
  if (out.empty()) throw ConfigError("empty level sequence (expected e.g. 0,3,6)");
  return out;
}

}  // namespace mlml::cli
