#include "mlml/uq.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mlml/csv.hpp"
#include "mlml/parallel.hpp"

namespace mlml {

std::string to_string(MeasureSource source) {
  switch (source) {
    case MeasureSource::kMc: return "mc";
    case MeasureSource::kQmc: return "qmc";
    case MeasureSource::kSl2mc: return "sl2mc";
    case MeasureSource::kMl2mc: return "ml2mc";
    case MeasureSource::kReference: return "reference";
    case MeasureSource::kMixed: return "mixed";
  }
  return "unknown";
}

MeasureSource measure_source_from_string(const std::string& s) {
  for (auto m : {MeasureSource::kMc, MeasureSource::kQmc, MeasureSource::kSl2mc, MeasureSource::kMl2mc,
                 MeasureSource::kReference, MeasureSource::kMixed}) {
    if (to_string(m) == s) return m;
  }
  throw DataError("unknown measure source '" + s + "'");
}

namespace {

std::uint64_t stream_seed(const PointStream& points) {
  if (const auto* r = std::get_if<RandomProvenance>(&points.origin())) return r->seed;
  return 0;
}

EmpiricalMeasure direct(const LevelModel& model, double step, const PointStream& points, std::size_t count,
                        std::size_t workers) {
  if (count == 0) throw std::invalid_argument("push-forward: need at least one sample");
  const SampleSet pts = points.block(0, count);
  EmpiricalMeasure m;
  m.atoms.resize(count);
  parallel_for(count, workers ? workers : default_worker_count(),
               [&](std::size_t i) { m.atoms[i] = model.evaluate_at_step(pts.point(i), step); });
  m.source = std::holds_alternative<SobolProvenance>(points.origin()) ? MeasureSource::kQmc : MeasureSource::kMc;
  m.cost = static_cast<double>(count) * model.ladder().cost_at_step(step);
  m.seed = stream_seed(points);
  return m;
}

}  // namespace

EmpiricalMeasure push_forward_direct(const LevelModel& model, int level, const PointStream& points, std::size_t count,
                                     std::size_t workers) {
  return direct(model, model.ladder().step(level), points, count, workers);
}

EmpiricalMeasure push_forward_at_step(const LevelModel& model, double step, const PointStream& points,
                                      std::size_t count, std::size_t workers) {
  if (!(step > 0.0)) throw std::invalid_argument("push-forward: step must be > 0");
  EmpiricalMeasure m = direct(model, step, points, count, workers);
  m.source = MeasureSource::kReference;
  return m;
}

EmpiricalMeasure push_forward_surrogate(const BatchPredictor& surrogate, const PointStream& points, std::size_t count,
                                        double training_cost, MeasureSource source) {
  if (count == 0) throw std::invalid_argument("push-forward: need at least one sample");
  const SampleSet pts = points.block(0, count);
  EmpiricalMeasure m;
  m.atoms = surrogate(pts.values());
  if (m.atoms.size() != count) throw std::runtime_error("push-forward: surrogate returned the wrong count");
  m.source = source;
  m.cost = training_cost;
  m.seed = stream_seed(points);
  return m;
}

double measure_mean(const EmpiricalMeasure& measure) {
  if (measure.atoms.empty()) throw TooFewAtomsError("measure has no atoms");
  double s = 0.0;
  for (double a : measure.atoms) s += a;
  return s / static_cast<double>(measure.atoms.size());
}

MeasureStats measure_stats(const EmpiricalMeasure& measure) {
  if (measure.atoms.size() < 2) throw TooFewAtomsError("standard deviation needs at least two atoms");
  const double mean = measure_mean(measure);
  double ss = 0.0;
  for (double a : measure.atoms) ss += (a - mean) * (a - mean);
  return {mean, std::sqrt(ss / static_cast<double>(measure.atoms.size() - 1))};
}

EmpiricalMeasure mix(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  EmpiricalMeasure m;
  m.atoms = a.atoms;
  m.atoms.insert(m.atoms.end(), b.atoms.begin(), b.atoms.end());
  m.source = a.source == b.source ? a.source : MeasureSource::kMixed;
  m.cost = a.cost + b.cost;
  m.seed = a.seed;
  return m;
}

void write_measure(const std::filesystem::path& path, const EmpiricalMeasure& measure) {
  std::ostringstream os;
  os << "value\n";
  for (double a : measure.atoms) os << format_double(a) << '\n';
  atomic_write_file(path, os.str());
  nlohmann::json j{{"format", "mlml.measure"},
                   {"version", 1},
                   {"source", to_string(measure.source)},
                   {"count", measure.atoms.size()},
                   {"seed", measure.seed},
                   {"cost", measure.cost}};
  atomic_write_file(path.string() + ".json", j.dump(1));
}

EmpiricalMeasure read_measure(const std::filesystem::path& path) {
  EmpiricalMeasure m;
  const CsvTable t = read_csv(path);
  const std::size_t col = t.column("value");
  for (std::size_t r = 0; r < t.rows.size(); ++r) m.atoms.push_back(t.number(r, col));
  try {
    const auto j = nlohmann::json::parse(read_file(path.string() + ".json"));
    m.source = measure_source_from_string(j.at("source").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.cost = j.at("cost").get<double>();
    if (j.at("count").get<std::size_t>() != m.atoms.size()) throw DataError("atom count does not match sidecar");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ".json: " + e.what());
  }
  return m;
}

}  // namespace mlml
