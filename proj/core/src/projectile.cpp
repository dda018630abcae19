#include "mlml/projectile.hpp"

#include <cmath>
#include <string>

#include "mlml/param_space.hpp"

namespace mlml {

ResolutionLadder::ResolutionLadder(double coarsest_step, int finest_level, double cost_exponent)
    : coarsest_step_(coarsest_step), finest_level_(finest_level), cost_exponent_(cost_exponent) {
  if (!(coarsest_step > 0.0)) throw std::invalid_argument("ResolutionLadder: coarsest step must be > 0");
  if (finest_level < 0) throw std::invalid_argument("ResolutionLadder: finest level must be >= 0");
  if (!(cost_exponent > 0.0)) throw std::invalid_argument("ResolutionLadder: cost exponent must be > 0");
}

double ResolutionLadder::step(int level) const {
  if (level < 0 || level > finest_level_) {
    throw std::out_of_range("ResolutionLadder: level " + std::to_string(level) + " outside [0, " +
                            std::to_string(finest_level_) + "]");
  }
  return std::ldexp(coarsest_step_, -level);
}

double ResolutionLadder::cost(int level) const { return cost_at_step(step(level)); }

double ResolutionLadder::cost_at_step(double step) const { return std::pow(step, -cost_exponent_); }

double LevelModel::evaluate(std::span<const double> y, int level) const {
  return evaluate_at_step(y, ladder().step(level));
}

ObservableSample evaluate_level(const LevelModel& model, std::span<const double> y, int level) {
  ObservableSample s;
  s.y.assign(y.begin(), y.end());
  s.level = level;
  s.value = model.evaluate(y, level);
  return s;
}

double evaluate_detail(const LevelModel& model, std::span<const double> y, std::size_t k,
                       std::span<const int> level_indices) {
  if (k < 1 || k >= level_indices.size()) {
    throw std::out_of_range("evaluate_detail: k must be in [1, n]");
  }
  return model.evaluate(y, level_indices[k]) - model.evaluate(y, level_indices[k - 1]);
}

double cost(int level, const ResolutionLadder& ladder) { return ladder.cost(level); }

double estimate_convergence_order(const LevelModel& model, std::span<const double> y,
                                  std::span<const int> levels, int refinement) {
  if (levels.size() < 2) throw std::invalid_argument("estimate_convergence_order: need >= 2 levels");
  const auto& ladder = model.ladder();
  const double reference = model.evaluate_at_step(y, ladder.step(ladder.finest_level()) / refinement);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    const double coarse = std::abs(model.evaluate(y, levels[i]) - reference);
    const double fine = std::abs(model.evaluate(y, levels[i + 1]) - reference);
    sum += std::log2(coarse / fine);
  }
  return sum / static_cast<double>(levels.size() - 1);
}

void ProjectileParameters::validate() const {
  // Drag-free runs (density or drag coefficient zero) are allowed.
  if (!(air_density >= 0.0)) throw std::invalid_argument("projectile: air density must be >= 0");
  if (!(drag_coefficient >= 0.0)) throw std::invalid_argument("projectile: drag coefficient must be >= 0");
  if (!(radius > 0.0)) throw std::invalid_argument("projectile: radius must be > 0");
  if (!(mass > 0.0)) throw std::invalid_argument("projectile: mass must be > 0");
  if (!(speed > 0.0)) throw std::invalid_argument("projectile: speed must be > 0");
  if (!(height >= 0.0)) throw std::invalid_argument("projectile: height must be >= 0");
  if (!(launch_angle > 0.0 && launch_angle < std::numbers::pi / 2.0)) {
    throw std::invalid_argument("projectile: launch angle must lie in (0, pi/2)");
  }
  if (!(gravity > 0.0)) throw std::invalid_argument("projectile: gravity must be > 0");
}

double ProjectileParameters::drag_factor() const {
  return air_density * drag_coefficient * std::numbers::pi * radius * radius / (2.0 * mass);
}

ProjectileParameters perturb(std::span<const double> y, const PerturbationSpec& spec) {
  if (y.size() != kProjectileDimension) {
    throw DimensionMismatchError("perturb: expected a 7-dimensional parameter vector, got " +
                                 std::to_string(y.size()));
  }
  const auto scale = [&](std::size_t k) { return 1.0 + spec.epsilon * (2.0 * y[k] - 1.0); };
  const ProjectileParameters& n = spec.nominal;
  ProjectileParameters p = n;
  p.air_density = n.air_density * scale(0);
  p.radius = n.radius * scale(1);
  p.drag_coefficient = n.drag_coefficient * scale(2);
  p.mass = n.mass * scale(3);
  p.height = n.height * scale(4);
  p.launch_angle = n.launch_angle * scale(5);
  p.speed = n.speed * scale(6);
  return p;
}

namespace {

ProjectileState initial_state(const ProjectileParameters& p) {
  return {0.0, 0.0, p.height, p.speed * std::cos(p.launch_angle), p.speed * std::sin(p.launch_angle)};
}

inline ProjectileState euler_step(const ProjectileState& s, double dt, double k, double g, DragModel drag) {
  const double speed_sq = s.vx * s.vx + s.vz * s.vz;
  double ax, az;
  if (drag == DragModel::kHorizontal) {
    ax = -k * speed_sq;
    az = -g;
  } else {
    const double speed = std::sqrt(speed_sq);
    ax = -k * speed * s.vx;
    az = -k * speed * s.vz - g;
  }
  return {s.t + dt, s.x + dt * s.vx, s.z + dt * s.vz, s.vx + dt * ax, s.vz + dt * az};
}

double interpolate_landing(const ProjectileState& above, const ProjectileState& below) {
  if (below.z == 0.0) return below.x;
  const double frac = above.z / (above.z - below.z);
  return above.x + frac * (below.x - above.x);
}

void check_step(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate: time step must be > 0");
}

[[noreturn]] void no_landing() {
  throw NoLandingError("projectile did not land within " + std::to_string(kMaxEulerSteps) + " steps");
}

}  // namespace

Trajectory simulate(const ProjectileParameters& params, double dt, DragModel drag) {
  params.validate();
  check_step(dt);
  const double k = params.drag_factor();
  Trajectory traj;
  traj.push_back(initial_state(params));
  for (std::size_t n = 0; n < kMaxEulerSteps; ++n) {
    traj.push_back(euler_step(traj.back(), dt, k, params.gravity, drag));
    if (traj.back().z <= 0.0) return traj;
  }
  no_landing();
}

double observable(std::span<const ProjectileState> trajectory) {
  if (trajectory.size() < 2 || trajectory.back().z > 0.0) {
    throw NoLandingError("observable: trajectory does not reach the ground");
  }
  return interpolate_landing(trajectory[trajectory.size() - 2], trajectory.back());
}

double landing_range(const ProjectileParameters& params, double dt, DragModel drag) {
  params.validate();
  check_step(dt);
  const double k = params.drag_factor();
  ProjectileState prev = initial_state(params);
  for (std::size_t n = 0; n < kMaxEulerSteps; ++n) {
    const ProjectileState next = euler_step(prev, dt, k, params.gravity, drag);
    if (next.z <= 0.0) return interpolate_landing(prev, next);
    prev = next;
  }
  no_landing();
}

ProjectileModel::ProjectileModel(ResolutionLadder ladder, PerturbationSpec perturbation, DragModel drag)
    : ladder_(ladder), perturbation_(perturbation), drag_(drag) {}

double ProjectileModel::evaluate_at_step(std::span<const double> y, double step) const {
  return landing_range(perturb(y, perturbation_), step, drag_);
}

}  // namespace mlml
