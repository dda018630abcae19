#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "mlml/level_model.hpp"

namespace mlml {

inline constexpr double kStandardGravity = 9.81;
inline constexpr std::size_t kMaxEulerSteps = 10'000'000;
inline constexpr std::size_t kProjectileDimension = 7;

struct ProjectileParameters {
  double air_density = 1.225;     // kg/m^3
  double radius = 0.23;           // m
  double drag_coefficient = 0.1;  // -
  double mass = 0.145;            // kg
  double height = 1.0;            // m
  double launch_angle = std::numbers::pi / 6.0;  // rad
  double speed = 25.0;            // m/s
  double gravity = kStandardGravity;

  /// Throws std::invalid_argument when a parameter is outside its physical range.
  void validate() const;

  /// (rho C_d pi r^2) / (2 m)
  double drag_factor() const;
};

/// Each parameter is nominal * (1 + epsilon * (2 y_k - 1)), in the order
/// density, radius, drag coefficient, mass, height, angle, speed.
struct PerturbationSpec {
  ProjectileParameters nominal{};
  double epsilon = 0.1;
};

class DimensionMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

ProjectileParameters perturb(std::span<const double> y, const PerturbationSpec& spec = {});

enum class DragModel {
  kHorizontal,     // magnitude F_D applied along -e_1 only
  kAlongVelocity,  // physical drag, F_D along -v / |v|
};

struct ProjectileState {
  double t = 0.0;
  double x = 0.0;
  double z = 0.0;
  double vx = 0.0;
  double vz = 0.0;
};

using Trajectory = std::vector<ProjectileState>;

class NoLandingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Explicit forward Euler from (0, h) with speed v0 at angle alpha until the
/// height first becomes <= 0. Position and velocity advance from the same
/// old state.
Trajectory simulate(const ProjectileParameters& params, double dt,
                    DragModel drag = DragModel::kHorizontal);

/// Horizontal position at the landing time, found by linear interpolation of
/// the height between the last two states.
double observable(std::span<const ProjectileState> trajectory);

/// observable(simulate(...)) without storing the trajectory; bit-identical.
double landing_range(const ProjectileParameters& params, double dt,
                     DragModel drag = DragModel::kHorizontal);

class ProjectileModel final : public LevelModel {
 public:
  explicit ProjectileModel(ResolutionLadder ladder = ResolutionLadder(0.08, 6, 1.0),
                           PerturbationSpec perturbation = {},
                           DragModel drag = DragModel::kHorizontal);

  std::size_t dimension() const override { return kProjectileDimension; }
  const ResolutionLadder& ladder() const override { return ladder_; }
  double evaluate_at_step(std::span<const double> y, double step) const override;

  const PerturbationSpec& perturbation() const noexcept { return perturbation_; }
  DragModel drag() const noexcept { return drag_; }

 private:
  ResolutionLadder ladder_;
  PerturbationSpec perturbation_;
  DragModel drag_;
};

}  // namespace mlml
