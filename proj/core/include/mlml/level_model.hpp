#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mlml {

/// Nested resolutions Delta_l = 2^(L - l) * Delta_L, l = 0..L, with a cost law
/// C(Delta) = Delta^(-cost_exponent).
class ResolutionLadder {
 public:
  ResolutionLadder(double coarsest_step, int finest_level, double cost_exponent = 1.0);

  int finest_level() const noexcept { return finest_level_; }
  double coarsest_step() const noexcept { return coarsest_step_; }
  double cost_exponent() const noexcept { return cost_exponent_; }

  double step(int level) const;
  double cost(int level) const;
  double cost_at_step(double step) const;

 private:
  double coarsest_step_;
  int finest_level_;
  double cost_exponent_;
};

/// A parameters-to-observable map that can be evaluated on any rung of a
/// resolution ladder (or at an arbitrary resolution for reference runs).
class LevelModel {
 public:
  virtual ~LevelModel() = default;

  virtual std::size_t dimension() const = 0;
  virtual const ResolutionLadder& ladder() const = 0;
  virtual double evaluate_at_step(std::span<const double> y, double step) const = 0;

  double evaluate(std::span<const double> y, int level) const;
};

struct ObservableSample {
  std::vector<double> y;
  int level = 0;
  double value = 0.0;
};

ObservableSample evaluate_level(const LevelModel& model, std::span<const double> y, int level);

/// D_k(y) = L^{Delta_{l_k}}(y) - L^{Delta_{l_{k-1}}}(y) for 1 <= k <= n.
double evaluate_detail(const LevelModel& model, std::span<const double> y, std::size_t k,
                       std::span<const int> level_indices);

double cost(int level, const ResolutionLadder& ladder);

/// Empirical convergence order of the map at `y`: errors of levels
/// `levels` against a run at Delta_L / refinement, then the mean of
/// log2(e_l / e_{l+1}) over consecutive levels.
double estimate_convergence_order(const LevelModel& model, std::span<const double> y,
                                  std::span<const int> levels, int refinement = 8);

}  // namespace mlml
