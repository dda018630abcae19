#pragma once

// Independent reference implementations used to check the library.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mlml::oracle {

/// Optimal transport cost between two uniformly weighted atom lists, solved
/// as an assignment problem (each atom of `a` split into |b| unit masses and
/// vice versa) with the Hungarian algorithm.
double transport_w1(std::span<const double> a, std::span<const double> b);

/// Central finite difference of f at x along every coordinate.
std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double step);

/// Local star discrepancy over anchored boxes [0, t) with corners on a
/// uniform grid of `grid` cells per axis (d = 2 only).
double star_discrepancy_2d(std::span<const double> points, std::size_t grid);

/// Drag-free range from height h: v0 cos(a) (v0 sin(a) + sqrt(v0^2 sin^2(a) + 2 g h)) / g.
double ballistic_range(double v0, double angle, double height, double gravity);

struct EulerInputs {
  double rho, radius, cd, mass, height, angle, speed, gravity;
};

/// Straightforward forward Euler with horizontal drag, landing by linear
/// interpolation; written without sharing code with the library.
double euler_range(const EulerInputs& in, double dt);

/// N_k for allocation fixtures computed in long double.
std::vector<std::size_t> allocation_reference(std::span<const int> levels, std::size_t n0, std::size_t nl, int finest);

}  // namespace mlml::oracle
