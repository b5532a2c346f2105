// criteria.hpp - single-time nonclassicality criteria of the motional mode.
//
// All three criteria are reported unnormalized; a negative value certifies
// nonclassicality. The quadrature is x(phi) = e^{i phi} a + e^{-i phi} a^dagger.

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "nljc/dynamics.hpp"
#include "nljc/fock.hpp"

namespace nljc {

struct PhaseOptimum {
  double value = 0.0;
  double phi = 0.0;  // in [0, 2 pi)
};

struct CriteriaResult {
  double t = 0.0;
  double c_sq = 0.0;
  double phi_sq = 0.0;
  std::optional<double> c_sp;  // empty when <n> vanishes
  double c_ac = 0.0;
  double phi_ac = 0.0;
  MomentSet moments;
};

/// <:[Delta x(phi)]^2:>
double squeezing_functional(const MomentSet& m, double phi);

/// <:Delta x(phi) Delta n:>
double anomalous_cross(const MomentSet& m, double phi);

/// <:[Delta n]^2:> = <n^2> - <n> - <n>^2
double number_variance_normal(const MomentSet& m);

/// <:[Delta n]^2:> <:[Delta x(phi)]^2:> - <:Delta x(phi) Delta n:>^2
double anomalous_functional(const MomentSet& m, double phi);

/// Global minimum of a smooth pi- or 2pi-periodic function on [0, 2 pi):
/// 720-sample grid, then golden-section refinement around the best sample.
/// Ties on the grid go to the smallest phi.
PhaseOptimum minimize_phase(const std::function<double(double)>& f);

PhaseOptimum c_sq(const MomentSet& m);
PhaseOptimum c_ac(const MomentSet& m);

/// (<n^2> - <n>^2)/<n> - 1. Throws UndefinedForVacuum when <n> < 1e-14.
double mandel_q(const MomentSet& m);

CriteriaResult evaluate_criteria(const MomentSet& m, double t = 0.0);

/// Criteria along a time grid (nondecreasing, t >= 0), in grid order.
std::vector<CriteriaResult> criteria_scan(const ModelParams& params, std::span<const double> t_grid,
                                          const Truncation& trunc);

}  // namespace nljc
