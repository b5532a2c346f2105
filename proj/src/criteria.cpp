#include "nljc/criteria.hpp"

#include <cmath>
#include <stdexcept>

#include "nljc/errors.hpp"

namespace nljc {

double squeezing_functional(const MomentSet& m, double phi) {
  const Complex e1 = std::polar(1.0, phi);
  const Complex e2 = std::polar(1.0, 2.0 * phi);
  const double mean_x_half = (e1 * m.mean_a).real();
  return 2.0 * (e2 * m.mean_a2).real() - 4.0 * mean_x_half * mean_x_half + 2.0 * m.mean_n;
}

double anomalous_cross(const MomentSet& m, double phi) {
  const Complex e1 = std::polar(1.0, phi);
  return 2.0 * (e1 * m.mean_na).real() - 2.0 * (e1 * m.mean_a).real() * m.mean_n;
}

double number_variance_normal(const MomentSet& m) {
  return m.mean_n2 - m.mean_n - m.mean_n * m.mean_n;
}

double anomalous_functional(const MomentSet& m, double phi) {
  const double cross = anomalous_cross(m, phi);
  return number_variance_normal(m) * squeezing_functional(m, phi) - cross * cross;
}

PhaseOptimum minimize_phase(const std::function<double(double)>& f) {
  constexpr int kSamples = 720;
  const double step = 2.0 * kPi / kSamples;
  std::vector<double> values(kSamples);
  double lowest = f(0.0);
  values[0] = lowest;
  for (int i = 1; i < kSamples; ++i) {
    values[i] = f(i * step);
    lowest = std::min(lowest, values[i]);
  }
  // First sample within rounding of the minimum; this makes the pi-periodic
  // twin minima and flat functionals resolve to the smallest phi.
  const double tie = 1e-13 * std::max(1.0, std::abs(lowest));
  int best = 0;
  while (values[best] > lowest + tie) ++best;

  // Golden-section search on the bracket around the best sample.
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = (best - 1) * step;
  double hi = (best + 1) * step;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > 1e-8) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  PhaseOptimum out{values[best], best * step};
  const double x_ref = 0.5 * (lo + hi);
  const double f_ref = f(x_ref);
  if (f_ref < out.value - tie) {
    out.value = f_ref;
    out.phi = std::fmod(x_ref + 2.0 * kPi, 2.0 * kPi);
  }
  return out;
}

PhaseOptimum c_sq(const MomentSet& m) {
  return minimize_phase([&m](double phi) { return squeezing_functional(m, phi); });
}

PhaseOptimum c_ac(const MomentSet& m) {
  return minimize_phase([&m](double phi) { return anomalous_functional(m, phi); });
}

double mandel_q(const MomentSet& m) {
  if (m.mean_n < 1e-14) throw UndefinedForVacuum("Mandel Q is undefined for <n> = 0");
  return (m.mean_n2 - m.mean_n * m.mean_n) / m.mean_n - 1.0;
}

CriteriaResult evaluate_criteria(const MomentSet& m, double t) {
  CriteriaResult r;
  r.t = t;
  r.moments = m;
  const PhaseOptimum sq = c_sq(m);
  r.c_sq = sq.value;
  r.phi_sq = sq.phi;
  if (m.mean_n >= 1e-14) r.c_sp = mandel_q(m);
  const PhaseOptimum ac = c_ac(m);
  r.c_ac = ac.value;
  r.phi_ac = ac.phi;
  return r;
}

std::vector<CriteriaResult> criteria_scan(const ModelParams& params, std::span<const double> t_grid,
                                          const Truncation& trunc) {
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0.0) throw std::invalid_argument("criteria_scan: times must be >= 0");
    if (i > 0 && t_grid[i] < t_grid[i - 1])
      throw std::invalid_argument("criteria_scan: time grid must be nondecreasing");
  }
  const MotionalPropagator propagator(params, trunc);
  std::vector<CriteriaResult> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) out.push_back(evaluate_criteria(moments_from_rho(propagator.at(t)), t));
  return out;
}

}  // namespace nljc
