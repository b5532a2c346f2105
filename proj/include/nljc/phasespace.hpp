// phasespace.hpp - normally ordered characteristic functions and regularized
// Glauber-Sudarshan P functions of the motional mode.
//
// The regularizing filter is the autocorrelation of the indicator of a disc of
// radius w/2, normalized to 1 at the origin and supported on |beta| <= w. Its
// Fourier transform is a squared modulus, hence nonnegative. Two independent
// routes evaluate P_Omega:
//
//   series   - expansion in normally ordered displaced-number moments
//              <:n(alpha)^m:>, read off the displaced diagonal rho^{nn}(alpha);
//   integral - 2-D quadrature of Omega_w(beta) Phi(beta) exp(alpha beta^* -
//              alpha^* beta) / pi^2 over the filter support.

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nljc/fock.hpp"

namespace nljc {

enum class FilterKind {
  disc_autocorrelation,
  none,  // unfiltered; representable only so that it can be refused
};

struct FilterSpec {
  double width = 1.5;
  FilterKind kind = FilterKind::disc_autocorrelation;

  /// Throws DomainError for an unfiltered kind, std::invalid_argument for
  /// width <= 0.
  void validate() const;
};

/// Square grid of n_side x n_side points (n_side odd) centred on `center`.
/// Sample (ix, iy) sits at center + (-h + ix s) + i (-h + iy s), with h the
/// half extent and s the spacing; maps store it at index iy * n_side + ix.
class PhaseGrid {
 public:
  PhaseGrid(Complex center, double half_extent, int n_side);

  Complex center() const noexcept { return center_; }
  double half_extent() const noexcept { return half_extent_; }
  int n_side() const noexcept { return n_side_; }
  double spacing() const noexcept { return spacing_; }
  int size() const noexcept { return n_side_ * n_side_; }

  double x(int ix) const { return center_.real() - half_extent_ + ix * spacing_; }
  double y(int iy) const { return center_.imag() - half_extent_ + iy * spacing_; }
  Complex point(int ix, int iy) const { return {x(ix), y(iy)}; }
  Complex point(int index) const { return point(index % n_side_, index / n_side_); }

 private:
  Complex center_;
  double half_extent_;
  int n_side_;
  double spacing_;
};

enum class PMethod { series, integral };

struct QuasiProbMap {
  PhaseGrid grid;
  std::vector<double> values;  // row-major, see PhaseGrid
  PMethod method = PMethod::series;
  double width = 0.0;
  double max_imag_residue = 0.0;
  bool converged = true;  // series only: every point met the term tolerance

  double min_value() const;
  int argmin() const;
  /// Riemann sum of the values times spacing^2.
  double integral() const;
};

/// Tr(rho D(beta)) e^{|beta|^2/2}; DomainError for |beta| > 6.
Complex normal_cf(const MotionalDensityMatrix& rho, Complex beta);

/// Disc-autocorrelation filter: (2/pi)(arccos u - u sqrt(1-u^2)), u = |beta|/w.
double disc_filter(Complex beta, double w);

/// Starting row count for a state supported below `dim` displaced by alpha:
/// (sqrt(dim) + |alpha|)^2 plus a margin of 12 standard deviations.
int displaced_rows_guess(int dim, Complex alpha);

/// Number of Fock rows that hold D^dagger(alpha) rho D(alpha) up to a trace
/// deficit below `tol`.
int displaced_rows(const MotionalDensityMatrix& rho, Complex alpha, double tol = 1e-13);

/// Diagonal <n|D^dagger(alpha) block D(alpha)|n>, n < rows. `block` may be
/// any (not necessarily Hermitian) operator on the motional space.
CVector displaced_diagonal(const CMatrix& block, Complex alpha, int rows);

/// rho^{nn}(alpha) with the row count chosen by displaced_rows().
RVector displaced_diagonal(const MotionalDensityMatrix& rho, Complex alpha);

struct SeriesResult {
  Complex value{};
  int terms = 0;
  double last_term = 0.0;  // modulus of the last term added
  bool exhausted = false;  // every remaining term is exactly zero
  double roundoff = 0.0;   // eps times the largest partial sum of |term pieces|

  /// Terms have died out and cancellation has not eaten the result.
  bool converged() const noexcept { return (exhausted || last_term <= 1e-10) && roundoff <= 1e-6; }
};

/// Filtered P value from a displaced diagonal d_n = <n|D^dagger X D|n>:
/// (R^2/pi) sum_m (-R^2)^m C(2m+2, m) / [(m+1)!]^2 sum_{n>=m} d_n n!/(n-m)!,
/// R = w/2. Summed until a term drops below 1e-14 on the decreasing side.
SeriesResult witness_series(std::span<const Complex> displaced_diag, double w);

double p_omega_series(const MotionalDensityMatrix& rho, Complex alpha, double w);
SeriesResult p_omega_series_detailed(const MotionalDensityMatrix& rho, Complex alpha, double w);

QuasiProbMap p_omega_series_map(const MotionalDensityMatrix& rho, const PhaseGrid& grid,
                                const FilterSpec& filter);

/// Omega_w(beta) Phi(beta) sampled on the square beta grid of spacing w/64
/// covering the filter support.
struct FilteredCf {
  double width = 0.0;
  double spacing = 0.0;
  int half_points = 0;  // samples at j * spacing, j = -half_points..half_points
  CMatrix samples;      // (iy, ix)

  double beta_x(int ix) const { return (ix - half_points) * spacing; }
  double beta_y(int iy) const { return (iy - half_points) * spacing; }
};

FilteredCf sample_filtered_cf(const std::function<Complex(Complex)>& cf, const FilterSpec& filter);

/// (1/pi^2) sum over the beta grid of samples * exp(alpha beta^* - alpha^* beta) * spacing^2,
/// evaluated for every grid point (row-major).
std::vector<Complex> fourier_to_phase_grid(const FilteredCf& filtered, const PhaseGrid& grid);

QuasiProbMap p_omega_integral(const MotionalDensityMatrix& rho, const PhaseGrid& grid,
                              const FilterSpec& filter);

}  // namespace nljc
