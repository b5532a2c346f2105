// fock.hpp - truncated Fock-space numerics shared by every other module.
//
// Conventions: hbar = 1, number basis |0>, |1>, ..., |n_max>. Matrices are
// dense; the dimensions used here stay in the low hundreds.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <span>

namespace nljc {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Motional Fock cutoff. The basis holds |0> ... |n_max>.
class Truncation {
 public:
  explicit Truncation(int n_max = 64, double tail_tol = 1e-10);

  int n_max() const noexcept { return n_max_; }
  int dim() const noexcept { return n_max_ + 1; }
  double tail_tol() const noexcept { return tail_tol_; }

 private:
  int n_max_;
  double tail_tol_;
};

/// Pure-state coefficients <n|psi>.
struct FockAmplitudeVector {
  CVector amplitudes;

  int dim() const noexcept { return static_cast<int>(amplitudes.size()); }
  double norm() const { return amplitudes.norm(); }
};

/// Density matrix of the motional mode in the number basis.
///
/// Construction checks squareness and Hermiticity (max |rho - rho^dagger|
/// below 1e-10). Normalization is not enforced here because conditioned and
/// truncated states are legitimately subnormalized; see validate().
class MotionalDensityMatrix {
 public:
  MotionalDensityMatrix() = default;
  explicit MotionalDensityMatrix(CMatrix entries);

  static MotionalDensityMatrix from_pure(const FockAmplitudeVector& psi);

  int dim() const noexcept { return static_cast<int>(entries_.rows()); }
  const CMatrix& matrix() const noexcept { return entries_; }
  Complex operator()(int n, int n_prime) const { return entries_(n, n_prime); }

  double trace() const { return entries_.trace().real(); }
  double hermiticity_defect() const;
  double min_eigenvalue() const;

  /// Same state embedded in (or cropped to) another dimension. Cropping
  /// throws TruncationError when more than `tail_tol` of population is lost.
  MotionalDensityMatrix resized(int new_dim, double tail_tol = 1e-10) const;

  /// Smallest dimension that keeps all rows/columns with entries above
  /// `threshold`.
  int effective_dim(double threshold = 1e-18) const;

  /// Throws TruncationError/DomainError when the invariants of a normalized
  /// physical state are violated.
  void validate(double tail_tol) const;

 private:
  CMatrix entries_;
};

/// Normally ordered moments entering the nonclassicality criteria.
struct MomentSet {
  Complex mean_a{};    // <a>
  Complex mean_a2{};   // <a^2>
  double mean_n = 0;   // <n>
  Complex mean_na{};   // <n a> = <a^dagger a a>
  double mean_n2 = 0;  // <n^2>
};

/// Generalized Laguerre polynomial L_n^{(k)}(x) by the three-term recurrence
/// in n.
double laguerre_gen(int n, int k, double x);

/// ln((n+k)!/n!) = sum_{j=1..k} ln(n+j).
double log_factorial_ratio(int n, int k);

/// Poisson mass above `n_max` for the given mean, summed in log domain.
double poisson_tail(double mean, int n_max);

/// Coherent state |amplitude>. Throws TruncationError when the weight beyond
/// the cutoff exceeds trunc.tail_tol().
FockAmplitudeVector coherent_vector(Complex amplitude, const Truncation& trunc);

FockAmplitudeVector number_vector(int n, const Truncation& trunc);

/// Bose-Einstein state with mean occupation `mean_n`.
MotionalDensityMatrix thermal_rho(double mean_n, const Truncation& trunc);

/// Exact matrix elements <m|D(alpha)|n> for 0 <= m < rows, 0 <= n < cols.
/// No truncation of the generator is involved, so every returned entry is
/// the entry of the infinite-dimensional operator.
CMatrix displacement_elements(Complex alpha, int rows, int cols);

/// exp(alpha a^dagger - alpha^* a) with the generator truncated to the cutoff,
/// so the result is exactly unitary.
/// Requires |alpha|^2 <= n_max/4 (TruncationError otherwise).
CMatrix displacement_matrix(Complex alpha, const Truncation& trunc);

CMatrix annihilation_matrix(int dim);

MomentSet moments_from_rho(const MotionalDensityMatrix& rho);

/// (1/2) sum |eig(a - b)| for Hermitian a, b of equal size.
double trace_distance(const CMatrix& a, const CMatrix& b);

}  // namespace nljc
