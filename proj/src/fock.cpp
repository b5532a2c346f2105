#include "nljc/fock.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "nljc/errors.hpp"

namespace nljc {

Truncation::Truncation(int n_max, double tail_tol) : n_max_(n_max), tail_tol_(tail_tol) {
  if (n_max < 1) throw std::invalid_argument("Truncation: n_max must be >= 1");
  if (!(tail_tol > 0.0 && tail_tol < 1.0))
    throw std::invalid_argument("Truncation: tail_tol must lie in (0, 1)");
}

MotionalDensityMatrix::MotionalDensityMatrix(CMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0)
    throw std::invalid_argument("MotionalDensityMatrix: matrix must be square and non-empty");
  if (hermiticity_defect() > 1e-10)
    throw std::invalid_argument("MotionalDensityMatrix: matrix is not Hermitian");
}

MotionalDensityMatrix MotionalDensityMatrix::from_pure(const FockAmplitudeVector& psi) {
  return MotionalDensityMatrix(psi.amplitudes * psi.amplitudes.adjoint());
}

double MotionalDensityMatrix::hermiticity_defect() const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
}

double MotionalDensityMatrix::min_eigenvalue() const {
  const CMatrix h = 0.5 * (entries_ + entries_.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

MotionalDensityMatrix MotionalDensityMatrix::resized(int new_dim, double tail_tol) const {
  if (new_dim < 1) throw std::invalid_argument("resized: dimension must be positive");
  const int d = dim();
  if (new_dim < d) {
    double dropped = 0.0;
    for (int n = new_dim; n < d; ++n) dropped += std::abs(entries_(n, n));
    if (dropped > tail_tol)
      throw TruncationError("cropping to dimension " + std::to_string(new_dim) +
                            " discards population " + std::to_string(dropped));
    return MotionalDensityMatrix(CMatrix(entries_.topLeftCorner(new_dim, new_dim)));
  }
  CMatrix out = CMatrix::Zero(new_dim, new_dim);
  out.topLeftCorner(d, d) = entries_;
  return MotionalDensityMatrix(std::move(out));
}

int MotionalDensityMatrix::effective_dim(double threshold) const {
  for (int i = dim() - 1; i > 0; --i) {
    if (entries_.row(i).cwiseAbs().maxCoeff() > threshold ||
        entries_.col(i).cwiseAbs().maxCoeff() > threshold)
      return i + 1;
  }
  return 1;
}

void MotionalDensityMatrix::validate(double tail_tol) const {
  if (hermiticity_defect() > 1e-12)
    throw DomainError("density matrix is not Hermitian within 1e-12");
  if (std::abs(trace() - 1.0) > tail_tol)
    throw TruncationError("density matrix trace deviates from 1 by more than tail_tol");
  if (min_eigenvalue() < -1e-9) throw DomainError("density matrix is not positive semidefinite");
}

double laguerre_gen(int n, int k, double x) {
  if (n < 0 || k < 0) throw std::invalid_argument("laguerre_gen: n and k must be nonnegative");
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = 1.0 + k - x;
  for (int j = 1; j < n; ++j) {
    const double next = ((2.0 * j + 1.0 + k - x) * cur - (j + k) * prev) / (j + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

double log_factorial_ratio(int n, int k) {
  if (n < 0 || k < 0) throw std::invalid_argument("log_factorial_ratio: arguments must be >= 0");
  double s = 0.0;
  for (int j = 1; j <= k; ++j) s += std::log(static_cast<double>(n) + j);
  return s;
}

double poisson_tail(double mean, int n_max) {
  if (mean <= 0.0) return 0.0;
  const double log_mean = std::log(mean);
  double tail = 0.0;
  for (int n = n_max + 1;; ++n) {
    const double term = std::exp(n * log_mean - mean - std::lgamma(n + 1.0));
    tail += term;
    if (n > mean && (term < 1e-300 || term < 1e-18 * tail)) break;
  }
  return tail;
}

FockAmplitudeVector coherent_vector(Complex amplitude, const Truncation& trunc) {
  const double r2 = std::norm(amplitude);
  const double tail = poisson_tail(r2, trunc.n_max());
  if (tail > trunc.tail_tol())
    throw TruncationError("coherent state with |alpha|^2 = " + std::to_string(r2) +
                          " leaves weight " + std::to_string(tail) + " beyond n_max = " +
                          std::to_string(trunc.n_max()));
  FockAmplitudeVector psi{CVector::Zero(trunc.dim())};
  if (r2 == 0.0) {
    psi.amplitudes(0) = 1.0;
    return psi;
  }
  const double log_r = 0.5 * std::log(r2);
  const double phase = std::arg(amplitude);
  for (int n = 0; n < trunc.dim(); ++n) {
    const double log_mag = -0.5 * r2 + n * log_r - 0.5 * std::lgamma(n + 1.0);
    psi.amplitudes(n) = std::polar(std::exp(log_mag), n * phase);
  }
  return psi;
}

FockAmplitudeVector number_vector(int n, const Truncation& trunc) {
  if (n < 0 || n > trunc.n_max()) throw TruncationError("number state outside the cutoff");
  FockAmplitudeVector psi{CVector::Zero(trunc.dim())};
  psi.amplitudes(n) = 1.0;
  return psi;
}

MotionalDensityMatrix thermal_rho(double mean_n, const Truncation& trunc) {
  if (mean_n < 0.0) throw std::invalid_argument("thermal_rho: mean occupation must be >= 0");
  const double q = mean_n / (1.0 + mean_n);
  const double tail = std::pow(q, trunc.n_max() + 1);
  if (tail > trunc.tail_tol()) throw TruncationError("thermal state tail exceeds tail_tol");
  CMatrix rho = CMatrix::Zero(trunc.dim(), trunc.dim());
  double p = 1.0 / (1.0 + mean_n);
  for (int n = 0; n < trunc.dim(); ++n) {
    rho(n, n) = p;
    p *= q;
  }
  return MotionalDensityMatrix(std::move(rho));
}

CMatrix displacement_elements(Complex alpha, int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("displacement_elements: empty block");
  const double x = std::norm(alpha);
  if (x > 1400.0) throw DomainError("displacement amplitude too large for double precision");
  CMatrix d = CMatrix::Zero(rows, cols);
  if (x == 0.0) {
    for (int i = 0; i < std::min(rows, cols); ++i) d(i, i) = 1.0;
    return d;
  }
  const double half_log_x = 0.5 * std::log(x);
  const Complex unit = alpha / std::sqrt(x);
  const Complex lower_unit = unit;                // m >= n: alpha^{m-n}
  const Complex upper_unit = -std::conj(unit);    // m < n: (-alpha^*)^{n-m}
  constexpr double kRescale = 1e200;
  const double log_rescale = std::log(kRescale);
  std::vector<double> log_fact(std::max(rows, cols) + 1);
  for (std::size_t i = 0; i < log_fact.size(); ++i) log_fact[i] = std::lgamma(i + 1.0);

  // Along each diagonal the offset k = |m - n| is fixed and the lower index
  // runs through the Laguerre recurrence in its degree.
  auto sweep = [&](int k, bool below) {
    const int count = below ? std::min(rows - k, cols) : std::min(rows, cols - k);
    if (count <= 0) return;
    const Complex phase = std::pow(below ? lower_unit : upper_unit, k);
    double prev = 0.0;
    double cur = 1.0;
    double log_scale = 0.0;
    for (int lo = 0; lo < count; ++lo) {
      if (lo == 1) {
        prev = 1.0;
        cur = 1.0 + k - x;
      } else if (lo > 1) {
        const int j = lo - 1;
        const double next = ((2.0 * j + 1.0 + k - x) * cur - (j + k) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
      }
      if (std::abs(cur) > kRescale) {
        cur /= kRescale;
        prev /= kRescale;
        log_scale += log_rescale;
      }
      if (cur == 0.0) continue;
      const double log_mag = 0.5 * (log_fact[lo] - log_fact[lo + k]) +
                             k * half_log_x - 0.5 * x + log_scale + std::log(std::abs(cur));
      const double value = std::copysign(std::exp(log_mag), cur);
      if (below)
        d(lo + k, lo) = value * phase;
      else
        d(lo, lo + k) = value * phase;
    }
  };
  for (int k = 0; k < rows; ++k) sweep(k, true);
  for (int k = 1; k < cols; ++k) sweep(k, false);
  return d;
}

CMatrix displacement_matrix(Complex alpha, const Truncation& trunc) {
  if (std::norm(alpha) > trunc.n_max() / 4.0)
    throw TruncationError("displacement requires |alpha|^2 <= n_max/4");
  // Exponential of the truncated generator: exactly unitary, with the
  // truncation error pushed into the top rows of the basis.
  const CMatrix a = annihilation_matrix(trunc.dim());
  const CMatrix h = Complex(0.0, 1.0) * (alpha * a.adjoint() - std::conj(alpha) * a);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const CVector phases = (Complex(0.0, -1.0) * es.eigenvalues().cast<Complex>()).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix annihilation_matrix(int dim) {
  CMatrix a = CMatrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

MomentSet moments_from_rho(const MotionalDensityMatrix& rho) {
  const CMatrix& r = rho.matrix();
  const int d = rho.dim();
  MomentSet m;
  for (int n = 0; n < d; ++n) {
    const double nn = n;
    m.mean_n += nn * r(n, n).real();
    m.mean_n2 += nn * nn * r(n, n).real();
    if (n + 1 < d) {
      const double s = std::sqrt(nn + 1.0);
      m.mean_a += s * r(n + 1, n);
      m.mean_na += nn * s * r(n + 1, n);
    }
    if (n + 2 < d) m.mean_a2 += std::sqrt((nn + 1.0) * (nn + 2.0)) * r(n + 2, n);
  }
  return m;
}

double trace_distance(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("trace_distance: shape mismatch");
  const CMatrix diff = a - b;
  const CMatrix h = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

}  // namespace nljc
