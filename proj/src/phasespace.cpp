#include "nljc/phasespace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nljc/errors.hpp"

namespace nljc {

void FilterSpec::validate() const {
  if (kind != FilterKind::disc_autocorrelation)
    throw DomainError("unfiltered P function is singular; use the disc-autocorrelation filter");
  if (!(width > 0.0) || !std::isfinite(width))
    throw std::invalid_argument("filter width must be positive");
}

PhaseGrid::PhaseGrid(Complex center, double half_extent, int n_side)
    : center_(center), half_extent_(half_extent), n_side_(n_side) {
  if (n_side < 1 || n_side % 2 == 0) throw std::invalid_argument("PhaseGrid: n_side must be odd");
  if (!(half_extent >= 0.0)) throw std::invalid_argument("PhaseGrid: half extent must be >= 0");
  if (n_side == 1 && half_extent != 0.0)
    throw std::invalid_argument("PhaseGrid: a single sample needs zero extent");
  spacing_ = n_side == 1 ? 0.0 : 2.0 * half_extent / (n_side - 1);
}

double QuasiProbMap::min_value() const { return values[argmin()]; }

int QuasiProbMap::argmin() const {
  if (values.empty()) throw std::logic_error("empty map");
  return static_cast<int>(std::min_element(values.begin(), values.end()) - values.begin());
}

double QuasiProbMap::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.spacing() * grid.spacing();
}

namespace {

MotionalDensityMatrix cropped(const MotionalDensityMatrix& rho) {
  const int d = rho.effective_dim();
  if (d == rho.dim()) return rho;
  return MotionalDensityMatrix(CMatrix(rho.matrix().topLeftCorner(d, d)));
}

}  // namespace

Complex normal_cf(const MotionalDensityMatrix& rho, Complex beta) {
  if (std::abs(beta) > 6.0) throw DomainError("normal_cf: |beta| > 6");
  const int d = rho.effective_dim();
  const CMatrix disp = displacement_elements(beta, d, d);
  // Tr(rho D) = sum_{jl} rho_jl D_lj
  const Complex tr = rho.matrix().topLeftCorner(d, d).cwiseProduct(disp.transpose()).sum();
  return tr * std::exp(0.5 * std::norm(beta));
}

double disc_filter(Complex beta, double w) {
  if (!(w > 0.0)) throw std::invalid_argument("disc_filter: width must be positive");
  const double u = std::abs(beta) / w;
  if (u >= 1.0) return 0.0;
  return (2.0 / kPi) * (std::acos(u) - u * std::sqrt(1.0 - u * u));
}

CVector displaced_diagonal(const CMatrix& block, Complex alpha, int rows) {
  if (block.rows() != block.cols()) throw std::invalid_argument("displaced_diagonal: square block");
  const int d = static_cast<int>(block.rows());
  const CMatrix disp = displacement_elements(alpha, d, rows);  // <j|D(alpha)|n>
  const CMatrix xd = block * disp;
  return disp.conjugate().cwiseProduct(xd).colwise().sum().transpose();
}

int displaced_rows_guess(int dim, Complex alpha) {
  const double scale = std::sqrt(static_cast<double>(dim)) + std::abs(alpha);
  return std::max(2 * dim, static_cast<int>(std::ceil(scale * scale + 12.0 * scale + 10.0)));
}

int displaced_rows(const MotionalDensityMatrix& rho, Complex alpha, double tol) {
  const MotionalDensityMatrix r = cropped(rho);
  int rows = displaced_rows_guess(r.dim(), alpha);
  const double tr = r.trace();
  for (;;) {
    const CVector diag = displaced_diagonal(r.matrix(), alpha, rows);
    if (std::abs(diag.sum().real() - tr) <= tol) return rows;
    if (rows > 8000)
      throw TruncationError("displaced state needs more than 8000 Fock rows");
    rows += rows / 2;
  }
}

RVector displaced_diagonal(const MotionalDensityMatrix& rho, Complex alpha) {
  const MotionalDensityMatrix r = cropped(rho);
  const int rows = displaced_rows(r, alpha);
  return displaced_diagonal(r.matrix(), alpha, rows).real();
}

SeriesResult witness_series(std::span<const Complex> diag, double w) {
  if (!(w > 0.0)) throw std::invalid_argument("witness_series: width must be positive");
  const double r2 = 0.25 * w * w;
  const int size = static_cast<int>(diag.size());
  int top = size - 1;
  while (top > 0 && diag[top] == Complex{}) --top;

  // t_n holds c_m d_n n!/(n-m)! including the prefactor R^2/pi; updated in
  // place from m to m+1.
  std::vector<Complex> t(diag.begin(), diag.begin() + top + 1);
  for (auto& v : t) v *= r2 / kPi;

  SeriesResult res;
  double prev_mod = INFINITY;
  for (int m = 0;; ++m) {
    Complex term{};
    double mag = 0.0;
    for (int n = m; n <= top; ++n) {
      term += t[n];
      mag += std::abs(t[n]);
    }
    res.roundoff = std::max(res.roundoff, 1e-16 * mag);
    res.value += term;
    res.terms = m + 1;
    res.last_term = std::abs(term);
    if (m == top) {
      res.exhausted = true;
      break;
    }
    if (m > 0 && res.last_term < 1e-14 && res.last_term <= prev_mod) break;
    prev_mod = res.last_term;
    const double mm = m;
    const double ratio_m = -r2 * (2.0 * mm + 4.0) * (2.0 * mm + 3.0) /
                           ((mm + 1.0) * (mm + 3.0) * (mm + 2.0) * (mm + 2.0));
    for (int n = m + 1; n <= top; ++n) t[n] *= ratio_m * (n - mm);
  }
  return res;
}

SeriesResult p_omega_series_detailed(const MotionalDensityMatrix& rho, Complex alpha, double w) {
  const RVector diag = displaced_diagonal(rho, alpha);
  const CVector c = diag.cast<Complex>();
  return witness_series(std::span<const Complex>(c.data(), c.size()), w);
}

double p_omega_series(const MotionalDensityMatrix& rho, Complex alpha, double w) {
  return p_omega_series_detailed(rho, alpha, w).value.real();
}

QuasiProbMap p_omega_series_map(const MotionalDensityMatrix& rho, const PhaseGrid& grid,
                                const FilterSpec& filter) {
  filter.validate();
  const MotionalDensityMatrix r = cropped(rho);
  QuasiProbMap map{grid, std::vector<double>(grid.size()), PMethod::series, filter.width};
  for (int i = 0; i < grid.size(); ++i) {
    const SeriesResult s = p_omega_series_detailed(r, grid.point(i), filter.width);
    map.values[i] = s.value.real();
    map.max_imag_residue = std::max(map.max_imag_residue, std::abs(s.value.imag()));
    map.converged = map.converged && s.converged();
  }
  return map;
}

FilteredCf sample_filtered_cf(const std::function<Complex(Complex)>& cf, const FilterSpec& filter) {
  filter.validate();
  FilteredCf out;
  out.width = filter.width;
  out.half_points = 64;
  out.spacing = filter.width / out.half_points;
  const int n = 2 * out.half_points + 1;
  out.samples = CMatrix::Zero(n, n);
  // Hermitian characteristic functions obey Phi(-beta) = Phi(beta)^*, so only
  // half of the plane is evaluated.
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const int flat = iy * n + ix;
      if (flat > (n * n) / 2) break;
      const Complex beta{out.beta_x(ix), out.beta_y(iy)};
      const double om = disc_filter(beta, filter.width);
      if (om == 0.0) continue;
      const Complex v = om * cf(beta);
      out.samples(iy, ix) = v;
      out.samples(n - 1 - iy, n - 1 - ix) = std::conj(v);
    }
  }
  return out;
}

std::vector<Complex> fourier_to_phase_grid(const FilteredCf& f, const PhaseGrid& grid) {
  const int nb = static_cast<int>(f.samples.rows());
  const int na = grid.n_side();
  CMatrix ex(na, nb), ey(na, nb);
  for (int a = 0; a < na; ++a) {
    for (int b = 0; b < nb; ++b) {
      ex(a, b) = std::polar(1.0, 2.0 * grid.y(a) * f.beta_x(b));
      ey(a, b) = std::polar(1.0, -2.0 * grid.x(a) * f.beta_y(b));
    }
  }
  const CMatrix p = ex * f.samples.transpose() * ey.transpose();  // (iy_alpha, ix_alpha)
  const double norm = f.spacing * f.spacing / (kPi * kPi);
  std::vector<Complex> out(grid.size());
  for (int iy = 0; iy < na; ++iy)
    for (int ix = 0; ix < na; ++ix) out[iy * na + ix] = norm * p(iy, ix);
  return out;
}

QuasiProbMap p_omega_integral(const MotionalDensityMatrix& rho, const PhaseGrid& grid,
                              const FilterSpec& filter) {
  filter.validate();
  if (filter.width > 6.0) throw DomainError("filter support exceeds |beta| <= 6");
  const MotionalDensityMatrix r = cropped(rho);
  const FilteredCf f =
      sample_filtered_cf([&r](Complex beta) { return normal_cf(r, beta); }, filter);
  const std::vector<Complex> vals = fourier_to_phase_grid(f, grid);
  QuasiProbMap map{grid, std::vector<double>(grid.size()), PMethod::integral, filter.width};
  for (int i = 0; i < grid.size(); ++i) {
    map.values[i] = vals[i].real();
    map.max_imag_residue = std::max(map.max_imag_residue, std::abs(vals[i].imag()));
  }
  return map;
}

}  // namespace nljc
