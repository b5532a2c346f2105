#include "nljc/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nljc/errors.hpp"

namespace nljc {

void ModelParams::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("ModelParams: eta must be > 0");
  if (k_sideband < 0) throw std::invalid_argument("ModelParams: k_sideband must be >= 0");
  if (std::abs(beta0) == 0.0) throw std::invalid_argument("ModelParams: |beta0| must be > 0");
}

ModelParams ModelParams::criteria_study(int k_sideband) {
  ModelParams p;
  p.k_sideband = k_sideband;
  return p;
}

Eigen::Vector2cd EigenBranch::eigenvector(Branch b) const {
  if (degenerate) {
    const bool carries_upper = upper_weight(b) > 0.5;
    return carries_upper ? Eigen::Vector2cd(1.0, 0.0) : Eigen::Vector2cd(0.0, 1.0);
  }
  const double c = b == Branch::plus ? c_plus : c_minus;
  const Complex a = b == Branch::plus ? alpha_plus : alpha_minus;
  return Eigen::Vector2cd(c, c * a);
}

double EigenBranch::upper_weight(Branch b) const {
  const double c = b == Branch::plus ? c_plus : c_minus;
  return c * c;
}

Complex EigenBranch::lower_weight(Branch b) const {
  if (degenerate) return 0.0;
  const double c = b == Branch::plus ? c_plus : c_minus;
  const Complex a = b == Branch::plus ? alpha_plus : alpha_minus;
  return c * c * a;
}

double f_k_diag(int n, const ModelParams& params) {
  const int k = params.k_sideband;
  const double x = params.eta * params.eta;
  const double log_mag = -0.5 * x + k * std::log(params.eta) - log_factorial_ratio(n, k);
  const Complex prefactor = std::polar(std::exp(log_mag), params.delta_phi + 0.5 * kPi * k);
  // (1/2) z + (1/2) z^* = Re z
  return prefactor.real() * laguerre_gen(n, k, x);
}

Complex rabi(int m, int n, const ModelParams& params) {
  const Complex kappa = std::polar(1.0, params.kappa_phase);
  const double ladder = std::exp(0.5 * log_factorial_ratio(n, params.k_sideband));
  return 2.0 * kappa * std::sqrt(m + 1.0) * f_k_diag(n, params) * ladder;
}

EigenBranch eigen_branch(int m, int n, const ModelParams& params) {
  EigenBranch br;
  br.m = m;
  br.n = n;
  br.rabi = rabi(m, n, params);
  const double dw = params.delta_omega;
  const double abs_rabi = std::abs(br.rabi);
  br.splitting = std::hypot(dw, abs_rabi);
  const double mean = 0.5 * (dw * (2.0 * m + 1.0) +
                             params.nu * (2.0 * n - 2.0 * params.k_sideband * m) +
                             params.omega21 * (2.0 * m + 2.0));
  br.omega_plus = mean + 0.5 * br.splitting;
  br.omega_minus = mean - 0.5 * br.splitting;

  br.degenerate = abs_rabi < 1e-12 * std::max(1.0, std::abs(dw));
  if (br.degenerate) {
    // Uncoupled limit: |2,m,n> sits at mean - dw/2, i.e. on the minus branch
    // for dw >= 0 and on the plus branch otherwise.
    if (dw >= 0.0)
      br.c_minus = 1.0;
    else
      br.c_plus = 1.0;
    return br;
  }
  // Both roots of the quadratic, each in its cancellation-free form.
  if (dw >= 0.0) {
    br.alpha_plus = (dw + br.splitting) / br.rabi;
    br.alpha_minus = -std::conj(br.rabi) / (dw + br.splitting);
  } else {
    br.alpha_minus = (dw - br.splitting) / br.rabi;
    br.alpha_plus = std::conj(br.rabi) / (br.splitting - dw);
  }
  br.c_plus = 1.0 / std::sqrt(1.0 + std::norm(br.alpha_plus));
  br.c_minus = 1.0 / std::sqrt(1.0 + std::norm(br.alpha_minus));
  return br;
}

namespace {

double log_poisson(int m, double mean, double log_mean) {
  return m * log_mean - mean - std::lgamma(m + 1.0);
}

double lower_poisson_tail(double mean, int m_lo) {
  const double log_mean = std::log(mean);
  double tail = 0.0;
  for (int m = m_lo - 1; m >= 0; --m) {
    const double term = std::exp(log_poisson(m, mean, log_mean));
    tail += term;
    if (m < mean && (term < 1e-300 || term < 1e-18 * tail)) break;
  }
  return tail;
}

}  // namespace

CavityWindow cavity_window(Complex beta0, double coverage_sigmas, double min_coverage) {
  const double sigma = std::abs(beta0);
  if (sigma == 0.0) throw std::invalid_argument("cavity_window: |beta0| must be > 0");
  const double mean = sigma * sigma;
  CavityWindow w;
  w.m_lo = std::max(0, static_cast<int>(std::floor(mean - coverage_sigmas * sigma)));
  w.m_hi = static_cast<int>(std::ceil(mean + coverage_sigmas * sigma));
  double lower = lower_poisson_tail(mean, w.m_lo);
  double upper = poisson_tail(mean, w.m_hi);
  while (lower + upper > 1.0 - min_coverage) {
    if (upper >= lower) {
      ++w.m_hi;
      upper = poisson_tail(mean, w.m_hi);
    } else {
      --w.m_lo;
      lower = lower_poisson_tail(mean, w.m_lo);
    }
  }
  w.covered_mass = 1.0 - lower - upper;

  const double log_mean = std::log(mean);
  w.log_weights.resize(w.size());
  double peak = -1e300;
  for (int i = 0; i < w.size(); ++i) {
    w.log_weights[i] = log_poisson(w.m_lo + i, mean, log_mean);
    peak = std::max(peak, w.log_weights[i]);
  }
  double sum = 0.0;
  for (double lw : w.log_weights) sum += std::exp(lw - peak);
  const double log_norm = peak + std::log(sum);
  for (double& lw : w.log_weights) lw -= log_norm;
  return w;
}

MotionalDensityMatrix initial_motional_state(const ModelParams& params, const Truncation& trunc) {
  if (const auto* amp = std::get_if<Complex>(&params.motional_input))
    return MotionalDensityMatrix::from_pure(coherent_vector(*amp, trunc));
  return std::get<MotionalDensityMatrix>(params.motional_input)
      .resized(trunc.dim(), trunc.tail_tol());
}

MotionalPropagator::MotionalPropagator(const ModelParams& params, const Truncation& trunc,
                                       double coverage_sigmas)
    : rho0_(initial_motional_state(params, trunc)),
      window_(cavity_window(params.beta0, coverage_sigmas)),
      dim_(trunc.dim()),
      n_active_(trunc.dim() - params.k_sideband),
      k_(params.k_sideband),
      nu_(params.nu),
      delta_omega_(params.delta_omega) {
  params.validate();
  if (n_active_ < 1)
    throw TruncationError("n_max - k is negative: the shifted block does not fit the cutoff");
  double outside = 0.0;
  for (int n = n_active_; n < dim_; ++n) outside += rho0_(n, n).real();
  if (outside > trunc.tail_tol())
    throw TruncationError("input population above n_max - k = " + std::to_string(n_active_ - 1) +
                          " is " + std::to_string(outside) + ", exceeding tail_tol");

  sqrt_weights_.reserve(window_.size());
  for (double lw : window_.log_weights) sqrt_weights_.push_back(std::exp(0.5 * lw));

  branches_.reserve(static_cast<std::size_t>(window_.size()) * n_active_);
  for (int m = window_.m_lo; m <= window_.m_hi; ++m) {
    for (int n = 0; n < n_active_; ++n) {
      const EigenBranch br = eigen_branch(m, n, params);
      if (br.degenerate) ++degenerate_count_;
      branches_.push_back({0.5 * br.splitting, br.upper_weight(Branch::plus),
                           br.upper_weight(Branch::minus), br.lower_weight(Branch::plus),
                           br.lower_weight(Branch::minus)});
    }
  }
}

MotionalDensityMatrix MotionalPropagator::at(double t) const {
  if (t < 0.0) throw std::invalid_argument("MotionalPropagator: t must be >= 0");
  const int cols = window_.size();
  // Amplitudes of |2,m,n> (upper) and |1,m+1,n+k> (lower) that evolve out of
  // |2,m,n>, relative to the n-independent phase of block m and without the
  // free trap rotation exp(-i nu n t), which is applied at the end.
  CMatrix upper(dim_, cols);
  CMatrix lower(n_active_, cols);
  // Rows above n_max - k have no partner inside the cutoff and evolve
  // uncoupled, as they do under the truncated Hamiltonian.
  const Complex bare = std::polar(1.0, 0.5 * delta_omega_ * t);
  for (int j = 0; j < cols; ++j) {
    const double s = sqrt_weights_[j];
    for (int n = n_active_; n < dim_; ++n) upper(n, j) = s * bare;
    for (int n = 0; n < n_active_; ++n) {
      const BranchData& b = branches_[static_cast<std::size_t>(j) * n_active_ + n];
      const Complex e = std::polar(1.0, -b.half_splitting * t);
      const Complex ec = std::conj(e);
      upper(n, j) = s * (b.w2_plus * e + b.w2_minus * ec);
      lower(n, j) = s * (b.w1_plus * e + b.w1_minus * ec);
    }
  }
  const CMatrix upper_gram = upper * upper.adjoint();
  const CMatrix lower_gram = lower * lower.adjoint();

  const double rotation = std::fmod(nu_ * t, 2.0 * kPi);
  CMatrix out = CMatrix::Zero(dim_, dim_);
  const CMatrix& r0 = rho0_.matrix();
  for (int np = 0; np < dim_; ++np) {
    for (int n = 0; n < dim_; ++n) {
      const Complex phase = std::polar(1.0, -std::fmod((n - np) * rotation, 2.0 * kPi));
      const Complex base = r0(n, np) * phase;
      out(n, np) += base * upper_gram(n, np);
      if (n < n_active_ && np < n_active_) out(n + k_, np + k_) += base * lower_gram(n, np);
    }
  }
  return MotionalDensityMatrix(std::move(out));
}

MotionalDensityMatrix reduced_rho(double t, const ModelParams& params, const Truncation& trunc) {
  return MotionalPropagator(params, trunc).at(t);
}

namespace {

// f_k(n; eta) assembled from its normally ordered power series in a, a^dagger
// (instead of the Laguerre closed form used by the analytic path).
CMatrix mode_function_operator(const ModelParams& params, int dim) {
  const CMatrix a = annihilation_matrix(dim);
  const CMatrix ad = a.adjoint();
  const int k = params.k_sideband;
  const double eta = params.eta;
  CMatrix series = CMatrix::Zero(dim, dim);
  CMatrix power = CMatrix::Identity(dim, dim);  // a^dagger^l a^l
  for (int l = 0; l < dim; ++l) {
    if (l > 0) power = ad * power * a;
    const double log_mag =
        (2.0 * l + k) * std::log(eta) - std::lgamma(l + 1.0) - std::lgamma(l + k + 1.0);
    const Complex coeff = std::polar(std::exp(log_mag), 0.5 * kPi * (2 * l + k));
    series += coeff * power;
  }
  const Complex prefactor = 0.5 * std::polar(std::exp(-0.5 * eta * eta), params.delta_phi);
  const CMatrix half = prefactor * series;
  return half + half.adjoint();
}

}  // namespace

OracleEvolver::OracleEvolver(const ModelParams& params, int cavity_dim, int motional_dim)
    : cavity_dim_(cavity_dim), motional_dim_(motional_dim) {
  params.validate();
  if (cavity_dim < 2 || motional_dim < 2)
    throw std::invalid_argument("OracleEvolver: dimensions must be >= 2");
  const long total = 2L * cavity_dim * motional_dim;
  if (total > 4000) throw DomainError("OracleEvolver: dense dimension exceeds 4000");

  const Truncation cavity_trunc(cavity_dim - 1, 1e-12);
  const Truncation motion_trunc(motional_dim - 1, 1e-12);
  const CVector cavity0 = coherent_vector(params.beta0, cavity_trunc).amplitudes;

  const CMatrix a = annihilation_matrix(motional_dim);
  const CMatrix b = annihilation_matrix(cavity_dim);
  const CMatrix id_m = CMatrix::Identity(motional_dim, motional_dim);
  const CMatrix id_c = CMatrix::Identity(cavity_dim, cavity_dim);
  const CMatrix id_e = CMatrix::Identity(2, 2);
  CMatrix upper_proj = CMatrix::Zero(2, 2);  // index 0 = |1>, 1 = |2>
  upper_proj(1, 1) = 1.0;
  CMatrix raise = CMatrix::Zero(2, 2);  // A_21 = |2><1|
  raise(1, 0) = 1.0;

  CMatrix a_pow_k = CMatrix::Identity(motional_dim, motional_dim);
  for (int i = 0; i < params.k_sideband; ++i) a_pow_k = a_pow_k * a;
  const CMatrix motional_coupling = mode_function_operator(params, motional_dim) * a_pow_k;

  const CMatrix n_motion = a.adjoint() * a;
  const CMatrix n_cavity = b.adjoint() * b;
  const CMatrix h0 = params.nu * Eigen::kroneckerProduct(id_e, Eigen::kroneckerProduct(id_c, n_motion)).eval() +
                     params.laser_frequency() *
                         Eigen::kroneckerProduct(id_e, Eigen::kroneckerProduct(n_cavity, id_m)).eval() +
                     params.omega21 *
                         Eigen::kroneckerProduct(upper_proj, Eigen::kroneckerProduct(id_c, id_m)).eval();
  const Complex kappa = std::polar(1.0, params.kappa_phase);
  const CMatrix coupling =
      kappa * Eigen::kroneckerProduct(raise, Eigen::kroneckerProduct(b, motional_coupling)).eval();
  const CMatrix h = h0 + coupling + coupling.adjoint();
  hermiticity_defect_ = (h - h.adjoint()).cwiseAbs().maxCoeff();

  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  if (solver.info() != Eigen::Success) throw DomainError("OracleEvolver: eigensolver failed");
  energies_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();

  // Mixed motional inputs are unravelled into weighted pure components.
  CMatrix motional_columns;
  if (const auto* amp = std::get_if<Complex>(&params.motional_input)) {
    motional_columns = coherent_vector(*amp, motion_trunc).amplitudes;
  } else {
    const MotionalDensityMatrix rho =
        std::get<MotionalDensityMatrix>(params.motional_input).resized(motional_dim, 1e-12);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.matrix());
    std::vector<int> keep;
    for (int i = 0; i < motional_dim; ++i)
      if (es.eigenvalues()(i) > 1e-16) keep.push_back(i);
    motional_columns.resize(motional_dim, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
      motional_columns.col(static_cast<Eigen::Index>(j)) =
          std::sqrt(es.eigenvalues()(keep[j])) * es.eigenvectors().col(keep[j]);
  }
  CVector excited = CVector::Zero(2);
  excited(1) = 1.0;
  CMatrix initial(total, motional_columns.cols());
  for (Eigen::Index j = 0; j < motional_columns.cols(); ++j)
    initial.col(j) = Eigen::kroneckerProduct(excited, Eigen::kroneckerProduct(cavity0, motional_columns.col(j)).eval()).eval();
  const CMatrix projected = eigenvectors_.adjoint() * initial;
  // Stored column-stacked to keep the class layout flat.
  initial_in_eigenbasis_ = Eigen::Map<const CVector>(projected.data(), projected.size());
}

MotionalDensityMatrix OracleEvolver::at(double t) const {
  const Eigen::Index total = energies_.size();
  const Eigen::Index components = initial_in_eigenbasis_.size() / total;
  const Eigen::Map<const CMatrix> projected(initial_in_eigenbasis_.data(), total, components);
  CVector phases(total);
  for (Eigen::Index i = 0; i < total; ++i) phases(i) = std::polar(1.0, -energies_(i) * t);
  const CMatrix evolved = eigenvectors_ * (phases.asDiagonal() * projected);

  CMatrix rho = CMatrix::Zero(motional_dim_, motional_dim_);
  const Eigen::Index blocks = 2L * cavity_dim_;
  for (Eigen::Index j = 0; j < components; ++j) {
    const Eigen::Map<const CMatrix> psi(evolved.col(j).data(), motional_dim_, blocks);
    rho += psi * psi.adjoint();
  }
  return MotionalDensityMatrix(std::move(rho));
}

MotionalDensityMatrix oracle_evolve(double t, const ModelParams& params, int cavity_dim,
                                    int motional_dim) {
  return OracleEvolver(params, cavity_dim, motional_dim).at(t);
}

}  // namespace nljc
