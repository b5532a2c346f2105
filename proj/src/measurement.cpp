#include "nljc/measurement.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "nljc/errors.hpp"

namespace nljc {

namespace {

CMatrix zeros_like(const CMatrix& m) { return CMatrix::Zero(m.rows(), m.cols()); }

double probe_angle(int n, double tau, const ModelParams& params, double kappa_prime) {
  ModelParams p0 = params;
  p0.k_sideband = 0;
  return kappa_prime * f_k_diag(n, p0) * tau;
}

std::vector<double> probe_mode_function(int dim, const ModelParams& params) {
  ModelParams p0 = params;
  p0.k_sideband = 0;
  std::vector<double> f(dim);
  for (int n = 0; n < dim; ++n) f[n] = f_k_diag(n, p0);
  return f;
}

}  // namespace

VibronicState VibronicState::upper(const MotionalDensityMatrix& rho) {
  VibronicState s;
  const CMatrix z = zeros_like(rho.matrix());
  s.blocks = {{{z, z}, {z, rho.matrix()}}};
  return s;
}

double VibronicState::trace() const {
  return blocks[0][0].trace().real() + blocks[1][1].trace().real();
}

CMatrix VibronicState::traced() const { return blocks[0][0] + blocks[1][1]; }

bool VibronicState::upper_only() const {
  return blocks[0][0].isZero(0.0) && blocks[0][1].isZero(0.0) && blocks[1][0].isZero(0.0);
}

void VibronicState::validate(double tol) const {
  const int d = dim();
  for (const auto& row : blocks)
    for (const auto& b : row)
      if (b.rows() != d || b.cols() != d) throw DomainError("vibronic blocks differ in shape");
  for (int i = 0; i < 2; ++i)
    if ((blocks[i][i] - blocks[i][i].adjoint()).cwiseAbs().maxCoeff() > tol)
      throw DomainError("diagonal vibronic block is not Hermitian");
  if ((blocks[0][1] - blocks[1][0].adjoint()).cwiseAbs().maxCoeff() > tol)
    throw DomainError("off-diagonal vibronic blocks are not adjoint");
  const double tr = trace();
  if (!(tr > 0.0) || tr > 1.0 + 1e-12) throw DomainError("vibronic trace outside (0, 1]");
}

VibronicState displace_vibronic(const VibronicState& state, Complex alpha) {
  const int d = state.dim();
  if (std::norm(alpha) > (d - 1) / 4.0)
    throw TruncationError("displacement requires |alpha|^2 <= n_max/4");
  const CMatrix disp = displacement_elements(alpha, d, d);
  VibronicState out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.blocks[i][j] = disp.adjoint() * state.blocks[i][j] * disp;
  return out;
}

std::vector<Eigen::Matrix2cd> probe_unitary_blocks(double tau, const ModelParams& params,
                                                   double kappa_prime, int dim,
                                                   double probe_phase) {
  if (tau < 0.0) throw std::invalid_argument("probe time must be >= 0");
  const Complex i1{0.0, 1.0};
  std::vector<Eigen::Matrix2cd> out(dim);
  for (int n = 0; n < dim; ++n) {
    const double th = probe_angle(n, tau, params, kappa_prime);
    const double c = std::cos(th), s = std::sin(th);
    out[n] << c, -i1 * s * std::polar(1.0, probe_phase), -i1 * s * std::polar(1.0, -probe_phase), c;
  }
  return out;
}

ProbeOutcome probe_outcome(const VibronicState& state, double tau, const ModelParams& params,
                           double kappa_prime, double probe_phase) {
  const int d = state.dim();
  const auto u = probe_unitary_blocks(tau, params, kappa_prime, d, probe_phase);
  // <k|U rho U^dagger|k> = sum_ij (u_ki u_kj^*) o rho_ij, with u_ki the
  // vectors of per-n matrix elements.
  auto project = [&](int k) {
    CMatrix out = CMatrix::Zero(d, d);
    for (int i = 0; i < 2; ++i) {
      CVector ui(d);
      for (int n = 0; n < d; ++n) ui(n) = u[n](k, i);
      for (int j = 0; j < 2; ++j) {
        CVector uj(d);
        for (int n = 0; n < d; ++n) uj(n) = u[n](k, j);
        out += ((ui * uj.adjoint()).array() * state.blocks[i][j].array()).matrix();
      }
    }
    return out;
  };
  ProbeOutcome res;
  const CMatrix dark = project(1);
  const CMatrix z = zeros_like(dark);
  res.dark.blocks = {{{z, z}, {z, dark}}};
  res.bright = project(0);
  return res;
}

VibronicState probe_cycle(const VibronicState& state, double tau, const ModelParams& params,
                          double kappa_prime, double probe_phase) {
  return probe_outcome(state, tau, params, kappa_prime, probe_phase).dark;
}

void ProbeSchedule::validate() const {
  if (times.empty()) throw std::invalid_argument("probe schedule needs at least one cycle");
  for (double t : times)
    if (!(t > 0.0)) throw std::invalid_argument("probe times must be positive");
  if (!(kappa_prime > 0.0)) throw std::invalid_argument("kappa' must be positive");
}

double dark_probability(const VibronicState& state, const ProbeSchedule& schedule,
                        const ModelParams& params) {
  schedule.validate();
  VibronicState s = displace_vibronic(state, schedule.displacement);
  for (std::size_t q = 0; q < schedule.times.size(); ++q)
    s = probe_cycle(s, schedule.times[q], params, schedule.kappa_prime,
                    q == 0 ? schedule.probe_phase : 0.0);
  return s.trace();
}

ProbeDesign::ProbeDesign(std::vector<ProbeSchedule> schedules, int dim, const ModelParams& params,
                         ElementSet elements, double max_condition)
    : schedules_(std::move(schedules)), dim_(dim), elements_(elements) {
  if (dim < 1) throw std::invalid_argument("ProbeDesign: dim must be >= 1");
  if (schedules_.empty()) throw std::invalid_argument("ProbeDesign: empty schedule family");
  const int blocks = elements == ElementSet::upper ? 1 : 4;
  const int unknowns = blocks * dim;
  const int rows = static_cast<int>(schedules_.size());
  if (rows < unknowns)
    throw IllConditionedDesign("schedule family has " + std::to_string(rows) +
                                   " schedules for " + std::to_string(unknowns) + " unknowns",
                               INFINITY);
  const std::vector<double> f = probe_mode_function(dim, params);
  matrix_ = RMatrix::Zero(rows, unknowns);
  for (int s = 0; s < rows; ++s) {
    const ProbeSchedule& sch = schedules_[s];
    sch.validate();
    for (int n = 0; n < dim; ++n) {
      double later = 1.0;
      for (std::size_t q = 1; q < sch.times.size(); ++q) {
        const double c = std::cos(sch.kappa_prime * f[n] * sch.times[q]);
        later *= c * c;
      }
      const double th = sch.kappa_prime * f[n] * sch.times[0];
      const double c2 = std::cos(th) * std::cos(th);
      if (elements == ElementSet::upper) {
        matrix_(s, n) = c2 * later;
      } else {
        // s^2 rho11 + c^2 rho22 + sin(2 theta) (Im rho12 cos chi - Re rho12 sin chi)
        const double s2 = std::sin(th) * std::sin(th);
        const double sc = std::sin(2.0 * th);
        matrix_(s, n) = s2 * later;
        matrix_(s, dim + n) = c2 * later;
        matrix_(s, 2 * dim + n) = -sc * std::sin(sch.probe_phase) * later;
        matrix_(s, 3 * dim + n) = sc * std::cos(sch.probe_phase) * later;
      }
    }
  }
  Eigen::BDCSVD<RMatrix> svd(matrix_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  condition_ = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  if (!(condition_ < max_condition))
    throw IllConditionedDesign("probe design condition number " + std::to_string(condition_) +
                                   " exceeds " + std::to_string(max_condition),
                               condition_);
  pinv_ = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

std::vector<ProbeSchedule> linear_schedule_family(int count, double tau_step, double kappa_prime) {
  if (count < 1 || !(tau_step > 0.0))
    throw std::invalid_argument("linear schedule family needs count >= 1 and step > 0");
  std::vector<ProbeSchedule> out(count);
  for (int j = 0; j < count; ++j) {
    out[j].times = {(j + 1) * tau_step};
    out[j].kappa_prime = kappa_prime;
  }
  return out;
}

std::vector<ProbeSchedule> random_schedule_family(int dim, const ModelParams& params,
                                                  ElementSet elements, std::uint64_t seed,
                                                  double oversampling, double kappa_prime) {
  if (dim < 1 || !(oversampling >= 1.0))
    throw std::invalid_argument("random schedule family needs dim >= 1 and oversampling >= 1");
  std::vector<double> f = probe_mode_function(dim, params);
  for (double& v : f) v = std::abs(v);
  std::sort(f.begin(), f.end());
  double gap = 1.0;
  for (int n = 1; n < dim; ++n) gap = std::min(gap, f[n] - f[n - 1]);
  if (!(gap > 0.0)) throw IllConditionedDesign("degenerate |f_0(n)| below dim", INFINITY);
  const double window = std::max(1e3, 10.0 / gap) / kappa_prime;

  const int unknowns = (elements == ElementSet::upper ? 1 : 4) * dim;
  const int count = static_cast<int>(std::ceil(oversampling * unknowns));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(0.0, window);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::vector<ProbeSchedule> out(count);
  for (auto& s : out) {
    const int cycles = 1 + static_cast<int>(rng() & 1u);
    for (int q = 0; q < cycles; ++q) {
      double t = 0.0;
      while (t == 0.0) t = time(rng);
      s.times.push_back(t);
    }
    s.kappa_prime = kappa_prime;
    if (elements == ElementSet::all) s.probe_phase = phase(rng);
  }
  return out;
}

const CVector& RhoNNTable::block(int i, int j) const {
  if (i == 0 && j == 0) return rho11;
  if (i == 1 && j == 1) return rho22;
  if (i == 0 && j == 1) return rho12;
  throw std::invalid_argument("RhoNNTable::block: (2,1) is the conjugate of (1,2)");
}

CVector RhoNNTable::element(int i, int j) const {
  if (i == 1 && j == 0) return rho12.conjugate();
  return block(i, j);
}

RhoNNTable exact_rho_nn(const VibronicState& state, Complex alpha, int rows) {
  // Work on the guessed support first and pad; fall back to all rows when the
  // guess loses trace.
  int used = std::min(rows, displaced_rows_guess(state.dim(), alpha));
  auto diag = [&](const CMatrix& b) {
    CVector v = CVector::Zero(rows);
    if (!b.isZero(0.0)) v.head(used) = displaced_diagonal(b, alpha, used);
    return v;
  };
  RhoNNTable t;
  t.alpha = alpha;
  t.rho11 = diag(state.blocks[0][0]);
  t.rho22 = diag(state.blocks[1][1]);
  t.rho12 = diag(state.blocks[0][1]);
  // The diagonals of the traced state must still add up to its trace.
  double deficit = std::abs((t.rho11 + t.rho22).sum().real() - state.trace());
  if (deficit > 1e-12 && used < rows) {
    used = rows;
    t.rho11 = diag(state.blocks[0][0]);
    t.rho22 = diag(state.blocks[1][1]);
    t.rho12 = diag(state.blocks[0][1]);
    deficit = std::abs((t.rho11 + t.rho22).sum().real() - state.trace());
  }
  if (deficit > 1e-12)
    throw TruncationError("displaced state at alpha loses " + std::to_string(deficit) +
                          " of its trace beyond " + std::to_string(rows) + " Fock rows");
  return t;
}

int required_rows(const VibronicState& state, const std::vector<Complex>& alphas) {
  const MotionalDensityMatrix traced(state.traced());
  int rows = 1;
  for (Complex a : alphas) rows = std::max(rows, displaced_rows(traced, a));
  return rows;
}

int required_rows(const VibronicState& state, const PhaseGrid& grid) {
  std::vector<Complex> edge;
  const int n = grid.n_side();
  for (int i = 0; i < n; ++i) {
    edge.push_back(grid.point(i, 0));
    edge.push_back(grid.point(i, n - 1));
    edge.push_back(grid.point(0, i));
    edge.push_back(grid.point(n - 1, i));
  }
  return required_rows(state, edge);
}

RMatrix dark_probabilities(const VibronicState& state, const std::vector<Complex>& alphas,
                           const ProbeDesign& design) {
  state.validate();
  const bool upper = design.elements() == ElementSet::upper;
  if (upper && !state.upper_only())
    throw std::invalid_argument("upper-level design cannot resolve a state with |1> content");
  const int d = design.dim();
  const int na = static_cast<int>(alphas.size());
  RMatrix truth(design.unknowns(), na);
  for (int k = 0; k < na; ++k) {
    const RhoNNTable t = exact_rho_nn(state, alphas[k], d);
    if (upper) {
      truth.col(k) = t.rho22.real();
    } else {
      truth.col(k) << t.rho11.real(), t.rho22.real(), t.rho12.real(), t.rho12.imag();
    }
  }
  return design.matrix() * truth;
}

RMatrix sample_frequencies(const RMatrix& probabilities, long shots, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("shot budget must be positive");
  RMatrix out(probabilities.rows(), probabilities.cols());
  for (int s = 0; s < probabilities.rows(); ++s) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(s)};
    std::mt19937_64 rng(seq);
    for (int k = 0; k < probabilities.cols(); ++k) {
      const double p = std::clamp(probabilities(s, k), 0.0, 1.0);
      std::binomial_distribution<long> draw(shots, p);
      out(s, k) = static_cast<double>(draw(rng)) / static_cast<double>(shots);
    }
  }
  return out;
}

std::vector<RhoNNTable> reconstruct_rho_nn(const RMatrix& frequencies,
                                           const std::vector<Complex>& alphas,
                                           const ProbeDesign& design) {
  const int d = design.dim();
  const int na = static_cast<int>(alphas.size());
  if (frequencies.rows() != design.matrix().rows() || frequencies.cols() != na)
    throw std::invalid_argument("reconstruct_rho_nn: frequency table shape mismatch");
  const RMatrix est = design.pseudo_inverse() * frequencies;
  const RMatrix resid = design.matrix() * est - frequencies;
  std::vector<RhoNNTable> out(na);
  for (int k = 0; k < na; ++k) {
    RhoNNTable& t = out[k];
    t.alpha = alphas[k];
    t.residual_norm = resid.col(k).norm();
    if (design.elements() == ElementSet::upper) {
      t.rho11 = CVector::Zero(d);
      t.rho12 = CVector::Zero(d);
      t.rho22 = est.col(k).cast<Complex>();
    } else {
      t.rho11 = est.col(k).segment(0, d).cast<Complex>();
      t.rho22 = est.col(k).segment(d, d).cast<Complex>();
      t.rho12 = est.col(k).segment(2 * d, d).cast<Complex>() +
                Complex{0.0, 1.0} * est.col(k).segment(3 * d, d).cast<Complex>();
    }
  }
  return out;
}

std::vector<RhoNNTable> extract_rho_nn(const VibronicState& state, const std::vector<Complex>& alphas,
                                       const ProbeDesign& design, const ExtractionOptions& opts) {
  RMatrix probs = dark_probabilities(state, alphas, design);
  if (opts.shots) probs = sample_frequencies(probs, *opts.shots, opts.seed);
  return reconstruct_rho_nn(probs, alphas, design);
}

RhoNNTable extract_rho_nn(const VibronicState& state, Complex alpha, const ProbeDesign& design,
                          const ExtractionOptions& opts) {
  return extract_rho_nn(state, std::vector<Complex>{alpha}, design, opts).front();
}

WignerMatrixSample wigner_from_table(const RhoNNTable& table, double tail_tol) {
  WignerMatrixSample w;
  w.alpha = table.alpha;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const CVector v = table.element(i, j);
      const int n = static_cast<int>(v.size());
      for (int k = std::max(0, n - 4); k < n; ++k)
        if (std::abs(v(k)) > tail_tol)
          throw TruncationError("displaced diagonal has not decayed at the last stored row");
      Complex s{};
      for (int k = 0; k < n; ++k) s += (k % 2 == 0 ? 1.0 : -1.0) * v(k);
      w.values(i, j) = (2.0 / kPi) * s;
    }
  }
  return w;
}

WignerMatrixSample wigner_matrix(const VibronicState& state, Complex alpha) {
  return wigner_from_table(exact_rho_nn(state, alpha, required_rows(state, {alpha}) + 4));
}

WignerGrid wigner_grid(const std::vector<RhoNNTable>& tables, const PhaseGrid& grid,
                       double tail_tol) {
  if (static_cast<int>(tables.size()) != grid.size())
    throw std::invalid_argument("wigner_grid: one table per grid point required");
  WignerGrid w{grid, std::vector<Eigen::Matrix2cd>(grid.size()), Eigen::Matrix2cd::Zero()};
  for (int k = 0; k < grid.size(); ++k) {
    if (std::abs(tables[k].alpha - grid.point(k)) > 1e-12)
      throw std::invalid_argument("wigner_grid: table alpha does not match grid point");
    w.values[k] = wigner_from_table(tables[k], tail_tol).values;
  }
  const RhoNNTable& mid = tables[grid.size() / 2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) w.block_traces(i, j) = mid.element(i, j).sum();
  return w;
}

CfMatrix::CfMatrix(WignerGrid wigner, double trace_tol) : wigner_(std::move(wigner)) {
  const Eigen::Matrix2cd at0 = (*this)(Complex{});
  const double miss = (at0 - wigner_.block_traces).cwiseAbs().maxCoeff();
  if (miss > trace_tol)
    throw DomainError("Wigner grid misses " + std::to_string(miss) +
                      " of the block traces; enlarge the alpha grid");
}

Eigen::Matrix2cd CfMatrix::operator()(Complex beta) const {
  if (std::abs(beta) > 3.0) throw DomainError("characteristic function requested beyond |beta| = 3");
  const PhaseGrid& g = wigner_.grid;
  Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
  for (int k = 0; k < g.size(); ++k) {
    const Complex a = g.point(k);
    // beta alpha^* - beta^* alpha = 2i Im(beta alpha^*)
    acc += std::polar(1.0, 2.0 * (beta * std::conj(a)).imag()) * wigner_.values[k];
  }
  return acc * (g.spacing() * g.spacing() * std::exp(0.5 * std::norm(beta)));
}

Complex CfMatrix::traced(Complex beta) const {
  const Eigen::Matrix2cd m = (*this)(beta);
  return m(0, 0) + m(1, 1);
}

FilteredCf CfMatrix::filtered_block(int i, int j, const FilterSpec& filter) const {
  filter.validate();
  if (filter.width > 3.0) throw DomainError("filter support exceeds |beta| <= 3");
  const PhaseGrid& g = wigner_.grid;
  FilteredCf out;
  out.width = filter.width;
  out.half_points = 64;
  out.spacing = filter.width / out.half_points;
  const int nb = 2 * out.half_points + 1;
  const int na = g.n_side();
  CMatrix w(na, na);  // (iy, ix)
  for (int iy = 0; iy < na; ++iy)
    for (int ix = 0; ix < na; ++ix) w(iy, ix) = wigner_.values[iy * na + ix](i, j);
  // exponent 2i (beta_y alpha_x - beta_x alpha_y), separable in the axes
  CMatrix ey(nb, na), ex(nb, na);
  for (int b = 0; b < nb; ++b) {
    for (int a = 0; a < na; ++a) {
      ey(b, a) = std::polar(1.0, 2.0 * out.beta_y(b) * g.x(a));
      ex(b, a) = std::polar(1.0, -2.0 * out.beta_x(b) * g.y(a));
    }
  }
  const CMatrix phi_w = ey * w.transpose() * ex.transpose();  // (iy_beta, ix_beta)
  out.samples = CMatrix::Zero(nb, nb);
  const double cell = g.spacing() * g.spacing();
  for (int iy = 0; iy < nb; ++iy) {
    for (int ix = 0; ix < nb; ++ix) {
      const Complex beta{out.beta_x(ix), out.beta_y(iy)};
      const double om = disc_filter(beta, filter.width);
      if (om == 0.0) continue;
      out.samples(iy, ix) = om * std::exp(0.5 * std::norm(beta)) * cell * phi_w(iy, ix);
    }
  }
  return out;
}

std::vector<Eigen::Matrix2cd> cf_matrix_from_wigner(const WignerGrid& wigner,
                                                    const std::vector<Complex>& betas) {
  const CfMatrix cf(wigner);
  std::vector<Eigen::Matrix2cd> out;
  out.reserve(betas.size());
  for (Complex b : betas) out.push_back(cf(b));
  return out;
}

namespace {

MomentSet stencil_moments(const std::function<Complex(Complex)>& cf, double h) {
  std::map<std::pair<int, int>, Complex> cache;
  auto F = [&](int i, int j) {
    const auto key = std::make_pair(i, j);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const Complex v = cf(Complex{i * h, j * h});
    cache.emplace(key, v);
    return v;
  };
  const double h2 = h * h;
  auto lap = [&](int i, int j) {
    return (F(i + 1, j) + F(i - 1, j) + F(i, j + 1) + F(i, j - 1) - 4.0 * F(i, j)) / h2;
  };
  const Complex i1{0.0, 1.0};
  const Complex du = (F(1, 0) - F(-1, 0)) / (2.0 * h);
  const Complex dv = (F(0, 1) - F(0, -1)) / (2.0 * h);
  const Complex duu = (F(1, 0) - 2.0 * F(0, 0) + F(-1, 0)) / h2;
  const Complex dvv = (F(0, 1) - 2.0 * F(0, 0) + F(0, -1)) / h2;
  const Complex duv = (F(1, 1) - F(1, -1) - F(-1, 1) + F(-1, -1)) / (4.0 * h2);
  const Complex l0 = lap(0, 0);
  const Complex lu = (lap(1, 0) - lap(-1, 0)) / (2.0 * h);
  const Complex lv = (lap(0, 1) - lap(0, -1)) / (2.0 * h);
  const Complex ll = (lap(1, 0) + lap(-1, 0) + lap(0, 1) + lap(0, -1) - 4.0 * l0) / h2;

  MomentSet m;
  m.mean_a = -(du + i1 * dv) / 2.0;
  m.mean_a2 = (duu - dvv + 2.0 * i1 * duv) / 4.0;
  m.mean_n = -l0.real() / 4.0;
  m.mean_na = (lu + i1 * lv) / 8.0;
  m.mean_n2 = ll.real() / 16.0 + m.mean_n;
  return m;
}

}  // namespace

MomentSet moments_from_cf(const std::function<Complex(Complex)>& cf, double h, bool richardson) {
  if (!(h >= 1e-4 && h <= 1e-1)) throw StencilOutOfDomain("finite-difference step outside [1e-4, 1e-1]");
  const MomentSet coarse = stencil_moments(cf, h);
  if (!richardson) return coarse;
  if (h / 2.0 < 1e-4) throw StencilOutOfDomain("Richardson half step below 1e-4");
  const MomentSet fine = stencil_moments(cf, h / 2.0);
  auto ex = [](auto f, auto c) { return (4.0 * f - c) / 3.0; };
  MomentSet m;
  m.mean_a = ex(fine.mean_a, coarse.mean_a);
  m.mean_a2 = ex(fine.mean_a2, coarse.mean_a2);
  m.mean_n = ex(fine.mean_n, coarse.mean_n);
  m.mean_na = ex(fine.mean_na, coarse.mean_na);
  m.mean_n2 = ex(fine.mean_n2, coarse.mean_n2);
  return m;
}

QuasiProbMap PMatrixMaps::traced() const {
  QuasiProbMap map{grid, std::vector<double>(grid.size()), method, width};
  map.converged = converged;
  for (int k = 0; k < grid.size(); ++k) {
    const Complex v = blocks[0][k] + blocks[3][k];
    map.values[k] = v.real();
    map.max_imag_residue = std::max(map.max_imag_residue, std::abs(v.imag()));
  }
  return map;
}

PMatrixMaps p_matrix_series(const std::vector<RhoNNTable>& tables, const PhaseGrid& grid,
                            const FilterSpec& filter) {
  filter.validate();
  if (static_cast<int>(tables.size()) != grid.size())
    throw std::invalid_argument("p_matrix_series: one table per grid point required");
  PMatrixMaps maps{grid, {}, PMethod::series, filter.width};
  for (auto& b : maps.blocks) b.resize(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    const RhoNNTable& t = tables[k];
    if (std::abs(t.alpha - grid.point(k)) > 1e-12)
      throw std::invalid_argument("p_matrix_series: table alpha does not match grid point");
    auto series = [&](const CVector& v) {
      const SeriesResult s = witness_series(std::span<const Complex>(v.data(), v.size()), filter.width);
      maps.converged = maps.converged && s.converged();
      return s.value;
    };
    maps.blocks[0][k] = series(t.rho11);
    maps.blocks[1][k] = series(t.rho12);
    maps.blocks[2][k] = std::conj(maps.blocks[1][k]);
    maps.blocks[3][k] = series(t.rho22);
  }
  return maps;
}

PMatrixMaps p_matrix_integral(const CfMatrix& cf, const PhaseGrid& grid, const FilterSpec& filter) {
  PMatrixMaps maps{grid, {}, PMethod::integral, filter.width};
  maps.blocks[0] = fourier_to_phase_grid(cf.filtered_block(0, 0, filter), grid);
  maps.blocks[1] = fourier_to_phase_grid(cf.filtered_block(0, 1, filter), grid);
  maps.blocks[3] = fourier_to_phase_grid(cf.filtered_block(1, 1, filter), grid);
  maps.blocks[2].resize(grid.size());
  for (int k = 0; k < grid.size(); ++k) maps.blocks[2][k] = std::conj(maps.blocks[1][k]);
  return maps;
}

}  // namespace nljc
