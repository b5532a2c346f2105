// measurement.hpp - simulated reconstruction of the vibronic state from
// no-fluorescence probe cycles on the weak |1> <-> |2> transition.
//
// Pipeline: displaced diagonals rho_ij^{nn}(alpha) from probe statistics ->
// Wigner-function matrix -> characteristic-function matrix -> normally
// ordered moments, or -> regularized P-function matrix.
//
// Electronic index 0 is |1>, index 1 is |2>. Blocks are rho_ij = <i|rho|j>
// acting on the motional space.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "nljc/dynamics.hpp"
#include "nljc/fock.hpp"
#include "nljc/phasespace.hpp"

namespace nljc {

using RMatrix = Eigen::MatrixXd;

struct VibronicState {
  std::array<std::array<CMatrix, 2>, 2> blocks;

  /// |2><2| (x) rho.
  static VibronicState upper(const MotionalDensityMatrix& rho);

  int dim() const { return static_cast<int>(blocks[0][0].rows()); }
  double trace() const;
  /// rho_11 + rho_22 as a motional operator (not renormalized).
  CMatrix traced() const;
  /// True when rho_11, rho_12 and rho_21 vanish identically.
  bool upper_only() const;

  /// Shapes, Hermiticity of the diagonal blocks, rho_12 = rho_21^dagger within
  /// tol, and 0 < trace <= 1 + 1e-12. Throws DomainError.
  void validate(double tol = 1e-9) const;
};

/// D^dagger(alpha) rho_ij D(alpha) for every block, with the displacement
/// truncated to the state dimension. Requires |alpha|^2 <= n_max/4.
VibronicState displace_vibronic(const VibronicState& state, Complex alpha);

/// Probe rotation on span{|1,n>, |2,n>} for every n < dim, basis order (|1>, |2>):
///   [[cos t, -i sin t e^{i chi}], [-i sin t e^{-i chi}, cos t]],
/// t = kappa' f_0(n; eta) tau. chi is the phase of the probe laser; chi = 0
/// gives the plain -i sin t off-diagonals.
std::vector<Eigen::Matrix2cd> probe_unitary_blocks(double tau, const ModelParams& params,
                                                   double kappa_prime, int dim,
                                                   double probe_phase = 0.0);

struct ProbeOutcome {
  VibronicState dark;  // no fluorescence: |2><2| (x) <2|U rho U^dagger|2>
  CMatrix bright;      // <1|U rho U^dagger|1>, the fluorescing part
};

ProbeOutcome probe_outcome(const VibronicState& state, double tau, const ModelParams& params,
                           double kappa_prime, double probe_phase = 0.0);

/// Dark (no-fluorescence) branch of one probe cycle, left unnormalized.
VibronicState probe_cycle(const VibronicState& state, double tau, const ModelParams& params,
                          double kappa_prime, double probe_phase = 0.0);

struct ProbeSchedule {
  Complex displacement{};
  std::vector<double> times;  // tau_1 ... tau_K, units of 1/|kappa'|
  double kappa_prime = 1.0;
  double probe_phase = 0.0;  // phase of the first cycle's probe laser

  void validate() const;
};

/// Runs the schedule's cycles on the displaced state and returns the
/// probability of the all-dark record.
double dark_probability(const VibronicState& state, const ProbeSchedule& schedule,
                        const ModelParams& params);

enum class ElementSet {
  upper,  // rho_22^{nn} only; valid when the input has no |1> content
  all,    // rho_11^{nn}, rho_22^{nn}, Re and Im rho_12^{nn}
};

/// Linear map from the displaced diagonals to the dark probabilities of a
/// schedule family. Unknowns are ordered block by block:
/// upper: [rho22(0..N-1)], all: [rho11, rho22, Re rho12, Im rho12].
class ProbeDesign {
 public:
  /// Throws IllConditionedDesign when the family has fewer schedules than
  /// unknowns or a condition number >= max_condition.
  ProbeDesign(std::vector<ProbeSchedule> schedules, int dim, const ModelParams& params,
              ElementSet elements, double max_condition = 1e8);

  int dim() const noexcept { return dim_; }
  ElementSet elements() const noexcept { return elements_; }
  int unknowns() const noexcept { return static_cast<int>(matrix_.cols()); }
  const std::vector<ProbeSchedule>& schedules() const noexcept { return schedules_; }
  const RMatrix& matrix() const noexcept { return matrix_; }
  const RMatrix& pseudo_inverse() const noexcept { return pinv_; }
  double condition_number() const noexcept { return condition_; }

 private:
  std::vector<ProbeSchedule> schedules_;
  int dim_;
  ElementSet elements_;
  RMatrix matrix_;
  RMatrix pinv_;
  double condition_ = 0.0;
};

/// `count` single-cycle schedules with tau_j = j * tau_step, j = 1..count.
std::vector<ProbeSchedule> linear_schedule_family(int count, double tau_step,
                                                  double kappa_prime = 1.0);

/// Schedules with one or two cycles at uniformly random times over a window
/// long enough to resolve the closest pair of |f_0(n)| below dim (and random
/// probe phases when all blocks are wanted). Default family of the pipeline.
std::vector<ProbeSchedule> random_schedule_family(int dim, const ModelParams& params,
                                                  ElementSet elements, std::uint64_t seed,
                                                  double oversampling = 1.25,
                                                  double kappa_prime = 1.0);

struct ExtractionOptions {
  std::optional<long> shots;  // empty: ideal statistics
  std::uint64_t seed = 0;
};

/// Displaced diagonals at one alpha; rho21^{nn} = conj(rho12^{nn}).
struct RhoNNTable {
  Complex alpha{};
  CVector rho11, rho22, rho12;
  double residual_norm = 0.0;

  const CVector& block(int i, int j) const;  // (1,0) is not stored
  CVector element(int i, int j) const;
};

/// Exact dark probabilities, one row per schedule and one column per alpha.
RMatrix dark_probabilities(const VibronicState& state, const std::vector<Complex>& alphas,
                           const ProbeDesign& design);

/// Binomial dark-count frequencies. Schedule s draws from its own stream
/// seeded with (seed, s), one draw per alpha in column order.
RMatrix sample_frequencies(const RMatrix& probabilities, long shots, std::uint64_t seed);

/// Least-squares inversion of dark frequencies to displaced diagonals.
std::vector<RhoNNTable> reconstruct_rho_nn(const RMatrix& frequencies,
                                           const std::vector<Complex>& alphas,
                                           const ProbeDesign& design);

/// Reconstructs rho_ij^{nn}(alpha) for every alpha: exact probabilities,
/// optionally replaced by sampled frequencies, then inverted.
std::vector<RhoNNTable> extract_rho_nn(const VibronicState& state, const std::vector<Complex>& alphas,
                                       const ProbeDesign& design, const ExtractionOptions& opts = {});

RhoNNTable extract_rho_nn(const VibronicState& state, Complex alpha, const ProbeDesign& design,
                          const ExtractionOptions& opts = {});

/// Exact displaced diagonals at alpha on `rows` Fock rows. Throws
/// TruncationError when the rows lose more than 1e-12 of the trace.
RhoNNTable exact_rho_nn(const VibronicState& state, Complex alpha, int rows);

/// Fock rows needed to hold the displaced state at every alpha.
int required_rows(const VibronicState& state, const std::vector<Complex>& alphas);

/// Same, probed on the grid boundary, where the displacement is largest for
/// states localized inside the grid.
int required_rows(const VibronicState& state, const PhaseGrid& grid);

struct WignerMatrixSample {
  Complex alpha{};
  Eigen::Matrix2cd values;
};

/// (2/pi) sum_n (-1)^n rho_ij^{nn}. Throws TruncationError if the last stored
/// elements exceed tail_tol (raise it for shot-noise estimates).
WignerMatrixSample wigner_from_table(const RhoNNTable& table, double tail_tol = 1e-12);

/// Wigner matrix of the state at alpha, from exact displaced diagonals.
WignerMatrixSample wigner_matrix(const VibronicState& state, Complex alpha);

struct WignerGrid {
  PhaseGrid grid;
  std::vector<Eigen::Matrix2cd> values;  // row-major, see PhaseGrid
  Eigen::Matrix2cd block_traces;         // Tr rho_ij from the diagonals
};

WignerGrid wigner_grid(const std::vector<RhoNNTable>& tables, const PhaseGrid& grid,
                       double tail_tol = 1e-12);

/// Normally ordered characteristic-function matrix obtained from a sampled
/// Wigner matrix: Phi_ij(beta) = e^{|beta|^2/2} integral W_ij(alpha)
/// e^{beta alpha^* - beta^* alpha} d^2 alpha (Riemann sum on the grid).
class CfMatrix {
 public:
  /// Throws DomainError if Phi(0) misses the block traces by more than
  /// trace_tol, i.e. the grid does not capture the state.
  explicit CfMatrix(WignerGrid wigner, double trace_tol = 1e-6);

  /// DomainError for |beta| > 3.
  Eigen::Matrix2cd operator()(Complex beta) const;
  Complex traced(Complex beta) const;

  /// Filtered samples of block (i, j) on the filter's beta grid.
  FilteredCf filtered_block(int i, int j, const FilterSpec& filter) const;

  const WignerGrid& wigner() const noexcept { return wigner_; }

 private:
  WignerGrid wigner_;
};

std::vector<Eigen::Matrix2cd> cf_matrix_from_wigner(const WignerGrid& wigner,
                                                    const std::vector<Complex>& betas);

/// Normally ordered moments from a characteristic function by central finite
/// differences at beta = 0 with step h (beta = u + i v):
///   <a> = -(Phi_u + i Phi_v)/2, <a^2> = (Phi_uu - Phi_vv + 2i Phi_uv)/4,
///   <n> = -Lap Phi / 4, <a^dag a^2> = (d_u + i d_v) Lap Phi / 8,
///   <a^dag2 a^2> = Lap^2 Phi / 16.
/// Every stencil is O(h^2); with richardson the h and h/2 results are
/// combined to O(h^4). Throws StencilOutOfDomain unless h in [1e-4, 1e-1].
MomentSet moments_from_cf(const std::function<Complex(Complex)>& cf, double h = 0.02,
                          bool richardson = false);

struct PMatrixMaps {
  PhaseGrid grid;
  std::array<std::vector<Complex>, 4> blocks;  // (1,1), (1,2), (2,1), (2,2)
  PMethod method = PMethod::series;
  double width = 0.0;
  bool converged = true;

  const std::vector<Complex>& block(int i, int j) const { return blocks[2 * i + j]; }
  /// P_11 + P_22, the motional P function.
  QuasiProbMap traced() const;
};

/// Witness series per block from displaced diagonals sampled on `grid`.
PMatrixMaps p_matrix_series(const std::vector<RhoNNTable>& tables, const PhaseGrid& grid,
                            const FilterSpec& filter);

/// Filtered Fourier integral of the characteristic-function matrix, itself a
/// quadrature over the Wigner grid (nested quadrature).
PMatrixMaps p_matrix_integral(const CfMatrix& cf, const PhaseGrid& grid, const FilterSpec& filter);

}  // namespace nljc
