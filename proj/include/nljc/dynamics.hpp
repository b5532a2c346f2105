// dynamics.hpp - detuned nonlinear Jaynes-Cummings dynamics of a trapped ion
// driven by a quantized (cavity) pump.
//
// Units: |kappa| = 1, hbar = 1. Frequencies are in units of |kappa|, times in
// units of 1/|kappa|. The ion starts in the excited electronic level |2>, the
// pump mode in the coherent state |beta0>, and the motion in either a
// coherent state |alpha0> or an explicit density matrix.

#pragma once

#include <array>
#include <variant>
#include <vector>

#include "nljc/fock.hpp"

namespace nljc {

struct ModelParams {
  double eta = 0.3;           // Lamb-Dicke parameter
  double delta_phi = 0.0;     // trap position relative to the laser wave (rad)
  int k_sideband = 0;         // driven sideband |n> <-> |n-k>
  double delta_omega = 20.0;  // detuning
  double nu = 5000.0;         // trap frequency
  double omega21 = 1e5;       // electronic transition frequency
  double kappa_phase = 0.0;   // arg(kappa); |kappa| = 1 by the unit convention
  Complex beta0{100.0, 0.0};  // pump coherent amplitude
  std::variant<Complex, MotionalDensityMatrix> motional_input{Complex{2.8284271247461903, 0.0}};

  /// omega_L = omega21 - k nu + delta_omega.
  double laser_frequency() const { return omega21 - k_sideband * nu + delta_omega; }

  /// Throws std::invalid_argument on eta <= 0, k < 0, or beta0 = 0.
  void validate() const;

  /// Parameter set of the criteria study: alpha0 = sqrt(8), eta = 0.3,
  /// delta_omega = 20, delta_phi = 0, nu = 5000, beta0 = 100.
  static ModelParams criteria_study(int k_sideband);
};

enum class Branch { plus, minus };

/// Dressed states |psi^pm_mn> = c^pm (|2,m,n> + alpha^pm |1,m+1,n+k>) with
/// energies omega^pm_mn.
struct EigenBranch {
  int m = 0;
  int n = 0;
  Complex rabi{};  // Omega_mn
  Complex alpha_plus{};
  Complex alpha_minus{};
  double c_plus = 0.0;
  double c_minus = 0.0;
  double omega_plus = 0.0;
  double omega_minus = 0.0;
  double splitting = 0.0;  // sqrt(delta_omega^2 + |Omega_mn|^2)
  bool degenerate = false;

  /// Components of the normalized eigenvector on (|2,m,n>, |1,m+1,n+k>).
  /// In the degenerate (uncoupled) limit these are the bare states.
  Eigen::Vector2cd eigenvector(Branch b) const;

  /// <2,m,n|psi><psi|2,m,n> = (c^pm)^2.
  double upper_weight(Branch b) const;
  /// <1,m+1,n+k|psi><psi|2,m,n> = (c^pm)^2 alpha^pm.
  Complex lower_weight(Branch b) const;
};

/// Poisson window over pump photon numbers m.
struct CavityWindow {
  int m_lo = 0;
  int m_hi = 0;
  std::vector<double> log_weights;  // renormalized over the window
  double covered_mass = 1.0;        // Poisson mass before renormalization

  int size() const noexcept { return m_hi - m_lo + 1; }
};

/// Diagonal element f_k(n; eta) of the mode function; real by construction.
double f_k_diag(int n, const ModelParams& params);

/// Omega_mn = 2 kappa sqrt(m+1) f_k(n; eta) sqrt((n+k)!/n!).
Complex rabi(int m, int n, const ModelParams& params);

EigenBranch eigen_branch(int m, int n, const ModelParams& params);

/// Window [max(0, floor(mu - s sigma)), ceil(mu + s sigma)] around the Poisson
/// mean mu = |beta0|^2, widened until at least `min_coverage` of the mass is
/// inside. Poisson tails are skewed for small |beta0|, so the s-sigma window
/// alone does not always meet the coverage target.
CavityWindow cavity_window(Complex beta0, double coverage_sigmas = 7.0,
                           double min_coverage = 1.0 - 1e-10);

/// Motional input state on the working cutoff.
MotionalDensityMatrix initial_motional_state(const ModelParams& params, const Truncation& trunc);

/// Evaluates the reduced motional state from the dressed-state solution at
/// many times. The dressed-state data are computed once at construction.
class MotionalPropagator {
 public:
  MotionalPropagator(const ModelParams& params, const Truncation& trunc,
                     double coverage_sigmas = 7.0);

  MotionalDensityMatrix at(double t) const;

  const MotionalDensityMatrix& initial_state() const noexcept { return rho0_; }
  const CavityWindow& window() const noexcept { return window_; }
  int degenerate_branches() const noexcept { return degenerate_count_; }

 private:
  struct BranchData {
    double half_splitting;
    double w2_plus, w2_minus;
    Complex w1_plus, w1_minus;
  };

  MotionalDensityMatrix rho0_;
  CavityWindow window_;
  std::vector<double> sqrt_weights_;
  std::vector<BranchData> branches_;  // [m_index * n_active + n]
  int dim_ = 0;
  int n_active_ = 0;
  int k_ = 0;
  double nu_ = 0.0;
  double delta_omega_ = 0.0;
  int degenerate_count_ = 0;
};

/// Reduced motional density matrix at time t (t0 = 0).
MotionalDensityMatrix reduced_rho(double t, const ModelParams& params, const Truncation& trunc);

/// Brute-force propagation of the full Hamiltonian on |i> (x) |m> (x) |n>.
class OracleEvolver {
 public:
  OracleEvolver(const ModelParams& params, int cavity_dim, int motional_dim);

  MotionalDensityMatrix at(double t) const;

  /// max |H - H^dagger| of the assembled Hamiltonian.
  double hermiticity_defect() const noexcept { return hermiticity_defect_; }
  int dim() const noexcept { return static_cast<int>(energies_.size()); }

 private:
  int cavity_dim_;
  int motional_dim_;
  RVector energies_;
  CMatrix eigenvectors_;
  CVector initial_in_eigenbasis_;
  double hermiticity_defect_ = 0.0;
};

MotionalDensityMatrix oracle_evolve(double t, const ModelParams& params, int cavity_dim,
                                    int motional_dim);

}  // namespace nljc
