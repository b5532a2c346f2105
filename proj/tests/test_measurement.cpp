#include <doctest.h>

#include <cmath>
#include <random>

#include "nljc/criteria.hpp"
#include "nljc/errors.hpp"
#include "nljc/measurement.hpp"

using namespace nljc;

namespace {

const ModelParams kParams = ModelParams::criteria_study(0);

MotionalDensityMatrix coherent(Complex a, int n_max = 40) {
  return MotionalDensityMatrix::from_pure(coherent_vector(a, Truncation(n_max, 1e-12)));
}

MotionalDensityMatrix number(int n, int n_max = 20) {
  return MotionalDensityMatrix::from_pure(number_vector(n, Truncation(n_max, 1e-12)));
}

// (c1 |1> + c2 |2>) (x) |psi>: a vibronic state with electronic coherence.
VibronicState superposed(Complex c1, Complex c2, const FockAmplitudeVector& psi) {
  const CMatrix m = psi.amplitudes * psi.amplitudes.adjoint();
  VibronicState s;
  s.blocks[0][0] = std::norm(c1) * m;
  s.blocks[0][1] = c1 * std::conj(c2) * m;
  s.blocks[1][0] = c2 * std::conj(c1) * m;
  s.blocks[1][1] = std::norm(c2) * m;
  return s;
}

VibronicState random_diagonal(int dim, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RVector p(2 * dim);
  for (int i = 0; i < 2 * dim; ++i) p(i) = u(rng);
  p /= p.sum();
  VibronicState s;
  s.blocks[0][0] = p.head(dim).cast<Complex>().asDiagonal();
  s.blocks[1][1] = p.tail(dim).cast<Complex>().asDiagonal();
  s.blocks[0][1] = CMatrix::Zero(dim, dim);
  s.blocks[1][0] = CMatrix::Zero(dim, dim);
  return s;
}

double max_block_diff(const VibronicState& a, const VibronicState& b) {
  double d = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) d = std::max(d, (a.blocks[i][j] - b.blocks[i][j]).cwiseAbs().maxCoeff());
  return d;
}

double theta(int n, double tau, double kappa_prime = 1.0) {
  const double eta2 = kParams.eta * kParams.eta;
  return kappa_prime * laguerre_gen(n, 0, eta2) * std::exp(-eta2 / 2.0) * tau;
}

}  // namespace

TEST_CASE("VibronicState invariants") {
  const VibronicState s = VibronicState::upper(coherent(1.0));
  CHECK(s.trace() == doctest::Approx(1.0));
  CHECK(s.upper_only());
  CHECK_NOTHROW(s.validate());
  VibronicState bad = s;
  bad.blocks[0][1](0, 1) = 0.3;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  VibronicState big = s;
  big.blocks[1][1] *= 1.5;
  CHECK_THROWS_AS(big.validate(), DomainError);
}

TEST_CASE("displace_vibronic") {
  const VibronicState s = superposed({0.6, 0.0}, {0.0, 0.8}, coherent_vector(0.7, Truncation(40, 1e-12)));
  CHECK(max_block_diff(displace_vibronic(s, 0.0), s) < 1e-14);
  const Complex a{1.1, -0.9};
  CHECK(max_block_diff(displace_vibronic(displace_vibronic(s, a), -a), s) < 1e-8);

  const VibronicState vac = VibronicState::upper(coherent(0.0));
  for (Complex alpha : {Complex{0.5, 0.0}, Complex{1.0, 1.5}})
    CHECK(displace_vibronic(vac, alpha).blocks[1][1](0, 0).real() ==
          doctest::Approx(std::exp(-std::norm(alpha))).epsilon(1e-12));
  CHECK_THROWS_AS(displace_vibronic(vac, 4.0), TruncationError);
}

TEST_CASE("probe unitary blocks") {
  const int dim = 12;
  for (const auto& u : probe_unitary_blocks(0.0, kParams, 1.0, dim))
    CHECK((u - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() == 0.0);

  const double tau = 0.37;
  const auto blocks = probe_unitary_blocks(tau, kParams, 1.0, dim);
  for (int n = 0; n < dim; ++n) {
    const auto& u = blocks[n];
    CHECK((u.adjoint() * u - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(std::norm(u(1, 1)) == doctest::Approx(std::pow(std::cos(theta(n, tau)), 2)).epsilon(1e-14));
    CHECK(std::abs(u(0, 1) - Complex(0.0, -std::sin(theta(n, tau)))) < 1e-15);
  }

  // theta_n = pi/2 swaps |1,n> and |2,n>.
  const int n = 3;
  const double swap_tau = kPi / 2.0 / theta(n, 1.0);
  const auto s = probe_unitary_blocks(swap_tau, kParams, 1.0, dim)[n];
  CHECK(std::abs(s(0, 0)) < 1e-12);
  CHECK(std::abs(s(1, 0)) == doctest::Approx(1.0));
}

TEST_CASE("probe cycle conditioning") {
  const VibronicState up = VibronicState::upper(coherent(1.2));
  CHECK(max_block_diff(probe_cycle(up, 0.0, kParams, 1.0), up) == 0.0);

  const VibronicState n5 = VibronicState::upper(number(5));
  const double tau = 0.8;
  CHECK(probe_cycle(n5, tau, kParams, 1.0).trace() ==
        doctest::Approx(std::pow(std::cos(theta(5, tau)), 2)).epsilon(1e-13));

  const VibronicState s = superposed({0.6, 0.3}, {0.2, -0.7141428428542850}, coherent_vector({0.5, 0.5}, Truncation(30, 1e-12)));
  const ProbeOutcome o = probe_outcome(s, 0.9, kParams, 1.0, 0.4);
  CHECK(std::abs(o.dark.trace() + o.bright.trace().real() - s.trace()) < 1e-12);
  CHECK(o.dark.blocks[0][0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("one-cycle dark probability against explicit matrix algebra") {
  const int dim = 20;
  const VibronicState s = superposed({0.6, 0.3}, {0.2, -0.7141428428542850}, coherent_vector({0.5, 0.5}, Truncation(dim - 1, 1e-12)));
  const double tau = 1.3, chi = 0.7;
  // Full 2 dim x 2 dim unitary in the ordering (|1> block, |2> block).
  CMatrix u = CMatrix::Zero(2 * dim, 2 * dim);
  CMatrix rho(2 * dim, 2 * dim);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) rho.block(i * dim, j * dim, dim, dim) = s.blocks[i][j];
  for (int n = 0; n < dim; ++n) {
    const double t = theta(n, tau);
    u(n, n) = std::cos(t);
    u(dim + n, dim + n) = std::cos(t);
    u(n, dim + n) = Complex(0.0, -std::sin(t)) * std::polar(1.0, chi);
    u(dim + n, n) = Complex(0.0, -std::sin(t)) * std::polar(1.0, -chi);
  }
  const CMatrix out = u * rho * u.adjoint();
  const double expected = out.block(dim, dim, dim, dim).trace().real();
  CHECK(probe_cycle(s, tau, kParams, 1.0, chi).trace() == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("K cycles multiply the diagonal by cos^2 factors") {
  const int dim = 25;
  const std::vector<double> taus{0.4, 1.7, 2.9, 0.05};
  double worst = 0.0;
  for (unsigned seed : {1u, 2u, 3u}) {
    const VibronicState s = random_diagonal(dim, seed);
    const VibronicState first = probe_cycle(s, taus[0], kParams, 1.0);
    VibronicState cur = first;
    double prev = cur.trace();
    for (std::size_t q = 1; q < taus.size(); ++q) {
      cur = probe_cycle(cur, taus[q], kParams, 1.0);
      CHECK(cur.trace() <= prev + 1e-15);
      prev = cur.trace();
    }
    for (int n = 0; n < dim; ++n) {
      double factor = 1.0;
      for (std::size_t q = 1; q < taus.size(); ++q) factor *= std::pow(std::cos(theta(n, taus[q])), 2);
      worst = std::max(worst, std::abs(cur.blocks[1][1](n, n).real() - first.blocks[1][1](n, n).real() * factor));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("schedule validation and design conditioning") {
  ProbeSchedule empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
  ProbeSchedule neg;
  neg.times = {-1.0};
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);

  const ProbeDesign lin(linear_schedule_family(16, 2.0), 16, kParams, ElementSet::upper);
  CHECK(lin.condition_number() < 1e8);
  CHECK(lin.unknowns() == 16);
  CHECK_THROWS_AS(ProbeDesign(linear_schedule_family(16, 1.0), 16, kParams, ElementSet::upper),
                  IllConditionedDesign);
  CHECK_THROWS_AS(ProbeDesign(linear_schedule_family(15, 2.0), 16, kParams, ElementSet::upper),
                  IllConditionedDesign);

  const ProbeDesign rnd(random_schedule_family(120, kParams, ElementSet::all, 3), 120, kParams,
                        ElementSet::all);
  CHECK(rnd.unknowns() == 480);
  CHECK(rnd.condition_number() < 1e8);
}

TEST_CASE("design rows reproduce simulated dark probabilities") {
  const int dim = 30;
  const VibronicState s = superposed({0.6, 0.3}, {0.2, -0.7141428428542850}, coherent_vector({0.5, 0.5}, Truncation(dim - 1, 1e-12)));
  const ProbeDesign d(random_schedule_family(dim, kParams, ElementSet::all, 9), dim, kParams, ElementSet::all);
  const Complex alpha{0.3, -0.2};
  const RMatrix p = dark_probabilities(s, {alpha}, d);
  for (int k : {0, 7, 50}) {
    ProbeSchedule sch = d.schedules()[k];
    sch.displacement = alpha;
    CHECK(std::abs(dark_probability(s, sch, kParams) - p(k, 0)) < 1e-10);
  }
}

TEST_CASE("ideal extraction reproduces the displaced diagonals") {
  const VibronicState up = VibronicState::upper(coherent({1.0, 0.5}));
  const std::vector<Complex> alphas{{0.0, 0.0}, {0.7, -0.3}, {-1.5, 1.0}};
  const int rows = required_rows(up, alphas);
  const ProbeDesign d(random_schedule_family(rows, kParams, ElementSet::upper, 1), rows, kParams,
                      ElementSet::upper);
  const auto tables = extract_rho_nn(up, alphas, d);
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const RVector direct = displaced_diagonal(coherent({1.0, 0.5}), alphas[k]);
    const int n = std::min<int>(rows, direct.size());
    CHECK((tables[k].rho22.head(n).real() - direct.head(n)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(tables[k].residual_norm < 1e-10);
  }

  const VibronicState sup = superposed({0.6, 0.3}, {0.2, -0.7141428428542850}, coherent_vector({0.5, 0.5}, Truncation(30, 1e-12)));
  const int r2 = required_rows(sup, alphas);
  const ProbeDesign d2(random_schedule_family(r2, kParams, ElementSet::all, 2), r2, kParams, ElementSet::all);
  for (const Complex& a : alphas) {
    const RhoNNTable got = extract_rho_nn(sup, a, d2);
    const RhoNNTable ex = exact_rho_nn(sup, a, r2);
    CHECK((got.rho11 - ex.rho11).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((got.rho22 - ex.rho22).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((got.rho12 - ex.rho12).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((got.element(1, 0) - got.rho12.conjugate()).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(extract_rho_nn(sup, alphas[0], d), std::invalid_argument);
}

TEST_CASE("shot-noise error shrinks as one over root shots") {
  const VibronicState up = VibronicState::upper(coherent(0.8, 20));
  const std::vector<Complex> alphas{{0.2, 0.1}};
  const int rows = required_rows(up, alphas);
  const ProbeDesign d(random_schedule_family(rows, kParams, ElementSet::upper, 4, 4.0), rows, kParams,
                      ElementSet::upper);
  const RhoNNTable ex = exact_rho_nn(up, alphas[0], rows);
  auto rms_error = [&](long shots) {
    double acc = 0.0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
      const auto t = extract_rho_nn(up, alphas, d, {shots, static_cast<std::uint64_t>(100 + r)});
      acc += (t[0].rho22 - ex.rho22).squaredNorm();
    }
    return std::sqrt(acc / reps);
  };
  const double e4 = rms_error(10000), e6 = rms_error(1000000);
  const double ratio = e4 / e6;
  CHECK(ratio > 7.0);
  CHECK(ratio < 14.0);

  // Same seed, same draws.
  const auto a = extract_rho_nn(up, alphas, d, {10000, 5});
  const auto b = extract_rho_nn(up, alphas, d, {10000, 5});
  CHECK((a[0].rho22 - b[0].rho22).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Wigner matrix known values") {
  CHECK(wigner_matrix(VibronicState::upper(coherent(0.0)), 0.0).values(1, 1).real() ==
        doctest::Approx(2.0 / kPi).epsilon(1e-12));
  CHECK(wigner_matrix(VibronicState::upper(number(1)), 0.0).values(1, 1).real() ==
        doctest::Approx(-2.0 / kPi).epsilon(1e-12));
  const auto far = wigner_matrix(VibronicState::upper(coherent(0.5)), {4.5, -3.0}).values;
  CHECK(std::abs(far(0, 0) + far(1, 1)) < 1e-6);

  const VibronicState sup = superposed({0.6, 0.3}, {0.2, -0.7141428428542850}, coherent_vector({0.5, 0.5}, Truncation(30, 1e-12)));
  const auto w = wigner_matrix(sup, {0.4, 0.1}).values;
  CHECK(std::abs(w(0, 0).imag()) < 1e-10);
  CHECK(std::abs(w(1, 1).imag()) < 1e-10);
  CHECK(std::abs(w(0, 1) - std::conj(w(1, 0))) < 1e-12);

  RhoNNTable t;
  t.rho22 = CVector::Constant(8, 0.1);
  t.rho11 = t.rho12 = CVector::Zero(8);
  CHECK_THROWS_AS(wigner_from_table(t), TruncationError);
}

TEST_CASE("characteristic-function matrix from a sampled Wigner grid") {
  const Complex a0{0.6, -0.4};
  const VibronicState up = VibronicState::upper(coherent(a0));
  const PhaseGrid g(a0, 6.0, 49);
  std::vector<Complex> alphas;
  for (int i = 0; i < g.size(); ++i) alphas.push_back(g.point(i));
  std::vector<RhoNNTable> tables;
  const int rows = required_rows(up, g);
  for (const auto& a : alphas) tables.push_back(exact_rho_nn(up, a, rows));
  const CfMatrix cf(wigner_grid(tables, g));

  CHECK(std::abs(cf.traced(0.0) - 1.0) < 1e-6);
  double unit = 0.0, round_trip = 0.0;
  for (double r : {0.3, 0.9, 1.5})
    for (double ph : {0.0, 1.0, 2.5, 4.0}) {
      const Complex b = std::polar(r, ph);
      const Eigen::Matrix2cd m = cf(b);
      unit = std::max(unit, std::abs(std::abs(m(1, 1) / cf(0.0)(1, 1)) - 1.0));
      round_trip = std::max(round_trip, std::abs(cf.traced(b) - normal_cf(coherent(a0), b)));
    }
  CHECK(unit < 1e-4);
  CHECK(round_trip < 1e-4);
  CHECK_THROWS_AS(cf(3.5), DomainError);

  const auto many = cf_matrix_from_wigner(cf.wigner(), {0.2, Complex{0.0, 0.7}});
  CHECK(std::abs(many[1](1, 1) - cf(Complex{0.0, 0.7})(1, 1)) < 1e-14);
}

TEST_CASE("moments from characteristic-function stencils") {
  const double alpha = 1.3;
  const MotionalDensityMatrix rho = coherent(alpha);
  auto phi = [&](Complex b) { return normal_cf(rho, b); };
  const MomentSet m = moments_from_cf(phi, 0.02);
  CHECK(std::abs(2.0 * m.mean_a.real() - 2.0 * alpha) < 2e-3);
  CHECK(std::abs(m.mean_n - alpha * alpha) < 5e-3);

  const MomentSet r = moments_from_cf(phi, 0.02, true);
  const MomentSet d = moments_from_rho(rho);
  CHECK(std::abs(r.mean_a - d.mean_a) < 1e-6);
  CHECK(std::abs(r.mean_a2 - d.mean_a2) < 1e-6);
  CHECK(std::abs(r.mean_n - d.mean_n) < 1e-6);
  CHECK(std::abs(r.mean_na - d.mean_na) < 1e-5);
  CHECK(std::abs(r.mean_n2 - d.mean_n2) < 1e-4);

  CHECK_THROWS_AS(moments_from_cf(phi, 0.5), StencilOutOfDomain);
  CHECK_THROWS_AS(moments_from_cf(phi, 1e-5), StencilOutOfDomain);
}

TEST_CASE("P-matrix maps") {
  const PhaseGrid g(0.0, 1.0, 3);
  const FilterSpec f{1.5};
  const VibronicState vac = VibronicState::upper(coherent(0.0));
  std::vector<RhoNNTable> tables;
  for (int i = 0; i < g.size(); ++i) tables.push_back(exact_rho_nn(vac, g.point(i), required_rows(vac, g)));
  const PMatrixMaps maps = p_matrix_series(tables, g, f);
  CHECK(maps.block(1, 1)[4].real() == doctest::Approx(1.5 * 1.5 / (4.0 * kPi)).epsilon(1e-13));
  for (int k = 0; k < g.size(); ++k) {
    CHECK(std::abs(maps.block(0, 0)[k]) == 0.0);
    CHECK(std::abs(maps.block(0, 1)[k]) == 0.0);
    CHECK(std::abs(maps.block(1, 0)[k]) == 0.0);
  }

  const VibronicState sup = superposed({0.6, 0.3}, {0.2, -0.7141428428542850}, coherent_vector({0.5, 0.5}, Truncation(30, 1e-12)));
  const PhaseGrid g2({0.5, 0.5}, 2.0, 5);
  std::vector<RhoNNTable> t2;
  const int rows = required_rows(sup, g2);
  for (int i = 0; i < g2.size(); ++i) t2.push_back(exact_rho_nn(sup, g2.point(i), rows));
  const PMatrixMaps m2 = p_matrix_series(t2, g2, f);
  for (int k = 0; k < g2.size(); ++k) CHECK(std::abs(m2.block(0, 1)[k] - std::conj(m2.block(1, 0)[k])) < 1e-14);
}

TEST_CASE("traced P matrix matches the motional P function") {
  const MotionalDensityMatrix rho =
      reduced_rho(0.2, ModelParams::criteria_study(0), Truncation(64, 1e-10));
  const VibronicState up = VibronicState::upper(rho);
  const PhaseGrid g(Complex{std::sqrt(8.0), 0.0}, 4.0, 5);
  const FilterSpec f{1.5};
  std::vector<Complex> alphas;
  for (int i = 0; i < g.size(); ++i) alphas.push_back(g.point(i));
  const int rows = required_rows(up, g);
  const ProbeDesign d(random_schedule_family(rows, kParams, ElementSet::upper, 8), rows, kParams,
                      ElementSet::upper);
  const QuasiProbMap traced = p_matrix_series(extract_rho_nn(up, alphas, d), g, f).traced();
  const QuasiProbMap ref = p_omega_series_map(rho, g, f);
  for (int k = 0; k < g.size(); ++k) CHECK(std::abs(traced.values[k] - ref.values[k]) < 1e-3);
}
