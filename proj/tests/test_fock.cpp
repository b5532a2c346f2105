#include <doctest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "nljc/errors.hpp"
#include "nljc/fock.hpp"

using namespace nljc;

namespace {

// L_n^(k)(x) = sum_j (-1)^j C(n+k, n-j) x^j / j!, in long double.
long double laguerre_direct(int n, int k, long double x) {
  long double sum = 0.0L;
  for (int j = 0; j <= n; ++j) {
    long double binom = 1.0L;
    for (int i = 1; i <= n - j; ++i) binom *= static_cast<long double>(k + j + i) / i;
    long double term = binom;
    for (int i = 1; i <= j; ++i) term *= x / i;
    sum += (j % 2 == 0 ? 1.0L : -1.0L) * term;
  }
  return sum;
}

CMatrix random_density(int dim, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  CMatrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = {g(rng), g(rng)};
  CMatrix rho = a * a.adjoint();
  return rho / rho.trace().real();
}

}  // namespace

TEST_CASE("laguerre_gen closed forms") {
  for (int k : {0, 1, 3})
    for (double x : {0.0, 0.5, 3.0}) CHECK(laguerre_gen(0, k, x) == doctest::Approx(1.0));
  CHECK(laguerre_gen(1, 0, 0.09) == doctest::Approx(0.91).epsilon(1e-14));
  CHECK(laguerre_gen(2, 0, 0.09) == doctest::Approx(0.82405).epsilon(1e-14));
}

TEST_CASE("laguerre_gen matches the explicit polynomial sum") {
  double worst = 0.0;
  for (int n = 0; n <= 30; ++n)
    for (int k = 0; k <= 4; ++k)
      for (double x : {0.0, 0.09, 0.5, 1.3, 2.0, 3.7, 4.0}) {
        const long double ref = laguerre_direct(n, k, x);
        const double got = laguerre_gen(n, k, x);
        const double scale = std::max(1.0L, std::fabs(ref));
        worst = std::max(worst, static_cast<double>(std::fabs(got - ref) / scale));
      }
  CHECK(worst < 1e-10);
}

TEST_CASE("log_factorial_ratio") {
  CHECK(log_factorial_ratio(7, 0) == 0.0);
  CHECK(log_factorial_ratio(0, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(log_factorial_ratio(3, 2) == doctest::Approx(std::log(20.0)).epsilon(1e-15));
  const double big = log_factorial_ratio(1000000, 3);
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(std::log(1000001.0) + std::log(1000002.0) + std::log(1000003.0)));
}

TEST_CASE("coherent_vector") {
  const auto vac = coherent_vector(0.0, Truncation(10));
  CHECK(std::abs(vac.amplitudes(0) - 1.0) < 1e-15);
  CHECK(vac.amplitudes.tail(10).norm() == 0.0);

  const Truncation trunc(64, 1e-10);
  const auto psi = coherent_vector(std::sqrt(8.0), trunc);
  Eigen::Index arg = 0;
  psi.amplitudes.cwiseAbs().maxCoeff(&arg);
  // |alpha|^2 = 8 is an integer, so n = 7 and n = 8 tie exactly in modulus.
  CHECK((arg == 7 || arg == 8));
  CHECK(std::abs(psi.amplitudes(8)) == doctest::Approx(std::abs(psi.amplitudes(7))).epsilon(1e-12));
  CHECK(std::abs(psi.norm() - 1.0) < 1e-10);

  CHECK_THROWS_AS(coherent_vector(std::sqrt(8.0), Truncation(5, 1e-10)), TruncationError);
}

TEST_CASE("coherent_vector amplitudes follow the Poisson closed form") {
  const Complex alpha{1.1, -0.7};
  const auto psi = coherent_vector(alpha, Truncation(40, 1e-12));
  Complex ref = std::exp(-std::norm(alpha) / 2.0);
  for (int n = 0; n <= 40; ++n) {
    CHECK(std::abs(psi.amplitudes(n) - ref) < 1e-14);
    ref *= alpha / std::sqrt(n + 1.0);
  }
}

TEST_CASE("Truncation guards") {
  CHECK_THROWS_AS(Truncation(0), std::invalid_argument);
  CHECK_THROWS_AS(Truncation(5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Truncation(5, 1.0), std::invalid_argument);
}

TEST_CASE("displacement_matrix") {
  const Truncation trunc(64);
  CHECK((displacement_matrix(0.0, trunc) - CMatrix::Identity(65, 65)).cwiseAbs().maxCoeff() < 1e-15);

  const Complex alpha{1.3, 0.4};
  const CMatrix d = displacement_matrix(alpha, trunc);
  const CVector coh = coherent_vector(alpha, trunc).amplitudes;
  CHECK((d.col(0).head(32) - coh.head(32)).cwiseAbs().maxCoeff() < 1e-10);

  for (Complex a : {Complex{2.0, 0.0}, Complex{0.0, -1.5}, Complex{1.2, 1.4}}) {
    const CMatrix prod = displacement_matrix(a, trunc) * displacement_matrix(-a, trunc);
    CHECK((prod.topLeftCorner(32, 32) - CMatrix::Identity(32, 32)).cwiseAbs().maxCoeff() < 1e-8);
  }
  CHECK((d.adjoint() * d - CMatrix::Identity(65, 65)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(displacement_matrix(Complex{4.1, 0.0}, trunc), TruncationError);
}

TEST_CASE("displacement_elements agree with the matrix exponential of the generator") {
  const int big = 160;
  const CMatrix a = annihilation_matrix(big);
  for (Complex alpha : {Complex{0.8, -0.3}, Complex{-2.0, 1.0}}) {
    const CMatrix gen = alpha * a.adjoint() - std::conj(alpha) * a;
    const CMatrix expm = gen.exp();
    const CMatrix exact = displacement_elements(alpha, 40, 40);
    CHECK((expm.topLeftCorner(40, 40) - exact).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("moments_from_rho") {
  const Truncation trunc(40, 1e-12);
  const auto vac = MotionalDensityMatrix::from_pure(number_vector(0, trunc));
  const MomentSet m0 = moments_from_rho(vac);
  CHECK(std::abs(m0.mean_a) == 0.0);
  CHECK(std::abs(m0.mean_a2) == 0.0);
  CHECK(m0.mean_n == 0.0);
  CHECK(std::abs(m0.mean_na) == 0.0);
  CHECK(m0.mean_n2 == 0.0);

  const Complex alpha{1.2, -0.5};
  const MomentSet mc = moments_from_rho(MotionalDensityMatrix::from_pure(coherent_vector(alpha, trunc)));
  const double n = std::norm(alpha);
  CHECK(std::abs(mc.mean_a - alpha) < 1e-10);
  CHECK(std::abs(mc.mean_a2 - alpha * alpha) < 1e-10);
  CHECK(mc.mean_n == doctest::Approx(n).epsilon(1e-10));
  CHECK(std::abs(mc.mean_na - n * alpha) < 1e-10);
  CHECK(mc.mean_n2 == doctest::Approx(n * n + n).epsilon(1e-10));

  const MomentSet m1 = moments_from_rho(MotionalDensityMatrix::from_pure(number_vector(1, trunc)));
  CHECK(std::abs(m1.mean_a) < 1e-15);
  CHECK(m1.mean_n == doctest::Approx(1.0));
  CHECK(m1.mean_n2 == doctest::Approx(1.0));
}

TEST_CASE("moments_from_rho equals explicit operator products") {
  const int dim = 12;
  const MotionalDensityMatrix rho(random_density(dim, 5));
  const CMatrix a = annihilation_matrix(dim);
  const CMatrix ad = a.adjoint();
  const CMatrix& r = rho.matrix();
  const MomentSet m = moments_from_rho(rho);
  CHECK(std::abs(m.mean_a - (r * a).trace()) < 1e-12);
  CHECK(std::abs(m.mean_a2 - (r * a * a).trace()) < 1e-12);
  CHECK(std::abs(m.mean_n - (r * ad * a).trace().real()) < 1e-12);
  CHECK(std::abs(m.mean_na - (r * ad * a * a).trace()) < 1e-12);
  CHECK(std::abs(m.mean_n2 - (r * ad * a * ad * a).trace().real()) < 1e-12);
}

TEST_CASE("thermal state has Bose-Einstein factorial moments") {
  const double nbar = 0.7;
  const MomentSet m = moments_from_rho(thermal_rho(nbar, Truncation(80, 1e-12)));
  CHECK(m.mean_n == doctest::Approx(nbar).epsilon(1e-10));
  CHECK(m.mean_n2 == doctest::Approx(2 * nbar * nbar + nbar).epsilon(1e-10));
  CHECK(std::abs(m.mean_a) < 1e-15);
}

TEST_CASE("MotionalDensityMatrix invariants") {
  CMatrix bad = CMatrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(MotionalDensityMatrix{bad}, std::invalid_argument);

  const Truncation trunc(30, 1e-12);
  const auto rho = MotionalDensityMatrix::from_pure(coherent_vector(2.0, trunc));
  CHECK_NOTHROW(rho.validate(1e-10));
  CHECK_THROWS_AS(rho.resized(5, 1e-10), TruncationError);
  CHECK(rho.resized(50).dim() == 50);
  CHECK(rho.min_eigenvalue() > -1e-12);
}

TEST_CASE("trace_distance") {
  const Truncation trunc(3);
  const CMatrix p0 = MotionalDensityMatrix::from_pure(number_vector(0, trunc)).matrix();
  const CMatrix p1 = MotionalDensityMatrix::from_pure(number_vector(1, trunc)).matrix();
  CHECK(trace_distance(p0, p1) == doctest::Approx(1.0));
  CHECK(trace_distance(p0, p0) == doctest::Approx(0.0));
  CHECK(trace_distance(p0, 0.5 * (p0 + p1)) == doctest::Approx(0.5));
}
