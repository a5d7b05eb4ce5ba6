#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles/elliptic_agm.hpp"
#include "spinv/errors.hpp"
#include "spinv/period_matrix.hpp"

using namespace spinv;
using std::numbers::pi;

namespace {

double asym(const CMatrix& R) { return (R - R.transpose()).cwiseAbs().maxCoeff(); }

double min_eig_imag(const CMatrix& R) {
  Eigen::MatrixXd im = R.imag();
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(im).eigenvalues()(0);
}

}  // namespace

TEST_CASE("genus one against the AGM oracle") {
  auto c = CurveModel::from_branch_points({0, 1, 2, 3});
  auto pm = period_matrix(c);
  REQUIRE(pm.genus == 1);
  const double want = oracle::quartic_ratio(0, 1, 2, 3);
  CHECK(std::abs(pm.R(0, 0) - cplx(0, want)) <= 1e-8);

  auto q = CurveModel::from_branch_points({-2.5, -0.3, 0.4, 4.0});
  CHECK(std::abs(period_matrix(q).R(0, 0) - cplx(0, oracle::quartic_ratio(-2.5, -0.3, 0.4, 4.0))) <=
        1e-8);
}

TEST_CASE("lemniscatic configuration has tau = i") {
  auto pm = period_matrix(CurveModel::from_branch_points({0, 1, 2}));
  CHECK(std::abs(pm.R(0, 0) - cplx(0, 1)) <= 1e-8);
  // harmonic quartic with mirror symmetry
  const double b = 3 + 2 * std::sqrt(2.0);
  auto q = period_matrix(CurveModel::from_branch_points({-b, -1, 1, b}));
  CHECK(std::abs(std::abs(q.R(0, 0)) - 1.0) <= 1e-8);
}

TEST_CASE("genus one normalization is a single reciprocal period") {
  auto c = CurveModel::from_branch_points({-3, -1, 1, 3});
  auto nb = normalized_basis(c);
  const auto a = a_period(c, 1, {1.0});
  CHECK(std::abs(nb.coeff(0, 0) * a - 1.0) < 1e-13);
  // odd monomial integrates to zero over the symmetric gap (-1, 1)
  CHECK(std::abs(a_period(c, 1, {0.0, 1.0})) < 1e-12);
}

TEST_CASE("genus two against direct tanh-sinh quadrature") {
  const std::vector<double> e{0, 1, 2, 3, 4};
  auto pm = period_matrix(CurveModel::from_branch_points(e));
  auto M = oracle::hyperelliptic_imag_period(e);
  CHECK((pm.R.imag() - M).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(pm.R.real().cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("symmetry and positivity on random curves") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> step(0.05, 3.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int g = 1 + trial % 3;
    std::vector<double> e{step(rng) - 2};
    for (int i = 0; i < 2 * g; ++i) e.push_back(e.back() + step(rng));
    auto pm = period_matrix(CurveModel::from_branch_points(e));
    CHECK(asym(pm.R) <= 1e-8);
    CHECK(min_eig_imag(pm.R) > 0);
  }
}

TEST_CASE("node doubling leaves periods unchanged") {
  auto c = CurveModel::from_branch_points({0, 0.5, 1.7, 2.0, 5.0});
  QuadratureOptions q1, q2;
  q2.nodes = 256;
  for (int i = 1; i <= 2; ++i) {
    for (int l = 0; l < 2; ++l) {
      std::vector<cplx> mono(l + 1, 0.0);
      mono[l] = 1.0;
      const cplx a1 = b_period(c, i, mono, q1), a2 = b_period(c, i, mono, q2);
      CHECK(std::abs(a1 - a2) <= 1e-9 * std::abs(a2));
    }
  }
}

TEST_CASE("near-touching branch points still converge") {
  // narrow gap next to a wide band, as produced by higher Mathieu gaps
  const std::vector<double> e{0, 10, 10 + 1e-7};
  auto pm = period_matrix(CurveModel::from_branch_points(e));
  auto M = oracle::hyperelliptic_imag_period(e);
  CHECK(std::abs(pm.R(0, 0).imag() - M(0, 0)) <= 1e-8 * M(0, 0));
}

TEST_CASE("truncation from spectra") {
  auto free = periodic_spectrum(HillPotential::constant(0.0), 4);
  auto c0 = truncate_curve(free, 2);
  CHECK(c0.genus == 0);
  auto z = period_matrix(c0);
  CHECK(z.degenerate);
  CHECK(z.R.rows() == 2);
  CHECK(z.R.cwiseAbs().maxCoeff() == 0.0);

  auto sb = periodic_spectrum(HillPotential::mathieu(), 4);
  auto c3 = truncate_curve(sb, 3);
  CHECK(c3.genus == 3);
  CHECK(c3.source_gaps == std::vector<int>{1, 2, 3});
  CHECK(c3.branch.size() == 7u);
  auto pm = period_matrix(c3);
  CHECK(asym(pm.R) <= 1e-8);
  CHECK(min_eig_imag(pm.R) > 0);

  auto c1 = truncate_curve(sb, 1);
  CHECK(c1.branch == std::vector<double>{sb.lambda[0], sb.lambda[1], sb.lambda[2]});
}

TEST_CASE("theta function identities") {
  CMatrix R(2, 2);
  R << cplx(0.1, 1.2), cplx(0.3, 0.4), cplx(0.3, 0.4), cplx(-0.2, 0.9);
  std::vector<cplx> z{cplx(0.13, 0.05), cplx(-0.4, 0.02)};
  const auto t0 = theta(z, R, 8);
  CHECK(t0.tail_bound < 1e-14);
  auto z1 = z;
  z1[1] += 1.0;
  CHECK(std::abs(theta(z1, R, 8).value - t0.value) < 1e-12);
  for (int j = 0; j < 2; ++j) {
    auto zb = z;
    for (int a = 0; a < 2; ++a) zb[a] += R(a, j);
    const cplx factor = std::exp(cplx(0, -2 * pi) * (z[j] + R(j, j) / 2.0));
    CHECK(std::abs(theta(zb, R, 10).value - factor * t0.value) < 1e-10);
  }

  CMatrix Ri(1, 1);
  Ri(0, 0) = cplx(0, 1);
  double direct = 0;
  for (int n = -50; n <= 50; ++n) direct += std::exp(-pi * n * n);
  CHECK(std::abs(theta({0.0}, Ri, 6).value - direct) < 1e-12);
  // theta_3(e^{-pi}) closed form
  CHECK(std::abs(direct - std::pow(pi, 0.25) / std::tgamma(0.75)) < 1e-14);
}

TEST_CASE("Its-Matveev round trip on the first Mathieu gap") {
  auto sb = periodic_spectrum(HillPotential::mathieu(), 2);
  auto c = truncate_curve(sb, 1);
  auto rec = its_matveev_reconstruct(c);
  CHECK(rec.periodicity_error < 1e-6);
  auto rs = periodic_spectrum(rec.potential(), 3);
  const double s = rec.period * rec.period;
  CHECK(std::abs(rs.lambda[0] / s - c.branch[0]) < 1e-8);
  CHECK(std::abs(rs.gap_lo(1) / s - c.branch[1]) < 1e-4);
  CHECK(std::abs(rs.gap_hi(1) / s - c.branch[2]) < 1e-4);
  // a one-gap potential: the next gaps are closed
  CHECK(rs.gap_width(2) / s < 1e-4);

  // a full lattice step in the offset changes nothing
  auto shifted = its_matveev_reconstruct(c, {1.0});
  double d = 0;
  for (std::size_t k = 0; k < rec.q.size(); ++k) d = std::max(d, std::abs(shifted.q[k] - rec.q[k]));
  CHECK(d < 1e-9);
}

TEST_CASE("Its-Matveev degenerate curve is constant") {
  auto free = periodic_spectrum(HillPotential::constant(2.0), 3);
  auto rec = its_matveev_reconstruct(truncate_curve(free, 1));
  for (double v : rec.q) CHECK(v == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("compare_invariants") {
  auto pm = period_matrix(CurveModel::from_branch_points({0, 1, 2}));
  auto pm2 = period_matrix(CurveModel::from_branch_points({0, 1, 2.1}));
  std::vector<InvariantEntry> a{{"g00", {0.1, 0.2}, pm}, {"g01", {0.1, 0.2}, pm}};
  std::vector<InvariantEntry> b{{"g01", {0.1, 0.2}, pm}, {"g00", {0.1, 0.2}, pm}};
  CHECK(compare_invariants(a, b, 1e-12).equal);
  b[0].matrix = pm2;
  auto r = compare_invariants(a, b, 1e-6);
  CHECK_FALSE(r.equal);
  CHECK(r.worst.find("g01") != std::string::npos);

  PeriodMatrix z;
  z.degenerate = true;
  z.truncation = 1;
  z.R = CMatrix::Zero(1, 1);
  CHECK(compare_invariants({{"g00", {0.0}, z}}, {{"g00", {0.0}, z}}, 0.0).equal);
  CHECK_FALSE(compare_invariants({{"g00", {0.0}, z}}, {{"g00", {0.0}, pm}}, 1e-3).equal);
}
