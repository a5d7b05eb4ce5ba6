#include <doctest.h>

#include <cmath>
#include <random>

#include "spinv/errors.hpp"
#include "spinv/kerr.hpp"

using namespace spinv;

namespace {

// Schwarzschild in Kerr-Schild form: eta + (2m/r) l l, l = (1, x/r, y/r, z/r)
Eigen::Matrix4d schwarzschild(double x, double y, double z, double m) {
  const double r = std::sqrt(x * x + y * y + z * z);
  Eigen::Vector4d l(1, x / r, y / r, z / r);
  Eigen::Matrix4d g = Eigen::Vector4d(-1, 1, 1, 1).asDiagonal();
  return g + (2 * m / r) * l * l.transpose();
}

std::vector<std::array<double, 2>> ring(double rho, int n) {
  std::vector<std::array<double, 2>> pts;
  for (int k = 0; k < n; ++k) {
    const double th = 0.5 * M_PI * (k + 0.5) / n;
    pts.push_back({rho * std::cos(th), rho * std::sin(th)});
  }
  return pts;
}

KerrInvariantOptions only(std::vector<std::string> labels) {
  KerrInvariantOptions o;
  o.coefficients = std::move(labels);
  return o;
}

}  // namespace

TEST_CASE("implicit radius") {
  const double a = 0.5;
  CHECK(kerr_r(1.2, 0, 0, a) == doctest::Approx(std::sqrt(1.44 - 0.25)).epsilon(1e-15));
  CHECK(kerr_r(0.3, 0.4, 0, a) == 0.0);   // on the ring
  CHECK(kerr_r(0.1, 0.2, 0, a) == 0.0);   // inside the disc
  CHECK(kerr_r(0.3, -0.4, 1.7, 0.0) == doctest::Approx(std::sqrt(0.09 + 0.16 + 2.89)).epsilon(1e-15));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3), ua(0.01, 0.99);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng), y = u(rng), z = i % 10 == 0 ? 1e-7 * u(rng) : u(rng), aa = ua(rng);
    const double r = kerr_r(x, y, z, aa);
    CHECK(r >= 0);
    worst = std::max(worst, kerr_r_residual(x, y, z, aa, r) / (1 + x * x + y * y + z * z));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("kerr-schild metric") {
  KerrParams p;
  // Schwarzschild limit
  for (double a : {0.0, 1e-12}) {
    p.a = a;
    for (auto q : std::vector<std::array<double, 3>>{{0, 0, 2.5}, {0.7, -0.3, 1.1}, {-2, 1, -0.4}}) {
      const auto k = kerr_metric(0, q[0], q[1], q[2], p);
      CHECK((k.g - schwarzschild(q[0], q[1], q[2], p.m)).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
  p = KerrParams{};

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  double ne = 0, ng = 0;
  int lorentz = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng), y = u(rng), z = u(rng);
    const auto k = kerr_metric(u(rng), x, y, z, p);
    ne = std::max(ne, k.null_eta);
    ng = std::max(ng, k.null_g);
    CHECK(k.g == k.g.transpose());
    if (i % 100 == 0) {
      // signature (-, +, +, +)
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(k.g);
      const auto ev = es.eigenvalues();
      lorentz += ev[0] < 0 && ev[1] > 0;
      CHECK(k.g.determinant() == doctest::Approx(-1).epsilon(1e-9));
    }
  }
  CHECK(ne <= 1e-12);
  CHECK(ng <= 1e-12);
  CHECK(lorentz == 100);

  // stationarity
  const auto g1 = kerr_metric(0.1, 0.4, 0.2, -0.7, p).g, g2 = kerr_metric(7.3, 0.4, 0.2, -0.7, p).g;
  CHECK(g1 == g2);

  CHECK_THROWS_AS(kerr_metric(0, 0.3, 0.4, 0, p), DomainError);
  CHECK_THROWS_AS(kerr_metric(0, 0.1, 0.1, 0, p), DomainError);

  // chart order (t, x, z, y)
  const auto gc = kerr_metric_chart({0.1, 0.4, -0.7, 0.2}, p);
  CHECK(gc(kAxisZ, kAxisY) == g1(3, 2));
  CHECK(gc(kAxisT, kAxisZ) == g1(0, 3));
  CHECK(gc(kAxisY, kAxisY) == g1(2, 2));
}

TEST_CASE("parameters and representative set") {
  KerrParams p;
  CHECK(p.r_plus() == doctest::Approx(1 + std::sqrt(3.0) / 2).epsilon(1e-15));
  CHECK(p.r_plus() * p.r_minus() == doctest::Approx(p.a * p.a).epsilon(1e-14));
  CHECK_THROWS_AS((KerrParams{1, 1, 0.01}).validate(), InputError);
  CHECK_THROWS_AS((KerrParams{1, 0.5, 0.5}).validate(), InputError);
  CHECK_THROWS_AS((KerrParams{-1, 0.5, 0.05}).validate(), InputError);

  const Chart c = representative_set(p, {4, 4, 8, 4});
  const double X = std::sqrt(2.0) / 4 + 0.05, Z = p.r_plus() + 0.05;
  CHECK(c.lo[kAxisX] == doctest::Approx(X / 8));
  CHECK(c.hi[kAxisY] == doctest::Approx(X - X / 8));
  CHECK(c.lo[kAxisZ] == doctest::Approx(-Z + Z / 8));
  CHECK(c.hi[kAxisT] == doctest::Approx(1 - 1.0 / 8));
  for (std::size_t n = 0; n < c.size(); ++n) CHECK(c.point(n)[kAxisZ] != 0.0);

  // the open box meets the ring and both horizons
  const auto L = kerr_loci(p);
  CHECK(p.a / std::sqrt(2.0) < X);
  CHECK(L.z_crossings("U0", p.a / std::sqrt(2.0), p.a / std::sqrt(2.0), -Z, Z).size() == 1);
  CHECK(L.z_crossings("U1", 0.01, 0.01, -Z, Z).size() == 2);
  CHECK(L.z_crossings("U2", 0.01, 0.01, -Z, Z).size() == 2);

  // continuity as a approaches m
  double prev = 0;
  for (double a : {0.99, 0.999, 0.9999}) {
    KerrParams q{1, a, 1e-3};
    const Chart cq = representative_set(q, {4, 4, 8, 4});
    if (prev > 0) CHECK(std::abs(cq.hi[kAxisZ] - prev) < 0.1);
    prev = cq.hi[kAxisZ];
  }
}

TEST_CASE("loci") {
  KerrParams p;
  const auto L = kerr_loci(p);
  const double Z = p.r_plus() + p.epsilon;
  REQUIRE(L.surfaces.size() == 6);

  // on the axis the horizons sit at z = +-r+ and +-r-
  auto u1 = L.z_crossings("U1", 0, 0, -Z, Z);
  REQUIRE(u1.size() == 2);
  CHECK(u1[1] == doctest::Approx(p.r_plus()).epsilon(1e-10));
  auto u2 = L.z_crossings("U2", 0, 0, -Z, Z);
  REQUIRE(u2.size() == 2);
  CHECK(u2[0] == doctest::Approx(-p.r_minus()).epsilon(1e-10));

  CHECK(L.z_crossings("U5", 0.6, 0.1, -Z, Z).size() == 1);
  CHECK(L.z_crossings("U5", 0.2, 0.1, -Z, Z).empty());
  CHECK(L.z_crossings("U0", 0.2, 0.1, -Z, Z).empty());

  // U4 crossings solve r y = a x; at most one crossing per half ray, each transversal
  for (auto xy : ring(0.3, 6)) {
    for (const char* name : {"U1", "U2", "U3", "U4", "U5"}) {
      const auto zs = L.z_crossings(name, xy[0], xy[1], -Z, Z);
      int up = 0, down = 0;
      for (double z : zs) {
        (z > 0 ? up : down)++;
        const auto& s = L.surface(name);
        const double h = 1e-6;
        CHECK(s.level(xy[0], xy[1], z - h) * s.level(xy[0], xy[1], z + h) < 0);
      }
      CHECK(up <= 1);
      CHECK(down <= 1);
      if (std::string(name) == "U4")
        for (double z : zs)
          CHECK(std::abs(kerr_r(xy[0], xy[1], z, p.a) * xy[1] - p.a * xy[0]) < 1e-10);
    }
  }

  // g00 rank-deficiency roots meet the horizons on the axis
  const auto coeffs = kerr_coefficients(p);
  const Chart axis = Chart::box({0.5, 0, -Z, 0}, {0.6, 1e-3, Z, 1e-3}, {4, 4, 512, 4});
  ClassifyOptions o;
  o.axis = kAxisZ;
  o.epsilon = p.epsilon;
  const auto loci = classify_loci(coeffs[0].coeff, axis, o);
  std::vector<double> o_roots;
  for (const auto& r : loci.rays[0].roots)
    if (r.kind == LocusKind::O) o_roots.push_back(r.x1);
  REQUIRE(o_roots.size() == 4);
  CHECK(o_roots[0] == doctest::Approx(-p.r_plus()).epsilon(1e-9));
  CHECK(o_roots[1] == doctest::Approx(-p.r_minus()).epsilon(1e-9));
}

TEST_CASE("coefficient table") {
  KerrParams p;
  const auto e = kerr_coefficients(p);
  REQUIRE(e.size() == 10);
  const std::array<int, 10> table = {12, 4, 4, 2, 2, 6, 6, 2, 6, 2};
  CHECK(kerr_index_table() == table);
  const std::vector<std::string> labels = {"g00", "g01", "g02", "g03", "g11", "g12", "g13", "g22", "g23", "g33"};
  for (std::size_t k = 0; k < 10; ++k) {
    CHECK(e[k].label == labels[k]);
    CHECK(e[k].designated_index == table[k]);
    CHECK(e[k].n_locus == "U0");
  }
  CHECK(e[0].o_loci == std::vector<std::string>{"U1", "U2"});
  CHECK(e[5].o_loci == std::vector<std::string>{"U3", "U4"});
  CHECK(e[4].o_loci.empty());

  // where the display is exact the split reproduces g (diagonal entries carry eta)
  const std::vector<double> q = {0.2, 0.3, 0.9, -0.4};
  const auto g = kerr_metric_chart(q, p);
  const int ax[4] = {kAxisT, kAxisX, kAxisY, kAxisZ};
  for (std::size_t k : {0, 1, 2, 3, 5, 9}) {
    const double v = e[k].coeff.g_plus(q) / e[k].coeff.g_minus(q);
    CHECK(v == doctest::Approx(g(ax[e[k].i], ax[e[k].j])).epsilon(1e-12));
  }
}

TEST_CASE("normal forms on the representative set") {
  KerrParams p;
  const Chart c = representative_set(p);
  const auto forms = kerr_normal_forms(p, c);
  REQUIRE(forms.size() == 10);
  for (std::size_t k = 0; k < 10; ++k) CHECK(forms[k].nf.index == kerr_index_table()[k]);

  // U^O empty for the diagonal spatial coefficients
  for (std::size_t k : {4, 7}) {
    CHECK(forms[k].nf.loci.count(LocusKind::O) == 0);
    CHECK(forms[k].nf.loci.count(LocusKind::Coalesced) == 0);
  }

  // g03: cos kappa sits at sqrt(2)/2 away from the loci
  const auto& f03 = forms[3].nf;
  for (std::size_t n = 0; n < c.size(); n += 7) {
    const double z = c.point(n)[kAxisZ];
    // roots are snapped to nodes, so widen the tube by one cell
    const std::size_t r = ray_of(c, kAxisZ, n);
    if (!f03.loci.in_tube(r, z - c.step(kAxisZ)) && !f03.loci.in_tube(r, z) && !f03.loci.in_tube(r, z + c.step(kAxisZ)))
      CHECK(std::cos(f03.kappa[n]) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  }

  // the table does not depend on the grid
  const auto coarse = kerr_normal_forms(p, representative_set(p, {4, 5, 2560, 5}));
  for (std::size_t k = 0; k < 10; ++k) CHECK(coarse[k].nf.index == forms[k].nf.index);

  const auto pf = build_kerr_preframe(p, c, forms);
  CHECK(pf.ok);
  CHECK(pf.min_off_tubes > 1e-8);
  for (std::size_t s = 0; s < 4; ++s)
    CHECK(pf.complement.sections[s].sup_distance(bundle_map(pf.frame.sections[s], c)) == 0.0);

  // inside the tubes the rank may drop, but never off them
  CHECK(pf.check.worst <= pf.min_off_tubes);
}

TEST_CASE("preframe toward smaller spin") {
  KerrParams p{1, 0.45, 0.05};
  const Chart c = representative_set(p, {4, 4, 1536, 4});
  const auto pf = build_kerr_preframe(p, c, kerr_normal_forms(p, c));
  CHECK(pf.ok);
  CHECK(pf.min_off_tubes > 1e-8);
}

TEST_CASE("invariants") {
  KerrParams p;
  // a ray outside the disc that misses U3 crosses no g01 locus
  auto reg = kerr_invariants(p, {{0.45, 0.3}}, only({"g01"}));
  REQUIRE(reg.size() == 1);
  CHECK(reg[0].matrix.degenerate);
  CHECK(reg[0].matrix.R.isZero(0));
  CHECK(reg[0].matrix.R.rows() == 2);

  // rotation pairs
  const auto pts = ring(0.3, 2);
  const auto inv = kerr_invariants(p, pts, only({"g00", "g13"}));
  REQUIRE(inv.size() == 4);
  CHECK((inv[0].matrix.R - inv[1].matrix.R).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK((inv[2].matrix.R - inv[3].matrix.R).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK(inv[0].label == "g00");
  CHECK(inv[1].point == std::vector<double>{pts[1][0], pts[1][1]});
  for (const auto& e : inv) {
    CHECK_FALSE(e.matrix.degenerate);
    CHECK((e.matrix.R - e.matrix.R.transpose()).cwiseAbs().maxCoeff() <= 1e-8);
  }

  // stationarity: exact equality under a shift of t
  auto o = only({"g03"});
  const auto base = kerr_invariants(p, {pts[0]}, o);
  o.t = 0.9;
  const auto shifted = kerr_invariants(p, {pts[0]}, o);
  CHECK(base[0].matrix.R == shifted[0].matrix.R);

  // sensitivity to the spin
  KerrParams q = p;
  q.a *= 1.01;
  const auto other = kerr_invariants(q, {pts[0]}, only({"g03"}));
  CHECK((other[0].matrix.R - base[0].matrix.R).cwiseAbs().maxCoeff() > 1e-6);

  // downstream failures carry the coefficient and point
  auto bad = only({"g00"});
  bad.z_nodes = 101;   // odd: z = 0 is a node, inside the disc r = 0
  try {
    kerr_invariants(p, {{0.1, 0.1}}, bad);
    FAIL("expected an error");
  } catch (const InputError& ex) {
    CHECK(std::string(ex.what()).find("g00 at (") != std::string::npos);
  }
  bad = KerrInvariantOptions{};
  bad.spectrum_gaps = 1;
  CHECK_THROWS_AS(kerr_invariants(p, {{0.1, 0.1}}, bad), InputError);
}
