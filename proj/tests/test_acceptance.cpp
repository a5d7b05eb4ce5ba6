// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oracles/courant_symbolic.hpp"
#include "oracles/elliptic_agm.hpp"
#include "oracles/fourier_hill.hpp"
#include "spinv/cartan.hpp"
#include "spinv/courant.hpp"
#include "spinv/dynamics.hpp"
#include "spinv/errors.hpp"
#include "spinv/hill.hpp"
#include "spinv/kerr.hpp"
#include "spinv/period_matrix.hpp"
#include "spinv/smoothing.hpp"

using namespace spinv;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // records a named quantity and whether it met its bound
  void expect(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [violated]");
  }
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double asym(const CMatrix& R) { return R.size() ? (R - R.transpose()).cwiseAbs().maxCoeff() : 0.0; }

double min_eig_imag(const CMatrix& R) {
  const Eigen::MatrixXd im = R.imag();
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(im).eigenvalues()(0);
}

HillPotential random_trig(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> a(3), b(3);
  for (auto& v : a) v = u(rng);
  for (auto& v : b) v = u(rng);
  return HillPotential::trigonometric(u(rng), a, b);
}

// ---- criteria ----

void free_spectrum(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = periodic_spectrum(HillPotential::constant(0), 5);
  const double dt = seconds_since(t0);
  double err = std::abs(s.lambda[0]);
  for (int i = 1; i <= 5; ++i)
    err = std::max({err, std::abs(s.gap_lo(i) - i * i * pi * pi), std::abs(s.gap_hi(i) - i * i * pi * pi)});
  o.expect(err <= 1e-9, "max |lambda - i^2 pi^2| = " + num(err));
  o.expect(dt < 1.0, "runtime " + num(dt) + " s");
}

void mathieu_oracle(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = periodic_spectrum(HillPotential::mathieu(), 4);
  const double dt = seconds_since(t0);
  const auto ev = oracle::periodic_spectrum(oracle::cosine_series(0, {2.0}), 64);
  double rel = 0;
  for (int i = 1; i <= 4; ++i) {
    const double w = ev[std::size_t(2 * i)] - ev[std::size_t(2 * i - 1)];
    rel = std::max(rel, std::abs(s.gap_width(i) - w) / w);
  }
  o.expect(rel <= 1e-7, "max relative gap-width deviation = " + num(rel));
  o.expect(dt < 10.0, "runtime " + num(dt) + " s");
}

void asymptotics(Outcome& o) {
  const auto q = HillPotential::mathieu();
  const auto s = periodic_spectrum(q, 15);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int i = 5; i <= 15; ++i) {
    const double d = std::abs(s.gap_hi(i) - i * i * pi * pi - q.mean);
    const double x = std::log(double(i)), y = std::log(d);
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  o.expect(std::abs(slope + 2) <= 0.3, "log-log slope = " + num(slope));
}

void sign_pattern(Outcome& o) {
  const std::vector<HillPotential> qs = {HillPotential::mathieu(),
                                         HillPotential::trigonometric(0.3, {1.0, -0.4}, {0.2})};
  const double want[9] = {2, -2, -2, 2, 2, -2, -2, 2, 2};
  double err = 0;
  for (const auto& q : qs) {
    const auto s = periodic_spectrum(q, 4);
    for (int i = 0; i <= 8; ++i) err = std::max(err, std::abs(discriminant(q, s.lambda[std::size_t(i)]) - want[i]));
  }
  o.expect(err <= 1e-8, "max |Delta(lambda_i) - (+-2)| over two potentials = " + num(err));
}

void interlacing(Outcome& o) {
  std::mt19937_64 rng(5);
  int checked = 0, ok = 0;
  for (int p = 0; p < 5; ++p) {
    const auto s = periodic_spectrum(random_trig(rng), 5);
    for (int i = 1; i <= 5; ++i) {
      ++checked;
      ok += s.gap_lo(i) <= s.mu[std::size_t(i - 1)] && s.mu[std::size_t(i - 1)] <= s.gap_hi(i);
    }
  }
  o.expect(ok == checked, std::to_string(ok) + "/" + std::to_string(checked) + " gaps interlace");
}

void genus_one(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto pm = period_matrix(CurveModel::from_branch_points({0, 1, 2, 3}));
  const double err = std::abs(pm.R(0, 0) - cplx(0, oracle::quartic_ratio(0, 1, 2, 3)));
  const auto sym = period_matrix(CurveModel::from_branch_points({0, 1, 2}));
  const double dt = seconds_since(t0);
  const double ei = std::abs(sym.R(0, 0) - cplx(0, 1));
  o.expect(err <= 1e-8, "|R11 - AGM| = " + num(err));
  o.expect(ei <= 1e-8, "symmetric |R11 - i| = " + num(ei));
  o.expect(dt < 5.0, "runtime " + num(dt) + " s");
}

void matrix_structure(Outcome& o) {
  std::vector<PeriodMatrix> mats;
  const auto ms = periodic_spectrum(HillPotential::mathieu(), 4);
  for (int m = 1; m <= 3; ++m) mats.push_back(period_matrix(truncate_curve(ms, m)));
  std::mt19937_64 rng(17);
  for (int p = 0; p < 3; ++p) mats.push_back(period_matrix(truncate_curve(periodic_spectrum(random_trig(rng), 4), 3)));
  std::uniform_real_distribution<double> u(0.2, 1.5);
  for (int g = 2; g <= 3; ++g) {
    std::vector<double> e{0.0};
    for (int k = 0; k < 2 * g; ++k) e.push_back(e.back() + u(rng));
    mats.push_back(period_matrix(CurveModel::from_branch_points(e)));
  }
  double worst_sym = 0, min_im = 1e300;
  int nondegenerate = 0;
  for (const auto& pm : mats) {
    if (pm.degenerate) continue;
    ++nondegenerate;
    worst_sym = std::max(worst_sym, asym(pm.R));
    min_im = std::min(min_im, min_eig_imag(pm.R));
  }
  const auto z = period_matrix(truncate_curve(periodic_spectrum(HillPotential::constant(0), 4), 3));
  const bool zero = z.degenerate && z.R.rows() == 3 && (z.R.array() == cplx(0, 0)).all();
  o.expect(worst_sym <= 1e-8, std::to_string(nondegenerate) + " matrices, max |R - R^T| = " + num(worst_sym));
  o.expect(min_im > 0, "min eig Im R = " + num(min_im));
  o.expect(zero, zero ? "all-closed input gives the exact zero matrix" : "all-closed input is not the zero matrix");
}

void its_matveev(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto c = truncate_curve(periodic_spectrum(HillPotential::mathieu(), 2), 1);
  const auto rec = its_matveev_reconstruct(c);
  const auto rs = periodic_spectrum(rec.potential(), 2);
  const double dt = seconds_since(t0);
  const double s = rec.period * rec.period;
  const double err = std::max(std::abs(rs.gap_lo(1) / s - c.branch[1]), std::abs(rs.gap_hi(1) / s - c.branch[2]));
  o.expect(err <= 1e-4, "first-gap edge deviation = " + num(err));
  o.expect(dt < 30.0, "runtime " + num(dt) + " s");
}

void smoothing_kernels(Outcome& o) {
  const auto k = make_deep_kernel(2.0, 3);
  double moments = 0;
  for (int dim : {1, 2, 3})
    for (double r : verify_depth(k, 3, dim)) moments = std::max(moments, r);
  o.expect(moments <= 1e-10, "moment residuals degrees 1-3 = " + num(moments));

  const auto c1 = Chart::box({0.0}, {1.0}, {801});
  const auto k4 = make_deep_kernel(4.0, 3);
  const int band = int(std::ceil(k4.radius() / c1.step(0)));
  double repro = 0;
  for (int p = 0; p <= 3; ++p) {
    const auto f = Field::sample(c1, [p](const std::vector<double>& x) { return std::pow(x[0] - 0.37, p); });
    const auto sf = smooth(f, k4);
    for (std::size_t i = 0; i < f.size(); ++i)
      if (c1.interior(i, band)) repro = std::max(repro, std::abs(sf.v[i] - f.v[i]));
  }
  o.expect(repro <= 1e-10, "degree <= 3 reproduction = " + num(repro));
  double cst = 0;
  for (double v : smooth(Field(c1, 2.5), k4).v) cst = std::max(cst, std::abs(v - 2.5));
  o.expect(cst <= 1e-12, "constant preservation = " + num(cst));
}

void kerr_regression(Outcome& o) {
  const std::array<int, 10> designated = {12, 4, 4, 2, 2, 6, 6, 2, 6, 2};
  const auto& table = kerr_index_table();
  bool table_ok = table == designated;
  const auto coeffs = kerr_coefficients(KerrParams{});
  for (std::size_t k = 0; k < coeffs.size(); ++k) table_ok = table_ok && coeffs[k].designated_index == designated[k];
  o.expect(table_ok, "designated-index table");

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3), ua(0.01, 0.99);
  double res = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng), y = u(rng), z = u(rng), a = ua(rng);
    res = std::max(res, kerr_r_residual(x, y, z, a, kerr_r(x, y, z, a)) / (1 + x * x + y * y + z * z));
  }
  o.expect(res <= 1e-12, "scaled r residual = " + num(res));
  double ne = 0, ng = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto m = kerr_metric(u(rng), u(rng), u(rng), u(rng), KerrParams{});
    ne = std::max(ne, m.null_eta);
    ng = std::max(ng, m.null_g);
  }
  o.expect(std::max(ne, ng) <= 1e-12, "null residuals eta " + num(ne) + ", g " + num(ng));
}

void kerr_invariance(Outcome& o) {
  const KerrParams p;
  const int n = 16;
  std::vector<std::array<double, 2>> ring;
  for (int k = 0; k < n; ++k) {
    const double th = 2 * pi * (k + 0.25) / n;
    ring.push_back({0.3 * std::cos(th), 0.3 * std::sin(th)});
  }
  KerrInvariantOptions opt;
  opt.coefficients = {"g00", "g03", "g13"};
  const auto inv = kerr_invariants(p, ring, opt);
  // the fit is the coarsest solver in the chain
  const double tol = 10 * 1e-9;
  double pair_dev = 0;
  for (std::size_t c = 0; c < opt.coefficients.size(); ++c)
    for (int k = 0; k < n / 2; ++k) {
      const auto& a = inv[c * n + std::size_t(k)].matrix.R;
      const auto& b = inv[c * n + std::size_t(k + n / 2)].matrix.R;
      pair_dev = std::max(pair_dev, (a - b).cwiseAbs().maxCoeff());
    }
  int at_edge = 0;
  for (const auto& e : inv) at_edge += e.fit_at_edge;
  // informational: an edge fit makes the matrix independent of the profile
  o.detail << (o.detail.tellp() > 0 ? "; " : "") << at_edge << "/" << inv.size() << " fits on the T grid edge";
  o.expect(pair_dev <= tol, "max deviation over " + std::to_string(n / 2 * 3) + " half-turn pairs = " + num(pair_dev));
  // neighbours differ by a 2 pi / 16 turn, which mixes the transverse components
  double ring_dev = 0;
  for (std::size_t c = 0; c < opt.coefficients.size(); ++c)
    for (int k = 0; k < n; ++k) {
      const auto& a = inv[c * n + std::size_t(k)].matrix.R;
      const auto& b = inv[c * n + std::size_t((k + 1) % n)].matrix.R;
      ring_dev = std::max(ring_dev, (a - b).cwiseAbs().maxCoeff());
    }
  o.expect(ring_dev <= tol, "max deviation over " + std::to_string(n * 3) + " neighbour pairs = " + num(ring_dev));

  KerrInvariantOptions later = opt;
  later.coefficients = {"g03"};
  KerrInvariantOptions now = later;
  later.t = 7.25;
  const auto a = kerr_invariants(p, {ring[0]}, now), b = kerr_invariants(p, {ring[0]}, later);
  const bool exact = a[0].spectrum == b[0].spectrum && a[0].matrix.R == b[0].matrix.R;
  o.expect(exact, exact ? "t-shift leaves spectra bit-identical" : "t-shift changed the spectrum");
}

void courant_layer(Outcome& o) {
  const Chart c4 = Chart::cube(4, -1, 1, 5);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> coef(8 * 5);
  for (auto& v : coef) v = u(rng);
  const auto s = CourantSection::sample(c4, [&](const std::vector<double>& x) {
    std::vector<double> v(8);
    for (int j = 0; j < 8; ++j) {
      v[std::size_t(j)] = coef[std::size_t(5 * j)];
      for (int b = 0; b < 4; ++b) v[std::size_t(j)] += coef[std::size_t(5 * j + b + 1)] * std::sin(2 * x[std::size_t(b)] + j);
    }
    return v;
  });
  const double sq = bundle_map(bundle_map(s, c4), c4).sup_distance(s * -1.0);
  o.expect(sq == 0.0, "|Phi^2 + Id| = " + num(sq));

  const oracle::AnalyticSection fa = [](const oracle::cvec& x) {
    return oracle::cvec{std::sin(x[1]), x[0] * x[1], x[0] * x[0], std::cos(x[0] + 0.3 * x[1])};
  };
  const oracle::AnalyticSection fb = [](const oracle::cvec& x) {
    return oracle::cvec{std::exp(0.5 * x[0]), std::complex<double>(1.0), x[1], x[0] * std::sin(x[1])};
  };
  bool anti_ok = true;
  std::string anti_txt;
  for (int n : {17, 33, 65}) {
    const Chart c = Chart::cube(2, -0.7, 0.9, n);
    auto sample = [&](const oracle::AnalyticSection& f) {
      return CourantSection::sample(c, [&](const std::vector<double>& x) { return oracle::real_values(f, x); });
    };
    const auto a = sample(fa), b = sample(fb);
    const double h = c.step(0);
    const double anti = (courant_bracket(a, b, c) + courant_bracket(b, a, c)).sup_distance(CourantSection::zero(c), 1);
    anti_ok = anti_ok && anti <= 1e-3 * h * h;
    anti_txt += (anti_txt.empty() ? "" : ", ") + num(anti / (h * h));
  }
  o.expect(anti_ok, "antisymmetry residual / h^2 at h, h/2, h/4 = " + anti_txt);

  bool dims = true;
  for (int dim : {2, 4}) {
    const Chart c = Chart::cube(dim, -1, 1, dim == 2 ? 9 : 6);
    const auto an = annihilator(Preframe::darboux(c), c);
    dims = dims && an.min_interior == dim && an.max_interior == dim;
  }
  o.expect(dims, "Dirac preframe annihilator dimension 2k at every interior node");
}

double w_of(int r, const Point& x) { return r == 0 ? 0.3 * std::sin(x[0] + 2 * x[1]) + 0.2 * x[3] : 0.1 * x[0] * x[2]; }
double k_of(int r, const Point& x) {
  return r == 0 ? 0.7 + 0.4 * std::cos(x[2] - x[3]) : 1.1 + 0.3 * std::sin(x[0] * x[1] + x[3]);
}

CoframeSpec smooth_spec(const Point& c = Point(4, 0.0)) {
  CoframeSpec s;
  s.k = 1;
  auto at = [c](const Point& y) {
    Point x = y;
    for (int a = 0; a < 4; ++a) x[std::size_t(a)] += c[std::size_t(a)];
    return x;
  };
  s.w = [at](int i, int, const Point& y) { return w_of(i, at(y)); };
  s.kappa = [at](int i, int, const Point& y) { return k_of(i, at(y)); };
  return s;
}

void torsion_layer(Outcome& o) {
  const Point mid(4, 0.5);
  double cst = 0;
  for (double kappa : {pi / 4, 0.3, 2.0}) {
    CoframeSpec s;
    s.k = 1;
    s.w = [](int, int, const Point&) { return 0.4; };
    s.kappa = [kappa](int, int, const Point&) { return kappa; };
    cst = std::max(cst, torsion(LiftedCoframe(s, Chart::cube(4, 0, 1, 9)), mid).matrix().cwiseAbs().maxCoeff());
  }
  o.expect(cst <= 1e-12, "constant coframe |gamma| = " + num(cst));

  double prev = 1e300, at64 = 0;
  bool decreasing = true;
  std::string txt;
  for (int n : {17, 33, 65, 129}) {
    const auto r = group_action_check(LiftedCoframe(smooth_spec(), Chart::cube(4, 0, 1, n)), {0.05, 0.0}, {mid});
    decreasing = decreasing && r.residual < prev;
    prev = r.residual;
    if (n == 65) at64 = r.residual;
    txt += (txt.empty() ? "" : ", ") + num(r.residual);
  }
  o.expect(at64 <= 5e-3, "translation-law residual at h = 1/64 = " + num(at64));
  o.expect(decreasing, "residuals under refinement " + txt);

  const LiftedCoframe cf(smooth_spec(), Chart::cube(4, 0, 1, 33));
  const std::vector<Point> s1 = {{0.5, 0.5, 0.5, 0.5}, {0.4, 0.55, 0.5, 0.45}, {0.6, 0.45, 0.4, 0.55}};
  const bool self = e_structure_equivalent(cf, s1, cf, {{0.3, 0.6, 0.45, 0.7}, {0.62, 0.41, 0.55, 0.35}}, 1e-6).equivalent;
  const Point c{0.03125, -0.0625, 0.09375, 0.0};
  Chart shifted = Chart::cube(4, 0, 1, 33);
  for (int a = 0; a < 4; ++a) shifted.lo[std::size_t(a)] -= c[std::size_t(a)], shifted.hi[std::size_t(a)] -= c[std::size_t(a)];
  const auto pb = e_structure_equivalent(cf, s1, LiftedCoframe(smooth_spec(c), shifted),
                                         {{0.45, 0.55, 0.4, 0.5}, {0.52, 0.6, 0.38, 0.47}}, 1e-6);
  o.expect(self, "self-equivalence");
  o.expect(pb.equivalent, "translated pullback equivalence, deviation " + num(pb.max_deviation));
}

void collapse_loop(Outcome& o) {
  const auto ref = fit_damping(simulate_collapse([](double) { return 0.2; }, 1, 0, 1e-3, 40));
  o.expect(std::abs(ref.F0 - 0.2) <= 0.05 * 0.2, "recovered F = " + num(ref.F0));
  const auto sig = polynomial_signature(ref, 1);
  o.expect(no_go_test(ref, sig).accept, "self accepted");
  const auto strong = fit_damping(simulate_collapse([](double) { return 0.3; }, 1, 0, 1e-3, 40));
  const auto r = no_go_test(strong, sig);
  o.expect(!r.accept, "1.5x damping " + std::string(r.accept ? "accepted" : "rejected"));
}

void evaporation(Outcome& o) {
  auto s = SpectralState::from_spectrum(periodic_spectrum(HillPotential::mathieu(), 4));
  const auto E = make_operator(OperatorKind::Emission, 0, {}, int(s.edges.size()));
  bool decreasing = true;
  auto prev = s.widths();
  for (int n = 1; n <= 6; ++n) {
    s = apply(E, s).state;
    const auto w = s.widths();
    for (std::size_t i = 0; i < w.size(); ++i) decreasing = decreasing && w[i] < prev[i];
    prev = w;
  }
  o.expect(decreasing, "6-fold emission strictly narrows every gap");

  const auto sweep = commutator_sweep(9, 200, 20261015);
  o.expect(sweep.fraction >= 0.95, "commutator norm > 1e-6 for " + std::to_string(sweep.above) + "/200 pairs");

  std::vector<EvaporationOperator> ops;
  for (int m = 0; m < 5; ++m) ops.push_back(make_operator(OperatorKind::Emission, 0.01 * m, {}, 9));
  auto mixed = ops;
  mixed[2] = inverse_partner(ops[2], ops[2].t);
  bool rejected = false;
  try {
    chronological_product(mixed);
  } catch (const InputError&) {
    rejected = true;
  }
  o.expect(rejected, "mixed-kind product rejected");

  const auto s0 = SpectralState::from_spectrum(periodic_spectrum(HillPotential::mathieu(), 4));
  const auto prod = chronological_product(ops);
  const auto back = apply_product(substitution_inverse(prod), apply_product(prod, s0));
  double trip = 0;
  for (std::size_t i = 0; i < s0.edges.size(); ++i) trip = std::max(trip, std::abs(back.edges[i] - s0.edges[i]));
  o.expect(trip <= 1e-8, "substitution-inverse round trip = " + num(trip));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"free-operator spectrum", free_spectrum},
      {"Mathieu gaps vs Fourier oracle", mathieu_oracle},
      {"eigenvalue asymptotics", asymptotics},
      {"discriminant sign pattern", sign_pattern},
      {"tied-spectrum interlacing", interlacing},
      {"genus-one period matrix", genus_one},
      {"period matrix structure", matrix_structure},
      {"Its-Matveev round trip", its_matveev},
      {"smoothing kernels", smoothing_kernels},
      {"Kerr regression", kerr_regression},
      {"Kerr invariance", kerr_invariance},
      {"Courant layer", courant_layer},
      {"torsion", torsion_layer},
      {"collapse loop", collapse_loop},
      {"evaporation algebra", evaporation},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.expect(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::printf("%s %2zu %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                seconds_since(t0), o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
