//Copyright (c) 2026, spinv authors
//
//Licensed under the Apache License, Version 2.0 (the "License");
//you may not use this file except in compliance with the License.
//You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
//Unless required by applicable law or agreed to in writing, software
//distributed under the License is distributed on an "AS IS" BASIS,
//WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//See the License for the specific language governing permissions and
//limitations under the License.

#include "spinv/cartan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "spinv/errors.hpp"

namespace spinv {

namespace {

// Each coefficient is sign * e^w * (cos or sin) kappa.
struct Slot {
  int row, col, pair_i, pair_j;
  bool use_sin;
  double sign;
};

std::vector<Slot> layout(int k) {
  std::vector<Slot> s;
  const int K = 2 * k;
  for (int i = 0; i < K; ++i) {
    const int j0 = i < k ? 0 : k;
    for (int j = j0; j < j0 + k; ++j) {
      if (i < k) {
        s.push_back({i, j, i, j, false, 1});
        s.push_back({i, j + K, i, j, true, 1});
        s.push_back({i + K, j, i, j, true, -1});
        s.push_back({i + K, j + K, i, j, false, 1});
      } else {
        s.push_back({i, j, i, j, true, 1});
        s.push_back({i, j + K, i, j, false, -1});
        s.push_back({i + K, j, i, j, false, 1});
        s.push_back({i + K, j + K, i, j, true, 1});
      }
    }
  }
  return s;
}

Point shifted(const Point& x, int l, double d) {
  Point y = x;
  y[l] += d;
  return y;
}

int numerical_rank(const Eigen::MatrixXd& M, double threshold) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  const double cut = threshold * std::max(1.0, sv.size() ? sv(0) : 0.0);
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++r;
  return r;
}

}  // namespace

CoframeSpec prolong(int k, const PairField& w_base, const PairField& kappa_base) {
  if (k < 1) throw InputError("prolong: k must be positive");
  auto base = [k](const Point& x) { return Point(x.begin(), x.begin() + 2 * k); };
  CoframeSpec s;
  s.k = k;
  s.w = [w_base, base](int i, int j, const Point& x) { return w_base(i, j, base(x)); };
  s.kappa = [kappa_base, base](int i, int j, const Point& x) { return kappa_base(i, j, base(x)); };
  return s;
}

Chart fiber_chart(const Chart& base, double c, int samples) {
  base.require_symplectic();
  if (!(c > 0) || samples < 2) throw InputError("fiber_chart: need c > 0 and at least two samples");
  auto lo = base.lo, hi = base.hi;
  auto n = base.n;
  for (int a = 0; a < base.dim; ++a) {
    lo.push_back(-c);
    hi.push_back(c);
    n.push_back(samples);
  }
  return Chart::box(lo, hi, n);
}

LiftedCoframe::LiftedCoframe(CoframeSpec spec, Chart chart) : spec_(std::move(spec)), chart_(std::move(chart)) {
  if (spec_.k < 1) throw InputError("coframe: k must be positive");
  if (chart_.dim != 4 * spec_.k)
    throw InputError("coframe: chart dimension " + std::to_string(chart_.dim) + " is not 4k = " +
                     std::to_string(4 * spec_.k));
  if (!spec_.w || !spec_.kappa) throw InputError("coframe: missing w or kappa");
}

Eigen::MatrixXd LiftedCoframe::A(const Point& x) const {
  const int N = n();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(N, N);
  for (const auto& s : layout(spec_.k)) {
    const double e = std::exp(spec_.w(s.pair_i, s.pair_j, x));
    const double kp = spec_.kappa(s.pair_i, s.pair_j, x);
    a(s.row, s.col) = s.sign * e * (s.use_sin ? std::sin(kp) : std::cos(kp));
  }
  return a;
}

Eigen::MatrixXd LiftedCoframe::b(const Point& x) const {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A(x));
  if (!lu.isInvertible()) throw NumericError("coframe: singular coefficient matrix");
  return lu.inverse();
}

bool LiftedCoframe::interior(const Point& x) const {
  if (int(x.size()) != chart_.dim) return false;
  for (int a = 0; a < chart_.dim; ++a) {
    const double h = chart_.step(a), slack = 1e-9 * h;
    if (x[a] - h < chart_.lo[a] - slack || x[a] + h > chart_.hi[a] + slack) return false;
  }
  return true;
}

Eigen::MatrixXd LiftedCoframe::dA(const Point& x, int l) const {
  const int N = n();
  const double h = chart_.step(l);
  const Point xp = shifted(x, l, h), xm = shifted(x, l, -h);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(N, N);
  for (const auto& s : layout(spec_.k)) {
    const double w = spec_.w(s.pair_i, s.pair_j, x), kp = spec_.kappa(s.pair_i, s.pair_j, x);
    const double dw = (spec_.w(s.pair_i, s.pair_j, xp) - spec_.w(s.pair_i, s.pair_j, xm)) / (2 * h);
    const double dk = (spec_.kappa(s.pair_i, s.pair_j, xp) - spec_.kappa(s.pair_i, s.pair_j, xm)) / (2 * h);
    const double e = std::exp(w), c = std::cos(kp), sn = std::sin(kp);
    // e^w (dw cos - dk sin) and e^w (dw sin + dk cos)
    d(s.row, s.col) = s.sign * e * (s.use_sin ? dw * sn + dk * c : dw * c - dk * sn);
  }
  return d;
}

Eigen::MatrixXd LiftedCoframe::dA_direct(const Point& x, int l) const {
  const double h = chart_.step(l);
  return (A(shifted(x, l, h)) - A(shifted(x, l, -h))) / (2 * h);
}

LiftedCoframe LiftedCoframe::rotated(const std::function<double(int i, const Point&)>& beta) const {
  CoframeSpec s = spec_;
  auto kap = spec_.kappa;
  s.kappa = [kap, beta](int i, int j, const Point& x) { return kap(i, j, x) + beta(i, x); };
  return LiftedCoframe(s, chart_);
}

CoframeMatrices lift_coframe(const LiftedCoframe& cf, int band) {
  const Chart& ch = cf.chart();
  CoframeMatrices out;
  out.b.resize(ch.size());
  out.min_abs_det = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ch.size(); ++i) {
    const auto x = ch.point(i);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(cf.A(x));
    const double det = std::abs(lu.determinant());
    if (ch.interior(i, band)) {
      if (!(det > 1e-300) || !std::isfinite(det)) {
        std::ostringstream os;
        os << "lift_coframe: singular coframe at node " << i;
        throw NumericError(os.str());
      }
      out.min_abs_det = std::min(out.min_abs_det, det);
    }
    if (det > 1e-300 && std::isfinite(det)) out.b[i] = lu.inverse();
  }
  return out;
}

int pair_index(int u, int v, int n) {
  if (!(0 <= u && u < v && v < n)) throw InputError("pair_index: need 0 <= u < v < n");
  return u * (2 * n - u - 1) / 2 + (v - u - 1);
}

std::pair<int, int> pair_of(int p, int n) {
  for (int u = 0; u < n; ++u) {
    const int row = n - u - 1;
    if (p < row) return {u, u + 1 + p};
    p -= row;
  }
  throw InputError("pair_of: index out of range");
}

Eigen::MatrixXd compound_minors(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw InputError("compound_minors: matrix must be square");
  const int n = int(M.rows()), P = n * (n - 1) / 2;
  Eigen::MatrixXd C(P, P);
  for (int r = 0; r < P; ++r) {
    const auto [u, v] = pair_of(r, n);
    for (int c = 0; c < P; ++c) {
      const auto [i, j] = pair_of(c, n);
      C(r, c) = M(u, i) * M(v, j) - M(u, j) * M(v, i);
    }
  }
  return C;
}

TorsionTensor::TorsionTensor(int k, Eigen::MatrixXd values) : k_(k), g_(std::move(values)) {
  const int n = 4 * k;
  if (g_.rows() != n || g_.cols() != n * (n - 1) / 2) throw InputError("torsion: shape mismatch");
}

double TorsionTensor::operator()(int i, int m, int s) const {
  if (m == s) return 0.0;
  return m < s ? g_(i, pair_index(m, s, n())) : -g_(i, pair_index(s, m, n()));
}

bool TorsionTensor::absorbed(int m, int s) const {
  if (m > s) std::swap(m, s);
  return s == m + 2 * k_;
}

std::vector<double> TorsionTensor::retained() const {
  std::vector<double> out;
  const int N = n();
  for (int i = 0; i < N; ++i)
    for (int p = 0; p < int(g_.cols()); ++p) {
      const auto [m, s] = pair_of(p, N);
      if (!absorbed(m, s)) out.push_back(g_(i, p));
    }
  return out;
}

std::vector<std::string> TorsionTensor::retained_labels() const {
  std::vector<std::string> out;
  const int N = n();
  for (int i = 0; i < N; ++i)
    for (int p = 0; p < int(g_.cols()); ++p) {
      const auto [m, s] = pair_of(p, N);
      if (!absorbed(m, s)) out.push_back("g^" + std::to_string(i) + "_" + std::to_string(m) + "," + std::to_string(s));
    }
  return out;
}

namespace {

template <class DA>
TorsionTensor torsion_with(const LiftedCoframe& cf, const Point& x, DA&& dA) {
  if (!cf.interior(x)) throw DomainError("torsion: difference stencil leaves the chart");
  const int N = cf.n(), P = N * (N - 1) / 2;
  std::vector<Eigen::MatrixXd> d(N);
  for (int l = 0; l < N; ++l) d[l] = dA(x, l);
  // dPsi_i = sum_{l<j} F^i_lj dx_l ^ dx_j
  Eigen::MatrixXd F(N, P);
  for (int p = 0; p < P; ++p) {
    const auto [l, j] = pair_of(p, N);
    for (int i = 0; i < N; ++i) F(i, p) = d[l](i, j) - d[j](i, l);
  }
  return TorsionTensor(cf.k(), F * compound_minors(cf.b(x)));
}

}  // namespace

TorsionTensor torsion(const LiftedCoframe& cf, const Point& x) {
  return torsion_with(cf, x, [&](const Point& y, int l) { return cf.dA(y, l); });
}

TorsionTensor torsion_direct(const LiftedCoframe& cf, const Point& x) {
  return torsion_with(cf, x, [&](const Point& y, int l) { return cf.dA_direct(y, l); });
}

double closure_residual(const LiftedCoframe& cf, const Point& x) {
  const int N = cf.n();
  const Chart& ch = cf.chart();
  auto F = [&](const Point& y) -> Eigen::MatrixXd {
    return torsion(cf, y).matrix() * compound_minors(cf.A(y));
  };
  std::vector<Eigen::MatrixXd> dF(N);
  for (int p = 0; p < N; ++p) {
    const double h = ch.step(p);
    dF[p] = (F(shifted(x, p, h)) - F(shifted(x, p, -h))) / (2 * h);
  }
  double worst = 0;
  for (int i = 0; i < N; ++i)
    for (int l = 0; l < N; ++l)
      for (int j = l + 1; j < N; ++j)
        for (int p = j + 1; p < N; ++p) {
          const double r = dF[p](i, pair_index(l, j, N)) + dF[l](i, pair_index(j, p, N)) -
                           dF[j](i, pair_index(l, p, N));
          worst = std::max(worst, std::abs(r));
        }
  return worst;
}

GroupActionResult group_action_check(const LiftedCoframe& cf, const std::vector<double>& beta,
                                     const std::vector<Point>& points) {
  const int k = cf.k(), K = 2 * k, N = cf.n(), P = N * (N - 1) / 2;
  if (int(beta.size()) != K) throw InputError("group_action_check: need one angle per block (2k)");
  auto profile = [](const Point& x) {
    double s = 0;
    for (double v : x) s += v;
    return 1 + std::sin(s);
  };
  auto angle = [beta, profile](int i, const Point& x) { return beta[std::size_t(i)] * profile(x); };
  const LiftedCoframe rot = cf.rotated(angle);

  GroupActionResult out;
  out.tau = Eigen::MatrixXd::Zero(N, P);
  for (const auto& x : points) {
    const Eigen::MatrixXd g = torsion(cf, x).matrix();
    const Eigen::MatrixXd gr = torsion(rot, x).matrix();
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i < K; ++i) {
      const double c = std::cos(angle(i, x)), s = std::sin(angle(i, x));
      R(i, i) = c;
      R(i, i + K) = s;
      R(i + K, i) = -s;
      R(i + K, i + K) = c;
    }
    // Maurer-Cartan part: d beta_i ^ Psi'_{i+2k} on row i, -d beta_i ^ Psi'_i on row i+2k
    const Eigen::MatrixXd Bp = rot.b(x);
    Eigen::MatrixXd tau = Eigen::MatrixXd::Zero(N, P);
    auto wedge = [&](int row, const Eigen::RowVectorXd& a, int c, double sign) {
      for (int m = 0; m < N; ++m) {
        if (m == c) continue;
        if (m < c) tau(row, pair_index(m, c, N)) += sign * a(m);
        else tau(row, pair_index(c, m, N)) -= sign * a(m);
      }
    };
    for (int i = 0; i < K; ++i) {
      // exact gradient, so the residual measures the differencing error
      double sum = 0;
      for (double v : x) sum += v;
      const Eigen::RowVectorXd grad = Eigen::RowVectorXd::Constant(N, beta[std::size_t(i)] * std::cos(sum));
      const Eigen::RowVectorXd a = grad * Bp;
      wedge(i, a, i + K, 1);
      wedge(i + K, a, i, -1);
    }
    const Eigen::MatrixXd pred = R * g * compound_minors(R.transpose()) + tau;
    out.residual = std::max(out.residual, (gr - pred).cwiseAbs().maxCoeff());
    out.translation = std::max(out.translation, tau.cwiseAbs().maxCoeff());
    out.change = std::max(out.change, (gr - g).cwiseAbs().maxCoeff());
    out.tau = tau;
  }
  return out;
}

namespace {

// Entries of exactly derivative level d at x.
std::vector<double> level_values(const LiftedCoframe& cf, int d, const Point& x) {
  if (d == 0) return torsion(cf, x).retained();
  const int N = cf.n();
  const Chart& ch = cf.chart();
  std::vector<std::vector<double>> grad(N);
  for (int u = 0; u < N; ++u) {
    const double h = ch.step(u);
    const auto p = level_values(cf, d - 1, shifted(x, u, h));
    const auto m = level_values(cf, d - 1, shifted(x, u, -h));
    grad[u].resize(p.size());
    for (std::size_t f = 0; f < p.size(); ++f) grad[u][f] = (p[f] - m[f]) / (2 * h);
  }
  const Eigen::MatrixXd B = cf.b(x);
  const std::size_t F = grad[0].size();
  std::vector<double> out(F * std::size_t(N));
  for (std::size_t f = 0; f < F; ++f)
    for (int l = 0; l < N; ++l) {
      double s = 0;
      for (int u = 0; u < N; ++u) s += grad[u][f] * B(u, l);
      out[f * N + l] = s;
    }
  return out;
}

std::vector<double> all_values(const LiftedCoframe& cf, int depth, const Point& x) {
  std::vector<double> out;
  for (int d = 0; d <= depth; ++d) {
    const auto v = level_values(cf, d, x);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

std::size_t level_size(const LiftedCoframe& cf, int depth) {
  const std::size_t N = std::size_t(cf.n());
  std::size_t size = N * (N * (N - 1) / 2 - 2 * std::size_t(cf.k())), total = 0;
  for (int d = 0; d <= depth; ++d, size *= N) total += size;
  return total;
}

// Rows: entries of F_depth, columns: d/dx_u.
Eigen::MatrixXd value_gradients(const LiftedCoframe& cf, int depth, const Point& x) {
  const int N = cf.n();
  const Chart& ch = cf.chart();
  Eigen::MatrixXd G(Eigen::Index(level_size(cf, depth)), N);
  for (int u = 0; u < N; ++u) {
    const double h = ch.step(u);
    const auto p = all_values(cf, depth, shifted(x, u, h));
    const auto m = all_values(cf, depth, shifted(x, u, -h));
    for (std::size_t f = 0; f < p.size(); ++f) G(Eigen::Index(f), u) = (p[f] - m[f]) / (2 * h);
  }
  return G;
}

}  // namespace

InvariantSet invariant_set(const LiftedCoframe& cf, int depth, const Point& x) {
  if (depth < 0) throw InputError("invariant_set: negative depth");
  InvariantSet s;
  s.depth = depth;
  const auto base = torsion(cf, x).retained_labels();
  std::vector<std::string> labels = base;
  const int N = cf.n();
  for (int d = 0; d <= depth; ++d) {
    const auto v = level_values(cf, d, x);
    s.values.insert(s.values.end(), v.begin(), v.end());
    s.labels.insert(s.labels.end(), labels.begin(), labels.end());
    s.level.insert(s.level.end(), v.size(), d);
    std::vector<std::string> next;
    for (const auto& l : labels)
      for (int u = 0; u < N; ++u) next.push_back(l + "|" + std::to_string(u));
    labels = std::move(next);
  }
  return s;
}

RankOrder rank_order(const LiftedCoframe& cf, const std::vector<Point>& points, int max_depth, double threshold) {
  if (points.empty()) throw InputError("rank_order: no sample points");
  if (max_depth < 1) throw InputError("rank_order: max_depth must be at least 1");
  RankOrder out;
  for (std::size_t q = 0; q < points.size(); ++q) {
    const Eigen::MatrixXd G = value_gradients(cf, max_depth, points[q]);
    std::vector<int> ranks;
    for (int s = 0; s <= max_depth; ++s)
      ranks.push_back(numerical_rank(G.topRows(Eigen::Index(level_size(cf, s))), threshold));
    if (q == 0) {
      out.ranks = ranks;
    } else if (ranks != out.ranks) {
      out.regular = false;
      std::ostringstream os;
      os << "rank varies between sample points 0 and " << q;
      out.diagnostic = os.str();
    }
  }
  for (int s = 0; s < max_depth; ++s)
    if (out.ranks[s] == out.ranks[s + 1]) {
      out.order = s;
      break;
    }
  if (out.order < 0 && out.diagnostic.empty()) out.diagnostic = "rank still growing at max_depth";
  return out;
}

EquivalenceResult e_structure_equivalent(const LiftedCoframe& cf1, const std::vector<Point>& samples1,
                                         const LiftedCoframe& cf2, const std::vector<Point>& samples2, double tol,
                                         const EquivalenceOptions& opt) {
  if (cf1.n() != cf2.n()) throw InputError("e_structure_equivalent: dimension mismatch");
  if (samples1.empty() || samples2.empty()) throw InputError("e_structure_equivalent: no sample points");
  EquivalenceResult out;
  const auto r1 = rank_order(cf1, samples1, opt.max_depth, opt.threshold);
  const auto r2 = rank_order(cf2, samples2, opt.max_depth, opt.threshold);
  if (!r1.regular || !r2.regular || r1.order < 0 || r2.order < 0) {
    out.indeterminate = true;
    out.reason = "not regular: " + (r1.diagnostic.empty() ? r2.diagnostic : r1.diagnostic);
    return out;
  }
  if (r1.ranks != r2.ranks) {
    out.reason = "rank sequences differ";
    return out;
  }
  const int j = r1.order, N = cf1.n();
  out.order = j;
  out.rank = r1.ranks[j];
  const std::size_t nj = level_size(cf1, j);

  // first independent invariants of F_j in lexicographic order
  if (out.rank > 0) {
    const Eigen::MatrixXd G = value_gradients(cf1, j, samples1[0]);
    Eigen::MatrixXd pick(0, N);
    for (std::size_t f = 0; f < nj && int(out.chosen.size()) < out.rank; ++f) {
      Eigen::MatrixXd trial(pick.rows() + 1, N);
      trial << pick, G.row(Eigen::Index(f));
      if (numerical_rank(trial, opt.threshold) > pick.rows()) {
        pick = trial;
        out.chosen.push_back(int(f));
      }
    }
  }
  auto h_of = [&](const LiftedCoframe& cf, const Point& x) {
    const auto v = all_values(cf, j, x);
    Eigen::VectorXd h(Eigen::Index(out.chosen.size()));
    for (std::size_t c = 0; c < out.chosen.size(); ++c) h(Eigen::Index(c)) = v[std::size_t(out.chosen[c])];
    return h;
  };
  auto inside = [&](const Point& x) {
    const Chart& ch = cf1.chart();
    for (int a = 0; a < N; ++a) {
      const double m = (j + 2) * ch.step(a);
      if (x[a] < ch.lo[a] + m || x[a] > ch.hi[a] - m) return false;
    }
    return true;
  };

  int matched = 0;
  for (const auto& y : samples2) {
    Point x = samples1[0];
    if (out.rank > 0) {
      const Eigen::VectorXd target = h_of(cf2, y);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& s : samples1) {
        const double d = (h_of(cf1, s) - target).norm();
        if (d < best) best = d, x = s;
      }
      bool ok = false;
      for (int it = 0; it < opt.newton_iterations; ++it) {
        const Eigen::VectorXd res = h_of(cf1, x) - target;
        if (res.norm() <= 1e-3 * tol) {
          ok = true;
          break;
        }
        Eigen::MatrixXd J(res.size(), N);
        for (int u = 0; u < N; ++u) {
          const double h = cf1.chart().step(u);
          J.col(u) = (h_of(cf1, shifted(x, u, h)) - h_of(cf1, shifted(x, u, -h))) / (2 * h);
        }
        const Eigen::VectorXd dx = J.completeOrthogonalDecomposition().solve(res);
        for (int u = 0; u < N; ++u) x[u] -= dx(u);
        if (!inside(x)) break;
      }
      if (!ok || !inside(x)) continue;
    }
    const auto a = all_values(cf1, j + 1, x), b = all_values(cf2, j + 1, y);
    for (std::size_t f = 0; f < a.size(); ++f) out.max_deviation = std::max(out.max_deviation, std::abs(a[f] - b[f]));
    out.sigma.emplace_back(y, x);
    ++matched;
  }
  if (matched == 0) {
    out.indeterminate = true;
    out.reason = "no sample could be matched inside the first chart";
    return out;
  }
  out.equivalent = out.max_deviation <= tol;
  if (!out.equivalent) out.reason = "invariants differ after matching";
  return out;
}

namespace {

std::vector<std::pair<int, int>> field_pairs(int k) {
  std::vector<std::pair<int, int>> out;
  for (int h = 0; h < 2; ++h)
    for (int i = h * k; i < h * k + k; ++i)
      for (int j = i; j < h * k + k; ++j) out.emplace_back(i, j);
  return out;
}

}  // namespace

FreeFieldReport free_field_check(const CoframeSpec& spec, const Chart& chart, const Point& x) {
  const int n = chart.dim;
  const auto pairs = field_pairs(spec.k);
  const int rows = int(2 * pairs.size()), cols = n + n * (n + 1) / 2;
  Eigen::MatrixXd M(rows, cols);
  int r = 0;
  for (int which = 0; which < 2; ++which)
    for (const auto& [i, j] : pairs) {
      auto f = [&](const Point& y) { return which == 0 ? spec.w(i, j, y) : spec.kappa(i, j, y); };
      const double f0 = f(x);
      int c = 0;
      for (int l = 0; l < n; ++l) {
        const double h = chart.step(l);
        M(r, c++) = (f(shifted(x, l, h)) - f(shifted(x, l, -h))) / (2 * h);
      }
      for (int l = 0; l < n; ++l)
        for (int m = l; m < n; ++m) {
          const double hl = chart.step(l), hm = chart.step(m);
          if (l == m) {
            M(r, c++) = (f(shifted(x, l, hl)) - 2 * f0 + f(shifted(x, l, -hl))) / (hl * hl);
          } else {
            auto at = [&](double sl, double sm) { return f(shifted(shifted(x, l, sl * hl), m, sm * hm)); };
            M(r, c++) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * hl * hm);
          }
        }
      ++r;
    }
  FreeFieldReport rep;
  rep.maximal = std::min(rows, cols);
  rep.rank = numerical_rank(M, 1e-7);
  rep.free = rep.rank == rep.maximal;
  return rep;
}

CoframeSpec make_free(const CoframeSpec& spec, const Chart& chart, const Point& x, FreeFieldReport* report) {
  FreeFieldReport rep = free_field_check(spec, chart, x);
  if (rep.free) {
    if (report) *report = rep;
    return spec;
  }
  const int n = chart.dim, k = spec.k;
  const auto pairs = field_pairs(k);
  // one quadratic polynomial per field, symmetric in (i, j)
  const int terms = n + n * (n + 1) / 2;
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> U(-1, 1);
  auto make = [&] {
    std::vector<std::vector<double>> c(pairs.size(), std::vector<double>(std::size_t(terms)));
    for (auto& row : c)
      for (auto& v : row) v = U(rng);
    return c;
  };
  const auto cw = make(), ck = make();
  auto which = [pairs](int i, int j) {
    if (i > j) std::swap(i, j);
    for (std::size_t p = 0; p < pairs.size(); ++p)
      if (pairs[p] == std::make_pair(i, j)) return p;
    return pairs.size();
  };
  auto poly = [n, x](const std::vector<double>& c, const Point& y) {
    double s = 0;
    int t = 0;
    for (int l = 0; l < n; ++l) s += c[std::size_t(t++)] * (y[l] - x[l]);
    for (int l = 0; l < n; ++l)
      for (int m = l; m < n; ++m) s += c[std::size_t(t++)] * (y[l] - x[l]) * (y[m] - x[m]);
    return 1e-6 * s;
  };
  CoframeSpec out = spec;
  auto w0 = spec.w, k0 = spec.kappa;
  out.w = [w0, cw, which, poly](int i, int j, const Point& y) {
    const auto p = which(i, j);
    return w0(i, j, y) + (p < cw.size() ? poly(cw[p], y) : 0.0);
  };
  out.kappa = [k0, ck, which, poly](int i, int j, const Point& y) {
    const auto p = which(i, j);
    return k0(i, j, y) + (p < ck.size() ? poly(ck[p], y) : 0.0);
  };
  rep = free_field_check(out, chart, x);
  rep.perturbed = true;
  if (report) *report = rep;
  return out;
}

}  // namespace spinv
