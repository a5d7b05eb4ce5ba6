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

#include "spinv/courant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "spinv/errors.hpp"

namespace spinv {

namespace {

void require_conforming(const CourantSection& s, const Chart& c, const char* who) {
  const std::size_t n = c.size();
  if (int(s.X.size()) != c.dim || int(s.xi.size()) != c.dim || !(s.chart == c))
    throw InputError(std::string(who) + ": section does not match the chart dimension");
  for (int a = 0; a < c.dim; ++a)
    if (s.X[a].size() != n || s.xi[a].size() != n)
      throw InputError(std::string(who) + ": section arrays do not match the chart resolution");
}

// J v with J = [[0, -I], [I, 0]].
Eigen::VectorXd apply_J(const Eigen::VectorXd& v) {
  const int k = int(v.size()) / 2;
  Eigen::VectorXd out(v.size());
  out.head(k) = -v.tail(k);
  out.tail(k) = v.head(k);
  return out;
}

// The bundle map on a stacked (X, xi) vector.
Eigen::VectorXd phi(const Eigen::VectorXd& u) {
  const int d = int(u.size()) / 2;
  Eigen::VectorXd out(u.size());
  out.head(d) = apply_J(u.tail(d));
  out.tail(d) = apply_J(u.head(d));
  return out;
}

Field component(const std::vector<double>& v, const Chart& c) {
  Field f(c);
  f.v = v;
  return f;
}

// D[a][b] = d/dx_a of component b.
using Jacobian = std::vector<std::vector<std::vector<double>>>;

Jacobian jacobian(const std::vector<std::vector<double>>& comps, const Chart& c) {
  Jacobian D(c.dim);
  for (int a = 0; a < c.dim; ++a)
    for (const auto& comp : comps) D[a].push_back(component(comp, c).derivative(a).v);
  return D;
}

// Row u -> (e, u)_+ at one node: 1/2 (xi_e, X_e) acting on (X_u, xi_u).
Eigen::RowVectorXd plus_row(const Eigen::VectorXd& e) {
  const int d = int(e.size()) / 2;
  Eigen::RowVectorXd r(e.size());
  r.head(d) = 0.5 * e.tail(d).transpose();
  r.tail(d) = 0.5 * e.head(d).transpose();
  return r;
}

void check_preframe_shape(const Preframe& p, const char* who) {
  p.chart.require_symplectic();
  for (const auto& s : p.sections) require_conforming(s, p.chart, who);
}

}  // namespace

CourantSection CourantSection::zero(const Chart& c) {
  CourantSection s;
  s.chart = c;
  s.X.assign(c.dim, std::vector<double>(c.size(), 0.0));
  s.xi = s.X;
  return s;
}

CourantSection CourantSection::constant(const Chart& c, const std::vector<double>& X,
                                        const std::vector<double>& xi) {
  if (int(X.size()) != c.dim || int(xi.size()) != c.dim)
    throw InputError("CourantSection: constant values must have one entry per axis");
  CourantSection s;
  s.chart = c;
  for (int a = 0; a < c.dim; ++a) {
    s.X.emplace_back(c.size(), X[a]);
    s.xi.emplace_back(c.size(), xi[a]);
  }
  return s;
}

CourantSection CourantSection::sample(
    const Chart& c, const std::function<std::vector<double>(const std::vector<double>&)>& f) {
  CourantSection s = zero(c);
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto v = f(c.point(i));
    if (int(v.size()) != 2 * c.dim) throw InputError("CourantSection: sampler must return 2*dim values");
    for (int a = 0; a < c.dim; ++a) {
      if (!std::isfinite(v[a]) || !std::isfinite(v[c.dim + a]))
        throw InputError("CourantSection: sampled values must be finite");
      s.X[a][i] = v[a];
      s.xi[a][i] = v[c.dim + a];
    }
  }
  return s;
}

Eigen::VectorXd CourantSection::at(std::size_t node) const {
  const int d = rank();
  Eigen::VectorXd v(2 * d);
  for (int a = 0; a < d; ++a) {
    v[a] = X[a][node];
    v[d + a] = xi[a][node];
  }
  return v;
}

void CourantSection::set(std::size_t node, const Eigen::VectorXd& v) {
  const int d = rank();
  for (int a = 0; a < d; ++a) {
    X[a][node] = v[a];
    xi[a][node] = v[d + a];
  }
}

CourantSection CourantSection::operator+(const CourantSection& o) const {
  require_conforming(o, chart, "CourantSection::operator+");
  CourantSection r = *this;
  for (int a = 0; a < rank(); ++a)
    for (std::size_t i = 0; i < chart.size(); ++i) {
      r.X[a][i] += o.X[a][i];
      r.xi[a][i] += o.xi[a][i];
    }
  return r;
}

CourantSection CourantSection::operator*(double s) const {
  CourantSection r = *this;
  for (int a = 0; a < rank(); ++a)
    for (std::size_t i = 0; i < chart.size(); ++i) {
      r.X[a][i] *= s;
      r.xi[a][i] *= s;
    }
  return r;
}

double CourantSection::sup_distance(const CourantSection& o, int band) const {
  require_conforming(o, chart, "CourantSection::sup_distance");
  double m = 0;
  for (std::size_t i = 0; i < chart.size(); ++i) {
    if (band > 0 && !chart.interior(i, band)) continue;
    for (int a = 0; a < rank(); ++a)
      m = std::max({m, std::abs(X[a][i] - o.X[a][i]), std::abs(xi[a][i] - o.xi[a][i])});
  }
  return m;
}

FieldBundle CourantSection::to_fields() const {
  FieldBundle b;
  b.chart = chart;
  for (int a = 0; a < rank(); ++a) {
    b.names.push_back("X" + std::to_string(a + 1));
    b.comps.push_back(X[a]);
  }
  for (int a = 0; a < rank(); ++a) {
    b.names.push_back("xi" + std::to_string(a + 1));
    b.comps.push_back(xi[a]);
  }
  return b;
}

CourantSection CourantSection::from_fields(const FieldBundle& b) {
  const int d = b.chart.dim;
  if (int(b.comps.size()) != 2 * d) throw InputError("CourantSection: bundle needs 2*dim components");
  CourantSection s;
  s.chart = b.chart;
  s.X.assign(b.comps.begin(), b.comps.begin() + d);
  s.xi.assign(b.comps.begin() + d, b.comps.end());
  require_conforming(s, b.chart, "CourantSection::from_fields");
  return s;
}

CourantSection bundle_map(const CourantSection& s, const Chart& chart) {
  chart.require_symplectic();
  require_conforming(s, chart, "bundle_map");
  const int k = chart.k();
  CourantSection r = CourantSection::zero(chart);
  // omega#(X) = J X lands in the form slot, -pi#(xi) = J xi in the vector slot.
  for (int i = 0; i < k; ++i)
    for (std::size_t n = 0; n < chart.size(); ++n) {
      r.X[i][n] = -s.xi[i + k][n];
      r.X[i + k][n] = s.xi[i][n];
      r.xi[i][n] = -s.X[i + k][n];
      r.xi[i + k][n] = s.X[i][n];
    }
  return r;
}

Field courant_pairing(const CourantSection& e1, const CourantSection& e2, PairingSign sign) {
  require_conforming(e2, e1.chart, "courant_pairing");
  const double sg = sign == PairingSign::Plus ? 1.0 : -1.0;
  Field out(e1.chart);
  for (int a = 0; a < e1.rank(); ++a)
    for (std::size_t i = 0; i < out.size(); ++i)
      out.v[i] += 0.5 * (e1.xi[a][i] * e2.X[a][i] + sg * e2.xi[a][i] * e1.X[a][i]);
  return out;
}

CourantSection courant_bracket(const CourantSection& e1, const CourantSection& e2,
                               const Chart& chart) {
  require_conforming(e1, chart, "courant_bracket");
  require_conforming(e2, chart, "courant_bracket");
  const int d = chart.dim;
  const auto DX1 = jacobian(e1.X, chart), DX2 = jacobian(e2.X, chart);
  const auto Dx1 = jacobian(e1.xi, chart), Dx2 = jacobian(e2.xi, chart);

  CourantSection r = CourantSection::zero(chart);
  for (std::size_t n = 0; n < chart.size(); ++n) {
    for (int a = 0; a < d; ++a) {
      double v = 0, f = 0;
      for (int b = 0; b < d; ++b) {
        const double x1 = e1.X[b][n], x2 = e2.X[b][n];
        v += x1 * DX2[b][a][n] - x2 * DX1[b][a][n];
        // L_{X1} xi2 - L_{X2} xi1
        f += x1 * Dx2[b][a][n] + e2.xi[b][n] * DX1[a][b][n];
        f -= x2 * Dx1[b][a][n] + e1.xi[b][n] * DX2[a][b][n];
        // d (e1, e2)_- expanded by the product rule, which keeps the
        // bracket of graph sections inside the graph to rounding.
        f += 0.5 * (Dx1[a][b][n] * x2 + e1.xi[b][n] * DX2[a][b][n]);
        f -= 0.5 * (Dx2[a][b][n] * x1 + e2.xi[b][n] * DX1[a][b][n]);
      }
      r.X[a][n] = v;
      r.xi[a][n] = f;
    }
  }
  return r;
}

Preframe Preframe::darboux(const Chart& c) {
  c.require_symplectic();
  Preframe p;
  p.chart = c;
  for (int i = 0; i < c.dim; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(c.dim);
    e[i] = 1;
    const Eigen::VectorXd X = -apply_J(e);   // pi#(dx_i)
    p.sections.push_back(CourantSection::constant(
        c, std::vector<double>(X.data(), X.data() + X.size()), std::vector<double>(e.data(), e.data() + e.size())));
  }
  return p;
}

Preframe Preframe::mapped() const {
  Preframe p;
  p.chart = chart;
  for (const auto& s : sections) p.sections.push_back(bundle_map(s, chart));
  return p;
}

PreframeCheck is_preframe(const Preframe& p, double tolerance) {
  check_preframe_shape(p, "is_preframe");
  PreframeCheck out;
  out.min_singular = Field(p.chart);
  out.relative = Field(p.chart);
  const int d = p.chart.dim;
  const int cols = 2 * int(p.sections.size());
  out.worst = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < p.chart.size(); ++n) {
    Eigen::MatrixXd M(2 * d, cols);
    for (std::size_t s = 0; s < p.sections.size(); ++s) {
      const Eigen::VectorXd v = p.sections[s].at(n);
      M.col(2 * s) = v;
      M.col(2 * s + 1) = phi(v);
    }
    double smin = 0, ratio = 0;
    if (cols == 2 * d) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
      const auto& sv = svd.singularValues();
      smin = sv[sv.size() - 1];
      ratio = sv[0] > 0 ? smin / sv[0] : 0.0;
    }
    out.min_singular.v[n] = smin;
    out.relative.v[n] = ratio;
    if (smin < out.worst) {
      out.worst = smin;
      out.worst_node = n;
    }
  }
  out.ok = cols == 2 * d && out.worst > tolerance;
  if (cols != 2 * d)
    out.diagnostic = "expected " + std::to_string(d) + " sections, got " + std::to_string(p.sections.size());
  else if (!out.ok)
    out.diagnostic = "span matrix loses rank at node " + std::to_string(out.worst_node) +
                     " (smallest singular value " + format_double(out.worst) + ")";
  return out;
}

namespace {

// Normalized pairing rows for one preframe at one node, zero rows dropped.
Eigen::MatrixXd condition_rows(const std::vector<Eigen::VectorXd>& secs,
                               const std::vector<Eigen::VectorXd>& brackets) {
  std::vector<Eigen::RowVectorXd> rows;
  auto push = [&](const Eigen::VectorXd& e) {
    Eigen::RowVectorXd r = plus_row(e);
    const double nr = r.norm();
    if (nr > 0) rows.push_back(r / nr);
  };
  for (const auto& e : secs) push(e);
  for (const auto& e : brackets) push(e);
  const int w = secs.empty() ? 0 : int(secs.front().size());
  Eigen::MatrixXd M(rows.size(), w);
  for (std::size_t i = 0; i < rows.size(); ++i) M.row(i) = rows[i];
  return M;
}

std::vector<CourantSection> all_brackets(const Preframe& p) {
  std::vector<CourantSection> out;
  for (std::size_t a = 0; a < p.sections.size(); ++a)
    for (std::size_t b = a + 1; b < p.sections.size(); ++b)
      out.push_back(courant_bracket(p.sections[a], p.sections[b], p.chart));
  return out;
}

Eigen::MatrixXd rows_at(const Preframe& p, const std::vector<CourantSection>& br, std::size_t n) {
  std::vector<Eigen::VectorXd> secs, brs;
  for (const auto& s : p.sections) secs.push_back(s.at(n));
  for (const auto& s : br) brs.push_back(s.at(n));
  if (secs.empty()) return Eigen::MatrixXd(0, 2 * p.chart.dim);
  return condition_rows(secs, brs);
}

// Orthonormal basis of the numerical null space of M (columns).
Eigen::MatrixXd null_space(const Eigen::MatrixXd& M, int width, double tol) {
  if (M.rows() == 0) return Eigen::MatrixXd::Identity(width, width);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  const double smax = sv.size() ? sv[0] : 0.0;
  for (int i = 0; i < sv.size(); ++i)
    if (smax > 0 && sv[i] > tol * smax) ++rank;
  return svd.matrixV().rightCols(width - rank);
}

}  // namespace

Annihilator annihilator(const Preframe& p, const Chart& chart, double tolerance) {
  if (!(p.chart == chart)) throw InputError("annihilator: preframe chart differs from the chart argument");
  check_preframe_shape(p, "annihilator");
  const int w = 2 * chart.dim;
  const auto br = all_brackets(p);

  Annihilator out;
  out.dimension.assign(chart.size(), -1);
  std::vector<Eigen::MatrixXd> nulls(chart.size());
  out.min_interior = w;
  out.max_interior = 0;
  for (std::size_t n = 0; n < chart.size(); ++n) {
    if (!chart.interior(n, 1)) continue;
    nulls[n] = null_space(rows_at(p, br, n), w, tolerance);
    const int dim = int(nulls[n].cols());
    out.dimension[n] = dim;
    out.min_interior = std::min(out.min_interior, dim);
    out.max_interior = std::max(out.max_interior, dim);
  }
  for (int j = 0; j < out.max_interior; ++j) {
    CourantSection s = CourantSection::zero(chart);
    for (std::size_t n = 0; n < chart.size(); ++n)
      if (out.dimension[n] > j) s.set(n, nulls[n].col(j));
    out.basis.push_back(std::move(s));
  }
  return out;
}

namespace {

// Per-node Gram pieces so that the stacked residual matrix
// [cos b1 A1 + sin b1 B1; cos b2 A2 + sin b2 B2] has Gram
// sum_a c_a^2 P_a + c_a s_a Q_a + s_a^2 S_a.
struct GramPieces {
  Eigen::MatrixXd P[2], Q[2], S[2];
};

double residual_at(const GramPieces& g, double b1, double b2) {
  const double c[2] = {std::cos(b1), std::cos(b2)}, s[2] = {std::sin(b1), std::sin(b2)};
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(g.P[0].rows(), g.P[0].cols());
  for (int a = 0; a < 2; ++a) G += c[a] * c[a] * g.P[a] + c[a] * s[a] * g.Q[a] + s[a] * s[a] * g.S[a];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues()[0]));
}

double residual(const std::vector<GramPieces>& nodes, std::size_t stride, double b1, double b2) {
  double m = 0;
  for (std::size_t i = 0; i < nodes.size(); i += stride) m = std::max(m, residual_at(nodes[i], b1, b2));
  return m;
}

}  // namespace

WeakEquivalence weak_equivalence(const Preframe& p1, const Preframe& p2, double tolerance,
                                 const WeakEquivalenceOptions& opt) {
  if (!(p1.chart == p2.chart)) throw InputError("weak_equivalence: preframes live on different charts");
  check_preframe_shape(p1, "weak_equivalence");
  check_preframe_shape(p2, "weak_equivalence");
  const Chart& chart = p1.chart;
  const int w = 2 * chart.dim;
  const auto br1 = all_brackets(p1), br2 = all_brackets(p2);

  std::vector<std::size_t> interior;
  for (std::size_t n = 0; n < chart.size(); ++n)
    if (chart.interior(n, 1)) interior.push_back(n);
  std::vector<std::size_t> nodes;
  const std::size_t step = std::max<std::size_t>(1, interior.size() / std::max<std::size_t>(1, opt.max_nodes));
  for (std::size_t i = 0; i < interior.size(); i += step) nodes.push_back(interior[i]);

  WeakEquivalence out;
  std::vector<GramPieces> pieces;
  for (std::size_t n : nodes) {
    const Eigen::MatrixXd N = null_space(rows_at(p1, br1, n), w, 1e-8);
    if (N.cols() == 0) {
      out.reason = "empty-annihilator";
      out.residual = std::numeric_limits<double>::infinity();
      return out;
    }
    Eigen::MatrixXd PhiN(w, N.cols());
    for (int j = 0; j < N.cols(); ++j) PhiN.col(j) = phi(N.col(j));
    GramPieces g;
    const Eigen::MatrixXd M[2] = {rows_at(p1, br1, n), rows_at(p2, br2, n)};
    for (int a = 0; a < 2; ++a) {
      const Eigen::MatrixXd A = M[a] * N, B = M[a] * PhiN;
      g.P[a] = A.transpose() * A;
      g.Q[a] = A.transpose() * B + B.transpose() * A;
      g.S[a] = B.transpose() * B;
    }
    pieces.push_back(std::move(g));
  }

  // Coarse sweep on a node subsample, then coordinate descent on all nodes.
  const double two_pi = 2 * std::numbers::pi;
  const std::size_t coarse_stride = std::max<std::size_t>(1, pieces.size() / 64);
  double best = std::numeric_limits<double>::infinity(), b1 = 0, b2 = 0;
  for (int i = 0; i < opt.grid; ++i)
    for (int j = 0; j < opt.grid; ++j) {
      const double t1 = two_pi * i / opt.grid, t2 = two_pi * j / opt.grid;
      const double r = residual(pieces, coarse_stride, t1, t2);
      if (r < best) {
        best = r;
        b1 = t1;
        b2 = t2;
      }
    }
  double h = two_pi / opt.grid;
  best = residual(pieces, 1, b1, b2);
  for (int it = 0; it < opt.descent_iterations && best > 0; ++it) {
    for (int axis = 0; axis < 2; ++axis) {
      // Golden-section search on [x - h, x + h] along one axis.
      const double x0 = axis == 0 ? b1 : b2;
      auto f = [&](double x) { return axis == 0 ? residual(pieces, 1, x, b2) : residual(pieces, 1, b1, x); };
      const double gr = (std::sqrt(5.0) - 1) / 2;
      double lo = x0 - h, hi = x0 + h;
      double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
      double fc = f(c), fd = f(d);
      for (int g = 0; g < 30; ++g) {
        if (fc < fd) {
          hi = d; d = c; fd = fc;
          c = hi - gr * (hi - lo); fc = f(c);
        } else {
          lo = c; c = d; fc = fd;
          d = lo + gr * (hi - lo); fd = f(d);
        }
      }
      const double x = fc < fd ? c : d, fx = std::min(fc, fd);
      if (fx < best) {
        best = fx;
        (axis == 0 ? b1 : b2) = x;
      }
    }
    h *= 0.5;
  }
  auto wrap = [&](double b) { return std::fmod(std::fmod(b, two_pi) + two_pi, two_pi); };
  out.beta1 = wrap(b1);
  out.beta2 = wrap(b2);
  out.residual = best;
  out.equivalent = best <= tolerance;
  out.reason = out.equivalent ? "ok" : "residual";
  return out;
}

std::vector<VectorField> preternatural_generators(const Chart& doubled) {
  doubled.require_symplectic();
  const int n = doubled.k();
  std::vector<VectorField> out;
  for (int l = 0; l < n; ++l) {
    VectorField K(doubled.dim, std::vector<double>(doubled.size(), 0.0));
    for (std::size_t i = 0; i < doubled.size(); ++i) {
      const auto x = doubled.point(i);
      K[l][i] = x[l + n];
      K[l + n][i] = -x[l];
    }
    out.push_back(std::move(K));
  }
  return out;
}

VectorField lie_bracket(const VectorField& a, const VectorField& b, const Chart& c) {
  if (int(a.size()) != c.dim || int(b.size()) != c.dim)
    throw InputError("lie_bracket: vector field does not match the chart dimension");
  const auto Da = jacobian(a, c), Db = jacobian(b, c);
  VectorField r(c.dim, std::vector<double>(c.size(), 0.0));
  for (std::size_t n = 0; n < c.size(); ++n)
    for (int i = 0; i < c.dim; ++i)
      for (int j = 0; j < c.dim; ++j) r[i][n] += a[j][n] * Db[j][i][n] - b[j][n] * Da[j][i][n];
  return r;
}

double symplectic_lie_residual(const VectorField& K, const Chart& doubled) {
  doubled.require_symplectic();
  if (int(K.size()) != doubled.dim) throw InputError("symplectic_lie_residual: dimension mismatch");
  const int d = doubled.dim, n = doubled.k();
  Eigen::MatrixXd Om = Eigen::MatrixXd::Zero(d, d);
  for (int l = 0; l < n; ++l) {
    Om(l, l + n) = 1;
    Om(l + n, l) = -1;
  }
  const auto D = jacobian(K, doubled);
  double m = 0;
  for (std::size_t p = 0; p < doubled.size(); ++p) {
    if (!doubled.interior(p, 1)) continue;
    Eigen::MatrixXd dK(d, d);   // dK(c, a) = d_a K^c
    for (int c = 0; c < d; ++c)
      for (int a = 0; a < d; ++a) dK(c, a) = D[a][c][p];
    // (L_K Omega)_{ab} = Omega_{cb} d_a K^c + Omega_{ac} d_b K^c for constant Omega.
    const Eigen::MatrixXd L = dK.transpose() * Om + Om * dK;
    m = std::max(m, L.cwiseAbs().maxCoeff());
  }
  return m;
}

}  // namespace spinv
