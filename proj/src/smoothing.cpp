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

#include "spinv/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "spinv/errors.hpp"

namespace spinv {

double bump_profile(double r) {
  r = std::abs(r);
  if (r >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - r * r));
}

namespace {

double radial_integral(int power, double hi, const std::function<double(double)>& g) {
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate([&](double r) { return std::pow(r, power) * g(r); }, 0.0, hi, 1e-15);
}

Eigen::MatrixXd vandermonde(const std::vector<double>& scales, int depth) {
  Eigen::MatrixXd V(depth + 1, depth + 1);
  for (int j = 0; j <= depth; ++j)
    for (int m = 0; m <= depth; ++m) V(j, m) = std::pow(scales[m], -j);
  return V;
}

void check_scales(const std::vector<double>& scales, int depth) {
  if (depth < 0) throw InputError("deep kernel: depth must be >= 0");
  if (int(scales.size()) != depth + 1)
    throw InputError("deep kernel: need exactly depth + 1 scales");
  for (std::size_t m = 0; m < scales.size(); ++m) {
    if (!(scales[m] >= 1.0)) throw InputError("deep kernel: scales must be >= 1");
    if (m && !(scales[m] > scales[m - 1]))
      throw InputError("deep kernel: scales must be strictly increasing (singular system)");
  }
}

// Stencil of one sampled, discretely normalized S_zeta on the chart.
struct Stencil {
  std::vector<int> half;                 // cells per axis
  std::vector<std::vector<int>> offsets;
  std::vector<std::vector<double>> k;    // per scale
};

Stencil build_stencil(const DeepKernel& dk, const Chart& c) {
  Stencil s;
  const double R = dk.radius();
  std::size_t count = 1;
  for (int a = 0; a < c.dim; ++a) {
    const int h = int(std::floor(R / c.step(a)));
    if (h > c.n[a] - 1) throw InputError("smooth: chart is smaller than the kernel support");
    s.half.push_back(h);
    count *= std::size_t(2 * h + 1);
  }
  std::vector<double> dist;
  for (std::size_t f = 0; f < count; ++f) {
    std::vector<int> off(c.dim);
    std::size_t r = f;
    double d2 = 0;
    for (int a = c.dim - 1; a >= 0; --a) {
      const int w = 2 * s.half[a] + 1;
      off[a] = int(r % std::size_t(w)) - s.half[a];
      r /= std::size_t(w);
      const double y = off[a] * c.step(a);
      d2 += y * y;
    }
    if (d2 < R * R) {
      s.offsets.push_back(off);
      dist.push_back(std::sqrt(d2));
    }
  }
  for (double z : dk.scales) {
    std::vector<double> w(dist.size());
    double sum = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) sum += (w[i] = bump_profile(z * dist[i]));
    if (!(sum > 0)) throw InputError("smooth: kernel scale is below the grid resolution");
    for (double& v : w) v /= sum;
    s.k.push_back(std::move(w));
  }
  return s;
}

std::vector<double> solve_weights(const DeepKernel& dk, const Stencil& s, const Chart& c) {
  const int d = dk.depth;
  Eigen::MatrixXd V = vandermonde(dk.scales, d);
  for (int j = 2; j <= d; j += 2) {
    for (int m = 0; m <= d; ++m) {
      double mu = 0;
      for (std::size_t i = 0; i < s.offsets.size(); ++i)
        mu += std::pow(s.offsets[i][0] * c.step(0), j) * s.k[m][i];
      V(j, m) = mu;
    }
    const double scale = V.row(j).cwiseAbs().maxCoeff();
    if (!(scale > 0)) throw InputError("smooth: finest kernel scale is not resolved by the grid");
    V.row(j) /= scale;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d + 1);
  rhs(0) = 1;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
  if (lu.rank() < d + 1) throw NumericError("smooth: discrete moment system is singular");
  Eigen::VectorXd a = lu.solve(rhs);
  return std::vector<double>(a.data(), a.data() + a.size());
}

inline int reflect(int i, int n) {
  // even reflection about the end nodes
  while (i < 0 || i > n - 1) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

}  // namespace

double base_radial_moment(int j, int dim) {
  const double z = radial_integral(dim - 1, 1.0, bump_profile);
  return radial_integral(j + dim - 1, 1.0, bump_profile) / z;
}

std::vector<double> deep_kernel_coefficients(const std::vector<double>& scales, int depth) {
  check_scales(scales, depth);
  Eigen::MatrixXd V = vandermonde(scales, depth);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(depth + 1);
  rhs(0) = 1;
  Eigen::VectorXd a = V.fullPivLu().solve(rhs);
  const double res = (V * a - rhs).cwiseAbs().maxCoeff();
  if (!(res <= 1e-12)) {
    std::ostringstream os;
    os << "deep kernel: moment system residual " << res << " exceeds 1e-12";
    throw NumericError(os.str());
  }
  return std::vector<double>(a.data(), a.data() + a.size());
}

DeepKernel make_deep_kernel(double zeta0, int depth) {
  DeepKernel k;
  k.depth = depth;
  for (int m = 0; m <= depth; ++m) k.scales.push_back(std::ldexp(zeta0, m));
  k.weights = deep_kernel_coefficients(k.scales, depth);
  return k;
}

std::vector<double> verify_depth(const DeepKernel& k, int max_degree, int dim) {
  const double z = radial_integral(dim - 1, 1.0, bump_profile);
  auto composite = [&](double r) {
    double s = 0;
    for (std::size_t m = 0; m < k.scales.size(); ++m)
      s += k.weights[m] * std::pow(k.scales[m], dim) * bump_profile(k.scales[m] * r);
    return s / z;
  };
  // integrate piecewise between successive support radii
  std::vector<double> edges{0.0};
  for (auto it = k.scales.rbegin(); it != k.scales.rend(); ++it) edges.push_back(1.0 / *it);
  std::vector<double> out;
  boost::math::quadrature::tanh_sinh<double> ts;
  for (int j = 1; j <= max_degree; ++j) {
    double s = 0;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e)
      s += ts.integrate([&](double r) { return std::pow(r, j + dim - 1) * composite(r); }, edges[e],
                        edges[e + 1], 1e-15);
    out.push_back(std::abs(s));
  }
  return out;
}

std::vector<double> discrete_weights(const DeepKernel& k, const Chart& chart) {
  return solve_weights(k, build_stencil(k, chart), chart);
}

Field smooth(const Field& f, const DeepKernel& k) {
  const Chart& c = f.chart;
  const Stencil s = build_stencil(k, c);
  const auto a = solve_weights(k, s, c);
  std::vector<double> w(s.offsets.size(), 0.0);
  for (std::size_t m = 0; m < a.size(); ++m)
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += a[m] * s.k[m][i];

  std::vector<std::ptrdiff_t> delta(w.size(), 0);
  for (std::size_t i = 0; i < w.size(); ++i)
    for (int ax = 0; ax < c.dim; ++ax)
      delta[i] += std::ptrdiff_t(s.offsets[i][ax]) * std::ptrdiff_t(c.stride(ax));

  // reflected index per axis for positions -half .. n-1+half
  std::vector<std::vector<int>> mirror(c.dim);
  std::vector<std::size_t> strides(c.dim);
  for (int ax = 0; ax < c.dim; ++ax) {
    strides[ax] = c.stride(ax);
    for (int i = -s.half[ax]; i <= c.n[ax] - 1 + s.half[ax]; ++i)
      mirror[ax].push_back(reflect(i, c.n[ax]));
  }

  Field out(c);
  std::vector<int> idx(c.dim);
  for (std::size_t p = 0; p < f.size(); ++p) {
    idx = c.unravel(p);
    bool inside = true;
    for (int ax = 0; ax < c.dim; ++ax)
      inside = inside && idx[ax] >= s.half[ax] && idx[ax] + s.half[ax] <= c.n[ax] - 1;
    double acc = 0;
    if (inside) {
      const double* base = f.v.data() + p;
      for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * base[delta[i]];
    } else {
      for (std::size_t i = 0; i < w.size(); ++i) {
        std::size_t q = 0;
        for (int ax = 0; ax < c.dim; ++ax)
          q += strides[ax] * std::size_t(mirror[ax][idx[ax] + s.offsets[i][ax] + s.half[ax]]);
        acc += w[i] * f.v[q];
      }
    }
    out.v[p] = acc;
  }
  return out;
}

namespace {

// det of the central-difference Hessian at interior node p
double hessian_det(const Field& g, std::size_t p) {
  const Chart& c = g.chart;
  const int D = c.dim;
  Eigen::MatrixXd H(D, D);
  for (int a = 0; a < D; ++a) {
    const std::size_t sa = c.stride(a);
    const double ha = c.step(a);
    H(a, a) = (g.v[p + sa] - 2 * g.v[p] + g.v[p - sa]) / (ha * ha);
    for (int b = a + 1; b < D; ++b) {
      const std::size_t sb = c.stride(b);
      const double hb = c.step(b);
      H(a, b) = H(b, a) = (g.v[p + sa + sb] - g.v[p + sa - sb] - g.v[p - sa + sb] +
                           g.v[p - sa - sb]) / (4 * ha * hb);
    }
  }
  return H.determinant();
}

}  // namespace

KernelSelection select_kernel(const std::vector<DeepKernel>& candidates, const Field& kappa,
                              const std::vector<std::size_t>& locus_nodes, double root_tol) {
  if (candidates.empty()) throw InputError("select_kernel: empty candidate list");
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return candidates[x].radius() < candidates[y].radius();
  });

  Field cos0(kappa.chart);
  for (std::size_t i = 0; i < kappa.size(); ++i) cos0.v[i] = std::cos(kappa.v[i]);
  std::vector<double> det0(kappa.size(), 0.0);
  double det_scale = 0;
  for (std::size_t i = 0; i < kappa.size(); ++i)
    if (kappa.chart.interior(i, 1)) det_scale = std::max(det_scale, std::abs(det0[i] = hessian_det(cos0, i)));

  KernelSelection sel;
  for (std::size_t o : order) {
    const DeepKernel& k = candidates[o];
    std::ostringstream line;
    line << "candidate " << o << " radius " << k.radius() << ": ";
    Field sk;
    try {
      sk = smooth(kappa, k);
    } catch (const InputError& e) {
      line << "not applicable (" << e.what() << ")";
      sel.report.push_back(line.str());
      continue;
    }
    double root = 0;
    for (std::size_t p : locus_nodes) root = std::max(root, std::abs(std::sin(sk.v[p])));
    const bool c1 = root <= root_tol;
    Field cs(kappa.chart);
    for (std::size_t i = 0; i < sk.size(); ++i) cs.v[i] = std::cos(sk.v[i]);
    std::size_t lost = 0;
    for (std::size_t i = 0; i < kappa.size(); ++i)
      if (kappa.chart.interior(i, 1) && std::abs(det0[i]) > 1e-10 * det_scale &&
          std::abs(hessian_det(cs, i)) <= 1e-14 * det_scale)
        ++lost;
    const bool c2 = lost == 0;
    line << "max |sin| on loci " << root << (c1 ? " ok" : " FAIL") << ", degenerate Hessians "
         << lost << (c2 ? " ok" : " FAIL");
    sel.report.push_back(line.str());
    if (c1 && c2) {
      sel.kernel = k;
      sel.index = o;
      return sel;
    }
  }
  std::ostringstream os;
  os << "select_kernel: no candidate qualifies";
  for (const auto& r : sel.report) os << "\n  " << r;
  throw NumericError(os.str());
}

}  // namespace spinv
