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

#include "spinv/period_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "spinv/errors.hpp"

namespace spinv {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI{0.0, 1.0};

cplx eval_poly(const std::vector<cplx>& p, double x) {
  cplx v = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * x + *it;
  return v;
}

// int_{e_k}^{e_{k+1}} p dlambda / y, with lambda = mid + half cos(theta)
// absorbing the two endpoint square roots.
cplx interval_integral(const CurveModel& c, int k, const std::vector<cplx>& p,
                       const QuadratureOptions& q) {
  const double a = c.branch[k], b = c.branch[k + 1];
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  auto g = [&](double th) {
    const double lam = mid + half * std::cos(th);
    double r = 1;
    for (std::size_t i = 0; i < c.branch.size(); ++i)
      if (int(i) != k && int(i) != k + 1) r *= std::abs(lam - c.branch[i]);
    return eval_poly(p, lam) / std::sqrt(r);
  };
  auto gauss = [&](int n) {
    cplx s = 0;
    for (int j = 1; j <= n; ++j) s += g((2.0 * j - 1.0) * kPi / (2.0 * n));
    return s * (kPi / n);
  };
  // boundary value from the upper half plane: each branch point to the right
  // contributes a factor i, and sqrt(-1) = i
  const int right = int(c.branch.size()) - k - 1;
  cplx phase = 1;
  for (int j = 0; j < 1 + right; ++j) phase *= -kI;

  int n = q.nodes;
  cplx prev = gauss(n);
  while (2 * n <= q.max_nodes) {
    n *= 2;
    const cplx cur = gauss(n);
    if (std::abs(cur - prev) <= q.tolerance * std::max(std::abs(cur), 1e-300)) return cur * phase;
    prev = cur;
  }
  // a neighbouring branch point sits close to an endpoint; tanh-sinh clusters there
  boost::math::quadrature::tanh_sinh<double> ts;
  const double re = ts.integrate([&](double th) { return g(th).real(); }, 0.0, kPi, 1e-14);
  const double im = ts.integrate([&](double th) { return g(th).imag(); }, 0.0, kPi, 1e-14);
  return cplx(re, im) * phase;
}

std::string fingerprint(const CurveModel& c) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < c.branch.size(); ++i) os << (i ? "," : "") << c.branch[i];
  return os.str();
}

}  // namespace

CurveModel CurveModel::from_branch_points(std::vector<double> e) {
  if (e.size() < 3) throw InputError("a curve needs at least three branch points");
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!std::isfinite(e[i])) throw InputError("branch points must be finite");
    if (i && !(e[i] > e[i - 1])) throw InputError("branch points must be strictly increasing");
  }
  CurveModel c;
  c.genus = int((e.size() - 1) / 2);
  c.requested = c.genus;
  c.branch = std::move(e);
  return c;
}

double CurveModel::y_squared(double lambda) const {
  double p = -1;
  for (double e : branch) p *= (lambda - e);
  return p;
}

CurveModel truncate_curve(const SpectrumBundle& spec, int m, double min_width) {
  if (m < 0) throw InputError("truncate_curve: m must be >= 0");
  std::vector<std::pair<double, int>> open;
  for (int i = 1; i <= spec.n; ++i) {
    const double w = spec.gap_width(i);
    if (!spec.double_flag[i - 1] && w > min_width) open.push_back({w, i});
  }
  std::stable_sort(open.begin(), open.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  if (int(open.size()) > m) open.resize(m);
  std::vector<int> keep;
  for (const auto& o : open) keep.push_back(o.second);
  std::sort(keep.begin(), keep.end());

  CurveModel c;
  c.requested = m;
  c.genus = int(keep.size());
  c.source_gaps = keep;
  c.branch.push_back(spec.lambda[0]);
  for (int i : keep) {
    c.branch.push_back(spec.gap_lo(i));
    c.branch.push_back(spec.gap_hi(i));
  }
  return c;
}

cplx a_period(const CurveModel& c, int i, const std::vector<cplx>& poly,
              const QuadratureOptions& q) {
  if (i < 1 || i > c.genus) throw InputError("a_period: cycle index out of range");
  return 2.0 * interval_integral(c, 2 * i - 1, poly, q);
}

cplx b_period(const CurveModel& c, int i, const std::vector<cplx>& poly,
              const QuadratureOptions& q) {
  if (i < 1 || i > c.genus) throw InputError("b_period: cycle index out of range");
  cplx s = 0;
  for (int k = 0; k < i; ++k) s += interval_integral(c, 2 * k, poly, q);
  return 2.0 * s;
}

std::vector<cplx> a_periods(const CurveModel& c, const std::vector<cplx>& poly,
                            const QuadratureOptions& q) {
  std::vector<cplx> out;
  for (int i = 1; i <= c.genus; ++i) out.push_back(a_period(c, i, poly, q));
  return out;
}

NormalizedBasis normalized_basis(const CurveModel& c, const QuadratureOptions& q) {
  if (c.genus < 1) throw InputError("normalized_basis: genus must be >= 1");
  const int g = c.genus;
  CMatrix A(g, g);
  for (int l = 0; l < g; ++l) {
    std::vector<cplx> mono(l + 1, 0.0);
    mono[l] = 1.0;
    for (int i = 0; i < g; ++i) A(i, l) = a_period(c, i + 1, mono, q);
  }
  Eigen::JacobiSVD<CMatrix> svd(A);
  const auto& sv = svd.singularValues();
  NormalizedBasis nb;
  nb.condition = sv(0) / sv(g - 1);
  nb.ill_conditioned = !(nb.condition < 1e12);
  nb.coeff = A.transpose().inverse();
  return nb;
}

PeriodMatrix b_periods(const CurveModel& c, const NormalizedBasis& basis,
                       const QuadratureOptions& q) {
  const int g = c.genus;
  PeriodMatrix pm;
  pm.truncation = c.requested;
  pm.genus = g;
  pm.fingerprint = fingerprint(c);
  CMatrix B(g, g);
  for (int l = 0; l < g; ++l) {
    std::vector<cplx> mono(l + 1, 0.0);
    mono[l] = 1.0;
    for (int j = 0; j < g; ++j) B(j, l) = b_period(c, j + 1, mono, q);
  }
  pm.R = basis.coeff * B.transpose();

  auto min_eig = [](const CMatrix& R) {
    Eigen::MatrixXd im = 0.5 * (R.imag() + R.imag().transpose());
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(im).eigenvalues()(0);
  };
  if (!(min_eig(pm.R) > 0)) {
    // opposite sheet for y
    pm.R = -pm.R;
    pm.sheet_flipped = true;
    if (!(min_eig(pm.R) > 0))
      throw NumericError("period matrix: imaginary part not positive definite on either sheet (" +
                         pm.fingerprint + ")");
  }
  return pm;
}

PeriodMatrix period_matrix(const CurveModel& c, const QuadratureOptions& q) {
  if (c.degenerate()) {
    PeriodMatrix pm;
    pm.truncation = c.requested;
    pm.degenerate = true;
    pm.R = CMatrix::Zero(c.requested, c.requested);
    pm.fingerprint = fingerprint(c);
    return pm;
  }
  return b_periods(c, normalized_basis(c, q), q);
}

ThetaValue theta(const std::vector<cplx>& z, const CMatrix& R, int radius) {
  const int g = int(z.size());
  if (R.rows() != g || R.cols() != g) throw InputError("theta: dimension mismatch");
  if (radius < 1) throw InputError("theta: radius must be >= 1");
  ThetaValue out;
  if (g == 0) {
    out.value = 1.0;
    return out;
  }
  Eigen::MatrixXd im = 0.5 * (R.imag() + R.imag().transpose());
  const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(im).eigenvalues()(0);
  if (!(lmin > 0)) throw DomainError("theta: imaginary part of the period matrix is not positive");

  std::vector<int> n(g, -radius);
  cplx sum = 0;
  for (;;) {
    cplx e = 0;
    for (int a = 0; a < g; ++a) {
      cplx rn = 0;
      for (int b = 0; b < g; ++b) rn += R(a, b) * double(n[b]);
      e += double(n[a]) * (0.5 * rn + z[a]);
    }
    sum += std::exp(2.0 * kPi * kI * e);
    int a = 0;
    while (a < g && ++n[a] > radius) n[a++] = -radius;
    if (a == g) break;
  }
  out.value = sum;

  // n.Im(R).n >= lmin |n|^2 bounds every term by a product of 1-D Gaussians
  double total = 1, box = 1;
  for (int a = 0; a < g; ++a) {
    const double y = std::abs(z[a].imag());
    double in = 0, all = 0;
    for (int k = -(radius + 60); k <= radius + 60; ++k) {
      const double t = std::exp(-kPi * lmin * k * k + 2 * kPi * std::abs(k) * y);
      all += t;
      if (std::abs(k) <= radius) in += t;
    }
    total *= all;
    box *= in;
  }
  out.tail_bound = std::max(total - box, 0.0);
  return out;
}

HillPotential Reconstruction::potential() const {
  std::vector<double> unit(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) unit[i] = period * period * q[i];
  auto p = HillPotential::from_samples(unit, period);
  p.family = "finite-gap";
  return p;
}

Reconstruction its_matveev_reconstruct(const CurveModel& c, const std::vector<double>& phi,
                                       int samples, const QuadratureOptions& q) {
  if (samples < 256) throw InputError("its_matveev_reconstruct: at least 256 samples required");
  Reconstruction out;
  if (c.degenerate()) {
    out.period = 1.0;
    for (int k = 0; k < samples; ++k) out.xi.push_back(double(k) / samples);
    out.constant = c.branch.empty() ? 0.0 : c.branch[0];
    out.q.assign(samples, out.constant);
    return out;
  }
  if (c.genus > 2) throw InputError("its_matveev_reconstruct: supported for genus <= 2");
  if (c.branch.size() % 2 == 0)
    throw InputError("its_matveev_reconstruct: needs a branch point at infinity (odd count)");
  const int g = c.genus;
  if (!phi.empty() && int(phi.size()) != g) throw InputError("its_matveev_reconstruct: offset size");

  const auto pm = period_matrix(c, q);
  const auto nb = normalized_basis(c, q);
  // winding from the leading coefficients of the normalized differentials
  out.v.resize(g);
  for (int j = 0; j < g; ++j) out.v[j] = 2.0 * nb.coeff(j, g - 1).real();
  if (pm.sheet_flipped)
    for (double& v : out.v) v = -v;
  const double v1 = std::abs(out.v[0]);
  if (!(v1 > 0)) throw NumericError("its_matveev_reconstruct: vanishing winding vector");
  out.period = 1.0 / v1;

  Eigen::MatrixXd im = pm.R.imag();
  const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(im).eigenvalues()(0);
  const int radius = std::clamp(int(std::ceil(std::sqrt(40.0 / (kPi * lmin)))) + 1, 3, 40);

  auto log_theta = [&](double x) {
    std::vector<cplx> z(g);
    for (int j = 0; j < g; ++j) z[j] = (phi.empty() ? 0.0 : phi[j]) + x * out.v[j];
    const cplx t = theta(z, pm.R, radius).value;
    if (!(t.real() > 0)) {
      std::ostringstream os;
      os << "its_matveev_reconstruct: theta vanishes near xi = " << x;
      throw NumericError(os.str());
    }
    return std::log(t.real());
  };

  const double h = out.period / samples;
  out.xi.resize(samples);
  out.q.resize(samples);
  for (int k = 0; k < samples; ++k) {
    const double x = k * h;
    out.xi[k] = x;
    const double d2 = (-log_theta(x + 2 * h) + 16 * log_theta(x + h) - 30 * log_theta(x) +
                       16 * log_theta(x - h) - log_theta(x - 2 * h)) /
                      (12 * h * h);
    out.q[k] = -2 * d2;
  }
  {
    const double x = out.period;
    const double d2 = (-log_theta(x + 2 * h) + 16 * log_theta(x + h) - 30 * log_theta(x) +
                       16 * log_theta(x - h) - log_theta(x - 2 * h)) /
                      (12 * h * h);
    out.periodicity_error = std::abs(-2 * d2 - out.q[0]);
  }

  // fix the additive constant by the bottom of the spectrum
  const auto sb = periodic_spectrum(out.potential(), 1);
  out.constant = c.branch[0] - sb.lambda[0] / (out.period * out.period);
  for (double& v : out.q) v += out.constant;
  return out;
}

CompareResult compare_invariants(std::vector<InvariantEntry> a, std::vector<InvariantEntry> b,
                                 double tol) {
  auto key = [](const InvariantEntry& e) { return std::make_pair(e.label, e.point); };
  auto by_key = [&](const InvariantEntry& x, const InvariantEntry& y) { return key(x) < key(y); };
  std::stable_sort(a.begin(), a.end(), by_key);
  std::stable_sort(b.begin(), b.end(), by_key);
  if (a.size() != b.size()) throw InputError("compare_invariants: fields have different sizes");
  CompareResult res;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].label != b[i].label)
      throw InputError("compare_invariants: label mismatch " + a[i].label + " vs " + b[i].label);
    if (a[i].matrix.truncation != b[i].matrix.truncation)
      throw InputError("compare_invariants: truncation mismatch for " + a[i].label);
    std::ostringstream where;
    where << a[i].label << " at (";
    for (std::size_t j = 0; j < a[i].point.size(); ++j) where << (j ? ", " : "") << a[i].point[j];
    where << ")";
    const auto& Ra = a[i].matrix.R;
    const auto& Rb = b[i].matrix.R;
    double dev;
    if (Ra.rows() != Rb.rows() || Ra.cols() != Rb.cols() ||
        a[i].matrix.degenerate != b[i].matrix.degenerate) {
      dev = std::numeric_limits<double>::infinity();
    } else {
      dev = Ra.size() ? (Ra - Rb).cwiseAbs().maxCoeff() : 0.0;
    }
    if (dev > res.max_deviation || (res.worst.empty() && dev > 0)) {
      res.max_deviation = dev;
      res.worst = where.str();
    }
    if (!(dev <= tol)) res.equal = false;
  }
  return res;
}

}  // namespace spinv
