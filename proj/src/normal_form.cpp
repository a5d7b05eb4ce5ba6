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

#include "spinv/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "spinv/errors.hpp"

namespace spinv {

namespace {

constexpr double kPi = std::numbers::pi;

struct RawRoot {
  double x;
  bool touch;
};

// Sign changes refined by TOMS 748, plus even-order zeros found as local
// minima of |f| that reach the noise floor.
std::vector<RawRoot> ray_roots(const std::function<double(double)>& f, double lo, double hi, int samples,
                               double root_tol, double touch_tol) {
  std::vector<double> xs(samples), v(samples);
  double scale = 0;
  for (int j = 0; j < samples; ++j) {
    xs[j] = lo + (hi - lo) * double(j) / double(samples - 1);
    v[j] = f(xs[j]);
    if (std::isfinite(v[j])) scale = std::max(scale, std::abs(v[j]));
  }
  std::vector<RawRoot> out;
  if (scale == 0) return out;   // identically zero rays are not loci
  auto tol = [root_tol](double a, double b) { return std::abs(b - a) <= root_tol; };
  for (int j = 0; j + 1 < samples; ++j) {
    const double a = v[j], b = v[j + 1];
    if (!std::isfinite(a) || !std::isfinite(b)) continue;
    if (a == 0) {
      if (j > 0) out.push_back({xs[j], std::isfinite(v[j - 1]) && v[j - 1] * b > 0});
      continue;
    }
    if (a * b < 0) {
      std::uintmax_t it = 200;
      auto r = boost::math::tools::toms748_solve(f, xs[j], xs[j + 1], a, b, tol, it);
      out.push_back({0.5 * (r.first + r.second), false});
    }
  }
  for (int j = 1; j + 1 < samples; ++j) {
    const double a = v[j - 1], b = v[j], c = v[j + 1];
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || b == 0) continue;
    if (a * b <= 0 || b * c <= 0) continue;
    if (std::abs(b) > std::abs(a) || std::abs(b) > std::abs(c)) continue;
    auto absf = [&](double x) { return std::abs(f(x)); };
    auto m = boost::math::tools::brent_find_minima(absf, xs[j - 1], xs[j + 1], 52);
    if (m.second <= touch_tol * scale) out.push_back({m.first, true});
  }
  std::sort(out.begin(), out.end(), [](const RawRoot& p, const RawRoot& q) { return p.x < q.x; });
  // a symmetric minimum straddled by two samples is found twice; Brent only
  // locates it to about sqrt(eps), so merge anything within half a sample
  const double merge = std::max(4 * root_tol, 0.5 * (hi - lo) / double(samples - 1));
  std::vector<RawRoot> uniq;
  for (const auto& r : out) {
    if (uniq.empty() || r.x - uniq.back().x > merge)
      uniq.push_back(r);
    else if (!r.touch)
      uniq.back() = r;
  }
  return uniq;
}

std::vector<std::size_t> ray_bases(const Chart& c, int axis) {
  std::vector<std::size_t> base;
  const std::size_t s = c.stride(axis);
  for (std::size_t n = 0; n < c.size(); ++n)
    if ((n / s) % std::size_t(c.n[axis]) == 0) base.push_back(n);
  return base;
}

void require_axis(const Chart& c, int axis) {
  if (axis < 0 || axis >= c.dim) throw InputError("normal form: blow-up axis outside the chart");
}

}  // namespace

double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0);
  }
  return std::sin(x) / x;
}

std::string to_string(LocusKind k) {
  switch (k) {
    case LocusKind::N: return "N";
    case LocusKind::O: return "O";
    case LocusKind::Coalesced: return "NO";
  }
  return "?";
}

bool LocusSet::empty() const {
  for (const auto& r : rays)
    if (!r.roots.empty()) return false;
  return true;
}

std::size_t LocusSet::count(LocusKind k) const {
  std::size_t c = 0;
  for (const auto& r : rays)
    for (const auto& x : r.roots) c += x.kind == k;
  return c;
}

bool LocusSet::in_tube(std::size_t ray, double x1) const {
  if (ray >= rays.size()) return false;
  for (const auto& r : rays[ray].roots)
    if (std::abs(x1 - r.x1) < epsilon) return true;
  return false;
}

std::size_t ray_count(const Chart& c, int axis) {
  require_axis(c, axis);
  return c.size() / std::size_t(c.n[axis]);
}

std::size_t ray_of(const Chart& c, int axis, std::size_t node) {
  require_axis(c, axis);
  const auto idx = c.unravel(node);
  std::size_t r = 0;
  for (int a = 0; a < c.dim; ++a)
    if (a != axis) r = r * std::size_t(c.n[a]) + std::size_t(idx[a]);
  return r;
}

LocusSet classify_loci(const MetricCoefficient& c, const Chart& chart, const ClassifyOptions& opt) {
  require_axis(chart, opt.axis);
  if (!c.g_plus || !c.g_minus) throw InputError("classify_loci: coefficient closures are missing");
  if (opt.samples < 8) throw InputError("classify_loci: need at least 8 samples per ray");
  LocusSet out;
  out.axis = opt.axis;
  out.lo = chart.lo[opt.axis];
  out.hi = chart.hi[opt.axis];
  const double L = out.hi - out.lo;

  std::size_t min_count = std::numeric_limits<std::size_t>::max(), max_count = 0;
  double min_bdist = std::numeric_limits<double>::infinity();
  for (std::size_t base : ray_bases(chart, opt.axis)) {
    RayLoci ray;
    std::vector<double> p = chart.point(base);
    for (int a = 0; a < chart.dim; ++a)
      if (a != opt.axis) ray.transverse.push_back(p[a]);
    auto along = [&](const ScalarClosure& g) {
      return [&, g](double x) {
        std::vector<double> q = p;
        q[opt.axis] = x;
        return g(q);
      };
    };
    const auto rn = ray_roots(along(c.g_minus), out.lo, out.hi, opt.samples, opt.root_tol, opt.touch_tol);
    const auto ro = ray_roots(along(c.g_plus), out.lo, out.hi, opt.samples, opt.root_tol, opt.touch_tol);
    for (const auto& r : rn) ray.roots.push_back({r.x, LocusKind::N, r.touch});
    for (const auto& r : ro) {
      bool merged = false;
      for (auto& q : ray.roots)
        if (q.kind == LocusKind::N && std::abs(q.x1 - r.x) <= opt.coalesce_tol * L) {
          q.kind = LocusKind::Coalesced;
          q.touch = q.touch || r.touch;
          merged = true;
        }
      if (!merged) ray.roots.push_back({r.x, LocusKind::O, r.touch});
    }
    std::sort(ray.roots.begin(), ray.roots.end(),
              [](const LocusRoot& a, const LocusRoot& b) { return a.x1 < b.x1; });
    for (const auto& r : ray.roots) min_bdist = std::min({min_bdist, r.x1 - out.lo, out.hi - r.x1});
    min_count = std::min(min_count, ray.roots.size());
    max_count = std::max(max_count, ray.roots.size());
    out.rays.push_back(std::move(ray));
  }
  if (min_count != max_count)
    out.warnings.push_back("root count varies across the transverse grid (" + std::to_string(min_count) +
                           " to " + std::to_string(max_count) + "): locus is not a graph over the slice");
  if (opt.epsilon > 0)
    out.epsilon = opt.epsilon;
  else
    out.epsilon = std::isfinite(min_bdist) ? 0.25 * min_bdist : 0.25 * L;
  return out;
}

double standard_amplitude(const MetricCoefficient& c, const std::vector<double>& point) {
  const double gm = c.g_minus(point), gp = c.g_plus(point);
  if (!std::isfinite(gm) || !std::isfinite(gp)) throw DomainError("standard_amplitude: coefficient not finite");
  if (std::abs(gm) < 1e-14 && std::abs(gp) < 1e-14)
    throw InputError("standard_amplitude: numerator and denominator vanish together");
  return std::abs(sinc(gm) * sinc(gp));
}

double standard_amplitude(const MetricCoefficient& c, const std::vector<double>& point,
                          const LocusSet& loci, const Chart& chart) {
  if (int(point.size()) != chart.dim) throw InputError("standard_amplitude: point dimension");
  std::vector<int> idx(chart.dim);
  for (int a = 0; a < chart.dim; ++a) {
    const double t = (point[a] - chart.lo[a]) / chart.step(a);
    idx[a] = std::clamp(int(std::lround(t)), 0, chart.n[a] - 1);
  }
  const std::size_t ray = ray_of(chart, loci.axis, chart.ravel(idx));
  if (!loci.in_tube(ray, point[loci.axis]))
    throw DomainError("standard_amplitude: point lies outside the locus tube");
  return standard_amplitude(c, point);
}

int designated_index(const MetricCoefficient& c, const Chart& chart, int axis, int samples) {
  require_axis(chart, axis);
  std::vector<double> p(chart.dim);
  for (int a = 0; a < chart.dim; ++a) p[a] = 0.5 * (chart.lo[a] + chart.hi[a]);
  const double lo = chart.lo[axis], hi = chart.hi[axis];
  auto along = [&](const ScalarClosure& g) {
    return [&, g](double x) {
      std::vector<double> q = p;
      q[axis] = x;
      return std::sin(g(q));
    };
  };
  auto r = ray_roots(along(c.g_minus), lo, hi, samples, 1e-10, 1e-12);
  const auto r2 = ray_roots(along(c.g_plus), lo, hi, samples, 1e-10, 1e-12);
  r.insert(r.end(), r2.begin(), r2.end());
  std::sort(r.begin(), r.end(), [](const RawRoot& a, const RawRoot& b) { return a.x < b.x; });
  int distinct = 0;
  double last = -std::numeric_limits<double>::infinity();
  for (const auto& x : r) {
    if (x.x - last > 1e-8 * (hi - lo)) ++distinct;
    last = x.x;
  }
  return 2 * std::max(distinct - 1, 0);
}

RayProfile::RayProfile(const std::vector<LocusRoot>& roots, double lo, double hi, double epsilon)
    : lo_(lo), hi_(hi) {
  double p = kPi / 4;
  for (std::size_t l = 0; l < roots.size(); ++l) {
    const double r = roots[l].x1;
    double h = std::min({epsilon, 0.9 * (r - lo), 0.9 * (hi - r)});
    if (l > 0) h = std::min(h, 0.45 * (r - roots[l - 1].x1));
    if (l + 1 < roots.size()) h = std::min(h, 0.45 * (roots[l + 1].x1 - r));
    if (!(h > 0)) throw InputError("RayProfile: locus on the chart boundary or repeated");

    const bool flip = !(roots[l].touch || roots[l].kind == LocusKind::Coalesced);
    const double even = 2 * kPi * std::round(p / (2 * kPi));
    double target;
    if (roots[l].kind == LocusKind::O)
      target = p - even > 0 ? p + 3 * kPi / 4 : p - 3 * kPi / 4;
    else
      target = even;
    const double after = flip ? 2 * target - p : p;

    const double s1 = (target - p) / h, s2 = (after - target) / h;
    const double mid = s1 * s2 > 0 ? 2 / (1 / s1 + 1 / s2) : 0.0;
    pieces_.emplace_back(std::vector<double>{r - h, r, r + h}, std::vector<double>{p, target, after},
                         std::vector<double>{0.0, mid, 0.0});
    roots_.push_back(r);
    half_.push_back(h);
    target_.push_back(target);
    after_.push_back(after);
    p = after;
  }
}

double RayProfile::operator()(double x) const {
  double plateau = kPi / 4;
  for (std::size_t l = 0; l < roots_.size(); ++l) {
    if (std::abs(x - roots_[l]) <= half_[l]) return pieces_[l](x);
    if (x > roots_[l]) plateau = after_[l];
  }
  return plateau;
}

NormalForm construct_kappa(const Field& amplitude, const LocusSet& loci, const Chart& chart) {
  require_axis(chart, loci.axis);
  if (!(amplitude.chart == chart)) throw InputError("construct_kappa: amplitude field is on a different chart");
  const int axis = loci.axis;
  const std::size_t nray = ray_count(chart, axis);
  if (loci.rays.size() != nray) throw InputError("construct_kappa: locus set does not match the chart rays");
  const double h = chart.step(axis);
  const int n = chart.n[axis];

  NormalForm nf;
  nf.chart = chart;
  nf.axis = axis;
  nf.loci = loci;
  nf.amplitude = amplitude;
  nf.kappa = Field(chart);
  nf.w = Field(chart);

  for (std::size_t r = 0; r < nray; ++r) {
    std::vector<LocusRoot> snapped;
    for (const auto& root : loci.rays[r].roots) {
      const int j = std::clamp(int(std::lround((root.x1 - chart.lo[axis]) / h)), 1, n - 2);
      LocusRoot s = root;
      s.x1 = chart.coord(axis, j);
      if (!snapped.empty() && s.x1 - snapped.back().x1 < 4 * h - 1e-12 * h)
        throw InputError("construct_kappa: locus spacing below 4 grid cells on ray " + std::to_string(r));
      snapped.push_back(s);
    }
    nf.profiles.emplace_back(snapped, chart.lo[axis], chart.hi[axis], loci.epsilon);
  }

  for (std::size_t i = 0; i < chart.size(); ++i) {
    const std::size_t r = ray_of(chart, axis, i);
    const double x = chart.coord(axis, chart.unravel(i)[axis]);
    const double k = nf.profiles[r](x);
    nf.kappa.v[i] = k;
    const double c2 = std::max(std::cos(k) * std::cos(k), 1e-12);
    nf.w.v[i] = 0.5 * std::log(std::max(amplitude.v[i], 1e-300) / c2);
  }
  return nf;
}

NormalForm normal_form(const MetricCoefficient& c, const Chart& chart, const ClassifyOptions& opt) {
  const LocusSet loci = classify_loci(c, chart, opt);
  Field amp(chart);
  for (std::size_t i = 0; i < chart.size(); ++i) {
    const auto p = chart.point(i);
    const double gm = c.g_minus(p), gp = c.g_plus(p);
    // where both vanish the limit along the ray is 1 for each factor
    amp.v[i] = std::isfinite(gm) && std::isfinite(gp) ? std::abs(sinc(gm) * sinc(gp)) : 0.0;
  }
  NormalForm nf = construct_kappa(amp, loci, chart);
  nf.index = designated_index(c, chart, opt.axis);
  nf.label = c.label;
  return nf;
}

void NormalForm::write(const std::string& stem) const {
  FieldBundle b;
  b.chart = chart;
  b.names = {"w", "kappa", "amplitude"};
  b.comps = {w.v, kappa.v, amplitude.v};
  write_fields(stem, b);
  std::ofstream os(stem + ".manifest");
  if (!os) throw InputError("NormalForm::write: cannot open " + stem + ".manifest");
  os << "label " << (label.empty() ? "-" : label) << "\n";
  os << "axis " << axis << "\nindex " << index << "\nepsilon " << format_double(loci.epsilon) << "\n";
  for (const auto& wmsg : loci.warnings) os << "warning " << wmsg << "\n";
  for (std::size_t r = 0; r < loci.rays.size(); ++r)
    for (const auto& root : loci.rays[r].roots)
      os << "root " << r << ' ' << format_double(root.x1) << ' ' << to_string(root.kind)
         << (root.touch ? " touch" : " simple") << "\n";
}

LaplaceResidual laplace_beltrami_residual(const MetricClosure& g, const NormalForm& nf, int lg) {
  const Chart& c = nf.chart;
  if (lg < 1) throw InputError("laplace_beltrami_residual: exponent must be positive");
  const std::size_t N = c.size();
  Field F(c);
  for (std::size_t i = 0; i < N; ++i) F.v[i] = std::pow(std::exp(nf.w.v[i]) * std::sin(nf.kappa.v[i]), lg);

  std::vector<Field> grad;
  for (int a = 0; a < c.dim; ++a) grad.push_back(F.derivative(a));

  LaplaceResidual out;
  out.values = Field(c);
  std::vector<char> bad(N, 0);
  std::vector<double> vol(N, 1.0);
  std::vector<Field> flux(c.dim, Field(c));
  for (std::size_t i = 0; i < N; ++i) {
    const Eigen::MatrixXd G = g(c.point(i));
    bool ok = G.rows() == c.dim && G.cols() == c.dim && G.allFinite();
    double det = ok ? G.determinant() : 0.0;
    ok = ok && std::isfinite(det) && det != 0.0;
    Eigen::MatrixXd Ginv;
    if (ok) {
      Ginv = G.inverse();
      ok = Ginv.allFinite();
    }
    if (!ok) {
      bad[i] = 1;
      continue;
    }
    vol[i] = std::sqrt(std::abs(det));
    for (int a = 0; a < c.dim; ++a) {
      double s = 0;
      for (int b = 0; b < c.dim; ++b) s += Ginv(a, b) * grad[b].v[i];
      flux[a].v[i] = vol[i] * s;
    }
  }

  // exclusion: boundary band of two cells, one cell around loci and bad nodes
  std::vector<char> excl(N, 0);
  const double h = c.step(nf.axis);
  for (std::size_t i = 0; i < N; ++i) {
    if (!c.interior(i, 2)) excl[i] = 1;
    if (!nf.profiles.empty()) {
      const double x = c.coord(nf.axis, c.unravel(i)[nf.axis]);
      for (double r : nf.profiles[ray_of(c, nf.axis, i)].roots())
        if (std::abs(x - r) <= h * (1 + 1e-9)) excl[i] = 1;
    }
  }
  for (std::size_t i = 0; i < N; ++i) {
    if (!bad[i]) continue;
    excl[i] = 1;
    for (int a = 0; a < c.dim; ++a) {
      const std::size_t s = c.stride(a);
      const int j = int((i / s) % std::size_t(c.n[a]));
      if (j > 0) excl[i - s] = 1;
      if (j + 1 < c.n[a]) excl[i + s] = 1;
    }
  }

  std::vector<Field> dflux;
  for (int a = 0; a < c.dim; ++a) dflux.push_back(flux[a].derivative(a));
  for (std::size_t i = 0; i < N; ++i) {
    if (excl[i]) {
      ++out.excluded;
      if (bad[i]) ++out.overflow;
      continue;
    }
    double div = 0;
    for (int a = 0; a < c.dim; ++a) div += dflux[a].v[i];
    const double v = div / vol[i];
    out.values.v[i] = v;
    if (std::abs(v) > out.sup || !std::isfinite(v)) {
      out.sup = std::abs(v);
      out.worst_node = i;
    }
  }
  return out;
}

}  // namespace spinv
