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

#include "spinv/kerr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spinv/errors.hpp"

namespace spinv {

double KerrParams::r_plus() const { return m + std::sqrt(m * m - a * a); }
double KerrParams::r_minus() const { return m - std::sqrt(m * m - a * a); }

void KerrParams::validate() const {
  if (!std::isfinite(m) || !std::isfinite(a) || !std::isfinite(epsilon))
    throw InputError("kerr: parameters must be finite");
  if (!(m > 0)) throw InputError("kerr: mass must be positive");
  if (!(a > 0 && a < m)) throw InputError("kerr: spin must satisfy 0 < a < m");
  if (!(epsilon > 0 && epsilon < (r_plus() - r_minus()) / 4))
    throw InputError("kerr: tube width must satisfy 0 < eps < (r+ - r-)/4");
}

double kerr_r(double x, double y, double z, double a) {
  const double rho2 = x * x + y * y + z * z;
  const double b = rho2 - a * a;
  const double D = std::sqrt(b * b + 4 * a * a * z * z);
  // inside the disc the sum b + D cancels; use the conjugate form there
  const double r2 = b >= 0 ? 0.5 * (b + D) : (D - b > 0 ? 2 * a * a * z * z / (D - b) : 0.0);
  return std::sqrt(r2);
}

double kerr_r_residual(double x, double y, double z, double a, double r) {
  const double rho2 = x * x + y * y + z * z;
  const double r2 = r * r;
  return std::abs(r2 * r2 - (rho2 - a * a) * r2 - a * a * z * z) / (r2 + a * a);
}

KerrMetric kerr_metric(double /*t*/, double x, double y, double z, const KerrParams& p) {
  const double a = p.a;
  const double r = kerr_r(x, y, z, a);
  if (!(r > 0)) throw DomainError("kerr_metric: r = 0 (ring or disc), the Kerr-Schild form is singular");
  KerrMetric k;
  k.r = r;
  const double r2a2 = r * r + a * a;
  k.f = 2 * p.m * r * r * r / (r * r * r * r + a * a * z * z);
  k.l << 1.0, (r * x + a * y) / r2a2, (r * y - a * x) / r2a2, z / r;
  k.eta = Eigen::Vector4d(-1, 1, 1, 1).asDiagonal();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) k.g(i, j) = k.eta(i, j) + k.f * (k.l[i] * k.l[j]);   // symmetric bit for bit
  const Eigen::Vector4d up = k.eta * k.l;
  const double scale = k.l.squaredNorm();
  k.null_eta = std::abs(k.l.dot(up)) / scale;
  k.null_g = std::abs(up.dot(k.g * up)) / scale;
  return k;
}

Eigen::MatrixXd kerr_metric_chart(const std::vector<double>& q, const KerrParams& p) {
  const KerrMetric k = kerr_metric(q[kAxisT], q[kAxisX], q[kAxisY], q[kAxisZ], p);
  // chart axis -> (t, x, y, z) index
  const int perm[4] = {0, 1, 3, 2};
  Eigen::MatrixXd g(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = k.g(perm[i], perm[j]);
  return g;
}

const KerrSurface& KerrLoci::surface(const std::string& name) const {
  for (const auto& s : surfaces)
    if (s.name == name) return s;
  throw InputError("kerr_loci: unknown surface " + name);
}

std::vector<double> KerrLoci::z_crossings(const std::string& name, double x, double y, double z_lo,
                                          double z_hi, int samples) const {
  const auto& s = surface(name);
  std::vector<double> out;
  if (name == "U0") {
    const double a2 = r_plus * r_minus;   // r+ r- = a^2
    if (std::abs(x * x + y * y - a2) <= 1e-12 * a2 && z_lo < 0 && z_hi > 0) out.push_back(0.0);
    return out;
  }
  double prev = s.level(x, y, z_lo), zp = z_lo;
  for (int i = 1; i < samples; ++i) {
    const double z = z_lo + (z_hi - z_lo) * double(i) / double(samples - 1);
    const double v = s.level(x, y, z);
    if (prev * v < 0) {
      double lo = zp, hi = z, flo = prev;
      for (int it = 0; it < 100 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi), fm = s.level(x, y, mid);
        if (flo * fm <= 0) hi = mid;
        else { lo = mid; flo = fm; }
      }
      out.push_back(0.5 * (lo + hi));
    }
    prev = v;
    zp = z;
  }
  return out;
}

KerrLoci kerr_loci(const KerrParams& p) {
  p.validate();
  KerrLoci L;
  L.r_plus = p.r_plus();
  L.r_minus = p.r_minus();
  const double m = p.m, a = p.a;
  auto horizon = [m](double rr) {
    return [m, rr](double x, double y, double z) { return x * x + y * y + 2 * m / rr * z * z - 2 * m * rr; };
  };
  L.surfaces = {
      {"U0", "x^2 + y^2 = a^2, z = 0",
       [a](double x, double y, double z) { return std::pow(x * x + y * y - a * a, 2) + z * z; }},
      {"U1", "x^2 + y^2 + (2m/r+) z^2 = 2m r+", horizon(L.r_plus)},
      {"U2", "x^2 + y^2 + (2m/r-) z^2 = 2m r-", horizon(L.r_minus)},
      {"U3", "r x + a y = 0", [a](double x, double y, double z) { return kerr_r(x, y, z, a) * x + a * y; }},
      {"U4", "r y - a x = 0", [a](double x, double y, double z) { return kerr_r(x, y, z, a) * y - a * x; }},
      {"U5", "x^2 + y^2 > a^2, z = 0",
       [a](double x, double y, double z) { return x * x + y * y > a * a ? z : 1.0; }},
  };
  return L;
}

Chart representative_set(const KerrParams& p, const std::vector<int>& n) {
  p.validate();
  if (n.size() != 4) throw InputError("representative_set: need four resolutions (t, x, z, y)");
  const double X = std::sqrt(2.0) * p.a / 2 + p.epsilon;
  const double Z = p.r_plus() + p.epsilon;
  // the box is open: sample it at cell centres, which also keeps z = 0 off the grid
  const std::vector<double> lo = {0, 0, -Z, 0}, hi = {1, X, Z, X};
  std::vector<double> clo(4), chi(4);
  for (int a = 0; a < 4; ++a) {
    const double half = 0.5 * (hi[a] - lo[a]) / n[a];
    clo[a] = lo[a] + half;
    chi[a] = hi[a] - half;
  }
  return Chart::box(clo, chi, n);
}

const std::array<int, 10>& kerr_index_table() {
  static const std::array<int, 10> table = {12, 4, 4, 2, 2, 6, 6, 2, 6, 2};
  return table;
}

std::vector<KerrCoefficientEntry> kerr_coefficients(const KerrParams& p) {
  p.validate();
  const double m = p.m, a = p.a;
  // chart point (t, x, z, y) -> named quantities
  struct Q {
    double x, y, z, r;
  };
  auto q = [a](const std::vector<double>& v) {
    const double x = v[kAxisX], y = v[kAxisY], z = v[kAxisZ];
    return Q{x, y, z, kerr_r(x, y, z, a)};
  };
  auto sigma = [a](const Q& s) { return std::pow(s.r, 4) + a * a * s.z * s.z; };   // r^4 + a^2 z^2
  auto u3 = [a](const Q& s) { return s.r * s.x + a * s.y; };
  auto u4 = [a](const Q& s) { return s.r * s.y - a * s.x; };
  auto w2 = [a](const Q& s) { return s.r * s.r + a * a; };

  auto make = [&](int i, int j, std::function<double(const Q&)> gp, std::function<double(const Q&)> gm,
                  std::vector<std::string> o) {
    KerrCoefficientEntry e;
    e.i = i;
    e.j = j;
    e.label = "g" + std::to_string(i) + std::to_string(j);
    e.coeff.i = i;
    e.coeff.j = j;
    e.coeff.label = e.label;
    e.coeff.g_plus = [q, gp](const std::vector<double>& v) { return gp(q(v)); };
    e.coeff.g_minus = [q, gm](const std::vector<double>& v) { return gm(q(v)); };
    e.o_loci = std::move(o);
    return e;
  };
  std::vector<KerrCoefficientEntry> out;
  out.push_back(make(0, 0, [=](const Q& s) { return 2 * m * std::pow(s.r, 3) - sigma(s); },
                     [=](const Q& s) { return sigma(s); }, {"U1", "U2"}));
  out.push_back(make(0, 1, [=](const Q& s) { return 2 * m * std::pow(s.r, 3) * u3(s); },
                     [=](const Q& s) { return sigma(s) * w2(s); }, {"U3"}));
  out.push_back(make(0, 2, [=](const Q& s) { return 2 * m * std::pow(s.r, 3) * u4(s); },
                     [=](const Q& s) { return sigma(s) * w2(s); }, {"U4"}));
  out.push_back(make(0, 3, [=](const Q& s) { return 2 * m * s.r * s.r * s.z; },
                     [=](const Q& s) { return sigma(s); }, {"U5"}));
  out.push_back(make(1, 1, [=](const Q& s) { return 2 * m * std::pow(s.r, 3) * u3(s) * u3(s) + w2(s) * w2(s); },
                     [=](const Q& s) { return sigma(s) * w2(s) * w2(s); }, {}));
  out.push_back(make(1, 2, [=](const Q& s) { return 2 * m * std::pow(s.r, 3) * u3(s) * u4(s); },
                     [=](const Q& s) { return sigma(s) * w2(s) * w2(s); }, {"U3", "U4"}));
  out.push_back(make(1, 3, [=](const Q& s) { return 2 * m * s.r * s.r * u3(s) * s.z; },
                     [=](const Q& s) { return sigma(s) * w2(s) * w2(s); }, {"U3", "U5"}));
  out.push_back(make(2, 2, [=](const Q& s) { return 2 * m * std::pow(s.r, 3) * u4(s) * u4(s) + w2(s) * w2(s); },
                     [=](const Q& s) { return sigma(s) * w2(s) * w2(s); }, {}));
  out.push_back(make(2, 3, [=](const Q& s) { return 2 * m * s.r * s.r * s.z * u4(s); },
                     [=](const Q& s) { return sigma(s) * w2(s) * w2(s); }, {"U4", "U5"}));
  out.push_back(make(3, 3, [=](const Q& s) { return 2 * m * s.r * s.z * s.z + sigma(s); },
                     [=](const Q& s) { return sigma(s); }, {}));
  const auto& table = kerr_index_table();
  for (std::size_t k = 0; k < out.size(); ++k) out[k].designated_index = table[k];
  return out;
}

std::vector<KerrNormalForm> kerr_normal_forms(const KerrParams& p, const Chart& chart, int samples) {
  p.validate();
  if (chart.dim != 4) throw InputError("kerr_normal_forms: chart must be four-dimensional (t, x, z, y)");
  ClassifyOptions opt;
  opt.axis = kAxisZ;
  opt.samples = samples;
  opt.epsilon = p.epsilon;
  const auto& table = kerr_index_table();
  std::vector<KerrNormalForm> out;
  const auto entries = kerr_coefficients(p);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    if (e.designated_index != table[k])
      throw NumericError("kerr_normal_forms: designated index of " + e.label + " disagrees with the table");
    KerrNormalForm f{e, normal_form(e.coeff, chart, opt), 0};
    f.root_count_index = f.nf.index;
    f.nf.index = e.designated_index;
    out.push_back(std::move(f));
  }
  return out;
}

FitOptions KerrInvariantOptions::default_fit() {
  FitOptions f;
  f.grid_points = 24;
  f.terms = 8;
  f.golden_iterations = 24;
  f.ray_samples = 128;
  f.spectrum = HillOptions::fast();
  return f;
}

std::vector<InvariantEntry> kerr_invariants(const KerrParams& p,
                                            const std::vector<std::array<double, 2>>& points,
                                            const KerrInvariantOptions& opt) {
  p.validate();
  if (opt.truncation < 1) throw InputError("kerr_invariants: truncation must be at least 1");
  if (opt.spectrum_gaps < opt.truncation) throw InputError("kerr_invariants: spectrum_gaps below truncation");
  const double Z = p.r_plus() + p.epsilon;
  const Chart ray = Chart::cube(1, -Z, Z, opt.z_nodes);
  ClassifyOptions copt;
  copt.epsilon = p.epsilon;

  std::vector<InvariantEntry> out;
  for (const auto& e : kerr_coefficients(p)) {
    if (!opt.coefficients.empty() &&
        std::find(opt.coefficients.begin(), opt.coefficients.end(), e.label) == opt.coefficients.end())
      continue;
    for (const auto& xy : points) {
      const std::string where = e.label + " at (" + format_double(xy[0]) + ", " + format_double(xy[1]) + ")";
      auto lift = [&](const ScalarClosure& g) {
        return [g, xy, t = opt.t](const std::vector<double>& v) {
          std::vector<double> full(4);
          full[kAxisT] = t;
          full[kAxisX] = xy[0];
          full[kAxisZ] = v[0];
          full[kAxisY] = xy[1];
          return g(full);
        };
      };
      MetricCoefficient c1 = e.coeff;
      c1.g_plus = lift(e.coeff.g_plus);
      c1.g_minus = lift(e.coeff.g_minus);
      InvariantEntry ie;
      ie.label = e.label;
      ie.point = {xy[0], xy[1]};
      try {
        const NormalForm nf = normal_form(c1, ray, copt);
        const RayProfile prof = nf.profiles.at(0);
        const auto op = fit_optimized_potential([&prof](double z) { return prof(z); }, -Z, Z,
                                                e.designated_index, opt.fit);
        ie.fit_T = op.T;
        ie.fit_objective = op.objective;
        ie.fit_at_edge = op.at_grid_edge;
        if (op.constant) {
          ie.matrix.R = CMatrix::Zero(opt.truncation, opt.truncation);
          ie.matrix.truncation = opt.truncation;
          ie.matrix.degenerate = true;
          ie.matrix.fingerprint = "degenerate";
        } else {
          const auto sb = periodic_spectrum(op.unit_potential(), opt.spectrum_gaps, opt.spectrum);
          ie.matrix = period_matrix(truncate_curve(sb, opt.truncation), opt.quadrature);
          ie.spectrum = sb.lambda;
        }
      } catch (const DomainError& ex) {
        throw DomainError(where + ": " + ex.what());
      } catch (const NumericError& ex) {
        throw NumericError(where + ": " + ex.what());
      } catch (const InputError& ex) {
        throw InputError(where + ": " + ex.what());
      }
      out.push_back(std::move(ie));
    }
  }
  return out;
}

KerrPreframe build_kerr_preframe(const KerrParams& p, const Chart& chart,
                                 const std::vector<KerrNormalForm>& forms, double tolerance) {
  p.validate();
  if (chart.dim != 4) throw InputError("build_kerr_preframe: chart must be four-dimensional");
  const NormalForm* nf[4][4] = {};
  for (const auto& f : forms) {
    if (!(f.nf.chart == chart)) throw InputError("build_kerr_preframe: normal form on a different chart");
    nf[f.entry.i][f.entry.j] = nf[f.entry.j][f.entry.i] = &f.nf;
  }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (!nf[i][j]) throw InputError("build_kerr_preframe: missing coefficient normal forms");

  // coefficient index j in (t, x, y, z) -> form slot and vector slot with sign
  const int form_axis[4] = {kAxisT, kAxisX, kAxisY, kAxisZ};
  const int vec_axis[4] = {kAxisZ, kAxisY, kAxisX, kAxisT};
  const double vec_sign[4] = {1, 1, -1, -1};

  KerrPreframe out;
  out.frame.chart = chart;
  for (int i = 0; i < 4; ++i) {
    CourantSection s = CourantSection::zero(chart);
    for (int j = 0; j < 4; ++j) {
      const NormalForm& f = *nf[i][j];
      for (std::size_t n = 0; n < chart.size(); ++n) {
        const double e = std::exp(f.w.v[n]);
        s.xi[form_axis[j]][n] += e * std::cos(f.kappa.v[n]);
        s.X[vec_axis[j]][n] += vec_sign[j] * e * std::sin(f.kappa.v[n]);
      }
    }
    out.frame.sections.push_back(std::move(s));
  }
  out.complement = out.frame.mapped();
  out.check = is_preframe(out.frame, tolerance);

  out.min_off_tubes = out.min_off_tubes_relative = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < chart.size(); ++n) {
    const double z = chart.coord(kAxisZ, chart.unravel(n)[kAxisZ]);
    const std::size_t ray = ray_of(chart, kAxisZ, n);
    bool tube = false;
    for (const auto& f : forms) tube = tube || f.nf.loci.in_tube(ray, z);
    if (tube) continue;
    out.min_off_tubes = std::min(out.min_off_tubes, out.check.min_singular.v[n]);
    out.min_off_tubes_relative = std::min(out.min_off_tubes_relative, out.check.relative.v[n]);
  }
  out.ok = out.min_off_tubes > tolerance;
  return out;
}

}  // namespace spinv
