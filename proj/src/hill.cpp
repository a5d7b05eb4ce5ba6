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

#include "spinv/hill.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>
#include <boost/numeric/odeint.hpp>

#include "spinv/errors.hpp"

namespace spinv {

namespace {

constexpr double kPi = std::numbers::pi;

void fill_stats(HillPotential& p) {
  constexpr int kSamples = 2048;
  double sum = 0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int j = 0; j < kSamples; ++j) {
    const double v = p.q(double(j) / kSamples);
    if (!std::isfinite(v)) throw InputError("potential is not finite on the period");
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // periodic trapezoid rule, spectrally accurate for smooth periodic q
  p.mean = sum / kSamples;
  p.qmin = lo;
  p.qmax = hi;
  const double gap = std::abs(p.q(0.0) - p.q(1.0));
  if (gap > 1e-10 * (1.0 + std::abs(hi) + std::abs(lo)))
    throw InputError("potential is not continuous under periodic extension");
}

// ---------------------------------------------------------------------------
// Shooting

template <class R>
struct Tolerances {
  R abs, rel;
};

template <class R>
Tolerances<R> tolerances(Precision p) {
  switch (p) {
    case Precision::Extended: return {R(2e-18L), R(2e-18L)};
    case Precision::Standard: return {R(1e-13), R(1e-11)};
    case Precision::Fast: return {R(1e-11), R(1e-9)};
  }
  return {R(1e-13), R(1e-11)};
}

// State: y1, y1', y2, y2' and optionally their lambda derivatives.
template <class R, std::size_t N>
struct HillRhs {
  const HillPotential* q;
  R lambda;
  long* calls;
  long budget;

  void operator()(const std::array<R, N>& s, std::array<R, N>& d, R x) const {
    if (++*calls > budget) throw NumericError("Hill integrator exceeded its step budget");
    const R v = R(q->q(double(x))) - lambda;
    d[0] = s[1];
    d[1] = v * s[0];
    d[2] = s[3];
    d[3] = v * s[2];
    if constexpr (N == 8) {
      d[4] = s[5];
      d[5] = v * s[4] - s[0];
      d[6] = s[7];
      d[7] = v * s[6] - s[2];
    }
  }
};

template <class R, std::size_t N>
std::array<R, N> integrate_period(const HillPotential& q, R lambda, const HillOptions& opt,
                                  long* steps) {
  namespace ode = boost::numeric::odeint;
  using State = std::array<R, N>;
  State s{};
  s[0] = 1;
  s[3] = 1;
  const auto tol = tolerances<R>(opt.precision);
  long calls = 0;
  HillRhs<R, N> rhs{&q, lambda, &calls, opt.max_steps * 13};
  auto stepper = ode::make_controlled(tol.abs, tol.rel, ode::runge_kutta_fehlberg78<State, R>());
  // first step sized to the local wavelength
  const R k = std::sqrt(std::abs(lambda) + R(std::max(std::abs(q.qmin), std::abs(q.qmax))) + 1);
  const R dt0 = std::min(R(0.05), R(0.5) / k);
  const auto n = ode::integrate_adaptive(stepper, rhs, s, R(0), R(1), dt0);
  if (steps) *steps = static_cast<long>(n);
  return s;
}

template <std::size_t N>
Monodromy monodromy_impl(const HillPotential& q, double lambda, const HillOptions& opt) {
  Monodromy m;
  auto fill = [&](const auto& s) {
    m.y1 = double(s[0]);
    m.dy1 = double(s[1]);
    m.y2 = double(s[2]);
    m.dy2 = double(s[3]);
    if constexpr (N == 8) {
      m.y1_l = double(s[4]);
      m.dy1_l = double(s[5]);
      m.y2_l = double(s[6]);
      m.dy2_l = double(s[7]);
    }
  };
  if (opt.precision == Precision::Extended)
    fill(integrate_period<long double, N>(q, lambda, opt, &m.steps));
  else
    fill(integrate_period<double, N>(q, lambda, opt, &m.steps));
  return m;
}

// Quantities evaluated in working precision R.
template <class R>
struct Shooter {
  const HillPotential& q;
  HillOptions opt;

  template <std::size_t N>
  std::array<R, N> run(R lambda) const {
    long steps = 0;
    return integrate_period<R, N>(q, lambda, opt, &steps);
  }
  R delta(R l) const {
    auto s = run<4>(l);
    return s[0] + s[3];
  }
  R delta_prime(R l) const {
    auto s = run<8>(l);
    return s[4] + s[7];
  }
  // Delta^2 - 4 without cancellation, using det = 1.
  R dee(R l) const {
    auto s = run<4>(l);
    const R a = s[0] - s[3];
    return a * a + 4 * s[2] * s[1];
  }
  R y2(R l) const { return run<4>(l)[2]; }
  R y1(R l) const { return run<4>(l)[0]; }
  R dy1(R l) const { return run<4>(l)[1]; }
};

template <class R>
R solve_root(const std::function<R(R)>& f, R a, R b, R fa, R fb, const char* what,
             int bits = std::numeric_limits<R>::digits - 3) {
  if (fa == 0) return a;
  if (fb == 0) return b;
  if ((fa > 0) == (fb > 0)) {
    std::ostringstream os;
    os.precision(17);
    os << "root bracket failure for " << what << " on [" << double(a) << ", " << double(b)
       << "], values " << double(fa) << ", " << double(fb);
    throw NumericError(os.str());
  }
  boost::uintmax_t iters = 300;
  auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb,
                                             boost::math::tools::eps_tolerance<R>(bits), iters);
  return (r.first + r.second) / 2;
}

double default_scan_step(const HillOptions& opt) {
  if (opt.scan_step > 0) return opt.scan_step;
  return opt.precision == Precision::Fast ? kPi / 8 : kPi / 32;
}

template <class R>
BandSkeleton skeleton_impl(const HillPotential& q, int n, const HillOptions& opt) {
  Shooter<R> sh{q, opt};
  BandSkeleton sk;
  sk.lambda_lo = q.qmin - 1.0;
  const R lo = R(sk.lambda_lo);
  const R h = R(default_scan_step(opt));
  const int want = n + 1;
  R k_prev = 0;
  R d_prev = sh.delta(lo);
  const R k_limit = R(want + 8) * R(kPi) + std::sqrt(R(q.qmax - q.qmin) + 1) * 4;
  std::function<R(R)> fdelta = [&](R l) { return sh.delta(l); };
  while (int(sk.zeros.size()) < want) {
    const R k = k_prev + h;
    if (k > k_limit) {
      std::ostringstream os;
      os << "band scan found only " << sk.zeros.size() << " of " << want
         << " discriminant zeros below lambda = " << double(lo + k * k);
      throw NumericError(os.str());
    }
    const R l = lo + k * k;
    const R d = sh.delta(l);
    if (d == 0 || (d > 0) != (d_prev > 0)) {
      const R a = lo + k_prev * k_prev;
      sk.zeros.push_back(double(solve_root<R>(fdelta, a, l, d_prev, d, "Delta")));
      if (d == 0) {
        // step past the exact zero so the next bracket is clean
        k_prev = k + h / 4;
        d_prev = sh.delta(lo + k_prev * k_prev);
        continue;
      }
    }
    k_prev = k;
    d_prev = d;
  }
  return sk;
}

double noise_floor(Precision p) {
  switch (p) {
    case Precision::Extended: return 1e4 * 4e-36;
    case Precision::Standard: return 1e4 * 1e-22;
    case Precision::Fast: return 1e4 * 1e-18;
  }
  return 1e-18;
}

template <class R>
SpectrumBundle spectrum_impl(const HillPotential& q, int n, const HillOptions& opt) {
  Shooter<R> sh{q, opt};
  const BandSkeleton sk = skeleton_impl<R>(q, n, opt);
  const int bits = opt.precision == Precision::Fast ? 40 : std::numeric_limits<R>::digits - 3;
  SpectrumBundle sb;
  sb.n = n;
  sb.noise = noise_floor(opt.precision);
  sb.lambda.assign(2 * n + 1, 0.0);
  sb.double_flag.assign(n, false);

  std::function<R(R)> fdee = [&](R l) { return sh.dee(l); };
  std::function<R(R)> fdp = [&](R l) { return sh.delta_prime(l); };

  const R lo = R(sk.lambda_lo);
  const R z1 = R(sk.zeros[0]);
  sb.lambda[0] = double(solve_root<R>(fdee, lo, z1, sh.dee(lo), sh.dee(z1), "lambda_0", bits));

  for (int i = 1; i <= n; ++i) {
    const R za = R(sk.zeros[i - 1]);
    const R zb = R(sk.zeros[i]);
    const R c = solve_root<R>(fdp, za, zb, sh.delta_prime(za), sh.delta_prime(zb), "Delta'", bits);
    const R dc = sh.dee(c);
    if (dc <= R(sb.noise)) {
      sb.lambda[2 * i - 1] = sb.lambda[2 * i] = double(c);
      sb.double_flag[i - 1] = true;
      continue;
    }
    const R dza = sh.dee(za), dzb = sh.dee(zb);
    sb.lambda[2 * i - 1] = double(solve_root<R>(fdee, za, c, dza, dc, "lambda_{2i-1}", bits));
    sb.lambda[2 * i] = double(solve_root<R>(fdee, c, zb, dc, dzb, "lambda_{2i}", bits));
  }

  if (!opt.auxiliary) return sb;

  sb.disc.resize(sb.lambda.size());
  for (std::size_t i = 0; i < sb.lambda.size(); ++i) sb.disc[i] = double(sh.delta(R(sb.lambda[i])));

  // tied spectrum: one Dirichlet root per [z_i, z_{i+1}], clamped into the gap
  std::function<R(R)> fy2 = [&](R l) { return sh.y2(l); };
  std::function<R(R)> fdy1 = [&](R l) { return sh.dy1(l); };
  sb.mu.resize(n);
  sb.nu.resize(n + 1);
  sb.nu[0] = double(solve_root<R>(fdy1, lo, z1, sh.dy1(lo), sh.dy1(z1), "nu_0"));
  for (int i = 1; i <= n; ++i) {
    const R za = R(sk.zeros[i - 1]);
    const R zb = R(sk.zeros[i]);
    double mu = double(solve_root<R>(fy2, za, zb, sh.y2(za), sh.y2(zb), "mu_i"));
    double nu = double(solve_root<R>(fdy1, za, zb, sh.dy1(za), sh.dy1(zb), "nu_i"));
    const double glo = sb.lambda[2 * i - 1], ghi = sb.lambda[2 * i];
    sb.mu[i - 1] = std::clamp(mu, glo, ghi);
    sb.nu[i] = std::clamp(nu, glo, ghi);
  }
  return sb;
}

template <class R>
std::vector<double> value_y1_roots(const HillPotential& q, int n, const HillOptions& opt) {
  Shooter<R> sh{q, opt};
  const BandSkeleton sk = skeleton_impl<R>(q, n, opt);
  std::function<R(R)> fy1 = [&](R l) { return sh.y1(l); };
  const R lo = R(sk.lambda_lo);
  const R top = R(sk.zeros.back());
  const R h = R(default_scan_step(opt)) / 2;
  std::vector<double> roots;
  R k_prev = 0, v_prev = sh.y1(lo);
  for (R k = h;; k += h) {
    R l = lo + k * k;
    const bool last = l >= top;
    if (last) l = top;
    const R v = sh.y1(l);
    if ((v > 0) != (v_prev > 0))
      roots.push_back(double(solve_root<R>(fy1, lo + k_prev * k_prev, l, v_prev, v, "nu (y1)")));
    if (last) break;
    k_prev = k;
    v_prev = v;
  }
  return roots;
}

}  // namespace

// ---------------------------------------------------------------------------
// HillPotential factories

HillPotential HillPotential::from_function(std::function<double(double)> f, double length,
                                           std::string family) {
  if (!(length > 0)) throw InputError("period length must be positive");
  HillPotential p;
  p.q = std::move(f);
  p.length = length;
  p.family = std::move(family);
  fill_stats(p);
  return p;
}

HillPotential HillPotential::constant(double c) {
  return from_function([c](double) { return c; }, 1.0, "constant");
}

HillPotential HillPotential::trigonometric(double a0, std::vector<double> a, std::vector<double> b) {
  auto f = [a0, a, b](double x) {
    double v = a0;
    for (std::size_t k = 0; k < a.size(); ++k) v += a[k] * std::cos(2 * kPi * double(k + 1) * x);
    for (std::size_t k = 0; k < b.size(); ++k) v += b[k] * std::sin(2 * kPi * double(k + 1) * x);
    return v;
  };
  return from_function(f, 1.0, "trigonometric");
}

HillPotential HillPotential::mathieu(double amplitude) {
  return from_function([amplitude](double x) { return 2 * amplitude * std::cos(2 * kPi * x); }, 1.0,
                       "mathieu");
}

HillPotential HillPotential::from_samples(std::vector<double> samples, double length) {
  const std::size_t n = samples.size();
  if (n < 4) throw InputError("at least 4 samples required for a trigonometric interpolant");
  // real DFT coefficients, direct O(n^2) once
  const std::size_t kmax = n / 2;
  std::vector<double> ca(kmax + 1, 0.0), sa(kmax + 1, 0.0);
  for (std::size_t k = 0; k <= kmax; ++k) {
    double c = 0, s = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double th = 2 * kPi * double(k) * double(j) / double(n);
      c += samples[j] * std::cos(th);
      s += samples[j] * std::sin(th);
    }
    const bool edge = (k == 0) || (n % 2 == 0 && k == kmax);
    ca[k] = c / double(n) * (edge ? 1.0 : 2.0);
    sa[k] = edge ? 0.0 : s / double(n) * 2.0;
  }
  auto f = [ca, sa, kmax](double x) {
    // power recurrence on e^{2 pi i x}
    const std::complex<double> w = std::polar(1.0, 2 * kPi * x);
    std::complex<double> z = 1.0;
    double v = 0;
    for (std::size_t k = 0; k <= kmax; ++k) {
      v += ca[k] * z.real() + sa[k] * z.imag();
      z *= w;
    }
    return v;
  };
  return from_function(f, length, "samples");
}

HillPotential HillPotential::shifted(double delta) const {
  auto f = q;
  auto p = from_function([f, delta](double x) { return f(x + delta); }, length, family);
  return p;
}

HillPotential HillPotential::reflected() const {
  auto f = q;
  return from_function([f](double x) { return f(-x); }, length, family);
}

HillPotential HillPotential::plus(double c) const {
  auto f = q;
  return from_function([f, c](double x) { return f(x) + c; }, length, family);
}

int SpectrumBundle::open_gaps() const {
  int c = 0;
  for (bool d : double_flag) c += d ? 0 : 1;
  return c;
}

// ---------------------------------------------------------------------------

Monodromy monodromy(const HillPotential& q, double lambda, const HillOptions& opt) {
  return monodromy_impl<8>(q, lambda, opt);
}

double discriminant(const HillPotential& q, double lambda, const HillOptions& opt) {
  return monodromy_impl<4>(q, lambda, opt).trace();
}

BandSkeleton band_skeleton(const HillPotential& q, int n, const HillOptions& opt) {
  if (n < 1) throw InputError("band_skeleton: n must be >= 1");
  if (opt.precision == Precision::Extended) return skeleton_impl<long double>(q, n, opt);
  return skeleton_impl<double>(q, n, opt);
}

SpectrumBundle periodic_spectrum(const HillPotential& q, int n, const HillOptions& opt) {
  if (n < 1) throw InputError("periodic_spectrum: n must be >= 1");
  if (opt.precision == Precision::Extended) return spectrum_impl<long double>(q, n, opt);
  return spectrum_impl<double>(q, n, opt);
}

std::vector<double> tied_spectrum(const HillPotential& q, int n, const HillOptions& opt) {
  HillOptions o = opt;
  o.auxiliary = true;
  return periodic_spectrum(q, n, o).mu;
}

std::vector<double> reflecting_spectrum(const HillPotential& q, int n, ReflectingFunctional f,
                                        const HillOptions& opt) {
  if (f == ReflectingFunctional::DerivativeY1) {
    HillOptions o = opt;
    o.auxiliary = true;
    return periodic_spectrum(q, n, o).nu;
  }
  if (n < 1) throw InputError("reflecting_spectrum: n must be >= 1");
  if (opt.precision == Precision::Extended) return value_y1_roots<long double>(q, n, opt);
  return value_y1_roots<double>(q, n, opt);
}

Rescaled rescale_period(std::function<double(double)> q, double x_lo, double x_hi) {
  const double len = x_hi - x_lo;
  if (!(len > 0)) throw InputError("rescale_period: empty interval");
  Rescaled r;
  r.scale = len * len;
  r.potential = HillPotential::from_function(
      [q = std::move(q), x_lo, len](double u) { return len * len * q(x_lo + len * u); }, len,
      "rescaled");
  return r;
}

bool isospectral_check(const HillPotential& q1, const HillPotential& q2, int n, double tol,
                       const HillOptions& opt) {
  const auto s1 = periodic_spectrum(q1, n, opt);
  const auto s2 = periodic_spectrum(q2, n, opt);
  for (std::size_t i = 0; i < s1.lambda.size(); ++i)
    if (std::abs(s1.lambda[i] - s2.lambda[i]) > tol * (1.0 + std::abs(s1.lambda[i]))) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Optimized potentials

std::vector<double> reference_spectrum(double length, int terms) {
  std::vector<double> ref(2 * terms + 1);
  ref[0] = 1.0;
  for (int s = 1; s <= terms; ++s)
    ref[2 * s - 1] = ref[2 * s] = double(s) * double(s) * kPi * kPi / length + 1.0;
  return ref;
}

double fit_objective(const std::vector<double>& lam, double length, int terms) {
  if (int(lam.size()) < 2 * terms + 1) throw InputError("fit_objective: spectrum too short");
  const auto ref = reference_spectrum(length, terms);
  double obj = (ref[0] - lam[0]) * (ref[0] - lam[0]);
  for (int s = 1; s <= terms; ++s) {
    const double w = std::ldexp(1.0, -s);
    const double a = ref[2 * s] - lam[2 * s - 1];
    const double b = ref[2 * s] - lam[2 * s];
    obj += w * (a * a + b * b);
  }
  return obj;
}

HillPotential OptimizedPotential::unit_potential() const {
  const double len = length;
  if (constant) return HillPotential::constant(len * len);
  const double t = T;
  return HillPotential::from_function(
      [len, t](double u) { return len * len * std::cos(len * (u - 0.5) / t); }, len, "optimized");
}

namespace {

struct FitEval {
  double objective = std::numeric_limits<double>::infinity();
  double penalty = 0;
  std::vector<double> spectrum;
};

// Rayleigh quotient of f = sin(kappa) under -d^2 + cos((x - mid)/T) with f' = 0 at the ends.
double rayleigh(const std::vector<double>& x, const std::vector<double>& f, double mid, double T) {
  const std::size_t n = x.size();
  const double h = x[1] - x[0];
  double num = 0, den = 0;
  for (std::size_t j = 0; j < n; ++j) {
    double df;
    if (j == 0)
      df = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h);
    else if (j == n - 1)
      df = (3 * f[n - 1] - 4 * f[n - 2] + f[n - 3]) / (2 * h);
    else
      df = (f[j + 1] - f[j - 1]) / (2 * h);
    const double w = (j == 0 || j == n - 1) ? 0.5 : 1.0;
    num += w * (df * df + std::cos((x[j] - mid) / T) * f[j] * f[j]);
    den += w * f[j] * f[j];
  }
  if (den <= 0) return 0.0;
  return num / den;
}

}  // namespace

OptimizedPotential fit_optimized_potential(const std::function<double(double)>& kappa, double x_lo,
                                           double x_hi, int index, const FitOptions& opt) {
  const double len = x_hi - x_lo;
  if (!(len > 0)) throw InputError("fit_optimized_potential: empty ray");
  if (index < 0 || index > 2 * opt.terms) throw InputError("designated index outside the truncation");
  if (opt.grid_points < 3) throw InputError("fit grid needs at least 3 points");
  const double mid = 0.5 * (x_lo + x_hi);

  OptimizedPotential out;
  out.length = len;
  out.index = index;

  const int ns = std::max(opt.ray_samples, 8);
  std::vector<double> xs(ns), kap(ns), f(ns);
  for (int j = 0; j < ns; ++j) {
    xs[j] = x_lo + len * double(j) / double(ns - 1);
    kap[j] = kappa(xs[j]);
    f[j] = std::sin(kap[j]);
  }

  // degenerate kappa: plateau at pi/4, or affine in x
  double dev = 0;
  for (double k : kap) dev = std::max(dev, std::abs(k - kPi / 4));
  double sx = 0, sk = 0, sxx = 0, sxk = 0;
  for (int j = 0; j < ns; ++j) {
    sx += xs[j];
    sk += kap[j];
    sxx += xs[j] * xs[j];
    sxk += xs[j] * kap[j];
  }
  const double slope = (ns * sxk - sx * sk) / (ns * sxx - sx * sx);
  const double icpt = (sk - slope * sx) / ns;
  double resid = 0, kscale = 0;
  for (int j = 0; j < ns; ++j) {
    resid = std::max(resid, std::abs(kap[j] - (slope * xs[j] + icpt)));
    kscale = std::max(kscale, std::abs(kap[j]));
  }
  if (dev < 1e-9 || resid < 1e-9 * (1.0 + kscale)) {
    out.constant = true;
    out.T = 0.0;
    out.spectrum = reference_spectrum(len, opt.terms);
    out.lambda_designated = out.spectrum[index];
    out.objective = fit_objective(out.spectrum, len, opt.terms);
    out.history = {out.objective};
    out.diagnostic = dev < 1e-9 ? "regular plateau: constant potential, T = x1/(2 pi)"
                                : "affine phase: constant potential, T = x1/(2 pi)";
    return out;
  }

  auto evaluate = [&](double T) {
    FitEval e;
    const double t = T;
    auto unit = HillPotential::from_function(
        [len, mid, t, x_lo](double u) { return len * len * std::cos((x_lo + len * u - mid) / t); },
        len, "optimized");
    SpectrumBundle sb;
    HillOptions so = opt.spectrum;
    so.auxiliary = false;
    try {
      sb = periodic_spectrum(unit, opt.terms, so);
    } catch (const NumericError&) {
      return e;
    }
    e.spectrum.resize(sb.lambda.size());
    for (std::size_t i = 0; i < sb.lambda.size(); ++i) e.spectrum[i] = sb.lambda[i] / (len * len);
    const double r = rayleigh(xs, f, mid, T) - e.spectrum[index];
    e.penalty = opt.penalty_weight * r * r;
    e.objective = fit_objective(e.spectrum, len, opt.terms) + e.penalty;
    return e;
  };

  const double lt0 = std::log(opt.t_min_factor * len);
  const double lt1 = std::log(opt.t_max_factor * len);
  std::vector<double> grid(opt.grid_points), vals(opt.grid_points);
  int best = -1;
  FitEval best_eval;
  for (int j = 0; j < opt.grid_points; ++j) {
    grid[j] = lt0 + (lt1 - lt0) * double(j) / double(opt.grid_points - 1);
    auto e = evaluate(std::exp(grid[j]));
    vals[j] = e.objective;
    if (std::isfinite(e.objective) && (best < 0 || e.objective < best_eval.objective)) {
      best = j;
      best_eval = std::move(e);
    }
  }
  if (best < 0) throw NumericError("fit_optimized_potential: objective not finite on the T grid");
  const double vmin = *std::min_element(vals.begin(), vals.end());
  double vmax = -std::numeric_limits<double>::infinity();
  for (double v : vals)
    if (std::isfinite(v)) vmax = std::max(vmax, v);
  if (vmax - vmin <= 1e-14 * (1.0 + std::abs(vmin))) {
    out.diagnostic = "objective non-improving over the full T grid";
    throw NumericError(out.diagnostic);
  }
  double best_lt = grid[best];
  out.at_grid_edge = best == 0 || best == opt.grid_points - 1;
  out.history.push_back(best_eval.objective);

  // golden section on log T inside the neighbouring grid cells
  double a = grid[std::max(best - 1, 0)];
  double b = grid[std::min(best + 1, opt.grid_points - 1)];
  const double g = (std::sqrt(5.0) - 1) / 2;
  double c = b - g * (b - a), d = a + g * (b - a);
  FitEval ec = evaluate(std::exp(c)), ed = evaluate(std::exp(d));
  for (int it = 0; it < opt.golden_iterations && (b - a) > 1e-12; ++it) {
    if (ec.objective < ed.objective) {
      b = d;
      d = c;
      ed = std::move(ec);
      c = b - g * (b - a);
      ec = evaluate(std::exp(c));
    } else {
      a = c;
      c = d;
      ec = std::move(ed);
      d = a + g * (b - a);
      ed = evaluate(std::exp(d));
    }
  }
  FitEval& eg = ec.objective < ed.objective ? ec : ed;
  const double lg = ec.objective < ed.objective ? c : d;
  if (eg.objective < best_eval.objective) {
    best_eval = std::move(eg);
    best_lt = lg;
  }
  out.history.push_back(best_eval.objective);

  out.T = std::exp(best_lt);
  out.objective = best_eval.objective;
  out.penalty = best_eval.penalty;
  out.spectrum = best_eval.spectrum;
  out.lambda_designated = out.spectrum[index];
  if (out.at_grid_edge) out.diagnostic = "objective minimum on the edge of the T grid";
  return out;
}

}  // namespace spinv
