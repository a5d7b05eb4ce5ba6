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

#include "spinv/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "spinv/errors.hpp"

namespace spinv {

using std::numbers::pi;

CollapseTrajectory simulate_collapse(const std::function<double(double)>& F, double u0, double du0, double dt,
                                     double t_max, const CollapseOptions& opt) {
  namespace ode = boost::numeric::odeint;
  if (!F) throw InputError("simulate_collapse: missing damping");
  if (!(t_max > 0) || !(dt > 0)) throw InputError("simulate_collapse: need dt > 0 and t_max > 0");
  if (dt > 1e-3 * t_max * (1 + 1e-12)) throw InputError("simulate_collapse: dt must not exceed 1e-3 t_max");
  if (!std::isfinite(u0) || !std::isfinite(du0)) throw InputError("simulate_collapse: non-finite initial data");

  using State = std::array<double, 2>;
  const long count = long(std::floor(t_max / dt + 1e-9));
  std::vector<double> times(std::size_t(count + 1));
  for (long k = 0; k <= count; ++k) times[std::size_t(k)] = double(k) * dt;

  CollapseTrajectory tr;
  tr.t.reserve(times.size());
  auto rhs = [&F](const State& s, State& d, double t) {
    d[0] = s[1];
    d[1] = -2 * F(t) * s[1] - s[0];
  };
  auto observe = [&tr](const State& s, double t) {
    tr.t.push_back(t);
    tr.u.push_back(s[0]);
    tr.du.push_back(s[1]);
  };
  State s{u0, du0};
  try {
    auto stepper = ode::make_controlled(opt.atol, opt.rtol, ode::runge_kutta_fehlberg78<State>());
    ode::integrate_times(stepper, rhs, s, times.begin(), times.end(), dt, observe,
                         ode::max_step_checker(int(std::min<long>(opt.max_steps, 1 << 30))));
  } catch (const std::exception& e) {
    throw NumericError(std::string("simulate_collapse: step size collapsed: ") + e.what());
  }
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    if (!std::isfinite(tr.u[k]) || !std::isfinite(tr.du[k])) throw NumericError("simulate_collapse: non-finite state");
    tr.energy.push_back(0.5 * (tr.du[k] * tr.du[k] + tr.u[k] * tr.u[k]));
    tr.F.push_back(F(tr.t[k]));
    if (tr.F.back() < 0) tr.damping_nonnegative = false;
  }
  if (tr.damping_nonnegative) {
    const double slack = 1e-11 * std::max(tr.energy.front(), 1e-300);
    for (std::size_t k = 1; k < tr.energy.size(); ++k)
      if (tr.energy[k] > tr.energy[k - 1] + slack) tr.energy_monotone = false;
  }
  return tr;
}

namespace {

// Zero crossings of u by linear interpolation, merging clusters caused by noise.
std::vector<double> crossings(const CollapseTrajectory& tr, double merge) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < tr.u.size(); ++k) {
    const double a = tr.u[k], b = tr.u[k + 1];
    if (a == 0 || a * b >= 0) continue;
    const double t = tr.t[k] + (tr.t[k + 1] - tr.t[k]) * a / (a - b);
    if (!out.empty() && t - out.back() < merge) continue;
    out.push_back(t);
  }
  return out;
}

// |u| maximum in (lo, hi): sign change of u' next to the largest sample,
// then u from the cubic Hermite interpolant on that step.
bool peak_between(const CollapseTrajectory& tr, double lo, double hi, double& tp, double& ap) {
  const auto begin = std::size_t(std::upper_bound(tr.t.begin(), tr.t.end(), lo) - tr.t.begin());
  const auto end = std::size_t(std::lower_bound(tr.t.begin(), tr.t.end(), hi) - tr.t.begin());
  if (end < begin + 5) return false;
  std::size_t best = begin;
  for (auto k = begin; k < end; ++k)
    if (std::abs(tr.u[k]) > std::abs(tr.u[best])) best = k;
  // sign change of u' nearest to it
  for (std::size_t off = 0; off < end - begin; ++off)
    for (std::size_t j : {best - std::min(best, off), best + off}) {
      if (j < begin || j + 1 >= end) continue;
      const double d0 = tr.du[j], d1 = tr.du[j + 1];
      if (d0 * d1 > 0) continue;
      const double h = tr.t[j + 1] - tr.t[j];
      const double s = d0 == d1 ? 0.5 : d0 / (d0 - d1);
      const double s2 = s * s, s3 = s2 * s;
      const double u = (2 * s3 - 3 * s2 + 1) * tr.u[j] + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * tr.u[j + 1] +
                       (s3 - s2) * h * d1;
      tp = tr.t[j] + s * h;
      ap = std::abs(u);
      return true;
    }
  return false;
}

}  // namespace

DampingTable fit_damping(const CollapseTrajectory& traj, const DampingFitOptions& opt) {
  if (traj.t.size() < 10) throw InputError("fit_damping: trajectory too short");
  // three periods of the undamped unit-frequency oscillator
  if (traj.t.back() - traj.t.front() < 6 * pi)
    throw InputError("fit_damping: trajectory must cover at least three oscillation periods");
  auto z = crossings(traj, 0.5);
  z.insert(z.begin(), traj.t.front() - 1);   // the segment before the first crossing

  DampingTable tab;
  for (std::size_t c = 0; c + 1 < z.size(); ++c) {
    double tp, ap;
    if (peak_between(traj, z[c], z[c + 1], tp, ap)) {
      tab.peak_t.push_back(tp);
      tab.peak_a.push_back(ap);
    }
  }
  if (tab.peak_a.size() < 3) throw InputError("fit_damping: fewer than three envelope peaks");
  if (tab.peak_a[1] > tab.peak_a[0] * (1 + 1e-9))
    throw InputError("fit_damping: initial envelope is not monotone, F(A) cannot be inverted");

  // initial monotone segment, above the noise floor
  const double floor = 0.05 * tab.peak_a[0];
  for (std::size_t p = 0; p + 1 < tab.peak_a.size(); ++p) {
    const double a = tab.peak_a[p], b = tab.peak_a[p + 1];
    if (b > a * (1 + 1e-9) || b < floor) break;
    tab.t.push_back(0.5 * (tab.peak_t[p] + tab.peak_t[p + 1]));
    tab.amplitude.push_back(std::sqrt(a * b));
    tab.F.push_back(std::log(a / b) / (tab.peak_t[p + 1] - tab.peak_t[p]));
  }
  if (tab.F.empty()) throw InputError("fit_damping: empty monotone segment");

  const int m = std::min<int>(opt.fit_points, int(tab.F.size()));
  if (m == 1) {
    tab.F0 = tab.F[0];
  } else {
    Eigen::MatrixXd V(m, 2);
    Eigen::VectorXd y(m);
    for (int r = 0; r < m; ++r) V(r, 0) = 1, V(r, 1) = tab.t[std::size_t(r)], y(r) = tab.F[std::size_t(r)];
    const Eigen::Vector2d c = V.colPivHouseholderQr().solve(y);
    tab.F0 = c(0);
    tab.slope = c(1);
  }
  if (tab.F0 > opt.max_damping)
    throw InputError("fit_damping: damping near t = 0 exceeds " + std::to_string(opt.max_damping));
  return tab;
}

Signature polynomial_signature(const DampingTable& table, int degree) {
  if (degree < 0 || degree > 3) throw InputError("polynomial_signature: degree must be in 0..3");
  const int n = int(table.F.size());
  if (n < degree + 1) throw InputError("polynomial_signature: table shorter than degree + 1");
  const double a0 = table.peak_a.empty() ? table.amplitude.front() : table.peak_a.front();
  Eigen::MatrixXd V(n, degree + 1);
  Eigen::VectorXd y(n);
  for (int r = 0; r < n; ++r) {
    const double x = 1 - table.amplitude[std::size_t(r)] / a0;
    double p = 1;
    for (int d = 0; d <= degree; ++d, p *= x) V(r, d) = p;
    y(r) = table.F[std::size_t(r)];
  }
  // a flat envelope leaves only the constant term determined
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(V);
  cod.setThreshold(1e-10);
  const Eigen::VectorXd c = cod.solve(y);
  Signature s;
  s.coeffs.assign(c.data(), c.data() + c.size());
  return s;
}

NoGoResult no_go_test(const DampingTable& candidate, const Signature& reference, const std::vector<double>& tol) {
  if (reference.coeffs.empty()) throw InputError("no_go_test: empty reference signature");
  if (tol.empty()) throw InputError("no_go_test: no tolerances");
  const int d = int(reference.coeffs.size()) - 1;
  const auto c = polynomial_signature(candidate, d);
  NoGoResult r;
  for (int k = 0; k <= d; ++k) {
    const double t = tol[std::min<std::size_t>(std::size_t(k), tol.size() - 1)];
    const double diff = std::abs(c.coeffs[std::size_t(k)] - reference.coeffs[std::size_t(k)]);
    if (diff > t) {
      std::ostringstream os;
      os.precision(6);
      os << "rejected at degree " << k << ": candidate " << c.coeffs[std::size_t(k)] << " vs reference "
         << reference.coeffs[std::size_t(k)] << " (tolerance " << t << ")";
      r.accept = false;
      r.degree = k;
      r.message = os.str();
      return r;
    }
  }
  r.message = "accepted";
  return r;
}

namespace {

// prod over i > n with the given parity of (1 - z / kappa_i^2), kappa_i = i pi / L
double free_tail(double z, int n, int parity, double L) {
  const int last = n + 40000;
  double p = 1;
  for (int i = n + 1; i <= last; ++i) {
    if (i % 2 != parity) continue;
    const double k = i * pi / L;
    p *= 1 - z / (k * k);
  }
  // remainder to first order: sum over i > last of the parity ~ L^2 / (2 pi^2 last)
  return p * std::exp(-z * L * L / (2 * pi * pi * last));
}

}  // namespace

Factorization factorize_discriminant(const HillPotential& q, const SpectrumBundle& spec,
                                     const std::vector<double>& grid, const HillOptions& opt) {
  const int n = spec.n;
  if (n < 3) throw InputError("factorize_discriminant: need at least three gaps");
  if (int(spec.lambda.size()) != 2 * n + 1) throw InputError("factorize_discriminant: malformed spectrum");
  if (grid.empty()) throw InputError("factorize_discriminant: empty grid");
  const double L = q.length, m = q.mean / L;

  Factorization f;
  f.lambda = grid;
  for (double lam : grid) {
    const double z = lam - m;
    double plus = (spec.lambda[0] - lam) * L * L, minus = 4;
    for (int i = 1; i <= n; ++i) {
      const double k = i * pi / L;
      const double factor = (spec.gap_lo(i) - lam) * (spec.gap_hi(i) - lam) / (k * k * k * k);
      (i % 2 == 0 ? plus : minus) *= factor;
    }
    const double te = free_tail(z, n, 0, L), to = free_tail(z, n, 1, L);
    f.star_plus.push_back(plus * te * te);
    f.star_minus.push_back(minus * to * to);
    f.delta.push_back(discriminant(q, lam, opt));
  }
  double pd = 0, pp = 0, dmax = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double P = f.star_plus[k] * f.star_minus[k], D = f.delta[k] * f.delta[k] - 4;
    pd += P * D;
    pp += P * P;
    dmax = std::max(dmax, std::abs(D));
  }
  if (!(pp > 0)) throw NumericError("factorize_discriminant: product vanishes on the grid");
  f.v = pd / pp;
  if (!(f.v > 0)) throw NumericError("factorize_discriminant: prefactor is not positive");
  const double root = std::sqrt(f.v);
  double err = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    f.star_plus[k] *= root;
    f.star_minus[k] *= root;
    err = std::max(err, std::abs(f.star_plus[k] * f.star_minus[k] - (f.delta[k] * f.delta[k] - 4)));
  }
  f.rel_error = dmax > 0 ? err / dmax : err;
  if (f.rel_error > 0.1) {
    std::ostringstream os;
    os << "truncation too short: relative product error " << f.rel_error;
    f.warning = os.str();
  }
  return f;
}

SpectralState SpectralState::from_edges(std::vector<double> edges) {
  if (edges.size() < 3 || edges.size() % 2 == 0)
    throw InputError("spectral state: need 2n + 1 band edges with n >= 1");
  SpectralState s;
  s.edges = std::move(edges);
  const int n = int(s.edges.size() - 1) / 2;
  for (int i = 1; i <= n; ++i) s.valid.push_back(s.edges[std::size_t(2 * i - 1)] <= s.edges[std::size_t(2 * i)]);
  return s;
}

SpectralState SpectralState::from_spectrum(const SpectrumBundle& s) { return from_edges(s.lambda); }

std::vector<double> SpectralState::widths() const {
  std::vector<double> w;
  for (int i = 1; i <= gaps(); ++i) w.push_back(edges[std::size_t(2 * i)] - edges[std::size_t(2 * i - 1)]);
  return w;
}

bool SpectralState::physical() const {
  return std::all_of(valid.begin(), valid.end(), [](bool b) { return b; });
}

const char* to_string(OperatorKind k) { return k == OperatorKind::Absorption ? "absorption" : "emission"; }

KernelParams KernelParams::identity() {
  KernelParams p;
  p.custom = [](int, int) { return 0.0; };
  return p;
}

namespace {

void check_invertible(const Eigen::MatrixXd& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().cwiseAbs().minCoeff() <= 1e-10) throw NumericError("evaporation operator: singular matrix");
}

}  // namespace

EvaporationOperator make_operator(OperatorKind kind, double t, const KernelParams& p, int dim) {
  if (dim < 3 || dim % 2 == 0) throw InputError("make_operator: dimension must be 2n + 1 with n >= 1");
  const int n = (dim - 1) / 2;
  EvaporationOperator op;
  op.kind = kind;
  op.t = t;
  op.H = Eigen::MatrixXd::Identity(dim, dim);
  std::ostringstream desc;
  desc.precision(17);
  if (p.custom) {
    Eigen::MatrixXd K(dim, dim);
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) K(a, b) = p.custom(a, b);
    const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
    if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw InputError("make_operator: kernel is not Hermitian");
    op.H += K;
    desc << "custom";
  } else {
    if (!(p.amplitude > 0) || !(p.width > 0) || !(p.coupling >= 0) || !(p.coupling_width > 0))
      throw InputError("make_operator: amplitude, widths must be positive and coupling nonnegative");
    if (kind == OperatorKind::Emission && !(p.amplitude < 1))
      throw InputError("make_operator: emission amplitude must be below 1");
    const double sigma = kind == OperatorKind::Absorption ? 1 : -1;
    // gap directions (e_{2i} - e_{2i-1}) / sqrt 2 scaled by a Gaussian bump in i
    for (int i = 1; i <= n; ++i) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
      v(2 * i) = std::sqrt(0.5);
      v(2 * i - 1) = -std::sqrt(0.5);
      const double g = p.amplitude * std::exp(-std::pow(i - p.center, 2) / (2 * p.width * p.width));
      op.H += sigma * g * v * v.transpose();
    }
    // positive semidefinite Gaussian kernel on band midpoints; leaves widths alone
    Eigen::MatrixXd mid = Eigen::MatrixXd::Zero(dim, n + 1);
    mid(0, 0) = 1;
    for (int i = 1; i <= n; ++i) mid(2 * i, i) = mid(2 * i - 1, i) = std::sqrt(0.5);
    Eigen::MatrixXd G(n + 1, n + 1);
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b) {
        const double fa = std::exp(-std::pow(a - p.center, 2) / (2 * p.width * p.width));
        const double fb = std::exp(-std::pow(b - p.center, 2) / (2 * p.width * p.width));
        G(a, b) = p.coupling * fa * fb * std::exp(-std::pow(a - b, 2) / (2 * p.coupling_width * p.coupling_width));
      }
    op.H += mid * G * mid.transpose();
    op.H = 0.5 * (op.H + op.H.transpose());
    desc << "gaussian(amplitude=" << p.amplitude << ", center=" << p.center << ", width=" << p.width
         << ", coupling=" << p.coupling << ", coupling_width=" << p.coupling_width << ")";
  }
  check_invertible(op.H);
  op.kernel = desc.str();
  return op;
}

EvaporationOperator inverse_partner(const EvaporationOperator& op, double t) {
  EvaporationOperator r;
  r.kind = op.kind == OperatorKind::Emission ? OperatorKind::Absorption : OperatorKind::Emission;
  r.t = t;
  const Eigen::MatrixXd inv = op.H.inverse();
  r.H = 0.5 * (inv + inv.transpose());
  check_invertible(r.H);
  r.kernel = "inverse(" + op.kernel + ")";
  return r;
}

ApplyResult apply(const EvaporationOperator& op, const SpectralState& s, double closure) {
  if (!s.physical()) throw InputError("apply: unphysical state (a gap has negative width)");
  const int dim = int(s.edges.size());
  if (op.H.rows() != dim) throw InputError("apply: dimension mismatch");
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(s.edges.data(), dim);
  Eigen::VectorXd y = op.H * x;

  ApplyResult r;
  const bool absorb = op.kind == OperatorKind::Absorption;
  const double rho = 1e-6;
  int obeyed = 0, active = 0;
  for (int i = 1; i <= s.gaps(); ++i) {
    const double w = x(2 * i) - x(2 * i - 1), wn = y(2 * i) - y(2 * i - 1);
    bool ok;
    if (absorb) {
      ok = wn > w;
    } else if (w <= closure) {
      ok = wn <= closure;   // a closed gap stays closed
      if (ok) {
        if (wn < 0) {
          const double c = 0.5 * (y(2 * i) + y(2 * i - 1));
          y(2 * i) = y(2 * i - 1) = c;
        }
        continue;
      }
    } else {
      ok = wn < w && wn >= 0;
    }
    ++active;
    if (ok) {
      ++obeyed;
      continue;
    }
    const double target = absorb ? w * (1 + rho) + closure : std::max(w * (1 - rho), 0.0);
    const double c = 0.5 * (y(2 * i) + y(2 * i - 1));
    y(2 * i) = c + 0.5 * target;
    y(2 * i - 1) = c - 0.5 * target;
    std::ostringstream os;
    os.precision(17);
    os << "gap " << i << ": raw width " << wn << " from " << w << " projected to " << target;
    r.log.push_back(os.str());
    ++r.projected;
  }
  if (active > 0 && obeyed == 0)
    throw InputError(std::string("apply: kind violation, no gap moves as ") + to_string(op.kind) + " requires");
  r.state = SpectralState::from_edges(std::vector<double>(y.data(), y.data() + y.size()));
  return r;
}

Commutator commutator(const EvaporationOperator& a, const EvaporationOperator& b) {
  if (a.H.rows() != b.H.rows()) throw InputError("commutator: dimension mismatch");
  Commutator c;
  c.C = a.H * b.H - b.H * a.H;
  c.frobenius = c.C.norm();
  c.skew = (c.C + c.C.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, c.C.cwiseAbs().maxCoeff());
  return c;
}

SweepResult commutator_sweep(int dim, int pairs, std::uint64_t seed, double threshold) {
  if (pairs < 1) throw InputError("commutator_sweep: need at least one pair");
  std::mt19937_64 rng(seed);
  const int n = (dim - 1) / 2;
  std::uniform_real_distribution<double> amp(0.05, 0.5), ctr(1.0, double(n)), wid(0.5, 3.0), cpl(0.01, 0.5);
  auto draw = [&] {
    KernelParams p;
    p.amplitude = amp(rng);
    p.center = ctr(rng);
    p.width = wid(rng);
    p.coupling = cpl(rng);
    p.coupling_width = wid(rng);
    return make_operator(OperatorKind::Emission, 0, p, dim);
  };
  SweepResult r;
  r.pairs = pairs;
  r.min_norm = std::numeric_limits<double>::infinity();
  for (int k = 0; k < pairs; ++k) {
    const auto a = draw();
    const auto b = draw();
    const double f = commutator(a, b).frobenius;
    r.min_norm = std::min(r.min_norm, f);
    if (f > threshold) ++r.above;
  }
  r.fraction = double(r.above) / pairs;
  return r;
}

ChronologicalProduct chronological_product(const std::vector<EvaporationOperator>& ops, double planck) {
  if (ops.empty()) throw InputError("chronological_product: no operators");
  if (!(planck > 0)) throw InputError("chronological_product: Planck spacing must be positive");
  ChronologicalProduct p;
  p.kind = ops.front().kind;
  const auto dim = ops.front().H.rows();
  p.M = Eigen::MatrixXd::Identity(dim, dim);
  for (std::size_t k = 0; k < ops.size(); ++k) {
    if (ops[k].kind != p.kind)
      throw InputError("chronological_product: mixed absorption and emission would produce negative energy states");
    if (ops[k].H.rows() != dim) throw InputError("chronological_product: dimension mismatch");
    if (k > 0) {
      const double gap = ops[k].t - ops[k - 1].t;
      if (!(gap > 0)) throw InputError("chronological_product: times must be strictly increasing");
      if (gap < planck * (1 - 1e-12)) {
        std::ostringstream os;
        os << "chronological_product: spacing " << gap << " below the Planck spacing " << planck;
        throw InputError(os.str());
      }
    }
    p.M = ops[k].H * p.M;
    p.times.push_back(ops[k].t);
  }
  p.ops = ops;
  return p;
}

ChronologicalProduct substitution_inverse(const ChronologicalProduct& p, double planck) {
  const std::size_t n = p.ops.size();
  std::vector<EvaporationOperator> inv;
  for (std::size_t j = 0; j < n; ++j) inv.push_back(inverse_partner(p.ops[n - 1 - j], p.times[j]));
  return chronological_product(inv, planck);
}

SpectralState apply_product(const ChronologicalProduct& p, const SpectralState& s) {
  SpectralState cur = s;
  for (const auto& op : p.ops) cur = apply(op, cur).state;
  return cur;
}

}  // namespace spinv
