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

#pragma once

#include <functional>
#include <string>
#include <vector>

namespace spinv {

/// Smooth potential of period 1 for the Hill operator -d^2/dx^2 + q(x).
///
/// `length` is the physical period the potential was rescaled from; the
/// eigenvalues of the physical problem are the unit-period eigenvalues
/// divided by length^2.
struct HillPotential {
  std::function<double(double)> q;
  double length = 1.0;
  double mean = 0.0;   // integral of q over one period
  double qmin = 0.0;   // sampled bounds over one period
  double qmax = 0.0;
  std::string family = "closure";

  double operator()(double x) const { return q(x); }

  static HillPotential from_function(std::function<double(double)> f, double length = 1.0,
                                     std::string family = "closure");
  static HillPotential constant(double c);
  /// q(x) = a0 + sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x), k = 1..
  static HillPotential trigonometric(double a0, std::vector<double> a, std::vector<double> b = {});
  /// amplitude * 2 cos(2 pi x); amplitude 1 is the standard Mathieu probe.
  static HillPotential mathieu(double amplitude = 1.0);
  /// Trigonometric interpolant of uniform samples q(j/N), j = 0..N-1.
  static HillPotential from_samples(std::vector<double> samples, double length = 1.0);

  HillPotential shifted(double delta) const;    // x -> q(x + delta)
  HillPotential reflected() const;              // x -> q(-x)
  HillPotential plus(double c) const;
};

enum class Precision {
  Standard,  // double, embedded RK7(8), rtol 1e-11
  Extended,  // long double, embedded RK7(8), rtol 1e-18
  Fast       // double, embedded RK7(8), rtol 1e-9, coarse scan
};

struct HillOptions {
  Precision precision = Precision::Extended;
  double scan_step = 0.0;   // in k = sqrt(lambda - lambda_lo); 0 picks a per-precision default
  long max_steps = 200000;  // per period integration
  bool auxiliary = true;    // also compute tied/reflecting spectra and Delta at the edges
  static HillOptions standard() { return {Precision::Standard}; }
  static HillOptions extended() { return {Precision::Extended}; }
  static HillOptions fast() { return {Precision::Fast}; }
};

/// Fundamental matrix at x = 1 with canonical data y1 = 1, y1' = 0, y2 = 0, y2' = 1.
struct Monodromy {
  double y1 = 0, y2 = 0, dy1 = 0, dy2 = 0;
  // derivatives with respect to lambda (variational equations)
  double y1_l = 0, y2_l = 0, dy1_l = 0, dy2_l = 0;
  long steps = 0;

  double trace() const { return y1 + dy2; }
  double wronskian() const { return y1 * dy2 - y2 * dy1; }
};

Monodromy monodromy(const HillPotential& q, double lambda, const HillOptions& opt = {});
double discriminant(const HillPotential& q, double lambda, const HillOptions& opt = {});

enum class ReflectingFunctional {
  DerivativeY1,  // y1'(1, nu) = 0, matching f'(0) = f'(1) = 0
  ValueY1        // y1(1, nu) = 0, the literal alternative
};

/// Ordered periodic eigenvalues with tied and reflecting spectra.
struct SpectrumBundle {
  std::vector<double> lambda;        // lambda_0 .. lambda_{2n}
  std::vector<double> mu;            // mu_1 .. mu_n
  std::vector<double> nu;            // nu_0 .. nu_n
  std::vector<bool> double_flag;     // per gap i = 1..n (index i-1)
  std::vector<double> disc;          // Delta(lambda_i)
  int n = 0;
  double noise = 0.0;                // residual floor used for the double test

  double gap_lo(int i) const { return lambda.at(2 * i - 1); }
  double gap_hi(int i) const { return lambda.at(2 * i); }
  double gap_width(int i) const { return gap_hi(i) - gap_lo(i); }
  int open_gaps() const;
};

/// Internal zeros of Delta used to separate bands, plus the lower scan bound.
struct BandSkeleton {
  double lambda_lo = 0;
  std::vector<double> zeros;  // zeros[i-1] lies between lambda_{2i-2} and lambda_{2i-1}
};

BandSkeleton band_skeleton(const HillPotential& q, int n, const HillOptions& opt = {});
SpectrumBundle periodic_spectrum(const HillPotential& q, int n, const HillOptions& opt = {});
std::vector<double> tied_spectrum(const HillPotential& q, int n, const HillOptions& opt = {});
std::vector<double> reflecting_spectrum(const HillPotential& q, int n,
                                        ReflectingFunctional f = ReflectingFunctional::DerivativeY1,
                                        const HillOptions& opt = {});

struct Rescaled {
  HillPotential potential;   // unit period
  double scale = 1.0;        // L^2: unit-period eigenvalue = scale * physical eigenvalue
};

/// Affine change of variable from [x_lo, x_hi] to [0, 1]:
/// qt(u) = L^2 q(x_lo + L u).
Rescaled rescale_period(std::function<double(double)> q, double x_lo, double x_hi);

bool isospectral_check(const HillPotential& q1, const HillPotential& q2, int n, double tol,
                       const HillOptions& opt = {});

// ---------------------------------------------------------------------------
// Optimized potentials cos((x - x_mid) / T) fitted along one ray.

struct FitOptions {
  int grid_points = 200;     // log grid in T
  double t_min_factor = 1.0 / (4.0 * 3.14159265358979323846);  // T_min = factor * L
  double t_max_factor = 100.0;                                  // T_max = factor * L
  int terms = 20;            // truncation N of the weighted sum
  int golden_iterations = 40;
  double penalty_weight = 1.0;
  int ray_samples = 256;     // samples of sin(kappa) for the Rayleigh penalty
  HillOptions spectrum = HillOptions::fast();
};

struct OptimizedPotential {
  double T = 0;                    // period parameter
  double length = 0;               // ray length L
  double lambda_designated = 0;    // physical lambda_{index}
  int index = 0;                   // designated eigenvalue index 2s
  double objective = 0;
  double penalty = 0;
  bool constant = false;           // degenerate branch, q == 1
  bool at_grid_edge = false;       // argmin on the first or last T grid node
  std::vector<double> history;     // best objective after each stage, non-increasing
  std::vector<double> spectrum;    // physical periodic eigenvalues lambda_0..lambda_{2N}
  std::string diagnostic;

  /// Unit-period potential whose spectrum is reported (scaled by length^2).
  HillPotential unit_potential() const;
};

/// Objective of the fit for a given spectrum and reference length.
double fit_objective(const std::vector<double>& physical_lambda, double length, int terms);

/// Reference spectrum lambda^c: lambda_0 = 1, lambda_{2s-1} = lambda_{2s} = s^2 pi^2 / L + 1.
std::vector<double> reference_spectrum(double length, int terms);

/// Fit along a ray [x_lo, x_hi] given kappa on the ray.
OptimizedPotential fit_optimized_potential(const std::function<double(double)>& kappa, double x_lo,
                                           double x_hi, int index, const FitOptions& opt = {});

}  // namespace spinv
