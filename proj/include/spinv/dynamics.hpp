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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinv/hill.hpp"

namespace spinv {

// ---- collapse oscillator: u'' + 2 F(t) u' + u = 0 ----

struct CollapseTrajectory {
  std::vector<double> t, u, du, energy, F;
  bool energy_monotone = true;   // E = (u'^2 + u^2) / 2 non-increasing, checked when F >= 0
  bool damping_nonnegative = true;
};

struct CollapseOptions {
  double rtol = 1e-13, atol = 1e-13;
  long max_steps = 10000000;
};

/// Samples at t = k dt on [0, t_max]. Requires dt <= 1e-3 t_max; throws
/// NumericError when the adaptive step collapses.
CollapseTrajectory simulate_collapse(const std::function<double(double)>& F, double u0, double du0, double dt,
                                     double t_max, const CollapseOptions& opt = {});

struct DampingTable {
  std::vector<double> peak_t, peak_a;   // |u| maxima between zero crossings
  std::vector<double> t, amplitude, F;  // per half cycle: midpoint, geometric-mean amplitude, -d ln A / dt
  double F0 = 0;                        // intercept of the fit of F against t
  double slope = 0;
};

struct DampingFitOptions {
  int fit_points = 4;       // half-cycle estimates used for the intercept
  double max_damping = 0.5;
};

/// Envelope from peak magnitudes, F estimated from successive peak ratios
/// and extrapolated to t = 0. The F(A) table is cut at the first rise of
/// the envelope; throws InputError for fewer than three periods, a rising
/// initial envelope, or F0 above max_damping.
DampingTable fit_damping(const CollapseTrajectory& traj, const DampingFitOptions& opt = {});

struct Signature {
  std::vector<double> coeffs;   // F = sum c_d x^d, x = 1 - A / A_first
};

/// Least-squares polynomial of degree d <= 3 through the table.
Signature polynomial_signature(const DampingTable& table, int degree);

struct NoGoResult {
  bool accept = true;
  int degree = -1;   // first mismatched degree
  std::string message;
};

/// Per-degree absolute tolerances; missing entries default to the last.
NoGoResult no_go_test(const DampingTable& candidate, const Signature& reference,
                      const std::vector<double>& tol = {5e-3, 5e-2, 0.5, 5.0});

// ---- discriminant factorization ----

struct Factorization {
  std::vector<double> lambda, star_plus, star_minus, delta;
  double v = 1;            // common prefactor squared
  double rel_error = 0;    // max |v P - (Delta^2 - 4)| / max |Delta^2 - 4|
  std::string warning;
};

/// star_plus ~ Delta - 2 (zeros at lambda_0 and even gaps), star_minus ~
/// Delta + 2 (odd gaps): truncated Hadamard products closed by the free tail
/// in z = lambda - mean. Both are positive below lambda_0.
Factorization factorize_discriminant(const HillPotential& q, const SpectrumBundle& spec,
                                     const std::vector<double>& grid, const HillOptions& opt = HillOptions::standard());

// ---- evaporation operators on the band-edge vector ----

struct SpectralState {
  std::vector<double> edges;   // lambda_0 .. lambda_{2n}
  std::vector<bool> valid;     // gap i (index i-1): lambda_{2i-1} <= lambda_{2i}

  static SpectralState from_edges(std::vector<double> edges);
  static SpectralState from_spectrum(const SpectrumBundle& s);
  int gaps() const { return int(valid.size()); }
  std::vector<double> widths() const;
  bool physical() const;
};

enum class OperatorKind { Absorption, Emission };
const char* to_string(OperatorKind k);

struct KernelParams {
  double amplitude = 0.2;        // gap scaling bump height, 0 < a < 1 for emission
  double center = 1.0;           // bump centre in gap index
  double width = 2.0;            // bump width in gap index
  double coupling = 0.1;         // Gaussian kernel on band midpoints
  double coupling_width = 1.5;
  /// Replaces the construction above when set: H = I + K.
  std::function<double(int, int)> custom;

  static KernelParams identity();
};

struct EvaporationOperator {
  OperatorKind kind = OperatorKind::Emission;
  double t = 0;
  Eigen::MatrixXd H;
  std::string kernel;
};

/// Throws InputError for a non-Hermitian custom kernel or bad parameters and
/// NumericError when min |eig| <= 1e-10.
EvaporationOperator make_operator(OperatorKind kind, double t, const KernelParams& p, int dim);

/// The absorption with matrix H^-1, paired with an emission.
EvaporationOperator inverse_partner(const EvaporationOperator& op, double t);

struct ApplyResult {
  SpectralState state;
  int projected = 0;
  std::vector<std::string> log;
};

/// Throws InputError on an unphysical state or when no gap moves the way
/// the kind requires; gaps that move the wrong way are projected and logged.
ApplyResult apply(const EvaporationOperator& op, const SpectralState& s, double closure = 1e-12);

struct Commutator {
  Eigen::MatrixXd C;
  double frobenius = 0;
  bool skew = true;   // i [H1, H2] is Hermitian
};
Commutator commutator(const EvaporationOperator& a, const EvaporationOperator& b);

struct SweepResult {
  int pairs = 0, above = 0;
  double fraction = 0, min_norm = 0;
};
/// Random emission pairs with seeded parameters; counts norms above threshold.
SweepResult commutator_sweep(int dim, int pairs, std::uint64_t seed, double threshold = 1e-6);

struct ChronologicalProduct {
  OperatorKind kind = OperatorKind::Emission;
  std::vector<double> times;
  Eigen::MatrixXd M;   // later operators on the left
  std::vector<EvaporationOperator> ops;
};

/// Rejects mixed kinds, non-increasing times, spacing below planck and
/// dimension mismatches (InputError).
ChronologicalProduct chronological_product(const std::vector<EvaporationOperator>& ops, double planck = 1e-3);

/// E(t_m) -> A(t_{n-1-m}) with A the inverse partner.
ChronologicalProduct substitution_inverse(const ChronologicalProduct& p, double planck = 1e-3);

SpectralState apply_product(const ChronologicalProduct& p, const SpectralState& s);

}  // namespace spinv
