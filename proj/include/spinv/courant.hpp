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

#include <Eigen/Dense>

#include "spinv/grid.hpp"

namespace spinv {

// Darboux convention throughout: omega = sum_i dx_i ^ dx_{i+k}, so
// omega#(X) = J X and pi# = (omega#)^{-1} = -J with J = [[0, -I], [I, 0]].

/// Section X + xi of TM + T*M sampled on a chart: 2k vector components and
/// 2k form components, each one value per grid node.
struct CourantSection {
  Chart chart;
  std::vector<std::vector<double>> X, xi;

  static CourantSection zero(const Chart& c);
  static CourantSection constant(const Chart& c, const std::vector<double>& X,
                                 const std::vector<double>& xi);
  /// f(point) returns the 4k values (X_1..X_2k, xi_1..xi_2k).
  static CourantSection sample(const Chart& c,
                               const std::function<std::vector<double>(const std::vector<double>&)>& f);

  int rank() const { return int(X.size()); }   // 2k
  /// The 4k-vector (X, xi) at a node.
  Eigen::VectorXd at(std::size_t node) const;
  void set(std::size_t node, const Eigen::VectorXd& v);
  CourantSection operator+(const CourantSection& o) const;
  CourantSection operator*(double s) const;
  double sup_distance(const CourantSection& o, int band = 0) const;

  FieldBundle to_fields() const;
  static CourantSection from_fields(const FieldBundle& b);
};

/// omega#(X) - pi#(xi), i.e. (X, xi) -> (J xi, J X). Squares to -Id exactly.
CourantSection bundle_map(const CourantSection& s, const Chart& chart);

enum class PairingSign { Plus, Minus };

/// 1/2 (<xi1, X2> +- <xi2, X1>) pointwise.
Field courant_pairing(const CourantSection& e1, const CourantSection& e2, PairingSign sign);

/// [X1, X2] + L_{X1} xi2 - L_{X2} xi1 + d (e1, e2)_-, central differences in
/// the interior and one-sided at the ends. Values on the outermost layer of
/// nodes are unreliable and excluded from every check.
CourantSection courant_bracket(const CourantSection& e1, const CourantSection& e2,
                               const Chart& chart);

struct Preframe {
  Chart chart;
  std::vector<CourantSection> sections;   // 2k of them

  /// {dx_i + pi# dx_i}, the regular Darboux preframe.
  static Preframe darboux(const Chart& c);
  Preframe mapped() const;                // bundle_map applied sectionwise
};

struct PreframeCheck {
  bool ok = false;
  Field min_singular;     // smallest singular value of the 4k x 4k span matrix
  Field relative;         // the same divided by the largest, for diagnostics
  double worst = 0;
  std::size_t worst_node = 0;
  std::string diagnostic;
};

PreframeCheck is_preframe(const Preframe& p, double tolerance = 1e-8);

struct Annihilator {
  std::vector<CourantSection> basis;   // padded with zero sections where the dimension is lower
  std::vector<int> dimension;          // per node; boundary nodes are set to -1
  int min_interior = 0, max_interior = 0;
};

/// Pointwise null space of u -> (Psi_a, u)_+ and ([Psi_a, Psi_b], u)_+ by SVD
/// with a relative threshold.
Annihilator annihilator(const Preframe& p, const Chart& chart, double tolerance = 1e-8);

struct WeakEquivalence {
  bool equivalent = false;
  double beta1 = 0, beta2 = 0;
  double residual = 0;
  std::string reason;     // "ok", "empty-annihilator", "residual"
};

struct WeakEquivalenceOptions {
  int grid = 64;                 // coarse grid per beta axis on [0, 2 pi)
  int descent_iterations = 20;
  std::size_t max_nodes = 4096;  // interior nodes sampled for the residual
};

WeakEquivalence weak_equivalence(const Preframe& p1, const Preframe& p2, double tolerance,
                                 const WeakEquivalenceOptions& opt = {});

/// Vector field on a chart, one component per axis.
using VectorField = std::vector<std::vector<double>>;

/// K_l = xdot_l d/dx_l - x_l d/dxdot_l on the doubled chart (x, xdot),
/// l = 1..dim/2.
std::vector<VectorField> preternatural_generators(const Chart& doubled);

/// Lie bracket of vector fields by central differences.
VectorField lie_bracket(const VectorField& a, const VectorField& b, const Chart& c);

/// sup over interior nodes of |L_K Omega| for Omega = sum dx_l ^ dxdot_l.
double symplectic_lie_residual(const VectorField& K, const Chart& doubled);

}  // namespace spinv
