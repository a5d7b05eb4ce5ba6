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

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace spinv {

/// Node-centred box grid. Axis a has n[a] nodes from lo[a] to hi[a]
/// inclusive; flat indices are row-major with the last axis fastest.
/// For symplectic use the dimension is 2k and x_i pairs with x_{i+k}.
struct Chart {
  int dim = 0;
  std::vector<double> lo, hi;
  std::vector<int> n;

  static Chart box(std::vector<double> lo, std::vector<double> hi, std::vector<int> n);
  static Chart cube(int dim, double lo, double hi, int n);

  int k() const { return dim / 2; }
  void require_symplectic() const;  // throws InputError unless dim is even and >= 2

  double step(int a) const { return (hi[a] - lo[a]) / (n[a] - 1); }
  double coord(int a, int i) const { return lo[a] + step(a) * i; }
  std::size_t size() const;
  std::size_t stride(int a) const;
  std::vector<int> unravel(std::size_t flat) const;
  std::size_t ravel(const std::vector<int>& idx) const;
  std::vector<double> point(std::size_t flat) const;
  /// True when every index is at least `band` nodes away from the boundary.
  bool interior(std::size_t flat, int band = 1) const;

  bool operator==(const Chart& o) const;
};

struct Field {
  Chart chart;
  std::vector<double> v;

  Field() = default;
  Field(Chart c, double value = 0.0);
  static Field sample(const Chart& c, const std::function<double(const std::vector<double>&)>& f);

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
  std::size_t size() const { return v.size(); }

  /// Second-order central difference along axis a; one-sided at the ends.
  Field derivative(int a) const;
  double sup_norm(int band = 0) const;
};

/// Several named components sharing one chart. Binary layout: raw float64
/// in native byte order, component-major then row-major; a text header
/// alongside describes the chart.
struct FieldBundle {
  Chart chart;
  std::vector<std::string> names;
  std::vector<std::vector<double>> comps;
};

void write_fields(const std::string& stem, const FieldBundle& b);   // stem.bin + stem.hdr
FieldBundle read_fields(const std::string& stem);
void write_fields_csv(const std::string& path, const FieldBundle& b);

/// Shortest round-trip decimal form, 17 significant digits.
std::string format_double(double x);

}  // namespace spinv
