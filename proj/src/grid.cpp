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

#include "spinv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spinv/errors.hpp"

namespace spinv {

Chart Chart::box(std::vector<double> lo, std::vector<double> hi, std::vector<int> n) {
  if (lo.empty() || lo.size() != hi.size() || lo.size() != n.size())
    throw InputError("chart: bounds and resolution must have the same nonzero length");
  for (std::size_t a = 0; a < lo.size(); ++a) {
    if (!std::isfinite(lo[a]) || !std::isfinite(hi[a]) || !(lo[a] < hi[a]))
      throw InputError("chart: bounds must be finite with min < max on every axis");
    if (n[a] < 4) throw InputError("chart: resolution must be at least 4 per axis");
  }
  Chart c;
  c.dim = int(lo.size());
  c.lo = std::move(lo);
  c.hi = std::move(hi);
  c.n = std::move(n);
  return c;
}

Chart Chart::cube(int dim, double lo, double hi, int n) {
  if (dim < 1) throw InputError("chart: dimension must be positive");
  return box(std::vector<double>(dim, lo), std::vector<double>(dim, hi), std::vector<int>(dim, n));
}

void Chart::require_symplectic() const {
  if (dim < 2 || dim % 2) throw InputError("chart: symplectic charts need even dimension >= 2");
}

std::size_t Chart::size() const {
  std::size_t s = 1;
  for (int v : n) s *= std::size_t(v);
  return s;
}

std::size_t Chart::stride(int a) const {
  std::size_t s = 1;
  for (int b = dim - 1; b > a; --b) s *= std::size_t(n[b]);
  return s;
}

std::vector<int> Chart::unravel(std::size_t flat) const {
  std::vector<int> idx(dim);
  for (int a = dim - 1; a >= 0; --a) {
    idx[a] = int(flat % std::size_t(n[a]));
    flat /= std::size_t(n[a]);
  }
  return idx;
}

std::size_t Chart::ravel(const std::vector<int>& idx) const {
  std::size_t f = 0;
  for (int a = 0; a < dim; ++a) f = f * std::size_t(n[a]) + std::size_t(idx[a]);
  return f;
}

std::vector<double> Chart::point(std::size_t flat) const {
  auto idx = unravel(flat);
  std::vector<double> x(dim);
  for (int a = 0; a < dim; ++a) x[a] = coord(a, idx[a]);
  return x;
}

bool Chart::interior(std::size_t flat, int band) const {
  auto idx = unravel(flat);
  for (int a = 0; a < dim; ++a)
    if (idx[a] < band || idx[a] > n[a] - 1 - band) return false;
  return true;
}

bool Chart::operator==(const Chart& o) const {
  return dim == o.dim && lo == o.lo && hi == o.hi && n == o.n;
}

Field::Field(Chart c, double value) : chart(std::move(c)), v(chart.size(), value) {}

Field Field::sample(const Chart& c, const std::function<double(const std::vector<double>&)>& f) {
  Field out(c);
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = f(c.point(i));
  return out;
}

Field Field::derivative(int a) const {
  Field d(chart);
  const std::size_t s = chart.stride(a);
  const double h = chart.step(a);
  for (std::size_t i = 0; i < size(); ++i) {
    const int j = int((i / s) % std::size_t(chart.n[a]));
    const int last = chart.n[a] - 1;
    if (j == 0)
      d.v[i] = (-3 * v[i] + 4 * v[i + s] - v[i + 2 * s]) / (2 * h);
    else if (j == last)
      d.v[i] = (3 * v[i] - 4 * v[i - s] + v[i - 2 * s]) / (2 * h);
    else
      d.v[i] = (v[i + s] - v[i - s]) / (2 * h);
  }
  return d;
}

double Field::sup_norm(int band) const {
  double m = 0;
  for (std::size_t i = 0; i < size(); ++i)
    if (band == 0 || chart.interior(i, band)) m = std::max(m, std::abs(v[i]));
  return m;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_fields(const std::string& stem, const FieldBundle& b) {
  if (b.names.size() != b.comps.size()) throw InputError("write_fields: names and components differ");
  for (const auto& c : b.comps)
    if (c.size() != b.chart.size()) throw InputError("write_fields: component does not fit the chart");
  std::ofstream hdr(stem + ".hdr");
  if (!hdr) throw InputError("write_fields: cannot open " + stem + ".hdr");
  hdr << "spinv-fields 1\n";
  hdr << "dimension " << b.chart.dim << "\n";
  hdr << "resolution";
  for (int v : b.chart.n) hdr << ' ' << v;
  hdr << "\nlo";
  for (double v : b.chart.lo) hdr << ' ' << format_double(v);
  hdr << "\nhi";
  for (double v : b.chart.hi) hdr << ' ' << format_double(v);
  hdr << "\ncomponents " << b.comps.size() << "\nnames";
  for (const auto& n : b.names) hdr << ' ' << n;
  hdr << "\nlayout float64 component-major row-major last-axis-fastest\n";

  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw InputError("write_fields: cannot open " + stem + ".bin");
  for (const auto& c : b.comps)
    bin.write(reinterpret_cast<const char*>(c.data()), std::streamsize(c.size() * sizeof(double)));
}

FieldBundle read_fields(const std::string& stem) {
  std::ifstream hdr(stem + ".hdr");
  if (!hdr) throw InputError("read_fields: cannot open " + stem + ".hdr");
  std::string line, magic;
  std::getline(hdr, magic);
  if (magic.rfind("spinv-fields", 0) != 0) throw InputError("read_fields: not a field header");
  int dim = 0;
  std::size_t ncomp = 0;
  std::vector<int> n;
  std::vector<double> lo, hi;
  std::vector<std::string> names;
  while (std::getline(hdr, line)) {
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "dimension") is >> dim;
    else if (key == "resolution") for (int v; is >> v;) n.push_back(v);
    else if (key == "lo") for (double v; is >> v;) lo.push_back(v);
    else if (key == "hi") for (double v; is >> v;) hi.push_back(v);
    else if (key == "components") is >> ncomp;
    else if (key == "names") for (std::string s; is >> s;) names.push_back(s);
  }
  if (int(n.size()) != dim) throw InputError("read_fields: malformed header");
  FieldBundle b;
  b.chart = Chart::box(lo, hi, n);
  b.names = names;
  if (b.names.size() != ncomp) throw InputError("read_fields: component names do not match count");
  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw InputError("read_fields: cannot open " + stem + ".bin");
  for (std::size_t c = 0; c < ncomp; ++c) {
    std::vector<double> v(b.chart.size());
    bin.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
    if (!bin) throw InputError("read_fields: truncated binary payload");
    b.comps.push_back(std::move(v));
  }
  return b;
}

void write_fields_csv(const std::string& path, const FieldBundle& b) {
  std::ofstream os(path);
  if (!os) throw InputError("write_fields_csv: cannot open " + path);
  for (int a = 0; a < b.chart.dim; ++a) os << (a ? "," : "") << 'x' << (a + 1);
  for (const auto& n : b.names) os << ",\"" << n << '"';
  os << '\n';
  for (std::size_t i = 0; i < b.chart.size(); ++i) {
    auto x = b.chart.point(i);
    for (int a = 0; a < b.chart.dim; ++a) os << (a ? "," : "") << format_double(x[a]);
    for (const auto& c : b.comps) os << ',' << format_double(c[i]);
    os << '\n';
  }
}

}  // namespace spinv
