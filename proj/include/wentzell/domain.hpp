#pragma once

// Discrete geometry and measure for the closed domain: a mesh of the interior
// with lumped interior quadrature (dx), a boundary node list with lumped
// boundary quadrature (dsigma) and positive weight b, and matrix-free linear
// maps from nodal values to per-element constant gradients and per-boundary-
// element tangential derivatives.
//
// Supported meshes: uniform 1D intervals (boundary = two atoms of weight 1,
// tangential map identically zero) and structured triangulations of axis-
// aligned rectangles (boundary = closed counterclockwise polyline).

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "wentzell/common.hpp"

namespace wentzell::domain {

struct NonpositiveWeight : Error {
  using Error::Error;
};
struct MeshIOError : Error {
  using Error::Error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Simplex with precomputed measure and P1 shape-function gradients
// (nv = 2 for segments, 3 for triangles; 1D gradients use the x component).
struct Element {
  std::array<int, 3> v{-1, -1, -1};
  int nv = 0;
  double volume = 0.0;
  std::array<Vec2, 3> grad{};
};

// Oriented boundary segment between two boundary-list positions.
struct BoundaryElement {
  int a = -1;  // index into the boundary node list
  int b = -1;
  double length = 0.0;
};

struct DiscreteDomain {
  int dim = 0;
  std::vector<Vec2> nodes;               // all mesh nodes, boundary included
  std::vector<Element> elements;
  std::vector<int> boundary_index;       // boundary position -> mesh node id (CCW in 2D)
  std::vector<BoundaryElement> boundary_elements;  // empty in 1D
  std::vector<double> dx_weights;        // per mesh node
  std::vector<double> dsigma_weights;    // per boundary position
  std::vector<double> b_values;          // per boundary position
  double b0 = 0.0;                       // min of b_values
  std::vector<int> boundary_of_node;     // mesh node id -> boundary position, -1 if interior
  double volume = 0.0;                   // sum of dx_weights
  double surface = 0.0;                  // sum of dsigma_weights
  // Structured-mesh provenance, kept for text round-trips.
  int cells_x = 0, cells_y = 0;
  double extent_x = 0.0, extent_y = 0.0;

  std::size_t n_nodes() const { return nodes.size(); }
  std::size_t n_boundary() const { return boundary_index.size(); }

  // The interior gradient operator: nodal values -> constant gradient per element.
  std::vector<Vec2> element_gradients(const std::vector<double>& nodal) const {
    if (nodal.size() != nodes.size())
      throw DimensionMismatch("element_gradients: nodal vector does not match mesh");
    std::vector<Vec2> out(elements.size());
    for (std::size_t e = 0; e < elements.size(); ++e) {
      const Element& el = elements[e];
      Vec2 g{0.0, 0.0};
      for (int k = 0; k < el.nv; ++k) {
        const double u = nodal[static_cast<std::size_t>(el.v[static_cast<std::size_t>(k)])];
        g.x += u * el.grad[static_cast<std::size_t>(k)].x;
        g.y += u * el.grad[static_cast<std::size_t>(k)].y;
      }
      out[e] = g;
    }
    return out;
  }

  // The tangential gradient operator: boundary nodal values (indexed by
  // boundary position) -> arclength derivative per boundary element.
  std::vector<double> tangential_derivatives(const std::vector<double>& trace_vals) const {
    if (trace_vals.size() != boundary_index.size())
      throw DimensionMismatch("tangential_derivatives: trace vector does not match boundary");
    std::vector<double> out(boundary_elements.size());
    for (std::size_t s = 0; s < boundary_elements.size(); ++s) {
      const BoundaryElement& be = boundary_elements[s];
      out[s] = (trace_vals[static_cast<std::size_t>(be.b)] - trace_vals[static_cast<std::size_t>(be.a)]) / be.length;
    }
    return out;
  }
};

// A discrete function on the closed domain: one nodal array plus the index map
// identifying its boundary trace, so trace consistency is structural.
struct FieldPair {
  std::vector<double> interior;   // one value per mesh node
  std::vector<int> trace_index;   // boundary position -> mesh node id

  double trace(std::size_t b) const { return interior[static_cast<std::size_t>(trace_index[b])]; }
  std::vector<double> trace_values() const {
    std::vector<double> t(trace_index.size());
    for (std::size_t b = 0; b < trace_index.size(); ++b) t[b] = trace(b);
    return t;
  }
};

inline FieldPair make_field(const DiscreteDomain& dom, double constant = 0.0) {
  return FieldPair{std::vector<double>(dom.n_nodes(), constant), dom.boundary_index};
}

inline FieldPair make_field(const DiscreteDomain& dom, std::vector<double> nodal) {
  if (nodal.size() != dom.n_nodes())
    throw DimensionMismatch("make_field: nodal vector does not match mesh");
  return FieldPair{std::move(nodal), dom.boundary_index};
}

namespace detail {

inline Vec2 rot90(Vec2 v) { return Vec2{-v.y, v.x}; }

inline Element make_triangle(const std::vector<Vec2>& nodes, int a, int b, int c) {
  const Vec2 ra = nodes[static_cast<std::size_t>(a)];
  const Vec2 rb = nodes[static_cast<std::size_t>(b)];
  const Vec2 rc = nodes[static_cast<std::size_t>(c)];
  const double twice_area = (rb.x - ra.x) * (rc.y - ra.y) - (rb.y - ra.y) * (rc.x - ra.x);
  if (!(twice_area > 0)) throw BadParameter("triangle not counterclockwise / degenerate");
  Element el;
  el.v = {a, b, c};
  el.nv = 3;
  el.volume = 0.5 * twice_area;
  el.grad[0] = rot90(Vec2{rc.x - rb.x, rc.y - rb.y});
  el.grad[1] = rot90(Vec2{ra.x - rc.x, ra.y - rc.y});
  el.grad[2] = rot90(Vec2{rb.x - ra.x, rb.y - ra.y});
  for (auto& g : el.grad) {
    g.x /= twice_area;
    g.y /= twice_area;
  }
  return el;
}

inline void finalize(DiscreteDomain& dom) {
  dom.boundary_of_node.assign(dom.nodes.size(), -1);
  for (std::size_t b = 0; b < dom.boundary_index.size(); ++b)
    dom.boundary_of_node[static_cast<std::size_t>(dom.boundary_index[b])] = static_cast<int>(b);
  dom.volume = 0.0;
  for (double w : dom.dx_weights) dom.volume += w;
  dom.surface = 0.0;
  for (double w : dom.dsigma_weights) dom.surface += w;
  dom.b0 = inf;
  for (double b : dom.b_values) dom.b0 = std::min(dom.b0, b);
  for (double b : dom.b_values)
    if (!(b > 0)) throw NonpositiveWeight("boundary weight b must be strictly positive");
}

}  // namespace detail

// Uniform mesh of (0, length): n_cells segments, boundary measure = two unit
// atoms at the endpoints, tangential gradient identically zero.
inline DiscreteDomain build_interval(int n_cells, double length, double b_left, double b_right) {
  if (n_cells < 2) throw BadParameter("build_interval: need n_cells >= 2");
  if (!(length > 0)) throw BadParameter("build_interval: need length > 0");
  DiscreteDomain dom;
  dom.dim = 1;
  dom.cells_x = n_cells;
  dom.extent_x = length;
  const int n = n_cells + 1;
  const double h = length / n_cells;
  dom.nodes.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) dom.nodes[static_cast<std::size_t>(i)] = Vec2{i * h, 0.0};
  dom.elements.reserve(static_cast<std::size_t>(n_cells));
  for (int i = 0; i < n_cells; ++i) {
    Element el;
    el.v = {i, i + 1, -1};
    el.nv = 2;
    el.volume = h;
    el.grad[0] = Vec2{-1.0 / h, 0.0};
    el.grad[1] = Vec2{1.0 / h, 0.0};
    dom.elements.push_back(el);
  }
  dom.dx_weights.assign(static_cast<std::size_t>(n), h);
  dom.dx_weights.front() = 0.5 * h;
  dom.dx_weights.back() = 0.5 * h;
  dom.boundary_index = {0, n - 1};
  dom.dsigma_weights = {1.0, 1.0};
  dom.b_values = {b_left, b_right};
  detail::finalize(dom);
  return dom;
}

// Structured triangulation of (0,lx) x (0,ly): nx*ny cells split along the
// lower-left to upper-right diagonal; the boundary is the closed polyline of
// rim nodes ordered counterclockwise from the origin, with lumped arclength
// weights; b is sampled at the boundary nodes.
inline DiscreteDomain build_rectangle(int nx, int ny, double lx, double ly,
                                      const std::function<double(double, double)>& b) {
  if (nx < 2 || ny < 2) throw BadParameter("build_rectangle: need nx, ny >= 2");
  if (!(lx > 0) || !(ly > 0)) throw BadParameter("build_rectangle: need lx, ly > 0");
  DiscreteDomain dom;
  dom.dim = 2;
  dom.cells_x = nx;
  dom.cells_y = ny;
  dom.extent_x = lx;
  dom.extent_y = ly;
  const double hx = lx / nx, hy = ly / ny;
  const int nxn = nx + 1;
  dom.nodes.resize(static_cast<std::size_t>(nxn * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      dom.nodes[static_cast<std::size_t>(j * nxn + i)] = Vec2{i * hx, j * hy};

  dom.dx_weights.assign(dom.nodes.size(), 0.0);
  dom.elements.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = j * nxn + i, b2 = a + 1, c = b2 + nxn, d = a + nxn;
      for (const Element& el : {detail::make_triangle(dom.nodes, a, b2, c),
                                detail::make_triangle(dom.nodes, a, c, d)}) {
        dom.elements.push_back(el);
        for (int k = 0; k < 3; ++k)
          dom.dx_weights[static_cast<std::size_t>(el.v[static_cast<std::size_t>(k)])] += el.volume / 3.0;
      }
    }

  // Counterclockwise rim: bottom, right, top, left.
  for (int i = 0; i <= nx; ++i) dom.boundary_index.push_back(i);
  for (int j = 1; j <= ny; ++j) dom.boundary_index.push_back(j * nxn + nx);
  for (int i = nx - 1; i >= 0; --i) dom.boundary_index.push_back(ny * nxn + i);
  for (int j = ny - 1; j >= 1; --j) dom.boundary_index.push_back(j * nxn);

  const std::size_t m = dom.boundary_index.size();
  dom.boundary_elements.resize(m);
  for (std::size_t s = 0; s < m; ++s) {
    const std::size_t t = (s + 1) % m;
    const Vec2 pa = dom.nodes[static_cast<std::size_t>(dom.boundary_index[s])];
    const Vec2 pb = dom.nodes[static_cast<std::size_t>(dom.boundary_index[t])];
    const double len = std::hypot(pb.x - pa.x, pb.y - pa.y);
    dom.boundary_elements[s] = BoundaryElement{static_cast<int>(s), static_cast<int>(t), len};
  }
  dom.dsigma_weights.assign(m, 0.0);
  for (std::size_t s = 0; s < m; ++s) {
    dom.dsigma_weights[static_cast<std::size_t>(dom.boundary_elements[s].a)] += 0.5 * dom.boundary_elements[s].length;
    dom.dsigma_weights[static_cast<std::size_t>(dom.boundary_elements[s].b)] += 0.5 * dom.boundary_elements[s].length;
  }
  dom.b_values.resize(m);
  for (std::size_t s = 0; s < m; ++s) {
    const Vec2 pos = dom.nodes[static_cast<std::size_t>(dom.boundary_index[s])];
    dom.b_values[s] = b(pos.x, pos.y);
  }
  detail::finalize(dom);
  return dom;
}

inline DiscreteDomain build_rectangle(int nx, int ny, double lx, double ly, double b_const) {
  return build_rectangle(nx, ny, lx, ly, [b_const](double, double) { return b_const; });
}

// (lambda1, lambda2) = (interior volume, b-weighted boundary measure).
struct Measures {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

inline Measures measures(const DiscreteDomain& dom) {
  Measures m;
  m.lambda1 = dom.volume;
  for (std::size_t b = 0; b < dom.n_boundary(); ++b) m.lambda2 += dom.dsigma_weights[b] / dom.b_values[b];
  return m;
}

// The natural data pairing: integral of f against dx plus g against dsigma/b.
inline double integrate_pair(const DiscreteDomain& dom, const std::vector<double>& f,
                             const std::vector<double>& g) {
  if (f.size() != dom.n_nodes() || g.size() != dom.n_boundary())
    throw DimensionMismatch("integrate_pair: data vectors do not match domain");
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += dom.dx_weights[i] * f[i];
  for (std::size_t b = 0; b < g.size(); ++b) sum += dom.dsigma_weights[b] / dom.b_values[b] * g[b];
  return sum;
}

// ---------------------------------------------------------------------------
// Plain-text mesh dump/load.  One record per line; all reals are printed with
// 17 significant digits so a dump/load round-trip is bit-exact.

inline void dump_mesh(const DiscreteDomain& dom, std::ostream& out) {
  char buf[180];
  out << "wentzell-mesh 1\n";
  out << "dim " << dom.dim << "\n";
  out << "cells " << dom.cells_x << " " << dom.cells_y << "\n";
  std::snprintf(buf, sizeof buf, "extent %.17g %.17g\n", dom.extent_x, dom.extent_y);
  out << buf;
  out << "nodes " << dom.n_nodes() << "\n";
  for (std::size_t i = 0; i < dom.n_nodes(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", dom.nodes[i].x, dom.nodes[i].y, dom.dx_weights[i]);
    out << buf;
  }
  out << "boundary " << dom.n_boundary() << "\n";
  for (std::size_t b = 0; b < dom.n_boundary(); ++b) {
    std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", dom.boundary_index[b], dom.dsigma_weights[b],
                  dom.b_values[b]);
    out << buf;
  }
  out << "elements " << dom.elements.size() << "\n";
  for (const Element& el : dom.elements) out << el.v[0] << " " << el.v[1] << " " << el.v[2] << "\n";
  out << "boundary_elements " << dom.boundary_elements.size() << "\n";
  for (const BoundaryElement& be : dom.boundary_elements) out << be.a << " " << be.b << "\n";
}

inline void dump_mesh(const DiscreteDomain& dom, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshIOError("dump_mesh: cannot open '" + path + "'");
  dump_mesh(dom, out);
}

inline DiscreteDomain load_mesh(std::istream& in) {
  auto fail = [](const std::string& msg) -> void { throw MeshIOError("load_mesh: " + msg); };
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "wentzell-mesh" || version != 1) fail("bad header");
  DiscreteDomain dom;
  std::size_t count = 0;
  in >> tag >> dom.dim;
  if (tag != "dim" || (dom.dim != 1 && dom.dim != 2)) fail("bad dim record");
  in >> tag >> dom.cells_x >> dom.cells_y;
  if (tag != "cells") fail("bad cells record");
  in >> tag >> dom.extent_x >> dom.extent_y;
  if (tag != "extent") fail("bad extent record");
  in >> tag >> count;
  if (tag != "nodes") fail("bad nodes record");
  dom.nodes.resize(count);
  dom.dx_weights.resize(count);
  for (std::size_t i = 0; i < count; ++i) in >> dom.nodes[i].x >> dom.nodes[i].y >> dom.dx_weights[i];
  in >> tag >> count;
  if (tag != "boundary") fail("bad boundary record");
  dom.boundary_index.resize(count);
  dom.dsigma_weights.resize(count);
  dom.b_values.resize(count);
  for (std::size_t b = 0; b < count; ++b)
    in >> dom.boundary_index[b] >> dom.dsigma_weights[b] >> dom.b_values[b];
  in >> tag >> count;
  if (tag != "elements") fail("bad elements record");
  const int n_nodes = static_cast<int>(dom.nodes.size());
  for (std::size_t e = 0; e < count; ++e) {
    int a, b, c;
    in >> a >> b >> c;
    if (a < 0 || a >= n_nodes || b < 0 || b >= n_nodes || c < -1 || c >= n_nodes)
      fail("element node id out of range");
    if (c < 0) {
      Element el;
      el.v = {a, b, -1};
      el.nv = 2;
      const double h = dom.nodes[static_cast<std::size_t>(b)].x - dom.nodes[static_cast<std::size_t>(a)].x;
      if (!(h > 0)) fail("degenerate 1D element");
      el.volume = h;
      el.grad[0] = Vec2{-1.0 / h, 0.0};
      el.grad[1] = Vec2{1.0 / h, 0.0};
      dom.elements.push_back(el);
    } else {
      dom.elements.push_back(detail::make_triangle(dom.nodes, a, b, c));
    }
  }
  in >> tag >> count;
  if (tag != "boundary_elements") fail("bad boundary_elements record");
  const int m = static_cast<int>(dom.boundary_index.size());
  for (std::size_t s = 0; s < count; ++s) {
    int a, b;
    in >> a >> b;
    if (a < 0 || a >= m || b < 0 || b >= m) fail("boundary element id out of range");
    const Vec2 pa = dom.nodes[static_cast<std::size_t>(dom.boundary_index[static_cast<std::size_t>(a)])];
    const Vec2 pb = dom.nodes[static_cast<std::size_t>(dom.boundary_index[static_cast<std::size_t>(b)])];
    dom.boundary_elements.push_back(BoundaryElement{a, b, std::hypot(pb.x - pa.x, pb.y - pa.y)});
  }
  if (!in) fail("truncated file");
  detail::finalize(dom);
  return dom;
}

inline DiscreteDomain load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshIOError("load_mesh: cannot open '" + path + "'");
  return load_mesh(in);
}

}  // namespace wentzell::domain
