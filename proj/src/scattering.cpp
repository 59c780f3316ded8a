#include "helmhom/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "helmhom/bessel.hpp"
#include "helmhom/errors.hpp"

namespace helmhom::scattering {

namespace {
constexpr Complex kI{0.0, 1.0};
}

Complex PlaneWave::value(const Vec2& x, double n0) const {
  const double keff = k * std::sqrt(n0);
  return amplitude * std::exp(kI * (keff * direction.dot(x)));
}

Vec2c PlaneWave::gradient(const Vec2& x, double n0) const {
  const double keff = k * std::sqrt(n0);
  const Complex v = value(x, n0) * (kI * keff);
  return {v * direction.x, v * direction.y};
}

double min_box_side(double k, double n0, double scatterer_side,
                    double margin_wavelengths) {
  const double lambda = 2.0 * std::numbers::pi / (k * std::sqrt(n0));
  return scatterer_side + 2.0 * margin_wavelengths * lambda;
}

TriCoefficients sample_coefficients(const fem::TriMesh& mesh,
                                    const micro::CoefficientField& field) {
  TriCoefficients c;
  const std::size_t n = mesh.triangles.size();
  c.a.resize(n);
  c.n.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto [a, nn] = field.at(mesh.centroid(static_cast<int>(t)));
    c.a[t] = a;
    c.n[t] = nn;
  }
  return c;
}

TriCoefficients homogenized_coefficients(const fem::TriMesh& mesh, const Mat2& a_hom,
                                         double n_hom, double n0) {
  TriCoefficients c;
  const std::size_t n = mesh.triangles.size();
  c.a.resize(n);
  c.n.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (mesh.triangles[t].tag == fem::Region::ScattererD) {
      c.a[t] = a_hom;
      c.n[t] = n_hom;
    } else {
      c.a[t] = Mat2::identity();
      c.n[t] = n0;
    }
  }
  return c;
}

fem::ComplexSparseMatrix helmholtz_operator(const fem::Grid& grid,
                                            const TriCoefficients& coeffs,
                                            double k, double n0) {
  std::vector<Complex> c_tri(coeffs.n.size());
  for (std::size_t t = 0; t < coeffs.n.size(); ++t)
    c_tri[t] = Complex{-k * k * coeffs.n[t], 0.0};
  fem::BoundaryClosure closure;
  closure.gamma = -kI * (k * std::sqrt(n0));
  auto sys = fem::assemble(grid, coeffs.a, c_tri, {}, &closure);
  return std::move(sys.matrix);
}

ScatterSolution solve_helmholtz(std::shared_ptr<const fem::Grid> grid,
                                const TriCoefficients& coeffs, double k, double n0,
                                const PlaneWave* incident, const Square& scatterer,
                                const fem::VolumeLoads* loads,
                                const fem::LinearSolver* reuse) {
  if (coeffs.a.size() != grid->mesh.triangles.size() ||
      coeffs.n.size() != grid->mesh.triangles.size())
    throw Error("solve_helmholtz: coefficient size mismatch");

  fem::BoundaryClosure closure;
  closure.gamma = -kI * (k * std::sqrt(n0));
  if (incident) {
    const PlaneWave pw = *incident;
    closure.load = [pw, n0, k](const Vec2& x, const Vec2& nu) {
      const Vec2c g = pw.gradient(x, n0);
      return g.x * nu.x + g.y * nu.y - kI * (k * std::sqrt(n0)) * pw.value(x, n0);
    };
  }

  fem::VolumeLoads all_loads;
  if (loads) all_loads = *loads;

  ScatterSolution sol;
  sol.k = k;
  sol.n_background = n0;
  if (incident) sol.incident = *incident;
  sol.has_incident = incident != nullptr;
  sol.scatterer = scatterer;
  sol.coeffs = coeffs;

  if (reuse) {
    // Right-hand side only; the caller holds the factorized operator.
    fem::BoundaryClosure rhs_closure;
    rhs_closure.load = closure.load;
    auto sys = fem::assemble(*grid, {}, {}, all_loads,
                             closure.load || !all_loads.scalar.empty() ||
                                     !all_loads.divergence.empty()
                                 ? &rhs_closure
                                 : nullptr);
    sol.u = fem::FieldP1{grid, reuse->solve(sys.rhs)};
    return sol;
  }

  std::vector<Complex> c_tri(coeffs.n.size());
  for (std::size_t t = 0; t < coeffs.n.size(); ++t)
    c_tri[t] = Complex{-k * k * coeffs.n[t], 0.0};
  auto sys = fem::assemble(*grid, coeffs.a, c_tri, all_loads, &closure);
  sol.u = fem::FieldP1{grid, fem::solve_linear(sys.matrix, sys.rhs)};
  return sol;
}

BoundaryLoop scatterer_boundary(const fem::Grid& grid) {
  const fem::TriMesh& m = grid.mesh;
  // Edge -> adjacent (triangle, tag) pairs.
  std::map<std::pair<int, int>, std::vector<int>> adj;
  for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
    const auto& tv = m.triangles[t].v;
    for (int e = 0; e < 3; ++e) {
      const int a = tv[e], b = tv[(e + 1) % 3];
      adj[{std::min(a, b), std::max(a, b)}].push_back(t);
    }
  }

  struct RawEdge {
    int a, b, tri_in, tri_out;
  };
  std::vector<RawEdge> raw;
  for (const auto& [key, tris] : adj) {
    if (tris.size() != 2) continue;
    const auto tag0 = m.triangles[tris[0]].tag;
    const auto tag1 = m.triangles[tris[1]].tag;
    if (tag0 == tag1) continue;
    const int tin = tag0 == fem::Region::ScattererD ? tris[0] : tris[1];
    const int tout = tag0 == fem::Region::ScattererD ? tris[1] : tris[0];
    raw.push_back({key.first, key.second, tin, tout});
  }
  if (raw.empty()) throw Error("scatterer boundary: no interface edges found");

  // Walk the (unique) closed loop through shared vertices.
  std::map<int, std::vector<int>> at_vertex;
  for (int i = 0; i < static_cast<int>(raw.size()); ++i) {
    at_vertex[raw[i].a].push_back(i);
    at_vertex[raw[i].b].push_back(i);
  }
  for (const auto& [v, es] : at_vertex)
    if (es.size() != 2)
      throw Error("scatterer boundary: interface is not a single closed loop");

  BoundaryLoop loop;
  std::vector<char> used(raw.size(), 0);
  int cur_edge = 0;
  int cur_vertex = raw[0].a;
  for (std::size_t step = 0; step < raw.size(); ++step) {
    const RawEdge& re = raw[cur_edge];
    used[cur_edge] = 1;
    const int next_vertex = re.a == cur_vertex ? re.b : re.a;

    BoundaryLoop::Edge e;
    e.v0 = cur_vertex;
    e.v1 = next_vertex;
    const Vec2 p0 = m.vertices[e.v0], p1 = m.vertices[e.v1];
    e.midpoint = (p0 + p1) * 0.5;
    e.length = (p1 - p0).norm();
    e.tri_in = re.tri_in;
    e.tri_out = re.tri_out;
    Vec2 n = (p1 - p0).perp();
    n = n / n.norm();
    if (n.dot(m.centroid(re.tri_out) - e.midpoint) < 0.0) n = n * -1.0;
    e.normal = n;
    loop.edges.push_back(e);

    // advance: the other unused edge at next_vertex
    const auto& cand = at_vertex[next_vertex];
    int nxt = -1;
    for (int c : cand)
      if (!used[c]) nxt = c;
    if (nxt < 0 && step + 1 < raw.size())
      throw Error("scatterer boundary: interface is not a single closed loop");
    cur_edge = nxt;
    cur_vertex = next_vertex;
  }
  if (loop.edges.size() != raw.size())
    throw Error("scatterer boundary: interface has more than one loop");
  return loop;
}

BoundaryFlux recover_flux(const ScatterSolution& sol) {
  const fem::Grid& grid = *sol.u.grid;
  const fem::TriMesh& m = grid.mesh;
  BoundaryFlux out;
  out.loop = scatterer_boundary(grid);
  const auto& edges = out.loop.edges;
  const int ne = static_cast<int>(edges.size());

  // Loop-vertex residuals of the interior (ScattererD) bilinear form:
  //   r_v = sum_{T in D} [ int_T a grad(u).grad(lambda_v) - k^2 n u lambda_v ].
  std::map<int, int> vertex_pos;  // mesh vertex -> loop position i (vertex w_i)
  for (int i = 0; i < ne; ++i) vertex_pos[edges[i].v0] = i;

  std::vector<Complex> r(ne, Complex{0.0, 0.0});
  const double k2 = sol.k * sol.k;
  for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
    if (m.triangles[t].tag != fem::Region::ScattererD) continue;
    const auto& tv = m.triangles[t].v;
    bool touches = false;
    for (int i = 0; i < 3 && !touches; ++i)
      touches = vertex_pos.count(tv[i]) > 0;
    if (!touches) continue;

    const double A = m.area(t);
    const auto g = m.basis_gradients(t);
    const Mat2& a = sol.coeffs.a[t];
    const Complex c{-k2 * sol.coeffs.n[t], 0.0};
    Complex u[3];
    for (int i = 0; i < 3; ++i) u[i] = sol.u.values[grid.dofs.dof(tv[i])];

    for (int i = 0; i < 3; ++i) {
      const auto it = vertex_pos.find(tv[i]);
      if (it == vertex_pos.end()) continue;
      Complex acc{0.0, 0.0};
      const Vec2 agi = a.apply(g[i]);
      for (int j = 0; j < 3; ++j) {
        acc += Complex{A * agi.dot(g[j]), 0.0} * u[j];
        acc += c * (A / 12.0) * (i == j ? 2.0 : 1.0) * u[j];
      }
      r[it->second] += acc;
    }
  }

  // Edgewise-constant flux p_e from the cyclic vertex equations
  //   (len_{i-1} p_{i-1} + len_i p_i)/2 = r_i  (vertex w_i joins e_{i-1}, e_i).
  // Propagate p_i = c_i + s_i t from the unknown t = p_0 and close the loop;
  // even cycles carry a null mode, resolved by the minimum-norm choice.
  std::vector<Complex> cpart(ne, Complex{0.0, 0.0});
  std::vector<double> spart(ne, 0.0);
  spart[0] = 1.0;
  for (int i = 1; i < ne; ++i) {
    cpart[i] = (2.0 * r[i] - edges[i - 1].length * cpart[i - 1]) / edges[i].length;
    spart[i] = -edges[i - 1].length * spart[i - 1] / edges[i].length;
  }
  const double closure_coef = edges[ne - 1].length * spart[ne - 1] + edges[0].length;
  Complex t_val;
  if (std::abs(closure_coef) > 1e-8 * edges[0].length) {
    t_val = (2.0 * r[0] - edges[ne - 1].length * cpart[ne - 1]) / closure_coef;
  } else {
    // minimize sum len_i |c_i + s_i t|^2
    double denom = 0.0;
    Complex num{0.0, 0.0};
    for (int i = 0; i < ne; ++i) {
      denom += edges[i].length * spart[i] * spart[i];
      num += edges[i].length * spart[i] * cpart[i];
    }
    t_val = -num / denom;
  }
  out.p.resize(ne);
  for (int i = 0; i < ne; ++i) out.p[i] = cpart[i] + spart[i] * t_val;

  out.trace.resize(ne);
  for (int i = 0; i < ne; ++i) {
    const Complex u0v = sol.u.values[grid.dofs.dof(edges[i].v0)];
    const Complex u1v = sol.u.values[grid.dofs.dof(edges[i].v1)];
    out.trace[i] = 0.5 * (u0v + u1v);
  }
  return out;
}

std::vector<Complex> exterior_eval(const ScatterSolution& sol,
                                   const BoundaryFlux& flux,
                                   const std::vector<Vec2>& points) {
  const double h = sol.u.grid->mesh.mesh_step;
  const double keff = sol.k * std::sqrt(sol.n_background);
  std::vector<Complex> out;
  out.reserve(points.size());
  for (const Vec2& y : points) {
    const double dist = sol.scatterer.distance(y);
    if (dist < 2.0 * h) {
      std::ostringstream os;
      os << "evaluation point (" << y.x << ", " << y.y
         << ") is within 2h of the scatterer boundary (dist = " << dist << ")";
      throw TooCloseToBoundary(os.str());
    }
    Complex acc = sol.has_incident ? sol.incident.value(y, sol.n_background)
                                   : Complex{0.0, 0.0};
    for (std::size_t e = 0; e < flux.loop.edges.size(); ++e) {
      const auto& edge = flux.loop.edges[e];
      const Vec2c gg = grad_green_2d(keff, edge.midpoint, y);
      const Complex gdotn = gg.x * edge.normal.x + gg.y * edge.normal.y;
      acc += edge.length *
             (gdotn * flux.trace[e] - flux.p[e] * green_2d(keff, edge.midpoint, y));
    }
    out.push_back(acc);
  }
  return out;
}

std::vector<Vec2> read_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open observation points file: " + path);
  std::vector<Vec2> pts;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    Vec2 p;
    if (ls >> p.x >> p.y) {
      pts.push_back(p);
    } else {
      std::istringstream check(line);
      std::string tok;
      if (check >> tok) throw IoError("malformed observation point line: " + line);
    }
  }
  return pts;
}

void write_point_values_csv(const std::string& path, const std::vector<Vec2>& pts,
                            const std::vector<Complex>& values) {
  if (pts.size() != values.size())
    throw Error("point/value count mismatch for CSV output");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "x,y,re,im\n";
  char buf[160];
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", pts[i].x, pts[i].y,
                  values[i].real(), values[i].imag());
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace helmhom::scattering
