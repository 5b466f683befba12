// Mesh connectivity, geometry and fracture tagging.

#include "polyfrac/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

namespace polyfrac {

namespace {

double polygon_diameter(const std::vector<int>& vs, const std::vector<Vec3>& x) {
  double d = 0;
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j)
      d = std::max(d, (x[vs[i]] - x[vs[j]]).norm());
  return d;
}

// Orients the face loops of one cell so that they all traverse shared edges in
// opposite directions, i.e. they describe a consistently oriented closed
// surface. Throws if the boundary is not closed or not orientable.
void orient_cell_faces(std::vector<std::vector<int>>& loops) {
  const int nf = static_cast<int>(loops.size());
  std::map<std::pair<int, int>, std::vector<std::pair<int, bool>>> edge_use;
  auto register_uses = [&](int f) {
    const auto& L = loops[f];
    for (std::size_t i = 0; i < L.size(); ++i) {
      int a = L[i], b = L[(i + 1) % L.size()];
      bool asc = a < b;
      edge_use[{std::min(a, b), std::max(a, b)}].push_back({f, asc});
    }
  };
  for (int f = 0; f < nf; ++f) register_uses(f);
  for (const auto& [e, uses] : edge_use)
    if (uses.size() != 2)
      throw std::runtime_error("cell boundary not closed: edge shared by " +
                               std::to_string(uses.size()) + " faces");

  std::vector<int> state(nf, 0);  // 0 unvisited, 1 kept, -1 flipped
  std::queue<int> q;
  for (int seed = 0; seed < nf; ++seed) {
    if (state[seed] != 0) continue;
    state[seed] = 1;
    q.push(seed);
    while (!q.empty()) {
      int f = q.front();
      q.pop();
      const auto& L = loops[f];
      for (std::size_t i = 0; i < L.size(); ++i) {
        int a = L[i], b = L[(i + 1) % L.size()];
        auto key = std::make_pair(std::min(a, b), std::max(a, b));
        for (auto [g, asc_g] : edge_use[key]) {
          if (g == f) continue;
          // direction of (a,b) in f, accounting for a possible flip of f
          bool asc_f = (a < b) == (state[f] == 1);
          bool asc_g_eff = asc_g;  // g unflipped so far if unvisited
          if (state[g] == 0) {
            // opposite traversal required
            state[g] = (asc_f == asc_g_eff) ? -1 : 1;
            q.push(g);
          } else {
            bool asc_g_cur = asc_g == (state[g] == 1);
            if (asc_f == asc_g_cur)
              throw std::runtime_error("cell boundary not orientable");
          }
        }
      }
    }
  }
  for (int f = 0; f < nf; ++f)
    if (state[f] == -1) std::reverse(loops[f].begin(), loops[f].end());
}

// Chains 2-vertex edges of a 2D cell into a CCW vertex cycle and returns the
// edges reordered and directed along the cycle.
void orient_cell_edges_2d(std::vector<std::vector<int>>& loops, const std::vector<Vec3>& x) {
  std::map<int, std::vector<int>> at_vertex;
  for (std::size_t f = 0; f < loops.size(); ++f) {
    if (loops[f].size() != 2) throw std::runtime_error("2D cell face must have 2 vertices");
    at_vertex[loops[f][0]].push_back(static_cast<int>(f));
    at_vertex[loops[f][1]].push_back(static_cast<int>(f));
  }
  for (const auto& [v, fs] : at_vertex)
    if (fs.size() != 2) throw std::runtime_error("2D cell boundary not closed at a vertex");

  // walk the cycle
  std::vector<std::vector<int>> ordered;
  std::vector<char> used(loops.size(), 0);
  int f0 = 0;
  int start = loops[f0][0], cur = loops[f0][1];
  ordered.push_back({start, cur});
  used[f0] = 1;
  while (cur != start) {
    bool advanced = false;
    for (int f : at_vertex[cur]) {
      if (used[f]) continue;
      int nxt = loops[f][0] == cur ? loops[f][1] : loops[f][0];
      ordered.push_back({cur, nxt});
      used[f] = 1;
      cur = nxt;
      advanced = true;
      break;
    }
    if (!advanced) throw std::runtime_error("2D cell boundary is not a single cycle");
  }
  if (ordered.size() != loops.size())
    throw std::runtime_error("2D cell boundary is not a single cycle");

  double area2 = 0;
  for (const auto& e : ordered)
    area2 += x[e[0]].x() * x[e[1]].y() - x[e[1]].x() * x[e[0]].y();
  if (area2 < 0)
    for (auto& e : ordered) std::swap(e[0], e[1]);
  loops = ordered;
}

void compute_face_geometry(Face& F, const std::vector<Vec3>& x, int dim) {
  const auto& vs = F.verts;
  F.diam = polygon_diameter(vs, x);
  if (dim == 2) {
    const Vec3 &a = x[vs[0]], &b = x[vs[1]];
    F.area = (b - a).norm();
    F.centroid = 0.5 * (a + b);
    F.fan_center = F.centroid;
    Vec3 t = (b - a) / F.area;
    F.normal = Vec3(t.y(), -t.x(), 0.0);
    F.planar = true;
    F.tris.clear();
    return;
  }
  Vec3 c = Vec3::Zero();
  for (int v : vs) c += x[v];
  c /= static_cast<double>(vs.size());
  F.fan_center = c;
  F.tris.clear();
  double area = 0;
  Vec3 centroid = Vec3::Zero(), avg_normal = Vec3::Zero();
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const Vec3 &a = x[vs[i]], &b = x[vs[(i + 1) % vs.size()]];
    Vec3 nn = 0.5 * (a - c).cross(b - c);
    double ta = nn.norm();
    FaceTri T{a, b, c, ta, ta > 0 ? Vec3(nn / ta) : Vec3::Zero()};
    area += ta;
    centroid += ta * T.centroid();
    avg_normal += nn;
    F.tris.push_back(T);
  }
  if (area <= 0) throw std::runtime_error("degenerate face");
  F.area = area;
  F.centroid = centroid / area;
  F.normal = avg_normal.normalized();
  double off = 0;
  for (int v : vs) off = std::max(off, std::abs((x[v] - c).dot(F.normal)));
  F.planar = off <= 1e-9 * std::max(F.diam, 1e-300);
}

}  // namespace

PolytopalMesh build_connectivity(const std::vector<std::vector<std::vector<int>>>& raw_cells,
                                 const std::vector<Vec3>& coords, int dim) {
  if (dim != 2 && dim != 3) throw std::runtime_error("dim must be 2 or 3");
  PolytopalMesh m;
  m.dim = dim;
  m.vertices = coords;
  m.tag_names = {""};
  m.cells.resize(raw_cells.size());

  std::map<std::vector<int>, int> face_ids;
  for (std::size_t c = 0; c < raw_cells.size(); ++c) {
    auto loops = raw_cells[c];
    if (dim == 3)
      orient_cell_faces(loops);
    else
      orient_cell_edges_2d(loops, coords);

    // signed volume with the current orientation; flip everything if negative
    double vol = 0;
    if (dim == 3) {
      for (const auto& L : loops)
        for (std::size_t i = 1; i + 1 < L.size(); ++i)
          vol += coords[L[0]].dot(coords[L[i]].cross(coords[L[i + 1]])) / 6.0;
    } else {
      for (const auto& L : loops)
        vol += 0.5 * (coords[L[0]].x() * coords[L[1]].y() - coords[L[1]].x() * coords[L[0]].y());
    }
    if (std::abs(vol) <= 0) throw std::runtime_error("degenerate cell (zero volume)");
    if (vol < 0)
      for (auto& L : loops) std::reverse(L.begin(), L.end());

    Cell& K = m.cells[c];
    std::set<int> vset;
    for (auto& L : loops) {
      for (int v : L) vset.insert(v);
      std::vector<int> key = L;
      std::sort(key.begin(), key.end());
      auto it = face_ids.find(key);
      if (it == face_ids.end()) {
        Face F;
        F.verts = L;
        F.cells[0] = static_cast<int>(c);
        face_ids.emplace(std::move(key), static_cast<int>(m.faces.size()));
        K.faces.push_back(static_cast<int>(m.faces.size()));
        K.face_sign.push_back(+1);
        m.faces.push_back(std::move(F));
      } else {
        Face& F = m.faces[it->second];
        if (F.cells[1] >= 0)
          throw std::runtime_error("non-manifold face (shared by more than 2 cells)");
        // the second cell must traverse the loop in the opposite direction
        if (dim == 3) {
          const auto& S = F.verts;
          auto pos = std::find(S.begin(), S.end(), L[0]);
          std::size_t i0 = static_cast<std::size_t>(pos - S.begin());
          bool reversed = S[(i0 + S.size() - 1) % S.size()] == L[1];
          if (!reversed) throw std::runtime_error("inconsistent face orientation between cells");
        } else {
          if (!(F.verts[0] == L[1] && F.verts[1] == L[0]))
            throw std::runtime_error("inconsistent face orientation between cells");
        }
        F.cells[1] = static_cast<int>(c);
        K.faces.push_back(it->second);
        K.face_sign.push_back(-1);
      }
    }
    K.verts.assign(vset.begin(), vset.end());
  }

  for (auto& F : m.faces) compute_face_geometry(F, m.vertices, dim);

  // cell volume / centroid via simplices against the vertex isobarycenter
  for (auto& K : m.cells) {
    Vec3 p = Vec3::Zero();
    for (int v : K.verts) p += m.vertices[v];
    p /= static_cast<double>(K.verts.size());
    double vol = 0;
    Vec3 cen = Vec3::Zero();
    for (std::size_t i = 0; i < K.faces.size(); ++i) {
      const Face& F = m.faces[K.faces[i]];
      double s = K.face_sign[i];
      if (dim == 3) {
        for (const auto& T : F.tris) {
          double vt = s * (T.a - p).cross(T.b - p).dot(T.c - p) / 6.0;
          vol += vt;
          cen += vt * (p + T.a + T.b + T.c) / 4.0;
        }
      } else {
        const Vec3 &a = m.vertices[F.verts[0]], &b = m.vertices[F.verts[1]];
        Vec3 u = a - p, w = b - p;
        double vt = s * 0.5 * (u.x() * w.y() - u.y() * w.x());
        vol += vt;
        cen += vt * (p + a + b) / 3.0;
      }
    }
    if (vol <= 0) throw std::runtime_error("degenerate cell (nonpositive volume)");
    K.volume = vol;
    K.centroid = cen / vol;
    K.diam = polygon_diameter(K.verts, m.vertices);
  }

  // vertex -> cells
  m.vertex_cells.assign(m.vertices.size(), {});
  for (std::size_t c = 0; c < m.cells.size(); ++c)
    for (int v : m.cells[c].verts) m.vertex_cells[v].push_back(static_cast<int>(c));

  // unique edges (3D)
  if (dim == 3) {
    std::set<std::array<int, 2>> eset;
    for (const auto& F : m.faces)
      for (std::size_t i = 0; i < F.verts.size(); ++i) {
        int a = F.verts[i], b = F.verts[(i + 1) % F.verts.size()];
        eset.insert({std::min(a, b), std::max(a, b)});
      }
    m.edges.assign(eset.begin(), eset.end());
  }

  m.h_max = 0;
  for (const auto& K : m.cells) m.h_max = std::max(m.h_max, K.diam);
  m.bbox_min = m.bbox_max = m.vertices.empty() ? Vec3::Zero() : m.vertices[0];
  for (const auto& v : m.vertices) {
    m.bbox_min = m.bbox_min.cwiseMin(v);
    m.bbox_max = m.bbox_max.cwiseMax(v);
  }

  m.vertex_on_gamma.assign(m.vertices.size(), 0);
  m.rebuild_side_classes();
  return m;
}

void tag_fracture(PolytopalMesh& mesh, const std::vector<FracturePlane>& planes) {
  const double tol = 1e-9 * std::max((mesh.bbox_max - mesh.bbox_min).norm(), 1e-300);
  for (auto& F : mesh.faces) {
    F.on_fracture = false;
    F.component = -1;
  }
  std::vector<int> plane_of_face(mesh.faces.size(), -1);
  for (std::size_t p = 0; p < planes.size(); ++p) {
    const auto& pl = planes[p];
    Vec3 n = pl.normal.normalized();
    int hits = 0;
    for (int f = 0; f < mesh.n_faces(); ++f) {
      Face& F = mesh.faces[f];
      if (!F.interior()) continue;
      bool on = true;
      for (int v : F.verts)
        if (std::abs((mesh.vertices[v] - pl.origin).dot(n)) > tol) { on = false; break; }
      if (!on) continue;
      if (!pl.polygon.empty()) {
        if (mesh.dim == 2) {
          Vec3 t = (pl.polygon.back() - pl.polygon.front());
          double lo = 0, hi = t.norm();
          double s = (F.centroid - pl.polygon.front()).dot(t.normalized());
          if (s < lo - tol || s > hi + tol) continue;
        } else {
          // convex fence test in-plane
          bool inside = true;
          for (std::size_t i = 0; i < pl.polygon.size(); ++i) {
            Vec3 a = pl.polygon[i], b = pl.polygon[(i + 1) % pl.polygon.size()];
            Vec3 inward = n.cross(b - a);
            if ((F.centroid - a).dot(inward) < -tol) { inside = false; break; }
          }
          if (!inside) continue;
        }
      }
      if (!F.planar) throw std::runtime_error("fracture face must be planar");
      F.on_fracture = true;
      plane_of_face[f] = static_cast<int>(p);
      ++hits;
      // orient so the stored normal is n+
      if (F.normal.dot(n) < 0) {
        std::reverse(F.verts.begin(), F.verts.end());
        F.normal = -F.normal;
        for (auto& T : F.tris) { std::swap(T.a, T.b); T.normal = -T.normal; }
        std::swap(F.cells[0], F.cells[1]);
        for (int c : {F.cells[0], F.cells[1]}) {
          Cell& K = mesh.cells[c];
          for (std::size_t i = 0; i < K.faces.size(); ++i)
            if (K.faces[i] == f) K.face_sign[i] = -K.face_sign[i];
        }
      }
    }
    if (hits == 0)
      throw std::runtime_error("fracture plane not resolvable as a union of mesh faces");
  }

  mesh.fracture_faces.clear();
  for (int f = 0; f < mesh.n_faces(); ++f)
    if (mesh.faces[f].on_fracture) mesh.fracture_faces.push_back(f);

  // components: adjacency (shared (d-1)-subentity) within the same plane
  std::map<std::vector<int>, std::vector<int>> sub_to_faces;
  for (int f : mesh.fracture_faces) {
    const auto& vs = mesh.faces[f].verts;
    if (mesh.dim == 3) {
      for (std::size_t i = 0; i < vs.size(); ++i) {
        int a = vs[i], b = vs[(i + 1) % vs.size()];
        sub_to_faces[{std::min(a, b), std::max(a, b)}].push_back(f);
      }
    } else {
      for (int v : vs) sub_to_faces[{v}].push_back(f);
    }
  }
  mesh.component_normal.clear();
  mesh.n_fracture_components = 0;
  std::map<int, int> comp_of;
  for (int f : mesh.fracture_faces) {
    if (comp_of.count(f)) continue;
    int comp = mesh.n_fracture_components++;
    mesh.component_normal.push_back(mesh.faces[f].normal);
    std::queue<int> q;
    q.push(f);
    comp_of[f] = comp;
    while (!q.empty()) {
      int g = q.front();
      q.pop();
      const auto& vs = mesh.faces[g].verts;
      auto try_neighbor = [&](const std::vector<int>& key) {
        for (int h : sub_to_faces[key]) {
          if (comp_of.count(h) || plane_of_face[h] != plane_of_face[g]) continue;
          comp_of[h] = comp;
          q.push(h);
        }
      };
      if (mesh.dim == 3) {
        for (std::size_t i = 0; i < vs.size(); ++i) {
          int a = vs[i], b = vs[(i + 1) % vs.size()];
          try_neighbor({std::min(a, b), std::max(a, b)});
        }
      } else {
        for (int v : vs) try_neighbor({v});
      }
    }
  }
  for (auto [f, comp] : comp_of) mesh.faces[f].component = comp;

  mesh.vertex_on_gamma.assign(mesh.vertices.size(), 0);
  for (int f : mesh.fracture_faces)
    for (int v : mesh.faces[f].verts) mesh.vertex_on_gamma[v] = 1;

  mesh.rebuild_side_classes();
}

void PolytopalMesh::rebuild_side_classes() {
  vertex_classes.assign(vertices.size(), {});
  cell_class_lookup_.assign(vertices.size(), {});

  // union-find per vertex over M_s, merging across non-fracture faces
  std::vector<std::map<int, int>> parent(vertices.size());
  std::function<int(std::map<int, int>&, int)> find = [&](std::map<int, int>& P, int a) {
    while (P[a] != a) a = P[a] = P[P[a]];
    return a;
  };
  for (std::size_t s = 0; s < vertices.size(); ++s)
    for (int c : vertex_cells[s]) parent[s][c] = c;
  for (const auto& F : faces) {
    if (!F.interior() || F.on_fracture) continue;
    for (int s : F.verts) {
      auto& P = parent[s];
      int ra = find(P, F.cells[0]), rb = find(P, F.cells[1]);
      if (ra != rb) P[std::max(ra, rb)] = std::min(ra, rb);
    }
  }
  for (std::size_t s = 0; s < vertices.size(); ++s) {
    auto& P = parent[s];
    std::map<int, std::vector<int>> groups;
    for (int c : vertex_cells[s]) groups[find(P, c)].push_back(c);
    for (auto& [root, members] : groups) {
      SideClass sc;
      sc.vertex = static_cast<int>(s);
      sc.cells = members;  // ascending (map key = min member = first)
      sc.rep_cell = members.front();
      vertex_classes[s].push_back(std::move(sc));
    }
    // already ordered by representative cell (map iteration order)
    for (std::size_t k = 0; k < vertex_classes[s].size(); ++k)
      for (int c : vertex_classes[s][k].cells)
        cell_class_lookup_[s].push_back({c, static_cast<int>(k)});
    std::sort(cell_class_lookup_[s].begin(), cell_class_lookup_[s].end());
  }

  // side labels from incident fracture faces
  for (int f : fracture_faces) {
    const Face& F = faces[f];
    for (int s : F.verts) {
      vertex_classes[s][class_of(F.cells[0], s)].side_label = +1;
      vertex_classes[s][class_of(F.cells[1], s)].side_label = -1;
    }
  }
}

int PolytopalMesh::class_of(int cell, int vertex) const {
  const auto& L = cell_class_lookup_[vertex];
  auto it = std::lower_bound(L.begin(), L.end(), std::make_pair(cell, -1));
  if (it == L.end() || it->first != cell)
    throw std::runtime_error("cell does not contain vertex");
  return it->second;
}

Vec3 PolytopalMesh::outward_normal(int cell, int face) const {
  const Cell& K = cells[cell];
  for (std::size_t i = 0; i < K.faces.size(); ++i)
    if (K.faces[i] == face) return K.face_sign[i] * faces[face].normal;
  throw std::runtime_error("face not on cell");
}

Vec3 PolytopalMesh::face_edge_normal(int face, int i) const {
  const Face& F = faces[face];
  if (dim == 2) {
    Vec3 t = (vertices[F.verts[1]] - vertices[F.verts[0]]).normalized();
    return i == 0 ? Vec3(-t) : t;
  }
  const Vec3& a = vertices[F.verts[i]];
  const Vec3& b = vertices[F.verts[(i + 1) % F.verts.size()]];
  return (b - a).cross(F.normal).normalized();
}

int PolytopalMesh::boundary_tag_id(const std::string& name) const {
  for (std::size_t i = 0; i < tag_names.size(); ++i)
    if (tag_names[i] == name) return static_cast<int>(i);
  return -1;
}

void set_boundary_tags(PolytopalMesh& mesh,
                       const std::function<std::string(const Face&)>& namer) {
  for (auto& F : mesh.faces) {
    if (F.interior()) continue;
    std::string name = namer(F);
    if (name.empty()) { F.tag = 0; continue; }
    int id = mesh.boundary_tag_id(name);
    if (id < 0) {
      id = static_cast<int>(mesh.tag_names.size());
      mesh.tag_names.push_back(name);
    }
    F.tag = id;
  }
}

std::vector<SideClass> vertex_side_classes(const PolytopalMesh& mesh, int vertex) {
  return mesh.vertex_classes[vertex];
}

RegularityMetrics PolytopalMesh::regularity() const {
  RegularityMetrics r{1e300, 0, 1e300, 1e300};
  for (const auto& K : cells) {
    double rk = 1e300, fmin = 1e300;
    for (std::size_t i = 0; i < K.faces.size(); ++i) {
      const Face& F = faces[K.faces[i]];
      fmin = std::min(fmin, F.diam);
      if (dim == 2 || F.planar) {
        Vec3 n = K.face_sign[i] * F.normal;
        rk = std::min(rk, std::abs((F.centroid - K.centroid).dot(n)));
      } else {
        for (const auto& T : F.tris)
          rk = std::min(rk, std::abs((T.centroid() - K.centroid).dot(T.normal)));
      }
    }
    r.min_inradius_ratio = std::min(r.min_inradius_ratio, rk / K.diam);
    r.max_cell_face_ratio = std::max(r.max_cell_face_ratio, K.diam / fmin);
    r.min_cell_volume = std::min(r.min_cell_volume, K.volume);
  }
  for (const auto& F : faces) r.min_face_area = std::min(r.min_face_area, F.area);
  return r;
}

double PolytopalMesh::max_cell_closure_defect() const {
  double worst = 0;
  for (const auto& K : cells) {
    Vec3 sum = Vec3::Zero();
    for (std::size_t i = 0; i < K.faces.size(); ++i) {
      const Face& F = faces[K.faces[i]];
      double s = K.face_sign[i];
      if (dim == 2) {
        sum += s * F.area * F.normal;
      } else {
        for (const auto& T : F.tris) sum += s * T.area * T.normal;
      }
    }
    worst = std::max(worst, sum.norm() / std::pow(K.diam, dim - 1));
  }
  return worst;
}

double PolytopalMesh::max_face_closure_defect() const {
  double worst = 0;
  for (const auto& F : faces) {
    if (dim == 2 || !F.planar) continue;
    Vec3 sum = Vec3::Zero();
    for (std::size_t i = 0; i < F.verts.size(); ++i) {
      const Vec3& a = vertices[F.verts[i]];
      const Vec3& b = vertices[F.verts[(i + 1) % F.verts.size()]];
      sum += (b - a).norm() * face_edge_normal(static_cast<int>(&F - faces.data()), static_cast<int>(i));
    }
    worst = std::max(worst, sum.norm() / F.diam);
  }
  return worst;
}

}  // namespace polyfrac
