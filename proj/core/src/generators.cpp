// Built-in mesh families: Cartesian grids, Kuhn tetrahedral splits, randomly
// perturbed hexahedra with Cut/Bary repair of non-planar faces, and the graded
// quadtree-based triangular meshes used by the 2D compression study.

#include "polyfrac/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

namespace polyfrac {

namespace {

int vid3(int i, int j, int k, int ny, int nz) { return (i * (ny + 1) + j) * (nz + 1) + k; }

std::vector<Vec3> cartesian_coords(const std::array<int, 3>& n, const Box& box, int dim) {
  std::vector<Vec3> coords;
  if (dim == 3) {
    coords.reserve(static_cast<std::size_t>(n[0] + 1) * (n[1] + 1) * (n[2] + 1));
    for (int i = 0; i <= n[0]; ++i)
      for (int j = 0; j <= n[1]; ++j)
        for (int k = 0; k <= n[2]; ++k)
          coords.emplace_back(box.lo.x() + (box.hi.x() - box.lo.x()) * i / n[0],
                              box.lo.y() + (box.hi.y() - box.lo.y()) * j / n[1],
                              box.lo.z() + (box.hi.z() - box.lo.z()) * k / n[2]);
  } else {
    coords.reserve(static_cast<std::size_t>(n[0] + 1) * (n[1] + 1));
    for (int i = 0; i <= n[0]; ++i)
      for (int j = 0; j <= n[1]; ++j)
        coords.emplace_back(box.lo.x() + (box.hi.x() - box.lo.x()) * i / n[0],
                            box.lo.y() + (box.hi.y() - box.lo.y()) * j / n[1], 0.0);
  }
  return coords;
}

std::array<std::array<std::array<int, 2>, 2>, 2> corners(int i, int j, int k, int ny, int nz) {
  std::array<std::array<std::array<int, 2>, 2>, 2> c;
  for (int di = 0; di < 2; ++di)
    for (int dj = 0; dj < 2; ++dj)
      for (int dk = 0; dk < 2; ++dk) c[di][dj][dk] = vid3(i + di, j + dj, k + dk, ny, nz);
  return c;
}

std::vector<std::vector<int>> hexa_faces(const std::array<std::array<std::array<int, 2>, 2>, 2>& c) {
  return {
      {c[0][0][0], c[0][0][1], c[0][1][1], c[0][1][0]},  // -x
      {c[1][0][0], c[1][1][0], c[1][1][1], c[1][0][1]},  // +x
      {c[0][0][0], c[1][0][0], c[1][0][1], c[0][0][1]},  // -y
      {c[0][1][0], c[0][1][1], c[1][1][1], c[1][1][0]},  // +y
      {c[0][0][0], c[0][1][0], c[1][1][0], c[1][0][0]},  // -z
      {c[0][0][1], c[1][0][1], c[1][1][1], c[0][1][1]},  // +z
  };
}

PolytopalMesh build_from_hexa_topology(const std::array<int, 3>& n, std::vector<Vec3> coords,
                                       NonPlanarRepair repair) {
  std::vector<std::vector<std::vector<int>>> raw;
  raw.reserve(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
  auto split_if_needed = [&](const std::vector<int>& quad) -> std::vector<std::vector<int>> {
    const Vec3 &a = coords[quad[0]], &b = coords[quad[1]], &c = coords[quad[2]], &d = coords[quad[3]];
    Vec3 nn = (c - a).cross(d - b);
    double diam = std::max((c - a).norm(), (d - b).norm());
    double off = std::abs((b - a).dot(nn.normalized()));
    if (off <= 1e-9 * diam || repair == NonPlanarRepair::Bary) return {quad};
    // Cut: diagonal through the lexicographically smallest vertex id
    int mpos = 0;
    for (int p = 1; p < 4; ++p)
      if (quad[p] < quad[mpos]) mpos = p;
    auto at = [&](int p) { return quad[(mpos + p) % 4]; };
    return {{at(0), at(1), at(2)}, {at(0), at(2), at(3)}};
  };
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j)
      for (int k = 0; k < n[2]; ++k) {
        auto c = corners(i, j, k, n[1], n[2]);
        std::vector<std::vector<int>> cell;
        for (const auto& quad : hexa_faces(c))
          for (auto& piece : split_if_needed(quad)) cell.push_back(std::move(piece));
        raw.push_back(std::move(cell));
      }
  return build_connectivity(raw, coords, 3);
}

}  // namespace

PolytopalMesh generate_cartesian(const std::array<int, 3>& n, const Box& box) {
  const int dim = (box.hi.z() == box.lo.z()) ? 2 : 3;
  for (int a = 0; a < dim; ++a)
    if (n[a] < 1) throw std::runtime_error("generate_cartesian: n must be >= 1");
  auto coords = cartesian_coords(n, box, dim);
  if (dim == 3) return build_from_hexa_topology(n, std::move(coords), NonPlanarRepair::Bary);

  std::vector<std::vector<std::vector<int>>> raw;
  auto vid = [&](int i, int j) { return i * (n[1] + 1) + j; };
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j)
      raw.push_back({{vid(i, j), vid(i + 1, j)},
                     {vid(i + 1, j), vid(i + 1, j + 1)},
                     {vid(i + 1, j + 1), vid(i, j + 1)},
                     {vid(i, j + 1), vid(i, j)}});
  return build_connectivity(raw, coords, 2);
}

PolytopalMesh generate_tet(const std::array<int, 3>& n, const Box& box) {
  for (int a = 0; a < 3; ++a)
    if (n[a] < 1) throw std::runtime_error("generate_tet: n must be >= 1");
  auto coords = cartesian_coords(n, box, 3);
  std::vector<std::vector<std::vector<int>>> raw;
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j)
      for (int k = 0; k < n[2]; ++k) {
        auto c = corners(i, j, k, n[1], n[2]);
        for (const auto& p : perms) {
          std::array<int, 3> d{0, 0, 0};
          std::array<int, 4> t;
          t[0] = c[0][0][0];
          for (int s = 0; s < 3; ++s) {
            d[p[s]] = 1;
            t[s + 1] = c[d[0]][d[1]][d[2]];
          }
          raw.push_back({{t[0], t[1], t[2]},
                         {t[0], t[1], t[3]},
                         {t[0], t[2], t[3]},
                         {t[1], t[2], t[3]}});
        }
      }
  return build_connectivity(raw, coords, 3);
}

PolytopalMesh generate_perturbed_hexa(const std::array<int, 3>& n, const Box& box,
                                      double amplitude, NonPlanarRepair repair,
                                      std::uint64_t seed,
                                      const std::vector<FracturePlane>& fracture_planes) {
  Vec3 width((box.hi.x() - box.lo.x()) / n[0], (box.hi.y() - box.lo.y()) / n[1],
             (box.hi.z() - box.lo.z()) / n[2]);
  if (amplitude >= 0.5 * width.minCoeff())
    throw std::runtime_error("perturbation amplitude must stay below half a cell width");

  auto coords = cartesian_coords(n, box, 3);
  const double tol = 1e-9 * (box.hi - box.lo).norm();
  std::mt19937_64 rng(seed);
  auto unit = [&]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i <= n[0]; ++i)
    for (int j = 0; j <= n[1]; ++j)
      for (int k = 0; k <= n[2]; ++k) {
        // always draw, so the field at a node does not depend on the fracture layout
        Vec3 delta(amplitude * (2 * unit() - 1), amplitude * (2 * unit() - 1),
                   amplitude * (2 * unit() - 1));
        if (i == 0 || j == 0 || k == 0 || i == n[0] || j == n[1] || k == n[2]) continue;
        Vec3& x = coords[vid3(i, j, k, n[1], n[2])];
        bool frozen = false;
        for (const auto& pl : fracture_planes)
          if (std::abs((x - pl.origin).dot(pl.normal.normalized())) <= tol) frozen = true;
        if (!frozen) x += delta;
      }

  PolytopalMesh m = build_from_hexa_topology(n, std::move(coords), repair);

  // reject inverted fan simplices
  for (const auto& K : m.cells) {
    Vec3 p = Vec3::Zero();
    for (int v : K.verts) p += m.vertices[v];
    p /= static_cast<double>(K.verts.size());
    for (std::size_t i = 0; i < K.faces.size(); ++i) {
      const Face& F = m.faces[K.faces[i]];
      for (const auto& T : F.tris) {
        double vt = K.face_sign[i] * (T.a - p).cross(T.b - p).dot(T.c - p) / 6.0;
        if (vt <= 0) throw std::runtime_error("inverted cell after perturbation");
      }
    }
  }
  return m;
}

// ---- graded quadtree-forest triangulation (2D) -----------------------------

namespace {

struct QKey {
  int level, i, j;
  bool operator<(const QKey& o) const {
    return std::tie(level, i, j) < std::tie(o.level, o.i, o.j);
  }
};

}  // namespace

PolytopalMesh generate_graded_triangular(const Box& box, double frac_half_length,
                                         const GradedTriOptions& opts) {
  const double side = box.hi.x() - box.lo.x();
  if (std::abs((box.hi.y() - box.lo.y()) - side) > 1e-12 * side)
    throw std::runtime_error("graded triangular generator expects a square box");
  const int base = opts.base_cells;
  const double s0 = side / base;
  const double L_real = std::log2(s0 / opts.hmin);
  const int L = static_cast<int>(std::lround(L_real));
  if (L < 0 || std::abs(L_real - L) > 1e-9)
    throw std::runtime_error("hmin must equal (side/base_cells)/2^k for some integer k");

  const double xmid = 0.5 * (box.lo.x() + box.hi.x());
  const double ymid = 0.5 * (box.lo.y() + box.hi.y());
  const double a = frac_half_length;
  const double hfine = s0 / (1 << L);
  auto on_lattice = [&](double v) {
    double t = v / hfine;
    return std::abs(t - std::lround(t)) < 1e-9;
  };
  if (!on_lattice(xmid - a - box.lo.x()) || !on_lattice(ymid - box.lo.y()))
    throw std::runtime_error("fracture is not resolvable on the quadtree lattice");

  auto cell_dist = [&](int level, int i, int j) {
    double s = s0 / (1 << level);
    double x0 = box.lo.x() + i * s, x1 = x0 + s;
    double y0 = box.lo.y() + j * s, y1 = y0 + s;
    double dx = std::max({0.0, (xmid - a) - x1, x0 - (xmid + a)});
    double dy = std::max({0.0, ymid - y1, y0 - ymid});
    return std::hypot(dx, dy);
  };

  std::map<QKey, char> leaves;
  {
    std::vector<QKey> stack;
    for (int i = 0; i < base; ++i)
      for (int j = 0; j < base; ++j) stack.push_back({0, i, j});
    while (!stack.empty()) {
      QKey q = stack.back();
      stack.pop_back();
      double s = s0 / (1 << q.level);
      double target = std::max(opts.hmin, opts.grading * cell_dist(q.level, q.i, q.j));
      if (q.level < L && s > target * (1 + 1e-12)) {
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj)
            stack.push_back({q.level + 1, 2 * q.i + di, 2 * q.j + dj});
      } else {
        leaves[q] = 1;
      }
    }
  }

  // level of the leaf covering position (level,i,j); -1 if outside the domain
  // or subdivided below `level`
  auto covering_level = [&](int level, int i, int j) -> int {
    if (i < 0 || j < 0 || i >= base * (1 << level) || j >= base * (1 << level)) return -2;
    for (int l = level; l >= 0; --l) {
      if (leaves.count({l, i, j})) return l;
      i >>= 1;
      j >>= 1;
    }
    return -1;
  };

  // 2:1 balance: split any leaf with a neighbor two or more levels finer
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<QKey> snapshot;
    snapshot.reserve(leaves.size());
    for (const auto& kv : leaves) snapshot.push_back(kv.first);
    for (const auto& q : snapshot) {
      if (!leaves.count(q)) continue;
      bool split = false;
      const int dirs[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
      for (const auto& dd : dirs) {
        int ni = q.i + dd[0], nj = q.j + dd[1];
        int lvl = covering_level(q.level, ni, nj);
        if (lvl != -1) continue;  // same level, coarser, or outside: fine
        // neighbor is subdivided; check whether any grandchild touching our
        // side is itself subdivided (leaf at level >= q.level+2)
        for (int t = 0; t < 2 && !split; ++t) {
          int ci = 2 * ni + (dd[0] == -1 ? 1 : 0);
          int cj = 2 * nj + (dd[1] == -1 ? 1 : 0);
          if (dd[0] != 0) cj = 2 * q.j + t;
          if (dd[1] != 0) ci = 2 * q.i + t;
          if (covering_level(q.level + 1, ci, cj) == -1) split = true;
        }
        if (split) break;
      }
      if (split) {
        leaves.erase(q);
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj)
            leaves[{q.level + 1, 2 * q.i + di, 2 * q.j + dj}] = 1;
        changed = true;
      }
    }
  }

  // integer lattice at half the finest cell size, so cell centers are exact
  const long long U = 2LL << L;  // level-0 cell side in lattice units
  auto cell_units = [&](int level) { return U >> level; };

  // collect polygons (with hanging midpoints) in lattice coordinates
  std::vector<std::vector<std::array<long long, 2>>> polys;
  std::vector<QKey> poly_cell;
  for (const auto& kv : leaves) {
    const QKey& q = kv.first;
    long long u = cell_units(q.level);
    long long x0 = q.i * u, y0 = q.j * u;
    auto finer = [&](int di, int dj) {
      return covering_level(q.level, q.i + di, q.j + dj) == -1;
    };
    std::vector<std::array<long long, 2>> poly;
    poly.push_back({x0, y0});
    if (finer(0, -1)) poly.push_back({x0 + u / 2, y0});
    poly.push_back({x0 + u, y0});
    if (finer(1, 0)) poly.push_back({x0 + u, y0 + u / 2});
    poly.push_back({x0 + u, y0 + u});
    if (finer(0, 1)) poly.push_back({x0 + u / 2, y0 + u});
    poly.push_back({x0, y0 + u});
    if (finer(-1, 0)) poly.push_back({x0, y0 + u / 2});
    polys.push_back(std::move(poly));
    poly_cell.push_back(q);
  }

  // vertex ids ordered by lattice position (fan centers included up front)
  std::set<std::pair<long long, long long>> pts;
  for (std::size_t p = 0; p < polys.size(); ++p) {
    for (const auto& v : polys[p]) pts.insert({v[0], v[1]});
    if (polys[p].size() > 4) {
      long long u = cell_units(poly_cell[p].level);
      pts.insert({poly_cell[p].i * u + u / 2, poly_cell[p].j * u + u / 2});
    }
  }
  std::map<std::pair<long long, long long>, int> vid;
  std::vector<Vec3> coords;
  coords.reserve(pts.size());
  for (const auto& p : pts) {
    vid[p] = static_cast<int>(coords.size());
    coords.emplace_back(box.lo.x() + p.first * hfine / 2.0,
                        box.lo.y() + p.second * hfine / 2.0, 0.0);
  }

  std::vector<std::vector<std::vector<int>>> raw;
  auto add_tri = [&](int v0, int v1, int v2) {
    raw.push_back({{v0, v1}, {v1, v2}, {v2, v0}});
  };
  for (std::size_t p = 0; p < polys.size(); ++p) {
    std::vector<int> ids;
    ids.reserve(polys[p].size());
    for (const auto& v : polys[p]) ids.push_back(vid.at({v[0], v[1]}));
    if (ids.size() == 4) {
      add_tri(ids[0], ids[1], ids[2]);
      add_tri(ids[0], ids[2], ids[3]);
    } else {
      long long u = cell_units(poly_cell[p].level);
      int c = vid.at({poly_cell[p].i * u + u / 2, poly_cell[p].j * u + u / 2});
      for (std::size_t i = 0; i < ids.size(); ++i)
        add_tri(c, ids[i], ids[(i + 1) % ids.size()]);
    }
  }

  return build_connectivity(raw, coords, 2);
}

}  // namespace polyfrac
