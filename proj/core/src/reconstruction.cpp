#include "polyfrac/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace polyfrac {

Eigen::VectorXd least_norm_nonneg_weights(const Eigen::MatrixXd& P, const Eigen::VectorXd& t) {
  const int n = static_cast<int>(P.cols());
  const int m = static_cast<int>(P.rows());
  std::vector<char> active(n, 0);

  // min 1/2 |w|^2 s.t. P w = t, w_A = 0; COD handles the rank deficiency of
  // in-plane coordinate rows and returns the minimum-norm solution
  auto solve_current = [&](Eigen::VectorXd& w, Eigen::VectorXd& mult) {
    std::vector<int> inact;
    for (int i = 0; i < n; ++i)
      if (!active[i]) inact.push_back(i);
    Eigen::MatrixXd PI(m, inact.size());
    for (std::size_t c = 0; c < inact.size(); ++c) PI.col(c) = P.col(inact[c]);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(PI);
    Eigen::VectorXd wi = cod.solve(t);
    if ((PI * wi - t).norm() > 1e-8 * (1.0 + t.norm()))
      throw std::runtime_error("barycentric weight system is infeasible");
    w = Eigen::VectorXd::Zero(n);
    for (std::size_t c = 0; c < inact.size(); ++c) w[inact[c]] = wi[c];
    mult = PI.transpose().colPivHouseholderQr().solve(wi);
  };

  Eigen::VectorXd w, mult;
  for (int iter = 0; iter < 4 * n + 8; ++iter) {
    solve_current(w, mult);
    // most negative inactive entry becomes active
    int worst = -1;
    double wmin = -1e-12;
    for (int i = 0; i < n; ++i)
      if (!active[i] && w[i] < wmin) { wmin = w[i]; worst = i; }
    if (worst >= 0) { active[worst] = 1; continue; }
    // bound multipliers: an active entry wants to leave if P_i . mu > 0
    int release = -1;
    double best = 1e-10;
    for (int i = 0; i < n; ++i)
      if (active[i]) {
        double gi = P.col(i).dot(mult);
        if (gi > best) { best = gi; release = i; }
      }
    if (release < 0) return w.cwiseMax(0.0);
    active[release] = 0;
  }
  throw std::runtime_error("active-set weight iteration did not converge");
}

namespace {

// centered coordinates: rows are 1 and (x - target)/scale, target (1, 0...)
Eigen::MatrixXd barycentric_system(const std::vector<int>& verts, const std::vector<Vec3>& x,
                                   int dim, const Vec3& target, double scale,
                                   Eigen::VectorXd& t) {
  const int n = static_cast<int>(verts.size());
  Eigen::MatrixXd P(dim + 1, n);
  t = Eigen::VectorXd::Zero(dim + 1);
  for (int i = 0; i < n; ++i) {
    P(0, i) = 1.0;
    for (int d = 0; d < dim; ++d) P(1 + d, i) = (x[verts[i]][d] - target[d]) / scale;
  }
  t[0] = 1.0;
  return P;
}

}  // namespace

FaceWeights compute_face_weights(const PolytopalMesh& mesh, int face, WeightRule rule) {
  const Face& F = mesh.faces[face];
  const int n = static_cast<int>(F.verts.size());
  FaceWeights out;
  if (mesh.dim == 2) {
    out.w = Eigen::VectorXd::Constant(2, 0.5);
    return out;
  }
  if (rule == WeightRule::FanCentroid) {
    out.w = Eigen::VectorXd::Zero(n);
    double total = 0;
    for (int i = 0; i < n; ++i) {
      const FaceTri& T = F.tris[i];
      out.w[i] += T.area / 3.0;
      out.w[(i + 1) % n] += T.area / 3.0;
      total += T.area;
    }
    for (int i = 0; i < n; ++i) out.w[i] += total / (3.0 * n);
    out.w /= total;
    return out;
  }
  // in-plane coordinates keep the equality system full rank
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(F.normal[i]) < std::abs(F.normal[k])) k = i;
  Vec3 e = Vec3::Zero();
  e[k] = 1.0;
  Vec3 t1 = F.normal.cross(e).normalized();
  Vec3 t2 = F.normal.cross(t1);
  Eigen::MatrixXd P(3, n);
  for (int i = 0; i < n; ++i) {
    Vec3 dx = mesh.vertices[F.verts[i]] - F.centroid;
    P(0, i) = 1.0;
    P(1, i) = dx.dot(t1) / F.diam;
    P(2, i) = dx.dot(t2) / F.diam;
  }
  Eigen::VectorXd t = Eigen::VectorXd::Zero(3);
  t[0] = 1.0;
  out.w = least_norm_nonneg_weights(P, t);
  return out;
}

CellWeights compute_cell_weights(const PolytopalMesh& mesh, int cell, WeightRule rule) {
  const Cell& K = mesh.cells[cell];
  CellWeights out;
  if (rule == WeightRule::FanCentroid) {
    // simplex fan against the vertex isobarycenter; each simplex spreads its
    // volume-weighted centroid onto its vertices
    const int n = static_cast<int>(K.verts.size());
    std::vector<int> pos(mesh.vertices.size(), -1);
    for (int i = 0; i < n; ++i) pos[K.verts[i]] = i;
    out.w = Eigen::VectorXd::Zero(n);
    Vec3 p = Vec3::Zero();
    for (int v : K.verts) p += mesh.vertices[v];
    p /= n;
    double total = 0;
    for (std::size_t i = 0; i < K.faces.size(); ++i) {
      const Face& F = mesh.faces[K.faces[i]];
      if (mesh.dim == 3) {
        const int nvF = static_cast<int>(F.verts.size());
        for (int e = 0; e < nvF; ++e) {
          const FaceTri& T = F.tris[e];
          double vol = std::abs((T.a - p).cross(T.b - p).dot(T.c - p)) / 6.0;
          total += vol;
          out.w[pos[F.verts[e]]] += vol / 4.0;
          out.w[pos[F.verts[(e + 1) % nvF]]] += vol / 4.0;
          for (int s = 0; s < nvF; ++s) out.w[pos[F.verts[s]]] += vol / (4.0 * nvF);
          for (int j = 0; j < n; ++j) out.w[j] += vol / (4.0 * n);
        }
      } else {
        Vec3 a = mesh.vertices[F.verts[0]], b = mesh.vertices[F.verts[1]];
        Vec3 u = a - p, v = b - p;
        double vol = 0.5 * std::abs(u.x() * v.y() - u.y() * v.x());
        total += vol;
        out.w[pos[F.verts[0]]] += vol / 3.0;
        out.w[pos[F.verts[1]]] += vol / 3.0;
        for (int j = 0; j < n; ++j) out.w[j] += vol / (3.0 * n);
      }
    }
    out.w /= total;
    return out;
  }
  Eigen::VectorXd t;
  Eigen::MatrixXd P = barycentric_system(K.verts, mesh.vertices, mesh.dim, K.centroid, K.diam, t);
  out.w = least_norm_nonneg_weights(P, t);
  return out;
}

int OperatorCache::local_fracture_index(int face) const {
  const auto& ff = mesh->fracture_faces;
  auto it = std::lower_bound(ff.begin(), ff.end(), face);
  if (it == ff.end() || *it != face) return -1;
  return static_cast<int>(it - ff.begin());
}

namespace {

// rows of the cell gradient contributed by one face average term
void add_face_average_gradient(Eigen::MatrixXd& grad, int d, double coeff, const Vec3& n,
                               const Eigen::VectorXd& w, const std::vector<int>& vert_local) {
  for (std::size_t s = 0; s < vert_local.size(); ++s)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        grad(i * d + j, d * vert_local[s] + i) += coeff * w[s] * n[j];
}

}  // namespace

OperatorCache build_operator_cache(const PolytopalMesh& mesh, const DisplacementDofMap& dofs,
                                   WeightRule rule) {
  OperatorCache cache;
  cache.mesh = &mesh;
  cache.dofs = &dofs;
  cache.rule = rule;
  const int d = mesh.dim;

  cache.face_weights.resize(mesh.faces.size());
  for (int f = 0; f < mesh.n_faces(); ++f)
    cache.face_weights[f] = compute_face_weights(mesh, f, rule).w;

  cache.cells.resize(mesh.cells.size());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Cell& K = mesh.cells[c];
    CellOps& ops = cache.cells[c];
    ops.cell = c;
    ops.n_vert = static_cast<int>(K.verts.size());
    ops.centroid = K.centroid;
    ops.h = K.diam;
    ops.volume = K.volume;

    std::vector<int> pos(mesh.vertices.size(), -1);
    for (int i = 0; i < ops.n_vert; ++i) pos[K.verts[i]] = i;

    // bubble faces: fracture faces of K seen from the plus side
    for (int f : K.faces)
      if (mesh.faces[f].on_fracture && mesh.faces[f].cells[0] == c) ops.bubble_faces.push_back(f);
    std::sort(ops.bubble_faces.begin(), ops.bubble_faces.end());
    ops.n_bub = static_cast<int>(ops.bubble_faces.size());
    ops.n_loc = d * (ops.n_vert + ops.n_bub);

    ops.glob.resize(ops.n_loc);
    for (int i = 0; i < ops.n_vert; ++i) {
      const NodalBlock& blk = dofs.block_of_cell(mesh, c, K.verts[i]);
      for (int k = 0; k < d; ++k) ops.glob[d * i + k] = blk.comp[k];
    }
    for (int b = 0; b < ops.n_bub; ++b) {
      int lf = cache.local_fracture_index(ops.bubble_faces[b]);
      for (int k = 0; k < d; ++k)
        ops.glob[d * (ops.n_vert + b) + k] = dofs.bubble_start[lf] + k;
    }

    ops.cell_w = compute_cell_weights(mesh, c, rule).w;

    // gradient map
    ops.grad = Eigen::MatrixXd::Zero(d * d, ops.n_loc);
    for (std::size_t fi = 0; fi < K.faces.size(); ++fi) {
      const Face& F = mesh.faces[K.faces[fi]];
      double sgn = K.face_sign[fi];
      std::vector<int> vloc(F.verts.size());
      for (std::size_t s = 0; s < F.verts.size(); ++s) vloc[s] = pos[F.verts[s]];
      if (F.planar || d == 2) {
        Vec3 n = sgn * F.normal;
        add_face_average_gradient(ops.grad, d, F.area / K.volume, n, cache.face_weights[K.faces[fi]],
                                  vloc);
      } else {
        // triangle-fan variant: sum over fan triangles T_e of
        // (|T_e|/3) (v_s1 + v_s2 + v_iso) x n_{K T_e}
        const int nv = static_cast<int>(F.verts.size());
        for (int e = 0; e < nv; ++e) {
          const FaceTri& T = F.tris[e];
          Vec3 n = sgn * T.normal;
          double coeff = T.area / (3.0 * K.volume);
          int s1 = vloc[e], s2 = vloc[(e + 1) % nv];
          for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
              ops.grad(i * d + j, d * s1 + i) += coeff * n[j];
              ops.grad(i * d + j, d * s2 + i) += coeff * n[j];
              for (int s = 0; s < nv; ++s)
                ops.grad(i * d + j, d * vloc[s] + i) += coeff * n[j] / nv;
            }
        }
      }
    }
    for (int b = 0; b < ops.n_bub; ++b) {
      const Face& F = mesh.faces[ops.bubble_faces[b]];
      const Vec3& n = F.normal;  // = n+, outward of K by construction
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          ops.grad(i * d + j, d * (ops.n_vert + b) + i) += F.area / K.volume * n[j];
    }

    // stabilisation: h^{d-2} ( sum_s |v_s - Pi^K v(x_s)|^2 + sum_bub |v_b|^2 )
    double scale = std::pow(K.diam, d - 2);
    Eigen::MatrixXd R(d * ops.n_vert, ops.n_loc);
    R.setZero();
    for (int s = 0; s < ops.n_vert; ++s) {
      Vec3 dx = mesh.vertices[K.verts[s]] - K.centroid;
      for (int i = 0; i < d; ++i) {
        R(d * s + i, d * s + i) += 1.0;
        // -(grad v (x_s - xK))_i
        for (int j = 0; j < d; ++j) R.row(d * s + i) -= dx[j] * ops.grad.row(i * d + j);
        // -(mean)_i
        for (int sv = 0; sv < ops.n_vert; ++sv) R(d * s + i, d * sv + i) -= ops.cell_w[sv];
      }
    }
    ops.stab = scale * (R.transpose() * R);
    for (int b = 0; b < ops.n_bub; ++b)
      for (int k = 0; k < d; ++k) {
        int l = d * (ops.n_vert + b) + k;
        ops.stab(l, l) += scale;
      }
  }

  // fracture face bundles
  cache.frac.resize(mesh.fracture_faces.size());
  for (std::size_t lf = 0; lf < mesh.fracture_faces.size(); ++lf) {
    int f = mesh.fracture_faces[lf];
    const Face& F = mesh.faces[f];
    FracFaceOps& ff = cache.frac[lf];
    ff.face = f;
    ff.area = F.area;
    ff.h = F.diam;
    ff.normal = F.normal;
    // deterministic tangent frame
    int k = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(ff.normal[i]) < std::abs(ff.normal[k])) k = i;
    Vec3 e = Vec3::Zero();
    e[k] = 1.0;
    ff.t1 = ff.normal.cross(e).normalized();
    ff.t2 = mesh.dim == 3 ? Vec3(ff.normal.cross(ff.t1)) : Vec3::Zero();
    if (mesh.dim == 2) ff.t1 = Vec3(-ff.normal.y(), ff.normal.x(), 0.0);
    ff.w = cache.face_weights[f];
    ff.plus_blocks.reserve(F.verts.size());
    ff.minus_blocks.reserve(F.verts.size());
    for (int s : F.verts) {
      ff.plus_blocks.push_back(dofs.block_of_cell(mesh, F.cells[0], s));
      ff.minus_blocks.push_back(dofs.block_of_cell(mesh, F.cells[1], s));
    }
    ff.bubble_start = dofs.bubble_start[lf];
  }
  return cache;
}

Eigen::VectorXd local_values(const OperatorCache& cache, int cell, const DisplacementVector& v) {
  const CellOps& ops = cache.cells[cell];
  Eigen::VectorXd loc(ops.n_loc);
  for (int i = 0; i < ops.n_loc; ++i) loc[i] = v.at(ops.glob[i]);
  return loc;
}

Mat3 face_gradient(const OperatorCache& cache, int cell, int face, const DisplacementVector& v) {
  const PolytopalMesh& m = *cache.mesh;
  const Face& F = m.faces[face];
  const int d = m.dim;
  Mat3 G = Mat3::Zero();
  auto nodal = [&](int s) {
    const NodalBlock& blk = cache.dofs->block_of_cell(m, cell, F.verts[s]);
    Vec3 val = Vec3::Zero();
    for (int c = 0; c < d; ++c) val[c] = v.at(blk.comp[c]);
    return val;
  };
  if (d == 2) {
    Vec3 diff = nodal(1) - nodal(0);
    Vec3 t = (m.vertices[F.verts[1]] - m.vertices[F.verts[0]]) / F.area;
    G = diff * t.transpose() / F.area;
    return G;
  }
  const int nv = static_cast<int>(F.verts.size());
  for (int e = 0; e < nv; ++e) {
    Vec3 a = m.vertices[F.verts[e]], b = m.vertices[F.verts[(e + 1) % nv]];
    Vec3 ne = m.face_edge_normal(face, e);
    G += (b - a).norm() * 0.5 * (nodal(e) + nodal((e + 1) % nv)) * ne.transpose();
  }
  return G / F.area;
}

Vec3 face_average(const OperatorCache& cache, int cell, int face, const DisplacementVector& v) {
  const PolytopalMesh& m = *cache.mesh;
  const Face& F = m.faces[face];
  const Eigen::VectorXd& w = cache.face_weights[face];
  Vec3 avg = Vec3::Zero();
  for (std::size_t s = 0; s < F.verts.size(); ++s) {
    const NodalBlock& blk = cache.dofs->block_of_cell(m, cell, F.verts[s]);
    for (int c = 0; c < m.dim; ++c) avg[c] += w[s] * v.at(blk.comp[c]);
  }
  return avg;
}

Vec3 face_trace(const OperatorCache& cache, int cell, int face, const DisplacementVector& v,
                const Vec3& x) {
  const Face& F = cache.mesh->faces[face];
  return face_gradient(cache, cell, face, v) * (x - F.centroid) +
         face_average(cache, cell, face, v);
}

Vec3 face_jump(const OperatorCache& cache, int face, const DisplacementVector& v) {
  int lf = cache.local_fracture_index(face);
  if (lf < 0) throw std::runtime_error("face_jump: face is not on the fracture");
  const FracFaceOps& ff = cache.frac[lf];
  const int d = cache.mesh->dim;
  Vec3 jump = Vec3::Zero();
  for (std::size_t s = 0; s < ff.plus_blocks.size(); ++s)
    for (int c = 0; c < d; ++c)
      jump[c] += ff.w[s] * (v.at(ff.plus_blocks[s].comp[c]) - v.at(ff.minus_blocks[s].comp[c]));
  for (int c = 0; c < d; ++c) jump[c] += v.free[ff.bubble_start + c];
  return jump;
}

Mat3 cell_gradient(const OperatorCache& cache, int cell, const DisplacementVector& v) {
  const CellOps& ops = cache.cells[cell];
  const int d = cache.mesh->dim;
  Eigen::VectorXd g = ops.grad * local_values(cache, cell, v);
  Mat3 G = Mat3::Zero();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = g[i * d + j];
  return G;
}

Vec3 cell_mean(const OperatorCache& cache, int cell, const DisplacementVector& v) {
  const CellOps& ops = cache.cells[cell];
  const PolytopalMesh& m = *cache.mesh;
  const Cell& K = m.cells[cell];
  Vec3 mean = Vec3::Zero();
  for (int s = 0; s < ops.n_vert; ++s) {
    const NodalBlock& blk = cache.dofs->block_of_cell(m, cell, K.verts[s]);
    for (int c = 0; c < m.dim; ++c) mean[c] += ops.cell_w[s] * v.at(blk.comp[c]);
  }
  return mean;
}

Vec3 cell_reconstruction(const OperatorCache& cache, int cell, const DisplacementVector& v,
                         const Vec3& x) {
  return cell_gradient(cache, cell, v) * (x - cache.cells[cell].centroid) +
         cell_mean(cache, cell, v);
}

double stabilisation(const OperatorCache& cache, int cell, const DisplacementVector& u,
                     const DisplacementVector& v) {
  const CellOps& ops = cache.cells[cell];
  return local_values(cache, cell, u).dot(ops.stab * local_values(cache, cell, v));
}

double h1_norm(const OperatorCache& cache, const DisplacementVector& v) {
  double sq = 0;
  for (int c = 0; c < cache.mesh->n_cells(); ++c) {
    const CellOps& ops = cache.cells[c];
    Eigen::VectorXd loc = local_values(cache, c, v);
    Eigen::VectorXd g = ops.grad * loc;
    sq += ops.volume * g.squaredNorm() + loc.dot(ops.stab * loc);
  }
  return std::sqrt(sq);
}

double multiplier_half_norm(const PolytopalMesh& mesh, const MultiplierVector& mu) {
  double sq = 0;
  for (std::size_t lf = 0; lf < mesh.fracture_faces.size(); ++lf) {
    const Face& F = mesh.faces[mesh.fracture_faces[lf]];
    sq += F.area / F.diam * mu.at(static_cast<int>(lf)).squaredNorm();
  }
  return std::sqrt(sq);
}

double multiplier_dual_norm(const PolytopalMesh& mesh, const MultiplierVector& mu) {
  double sq = 0;
  for (std::size_t lf = 0; lf < mesh.fracture_faces.size(); ++lf) {
    const Face& F = mesh.faces[mesh.fracture_faces[lf]];
    sq += F.area * F.diam * mu.at(static_cast<int>(lf)).squaredNorm();
  }
  return std::sqrt(sq);
}

}  // namespace polyfrac
