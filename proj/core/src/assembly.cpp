#include "polyfrac/assembly.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "polyfrac/quadrature.hpp"

namespace polyfrac {

SpMat assemble_stiffness(const OperatorCache& cache, const std::vector<Material>& mat,
                         Eigen::VectorXd& elim_rhs) {
  const PolytopalMesh& m = *cache.mesh;
  const DisplacementDofMap& dofs = *cache.dofs;
  const int d = m.dim;
  elim_rhs = Eigen::VectorXd::Zero(dofs.n_free);

  // elasticity form on vec(grad): 2 mu sym + lambda vec(I) vec(I)^T
  Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(d * d, d * d);
  Eigen::VectorXd vecI = Eigen::VectorXd::Zero(d * d);
  for (int i = 0; i < d; ++i) {
    vecI[i * d + i] = 1.0;
    for (int j = 0; j < d; ++j) {
      sym(i * d + j, i * d + j) += 0.5;
      sym(i * d + j, j * d + i) += 0.5;
    }
  }

  std::vector<Eigen::Triplet<double>> trips;
  for (int c = 0; c < m.n_cells(); ++c) {
    const CellOps& ops = cache.cells[c];
    const Material& mk = mat[c];
    Eigen::MatrixXd C = 2.0 * mk.mu * sym + mk.lambda * (vecI * vecI.transpose());
    Eigen::MatrixXd Ak = ops.volume * (ops.grad.transpose() * C * ops.grad) +
                         (2.0 * mk.mu + mk.lambda) * ops.stab;
    for (int i = 0; i < ops.n_loc; ++i) {
      int gi = ops.glob[i];
      if (!dof_is_free(gi)) continue;
      for (int j = 0; j < ops.n_loc; ++j) {
        int gj = ops.glob[j];
        if (dof_is_free(gj))
          trips.emplace_back(gi, gj, Ak(i, j));
        else
          elim_rhs[gi] -= Ak(i, j) * dofs.presc_values[dof_presc_slot(gj)];
      }
    }
  }
  SpMat A(dofs.n_free, dofs.n_free);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

SpMat assemble_coupling(const OperatorCache& cache, Eigen::VectorXd& jump_presc,
                        std::vector<FaceJumpMap>* maps) {
  const PolytopalMesh& m = *cache.mesh;
  const DisplacementDofMap& dofs = *cache.dofs;
  const int d = m.dim;
  const int nfrac = static_cast<int>(m.fracture_faces.size());
  jump_presc = Eigen::VectorXd::Zero(d * nfrac);
  if (maps) maps->assign(nfrac, {});

  std::vector<Eigen::Triplet<double>> trips;
  for (int lf = 0; lf < nfrac; ++lf) {
    const FracFaceOps& ff = cache.frac[lf];
    // gather coefficient per free column
    std::map<int, Eigen::VectorXd> cols;
    auto add = [&](int sidx, int comp, double w) {
      if (dof_is_free(sidx)) {
        auto it = cols.find(sidx);
        if (it == cols.end()) it = cols.emplace(sidx, Eigen::VectorXd::Zero(d)).first;
        it->second[comp] += w;
      } else {
        jump_presc[d * lf + comp] += w * dofs.presc_values[dof_presc_slot(sidx)];
      }
    };
    for (std::size_t s = 0; s < ff.plus_blocks.size(); ++s)
      for (int c = 0; c < d; ++c) {
        add(ff.plus_blocks[s].comp[c], c, ff.w[s]);
        add(ff.minus_blocks[s].comp[c], c, -ff.w[s]);
      }
    for (int c = 0; c < d; ++c) add(ff.bubble_start + c, c, 1.0);

    FaceJumpMap jm;
    jm.cols.reserve(cols.size());
    jm.M.resize(d, static_cast<long>(cols.size()));
    int k = 0;
    for (const auto& [col, coef] : cols) {
      jm.cols.push_back(col);
      jm.M.col(k++) = coef.head(d);
      for (int c = 0; c < d; ++c)
        if (coef[c] != 0.0) trips.emplace_back(d * lf + c, col, ff.area * coef[c]);
    }
    if (maps) (*maps)[lf] = std::move(jm);
  }
  SpMat B(d * nfrac, dofs.n_free);
  B.setFromTriplets(trips.begin(), trips.end());
  return B;
}

Eigen::VectorXd assemble_load(const OperatorCache& cache, const VectorField& f,
                              const std::vector<Traction>& tractions) {
  const PolytopalMesh& m = *cache.mesh;
  const DisplacementDofMap& dofs = *cache.dofs;
  const int d = m.dim;
  Eigen::VectorXd load = Eigen::VectorXd::Zero(dofs.n_free);

  if (f) {
    for (int c = 0; c < m.n_cells(); ++c) {
      const Cell& K = m.cells[c];
      Vec3 fint = integrate_cell<Vec3>(m, c, [&](const Vec3& x) { return f(x); });
      if (!fint.allFinite()) throw std::runtime_error("quadrature failure on degenerate simplex");
      const CellOps& ops = cache.cells[c];
      for (int s = 0; s < ops.n_vert; ++s) {
        const NodalBlock& blk = dofs.block_of_cell(m, c, K.verts[s]);
        for (int comp = 0; comp < d; ++comp)
          if (dof_is_free(blk.comp[comp])) load[blk.comp[comp]] += ops.cell_w[s] * fint[comp];
      }
    }
  }

  for (const auto& tr : tractions) {
    for (int fidx = 0; fidx < m.n_faces(); ++fidx) {
      const Face& F = m.faces[fidx];
      if (F.interior() || F.tag != tr.tag) continue;
      if (!F.planar) throw std::runtime_error("traction faces must be planar");
      int K = F.cells[0];
      // int_sigma t . (grad_F v (x - xbar) + mean_F v): mean part pairs the
      // integral of t, gradient part pairs the first moment of t
      Vec3 nrm = F.normal;  // boundary faces store the outward normal of their only cell
      Vec3 t_int = integrate_face<Vec3>(m, fidx, [&](const Vec3& x) { return tr.value(x, nrm); });
      Mat3 t_mom = integrate_face<Mat3>(m, fidx, [&](const Vec3& x) {
        return Mat3((tr.value(x, nrm)) * (x - F.centroid).transpose());
      });
      const Eigen::VectorXd& w = cache.face_weights[fidx];
      const int nv = static_cast<int>(F.verts.size());
      auto add_nodal = [&](int vert, int comp, double val) {
        const NodalBlock& blk = dofs.block_of_cell(m, K, vert);
        if (dof_is_free(blk.comp[comp])) load[blk.comp[comp]] += val;
      };
      for (int s = 0; s < nv; ++s)
        for (int comp = 0; comp < d; ++comp) add_nodal(F.verts[s], comp, w[s] * t_int[comp]);
      if (d == 2) {
        Vec3 tau = (m.vertices[F.verts[1]] - m.vertices[F.verts[0]]) / F.area;
        Vec3 Mtau = t_mom * tau / F.area;
        for (int comp = 0; comp < d; ++comp) {
          add_nodal(F.verts[0], comp, -Mtau[comp]);
          add_nodal(F.verts[1], comp, Mtau[comp]);
        }
      } else {
        for (int e = 0; e < nv; ++e) {
          Vec3 ne = m.face_edge_normal(fidx, e);
          double len = (m.vertices[F.verts[(e + 1) % nv]] - m.vertices[F.verts[e]]).norm();
          Vec3 Mn = t_mom * ne * (len / (2.0 * F.area));
          for (int comp = 0; comp < d; ++comp) {
            add_nodal(F.verts[e], comp, Mn[comp]);
            add_nodal(F.verts[(e + 1) % nv], comp, Mn[comp]);
          }
        }
      }
    }
  }
  return load;
}

Vec3 SaddleSystem::jump(int lf, const Eigen::VectorXd& u_free) const {
  const FaceJumpMap& jm = jump_maps[lf];
  const int d = mesh->dim;
  Vec3 j = Vec3::Zero();
  for (std::size_t k = 0; k < jm.cols.size(); ++k)
    for (int c = 0; c < d; ++c) j[c] += jm.M(c, k) * u_free[jm.cols[k]];
  for (int c = 0; c < d; ++c) j[c] += jump_presc[d * lf + c];
  return j;
}

SaddleSystem build_saddle_system(const OperatorCache& cache, const SystemOptions& opts) {
  const PolytopalMesh& m = *cache.mesh;
  SaddleSystem sys;
  sys.mesh = &m;
  sys.cache = &cache;

  sys.mat.resize(m.n_cells());
  for (int c = 0; c < m.n_cells(); ++c)
    sys.mat[c] = opts.material ? opts.material(m.cells[c].centroid) : Material{};

  Eigen::VectorXd elim;
  sys.A = assemble_stiffness(cache, sys.mat, elim);
  sys.B = assemble_coupling(cache, sys.jump_presc, &sys.jump_maps);
  sys.rhs = assemble_load(cache, opts.body_force, opts.tractions) + elim;

  const int nfrac = static_cast<int>(m.fracture_faces.size());
  sys.g = Eigen::VectorXd::Zero(nfrac);
  sys.beta_n = Eigen::VectorXd::Zero(nfrac);
  sys.beta_t = Eigen::VectorXd::Zero(nfrac);
  for (int lf = 0; lf < nfrac; ++lf) {
    const Face& F = m.faces[m.fracture_faces[lf]];
    if (opts.tresca_g) sys.g[lf] = opts.tresca_g(F.centroid);
    if (sys.g[lf] < 0) throw std::runtime_error("Tresca threshold must be nonnegative");
    if (opts.beta > 0) {
      sys.beta_n[lf] = sys.beta_t[lf] = opts.beta;
    } else {
      const Material& mk = sys.mat[F.cells[0]];
      sys.beta_n[lf] = sys.beta_t[lf] = (2.0 * mk.mu + mk.lambda) / F.diam;
    }
  }
  return sys;
}

}  // namespace polyfrac
