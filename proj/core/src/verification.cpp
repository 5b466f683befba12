#include "polyfrac/verification.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "polyfrac/quadrature.hpp"

namespace polyfrac {

SelfCheckReport self_check(const AnalyticalSolution& sol, const Box& box, int n_points,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto unit = [&]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const double diam = (box.hi - box.lo).norm();
  const double delta = 1e-4 * diam;
  SelfCheckReport rep;
  int accepted = 0;
  while (accepted < n_points) {
    Vec3 x(box.lo.x() + unit() * (box.hi.x() - box.lo.x()),
           box.lo.y() + unit() * (box.hi.y() - box.lo.y()),
           box.lo.z() + unit() * (box.hi.z() - box.lo.z()));
    // keep clear of the fracture plane and region kinks so one-sided stencils
    // stay one-sided; the reference point is the sample itself
    if (std::abs(x.x()) < 4 * delta || std::abs(x.y()) < 4 * delta ||
        std::abs(x.z()) < 4 * delta)
      continue;
    ++accepted;
    Mat3 fd_grad = Mat3::Zero();
    Vec3 div_sigma = Vec3::Zero();
    int dim = box.hi.z() == box.lo.z() ? 2 : 3;
    for (int j = 0; j < dim; ++j) {
      Vec3 e = Vec3::Zero();
      e[j] = delta;
      fd_grad.col(j) = (sol.u(x + e, x) - sol.u(x - e, x)) / (2 * delta);
      div_sigma += (sol.stress(x + e, x).col(j) - sol.stress(x - e, x).col(j)) / (2 * delta);
    }
    Mat3 g = sol.grad_u(x, x);
    double gs = std::max(1.0, g.norm());
    rep.grad_defect = std::max(rep.grad_defect, (fd_grad - g).norm() / gs);
    Vec3 f = sol.body_force(x);
    double fs = std::max(1.0, f.norm());
    rep.force_defect = std::max(rep.force_defect, (div_sigma + f).norm() / fs);
  }
  return rep;
}

DisplacementVector interpolate_displacement(const OperatorCache& cache,
                                            const SidedVectorField& u) {
  const PolytopalMesh& m = *cache.mesh;
  const DisplacementDofMap& dofs = *cache.dofs;
  DisplacementVector v = make_displacement(dofs);
  const int d = m.dim;
  for (std::size_t s = 0; s < m.vertices.size(); ++s)
    for (std::size_t k = 0; k < m.vertex_classes[s].size(); ++k) {
      Vec3 ref = m.cells[m.vertex_classes[s][k].rep_cell].centroid;
      Vec3 val = u(m.vertices[s], ref);
      for (int c = 0; c < d; ++c) {
        int sidx = dofs.blocks[s][k].comp[c];
        if (dof_is_free(sidx))
          v.free[sidx] = val[c];
        else
          v.presc[dof_presc_slot(sidx)] = val[c];
      }
    }
  // bubble = face mean of the plus-side trace minus the nodal face average
  for (std::size_t lf = 0; lf < m.fracture_faces.size(); ++lf) {
    int f = m.fracture_faces[lf];
    const Face& F = m.faces[f];
    Vec3 ref = m.cells[F.cells[0]].centroid;
    Vec3 mean = integrate_face<Vec3>(m, f, [&](const Vec3& x) { return u(x, ref); }) / F.area;
    Vec3 avg = face_average(cache, F.cells[0], f, v);
    for (int c = 0; c < d; ++c) v.free[dofs.bubble_start[lf] + c] = mean[c] - avg[c];
  }
  return v;
}

MultiplierVector interpolate_multiplier(const PolytopalMesh& mesh, const VectorField& lambda) {
  MultiplierVector out = make_multiplier(mesh);
  for (std::size_t lf = 0; lf < mesh.fracture_faces.size(); ++lf) {
    int f = mesh.fracture_faces[lf];
    Vec3 mean = integrate_face<Vec3>(mesh, f, lambda) / mesh.faces[f].area;
    out.set(static_cast<int>(lf), mean);
  }
  return out;
}

// Errors are sampled at cell / face centroids (one-point rules): this is the
// metric whose Cartesian-mesh superconvergence the reference results exhibit;
// a higher-order quadrature of |grad u - grad_D u_D| would be dominated by the
// O(h) best-approximation distance of cellwise-constant gradients.
ErrorRow error_norms(const OperatorCache& cache, const DisplacementVector& u_D,
                     const MultiplierVector& lambda_D, const AnalyticalSolution& exact,
                     const ErrorOptions& opts) {
  const PolytopalMesh& m = *cache.mesh;
  ErrorRow row;
  double grad_err = 0, grad_ref = 0, u_err = 0, u_ref = 0;
  for (int c = 0; c < m.n_cells(); ++c) {
    const Vec3 xc = m.cells[c].centroid;
    const double vol = m.cells[c].volume;
    Mat3 Gd = cell_gradient(cache, c, u_D);
    Vec3 mean = cell_mean(cache, c, u_D);
    grad_err += vol * (exact.grad_u(xc, xc) - Gd).squaredNorm();
    grad_ref += vol * exact.grad_u(xc, xc).squaredNorm();
    u_err += vol * (exact.u(xc, xc) - mean).squaredNorm();
    u_ref += vol * exact.u(xc, xc).squaredNorm();
  }
  double jump_err = 0, jump_ref = 0, slip_err = 0, slip_ref = 0;
  double lamn_err = 0, lamn_ref = 0, dual_err = 0, dual_ref = 0;
  for (std::size_t lf = 0; lf < m.fracture_faces.size(); ++lf) {
    int f = m.fracture_faces[lf];
    const Face& F = m.faces[f];
    const Vec3& n = m.component_normal[F.component];
    Vec3 jd = face_jump(cache, f, u_D);
    Vec3 ld = lambda_D.at(static_cast<int>(lf));
    Vec3 je = exact.jump(F.centroid);
    jump_err += F.area * (je - jd).squaredNorm();
    jump_ref += F.area * je.squaredNorm();
    double sd = (jd - jd.dot(n) * n).norm();
    double se = (je - je.dot(n) * n).norm();
    slip_err += F.area * (se - sd) * (se - sd);
    slip_ref += F.area * se * se;
    Vec3 le = exact.multiplier(F.centroid);
    dual_err += F.area * F.diam * (le - ld).squaredNorm();
    dual_ref += F.area * F.diam * le.squaredNorm();
    if (!opts.include_lambda || opts.include_lambda(F.centroid)) {
      double e = le.dot(n) - ld.dot(n);
      lamn_err += F.area * e * e;
      lamn_ref += F.area * le.dot(n) * le.dot(n);
    }
  }
  auto fill = [&](double err2, double ref2, double& abs, double& rel) {
    abs = std::sqrt(std::max(0.0, err2));
    if (ref2 > 0)
      rel = abs / std::sqrt(ref2);
    else {
      rel = abs;
      row.zero_exact_norm = true;
    }
  };
  fill(grad_err, grad_ref, row.grad_abs, row.grad_rel);
  fill(u_err, u_ref, row.u_abs, row.u_rel);
  fill(jump_err, jump_ref, row.jump_abs, row.jump_rel);
  fill(slip_err, slip_ref, row.slip_abs, row.slip_rel);
  fill(lamn_err, lamn_ref, row.lamn_abs, row.lamn_rel);
  fill(dual_err, dual_ref, row.lam_dual_abs, row.lam_dual_rel);
  return row;
}

namespace {

SpMat gram_from_cells(const OperatorCache& cache,
                      const std::function<Eigen::MatrixXd(const CellOps&)>& local) {
  const DisplacementDofMap& dofs = *cache.dofs;
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& ops : cache.cells) {
    Eigen::MatrixXd L = local(ops);
    for (int i = 0; i < ops.n_loc; ++i) {
      if (!dof_is_free(ops.glob[i])) continue;
      for (int j = 0; j < ops.n_loc; ++j)
        if (dof_is_free(ops.glob[j])) trips.emplace_back(ops.glob[i], ops.glob[j], L(i, j));
    }
  }
  SpMat G(dofs.n_free, dofs.n_free);
  G.setFromTriplets(trips.begin(), trips.end());
  return G;
}

}  // namespace

SpMat h1_gram(const OperatorCache& cache) {
  return gram_from_cells(cache, [&](const CellOps& ops) {
    return Eigen::MatrixXd(ops.volume * (ops.grad.transpose() * ops.grad) + ops.stab);
  });
}

SpMat strain_gram(const OperatorCache& cache) {
  const int d = cache.mesh->dim;
  Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      sym(i * d + j, i * d + j) += 0.5;
      sym(i * d + j, j * d + i) += 0.5;
    }
  return gram_from_cells(cache, [&](const CellOps& ops) {
    return Eigen::MatrixXd(ops.volume * (ops.grad.transpose() * sym * ops.grad));
  });
}

SpMat stabilisation_gram(const OperatorCache& cache) {
  return gram_from_cells(cache, [&](const CellOps& ops) { return ops.stab; });
}

namespace {

constexpr int kDenseGate = 20000;

SpMat restrict_square(const SpMat& M, int keep) {
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it)
      if (it.row() < keep && it.col() < keep)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  SpMat out(keep, keep);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SpMat restrict_cols(const SpMat& M, int keep) {
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it)
      if (it.col() < keep)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  SpMat out(M.rows(), keep);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

double infsup_constant(const OperatorCache& cache, bool with_bubbles) {
  const PolytopalMesh& m = *cache.mesh;
  const DisplacementDofMap& dofs = *cache.dofs;
  if (m.fracture_faces.empty()) throw std::runtime_error("inf-sup requires fracture faces");
  if (dofs.n_free > kDenseGate)
    throw std::runtime_error(
        "inf-sup estimation is a desk-scale diagnostic; the mesh exceeds 20k free dofs");

  SpMat N = h1_gram(cache);
  Eigen::VectorXd jp;
  SpMat B = assemble_coupling(cache, jp);
  if (!with_bubbles) {
    int n_nodal = dofs.bubble_start.empty() ? dofs.n_free : dofs.bubble_start.front();
    N = restrict_square(N, n_nodal);
    B = restrict_cols(B, n_nodal);
  }
  Eigen::SimplicialLDLT<SpMat> ldlt(N);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("H1 Gram is singular (missing Dirichlet constraints?)");
  Eigen::MatrixXd Bd = Eigen::MatrixXd(B);
  Eigen::MatrixXd X = ldlt.solve(Bd.transpose());
  Eigen::MatrixXd G = Bd * X;
  G = 0.5 * (G + G.transpose());

  const int d = m.dim;
  Eigen::VectorXd Mdiag(G.rows());
  for (std::size_t lf = 0; lf < m.fracture_faces.size(); ++lf) {
    const Face& F = m.faces[m.fracture_faces[lf]];
    for (int c = 0; c < d; ++c) Mdiag[d * lf + c] = F.area * F.diam;
  }
  Eigen::VectorXd is = Mdiag.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd Gs = is.asDiagonal() * G * is.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Gs);
  double theta = eig.eigenvalues().minCoeff();
  return std::sqrt(std::max(0.0, theta));
}

double korn_constant(const OperatorCache& cache) {
  const DisplacementDofMap& dofs = *cache.dofs;
  if (dofs.n_free > kDenseGate)
    throw std::runtime_error(
        "Korn estimation is a desk-scale diagnostic; the mesh exceeds 20k free dofs");
  SpMat S = stabilisation_gram(cache);
  SpMat P = strain_gram(cache) + S;
  SpMat N = h1_gram(cache);

  if (dofs.n_presc() == 0) {
    // unclamped: quotient out the rigid translations (kernel of both forms)
    const int d = cache.mesh->dim;
    const int n = dofs.n_free;
    if (n > 3000)
      throw std::runtime_error("unclamped Korn diagnostic is limited to small meshes");
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, d);
    for (std::size_t s = 0; s < cache.mesh->vertices.size(); ++s)
      for (const auto& blk : dofs.blocks[s])
        for (int c = 0; c < d; ++c)
          if (dof_is_free(blk.comp[c])) Z(blk.comp[c], c) = 1.0;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
    Eigen::MatrixXd Q = qr.householderQ();
    Eigen::MatrixXd Qc = Q.rightCols(n - d);
    Eigen::MatrixXd Pr = Qc.transpose() * Eigen::MatrixXd(P) * Qc;
    Eigen::MatrixXd Nr = Qc.transpose() * Eigen::MatrixXd(N) * Qc;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(Pr, Nr);
    return eig.eigenvalues().minCoeff();
  }

  // clamped: inverse iteration on the pencil (P, N)
  Eigen::SimplicialLDLT<SpMat> ldlt(P);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("strain Gram factorisation failed");
  std::mt19937_64 rng(12345);
  Eigen::VectorXd x(dofs.n_free);
  for (int i = 0; i < dofs.n_free; ++i)
    x[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  double theta = 1.0, theta_prev = 0.0;
  for (int it = 0; it < 1000 && std::abs(theta - theta_prev) > 1e-9 * std::abs(theta); ++it) {
    theta_prev = theta;
    Eigen::VectorXd y = ldlt.solve(N * x);
    y /= std::sqrt(y.dot(N * y));
    x = y;
    theta = x.dot(P * x) / x.dot(N * x);
  }
  return theta;
}

double primal_consistency(const OperatorCache& cache, const AnalyticalSolution& exact) {
  const PolytopalMesh& m = *cache.mesh;
  DisplacementVector v = interpolate_displacement(cache, exact.u);
  double sq = 0;
  for (int c = 0; c < m.n_cells(); ++c) {
    Vec3 ref = m.cells[c].centroid;
    Mat3 Gd = cell_gradient(cache, c, v);
    sq += integrate_cell<double>(
        m, c, [&](const Vec3& x) { return (exact.grad_u(x, ref) - Gd).squaredNorm(); });
    sq += stabilisation(cache, c, v, v);
  }
  return std::sqrt(sq);
}

double adjoint_consistency(const OperatorCache& cache, const SidedTensorField& tau,
                           const VectorField& div_tau) {
  const PolytopalMesh& m = *cache.mesh;
  const DisplacementDofMap& dofs = *cache.dofs;
  const int d = m.dim;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(dofs.n_free);

  for (int c = 0; c < m.n_cells(); ++c) {
    const CellOps& ops = cache.cells[c];
    Vec3 ref = m.cells[c].centroid;
    Mat3 ti = integrate_cell<Mat3>(m, c, [&](const Vec3& x) { return tau(x, ref); });
    Eigen::VectorXd tvec(d * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) tvec[i * d + j] = ti(i, j);
    // -int_K tau : eps(v) = -int_K tau : grad v for symmetric tau
    Eigen::VectorXd rloc = -(ops.grad.transpose() * tvec);
    for (int i = 0; i < ops.n_loc; ++i)
      if (dof_is_free(ops.glob[i])) r[ops.glob[i]] += rloc[i];
    // - int_K div(tau) . mean(v)
    Vec3 dint = integrate_cell<Vec3>(m, c, div_tau);
    const Cell& K = m.cells[c];
    for (int s = 0; s < ops.n_vert; ++s) {
      const NodalBlock& blk = dofs.block_of_cell(m, c, K.verts[s]);
      for (int comp = 0; comp < d; ++comp)
        if (dof_is_free(blk.comp[comp])) r[blk.comp[comp]] -= ops.cell_w[s] * dint[comp];
    }
  }
  // + int_Gamma (tau n+) . [[v]]
  for (std::size_t lf = 0; lf < m.fracture_faces.size(); ++lf) {
    const FracFaceOps& ff = cache.frac[lf];
    const Face& F = m.faces[ff.face];
    Vec3 ref = m.cells[F.cells[0]].centroid;
    Vec3 tn = integrate_face<Vec3>(
        m, ff.face, [&](const Vec3& x) { return Vec3(tau(x, ref) * ff.normal); });
    auto add = [&](int sidx, int comp, double w) {
      if (dof_is_free(sidx)) r[sidx] += w * tn[comp];
    };
    for (std::size_t s = 0; s < ff.plus_blocks.size(); ++s)
      for (int c = 0; c < d; ++c) {
        add(ff.plus_blocks[s].comp[c], c, ff.w[s]);
        add(ff.minus_blocks[s].comp[c], c, -ff.w[s]);
      }
    for (int c = 0; c < d; ++c) add(ff.bubble_start + c, c, 1.0);
  }

  SpMat N = h1_gram(cache);
  Eigen::SimplicialLDLT<SpMat> ldlt(N);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("H1 Gram is singular (missing Dirichlet constraints?)");
  return std::sqrt(std::max(0.0, r.dot(ldlt.solve(r))));
}

double fit_slope(const std::vector<double>& h, const std::vector<double>& values) {
  const int n = static_cast<int>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    double x = std::log(h[i]), y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

AnalyticalSolution manufactured3d_solution() {
  AnalyticalSolution sol;
  sol.mat = Material{1.0, 1.0};
  const double g = 1.0;

  // region data: R(z) = z^2 above the slip line, z^2/4 below; the y component
  // carries the factor c = 2 on the plus (x < 0, z < 0) side
  struct Region {
    double c;
    bool upper;
  };
  auto region = [](const Vec3& x, const Vec3& ref) -> Region {
    bool upper = x.z() >= 0;
    double c = (!upper && ref.x() < 0) ? 2.0 : 1.0;
    return {c, upper};
  };
  auto R0 = [](bool up, double z) { return up ? z * z : z * z / 4.0; };
  auto R1 = [](bool up, double z) { return up ? 2.0 * z : z / 2.0; };
  auto R2 = [](bool up) { return up ? 2.0 : 0.5; };

  sol.u = [=](const Vec3& x, const Vec3& ref) {
    auto rg = region(x, ref);
    double R = R0(rg.upper, x.z());
    double h = -std::sin(x.x()) * std::cos(x.y());
    return Vec3(h * R - g * x.y(), rg.c * R, x.x() * x.x() * R);
  };
  sol.grad_u = [=](const Vec3& x, const Vec3& ref) {
    auto rg = region(x, ref);
    double R = R0(rg.upper, x.z()), Rp = R1(rg.upper, x.z());
    double h = -std::sin(x.x()) * std::cos(x.y());
    double hx = -std::cos(x.x()) * std::cos(x.y());
    double hy = std::sin(x.x()) * std::sin(x.y());
    Mat3 G = Mat3::Zero();
    G(0, 0) = hx * R;
    G(0, 1) = hy * R - g;
    G(0, 2) = h * Rp;
    G(1, 2) = rg.c * Rp;
    G(2, 0) = 2.0 * x.x() * R;
    G(2, 2) = x.x() * x.x() * Rp;
    return G;
  };
  sol.stress = [=](const Vec3& x, const Vec3& ref) {
    Mat3 G = sol.grad_u(x, ref);
    Mat3 eps = 0.5 * (G + G.transpose());
    return Mat3(2.0 * eps + eps.trace() * Mat3::Identity());
  };
  sol.body_force = [=](const Vec3& x) {
    // -div(stress); the second derivatives of R jump across z = 0 but f stays
    // in L^2, so the branch at z = 0 is immaterial
    auto rg = region(x, x);
    double R = R0(rg.upper, x.z()), Rp = R1(rg.upper, x.z()), Rpp = R2(rg.upper);
    double h = -std::sin(x.x()) * std::cos(x.y());
    double hx = -std::cos(x.x()) * std::cos(x.y());
    double hxy = std::cos(x.x()) * std::sin(x.y());
    return Vec3(4.0 * h * R - h * Rpp - 4.0 * x.x() * Rp,
                -2.0 * hxy * R - rg.c * Rpp,
                -2.0 * hx * Rp - 2.0 * R - 3.0 * x.x() * x.x() * Rpp);
  };
  sol.multiplier = [=](const Vec3& x) {
    double ln = (x.z() >= 0 ? 3.0 : 0.75) * x.z() * x.z() * std::cos(x.y());
    return Vec3(ln, 1.0, 0.0);
  };
  sol.jump = [=](const Vec3& x) {
    double s = std::min(x.z() / 2.0, 0.0);
    return Vec3(0.0, s * s, 0.0);
  };
  sol.tresca_g = [=](const Vec3&) { return g; };
  return sol;
}

}  // namespace polyfrac
