#include "polyfrac/contact.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace polyfrac {

namespace {

struct FaceFrameData {
  Vec3 n, t1, t2;
  double area, g, bn, bt;
};

FaceFrameData frame_of(const SaddleSystem& sys, int lf) {
  const FracFaceOps& ff = sys.cache->frac[lf];
  return {ff.normal, ff.t1, ff.t2, ff.area, sys.g[lf], sys.beta_n[lf], sys.beta_t[lf]};
}

// projection residual R(lambda, j) per face, in Cartesian components
Vec3 projection_residual(const FaceFrameData& fr, const Vec3& lam, const Vec3& j, int dim,
                         bool bilateral_normal = false) {
  double ln = lam.dot(fr.n), jn = j.dot(fr.n);
  Vec3 lt = lam - ln * fr.n, jt = j - jn * fr.n;
  double xin = ln + fr.bn * jn;
  Vec3 xit = lt + fr.bt * jt;
  Vec3 r = (ln - (bilateral_normal ? xin : std::max(0.0, xin))) * fr.n;
  if (fr.g <= 0) {
    r += lt;
  } else {
    double nx = xit.norm();
    Vec3 proj = nx > fr.g ? Vec3(fr.g / nx * xit) : xit;
    r += lt - proj;
  }
  (void)dim;
  return r;
}

}  // namespace

Residual contact_residual(const SaddleSystem& sys, const Eigen::VectorXd& u_free,
                          const MultiplierVector& lambda, bool bilateral_normal) {
  const int d = sys.mesh->dim;
  const int m = static_cast<int>(sys.mesh->fracture_faces.size());
  Residual res;
  res.r_u = sys.A * u_free - sys.rhs;
  if (m > 0) res.r_u += sys.B.transpose() * lambda.values;
  res.r_contact = Eigen::VectorXd::Zero(d * m);
  for (int lf = 0; lf < m; ++lf) {
    FaceFrameData fr = frame_of(sys, lf);
    Vec3 r =
        fr.area * projection_residual(fr, lambda.at(lf), sys.jump(lf, u_free), d, bilateral_normal);
    for (int c = 0; c < d; ++c) res.r_contact[d * lf + c] = r[c];
  }
  return res;
}

std::vector<FaceStatus> face_statuses(const SaddleSystem& sys, const Eigen::VectorXd& u_free,
                                      const MultiplierVector& lambda, bool bilateral_normal) {
  const int m = static_cast<int>(sys.mesh->fracture_faces.size());
  std::vector<FaceStatus> st(m);
  for (int lf = 0; lf < m; ++lf) {
    FaceFrameData fr = frame_of(sys, lf);
    Vec3 lam = lambda.at(lf), j = sys.jump(lf, u_free);
    double xin = lam.dot(fr.n) + fr.bn * j.dot(fr.n);
    Vec3 xit = (lam - lam.dot(fr.n) * fr.n) + fr.bt * (j - j.dot(fr.n) * fr.n);
    st[lf].normal =
        (bilateral_normal || xin > 0) ? NormalStatus::Contact : NormalStatus::Open;
    st[lf].tangential = fr.g <= 0                ? TangentialStatus::Free
                        : (xit.norm() > fr.g) ? TangentialStatus::Slip
                                              : TangentialStatus::Stick;
  }
  return st;
}

Eigen::VectorXd linear_solve(const SpMat& M, const Eigen::VectorXd& b, double residual_tol) {
  Eigen::SparseLU<SpMat> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) throw std::runtime_error("sparse factorisation breakdown");
  Eigen::VectorXd x = lu.solve(b);
  double denom = std::max(b.norm(), 1e-300);
  if ((M * x - b).norm() / denom > residual_tol)
    throw std::runtime_error("linear solve residual check failed");
  return x;
}

namespace {

// tangential derivative data for a slip face
struct SlipData {
  Vec3 xihat;       // unit argument direction (tangent plane)
  double xi_norm;
};

// assembles and solves one Newton step; returns (du, dlambda)
struct StepResult {
  Eigen::VectorXd du;
  Eigen::VectorXd dl;
  double linear_residual = 0;
};

StepResult newton_step_direct(const SaddleSystem& sys, const Eigen::VectorXd& u_free,
                              const MultiplierVector& lambda, const Residual& res,
                              const std::vector<FaceStatus>& st) {
  const int d = sys.mesh->dim;
  const int n = sys.n();
  const int m = static_cast<int>(sys.mesh->fracture_faces.size());
  const int N = n + d * m;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(sys.A.nonZeros() + 2 * sys.B.nonZeros() + 9 * m);
  for (int k = 0; k < sys.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(sys.A, k); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int k = 0; k < sys.B.outerSize(); ++k)
    for (SpMat::InnerIterator it(sys.B, k); it; ++it)
      trips.emplace_back(static_cast<int>(it.col()), n + static_cast<int>(it.row()), it.value());

  for (int lf = 0; lf < m; ++lf) {
    FaceFrameData fr = frame_of(sys, lf);
    Vec3 lam = lambda.at(lf), j = sys.jump(lf, u_free);
    Mat3 T = Mat3::Identity() - fr.n * fr.n.transpose();
    if (d == 2) T -= Vec3::UnitZ() * Vec3::UnitZ().transpose();

    Mat3 Dl = Mat3::Zero(), Dj = Mat3::Zero();
    if (st[lf].normal == NormalStatus::Open)
      Dl += fr.n * fr.n.transpose();
    else
      Dj += -fr.bn * fr.n * fr.n.transpose();
    if (st[lf].tangential == TangentialStatus::Free) {
      Dl += T;
    } else if (st[lf].tangential == TangentialStatus::Stick) {
      Dj += -fr.bt * T;
    } else {
      Vec3 xit = T * (lam + fr.bt * j);
      double nx = xit.norm();
      Vec3 xh = xit / nx;
      Mat3 Q = (T - xh * xh.transpose()) / nx;  // derivative of the ball projection / g
      Dl += T - fr.g * Q;
      Dj += -fr.bt * fr.g * Q;
    }

    // rows n + d*lf + c ; columns: u (via jump map) and lambda block
    const FaceJumpMap& jm = sys.jump_maps[lf];
    for (int r = 0; r < d; ++r) {
      for (std::size_t k = 0; k < jm.cols.size(); ++k) {
        double v = 0;
        for (int c = 0; c < d; ++c) v += Dj(r, c) * jm.M(c, k);
        if (v != 0.0) trips.emplace_back(n + d * lf + r, jm.cols[k], fr.area * v);
      }
      for (int c = 0; c < d; ++c) {
        // keep the full block pattern so the saddle stays structurally square
        trips.emplace_back(n + d * lf + r, n + d * lf + c, fr.area * Dl(r, c) + 0.0);
      }
    }
  }

  SpMat J(N, N);
  J.setFromTriplets(trips.begin(), trips.end());
  Eigen::VectorXd rhs(N);
  rhs.head(n) = -res.r_u;
  rhs.tail(d * m) = -res.r_contact;
  Eigen::VectorXd x = linear_solve(J, rhs, 1e-8);
  StepResult out;
  out.du = x.head(n);
  out.dl = x.tail(d * m);
  out.linear_residual = (J * x - rhs).norm() / std::max(rhs.norm(), 1e-300);
  return out;
}

// Exact reduction to SPD: explicit lambda components eliminated, slip blocks
// folded into the stiffness, constrained jump directions substituted through
// the face's bubble block.
StepResult newton_step_reduced(const SaddleSystem& sys, const Eigen::VectorXd& u_free,
                               const MultiplierVector& lambda, const Residual& res,
                               const std::vector<FaceStatus>& st, bool use_cg) {
  const PolytopalMesh& mesh = *sys.mesh;
  const DisplacementDofMap& dofs = *sys.cache->dofs;
  const int d = mesh.dim;
  const int n = sys.n();
  const int m = static_cast<int>(mesh.fracture_faces.size());

  Eigen::VectorXd bhat = -res.r_u;
  std::vector<Eigen::Triplet<double>> aug;      // slip terms added to A
  std::vector<std::vector<Vec3>> constraint_dirs(m);
  std::vector<std::vector<double>> constraint_rhs(m);
  std::vector<Vec3> explicit_dl(m, Vec3::Zero());  // explicit part of dlambda
  std::vector<Mat3> slip_W(m, Mat3::Zero());

  for (int lf = 0; lf < m; ++lf) {
    FaceFrameData fr = frame_of(sys, lf);
    Vec3 lam = lambda.at(lf), j = sys.jump(lf, u_free);
    Mat3 T = Mat3::Identity() - fr.n * fr.n.transpose();
    if (d == 2) T -= Vec3::UnitZ() * Vec3::UnitZ().transpose();
    double ln = lam.dot(fr.n), jn = j.dot(fr.n);
    Vec3 lt = lam - ln * fr.n, jt = T * j;

    if (st[lf].normal == NormalStatus::Open) {
      explicit_dl[lf] += -ln * fr.n;
    } else {
      constraint_dirs[lf].push_back(fr.n);
      constraint_rhs[lf].push_back(-jn);
    }
    if (st[lf].tangential == TangentialStatus::Free) {
      explicit_dl[lf] += -lt;
    } else if (st[lf].tangential == TangentialStatus::Stick) {
      constraint_dirs[lf].push_back(fr.t1);
      constraint_rhs[lf].push_back(-jt.dot(fr.t1));
      if (d == 3) {
        constraint_dirs[lf].push_back(fr.t2);
        constraint_rhs[lf].push_back(-jt.dot(fr.t2));
      }
    } else {
      Vec3 xit = lt + fr.bt * jt;
      double nx = xit.norm();
      Vec3 xh = xit / nx;
      // dlambda_t = W jump_dot + w_expl with W = g bt (I - g P')^{-1} P',
      // diagonal in the (xh, xh_perp) eigenbasis
      Vec3 rt = lt - fr.g * xh;  // tangential projection residual
      Vec3 w_expl = -(rt.dot(xh)) * xh;
      if (d == 3) {
        Vec3 xp = fr.n.cross(xh);
        double c_perp = nx / (nx - fr.g);
        w_expl += -c_perp * rt.dot(xp) * xp;
        slip_W[lf] = (fr.g * fr.bt / (nx - fr.g)) * (xp * xp.transpose());
      }
      explicit_dl[lf] += w_expl;
    }

    // fold explicit and slip-coupled parts of B^T dlambda into rhs / matrix
    const FaceJumpMap& jm = sys.jump_maps[lf];
    if (explicit_dl[lf].squaredNorm() > 0) {
      for (std::size_t k = 0; k < jm.cols.size(); ++k) {
        double v = 0;
        for (int c = 0; c < d; ++c) v += jm.M(c, k) * explicit_dl[lf][c];
        bhat[jm.cols[k]] -= fr.area * v;
      }
    }
    if (slip_W[lf].squaredNorm() > 0) {
      // |sigma| J^T W J
      for (std::size_t a = 0; a < jm.cols.size(); ++a)
        for (std::size_t b = 0; b < jm.cols.size(); ++b) {
          double v = 0;
          for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) v += jm.M(r, a) * slip_W[lf](r, c) * jm.M(c, b);
          if (v != 0.0) aug.emplace_back(jm.cols[a], jm.cols[b], fr.area * v);
        }
    }
  }

  SpMat Ahat = sys.A;
  if (!aug.empty()) {
    SpMat Waug(n, n);
    Waug.setFromTriplets(aug.begin(), aug.end());
    Ahat += Waug;
  }

  // substitution map u = Tmap y + shift: reduced variables are all free dofs,
  // with each constrained face's bubble block re-expressed in the face frame
  // and its constrained components replaced by affine functions of the nodal
  // dofs
  std::vector<char> is_slave(n, 0);
  std::vector<Eigen::Triplet<double>> tmap;
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(n);
  int n_constraints = 0;
  for (int lf = 0; lf < m; ++lf) {
    if (constraint_dirs[lf].empty()) continue;
    n_constraints += static_cast<int>(constraint_dirs[lf].size());
    int bs = dofs.bubble_start[lf];
    for (int c = 0; c < d; ++c) is_slave[bs + c] = 1;
  }
  // column layout: free dofs that are not slave bubble components keep their
  // order; each constrained face appends its unconstrained frame components
  std::vector<int> col_of(n, -1);
  int ncols = 0;
  for (int i = 0; i < n; ++i)
    if (!is_slave[i]) col_of[i] = ncols++;
  for (int i = 0; i < n; ++i)
    if (!is_slave[i]) tmap.emplace_back(i, col_of[i], 1.0);

  for (int lf = 0; lf < m; ++lf) {
    if (constraint_dirs[lf].empty()) continue;
    FaceFrameData fr = frame_of(sys, lf);
    const FaceJumpMap& jm = sys.jump_maps[lf];
    int bs = dofs.bubble_start[lf];
    // frame directions not constrained stay as reduced unknowns
    std::vector<Vec3> all_dirs = {fr.n, fr.t1};
    if (d == 3) all_dirs.push_back(fr.t2);
    auto constrained = [&](const Vec3& dir) {
      for (const auto& cd : constraint_dirs[lf])
        if (std::abs(cd.dot(dir)) > 0.5) return true;
      return false;
    };
    for (const auto& dir : all_dirs) {
      if (!constrained(dir)) {
        int col = ncols++;
        for (int c = 0; c < d; ++c)
          if (dir[c] != 0.0) tmap.emplace_back(bs + c, col, dir[c]);
      }
    }
    for (std::size_t k = 0; k < constraint_dirs[lf].size(); ++k) {
      const Vec3& dir = constraint_dirs[lf][k];
      double cval = constraint_rhs[lf][k];
      // dir^T b = c - dir^T J_nodal du  (the bubble's own columns of the jump
      // map are the identity, so J_nodal = J minus the bubble block)
      for (int c = 0; c < d; ++c) shift[bs + c] += dir[c] * cval;
      for (std::size_t q = 0; q < jm.cols.size(); ++q) {
        int col = jm.cols[q];
        if (col >= bs && col < bs + d) continue;  // bubble's own identity part
        double coeff = 0;
        for (int c = 0; c < d; ++c) coeff += dir[c] * jm.M(c, q);
        if (coeff == 0.0) continue;
        // bubble component rows pick up -dir (dir . J_nodal)
        for (int c = 0; c < d; ++c)
          if (dir[c] != 0.0) tmap.emplace_back(bs + c, col_of[col], -dir[c] * coeff);
      }
    }
  }

  SpMat Tmap(n, ncols);
  Tmap.setFromTriplets(tmap.begin(), tmap.end());
  SpMat Mred = Tmap.transpose() * (Ahat * Tmap).pruned();
  Eigen::VectorXd rhs_red = Tmap.transpose() * (bhat - Ahat * shift);

  Eigen::VectorXd y;
  if (!use_cg) {
    Eigen::SimplicialLDLT<SpMat> ldlt(Mred);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("sparse factorisation breakdown");
    y = ldlt.solve(rhs_red);
  } else {
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>> cg;
    cg.setTolerance(1e-12);
    cg.setMaxIterations(20000);
    cg.compute(Mred);
    if (cg.info() != Eigen::Success) throw std::runtime_error("IC preconditioner breakdown");
    y = cg.solve(rhs_red);
    if (cg.info() != Eigen::Success) throw std::runtime_error("PCG did not converge");
  }

  StepResult out;
  out.du = Tmap * y + shift;
  out.linear_residual =
      (Mred * y - rhs_red).norm() / std::max(rhs_red.norm(), 1e-300);

  // recover dlambda: bubble rows of A du + B^T dl = -r_u give the full
  // multiplier update of each face
  Eigen::VectorXd rho = bhat - Ahat * out.du;  // = |sigma| (J^T (dl - explicit - W J du)) rows
  out.dl = Eigen::VectorXd::Zero(d * m);
  for (int lf = 0; lf < m; ++lf) {
    FaceFrameData fr = frame_of(sys, lf);
    int bs = dofs.bubble_start[lf];
    Vec3 dl = explicit_dl[lf];
    if (slip_W[lf].squaredNorm() > 0) {
      Vec3 jdot = Vec3::Zero();
      const FaceJumpMap& jm = sys.jump_maps[lf];
      for (std::size_t k = 0; k < jm.cols.size(); ++k)
        for (int c = 0; c < d; ++c) jdot[c] += jm.M(c, k) * out.du[jm.cols[k]];
      dl += slip_W[lf] * jdot;
    }
    for (const auto& dir : constraint_dirs[lf]) {
      double coef = 0;
      for (int c = 0; c < d; ++c) coef += dir[c] * rho[bs + c];
      dl += (coef / fr.area) * dir;
    }
    for (int c = 0; c < d; ++c) out.dl[d * lf + c] = dl[c];
  }
  return out;
}

}  // namespace

SolveReport semismooth_newton(const SaddleSystem& sys, DisplacementVector& u,
                              MultiplierVector& lambda, const NewtonOptions& opts) {
  const int d = sys.mesh->dim;
  const int m = static_cast<int>(sys.mesh->fracture_faces.size());
  SolveReport rep;

  const double scale = std::max(sys.rhs.norm(), 1e-300);
  auto norms = [&](const Residual& r) {
    return std::make_pair(r.r_u.norm() / scale, r.r_contact.norm() / scale);
  };

  Residual res = contact_residual(sys, u.free, lambda, opts.bilateral_normal);
  auto [ru, rc] = norms(res);
  rep.residual_u = ru;
  rep.residual_contact = rc;

  for (int it = 0; it < opts.max_iter; ++it) {
    if (std::max(rep.residual_u, rep.residual_contact) <= opts.tol) {
      rep.converged = true;
      break;
    }
    auto st = face_statuses(sys, u.free, lambda, opts.bilateral_normal);
    int slips = 0;
    for (const auto& s : st)
      if (s.tangential == TangentialStatus::Slip) ++slips;
    rep.slip_count_history.push_back(slips);

    LinearStrategy strat = opts.linear;
    if (strat == LinearStrategy::Auto)
      strat = (d == 2 || sys.n() + d * m <= 30000) ? LinearStrategy::Direct
                                                   : LinearStrategy::ReducedSpd;
    StepResult step;
    if (strat == LinearStrategy::Direct)
      step = newton_step_direct(sys, u.free, lambda, res, st);
    else
      step = newton_step_reduced(sys, u.free, lambda, res, st, sys.n() > 60000);
    ++rep.linear_solves;
    rep.worst_linear_residual = std::max(rep.worst_linear_residual, step.linear_residual);

    double alpha = 1.0;
    Eigen::VectorXd u0 = u.free, l0 = lambda.values;
    double prev = std::max(rep.residual_u, rep.residual_contact);
    for (int half = 0; half < (opts.linesearch ? 10 : 1); ++half) {
      u.free = u0 + alpha * step.du;
      lambda.values = l0 + alpha * step.dl;
      res = contact_residual(sys, u.free, lambda, opts.bilateral_normal);
      std::tie(ru, rc) = norms(res);
      if (!opts.linesearch || std::max(ru, rc) < prev || alpha < 1e-3) break;
      alpha *= 0.5;
    }
    rep.residual_u = ru;
    rep.residual_contact = rc;
    rep.iterations = it + 1;
  }
  if (std::max(rep.residual_u, rep.residual_contact) <= opts.tol) rep.converged = true;
  rep.status = face_statuses(sys, u.free, lambda, opts.bilateral_normal);
  return rep;
}

KktReport check_kkt(const SaddleSystem& sys, const Eigen::VectorXd& u_free,
                    const MultiplierVector& lambda) {
  const PolytopalMesh& mesh = *sys.mesh;
  const int m = static_cast<int>(mesh.fracture_faces.size());
  KktReport rep;
  double lam_scale = 0, jump_scale = 0;
  for (int lf = 0; lf < m; ++lf) {
    lam_scale = std::max({lam_scale, lambda.at(lf).norm(), sys.g[lf]});
    jump_scale = std::max(jump_scale, sys.jump(lf, u_free).norm());
  }
  lam_scale = std::max(lam_scale, 1e-300);
  jump_scale = std::max(jump_scale, 1e-300);

  for (int lf = 0; lf < m; ++lf) {
    const FracFaceOps& ff = sys.cache->frac[lf];
    Vec3 lam = lambda.at(lf), j = sys.jump(lf, u_free);
    double ln = lam.dot(ff.normal), jn = j.dot(ff.normal);
    Vec3 lt = lam - ln * ff.normal, jt = j - jn * ff.normal;
    rep.negative_lambda_n = std::max(rep.negative_lambda_n, std::max(-ln, 0.0));
    rep.penetration = std::max(rep.penetration, std::max(jn, 0.0));
    rep.complementarity_n = std::max(rep.complementarity_n, std::abs(ln * jn));
    rep.slip_excess = std::max(rep.slip_excess, std::max(lt.norm() - sys.g[lf], 0.0));
    rep.complementarity_t =
        std::max(rep.complementarity_t, std::abs(lt.dot(jt) - sys.g[lf] * jt.norm()));
  }
  rep.normalized[0] = rep.negative_lambda_n / lam_scale;
  rep.normalized[1] = rep.penetration / jump_scale;
  rep.normalized[2] = rep.complementarity_n / (lam_scale * jump_scale);
  rep.normalized[3] = rep.slip_excess / lam_scale;
  rep.normalized[4] = rep.complementarity_t / (lam_scale * jump_scale);
  return rep;
}

}  // namespace polyfrac
