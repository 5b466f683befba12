#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "polyfrac/contact.hpp"
#include "polyfrac/verification.hpp"

using namespace polyfrac;

namespace {

std::mt19937_64 rng(5150);
double ud() { return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0; }

// compressive linear field orthogonal to the fracture plane x = const:
// in frictionless contact its interpolant solves the discrete problem exactly
AnalyticalSolution compressive_patch_field(double mu, double lambda) {
  AnalyticalSolution sol;
  sol.mat = Material{mu, lambda};
  Mat3 A = Mat3::Zero();
  A(0, 0) = -1.0;          // uniaxial compression across the fracture
  A(1, 0) = 0.35;          // plus a skew part, stress-free
  A(0, 1) = -0.35;
  sol.u = [A](const Vec3& x, const Vec3&) { return Vec3(A * x); };
  sol.grad_u = [A](const Vec3&, const Vec3&) { return A; };
  sol.stress = [=](const Vec3&, const Vec3&) {
    Mat3 eps = 0.5 * (A + A.transpose());
    return Mat3(2.0 * mu * eps + lambda * eps.trace() * Mat3::Identity());
  };
  sol.body_force = [](const Vec3&) { return Vec3::Zero(); };
  sol.jump = [](const Vec3&) { return Vec3::Zero(); };
  sol.multiplier = [=](const Vec3& x) { return Vec3(-sol.stress(x, x).col(0)); };
  sol.tresca_g = [](const Vec3&) { return 0.0; };
  return sol;
}

struct SmallProblem {
  PolytopalMesh mesh;
  DisplacementDofMap dofs;
  OperatorCache cache;
  SaddleSystem sys;
};

SmallProblem manufactured_problem(int n, double beta = -1.0) {
  SmallProblem p;
  p.mesh = generate_cartesian({n, n, n}, {Vec3(-1, -1, -1), Vec3(1, 1, 1)});
  tag_fracture(p.mesh, {{Vec3::Zero(), Vec3(1, 0, 0), {}}});
  AnalyticalSolution sol = manufactured3d_solution();
  DirichletSpec d;
  d.all_boundary = true;
  d.value = sol.u;
  p.dofs = build_dof_map(p.mesh, d);
  p.cache = build_operator_cache(p.mesh, p.dofs);
  SystemOptions opts;
  opts.material = [&](const Vec3&) { return sol.mat; };
  opts.body_force = sol.body_force;
  opts.tresca_g = sol.tresca_g;
  opts.beta = beta;
  p.sys = build_saddle_system(p.cache, opts);
  p.sys.cache = &p.cache;
  p.sys.mesh = &p.mesh;
  return p;
}

}  // namespace

TEST_CASE("linear_solve") {
  SUBCASE("identity") {
    SpMat I(4, 4);
    I.setIdentity();
    Eigen::VectorXd b(4);
    b << 1, 2, 3, 4;
    CHECK((linear_solve(I, b) - b).norm() <= 1e-14);
  }
  SUBCASE("2x2 saddle block") {
    std::vector<Eigen::Triplet<double>> t = {{0, 0, 2.0}, {0, 1, 1.0}, {1, 0, 1.0}};
    SpMat M(2, 2);
    M.setFromTriplets(t.begin(), t.end());
    Eigen::VectorXd b(2);
    b << 1, 1;
    Eigen::VectorXd x = linear_solve(M, b);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("random SPD-bordered systems against a dense oracle") {
    for (int trial = 0; trial < 5; ++trial) {
      int n = 30, m = 8;
      Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(n, n, [&]() { return ud(); });
      Eigen::MatrixXd Ad = R * R.transpose() + 0.5 * n * Eigen::MatrixXd::Identity(n, n);
      Eigen::MatrixXd Bd = Eigen::MatrixXd::NullaryExpr(m, n, [&]() { return ud(); });
      Eigen::MatrixXd Md = Eigen::MatrixXd::Zero(n + m, n + m);
      Md.topLeftCorner(n, n) = Ad;
      Md.topRightCorner(n, m) = Bd.transpose();
      Md.bottomLeftCorner(m, n) = Bd;
      Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(n + m, [&]() { return ud(); });
      Eigen::VectorXd xd = Md.fullPivLu().solve(b);
      CHECK((linear_solve(Md.sparseView(), b) - xd).norm() <= 1e-9 * (1 + xd.norm()));
    }
  }
  SUBCASE("singular matrix is rejected") {
    SpMat Z(3, 3);
    std::vector<Eigen::Triplet<double>> t = {{0, 0, 1.0}, {1, 1, 1.0}};
    Z.setFromTriplets(t.begin(), t.end());
    Eigen::VectorXd b = Eigen::VectorXd::Ones(3);
    CHECK_THROWS(static_cast<void>(linear_solve(Z, b)));
  }
}

TEST_CASE("contact residual matches the direct projection formulas") {
  SmallProblem p = manufactured_problem(2);
  const int m = static_cast<int>(p.mesh.fracture_faces.size());
  DisplacementVector u = make_displacement(p.dofs);
  MultiplierVector lambda = make_multiplier(p.mesh);
  for (int i = 0; i < u.free.size(); ++i) u.free[i] = 0.1 * ud();
  for (int i = 0; i < lambda.values.size(); ++i) lambda.values[i] = ud();

  Residual res = contact_residual(p.sys, u.free, lambda);
  for (int lf = 0; lf < m; ++lf) {
    const FracFaceOps& ff = p.cache.frac[lf];
    Vec3 direct = oracles::projection_residual_direct(
        lambda.at(lf), p.sys.jump(lf, u.free), ff.normal, p.sys.g[lf], p.sys.beta_n[lf],
        p.sys.beta_t[lf]);
    for (int c = 0; c < 3; ++c)
      CHECK(res.r_contact[3 * lf + c] == doctest::Approx(ff.area * direct[c]).epsilon(1e-12));
  }

  // stick state with a feasible multiplier and zero jump has zero residual
  DisplacementVector u0 = make_displacement(p.dofs);
  u0.presc.setZero();
  MultiplierVector lam0 = make_multiplier(p.mesh);
  for (int lf = 0; lf < m; ++lf) lam0.set(lf, Vec3(0.5, 0.2, 0.0));  // lambda_n > 0, |lambda_t| < g
  SaddleSystem sys0 = p.sys;
  sys0.jump_presc.setZero();  // forget the boundary data for this synthetic check
  Residual res0 = contact_residual(sys0, u0.free, lam0);
  CHECK(res0.r_contact.norm() <= 1e-14);
}

TEST_CASE("check_kkt flags hand-built violations") {
  SmallProblem p = manufactured_problem(2);
  DisplacementVector u = make_displacement(p.dofs);
  u.presc.setZero();
  SaddleSystem sys = p.sys;
  sys.jump_presc.setZero();
  MultiplierVector lambda = make_multiplier(p.mesh);

  SUBCASE("lambda_n = -1 gives a unit dual violation") {
    for (int lf = 0; lf < lambda.n_faces(); ++lf) lambda.set(lf, Vec3(-1.0, 0, 0));
    KktReport rep = check_kkt(sys, u.free, lambda);
    CHECK(rep.negative_lambda_n == doctest::Approx(1.0));
  }
  SUBCASE("open crack with zero multiplier has zero complementarity") {
    // jump_n < 0 through the plus-side bubble
    for (int lf = 0; lf < lambda.n_faces(); ++lf)
      u.free[p.dofs.bubble_start[lf]] = -0.3;
    KktReport rep = check_kkt(sys, u.free, lambda);
    CHECK(rep.complementarity_n == 0.0);
    CHECK(rep.negative_lambda_n == 0.0);
    CHECK(rep.penetration == 0.0);
  }
}

TEST_CASE("frictionless patch test returns the interpolant") {
  AnalyticalSolution patch = compressive_patch_field(1.0, 1.0);
  for (int n : {2, 4}) {
    PolytopalMesh mesh = generate_cartesian({n, n, n}, {Vec3(-1, -1, -1), Vec3(1, 1, 1)});
    tag_fracture(mesh, {{Vec3::Zero(), Vec3(1, 0, 0), {}}});
    DirichletSpec d;
    d.all_boundary = true;
    d.value = patch.u;
    DisplacementDofMap dofs = build_dof_map(mesh, d);
    OperatorCache cache = build_operator_cache(mesh, dofs);
    SystemOptions opts;
    opts.material = [](const Vec3&) { return Material{1.0, 1.0}; };
    opts.tresca_g = [](const Vec3&) { return 0.0; };
    SaddleSystem sys = build_saddle_system(cache, opts);
    DisplacementVector u = make_displacement(dofs);
    MultiplierVector lambda = make_multiplier(mesh);
    SolveReport rep = semismooth_newton(sys, u, lambda);
    REQUIRE(rep.converged);
    DisplacementVector ui = interpolate_displacement(cache, patch.u);
    CHECK((u.free - ui.free).norm() <= 1e-10 * (1 + ui.free.norm()));
    // multiplier carries the compressive traction, tangentially zero (g = 0)
    for (int lf = 0; lf < lambda.n_faces(); ++lf) {
      CHECK(multiplier_normal(mesh, lambda, lf) ==
            doctest::Approx(3.0).epsilon(1e-9));  // -(2mu+lambda) eps_xx
      CHECK(multiplier_tangential(mesh, lambda, lf).norm() <= 1e-9);
    }
  }
}

TEST_CASE("direct and reduced Newton paths produce the same solution") {
  for (double beta : {-1.0, 1.0}) {
    SmallProblem p1 = manufactured_problem(4, beta);
    NewtonOptions o1;
    o1.linear = LinearStrategy::Direct;
    DisplacementVector u1 = make_displacement(p1.dofs);
    MultiplierVector l1 = make_multiplier(p1.mesh);
    SolveReport r1 = semismooth_newton(p1.sys, u1, l1, o1);
    REQUIRE(r1.converged);

    SmallProblem p2 = manufactured_problem(4, beta);
    NewtonOptions o2;
    o2.linear = LinearStrategy::ReducedSpd;
    DisplacementVector u2 = make_displacement(p2.dofs);
    MultiplierVector l2 = make_multiplier(p2.mesh);
    SolveReport r2 = semismooth_newton(p2.sys, u2, l2, o2);
    REQUIRE(r2.converged);

    CHECK((u1.free - u2.free).norm() <= 1e-8 * (1 + u1.free.norm()));
    CHECK((l1.values - l2.values).norm() <= 1e-8 * (1 + l1.values.norm()));
  }
}

TEST_CASE("solution is independent of the projection scaling beta") {
  SmallProblem pa = manufactured_problem(4, -1.0);  // face-wise default
  SmallProblem pb = manufactured_problem(4, 1.0);
  NewtonOptions opts;
  opts.tol = 1e-11;
  DisplacementVector ua = make_displacement(pa.dofs), ub = make_displacement(pb.dofs);
  MultiplierVector la = make_multiplier(pa.mesh), lb = make_multiplier(pb.mesh);
  REQUIRE(semismooth_newton(pa.sys, ua, la, opts).converged);
  REQUIRE(semismooth_newton(pb.sys, ub, lb, opts).converged);
  DisplacementVector diff = ua;
  diff.free = ua.free - ub.free;
  diff.presc.setZero();
  CHECK(h1_norm(pa.cache, diff) <= 10 * opts.tol * (1 + h1_norm(pa.cache, ua)));
}

TEST_CASE("manufactured solve: statuses and KKT at convergence") {
  SmallProblem p = manufactured_problem(4);
  NewtonOptions opts;
  DisplacementVector u = make_displacement(p.dofs);
  MultiplierVector lambda = make_multiplier(p.mesh);
  SolveReport rep = semismooth_newton(p.sys, u, lambda, opts);
  REQUIRE(rep.converged);
  CHECK(check_kkt(p.sys, u.free, lambda).max_normalized() <= 10 * opts.tol);

  for (std::size_t lf = 0; lf < p.mesh.fracture_faces.size(); ++lf) {
    const Face& F = p.mesh.faces[p.mesh.fracture_faces[lf]];
    double z = F.centroid.z();
    Vec3 j = p.sys.jump(static_cast<int>(lf), u.free);
    // the exact multiplier degenerates quadratically at z = 0, so the faces
    // adjacent to that line may open by O(h^2); away from it contact holds at
    // solver precision
    if (std::abs(z) > 0.3) CHECK(std::abs(j.x()) <= 1e-10);
    CHECK(j.x() <= 1e-10);  // no penetration anywhere
    if (z < -0.3) {
      // clear slip region: tangential jump tracks z^2/4 at face accuracy
      CHECK(j.y() > 0.0);
      CHECK(j.y() == doctest::Approx(z * z / 4.0).epsilon(0.35));
    }
    if (z > 0.3) CHECK(std::abs(j.y()) <= 0.02);
  }
}
