#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "polyfrac/assembly.hpp"
#include "polyfrac/quadrature.hpp"
#include "polyfrac/verification.hpp"

using namespace polyfrac;

namespace {

std::mt19937_64 rng(77);
double ud() { return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0; }

PolytopalMesh two_cell_fractured() {
  PolytopalMesh m = generate_cartesian({2, 1, 1}, {Vec3(0, 0, 0), Vec3(2, 1, 1)});
  tag_fracture(m, {{Vec3(1, 0, 0), Vec3(1, 0, 0), {}}});
  return m;
}

}  // namespace

TEST_CASE("rigid translations are in the kernel of A and B") {
  PolytopalMesh m = two_cell_fractured();
  DisplacementDofMap map = build_dof_map(m, {});
  OperatorCache cache = build_operator_cache(m, map);
  std::vector<Material> mat(m.n_cells(), Material{1.0, 1.0});
  Eigen::VectorXd elim;
  SpMat A = assemble_stiffness(cache, mat, elim);
  Eigen::VectorXd jp;
  SpMat B = assemble_coupling(cache, jp);

  DisplacementVector v = make_displacement(map);
  Vec3 c(0.3, -0.7, 0.45);
  for (int s = 0; s < m.n_vertices(); ++s)
    for (std::size_t k = 0; k < m.vertex_classes[s].size(); ++k)
      for (int comp = 0; comp < 3; ++comp) v.free[map.blocks[s][k].comp[comp]] = c[comp];
  CHECK((A * v.free).norm() <= 1e-12 * A.norm());
  CHECK((B * v.free).norm() <= 1e-13);
}

TEST_CASE("patch energy of a symmetric linear field on the unit cube") {
  PolytopalMesh m = generate_cartesian({1, 1, 1}, {Vec3(0, 0, 0), Vec3(1, 1, 1)});
  DisplacementDofMap map = build_dof_map(m, {});
  OperatorCache cache = build_operator_cache(m, map);
  std::vector<Material> mat(1, Material{1.0, 1.0});
  Eigen::VectorXd elim;
  SpMat A = assemble_stiffness(cache, mat, elim);

  Mat3 S;
  S << 0.4, 0.1, -0.2, 0.1, -0.3, 0.25, -0.2, 0.25, 0.7;
  DisplacementVector v = make_displacement(map);
  for (int s = 0; s < m.n_vertices(); ++s) {
    Vec3 val = S * m.vertices[s];
    for (int c = 0; c < 3; ++c) v.free[map.blocks[s][0].comp[c]] = val[c];
  }
  double energy = v.free.dot(A * v.free);
  double expected = 2.0 * S.squaredNorm() + S.trace() * S.trace();
  CHECK(energy == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("stiffness is symmetric positive definite after clamping") {
  // the fracture cuts the domain in two, so each side needs a clamped face
  PolytopalMesh m = two_cell_fractured();
  set_boundary_tags(m, [](const Face& F) {
    if (F.centroid.x() < 1e-12) return "left";
    if (F.centroid.x() > 2 - 1e-12) return "right";
    return "";
  });
  DirichletSpec d;
  d.tags = {m.boundary_tag_id("left"), m.boundary_tag_id("right")};
  DisplacementDofMap map = build_dof_map(m, d);
  OperatorCache cache = build_operator_cache(m, map);
  std::vector<Material> mat(m.n_cells(), Material{1.0, 1.0});
  Eigen::VectorXd elim;
  SpMat A = assemble_stiffness(cache, mat, elim);

  Eigen::MatrixXd Ad(A);
  CHECK((Ad - Ad.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * Ad.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Ad);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);  // dense oracle: Korn with clamping
}

TEST_CASE("coupling rows") {
  PolytopalMesh m = two_cell_fractured();
  DisplacementDofMap map = build_dof_map(m, {});
  OperatorCache cache = build_operator_cache(m, map);
  Eigen::VectorXd jp;
  SpMat B = assemble_coupling(cache, jp);

  SUBCASE("bubble basis vectors map to |sigma| times the identity") {
    const Face& F = m.faces[m.fracture_faces[0]];
    for (int c = 0; c < 3; ++c) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(map.n_free);
      e[map.bubble_start[0] + c] = 1.0;
      Eigen::VectorXd row = B * e;
      for (int r = 0; r < 3; ++r)
        CHECK(row[r] == doctest::Approx(r == c ? F.area : 0.0).epsilon(1e-14));
    }
  }
  SUBCASE("row against a random vector equals |sigma| times the direct jump") {
    DisplacementVector v = make_displacement(map);
    for (int i = 0; i < v.free.size(); ++i) v.free[i] = ud();
    Eigen::VectorXd via_B = B * v.free;
    int f = m.fracture_faces[0];
    const Face& F = m.faces[f];
    // direct evaluation: face-average difference plus bubble
    Eigen::VectorXd w = compute_face_weights(m, f).w;
    Vec3 direct = Vec3::Zero();
    for (std::size_t s = 0; s < F.verts.size(); ++s) {
      const NodalBlock& bp = map.block_of_cell(m, F.cells[0], F.verts[s]);
      const NodalBlock& bm = map.block_of_cell(m, F.cells[1], F.verts[s]);
      for (int c = 0; c < 3; ++c) direct[c] += w[s] * (v.free[bp.comp[c]] - v.free[bm.comp[c]]);
    }
    for (int c = 0; c < 3; ++c) direct[c] += v.free[map.bubble_start[0] + c];
    for (int c = 0; c < 3; ++c) CHECK(via_B[c] == doctest::Approx(F.area * direct[c]));
  }
  SUBCASE("continuous interpolants have zero rows") {
    DisplacementVector v = make_displacement(map);
    Mat3 A;
    A << 0.2, 0.5, 0, -0.1, 0.3, 0.7, 0, 0.2, -0.4;
    for (int s = 0; s < m.n_vertices(); ++s)
      for (std::size_t k = 0; k < m.vertex_classes[s].size(); ++k) {
        Vec3 val = A * m.vertices[s];
        for (int c = 0; c < 3; ++c) v.free[map.blocks[s][k].comp[c]] = val[c];
      }
    CHECK((B * v.free).norm() <= 1e-13);
  }
}

TEST_CASE("load assembly") {
  SUBCASE("constant body force pairs with the cell means") {
    PolytopalMesh m = two_cell_fractured();
    DisplacementDofMap map = build_dof_map(m, {});
    OperatorCache cache = build_operator_cache(m, map);
    Vec3 c(1.5, -2.0, 0.25);
    Eigen::VectorXd load = assemble_load(cache, [&](const Vec3&) { return c; });
    // against sum_K |K| c . mean weights
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(map.n_free);
    for (int cell = 0; cell < m.n_cells(); ++cell) {
      const CellOps& ops = cache.cells[cell];
      for (int s = 0; s < ops.n_vert; ++s) {
        const NodalBlock& blk = map.block_of_cell(m, cell, m.cells[cell].verts[s]);
        for (int comp = 0; comp < 3; ++comp)
          expected[blk.comp[comp]] += ops.cell_w[s] * m.cells[cell].volume * c[comp];
      }
    }
    CHECK((load - expected).norm() <= 1e-12 * expected.norm());
  }
  SUBCASE("opposed tractions on a cube balance to zero net force") {
    PolytopalMesh m = generate_cartesian({1, 1, 1}, {Vec3(0, 0, 0), Vec3(1, 1, 1)});
    set_boundary_tags(m, [](const Face& F) {
      if (std::abs(F.centroid.x()) < 1e-12) return "left";
      if (std::abs(F.centroid.x() - 1.0) < 1e-12) return "right";
      return "";
    });
    DisplacementDofMap map = build_dof_map(m, {});
    OperatorCache cache = build_operator_cache(m, map);
    auto press = [](const Vec3&, const Vec3& n) { return Vec3(-5.0 * n); };
    Eigen::VectorXd load = assemble_load(cache, nullptr,
                                         {{m.boundary_tag_id("left"), press},
                                          {m.boundary_tag_id("right"), press}});
    Vec3 total = Vec3::Zero();
    for (int s = 0; s < m.n_vertices(); ++s)
      for (int c = 0; c < 3; ++c) total[c] += load[map.blocks[s][0].comp[c]];
    CHECK(total.norm() <= 1e-12);
  }
  SUBCASE("cell quadrature against its refined oracle on the manufactured force") {
    AnalyticalSolution sol = manufactured3d_solution();
    PolytopalMesh m = generate_cartesian({8, 8, 8}, {Vec3(-1, -1, -1), Vec3(1, 1, 1)});
    double num = 0, den = 0;
    for (int c = 0; c < m.n_cells(); c += 7) {
      Vec3 coarse = integrate_cell<Vec3>(m, c, sol.body_force);
      Vec3 fine = integrate_cell<Vec3>(m, c, sol.body_force, 2);
      num += (coarse - fine).norm();
      den += fine.norm();
    }
    CHECK(num / den <= 1e-3);
  }
}

TEST_CASE("adjoint consistency residual decays at first order") {
  AnalyticalSolution sol = manufactured3d_solution();
  std::vector<double> h, w;
  for (int n : {4, 8}) {
    PolytopalMesh m = generate_cartesian({n, n, n}, {Vec3(-1, -1, -1), Vec3(1, 1, 1)});
    tag_fracture(m, {{Vec3::Zero(), Vec3(1, 0, 0), {}}});
    DirichletSpec d;
    d.all_boundary = true;
    d.value = sol.u;
    DisplacementDofMap map = build_dof_map(m, d);
    OperatorCache cache = build_operator_cache(m, map);
    h.push_back(2.0 / n);
    w.push_back(adjoint_consistency(cache, sol.stress,
                                    [&](const Vec3& x) { return Vec3(-sol.body_force(x)); }));
  }
  CHECK(fit_slope(h, w) >= 0.9);
}
