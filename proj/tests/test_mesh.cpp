#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "polyfrac/mesh.hpp"

using namespace polyfrac;

namespace {

PolytopalMesh cube_mesh(int n) {
  return generate_cartesian({n, n, n}, {Vec3(-1, -1, -1), Vec3(1, 1, 1)});
}

PolytopalMesh fractured_cube(int n) {
  PolytopalMesh m = cube_mesh(n);
  tag_fracture(m, {{Vec3::Zero(), Vec3(1, 0, 0), {}}});
  return m;
}

}  // namespace

TEST_CASE("single cube geometry and closure identity") {
  PolytopalMesh m = generate_cartesian({1, 1, 1}, {Vec3(0, 0, 0), Vec3(1, 1, 1)});
  REQUIRE(m.n_cells() == 1);
  CHECK(m.cells[0].volume == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(m.cells[0].diam == doctest::Approx(std::sqrt(3.0)).epsilon(1e-13));
  CHECK(m.n_faces() == 6);
  CHECK(m.max_cell_closure_defect() <= 1e-12);
  CHECK(m.max_face_closure_defect() <= 1e-12);
}

TEST_CASE("unit square in 2D") {
  PolytopalMesh m = generate_cartesian({1, 1, 1}, {Vec3(0, 0, 0), Vec3(1, 1, 0)});
  REQUIRE(m.dim == 2);
  REQUIRE(m.n_cells() == 1);
  CHECK(m.cells[0].volume == doctest::Approx(1.0));
  REQUIRE(m.n_faces() == 4);
  for (const auto& F : m.faces) CHECK(F.area == doctest::Approx(1.0));
  CHECK(m.max_cell_closure_defect() <= 1e-12);
}

TEST_CASE("2x1x1 grid connectivity") {
  PolytopalMesh m = generate_cartesian({2, 1, 1}, {Vec3(0, 0, 0), Vec3(2, 1, 1)});
  REQUIRE(m.n_cells() == 2);
  int interior = 0;
  for (const auto& F : m.faces) interior += F.interior();
  CHECK(interior == 1);
  CHECK(m.cells[0].volume == doctest::Approx(1.0));
  CHECK(m.cells[1].volume == doctest::Approx(1.0));
}

TEST_CASE("fracture tagging on the 2-cell mesh") {
  PolytopalMesh m = generate_cartesian({2, 1, 1}, {Vec3(0, 0, 0), Vec3(2, 1, 1)});
  tag_fracture(m, {{Vec3(1, 0, 0), Vec3(1, 0, 0), {}}});
  REQUIRE(m.fracture_faces.size() == 1);
  const Face& F = m.faces[m.fracture_faces[0]];
  CHECK(F.normal.dot(Vec3(1, 0, 0)) == doctest::Approx(1.0));
  // K_plus sees n+ as outward: that is the left cell (x in [0,1])
  CHECK(m.cells[F.cells[0]].centroid.x() == doctest::Approx(0.5));
  CHECK(m.cells[F.cells[1]].centroid.x() == doctest::Approx(1.5));
  CHECK(m.outward_normal(F.cells[0], m.fracture_faces[0]).dot(F.normal) == doctest::Approx(1.0));
}

TEST_CASE("4^3 mesh with the non-immersed midplane fracture") {
  PolytopalMesh m = fractured_cube(4);
  CHECK(m.fracture_faces.size() == 16);
  CHECK(m.n_fracture_components == 1);

  // duplicated vertices: every vertex of the fracture closure (5x5 plane grid)
  int duplicated = 0;
  for (int v = 0; v < m.n_vertices(); ++v)
    if (m.vertex_classes[v].size() == 2) ++duplicated;
  CHECK(duplicated == 25);

  // against the brute-force flood fill
  for (int v = 0; v < m.n_vertices(); ++v) {
    auto ref = oracles::side_classes_flood(m, v);
    REQUIRE(m.vertex_classes[v].size() == ref.size());
    for (const auto& sc : m.vertex_classes[v]) {
      std::set<int> mine(sc.cells.begin(), sc.cells.end());
      bool found = false;
      for (const auto& r : ref) found |= (r == mine);
      CHECK(found);
    }
  }
}

TEST_CASE("cross-shaped two-plane network splits into two components") {
  PolytopalMesh m = cube_mesh(2);
  tag_fracture(m, {{Vec3::Zero(), Vec3(1, 0, 0), {}}, {Vec3::Zero(), Vec3(0, 1, 0), {}}});
  CHECK(m.fracture_faces.size() == 8);
  CHECK(m.n_fracture_components == 2);
}

TEST_CASE("side classes: interior, off-fracture and tip vertices") {
  PolytopalMesh m = fractured_cube(4);
  int interior_on_gamma = -1, off_gamma = -1;
  for (int v = 0; v < m.n_vertices(); ++v) {
    const Vec3& x = m.vertices[v];
    bool bdry = std::abs(std::abs(x.x()) - 1) < 1e-12 || std::abs(std::abs(x.y()) - 1) < 1e-12 ||
                std::abs(std::abs(x.z()) - 1) < 1e-12;
    if (std::abs(x.x()) < 1e-12 && !bdry && interior_on_gamma < 0) interior_on_gamma = v;
    if (std::abs(x.x()) > 0.1 && off_gamma < 0) off_gamma = v;
  }
  REQUIRE(interior_on_gamma >= 0);
  REQUIRE(off_gamma >= 0);
  CHECK(m.vertex_classes[interior_on_gamma].size() == 2);
  CHECK(m.vertex_classes[off_gamma].size() == 1);
  CHECK(m.vertex_classes[off_gamma][0].cells.size() == m.vertex_cells[off_gamma].size());

  // immersed 2D fracture: the tip vertex keeps a single class
  PolytopalMesh m2 = generate_cartesian({4, 4, 1}, {Vec3(0, 0, 0), Vec3(4, 4, 0)});
  FracturePlane pl;
  pl.origin = Vec3(0, 2, 0);
  pl.normal = Vec3(0, 1, 0);
  pl.polygon = {Vec3(0, 2, 0), Vec3(2, 2, 0)};
  tag_fracture(m2, {pl});
  REQUIRE(m2.fracture_faces.size() == 2);
  int tip = -1, inner = -1;
  for (int v = 0; v < m2.n_vertices(); ++v) {
    if ((m2.vertices[v] - Vec3(2, 2, 0)).norm() < 1e-12) tip = v;
    if ((m2.vertices[v] - Vec3(1, 2, 0)).norm() < 1e-12) inner = v;
  }
  REQUIRE(tip >= 0);
  REQUIRE(inner >= 0);
  CHECK(m2.vertex_classes[tip].size() == 1);
  CHECK(m2.vertex_classes[inner].size() == 2);
}

TEST_CASE("side classes are orientation independent") {
  PolytopalMesh a = cube_mesh(4);
  PolytopalMesh b = cube_mesh(4);
  tag_fracture(a, {{Vec3::Zero(), Vec3(1, 0, 0), {}}});
  tag_fracture(b, {{Vec3::Zero(), Vec3(-1, 0, 0), {}}});
  REQUIRE(a.n_vertices() == b.n_vertices());
  for (int v = 0; v < a.n_vertices(); ++v) {
    REQUIRE(a.vertex_classes[v].size() == b.vertex_classes[v].size());
    std::set<std::set<int>> pa, pb;
    for (const auto& sc : a.vertex_classes[v]) pa.insert({sc.cells.begin(), sc.cells.end()});
    for (const auto& sc : b.vertex_classes[v]) pb.insert({sc.cells.begin(), sc.cells.end()});
    CHECK(pa == pb);
  }
}

TEST_CASE("tet generator: conforming Kuhn split") {
  PolytopalMesh m = generate_tet({2, 2, 2}, {Vec3(-1, -1, -1), Vec3(1, 1, 1)});
  CHECK(m.n_cells() == 48);
  double vol = 0;
  for (const auto& K : m.cells) vol += K.volume;
  CHECK(vol == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(m.max_cell_closure_defect() <= 1e-12);
  tag_fracture(m, {{Vec3::Zero(), Vec3(1, 0, 0), {}}});
  CHECK(m.fracture_faces.size() == 8);  // 2x2 plane quads split into triangles
}

TEST_CASE("perturbed hexa meshes") {
  std::vector<FracturePlane> planes = {{Vec3::Zero(), Vec3(1, 0, 0), {}}};
  Box box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};

  SUBCASE("amplitude zero reproduces the Cartesian mesh") {
    PolytopalMesh p = generate_perturbed_hexa({4, 4, 4}, box, 0.0, NonPlanarRepair::Cut, 7, planes);
    PolytopalMesh c = generate_cartesian({4, 4, 4}, box);
    REQUIRE(p.n_cells() == c.n_cells());
    REQUIRE(p.n_faces() == c.n_faces());
    for (int i = 0; i < p.n_cells(); ++i)
      CHECK(p.cells[i].volume == doctest::Approx(c.cells[i].volume));
  }

  SUBCASE("cut mode: all faces planar, fracture faces stay axis-aligned squares") {
    PolytopalMesh p =
        generate_perturbed_hexa({4, 4, 4}, box, 0.25 * 0.5, NonPlanarRepair::Cut, 7, planes);
    for (const auto& F : p.faces) CHECK(F.planar);
    tag_fracture(p, {planes});
    CHECK(p.fracture_faces.size() == 16);
    for (int f : p.fracture_faces) {
      const Face& F = p.faces[f];
      CHECK(F.verts.size() == 4);
      CHECK(std::abs(F.normal.dot(Vec3(1, 0, 0))) == doctest::Approx(1.0));
      CHECK(F.area == doctest::Approx(0.25));
    }
    CHECK(p.max_cell_closure_defect() <= 1e-12);
  }

  SUBCASE("bary mode keeps non-planar faces and flags them") {
    PolytopalMesh p =
        generate_perturbed_hexa({4, 4, 4}, box, 0.25 * 0.5, NonPlanarRepair::Bary, 7, planes);
    int nonplanar = 0;
    for (const auto& F : p.faces) nonplanar += !F.planar;
    CHECK(nonplanar > 0);
    CHECK(p.max_cell_closure_defect() <= 1e-12);
    tag_fracture(p, {planes});
    for (int f : p.fracture_faces) CHECK(p.faces[f].planar);
  }

  SUBCASE("overly large amplitude is rejected") {
    CHECK_THROWS(generate_perturbed_hexa({4, 4, 4}, box, 0.3, NonPlanarRepair::Cut, 7, planes));
  }
}

TEST_CASE("graded triangular mesh resolves the fracture by equal edges") {
  GradedTriOptions opts;
  opts.hmin = 2.0 / 100;
  opts.base_cells = 125;
  Box box{Vec3(-160, -160, 0), Vec3(160, 160, 0)};
  PolytopalMesh m = generate_graded_triangular(box, 1.0, opts);
  for (const auto& K : m.cells) CHECK(K.verts.size() == 3);
  FracturePlane pl;
  pl.origin = Vec3::Zero();
  pl.normal = Vec3(0, 1, 0);
  pl.polygon = {Vec3(-1, 0, 0), Vec3(1, 0, 0)};
  tag_fracture(m, {pl});
  CHECK(m.fracture_faces.size() == 100);
  for (int f : m.fracture_faces) CHECK(m.faces[f].area == doctest::Approx(0.02).epsilon(1e-9));
  // tips keep a single class, interior fracture vertices two
  int tip = -1, inner = -1;
  for (int v = 0; v < m.n_vertices(); ++v) {
    if ((m.vertices[v] - Vec3(1, 0, 0)).norm() < 1e-12) tip = v;
    if ((m.vertices[v] - Vec3(0, 0, 0)).norm() < 1e-12) inner = v;
  }
  REQUIRE(tip >= 0);
  REQUIRE(inner >= 0);
  CHECK(m.vertex_classes[tip].size() == 1);
  CHECK(m.vertex_classes[inner].size() == 2);
  auto reg = m.regularity();
  CHECK(reg.min_inradius_ratio > 0.05);
  CHECK(reg.min_cell_volume > 0);
}

TEST_CASE("build errors") {
  // non-manifold: three unit cells sharing one face
  std::vector<Vec3> coords = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                              {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
                              {0, 0, 2}, {1, 0, 2}, {1, 1, 2}, {0, 1, 2},
                              {0, 0, 3}, {1, 0, 3}, {1, 1, 3}, {0, 1, 3}};
  auto hexa = [](int base) {
    int o = base;
    std::vector<std::vector<int>> f = {
        {o + 0, o + 3, o + 2, o + 1}, {o + 4, o + 5, o + 6, o + 7},
        {o + 0, o + 1, o + 5, o + 4}, {o + 1, o + 2, o + 6, o + 5},
        {o + 2, o + 3, o + 7, o + 6}, {o + 3, o + 0, o + 4, o + 7}};
    return f;
  };
  auto cells = std::vector<std::vector<std::vector<int>>>{hexa(0), hexa(4), hexa(4)};
  CHECK_THROWS_WITH_AS(static_cast<void>(build_connectivity(cells, coords, 3)),
                       doctest::Contains("non-manifold"), std::runtime_error);

  // fracture plane hitting no faces
  PolytopalMesh m = cube_mesh(2);
  CHECK_THROWS(tag_fracture(m, {{Vec3(0.31, 0, 0), Vec3(1, 0, 0), {}}}));
}
