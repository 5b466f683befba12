#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "polyfrac/harness.hpp"

using namespace polyfrac;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("EOC of textbook error sequences") {
  ConvergenceReport rep;
  rep.columns = {"e"};
  rep.rows = {{1, 1.0, 10, {1.0}}, {2, 0.5, 100, {0.5}}};
  CHECK(rep.eoc()[0][0] == doctest::Approx(1.0));
  rep.rows[1].values = {0.25};
  CHECK(rep.eoc()[0][0] == doctest::Approx(2.0));
}

TEST_CASE("CSV reports round-trip bit-identically") {
  TempDir tmp("polyfrac_csv_test");
  ConvergenceReport rep;
  rep.columns = {"grad", "jump"};
  rep.rows = {{8, 0.25, 512, {0.125, 0.0625}},
              {16, 0.125, 4096, {0.06251234567890123, 0.015625}}};
  std::string p1 = (tmp.path / "a.csv").string(), p2 = (tmp.path / "b.csv").string();
  export_csv(rep, p1);
  ConvergenceReport back = read_csv_report(p1);
  REQUIRE(back.columns == rep.columns);
  REQUIRE(back.rows.size() == rep.rows.size());
  export_csv(back, p2);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("mesh JSON round trip") {
  TempDir tmp("polyfrac_json_test");
  PolytopalMesh m = generate_cartesian({2, 2, 2}, {Vec3(-1, -1, -1), Vec3(1, 1, 1)});
  std::vector<FracturePlane> planes = {{Vec3::Zero(), Vec3(1, 0, 0), {}}};
  tag_fracture(m, planes);
  set_boundary_tags(m, [](const Face& F) {
    return std::abs(F.centroid.x() + 1) < 1e-12 ? "left" : "rest";
  });
  std::string path = (tmp.path / "mesh.json").string();
  write_mesh_json(m, planes, path);
  PolytopalMesh back = read_mesh_json(path);
  CHECK(back.n_cells() == m.n_cells());
  CHECK(back.n_faces() == m.n_faces());
  CHECK(back.fracture_faces == m.fracture_faces);
  CHECK(back.boundary_tag_id("left") > 0);
  double vol = 0, volb = 0;
  for (const auto& K : m.cells) vol += K.volume;
  for (const auto& K : back.cells) volb += K.volume;
  CHECK(vol == doctest::Approx(volb).epsilon(1e-14));
}

TEST_CASE("VTU writers emit well-formed grids") {
  TempDir tmp("polyfrac_vtu_test");
  PolytopalMesh m = generate_cartesian({2, 2, 2}, {Vec3(-1, -1, -1), Vec3(1, 1, 1)});
  tag_fracture(m, {{Vec3::Zero(), Vec3(1, 0, 0), {}}});
  std::string vp = (tmp.path / "vol.vtu").string();
  write_vtu(m, vp, {{"zero", [](int, const Vec3&) { return Vec3::Zero(); }}});
  std::string body = slurp(vp);
  CHECK(body.find("<VTKFile") != std::string::npos);
  CHECK(body.find("UnstructuredGrid") != std::string::npos);
  CHECK(body.find("faceoffsets") != std::string::npos);

  FaceData jn{"lambda_n", 1, std::vector<double>(m.fracture_faces.size(), 1.0)};
  std::string fp = (tmp.path / "frac.vtu").string();
  write_fracture_vtu(m, fp, {jn});
  CHECK(slurp(fp).find("lambda_n") != std::string::npos);

  // 2D polygons as well
  PolytopalMesh m2 = generate_cartesian({2, 2, 1}, {Vec3(0, 0, 0), Vec3(1, 1, 0)});
  std::string vp2 = (tmp.path / "vol2.vtu").string();
  write_vtu(m2, vp2);
  CHECK(slurp(vp2).find("<VTKFile") != std::string::npos);
}

TEST_CASE("matrix coordinate dump") {
  TempDir tmp("polyfrac_mtx_test");
  SpMat M(2, 2);
  std::vector<Eigen::Triplet<double>> t = {{0, 0, 2.0}, {1, 0, -1.0}};
  M.setFromTriplets(t.begin(), t.end());
  std::string path = (tmp.path / "m.txt").string();
  dump_matrix_coordinate(M, path);
  std::string body = slurp(path);
  CHECK(body.find("2 2 2") == 0);
  CHECK(body.find("-1") != std::string::npos);
}

TEST_CASE("study runs are deterministic") {
  TempDir tmp("polyfrac_det_test");
  StudyConfig cfg;
  cfg.study = Study::Manufactured3D;
  cfg.family = MeshFamily::Cartesian;
  cfg.levels = {2};
  cfg.write_vtu = false;
  cfg.out_dir = (tmp.path / "a").string();
  StudyResult r1 = run_manufactured3d(cfg);
  cfg.out_dir = (tmp.path / "b").string();
  StudyResult r2 = run_manufactured3d(cfg);
  REQUIRE(r1.all_converged);
  CHECK(slurp((tmp.path / "a" / "manufactured3d.csv").string()) ==
        slurp((tmp.path / "b" / "manufactured3d.csv").string()));
}

TEST_CASE("hexa study mesh keeps the fracture planar under perturbation") {
  PolytopalMesh m = manufactured3d_mesh(MeshFamily::HexaCut, 4, 0.25, 3);
  CHECK(m.fracture_faces.size() == 16);
  for (int f : m.fracture_faces) {
    CHECK(m.faces[f].planar);
    CHECK(std::abs(m.faces[f].normal.dot(Vec3(1, 0, 0))) == doctest::Approx(1.0));
  }
}
