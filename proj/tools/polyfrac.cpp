// polyfrac command line: study runner, mesh generation, verification
// diagnostics.
//
//   polyfrac run <study> --family <f> --levels a,b,c --out dir [--beta --tol --seed]
//   polyfrac mesh gen --family <f> --n N [--frac-faces N] --out mesh.json
//   polyfrac verify {infsup|korn|consistency} --mesh file [--no-bubbles]
//
// Exit code 0 iff every check of the chosen command passes.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "polyfrac/harness.hpp"

using namespace polyfrac;

namespace {

int cmd_run(const std::string& study, const std::string& family, std::vector<int> levels,
            const std::string& out, double beta, double tol, std::uint64_t seed,
            const std::string& slip_profile, double perturbation, bool no_vtu) {
  StudyConfig cfg;
  cfg.study = parse_study(study);
  cfg.family = parse_family(family);
  cfg.levels = std::move(levels);
  cfg.out_dir = out;
  cfg.beta = beta;
  cfg.newton.tol = tol;
  cfg.seed = seed;
  cfg.perturbation = perturbation;
  cfg.slip_profile = slip_profile == "elliptic"
                         ? SlipProfile::Elliptic
                         : slip_profile == "elliptic_plane_strain" ? SlipProfile::EllipticPlaneStrain
                                                                   : SlipProfile::Linear;
  cfg.write_vtu = !no_vtu;

  StudyResult res = run_study(cfg);
  auto eoc = res.report.eoc();
  std::printf("level        h     n_cells");
  for (const auto& c : res.report.columns) std::printf(" %12s %8s", c.c_str(), "eoc");
  std::printf("\n");
  for (std::size_t i = 0; i < res.report.rows.size(); ++i) {
    const auto& r = res.report.rows[i];
    std::printf("%5d %8.3g %11ld", r.level, r.h, r.n_cells);
    for (std::size_t c = 0; c < r.values.size(); ++c) {
      std::printf(" %12.5g", r.values[c]);
      if (i == 0)
        std::printf(" %8s", "-");
      else
        std::printf(" %8.3f", eoc[i - 1][c]);
    }
    std::printf("\n");
  }
  for (std::size_t i = 0; i < res.levels.size(); ++i) {
    const auto& lr = res.levels[i];
    std::printf("level %d: newton %s in %d iterations, kkt %.3e\n", res.report.rows[i].level,
                lr.solve.converged ? "converged" : "FAILED", lr.solve.iterations,
                lr.kkt.max_normalized());
  }
  bool ok = res.all_converged && res.worst_kkt <= 10 * cfg.newton.tol;
  std::printf("%s\n", ok ? "OK" : "CHECKS FAILED");
  return ok ? 0 : 1;
}

int cmd_mesh_gen(const std::string& family, int n, int frac_faces, double perturbation,
                 std::uint64_t seed, const std::string& out) {
  MeshFamily fam = parse_family(family);
  std::vector<FracturePlane> planes;
  PolytopalMesh mesh;
  if (fam == MeshFamily::Triangular2D) {
    CompressionSetup setup;
    GradedTriOptions gopts;
    gopts.hmin = 2.0 * setup.ell / frac_faces;
    gopts.base_cells = 125 * (frac_faces / 100);
    Box box{Vec3(-160, -160, 0), Vec3(160, 160, 0)};
    mesh = generate_graded_triangular(box, setup.ell, gopts);
    FracturePlane plane;
    plane.normal = Vec3(0, 1, 0);
    plane.polygon = {Vec3(-setup.ell, 0, 0), Vec3(setup.ell, 0, 0)};
    planes = {plane};
    tag_fracture(mesh, planes);
    set_boundary_tags(mesh, [](const Face&) { return "remote"; });
  } else {
    mesh = manufactured3d_mesh(fam, n, perturbation, seed);
    FracturePlane plane;
    plane.normal = Vec3(1, 0, 0);
    planes = {plane};
  }
  write_mesh_json(mesh, planes, out);
  std::printf("wrote %s: %d cells, %d faces, %zu fracture faces\n", out.c_str(), mesh.n_cells(),
              mesh.n_faces(), mesh.fracture_faces.size());
  return 0;
}

int cmd_verify(const std::string& what, const std::string& mesh_file, bool no_bubbles) {
  PolytopalMesh mesh = read_mesh_json(mesh_file);
  DirichletSpec dirichlet;
  dirichlet.all_boundary = true;
  if (what == "consistency") {
    if (mesh.dim != 3) {
      std::fprintf(stderr, "consistency check uses the 3D manufactured solution\n");
      return 2;
    }
    dirichlet.value = manufactured3d_solution().u;
  }
  DisplacementDofMap dofs = build_dof_map(mesh, dirichlet);
  OperatorCache cache = build_operator_cache(mesh, dofs);
  if (what == "infsup") {
    double c = infsup_constant(cache, !no_bubbles);
    std::printf("infsup %.6e (%s)\n", c, no_bubbles ? "without bubbles" : "with bubbles");
    return c > 0 ? 0 : 1;
  }
  if (what == "korn") {
    double c = korn_constant(cache);
    std::printf("korn %.6e\n", c);
    return c > 0 ? 0 : 1;
  }
  if (what == "consistency") {
    AnalyticalSolution sol = manufactured3d_solution();
    double cd = primal_consistency(cache, sol);
    double wd = adjoint_consistency(cache, sol.stress,
                                    [&](const Vec3& x) { return Vec3(-sol.body_force(x)); });
    std::printf("C_D %.6e  W_D %.6e\n", cd, wd);
    return 0;
  }
  std::fprintf(stderr, "unknown verify target: %s\n", what.c_str());
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bubble-stabilised polytopal contact solver"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run a convergence study");
  std::string study, family = "cartesian", out, slip_profile = "linear";
  std::vector<int> levels;
  double beta = -1.0, tol = 1e-10, perturbation = 0.25;
  std::uint64_t seed = 0;
  bool no_vtu = false;
  run->add_option("study", study, "compression2d | manufactured3d")->required();
  run->add_option("--family", family, "cartesian|tet|hexa_cut|hexa_bary|triangular2d");
  run->add_option("--levels", levels, "mesh levels")->required()->delimiter(',');
  run->add_option("--out", out, "output directory");
  run->add_option("--beta", beta, "projection scaling (<=0: face-wise default)");
  run->add_option("--tol", tol, "Newton tolerance");
  run->add_option("--seed", seed, "perturbation seed");
  run->add_option("--perturbation", perturbation, "hexa node perturbation (cell-width fraction)");
  run->add_option("--slip-profile", slip_profile, "linear | elliptic | elliptic_plane_strain");
  run->add_flag("--no-vtu", no_vtu, "skip VTU output");

  // mesh gen
  auto* mesh = app.add_subcommand("mesh", "mesh utilities");
  auto* gen = mesh->add_subcommand("gen", "generate a study mesh");
  std::string gfamily = "cartesian", gout = "mesh.json";
  int gn = 8, gfrac = 100;
  double gpert = 0.25;
  std::uint64_t gseed = 0;
  gen->add_option("--family", gfamily, "cartesian|tet|hexa_cut|hexa_bary|triangular2d");
  gen->add_option("--n", gn, "cells per axis (3D families)");
  gen->add_option("--frac-faces", gfrac, "fracture faces (triangular2d)");
  gen->add_option("--perturbation", gpert, "hexa node perturbation (cell-width fraction)");
  gen->add_option("--seed", gseed, "perturbation seed");
  gen->add_option("--out", gout, "output file")->required();

  // verify
  auto* verify = app.add_subcommand("verify", "stability / consistency diagnostics");
  std::string vwhat, vmesh;
  bool vnobub = false;
  verify->add_option("what", vwhat, "infsup | korn | consistency")->required();
  verify->add_option("--mesh", vmesh, "mesh JSON file")->required();
  verify->add_flag("--no-bubbles", vnobub, "ablate the bubble columns (infsup)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run)
      return cmd_run(study, family, levels, out, beta, tol, seed, slip_profile, perturbation,
                     no_vtu);
    if (*gen) return cmd_mesh_gen(gfamily, gn, gfrac, gpert, gseed, gout);
    if (*verify) return cmd_verify(vwhat, vmesh, vnobub);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
