#include "polyfrac/harness.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "polyfrac/quadrature.hpp"

namespace polyfrac {

MeshFamily parse_family(const std::string& name) {
  if (name == "cartesian") return MeshFamily::Cartesian;
  if (name == "tet") return MeshFamily::Tet;
  if (name == "hexa_cut") return MeshFamily::HexaCut;
  if (name == "hexa_bary") return MeshFamily::HexaBary;
  if (name == "triangular2d") return MeshFamily::Triangular2D;
  throw std::runtime_error("unknown mesh family: " + name);
}

Study parse_study(const std::string& name) {
  if (name == "compression2d") return Study::Compression2D;
  if (name == "manufactured3d") return Study::Manufactured3D;
  throw std::runtime_error("unknown study: " + name);
}

PolytopalMesh manufactured3d_mesh(MeshFamily family, int n, double perturbation,
                                  std::uint64_t seed) {
  Box box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  FracturePlane plane;
  plane.origin = Vec3::Zero();
  plane.normal = Vec3(1, 0, 0);
  PolytopalMesh mesh;
  switch (family) {
    case MeshFamily::Cartesian:
      mesh = generate_cartesian({n, n, n}, box);
      break;
    case MeshFamily::Tet:
      mesh = generate_tet({n, n, n}, box);
      break;
    case MeshFamily::HexaCut:
    case MeshFamily::HexaBary: {
      double amp = perturbation * 2.0 / n;
      mesh = generate_perturbed_hexa(
          {n, n, n}, box, amp,
          family == MeshFamily::HexaCut ? NonPlanarRepair::Cut : NonPlanarRepair::Bary, seed,
          {plane});
      break;
    }
    default:
      throw std::runtime_error("family not valid for the 3D study");
  }
  tag_fracture(mesh, {plane});
  set_boundary_tags(mesh, [](const Face&) { return "dirichlet"; });
  return mesh;
}

namespace {

void write_level_vtu(const PolytopalMesh& mesh, const OperatorCache& cache,
                     const DisplacementVector& u, const MultiplierVector& lambda,
                     const std::string& dir, int level) {
  std::filesystem::create_directories(dir);
  std::vector<CellVectorField> fields;
  fields.push_back({"displacement", [&](int c, const Vec3& x) {
                      return cell_reconstruction(cache, c, u, x);
                    }});
  write_vtu(mesh, dir + "/volume_" + std::to_string(level) + ".vtu", fields);

  const int d = mesh.dim;
  FaceData jump_data{"jump", 3, {}}, lam_data{"multiplier", 3, {}}, lamn_data{"lambda_n", 1, {}};
  for (std::size_t lf = 0; lf < mesh.fracture_faces.size(); ++lf) {
    Vec3 j = face_jump(cache, mesh.fracture_faces[lf], u);
    Vec3 l = lambda.at(static_cast<int>(lf));
    const Vec3& n = mesh.component_normal[mesh.faces[mesh.fracture_faces[lf]].component];
    for (int c = 0; c < 3; ++c) {
      jump_data.values.push_back(c < d ? j[c] : 0.0);
      lam_data.values.push_back(c < d ? l[c] : 0.0);
    }
    lamn_data.values.push_back(l.dot(n));
  }
  write_fracture_vtu(mesh, dir + "/fracture_" + std::to_string(level) + ".vtu",
                     {jump_data, lam_data, lamn_data});
}

}  // namespace

StudyResult run_manufactured3d(const StudyConfig& config) {
  AnalyticalSolution sol = manufactured3d_solution();
  StudyResult result;
  result.report.columns = {"u", "jump", "grad", "lambda_n"};

  for (std::size_t li = 0; li < config.levels.size(); ++li) {
    int n = config.levels[li];
    PolytopalMesh mesh = manufactured3d_mesh(config.family, n, config.perturbation, config.seed);

    DirichletSpec dirichlet;
    dirichlet.all_boundary = true;
    dirichlet.value = sol.u;
    DisplacementDofMap dofs = build_dof_map(mesh, dirichlet);
    OperatorCache cache = build_operator_cache(mesh, dofs);

    SystemOptions sopts;
    sopts.material = [&](const Vec3&) { return sol.mat; };
    sopts.body_force = sol.body_force;
    sopts.tresca_g = sol.tresca_g;
    sopts.beta = config.beta;
    SaddleSystem sys = build_saddle_system(cache, sopts);

    DisplacementVector u = make_displacement(dofs);
    MultiplierVector lambda = make_multiplier(mesh);
    SolveReport rep = semismooth_newton(sys, u, lambda, config.newton);

    LevelResult lr;
    lr.solve = rep;
    lr.kkt = check_kkt(sys, u.free, lambda);
    lr.errors = error_norms(cache, u, lambda, sol);
    lr.n_cells = mesh.n_cells();
    lr.h = std::pow(static_cast<double>(mesh.n_cells()), -1.0 / 3.0);

    ConvergenceReport::Row row;
    row.level = n;
    row.h = lr.h;
    row.n_cells = lr.n_cells;
    row.values = {lr.errors.u_rel, lr.errors.jump_rel, lr.errors.grad_rel, lr.errors.lamn_rel};
    result.report.rows.push_back(row);
    result.all_converged = result.all_converged && rep.converged;
    result.worst_kkt = std::max(result.worst_kkt, lr.kkt.max_normalized());
    result.levels.push_back(std::move(lr));

    if (!config.out_dir.empty() && config.write_vtu)
      write_level_vtu(mesh, cache, u, lambda, config.out_dir, n);
  }
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    export_csv(result.report, config.out_dir + "/manufactured3d.csv");
  }
  return result;
}

double compression_lambda_band_deviation(const PolytopalMesh& mesh, const OperatorCache& cache,
                                         const SaddleSystem& sys, const MultiplierVector& lambda,
                                         const CompressionSetup& setup, double band) {
  (void)cache;
  (void)sys;
  double worst = 0;
  for (std::size_t lf = 0; lf < mesh.fracture_faces.size(); ++lf) {
    const Face& F = mesh.faces[mesh.fracture_faces[lf]];
    double arc = (F.centroid.x() + setup.ell) / (2.0 * setup.ell);
    if (arc < band || arc > 1.0 - band) continue;
    const Vec3& n = mesh.component_normal[F.component];
    double ln = lambda.at(static_cast<int>(lf)).dot(n);
    worst = std::max(worst, std::abs(ln - setup.lambda_n()) / setup.lambda_n());
  }
  return worst;
}

StudyResult run_compression2d(const StudyConfig& config) {
  if (config.family != MeshFamily::Triangular2D)
    throw std::runtime_error("the compression study runs on the triangular2d family");
  CompressionSetup setup;
  setup.profile = config.slip_profile;
  const double L = 160.0;  // 320 m square
  StudyResult result;
  result.report.columns = {"slip", "lambda_n"};

  for (std::size_t li = 0; li < config.levels.size(); ++li) {
    int nfaces = config.levels[li];
    if (nfaces % 100 != 0 || (nfaces / 100) * 100 != nfaces)
      throw std::runtime_error("fracture face counts must be multiples of 100");
    GradedTriOptions gopts;
    gopts.hmin = 2.0 * setup.ell / nfaces;
    gopts.base_cells = 125 * (nfaces / 100);
    gopts.grading = 1.0;
    Box box{Vec3(-L, -L, 0), Vec3(L, L, 0)};
    PolytopalMesh mesh = generate_graded_triangular(box, setup.ell, gopts);

    FracturePlane plane;
    plane.origin = Vec3::Zero();
    plane.normal = Vec3(0, 1, 0);
    plane.polygon = {Vec3(-setup.ell, 0, 0), Vec3(setup.ell, 0, 0)};
    tag_fracture(mesh, {plane});
    set_boundary_tags(mesh, [](const Face&) { return "remote"; });

    // rigid modes: clamp the node where the fracture line meets the left
    // boundary, and the vertical component where it meets the right boundary
    auto nearest_vertex = [&](const Vec3& p) {
      int best = 0;
      double dist = 1e300;
      for (int v = 0; v < mesh.n_vertices(); ++v) {
        double d2 = (mesh.vertices[v] - p).squaredNorm();
        if (d2 < dist) { dist = d2; best = v; }
      }
      return best;
    };
    int va = nearest_vertex(Vec3(-L, 0, 0));
    int vb = nearest_vertex(Vec3(L, 0, 0));
    DirichletSpec dirichlet;
    dirichlet.points = {{va, 0, 0.0}, {va, 1, 0.0}, {vb, 1, 0.0}};
    DisplacementDofMap dofs = build_dof_map(mesh, dirichlet);
    OperatorCache cache = build_operator_cache(mesh, dofs);

    Mat3 remote = setup.remote_stress();
    SystemOptions sopts;
    Material mat = setup.material();
    sopts.material = [mat](const Vec3&) { return mat; };
    sopts.tresca_g = [&](const Vec3&) { return setup.tresca_g(); };
    sopts.tractions = {{mesh.boundary_tag_id("remote"),
                        [remote](const Vec3&, const Vec3& n) { return Vec3(remote * n); }}};
    sopts.beta = config.beta;
    SaddleSystem sys = build_saddle_system(cache, sopts);

    DisplacementVector u = make_displacement(dofs);
    MultiplierVector lambda = make_multiplier(mesh);
    SolveReport rep = semismooth_newton(sys, u, lambda, config.newton);

    // study-specific errors on the fracture only
    AnalyticalSolution frac_only;
    frac_only.u = [](const Vec3&, const Vec3&) { return Vec3::Zero(); };
    frac_only.grad_u = [](const Vec3&, const Vec3&) { return Mat3::Zero(); };
    frac_only.jump = [&](const Vec3& x) {
      double arc = x.x() + setup.ell;
      return Vec3(setup.slip(arc), 0, 0);  // magnitude only; carried tangentially
    };
    frac_only.multiplier = [&](const Vec3&) {
      return Vec3(0, setup.lambda_n(), 0);  // n+ = e_y
    };
    ErrorOptions eopts;
    eopts.include_lambda = [&](const Vec3& x) {
      double arc = (x.x() + setup.ell) / (2.0 * setup.ell);
      return arc >= 0.05 && arc <= 0.95;
    };

    // face-centroid sampled fracture errors, matching the volume metric
    double slip_err = 0, slip_ref = 0, lamn_err = 0, lamn_ref = 0;
    for (std::size_t lf = 0; lf < mesh.fracture_faces.size(); ++lf) {
      int f = mesh.fracture_faces[lf];
      const Face& F = mesh.faces[f];
      const Vec3& n = mesh.component_normal[F.component];
      Vec3 jd = face_jump(cache, f, u);
      double sd = (jd - jd.dot(n) * n).norm();
      double se = setup.slip(F.centroid.x() + setup.ell);
      slip_err += F.area * (se - sd) * (se - sd);
      slip_ref += F.area * se * se;
      if (eopts.include_lambda(F.centroid)) {
        double ln = lambda.at(static_cast<int>(lf)).dot(n);
        lamn_err += F.area * (ln - setup.lambda_n()) * (ln - setup.lambda_n());
        lamn_ref += F.area * setup.lambda_n() * setup.lambda_n();
      }
    }

    LevelResult lr;
    lr.solve = rep;
    lr.kkt = check_kkt(sys, u.free, lambda);
    lr.errors.slip_abs = std::sqrt(slip_err);
    lr.errors.slip_rel = std::sqrt(slip_err / slip_ref);
    lr.errors.lamn_abs = std::sqrt(lamn_err);
    lr.errors.lamn_rel = std::sqrt(lamn_err / lamn_ref);
    lr.n_cells = mesh.n_cells();
    lr.h = 2.0 * setup.ell / nfaces;

    ConvergenceReport::Row row;
    row.level = nfaces;
    row.h = lr.h;
    row.n_cells = lr.n_cells;
    row.values = {lr.errors.slip_rel, lr.errors.lamn_rel};
    result.report.rows.push_back(row);
    result.all_converged = result.all_converged && rep.converged;
    result.worst_kkt = std::max(result.worst_kkt, lr.kkt.max_normalized());
    result.levels.push_back(std::move(lr));

    if (!config.out_dir.empty() && config.write_vtu)
      write_level_vtu(mesh, cache, u, lambda, config.out_dir, nfaces);
  }
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    export_csv(result.report, config.out_dir + "/compression2d.csv");
  }
  return result;
}

StudyResult run_study(const StudyConfig& config) {
  return config.study == Study::Manufactured3D ? run_manufactured3d(config)
                                               : run_compression2d(config);
}

}  // namespace polyfrac
