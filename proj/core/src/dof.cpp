#include "polyfrac/dof.hpp"

#include <algorithm>
#include <stdexcept>

namespace polyfrac {

DisplacementDofMap build_dof_map(const PolytopalMesh& mesh, const DirichletSpec& dirichlet) {
  DisplacementDofMap map;
  map.dim = mesh.dim;

  std::vector<char> on_dirichlet(mesh.vertices.size(), 0);
  for (const auto& F : mesh.faces) {
    if (F.interior()) continue;
    bool tagged = dirichlet.all_boundary ||
                  std::find(dirichlet.tags.begin(), dirichlet.tags.end(), F.tag) !=
                      dirichlet.tags.end();
    if (!tagged) continue;
    for (int v : F.verts) on_dirichlet[v] = 1;
  }

  std::vector<std::vector<std::array<char, 3>>> pinned(mesh.vertices.size());
  std::vector<std::vector<std::array<double, 3>>> pin_val(mesh.vertices.size());
  for (std::size_t s = 0; s < mesh.vertices.size(); ++s) {
    const auto& classes = mesh.vertex_classes[s];
    pinned[s].assign(classes.size(), {0, 0, 0});
    pin_val[s].assign(classes.size(), {0.0, 0.0, 0.0});
    if (on_dirichlet[s]) {
      for (std::size_t k = 0; k < classes.size(); ++k) {
        Vec3 ref = mesh.cells[classes[k].rep_cell].centroid;
        Vec3 val = dirichlet.value ? dirichlet.value(mesh.vertices[s], ref) : Vec3::Zero();
        for (int c = 0; c < mesh.dim; ++c) {
          pinned[s][k][c] = 1;
          pin_val[s][k][c] = val[c];
        }
      }
    }
  }
  for (const auto& pc : dirichlet.points) {
    for (std::size_t k = 0; k < mesh.vertex_classes[pc.vertex].size(); ++k) {
      if (pinned[pc.vertex][k][pc.comp]) continue;  // tag elimination wins
      pinned[pc.vertex][k][pc.comp] = 1;
      pin_val[pc.vertex][k][pc.comp] = pc.value;
    }
  }

  map.blocks.resize(mesh.vertices.size());
  int next_free = 0;
  for (std::size_t s = 0; s < mesh.vertices.size(); ++s) {
    map.blocks[s].resize(mesh.vertex_classes[s].size());
    for (std::size_t k = 0; k < mesh.vertex_classes[s].size(); ++k)
      for (int c = 0; c < mesh.dim; ++c) {
        if (pinned[s][k][c]) {
          map.blocks[s][k].comp[c] = -1 - static_cast<int>(map.presc_values.size());
          map.presc_values.push_back(pin_val[s][k][c]);
        } else {
          map.blocks[s][k].comp[c] = next_free++;
        }
      }
  }
  map.bubble_start.reserve(mesh.fracture_faces.size());
  for (std::size_t f = 0; f < mesh.fracture_faces.size(); ++f) {
    map.bubble_start.push_back(next_free);
    next_free += mesh.dim;
  }
  map.n_free = next_free;
  return map;
}

DisplacementVector make_displacement(const DisplacementDofMap& map) {
  DisplacementVector v;
  v.free = Eigen::VectorXd::Zero(map.n_free);
  v.presc = Eigen::Map<const Eigen::VectorXd>(map.presc_values.data(),
                                              static_cast<long>(map.presc_values.size()));
  return v;
}

MultiplierVector make_multiplier(const PolytopalMesh& mesh) {
  MultiplierVector l;
  l.dim = mesh.dim;
  l.values = Eigen::VectorXd::Zero(mesh.dim * static_cast<int>(mesh.fracture_faces.size()));
  return l;
}

double multiplier_normal(const PolytopalMesh& mesh, const MultiplierVector& lambda, int lf) {
  const Face& F = mesh.faces[mesh.fracture_faces[lf]];
  return lambda.at(lf).dot(mesh.component_normal[F.component]);
}

Vec3 multiplier_tangential(const PolytopalMesh& mesh, const MultiplierVector& lambda, int lf) {
  const Face& F = mesh.faces[mesh.fracture_faces[lf]];
  const Vec3& n = mesh.component_normal[F.component];
  Vec3 v = lambda.at(lf);
  return v - v.dot(n) * n;
}

MultiplierVector project_cone(const PolytopalMesh& mesh, const MultiplierVector& lambda,
                              const Eigen::VectorXd& g) {
  if (g.size() != static_cast<long>(mesh.fracture_faces.size()))
    throw std::runtime_error("project_cone: g must have one entry per fracture face");
  MultiplierVector out = lambda;
  for (int lf = 0; lf < out.n_faces(); ++lf) {
    const Face& F = mesh.faces[mesh.fracture_faces[lf]];
    const Vec3& n = mesh.component_normal[F.component];
    Vec3 v = lambda.at(lf);
    double vn = std::max(0.0, v.dot(n));
    Vec3 vt = v - v.dot(n) * n;
    double nt = vt.norm();
    if (nt > g[lf]) vt *= (nt > 0 ? g[lf] / nt : 0.0);
    out.set(lf, vn * n + vt);
  }
  return out;
}

}  // namespace polyfrac
