// Discrete displacement space (side-dependent nodal blocks plus one bubble
// block per fracture face on the plus side) and the face-wise constant
// multiplier space, with Dirichlet elimination by prescribed values.

#ifndef POLYFRAC_DOF_HPP
#define POLYFRAC_DOF_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "polyfrac/mesh.hpp"

namespace polyfrac {

// Signed scalar dof id: idx >= 0 addresses the free vector, idx < 0 addresses
// slot (-1 - idx) of the prescribed-value vector.
inline bool dof_is_free(int sidx) { return sidx >= 0; }
inline int dof_presc_slot(int sidx) { return -1 - sidx; }

struct NodalBlock {
  std::array<int, 3> comp{-1, -1, -1};  // signed ids, [0, dim)
};

struct PointConstraint {
  int vertex;
  int comp;
  double value = 0.0;
};

struct DirichletSpec {
  bool all_boundary = false;
  std::vector<int> tags;  // boundary tag ids
  // prescribed value at (point, one-sided reference point); null = zero
  std::function<Vec3(const Vec3&, const Vec3&)> value;
  std::vector<PointConstraint> points;
};

class DisplacementDofMap {
public:
  int dim = 3;
  std::vector<std::vector<NodalBlock>> blocks;  // [vertex][class]
  std::vector<int> bubble_start;                // free index of bubble block, by fracture-face order
  std::vector<double> presc_values;
  int n_free = 0;

  int n_presc() const { return static_cast<int>(presc_values.size()); }

  const NodalBlock& block(int vertex, int cls) const { return blocks[vertex][cls]; }
  const NodalBlock& block_of_cell(const PolytopalMesh& m, int cell, int vertex) const {
    return blocks[vertex][m.class_of(cell, vertex)];
  }
};

DisplacementDofMap build_dof_map(const PolytopalMesh& mesh, const DirichletSpec& dirichlet);

struct DisplacementVector {
  Eigen::VectorXd free;
  Eigen::VectorXd presc;

  double at(int sidx) const { return dof_is_free(sidx) ? free[sidx] : presc[dof_presc_slot(sidx)]; }
  bool finite() const { return free.allFinite() && presc.allFinite(); }
};

DisplacementVector make_displacement(const DisplacementDofMap& map);

/// One d-vector per fracture face, ordered like mesh.fracture_faces.
struct MultiplierVector {
  int dim = 3;
  Eigen::VectorXd values;  // dim entries per face

  Vec3 at(int local_face) const {
    Vec3 v = Vec3::Zero();
    for (int c = 0; c < dim; ++c) v[c] = values[dim * local_face + c];
    return v;
  }
  void set(int local_face, const Vec3& v) {
    for (int c = 0; c < dim; ++c) values[dim * local_face + c] = v[c];
  }
  int n_faces() const { return static_cast<int>(values.size()) / dim; }
};

MultiplierVector make_multiplier(const PolytopalMesh& mesh);

/// Face-wise projection onto the dual cone: normal part clipped to [0, inf),
/// tangential part radially projected onto the ball of radius g. Idempotent.
MultiplierVector project_cone(const PolytopalMesh& mesh, const MultiplierVector& lambda,
                              const Eigen::VectorXd& g);

/// Split helpers against the plus-side normal of the face's component.
double multiplier_normal(const PolytopalMesh& mesh, const MultiplierVector& lambda, int local_face);
Vec3 multiplier_tangential(const PolytopalMesh& mesh, const MultiplierVector& lambda, int local_face);

}  // namespace polyfrac

#endif
