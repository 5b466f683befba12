// Local reconstruction operators of the fully discrete scheme: barycentric
// face/cell weights, tangential face gradient and trace, displacement jump,
// cell gradient (with the triangle-fan variant for non-planar faces), affine
// cell reconstruction, stabilisation, and the discrete norms built from them.

#ifndef POLYFRAC_RECONSTRUCTION_HPP
#define POLYFRAC_RECONSTRUCTION_HPP

#include <vector>

#include <Eigen/Dense>

#include "polyfrac/dof.hpp"
#include "polyfrac/mesh.hpp"

namespace polyfrac {

enum class WeightRule { LeastNorm, FanCentroid };

/// Nonnegative weights summing to one that reproduce the centroid.
struct FaceWeights {
  Eigen::VectorXd w;  // ordered like face.verts
};
struct CellWeights {
  Eigen::VectorXd w;  // ordered like cell.verts
};

FaceWeights compute_face_weights(const PolytopalMesh& mesh, int face,
                                 WeightRule rule = WeightRule::LeastNorm);
CellWeights compute_cell_weights(const PolytopalMesh& mesh, int cell,
                                 WeightRule rule = WeightRule::LeastNorm);

/// min ||w||^2 subject to P w = t, w >= 0 (small active-set iteration).
Eigen::VectorXd least_norm_nonneg_weights(const Eigen::MatrixXd& P, const Eigen::VectorXd& t);

/// Per-cell operator bundle: local dof layout is (vertex blocks in cell.verts
/// order, then bubble blocks in ascending fracture-face order), d components
/// each.
struct CellOps {
  int cell = -1;
  int n_vert = 0, n_bub = 0, n_loc = 0;
  std::vector<int> glob;          // signed scalar dof ids, size n_loc
  std::vector<int> bubble_faces;  // global face ids, ascending
  Eigen::MatrixXd grad;           // (d*d) x n_loc; row i*d+j = (d/dx_j) of component i
  Eigen::MatrixXd stab;           // n_loc x n_loc, h_K^{d-2} included
  Eigen::VectorXd cell_w;         // n_vert vertex weights of the cell mean
  Vec3 centroid = Vec3::Zero();
  double h = 0, volume = 0;
};

/// Per-fracture-face bundle: jump map and the orthonormal face frame.
struct FracFaceOps {
  int face = -1;        // global face id
  double area = 0, h = 0;
  Vec3 normal;          // n+
  Vec3 t1, t2;          // tangent frame (t2 unused in 2D)
  Eigen::VectorXd w;    // face vertex weights, ordered like face.verts
  std::vector<NodalBlock> plus_blocks, minus_blocks;  // per face vertex
  int bubble_start = -1;                               // free index of the bubble block
};

struct OperatorCache {
  const PolytopalMesh* mesh = nullptr;
  const DisplacementDofMap* dofs = nullptr;
  WeightRule rule = WeightRule::LeastNorm;
  std::vector<CellOps> cells;
  std::vector<FracFaceOps> frac;               // ordered like mesh.fracture_faces
  std::vector<Eigen::VectorXd> face_weights;   // per face id
  int local_fracture_index(int face) const;    // -1 if not a fracture face
};

OperatorCache build_operator_cache(const PolytopalMesh& mesh, const DisplacementDofMap& dofs,
                                   WeightRule rule = WeightRule::LeastNorm);

/// Local dof values of cell K gathered from a displacement vector.
Eigen::VectorXd local_values(const OperatorCache& cache, int cell, const DisplacementVector& v);

/// Tangential face gradient (constant d x d tensor).
Mat3 face_gradient(const OperatorCache& cache, int cell, int face, const DisplacementVector& v);

/// Face average of the K-side nodal trace.
Vec3 face_average(const OperatorCache& cache, int cell, int face, const DisplacementVector& v);

/// Affine face trace evaluated at x.
Vec3 face_trace(const OperatorCache& cache, int cell, int face, const DisplacementVector& v,
                const Vec3& x);

/// Displacement jump on a fracture face (constant vector).
Vec3 face_jump(const OperatorCache& cache, int face, const DisplacementVector& v);

/// Cell gradient (constant d x d tensor; includes bubble terms and the
/// triangle-fan treatment of non-planar faces).
Mat3 cell_gradient(const OperatorCache& cache, int cell, const DisplacementVector& v);

/// Affine cell reconstruction at x, and the cellwise mean.
Vec3 cell_reconstruction(const OperatorCache& cache, int cell, const DisplacementVector& v,
                         const Vec3& x);
Vec3 cell_mean(const OperatorCache& cache, int cell, const DisplacementVector& v);

/// Local stabilisation bilinear form S_K(u, v).
double stabilisation(const OperatorCache& cache, int cell, const DisplacementVector& u,
                     const DisplacementVector& v);

/// Discrete H^1-like norm: sum_K ( |K| |grad_K v|^2 + S_K(v,v) ).
double h1_norm(const OperatorCache& cache, const DisplacementVector& v);

/// Discrete H^{1/2} / H^{-1/2} norms of face-wise constant multipliers:
/// sum_sigma h_sigma^{-1} |sigma| |mu_sigma|^2 resp. h_sigma^{+1}.
double multiplier_half_norm(const PolytopalMesh& mesh, const MultiplierVector& mu);
double multiplier_dual_norm(const PolytopalMesh& mesh, const MultiplierVector& mu);

}  // namespace polyfrac

#endif
