// Assembly of the sparse saddle system: stiffness (stress + scaled
// stabilisation), jump coupling, body loads, boundary tractions and
// Dirichlet elimination.

#ifndef POLYFRAC_ASSEMBLY_HPP
#define POLYFRAC_ASSEMBLY_HPP

#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "polyfrac/reconstruction.hpp"

namespace polyfrac {

using SpMat = Eigen::SparseMatrix<double>;

struct Material {
  double mu = 1.0;
  double lambda = 1.0;
};

using MaterialField = std::function<Material(const Vec3&)>;  // sampled at cell centroids
using VectorField = std::function<Vec3(const Vec3&)>;

struct Traction {
  int tag;
  std::function<Vec3(const Vec3&, const Vec3&)> value;  // (point, outward normal)
};

/// Jump map of one fracture face over the free dofs (prescribed contributions
/// are kept apart in SaddleSystem::jump_presc).
struct FaceJumpMap {
  std::vector<int> cols;
  Eigen::MatrixXd M;  // dim x cols
};

struct SaddleSystem {
  const PolytopalMesh* mesh = nullptr;
  const OperatorCache* cache = nullptr;

  SpMat A;                    // n x n, symmetric
  SpMat B;                    // m x n, row block of face sigma = |sigma| * jump map
  Eigen::VectorXd rhs;        // load + Dirichlet elimination
  Eigen::VectorXd jump_presc; // m, raw jump carried by prescribed dofs
  std::vector<FaceJumpMap> jump_maps;  // per fracture face

  Eigen::VectorXd g;          // Tresca threshold per fracture face
  Eigen::VectorXd beta_n, beta_t;
  std::vector<Material> mat;  // per cell

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.rows()); }

  /// Raw jump of the current iterate on fracture face lf.
  Vec3 jump(int lf, const Eigen::VectorXd& u_free) const;
};

/// Cellwise |K| (2 mu eps:eps + lambda div div) + (2 mu + lambda) S_K; the
/// Dirichlet-eliminated contribution is accumulated into elim_rhs.
SpMat assemble_stiffness(const OperatorCache& cache, const std::vector<Material>& mat,
                         Eigen::VectorXd& elim_rhs);

/// Row block per fracture face: |sigma| times the jump map (exact, the
/// integrand is face-wise constant). Prescribed-dof contributions go to
/// jump_presc (unscaled).
SpMat assemble_coupling(const OperatorCache& cache, Eigen::VectorXd& jump_presc,
                        std::vector<FaceJumpMap>* maps = nullptr);

/// Body term sum_K (int_K f) . mean_K(v) plus boundary tractions paired with
/// the affine face trace.
Eigen::VectorXd assemble_load(const OperatorCache& cache, const VectorField& f,
                              const std::vector<Traction>& tractions = {});

struct SystemOptions {
  MaterialField material;
  VectorField body_force;                       // null = zero
  std::vector<Traction> tractions;
  std::function<double(const Vec3&)> tresca_g;  // sampled at face centroids; null = zero
  double beta = -1.0;  // <= 0: face-wise default (2 mu_K + lambda_K)/h_sigma
};

SaddleSystem build_saddle_system(const OperatorCache& cache, const SystemOptions& opts);

}  // namespace polyfrac

#endif
