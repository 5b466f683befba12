// Interpolators, error norms, consistency functionals and numerical
// stability-constant estimators (inf-sup, Korn) used to validate the scheme,
// plus the analytical solutions of the two reference studies.

#ifndef POLYFRAC_VERIFICATION_HPP
#define POLYFRAC_VERIFICATION_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polyfrac/assembly.hpp"

namespace polyfrac {

/// One-sided fields take (point, side reference point); the reference point
/// is any point inside the evaluating cell and selects the branch of a field
/// that is discontinuous across the fracture.
using SidedVectorField = std::function<Vec3(const Vec3&, const Vec3&)>;
using SidedTensorField = std::function<Mat3(const Vec3&, const Vec3&)>;

struct AnalyticalSolution {
  SidedVectorField u;
  SidedTensorField grad_u;
  SidedTensorField stress;
  VectorField body_force;                    // -div stress
  VectorField multiplier;                    // lambda on Gamma (full d-vector)
  VectorField jump;                          // [[u]] on Gamma
  std::function<double(const Vec3&)> tresca_g;
  Material mat;
};

/// Finite-difference consistency of the supplied derivatives at random
/// interior points; returns the worst relative defects (gradient, momentum).
struct SelfCheckReport {
  double grad_defect = 0;
  double force_defect = 0;
};
SelfCheckReport self_check(const AnalyticalSolution& sol, const Box& box, int n_points,
                           std::uint64_t seed);

/// Nodal one-sided point values plus the bubble correction making the face
/// mean of the trace exact.
DisplacementVector interpolate_displacement(const OperatorCache& cache, const SidedVectorField& u);

/// Face averaging onto the multiplier space.
MultiplierVector interpolate_multiplier(const PolytopalMesh& mesh, const VectorField& lambda);

struct ErrorRow {
  double grad_abs = 0, grad_rel = 0;
  double u_abs = 0, u_rel = 0;
  double jump_abs = 0, jump_rel = 0;
  double slip_abs = 0, slip_rel = 0;      // | |jump_t| | magnitude error
  double lamn_abs = 0, lamn_rel = 0;      // normal multiplier, optionally tip-excluded
  double lam_dual_abs = 0, lam_dual_rel = 0;
  bool zero_exact_norm = false;
};

struct ErrorOptions {
  // faces whose centroid fails the predicate are excluded from the lambda_n
  // error (tip exclusion); null = include all
  std::function<bool(const Vec3&)> include_lambda;
};

ErrorRow error_norms(const OperatorCache& cache, const DisplacementVector& u_D,
                     const MultiplierVector& lambda_D, const AnalyticalSolution& exact,
                     const ErrorOptions& opts = {});

/// Gram matrices over the free dofs.
SpMat h1_gram(const OperatorCache& cache);          // |K| grad:grad + S_K
SpMat strain_gram(const OperatorCache& cache);      // |K| eps:eps
SpMat stabilisation_gram(const OperatorCache& cache);

/// Discrete inf-sup constant: sqrt of the smallest eigenvalue of
/// (B N^-1 B^T) x = theta M x with N the H1 Gram and M the diagonal Gram of
/// the dual multiplier norm. `with_bubbles = false` drops the bubble columns
/// (and rows/cols of N), the stabilising mechanism under test.
double infsup_constant(const OperatorCache& cache, bool with_bubbles = true);

/// Discrete Korn constant: smallest eigenvalue of (E + S) x = theta N x.
double korn_constant(const OperatorCache& cache);

/// Primal consistency C_D(u, I_D u).
double primal_consistency(const OperatorCache& cache, const AnalyticalSolution& exact);

/// Adjoint consistency (limit-conformity) W_D of a stress field: dual norm of
/// the integration-by-parts defect. div_tau must match the field (= -f for
/// the stress of a solution).
double adjoint_consistency(const OperatorCache& cache, const SidedTensorField& tau,
                           const VectorField& div_tau);

/// Least-squares slope of log(values) against log(h).
double fit_slope(const std::vector<double>& h, const std::vector<double>& values);

// ---- reference solutions ----------------------------------------------------

/// Manufactured 3D Tresca solution on (-1,1)^3 with the fracture {0}x(-1,1)^2,
/// g = 1, mu = lambda = 1; plus side is x < 0, n+ = +e_x.
AnalyticalSolution manufactured3d_solution();

/// 2D compression study: analytic multiplier and slip profile along the
/// fracture, in the frame where the fracture occupies {y=0, |x| <= ell}.
/// Linear is the literal reading of the commonly quoted closed form (whose
/// root simplifies to |t|); Elliptic restores the elliptic root; the
/// PlaneStrain variant additionally carries the full plane-strain compliance
/// factor 4(1-nu^2)/E, which is what the discrete solution converges to.
enum class SlipProfile { Linear, Elliptic, EllipticPlaneStrain };

struct CompressionSetup {
  double sigma = 100e6;          // remote compressive stress magnitude
  double psi = M_PI / 9.0;       // fracture inclination w.r.t. the compression axis
  double ell = 1.0;              // fracture half length
  double friction = 1.0 / std::sqrt(3.0);
  double young = 25e9;
  double poisson = 0.25;
  SlipProfile profile = SlipProfile::Linear;

  double lambda_n() const { return sigma * std::sin(psi) * std::sin(psi); }
  double tresca_g() const { return friction * lambda_n(); }
  Material material() const {  // plane strain
    Material m;
    m.mu = young / (2.0 * (1.0 + poisson));
    m.lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    return m;
  }
  double slip_coefficient() const {
    double c = 4.0 * (1.0 - poisson) / young * sigma * std::sin(psi) *
               (std::cos(psi) - friction * std::sin(psi));
    if (profile == SlipProfile::EllipticPlaneStrain) c *= 1.0 + poisson;
    return c;
  }
  /// |jump_t| at arclength t in [0, 2 ell] from one tip.
  double slip(double t) const {
    double s = profile == SlipProfile::Linear
                   ? std::abs(t)
                   : std::sqrt(std::max(0.0, ell * ell - (ell - t) * (ell - t)));
    return slip_coefficient() * s;
  }
  /// Remote stress tensor in the mesh frame (fracture along x, compression
  /// direction at angle -psi).
  Mat3 remote_stress() const {
    Vec3 dir(std::cos(psi), -std::sin(psi), 0.0);
    return -sigma * dir * dir.transpose();
  }
};

}  // namespace polyfrac

#endif
