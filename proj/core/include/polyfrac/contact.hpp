// Semi-smooth Newton solver for the discrete mixed variational inequality,
// written through the equivalent projection equations
//   lambda_n = [lambda_n + beta_n jump_n]_+
//   lambda_t = [lambda_t + beta_t jump_t]_g
// with an active-set generalized Jacobian. Two linear strategies solve the
// same Newton step: a direct sparse LU on the full saddle Jacobian, and an
// exact reduction to an SPD system (constrained bubble components substituted
// out, slip blocks folded into the stiffness) for large 3D problems.

#ifndef POLYFRAC_CONTACT_HPP
#define POLYFRAC_CONTACT_HPP

#include <string>
#include <vector>

#include "polyfrac/assembly.hpp"

namespace polyfrac {

enum class NormalStatus { Open, Contact };
enum class TangentialStatus { Stick, Slip, Free };  // Free = zero threshold

struct FaceStatus {
  NormalStatus normal = NormalStatus::Open;
  TangentialStatus tangential = TangentialStatus::Stick;
};

enum class LinearStrategy { Auto, Direct, ReducedSpd };

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 60;
  bool linesearch = false;
  LinearStrategy linear = LinearStrategy::Auto;
  // diagnostic: replace the normal cone by the bilateral constraint jump_n = 0
  bool bilateral_normal = false;
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double residual_u = 0, residual_contact = 0;
  int linear_solves = 0;
  double worst_linear_residual = 0;
  std::vector<FaceStatus> status;
  std::vector<int> slip_count_history;  // active-set diagnostic per iteration
};

/// Momentum and (|sigma|-scaled) contact residuals at (u, lambda).
struct Residual {
  Eigen::VectorXd r_u;        // n
  Eigen::VectorXd r_contact;  // d per fracture face
};
Residual contact_residual(const SaddleSystem& sys, const Eigen::VectorXd& u_free,
                          const MultiplierVector& lambda, bool bilateral_normal = false);

/// Face statuses at (u, lambda) from the projection arguments.
std::vector<FaceStatus> face_statuses(const SaddleSystem& sys, const Eigen::VectorXd& u_free,
                                      const MultiplierVector& lambda, bool bilateral_normal = false);

/// Direct sparse LU with a relative residual check (default 1e-10).
Eigen::VectorXd linear_solve(const SpMat& M, const Eigen::VectorXd& b,
                             double residual_tol = 1e-10);

/// Semi-smooth Newton; u/lambda are taken as the initial guess (warm start)
/// and overwritten with the solution.
SolveReport semismooth_newton(const SaddleSystem& sys, DisplacementVector& u,
                              MultiplierVector& lambda, const NewtonOptions& opts = {});

struct KktReport {
  // raw quantities, max over faces
  double negative_lambda_n = 0;          // max(-lambda_n, 0)
  double penetration = 0;                // max(jump_n, 0)
  double complementarity_n = 0;          // |lambda_n jump_n|
  double slip_excess = 0;                // max(|lambda_t| - g, 0)
  double complementarity_t = 0;          // |lambda_t . jump_t - g |jump_t||
  // the same, divided by the natural traction / jump scales
  double normalized[5] = {0, 0, 0, 0, 0};
  double max_normalized() const {
    double v = 0;
    for (double x : normalized) v = std::max(v, x);
    return v;
  }
};

KktReport check_kkt(const SaddleSystem& sys, const Eigen::VectorXd& u_free,
                    const MultiplierVector& lambda);

}  // namespace polyfrac

#endif
