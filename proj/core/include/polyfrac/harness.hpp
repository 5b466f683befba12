// Study driver: mesh pipelines for the two reference studies, convergence
// tables, CSV / VTU emission.

#ifndef POLYFRAC_HARNESS_HPP
#define POLYFRAC_HARNESS_HPP

#include <string>

#include "polyfrac/contact.hpp"
#include "polyfrac/io.hpp"
#include "polyfrac/verification.hpp"

namespace polyfrac {

enum class Study { Compression2D, Manufactured3D };
enum class MeshFamily { Cartesian, Tet, HexaCut, HexaBary, Triangular2D };

struct StudyConfig {
  Study study = Study::Manufactured3D;
  MeshFamily family = MeshFamily::Cartesian;
  std::vector<int> levels;        // cells per axis (3D) or fracture faces (2D)
  std::string out_dir;            // empty = no files written
  NewtonOptions newton;
  double beta = -1.0;             // <= 0: face-wise default
  std::uint64_t seed = 0;
  double perturbation = 0.25;     // hexa families, fraction of the cell width
  SlipProfile slip_profile = SlipProfile::Linear;
  bool write_vtu = true;
};

MeshFamily parse_family(const std::string& name);
Study parse_study(const std::string& name);

struct LevelResult {
  SolveReport solve;
  KktReport kkt;
  ErrorRow errors;
  long n_cells = 0;
  double h = 0;
  double infsup = -1;  // only filled by the verification commands
};

struct StudyResult {
  ConvergenceReport report;
  std::vector<LevelResult> levels;
  bool all_converged = true;
  double worst_kkt = 0;
};

/// Mesh of one manufactured-study level (also used by the verification CLI).
PolytopalMesh manufactured3d_mesh(MeshFamily family, int n, double perturbation,
                                  std::uint64_t seed);

StudyResult run_manufactured3d(const StudyConfig& config);
StudyResult run_compression2d(const StudyConfig& config);
StudyResult run_study(const StudyConfig& config);

/// Middle-band agreement of the discrete normal multiplier with the constant
/// analytic value: max relative deviation over faces with arclength in
/// [band, 1-band] of the fracture length.
double compression_lambda_band_deviation(const PolytopalMesh& mesh, const OperatorCache& cache,
                                         const SaddleSystem& sys, const MultiplierVector& lambda,
                                         const CompressionSetup& setup, double band);

}  // namespace polyfrac

#endif
