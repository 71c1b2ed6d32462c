#pragma once

#include <vector>

#include "mip/optimizer.hpp"

namespace mip {

// Stationarity certificate at a position: the assembled moment matrix must be
// a multiple of the identity and the assembled center vector must vanish,
// both up to tolerance plus three standard errors.
struct CertificateReport {
  Mat m;          // G_int + G_bd
  double c = 0.0; // tr(m)/n
  Vec b;          // v_int + v_bd
  double iso_residual = 0.0;
  double iso_noise = 0.0;      // 3 * relative stderr on the isotropy residual
  double center_residual = 0.0;
  double center_noise = 0.0;
  double center_scale = 0.0;   // length normalizing the center defect
  double theta_gap = 0.0;      // max canonical-direction gap |th' m th - c|
  double tol = 0.0;
  bool degenerate = false;     // no mass at this position
  bool pass = false;
  MomentBundle bundle;
};

CertificateReport isotropy_certificate(const LogConcaveFunc& f, const LogConcaveFunc& g,
                                       const Position& pos, double tol, const QuadOptions& opts);

// Indicator specialization, same fields from the same code path.
CertificateReport geometric_certificate(const Body& kf, const Body& kg, const Position& pos,
                                        double tol, const QuadOptions& opts);

// Second moment of the density over region cap (radius * sphere), normalized
// so its trace is one; passes when it matches (tr/n) I.
struct SphereMomentReport {
  Mat m;
  double residual = 0.0;
  double noise = 0.0;
  double mass = 0.0;  // unnormalized density mass on the restricted sphere
  double tol = 0.0;
  bool pass = false;
  std::uint64_t samples_kept = 0;
};

SphereMomentReport sphere_restricted_certificate(const Body& region, const LogConcaveFunc& density,
                                                 double radius, double tol,
                                                 const QuadOptions& opts);

// Density-weighted surface draws on bd(region) restricted to the closed image
// of the unit ball at ball_pos. Weights are unnormalized measure weights.
struct BoundaryMeasureSample {
  std::vector<Vec> points;
  std::vector<double> weights;
  double total = 0.0;
  std::uint64_t kept = 0;
  std::uint64_t drawn = 0;
};

BoundaryMeasureSample boundary_measure_sample(const Body& region, const LogConcaveFunc& density,
                                              const Position& ball_pos, std::uint64_t count,
                                              std::uint64_t seed);

// One shrinking radius of the boundary concentration limit.
struct JohnStep {
  double radius = 0.0;
  double value = 0.0;           // maximized mass at the fixed determinant
  double residual = 0.0;        // second moment against I/n
  double residual_stderr = 0.0;
  double support_distance = 0.0;  // max | |x| - 1 | over the kept points
  Position position;
  bool converged = false;
};

struct JohnReport {
  Mat inscribed_shape;  // certified maximal inscribed shape, close to I
  std::vector<JohnStep> steps;
};

// Requires the region to sit in its measure John position (maximal inscribed
// shape near the identity), then follows the boundary measure as the ball
// budget shrinks toward the inscribed one.
JohnReport john_limit_measure(const Body& region, const LogConcaveFunc& density,
                              const std::vector<double>& radii, const OptimizeConfig& cfg);

}  // namespace mip
