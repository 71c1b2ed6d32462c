#pragma once

#include <vector>

#include "mip/variation.hpp"

namespace mip {

struct OptimizeConfig {
  std::uint64_t budget_per_eval = 1 << 16;
  int max_iters = 60;
  double step_init = 0.5;
  double armijo_c = 0.1;  // sufficient-increase fraction, in (0,1)
  double grad_tol = 5e-3;
  int restarts = 8;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct TrajectoryPoint {
  int iter = 0;
  double value = 0.0;
  double grad_norm = 0.0;
};

struct OptimizeResult {
  Position position;
  double value = 0.0;
  double value_stderr = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  std::vector<TrajectoryPoint> trajectory;  // of the winning restart
  int restarts_used = 0;
};

// Projected gradient ascent over the position, line-searched on a
// common-random-numbers objective, with a decay-bound divergence guard.
// det_target is read only in fixed-determinant mode.
OptimizeResult maximize(const LogConcaveFunc& f, const LogConcaveFunc& g, DetMode mode,
                        double det_target, const OptimizeConfig& cfg);

// Same search seeded with a caller-provided first start.
OptimizeResult maximize(const LogConcaveFunc& f, const LogConcaveFunc& g, DetMode mode,
                        double det_target, const OptimizeConfig& cfg, const Position& warm_start);

struct ScanPoint {
  double radius = 0.0;
  double value = 0.0;
  double value_stderr = 0.0;
  Position position;
  bool converged = false;
  // value within the scaling sandwich of the previous radius, up to noise
  bool sandwich_ok = true;
};

// Fixed-determinant maximization along ascending radii >= 1, warm-started
// from the previous optimum scaled by (r/r_prev)^{1/n}.
std::vector<ScanPoint> scan_radius(const LogConcaveFunc& f, const LogConcaveFunc& g,
                                   const std::vector<double>& radii, const OptimizeConfig& cfg);

struct BruteGrid {
  int rot_steps = 24;
  int aniso_steps = 7;
  double aniso_max = 0.6;   // log axis ratio
  int shear_steps = 5;
  double shear_max = 0.5;
  int shift_steps = 9;
  double shift_max = 1.0;
};

struct BruteResult {
  Position position;
  double value = 0.0;
};

// Exhaustive grid reference for cross-checks; dimensions 1 and 2 only,
// at most 1e7 grid points.
BruteResult brute_force(const LogConcaveFunc& f, const LogConcaveFunc& g, DetMode mode,
                        double det_target, const BruteGrid& grid, const QuadOptions& opts);

struct InscribedResult {
  Mat shape;  // SPD image of the unit ball
  double value = 0.0;
  double value_stderr = 0.0;
  bool converged = false;
  std::vector<TrajectoryPoint> trajectory;
};

// Maximizes the density mass of an inscribed ellipsoid shape * B inside the
// region (a polytope or a ball) by boundary-flux ascent with a global
// scaling projection back into feasibility.
InscribedResult max_inscribed_ellipsoid(const Body& region, const LogConcaveFunc& density,
                                        const OptimizeConfig& cfg);

}  // namespace mip
