#pragma once

#include "mip/quadrature.hpp"

namespace mip {

enum class DetMode { unit_det, fixed_det, free_det };

// First variation along one direction, split as it is assembled.
struct VariationReport {
  double interior_term = 0.0, interior_stderr = 0.0;
  double boundary_term = 0.0, boundary_stderr = 0.0;
  double total = 0.0, total_stderr = 0.0;  // total = interior + boundary exactly
};

struct GradientResult {
  Mat g;          // traceless ascent direction in T
  Mat g_stderr;
  Mat m_raw;      // un-projected G_int + G_bd (free-determinant ascent)
  Vec v;          // ascent direction in z
  Vec v_stderr;
  MomentBundle bundle;
};

struct FdCheck {
  double analytic = 0.0, analytic_stderr = 0.0;
  double numeric = 0.0, numeric_stderr = 0.0;
  double gap = 0.0;
};

// Linear lower bound on a potential: phi(x) >= slope*|x| + offset on supp f.
struct DecayFit {
  double slope = 0.0;
  double offset = 0.0;
};

Mat traceless_part(const Mat& t);

void check_det(const Mat& t, DetMode mode, double det_target);

// Objective P(T,z) after validating the determinant constraint.
IntegralEstimate objective(const LogConcaveFunc& f, const LogConcaveFunc& g, const Position& pos,
                           DetMode mode, double det_target, const QuadOptions& opts);

// dF/de at e=0 along T_e = (I + e D) / det(I + e D)^{1/n}, functions at the
// reference position. Equals <traceless_part(D), G_int + G_bd>_F.
VariationReport sl_directional_derivative(const LogConcaveFunc& f, const LogConcaveFunc& g,
                                          const Mat& t_dir, const QuadOptions& opts);

// dF/de at e=0 of e -> integral of f(x) g(x - e y) dx. Equals <v_int+v_bd, y>.
VariationReport shift_directional_derivative(const LogConcaveFunc& f, const LogConcaveFunc& g,
                                             const Vec& y, const QuadOptions& opts);

GradientResult gradient(const LogConcaveFunc& f, const LogConcaveFunc& g, const QuadOptions& opts);

// Objective evaluator with one fixed reference sample set on the g side, so
// differences of nearby positions have low variance (common random numbers).
// evaluate(t, z) estimates the integral of f(t u + z) g(u) |det t| du.
class CrnObjective {
 public:
  CrnObjective(const LogConcaveFunc& f, const LogConcaveFunc& g, const QuadOptions& opts);

  int dim() const { return dim_; }
  IntegralEstimate evaluate(const Mat& t, const Vec& z) const;
  // Per-sample difference (F(t_plus,z_plus) - F(t_minus,z_minus)) / denom.
  IntegralEstimate difference(const Mat& t_plus, const Vec& z_plus, const Mat& t_minus,
                              const Vec& z_minus, double denom) const;

 private:
  LogConcaveFunc f_;
  std::vector<Vec> points_;
  std::vector<double> g_weight_;  // g(u_i) times the draw weight
  int dim_ = 0;
  int workers_ = 1;
  std::uint64_t seed_ = 0;
};

// Central difference along the exact determinant-normalized path, with common
// random numbers on both sides.
FdCheck fd_check_sl(const LogConcaveFunc& f, const LogConcaveFunc& g, const Mat& t_dir, double h,
                    const QuadOptions& opts);
FdCheck fd_check_shift(const LogConcaveFunc& f, const LogConcaveFunc& g, const Vec& y, double h,
                       const QuadOptions& opts);

// Integral over the line of e^{-(|t| + |lambda t + s|)} dt; the lambda=1
// branch, a cancellation-free series near 1, and the direct formula elsewhere.
double laplace_pair_integral(double lambda, double s);

// Upper bound on the objective at transform t for densities obeying
// f <= e^{-(a|x|+b)}, g <= e^{-(c|x|+d)}: valid for every shift z.
double objective_upper_bound(const DecayFit& f_decay, const DecayFit& g_decay, const Mat& t);

// Supporting linear lower bound for the potential, certified by sampling.
DecayFit fit_linear_decay(const LogConcaveFunc& f);

}  // namespace mip
