#pragma once

#include <memory>

#include "mip/body.hpp"

namespace mip {

enum class PotentialKind { zero, quadratic, gauge_power, linear_max };

// Position acting on the second function of a pair: x maps to g(t^{-1}(x - z)).
struct Position {
  Mat t;
  Vec z;

  static Position identity(int dim) { return {Mat::Identity(dim, dim), Vec::Zero(dim)}; }
};

// Upper-semicontinuous log-concave function f = e^{-phi} * 1_support.
// The family is closed under pullback by invertible affine maps.
class LogConcaveFunc {
 public:
  struct Impl;

  static LogConcaveFunc indicator(const Body& support);
  static LogConcaveFunc gaussian(const Mat& sigma_inv, const Vec& mean, double offset = 0.0);
  static LogConcaveFunc restricted_gaussian(const Body& support, const Mat& sigma_inv,
                                            const Vec& mean, double offset = 0.0);
  static LogConcaveFunc gauge_power(const Body& gauge_body, double power);
  static LogConcaveFunc linear_max(const Mat& forms, const Vec& constants);

  int dim() const;
  const Body& support() const;
  PotentialKind potential_kind() const;
  bool is_indicator() const;  // zero potential
  bool even() const;
  bool second_moment_ok() const;

  // e^{-phi(x)} on the closed support, 0 outside.
  double evaluate(const Vec& x) const;
  // phi(x), ignoring the support restriction.
  double potential(const Vec& x) const;
  // grad phi(x); throws ErrorCode::singular_point where phi is not differentiable.
  Vec potential_gradient(const Vec& x) const;

  // x maps to this(t^{-1}(x - z)); support becomes the affine image.
  LogConcaveFunc pullback(const Position& pos) const;

  // A point where f is large: the quadratic mean or gauge center when inside
  // the support, otherwise the support barycenter.
  Vec mode_hint() const;

  const Mat& quadratic_sigma_inv() const;
  const Vec& quadratic_mean() const;
  double quadratic_offset() const;
  const Body& gauge_body() const;
  double gauge_exponent() const;
  const Vec& gauge_center() const;
  const Mat& linear_max_forms() const;
  const Vec& linear_max_constants() const;

 private:
  explicit LogConcaveFunc(std::shared_ptr<const Impl> im) : impl_(std::move(im)) {}
  std::shared_ptr<const Impl> impl_;
};

}  // namespace mip
