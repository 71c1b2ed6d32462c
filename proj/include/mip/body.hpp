#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <vector>

#include "mip/error.hpp"
#include "mip/rng.hpp"

namespace mip {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Region { interior, boundary, exterior };

enum class BodyKind { ball, ellipsoid, hpolytope, affine_image, all_space };

// One draw from a boundary sampler. weight is an importance weight: the
// average of weight*h(x) over draws estimates the surface integral of h.
struct SurfacePoint {
  Vec x;
  Vec normal;
  double weight = 0.0;
};

struct SurfaceSample {
  std::vector<SurfacePoint> points;
  std::uint64_t seed = 0;
  double total_weight() const;
};

class Body;

// Deterministic boundary point stream: point(i) depends only on (body, seed, i).
class SurfaceSampler {
 public:
  SurfaceSampler(const Body& body, std::uint64_t seed);
  SurfacePoint point(std::uint64_t index) const;
  int dim() const;

 private:
  std::shared_ptr<const void> impl_;
  SurfacePoint (*fn_)(const void*, std::uint64_t) = nullptr;
  int dim_ = 0;
};

// Immutable convex region: ball, ellipsoid image of the unit ball, H-polytope
// with the origin interior, affine image of another body, or all of space.
class Body {
 public:
  struct Impl;

  static Body ball(int dim, double radius);
  static Body ellipsoid(const Mat& shape);
  static Body hpolytope(const Mat& rows, const Vec& offsets);
  static Body cube(int dim, double half_width);
  static Body all_space(int dim);

  int dim() const;
  BodyKind kind() const;
  bool bounded() const;
  bool is_all_space() const;
  bool shifted() const;
  bool even_symmetric() const;

  // Minkowski gauge relative to the origin; requires an unshifted body.
  double gauge(const Vec& x) const;
  // Gradient of the gauge; throws ErrorCode::singular_point on facet ridges
  // and at the origin.
  Vec gauge_gradient(const Vec& x) const;
  Region classify(const Vec& x, double tol = 1e-9) const;
  Vec outward_normal(const Vec& x) const;
  Body affine_image(const Mat& t, const Vec& z) const;

  SurfaceSampler surface_sampler(std::uint64_t seed) const;
  SurfaceSample surface_sample(std::uint64_t count, std::uint64_t seed) const;

  // Uniform draws over an enclosing region (the body itself for balls and
  // ellipsoids, the vertex bounding box for polytopes).
  double enclosing_volume() const;
  Vec enclosing_point(const Rng& rng, std::uint64_t index, std::uint32_t slot_base) const;
  std::uint32_t enclosing_slots() const;

  double volume() const;
  double surface_area() const;
  Vec barycenter() const;
  double bounding_radius() const;
  Vec bounding_center() const;

  Mat transform() const;
  Vec shift() const;
  Body base() const;

  double ball_radius() const;
  const Mat& ellipsoid_shape() const;
  const Mat& polytope_rows() const;
  const Vec& polytope_offsets() const;

 private:
  friend class SurfaceSampler;
  explicit Body(std::shared_ptr<const Impl> im) : impl_(std::move(im)) {}
  std::shared_ptr<const Impl> impl_;
};

double unit_ball_volume(int dim);
double sphere_area(int dim, double radius);

}  // namespace mip
