#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mip/body.hpp"

using namespace mip;

namespace {
constexpr double kPi = 3.14159265358979323846;

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("factory validation") {
  CHECK_THROWS_AS(Body::ball(0, 1.0), Error);
  CHECK_THROWS_AS(Body::ball(2, 0.0), Error);
  CHECK_THROWS_AS(Body::ball(2, -1.0), Error);
  CHECK_THROWS_AS(Body::cube(2, 0.0), Error);

  Mat rows(2, 2);
  rows << 1.0, 0.0, -1.0, 0.0;
  CHECK_THROWS_AS(Body::hpolytope(rows, v2(1.0, 0.0)), Error);   // offset not positive
  CHECK_THROWS_AS(Body::hpolytope(rows, v2(1.0, -1.0)), Error);

  Mat sing = Mat::Zero(2, 2);
  CHECK_THROWS_AS(Body::ellipsoid(sing), Error);
}

TEST_CASE("classification against the three regions") {
  const Body cube = Body::cube(2, 1.0);
  CHECK(cube.classify(v2(0.0, 0.0)) == Region::interior);
  CHECK(cube.classify(v2(0.5, -0.9)) == Region::interior);
  CHECK(cube.classify(v2(1.0, 0.3)) == Region::boundary);
  CHECK(cube.classify(v2(1.0, 1.0)) == Region::boundary);
  CHECK(cube.classify(v2(1.1, 0.0)) == Region::exterior);

  const Body ball = Body::ball(2, 1.5);
  CHECK(ball.classify(v2(1.0, 0.0)) == Region::interior);
  CHECK(ball.classify(v2(1.5, 0.0)) == Region::boundary);
  CHECK(ball.classify(v2(1.2, 1.2)) == Region::exterior);

  const Body space = Body::all_space(2);
  CHECK(space.classify(v2(1e9, -1e9)) == Region::interior);
}

TEST_CASE("gauge and its gradient") {
  const Body cube = Body::cube(2, 2.0);
  CHECK(cube.gauge(v2(1.0, 0.0)) == doctest::Approx(0.5));
  CHECK(cube.gauge(v2(-3.0, 1.0)) == doctest::Approx(1.5));
  CHECK(cube.gauge_gradient(v2(1.0, 0.3))[0] == doctest::Approx(0.5));
  CHECK(cube.gauge_gradient(v2(1.0, 0.3))[1] == doctest::Approx(0.0));
  // facet ridge and origin are non-differentiable
  CHECK_THROWS_AS(cube.gauge_gradient(v2(1.0, 1.0)), Error);
  CHECK_THROWS_AS(cube.gauge_gradient(v2(0.0, 0.0)), Error);

  const Body ball = Body::ball(2, 2.0);
  CHECK(ball.gauge(v2(0.0, 3.0)) == doctest::Approx(1.5));
  const Vec g = ball.gauge_gradient(v2(3.0, 4.0));
  CHECK(g[0] == doctest::Approx(0.3));  // x / (r |x|)
  CHECK(g[1] == doctest::Approx(0.4));
}

TEST_CASE("outward normals") {
  const Body cube = Body::cube(2, 1.0);
  const Vec n = cube.outward_normal(v2(1.0, 0.2));
  CHECK(n[0] == doctest::Approx(1.0));
  CHECK(n[1] == doctest::Approx(0.0));

  const Body ball = Body::ball(2, 2.0);
  const Vec m = ball.outward_normal(v2(0.0, 2.0));
  CHECK(m[0] == doctest::Approx(0.0));
  CHECK(m[1] == doctest::Approx(1.0));
}

TEST_CASE("volume and surface area") {
  CHECK(Body::cube(2, 1.0).volume() == doctest::Approx(4.0));
  CHECK(Body::cube(2, 1.0).surface_area() == doctest::Approx(8.0));
  CHECK(Body::ball(2, 1.0).volume() == doctest::Approx(kPi));
  CHECK(Body::ball(2, 1.0).surface_area() == doctest::Approx(2 * kPi));
  CHECK(Body::ball(3, 1.0).volume() == doctest::Approx(4 * kPi / 3));
  CHECK(Body::ball(3, 2.0).surface_area() == doctest::Approx(16 * kPi));

  Mat s(2, 2);
  s << 2.0, 0.0, 0.0, 1.0;
  CHECK(Body::ellipsoid(s).volume() == doctest::Approx(2 * kPi));

  // displaced box [-0.4, 1.6] x [-1, 1]
  Mat rows(4, 2);
  rows << 1, 0, -1, 0, 0, 1, 0, -1;
  Vec off(4);
  off << 1.6, 0.4, 1.0, 1.0;
  const Body box = Body::hpolytope(rows, off);
  CHECK(box.volume() == doctest::Approx(4.0));
  CHECK(box.surface_area() == doctest::Approx(8.0));

  CHECK_THROWS_AS(Body::all_space(2).volume(), Error);
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(4) == doctest::Approx(kPi * kPi / 2));
  CHECK(sphere_area(2, 3.0) == doctest::Approx(6 * kPi));
}

TEST_CASE("barycenter and bounding data") {
  Mat rows(4, 2);
  rows << 1, 0, -1, 0, 0, 1, 0, -1;
  Vec off(4);
  off << 1.6, 0.4, 1.0, 1.0;
  const Body box = Body::hpolytope(rows, off);
  CHECK(box.barycenter()[0] == doctest::Approx(0.6));
  CHECK(box.barycenter()[1] == doctest::Approx(0.0));
  // Half-space data keeps the origin frame: the enclosing ball is centered there.
  CHECK(box.bounding_center().isZero(0.0));
  CHECK(box.bounding_radius() == doctest::Approx(std::sqrt(1.6 * 1.6 + 1.0)));
  CHECK_FALSE(box.even_symmetric());

  const Body moved = Body::cube(2, 1.0).affine_image(Mat::Identity(2, 2), v2(0.6, 0.0));
  CHECK(moved.bounding_center()[0] == doctest::Approx(0.6));
  CHECK(moved.bounding_radius() == doctest::Approx(std::sqrt(2.0)));

  CHECK(Body::cube(2, 1.0).bounding_radius() == doctest::Approx(std::sqrt(2.0)));
  CHECK(Body::cube(2, 1.0).even_symmetric());
  CHECK(Body::ball(3, 1.5).even_symmetric());

  Mat sym_rows(4, 2);
  sym_rows << 1, 1, -1, -1, 0, 1, 0, -1;
  Vec sym_off(4);
  sym_off << 1.0, 1.0, 1.0, 1.0;
  CHECK(Body::hpolytope(sym_rows, sym_off).even_symmetric());
}

TEST_CASE("affine images compose with classification") {
  Mat t(2, 2);
  t << 2.0, 0.0, 0.0, 1.0;
  const Body img = Body::cube(2, 1.0).affine_image(t, v2(1.0, 0.0));
  // image is [-1, 3] x [-1, 1]
  CHECK(img.classify(v2(2.9, 0.0)) == Region::interior);
  CHECK(img.classify(v2(3.0, 0.0)) == Region::boundary);
  CHECK(img.classify(v2(3.1, 0.0)) == Region::exterior);
  CHECK(img.classify(v2(-1.0, 0.5)) == Region::boundary);
  CHECK(img.volume() == doctest::Approx(8.0));
  CHECK(img.barycenter()[0] == doctest::Approx(1.0));
  CHECK(img.shifted());
  CHECK_FALSE(img.even_symmetric());
  CHECK(img.transform()(0, 0) == doctest::Approx(2.0));
  CHECK(img.shift()[0] == doctest::Approx(1.0));
}

TEST_CASE("surface sampling lands on the boundary with outward unit normals") {
  for (const Body& body :
       {Body::cube(2, 1.0), Body::ball(2, 1.5), Body::ball(3, 1.0),
        Body::cube(2, 2.0).affine_image(
            (Mat(2, 2) << 1.0, 0.3, 0.0, 1.0).finished(), v2(0.5, 0.0))}) {
    const SurfaceSample sample = body.surface_sample(512, 7);
    REQUIRE(sample.points.size() == 512);
    const Vec center = body.barycenter();
    for (const SurfacePoint& p : sample.points) {
      CHECK(body.classify(p.x) == Region::boundary);
      CHECK(p.normal.norm() == doctest::Approx(1.0));
      CHECK(p.normal.dot(p.x - center) > 0.0);
      CHECK(p.weight > 0.0);
    }
  }
}

TEST_CASE("summed surface weights estimate the surface area") {
  const Body cube = Body::cube(2, 1.0);
  const SurfaceSample s = cube.surface_sample(20000, 3);
  CHECK(s.total_weight() == doctest::Approx(8.0).epsilon(0.05));

  const Body ball = Body::ball(2, 1.0);
  const SurfaceSample b = ball.surface_sample(20000, 3);
  CHECK(b.total_weight() == doctest::Approx(2 * kPi).epsilon(0.05));
}

TEST_CASE("surface sampler is a pure function of seed and index") {
  const Body body = Body::ball(2, 1.0);
  const SurfaceSampler a = body.surface_sampler(11);
  const SurfaceSampler b = body.surface_sampler(11);
  const SurfaceSampler c = body.surface_sampler(12);
  bool all_equal = true, any_differs = false;
  for (std::uint64_t i : {0ull, 1ull, 77ull, 4096ull}) {
    all_equal = all_equal && a.point(i).x == b.point(i).x;
    any_differs = any_differs || a.point(i).x != c.point(i).x;
  }
  CHECK(all_equal);
  CHECK(any_differs);
}

TEST_CASE("enclosing draws cover the body uniformly") {
  const Body cube = Body::cube(2, 1.5);
  CHECK(cube.enclosing_volume() == doctest::Approx(9.0));
  const Body ball = Body::ball(2, 2.0);
  CHECK(ball.enclosing_volume() == doctest::Approx(4 * kPi));

  const Rng rng(5, 1);
  int inside = 0;
  const int count = 20000;
  for (int i = 0; i < count; ++i) {
    const Vec x = ball.enclosing_point(rng, i, 0);
    CHECK(ball.classify(x) != Region::exterior);
    inside += 1;
  }
  CHECK(inside == count);

  // polytope draws fall in the bounding box and hit the body at the area ratio
  Mat rows(4, 2);
  rows << 1, 0, -1, 0, 0, 1, 0, -1;
  Vec off(4);
  off << 1.0, 1.0, 1.0, 1.0;
  const Body box = Body::hpolytope(rows, off);
  int hits = 0;
  for (int i = 0; i < count; ++i)
    hits += box.classify(box.enclosing_point(rng, i, 0)) != Region::exterior ? 1 : 0;
  CHECK(static_cast<double>(hits) / count == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("kind queries") {
  CHECK(Body::ball(2, 1.0).kind() == BodyKind::ball);
  CHECK(Body::cube(2, 1.0).kind() == BodyKind::hpolytope);
  CHECK(Body::all_space(3).kind() == BodyKind::all_space);
  CHECK(Body::all_space(3).is_all_space());
  CHECK_FALSE(Body::all_space(3).bounded());
  CHECK(Body::ball(2, 1.0).bounded());
  CHECK(Body::ball(2, 1.0).ball_radius() == doctest::Approx(1.0));
}
