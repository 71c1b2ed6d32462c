#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mip/certify.hpp"

using namespace mip;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

QuadOptions opts(std::uint64_t budget, std::uint64_t seed = 1) {
  QuadOptions q;
  q.budget = budget;
  q.seed = seed;
  return q;
}

}  // namespace

TEST_SUITE("isotropy_certificate") {
  TEST_CASE("matched gaussians pass at the identity") {
    auto f = LogConcaveFunc::gaussian(Mat::Identity(2, 2), Vec::Zero(2));
    auto rep = isotropy_certificate(f, f, Position::identity(2), 5e-3, opts(1 << 17));
    CHECK(rep.pass);
    CHECK(!rep.degenerate);
    CHECK(rep.iso_residual <= rep.tol + rep.iso_noise);
    CHECK(rep.center_residual <= rep.tol + rep.center_noise);
    // Even pair: the center vector is cancelled sample by sample.
    CHECK(rep.b.isZero(0.0));
    CHECK(rep.c == doctest::Approx(M_PI / 2.0).epsilon(0.05));
  }

  TEST_CASE("square against its incircle passes at the identity") {
    auto f = LogConcaveFunc::indicator(Body::cube(2, 2.0));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto rep = isotropy_certificate(f, g, Position::identity(2), 5e-3, opts(1 << 17));
    CHECK(rep.pass);
    CHECK(rep.b.isZero(0.0));
    CHECK(rep.c == doctest::Approx(M_PI).epsilon(0.05));
    CHECK(rep.theta_gap <= rep.tol * rep.c + 5.0 * rep.iso_noise * rep.c + 0.05);
  }

  TEST_CASE("displaced region fails on the center residual") {
    Mat rows(4, 2);
    rows << 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0;
    Vec offs(4);
    offs << 1.6, 0.4, 1.0, 1.0;
    auto f = LogConcaveFunc::indicator(Body::hpolytope(rows, offs));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto rep = isotropy_certificate(f, g, Position::identity(2), 5e-3, opts(1 << 16));
    CHECK(!rep.pass);
    CHECK(rep.center_residual > 10.0 * rep.tol);
  }

  TEST_CASE("anisotropic moment fails on the isotropy residual") {
    Mat scale(2, 2);
    scale << 0.5, 0.0, 0.0, 2.0;
    auto f = LogConcaveFunc::indicator(Body::cube(2, 1.0).affine_image(scale, Vec::Zero(2)));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto rep = isotropy_certificate(f, g, Position::identity(2), 5e-3, opts(1 << 16));
    CHECK(!rep.pass);
    CHECK(rep.iso_residual > 10.0 * rep.tol);
  }

  TEST_CASE("disjoint pair reports degenerate and fails") {
    auto f = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    Position pos = Position::identity(2);
    pos.z = v2(9.0, 0.0);
    auto rep = isotropy_certificate(f, f, pos, 5e-3, opts(1 << 12));
    CHECK(rep.degenerate);
    CHECK(!rep.pass);
  }

  TEST_CASE("ball in ball moment matrix is pi I with exact zero center") {
    auto f = LogConcaveFunc::indicator(Body::ball(2, 2.0));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto rep = isotropy_certificate(f, g, Position::identity(2), 5e-3, opts(1 << 17));
    CHECK(rep.pass);
    CHECK(std::abs(rep.m(0, 0) - M_PI) <= 3.0 * rep.bundle.g_bd_stderr(0, 0) + 1e-3);
    CHECK(std::abs(rep.m(1, 1) - M_PI) <= 3.0 * rep.bundle.g_bd_stderr(1, 1) + 1e-3);
    CHECK(rep.b.isZero(0.0));
  }

  TEST_CASE("geometric wrapper delegates to the same estimate") {
    auto a = geometric_certificate(Body::cube(2, 2.0), Body::ball(2, 1.0), Position::identity(2),
                                   5e-3, opts(1 << 14, 9));
    auto f = LogConcaveFunc::indicator(Body::cube(2, 2.0));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto b = isotropy_certificate(f, g, Position::identity(2), 5e-3, opts(1 << 14, 9));
    CHECK(a.m == b.m);
    CHECK(a.iso_residual == b.iso_residual);
    CHECK(a.pass == b.pass);
  }
}

TEST_SUITE("sphere_restricted") {
  TEST_CASE("full sphere inside the region is isotropic") {
    Body region = Body::ball(2, 2.0);
    auto density = LogConcaveFunc::indicator(region);
    auto rep = sphere_restricted_certificate(region, density, 1.5, 5e-3, opts(1 << 16));
    CHECK(rep.pass);
    CHECK(rep.samples_kept > 0);
    CHECK(rep.m.trace() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(rep.m(0, 0) - 0.5) <= rep.tol + rep.noise);
  }

  TEST_CASE("asymmetric clipping breaks isotropy") {
    Mat rows(4, 2);
    rows << 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0;
    Vec offs(4);
    offs << 1.6, 0.4, 1.0, 1.0;
    Body region = Body::hpolytope(rows, offs);
    auto density = LogConcaveFunc::indicator(region);
    auto rep = sphere_restricted_certificate(region, density, 1.2, 5e-3, opts(1 << 16));
    CHECK(!rep.pass);
    CHECK(rep.residual > 10.0 * rep.tol);
  }

  TEST_CASE("sphere missing the region entirely is rejected") {
    Body region = Body::ball(2, 1.0);
    auto density = LogConcaveFunc::indicator(region);
    CHECK_THROWS_AS(sphere_restricted_certificate(region, density, 3.0, 5e-3, opts(1 << 12)),
                    Error);
  }
}

TEST_SUITE("boundary_measure") {
  TEST_CASE("square boundary clipped by a slightly larger ball keeps edge arcs") {
    Body region = Body::cube(2, 1.0);
    auto density = LogConcaveFunc::indicator(region);
    Position pos = Position::identity(2);
    pos.t = 1.2 * Mat::Identity(2, 2);
    auto s = boundary_measure_sample(region, density, pos, 20000, 3);
    CHECK(s.drawn == 20000);
    CHECK(s.kept > 0);
    CHECK(s.kept < s.drawn);
    double tol = 1e-7;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      CHECK(region.classify(s.points[i], tol) == Region::boundary);
      CHECK(s.points[i].norm() <= 1.2 + tol);
      CHECK(s.weights[i] > 0.0);
    }
    // Kept perimeter has length 8 * sqrt(0.44); the weighted total estimates it.
    double exact = 8.0 * std::sqrt(0.44);
    CHECK(s.total == doctest::Approx(exact).epsilon(0.05));
  }

  TEST_CASE("ball image away from the boundary keeps nothing") {
    Body region = Body::cube(2, 1.0);
    auto density = LogConcaveFunc::indicator(region);
    Position pos = Position::identity(2);
    pos.z = v2(9.0, 9.0);
    CHECK_THROWS_AS(boundary_measure_sample(region, density, pos, 1000, 1), Error);
  }
}

TEST_SUITE("john_limit") {
  TEST_CASE("uniform square concentrates toward the sphere as radii shrink") {
    Body region = Body::cube(2, 1.0);
    auto density = LogConcaveFunc::indicator(region);
    OptimizeConfig cfg;
    cfg.budget_per_eval = 1 << 16;
    cfg.max_iters = 40;
    cfg.restarts = 2;
    auto rep = john_limit_measure(region, density, {1.3, 1.15}, cfg);
    REQUIRE(rep.steps.size() == 2);
    CHECK((rep.inscribed_shape - Mat::Identity(2, 2)).norm() <= 0.05 * std::sqrt(2.0));
    // Exact-position references: residual (r-1)/3, support spread sqrt(r)-1.
    CHECK(std::abs(rep.steps[0].residual - 0.1) <= 0.035);
    CHECK(rep.steps[1].residual <=
          rep.steps[0].residual +
              3.0 * std::hypot(rep.steps[0].residual_stderr, rep.steps[1].residual_stderr));
    CHECK(rep.steps[0].support_distance > rep.steps[1].support_distance);
    CHECK(rep.steps[0].support_distance == doctest::Approx(std::sqrt(1.3) - 1.0).epsilon(0.45));
    for (const auto& step : rep.steps) {
      CHECK(step.value <= 4.0 + 1e-6);
      CHECK(std::abs(step.position.t.determinant() - step.radius) <= 1e-8);
    }
  }

  TEST_CASE("radii must strictly descend and stay above one") {
    Body region = Body::cube(2, 1.0);
    auto density = LogConcaveFunc::indicator(region);
    OptimizeConfig cfg;
    cfg.budget_per_eval = 1 << 10;
    CHECK_THROWS_AS(john_limit_measure(region, density, {1.1, 1.2}, cfg), Error);
    CHECK_THROWS_AS(john_limit_measure(region, density, {1.2, 1.0}, cfg), Error);
    CHECK_THROWS_AS(john_limit_measure(region, density, {}, cfg), Error);
  }

  TEST_CASE("region away from its canonical position is rejected") {
    Mat rows(4, 2);
    rows << 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0;
    Vec offs(4);
    offs << 2.0, 2.0, 1.0, 1.0;
    Body wide = Body::hpolytope(rows, offs);
    auto density = LogConcaveFunc::indicator(wide);
    OptimizeConfig cfg;
    cfg.budget_per_eval = 1 << 13;
    CHECK_THROWS_AS(john_limit_measure(wide, density, {1.2}, cfg), Error);
  }
}
