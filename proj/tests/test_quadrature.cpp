#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mip/quadrature.hpp"

using namespace mip;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

bool within(double value, double exact, double stderror, double floor_abs = 5e-3) {
  return std::abs(value - exact) <= std::max(4.0 * stderror, floor_abs);
}

QuadOptions opts(std::uint64_t budget, std::uint64_t seed = 1, int workers = 1) {
  QuadOptions q;
  q.budget = budget;
  q.seed = seed;
  q.workers = workers;
  return q;
}

}  // namespace

TEST_SUITE("integrate_product") {
  TEST_CASE("unit ball pair at identity integrates to pi") {
    auto f = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto est = integrate_product(f, g, Position::identity(2), opts(1 << 17));
    CHECK(!est.empty);
    CHECK(est.samples > 0);
    // Draws come from the ball itself, so the weighted integrand is constant.
    CHECK(est.stderror == 0.0);
    CHECK(est.value == doctest::Approx(M_PI).epsilon(1e-12));
  }

  TEST_CASE("ball overlapping a square keeps honest sampling error") {
    auto f = LogConcaveFunc::indicator(Body::cube(2, 1.0));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.2));
    auto est = integrate_product(f, g, Position::identity(2), opts(1 << 17));
    CHECK(est.stderror > 0.0);
    CHECK(est.value > M_PI);  // more than the inscribed disc
    CHECK(est.value < 4.0);   // less than the square
  }

  TEST_CASE("matched standard gaussians integrate to pi") {
    Mat s = Mat::Identity(2, 2);
    auto f = LogConcaveFunc::gaussian(s, Vec::Zero(2));
    auto g = LogConcaveFunc::gaussian(s, Vec::Zero(2));
    auto est = integrate_product(f, g, Position::identity(2), opts(1 << 17));
    CHECK(within(est.value, M_PI, est.stderror));
  }

  TEST_CASE("gaussian pair with transform and shift matches the closed form") {
    Mat s = Mat::Identity(2, 2);
    auto f = LogConcaveFunc::gaussian(s, Vec::Zero(2));
    auto g = LogConcaveFunc::gaussian(s, Vec::Zero(2));
    Position pos;
    pos.t = Mat::Zero(2, 2);
    pos.t << 2.0, 0.0, 0.0, 0.5;
    pos.z = v2(1.0, 0.0);
    // Quadratic forms I and diag(1/4, 4); the shift decays by the harmonic combination.
    double exact = 2.0 * M_PI / 2.5 * std::exp(-0.1);
    auto est = integrate_product(f, g, pos, opts(1 << 17));
    CHECK(within(est.value, exact, est.stderror, 1e-2));
  }

  TEST_CASE("provably disjoint supports report empty") {
    auto f = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    Position pos = Position::identity(2);
    pos.z = v2(5.0, 0.0);
    auto est = integrate_product(f, g, pos, opts(1 << 10));
    CHECK(est.empty);
    CHECK(est.value == 0.0);
  }

  TEST_CASE("same seed reproduces bitwise, different seed does not") {
    auto f = LogConcaveFunc::indicator(Body::cube(2, 1.0));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.2));
    auto a = integrate_product(f, g, Position::identity(2), opts(1 << 14, 7));
    auto b = integrate_product(f, g, Position::identity(2), opts(1 << 14, 7));
    auto c = integrate_product(f, g, Position::identity(2), opts(1 << 14, 8));
    CHECK(a.value == b.value);
    CHECK(a.stderror == b.stderror);
    CHECK(a.seed == 7);
    CHECK(a.value != c.value);
  }

  TEST_CASE("worker count never changes the result") {
    Mat s = Mat::Identity(2, 2);
    auto f = LogConcaveFunc::gaussian(s, Vec::Zero(2));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto one = integrate_product(f, g, Position::identity(2), opts(1 << 15, 3, 1));
    auto eight = integrate_product(f, g, Position::identity(2), opts(1 << 15, 3, 8));
    CHECK(one.value == eight.value);
    CHECK(one.stderror == eight.stderror);
    CHECK(one.samples == eight.samples);
  }
}

TEST_SUITE("moment_bundle") {
  TEST_CASE("cube enclosing the unit ball: boundary second moment is pi I") {
    auto f = LogConcaveFunc::indicator(Body::cube(2, 2.0));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto mb = moment_bundle(f, g, opts(1 << 17));
    CHECK(!mb.empty);
    CHECK(mb.samples_boundary > 0);
    // On the unit circle n = x, so the boundary tensor is the circle's xx^T integral.
    CHECK(within(mb.g_bd(0, 0), M_PI, mb.g_bd_stderr(0, 0)));
    CHECK(within(mb.g_bd(1, 1), M_PI, mb.g_bd_stderr(1, 1)));
    CHECK(within(mb.g_bd(0, 1), 0.0, mb.g_bd_stderr(0, 1)));
    CHECK(within(mb.s_bd, 2.0 * M_PI, mb.s_bd_stderr));
    // Indicator g has zero potential gradient inside, so interior fields vanish.
    CHECK(mb.g_int.isZero(0.0));
    CHECK(mb.s_int == 0.0);
    // Even pair: antithetic pairing cancels the odd first moments exactly.
    CHECK(mb.antithetic);
    CHECK(mb.v_bd.isZero(0.0));
    CHECK(mb.v_int.isZero(0.0));
  }

  TEST_CASE("gaussian pair: interior moment is (pi/2) I and no boundary") {
    Mat s = Mat::Identity(2, 2);
    auto f = LogConcaveFunc::gaussian(s, Vec::Zero(2));
    auto g = LogConcaveFunc::gaussian(s, Vec::Zero(2));
    auto mb = moment_bundle(f, g, opts(1 << 17));
    CHECK(within(mb.g_int(0, 0), M_PI / 2.0, mb.g_int_stderr(0, 0)));
    CHECK(within(mb.g_int(1, 1), M_PI / 2.0, mb.g_int_stderr(1, 1)));
    CHECK(within(mb.g_int(0, 1), 0.0, mb.g_int_stderr(0, 1)));
    // Full-space support: the boundary layer is empty by construction.
    CHECK(mb.samples_boundary == 0);
    CHECK(mb.g_bd.isZero(0.0));
    CHECK(mb.v_bd.isZero(0.0));
    CHECK(mb.s_bd == 0.0);
    CHECK(mb.v_int.isZero(0.0));
  }

  TEST_CASE("displaced ball boundary first moment matches the arc formula") {
    auto f = LogConcaveFunc::indicator(Body::cube(2, 1.0));
    auto base = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    Position pos = Position::identity(2);
    pos.z = v2(0.3, 0.0);
    auto g = base.pullback(pos);
    auto mb = moment_bundle(f, g, opts(1 << 17));
    // The circle centered at 0.3 loses the cap beyond x = 1; the surviving
    // normal integral is minus the cap's, with half-width sqrt(1 - 0.49).
    double exact = -2.0 * std::sqrt(0.51);
    CHECK(!mb.antithetic);
    CHECK(within(mb.v_bd(0), exact, mb.v_bd_stderr(0)));
    CHECK(within(mb.v_bd(1), 0.0, mb.v_bd_stderr(1)));
  }

  TEST_CASE("bundle is worker-invariant and seed-reproducible") {
    auto f = LogConcaveFunc::indicator(Body::cube(2, 2.0));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto one = moment_bundle(f, g, opts(1 << 14, 5, 1));
    auto eight = moment_bundle(f, g, opts(1 << 14, 5, 8));
    CHECK(one.g_bd == eight.g_bd);
    CHECK(one.s_bd == eight.s_bd);
    CHECK(one.samples_interior == eight.samples_interior);
    CHECK(one.samples_boundary == eight.samples_boundary);
    CHECK(one.seed == 5);
  }

  TEST_CASE("disjoint pair reports empty") {
    auto f = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto base = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    Position pos = Position::identity(2);
    pos.z = v2(9.0, 9.0);
    auto mb = moment_bundle(f, base.pullback(pos), opts(1 << 10));
    CHECK(mb.empty);
  }
}

TEST_SUITE("polar_identity") {
  TEST_CASE("constant phi on the unit ball gives 2 pi on both sides") {
    auto phi = [](const Vec&) { return 1.0; };
    auto [lhs, rhs] = polar_identity_check(phi, Body::ball(2, 1.0), Mat::Identity(2, 2),
                                           Mat::Identity(2, 2), opts(1 << 16));
    double se = std::hypot(lhs.stderror, rhs.stderror);
    CHECK(within(lhs.value, 2.0 * M_PI, lhs.stderror));
    CHECK(within(rhs.value, 2.0 * M_PI, rhs.stderror));
    CHECK(std::abs(lhs.value - rhs.value) <= std::max(4.0 * se, 5e-3));
  }

  TEST_CASE("identity holds for a sheared ellipsoid and generic matrix") {
    Mat shape(2, 2);
    shape << 1.3, 0.2, 0.2, 0.9;
    Mat a(2, 2);
    a << 0.5, -0.3, 0.2, 0.8;
    Mat t(2, 2);
    t << 1.0, 0.3, 0.0, 1.0;
    auto phi = [](const Vec& x) { return 1.0 / (1.0 + x.squaredNorm()); };
    auto [lhs, rhs] = polar_identity_check(phi, Body::ellipsoid(shape), a, t, opts(1 << 16));
    double se = std::hypot(lhs.stderror, rhs.stderror);
    CHECK(std::abs(lhs.value - rhs.value) <= std::max(4.0 * se, 5e-3));
  }
}
