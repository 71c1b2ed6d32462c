#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mip/variation.hpp"

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

double fd_bound(const FdCheck& c) {
  double se = std::hypot(c.analytic_stderr, c.numeric_stderr);
  return std::max(3.0 * se, 2e-3 * std::abs(c.numeric) + 1e-6);
}

}  // namespace

TEST_SUITE("directions") {
  TEST_CASE("traceless projection removes the trace and nothing else") {
    Mat d(2, 2);
    d << 2.0, 1.0, 3.0, 4.0;
    Mat p = traceless_part(d);
    CHECK(p.trace() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(p(0, 0) == doctest::Approx(-1.0));
    CHECK(p(0, 1) == doctest::Approx(1.0));
    CHECK(p(1, 0) == doctest::Approx(3.0));
    CHECK(p(1, 1) == doctest::Approx(1.0));
  }

  TEST_CASE("determinant constraint checks per mode") {
    Mat t(2, 2);
    t << 2.0, 0.0, 0.0, 0.5;
    CHECK_NOTHROW(check_det(t, DetMode::unit_det, 0.0));
    CHECK_NOTHROW(check_det(t, DetMode::free_det, 0.0));
    CHECK_NOTHROW(check_det(2.0 * Mat::Identity(2, 2), DetMode::fixed_det, 4.0));
    CHECK_THROWS_AS(check_det(2.0 * Mat::Identity(2, 2), DetMode::unit_det, 0.0), Error);
    CHECK_THROWS_AS(check_det(t, DetMode::fixed_det, 2.0), Error);
    CHECK_THROWS_AS(check_det(Mat::Zero(2, 2), DetMode::free_det, 0.0), Error);
  }
}

TEST_SUITE("directional_derivatives") {
  TEST_CASE("slab against unit ball: boundary term matches the arc integral") {
    Mat scale(2, 2);
    scale << 0.5, 0.0, 0.0, 2.0;
    auto f = LogConcaveFunc::indicator(Body::cube(2, 1.0).affine_image(scale, Vec::Zero(2)));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    Mat dir(2, 2);
    dir << 1.0, 0.0, 0.0, -1.0;
    auto rep = sl_directional_derivative(f, g, dir, opts(1 << 17));
    // Indicators carry no interior gradient; the whole derivative lives on the arcs.
    CHECK(rep.interior_term == 0.0);
    double bound = std::max(4.0 * rep.total_stderr, 5e-3);
    CHECK(std::abs(rep.total - (-std::sqrt(3.0))) <= bound);
    CHECK(rep.total == rep.interior_term + rep.boundary_term);
  }

  TEST_CASE("interval pair: shift derivative counts the surviving endpoint") {
    Mat one = Mat::Identity(1, 1);
    Vec shift(1);
    shift << 1.0;
    auto f = LogConcaveFunc::indicator(Body::cube(1, 1.0).affine_image(one, shift));
    auto g = LogConcaveFunc::indicator(Body::cube(1, 1.0));
    Vec y(1);
    y << 1.0;
    auto rep = shift_directional_derivative(f, g, y, opts(1 << 16));
    CHECK(rep.interior_term == 0.0);
    CHECK(std::abs(rep.total - 1.0) <= std::max(4.0 * rep.total_stderr, 5e-3));
  }

  TEST_CASE("gradient of an even pair has bitwise zero shift component") {
    auto f = LogConcaveFunc::indicator(Body::cube(2, 2.0));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto grad = gradient(f, g, opts(1 << 16));
    CHECK(grad.v.isZero(0.0));
    CHECK(std::abs(grad.g.trace()) <= 1e-12);
    // The raw moment keeps its trace; here it is the circle tensor pi I.
    CHECK(grad.m_raw(0, 0) == doctest::Approx(M_PI).epsilon(0.05));
    CHECK(grad.bundle.samples_boundary > 0);
  }
}

TEST_SUITE("finite_difference") {
  TEST_CASE("analytic derivative matches central differences for gaussians") {
    Mat sf = Mat::Identity(2, 2);
    Mat sg(2, 2);
    sg << 2.0, 0.0, 0.0, 0.5;
    auto f = LogConcaveFunc::gaussian(sf, Vec::Zero(2));
    auto g = LogConcaveFunc::gaussian(sg, Vec::Zero(2));
    Mat dir(2, 2);
    dir << 1.0, 0.4, 0.4, -1.0;
    auto c = fd_check_sl(f, g, dir, 0.02, opts(1 << 16));
    CHECK(c.gap <= fd_bound(c));
  }

  TEST_CASE("shift derivative matches central differences off center") {
    Mat rows(4, 2);
    rows << 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0;
    Vec offs(4);
    offs << 1.6, 0.4, 1.0, 1.0;
    auto f = LogConcaveFunc::indicator(Body::hpolytope(rows, offs));
    auto g = LogConcaveFunc::gaussian(Mat::Identity(2, 2), Vec::Zero(2));
    auto c = fd_check_shift(f, g, v2(0.8, 0.6), 0.02, opts(1 << 16));
    CHECK(c.gap <= fd_bound(c));
    CHECK(std::abs(c.numeric) > 1e-3);
  }

  TEST_CASE("step size outside the stable window is rejected") {
    auto f = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    CHECK_THROWS_AS(fd_check_sl(f, g, Mat::Identity(2, 2), 1e-5, opts(1 << 10)), Error);
    CHECK_THROWS_AS(fd_check_shift(f, g, v2(1.0, 0.0), 0.5, opts(1 << 10)), Error);
  }
}

TEST_SUITE("laplace_line") {
  TEST_CASE("frozen closed-form values") {
    CHECK(laplace_pair_integral(1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(laplace_pair_integral(2.0, 0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(laplace_pair_integral(1.0, 1.0) == doctest::Approx(2.0 / M_E).epsilon(1e-12));
  }

  TEST_CASE("even in the offset") {
    CHECK(laplace_pair_integral(0.7, 1.3) == laplace_pair_integral(0.7, -1.3));
  }

  TEST_CASE("branches join continuously") {
    for (double s : {0.0, 0.7, 2.0}) {
      double at_one = laplace_pair_integral(1.0, s);
      CHECK(std::abs(laplace_pair_integral(1.0 + 1e-13, s) - at_one) <= 1e-11);
      CHECK(std::abs(laplace_pair_integral(1.0 - 1e-13, s) - at_one) <= 1e-11);
      CHECK(std::abs(laplace_pair_integral(1.0 + 1e-7, s) - at_one) <= 1e-6);
      CHECK(std::abs(laplace_pair_integral(1.0 - 1e-7, s) - at_one) <= 1e-6);
    }
  }

  TEST_CASE("nonpositive or non-finite scale is rejected") {
    CHECK_THROWS_AS(laplace_pair_integral(0.0, 1.0), Error);
    CHECK_THROWS_AS(laplace_pair_integral(-1.0, 0.0), Error);
    CHECK_THROWS_AS(laplace_pair_integral(std::nan(""), 0.0), Error);
  }
}

TEST_SUITE("decay_bounds") {
  TEST_CASE("linear decay fits for the stock densities") {
    auto exp_ball = fit_linear_decay(LogConcaveFunc::gauge_power(Body::ball(2, 1.0), 1.0));
    CHECK(exp_ball.slope == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(exp_ball.offset == doctest::Approx(0.0).epsilon(1e-9));
    auto ind_ball = fit_linear_decay(LogConcaveFunc::indicator(Body::ball(2, 1.0)));
    CHECK(ind_ball.slope == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ind_ball.offset == doctest::Approx(-1.0).epsilon(1e-9));
    auto gauss = fit_linear_decay(LogConcaveFunc::gaussian(Mat::Identity(2, 2), Vec::Zero(2)));
    CHECK(gauss.slope == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(gauss.offset == doctest::Approx(-50.0).epsilon(1e-9));
  }

  TEST_CASE("upper bound is exact for the one dimensional exponential pair") {
    DecayFit d{1.0, 0.0};
    double bound = objective_upper_bound(d, d, Mat::Identity(1, 1));
    // Integral of e^{-2|t|} over the line; the bound collapses to it.
    CHECK(bound == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("upper bound dominates the exponential-gauge pair objective") {
    auto f = LogConcaveFunc::gauge_power(Body::ball(2, 1.0), 1.0);
    DecayFit d{1.0, 0.0};
    double bound = objective_upper_bound(d, d, Mat::Identity(2, 2));
    CHECK(bound == doctest::Approx(2.0).epsilon(1e-12));
    auto est = integrate_product(f, f, Position::identity(2), opts(1 << 15));
    CHECK(est.value + 3.0 * est.stderror <= bound);
    CHECK(est.value == doctest::Approx(M_PI / 2.0).epsilon(0.05));
  }

  TEST_CASE("degenerate slopes are rejected") {
    CHECK_THROWS_AS(objective_upper_bound({0.0, 0.0}, {1.0, 0.0}, Mat::Identity(2, 2)), Error);
  }
}

TEST_SUITE("objective_and_crn") {
  TEST_CASE("objective enforces the determinant mode") {
    auto f = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    Position pos = Position::identity(2);
    auto est = objective(f, g, pos, DetMode::unit_det, 0.0, opts(1 << 14, 3));
    auto ref = integrate_product(f, g, pos, opts(1 << 14, 3));
    CHECK(est.value == ref.value);
    pos.t = 2.0 * Mat::Identity(2, 2);
    CHECK_THROWS_AS(objective(f, g, pos, DetMode::unit_det, 0.0, opts(1 << 10)), Error);
    CHECK_NOTHROW(objective(f, g, pos, DetMode::fixed_det, 4.0, opts(1 << 10)));
  }

  TEST_CASE("shared-sample evaluator agrees with the direct estimator") {
    auto f = LogConcaveFunc::gaussian(Mat::Identity(2, 2), Vec::Zero(2));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    CrnObjective crn(f, g, opts(1 << 16));
    auto a = crn.evaluate(Mat::Identity(2, 2), Vec::Zero(2));
    auto b = integrate_product(f, g, Position::identity(2), opts(1 << 16, 2));
    CHECK(std::abs(a.value - b.value) <= 4.0 * std::hypot(a.stderror, b.stderror) + 5e-3);
  }

  TEST_CASE("evaluator carries the jacobian factor") {
    auto f = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    CrnObjective crn(f, g, opts(1 << 16));
    // f(2u) g(u) |det 2I| integrates to four times the area of the half ball.
    auto est = crn.evaluate(2.0 * Mat::Identity(2, 2), Vec::Zero(2));
    CHECK(est.value == doctest::Approx(M_PI).epsilon(0.05));
  }

  TEST_CASE("paired difference equals the difference of evaluations") {
    auto f = LogConcaveFunc::gaussian(Mat::Identity(2, 2), Vec::Zero(2));
    auto g = LogConcaveFunc::indicator(Body::ball(2, 1.0));
    CrnObjective crn(f, g, opts(1 << 14));
    Mat tp = Mat::Identity(2, 2) * 1.05;
    Mat tm = Mat::Identity(2, 2) * 0.95;
    auto d = crn.difference(tp, v2(0.1, 0.0), tm, v2(-0.1, 0.0), 0.2);
    auto hi = crn.evaluate(tp, v2(0.1, 0.0));
    auto lo = crn.evaluate(tm, v2(-0.1, 0.0));
    CHECK(d.value == doctest::Approx((hi.value - lo.value) / 0.2).epsilon(1e-9));
  }
}
