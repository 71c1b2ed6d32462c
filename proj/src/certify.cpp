#include "mip/certify.hpp"

#include <algorithm>
#include <cmath>

namespace mip {
namespace {

constexpr double kMassFloor = 1e-30;

double center_scale_of(const LogConcaveFunc& f, const LogConcaveFunc& g_pos) {
  const Body& gs = g_pos.support();
  if (gs.bounded()) return gs.bounding_center().norm() + gs.bounding_radius();
  const Proposal prop = fit_gaussian_proposal(f, g_pos, 1e-12, false);
  return prop.scale;
}

}  // namespace

CertificateReport isotropy_certificate(const LogConcaveFunc& f, const LogConcaveFunc& g,
                                       const Position& pos, double tol, const QuadOptions& opts) {
  require(f.dim() == g.dim(), ErrorCode::dimension_mismatch, "function dimension mismatch");
  require(tol > 0.0, ErrorCode::invalid_argument, "tolerance must be positive");
  const int n = f.dim();
  const LogConcaveFunc g_pos = g.pullback(pos);

  CertificateReport rep;
  rep.tol = tol;
  rep.bundle = moment_bundle(f, g_pos, opts);
  rep.m = rep.bundle.g_int + rep.bundle.g_bd;
  rep.c = rep.m.trace() / double(n);
  rep.b = rep.bundle.v_int + rep.bundle.v_bd;
  rep.center_scale = center_scale_of(f, g_pos);

  const Mat m_stderr =
      (rep.bundle.g_int_stderr.array().square() + rep.bundle.g_bd_stderr.array().square()).sqrt();
  const Vec b_stderr =
      (rep.bundle.v_int_stderr.array().square() + rep.bundle.v_bd_stderr.array().square()).sqrt();

  rep.degenerate = rep.bundle.empty || !(std::abs(rep.c) > kMassFloor);

  Mat defect = rep.m;
  defect.diagonal().array() -= rep.c;
  const double denom =
      std::max({std::abs(rep.c) * std::sqrt(double(n)), rep.m.norm(), kMassFloor});
  rep.iso_residual = defect.norm() / denom;
  rep.iso_noise = 3.0 * m_stderr.norm() / denom;
  rep.center_residual = rep.b.norm() / rep.center_scale;
  rep.center_noise = 3.0 * b_stderr.norm() / rep.center_scale;

  for (int i = 0; i < n; ++i) {
    rep.theta_gap = std::max(rep.theta_gap, std::abs(rep.m(i, i) - rep.c));
    for (int j = i + 1; j < n; ++j) {
      // directions (e_i +- e_j)/sqrt(2)
      const double plus = 0.5 * (rep.m(i, i) + rep.m(j, j) + rep.m(i, j) + rep.m(j, i));
      const double minus = 0.5 * (rep.m(i, i) + rep.m(j, j) - rep.m(i, j) - rep.m(j, i));
      rep.theta_gap = std::max({rep.theta_gap, std::abs(plus - rep.c), std::abs(minus - rep.c)});
    }
  }

  rep.pass = !rep.degenerate && rep.iso_residual <= tol + rep.iso_noise &&
             rep.center_residual <= tol + rep.center_noise;
  return rep;
}

CertificateReport geometric_certificate(const Body& kf, const Body& kg, const Position& pos,
                                        double tol, const QuadOptions& opts) {
  return isotropy_certificate(LogConcaveFunc::indicator(kf), LogConcaveFunc::indicator(kg), pos,
                              tol, opts);
}

SphereMomentReport sphere_restricted_certificate(const Body& region, const LogConcaveFunc& density,
                                                 double radius, double tol,
                                                 const QuadOptions& opts) {
  require(region.dim() == density.dim(), ErrorCode::dimension_mismatch,
          "region dimension mismatch");
  require(radius > 0.0, ErrorCode::invalid_argument, "radius must be positive");
  require(tol > 0.0, ErrorCode::invalid_argument, "tolerance must be positive");
  require(opts.budget >= 1000, ErrorCode::precondition, "budget too small");
  const int n = region.dim();

  const Body sphere = Body::ball(n, radius);
  const SurfaceSample sample = sphere.surface_sample(opts.budget, opts.seed);
  const double r2 = radius * radius;
  double mass = 0.0;
  Mat num = Mat::Zero(n, n);
  Mat num_sq = Mat::Zero(n, n);
  std::uint64_t kept = 0;
  for (const SurfacePoint& p : sample.points) {
    if (region.classify(p.x) == Region::exterior) continue;
    const double w = p.weight * density.evaluate(p.x);
    if (w == 0.0) continue;
    ++kept;
    mass += w;
    const Mat term = (w / r2) * (p.x * p.x.transpose());
    num += term;
    num_sq += term.cwiseProduct(term) * double(opts.budget);
  }
  require(kept > 0, ErrorCode::empty_region, "no density mass on the restricted sphere");
  require(mass > kMassFloor, ErrorCode::empty_region, "no density mass on the restricted sphere");

  SphereMomentReport rep;
  rep.tol = tol;
  rep.mass = mass;
  rep.samples_kept = kept;
  rep.m = num / mass;
  const double c = rep.m.trace() / double(n);
  Mat defect = rep.m;
  defect.diagonal().array() -= c;
  const double denom = std::max(std::abs(c) * std::sqrt(double(n)), kMassFloor);
  rep.residual = defect.norm() / denom;

  // entrywise stderr of the weighted mean, scaled into the same ratio
  const std::uint64_t count = opts.budget;
  Mat se(n, n);
  const Mat mean = num / double(count);
  const Mat meansq = num_sq / double(count);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double var = (meansq(i, j) - double(count) * mean(i, j) * mean(i, j) / double(count));
      var = std::max(var / double(count > 1 ? count - 1 : 1), 0.0);
      se(i, j) = std::sqrt(var / double(count)) * double(count) / mass;
    }
  rep.noise = 3.0 * se.norm() / denom;
  rep.pass = rep.residual <= tol + rep.noise;
  return rep;
}

BoundaryMeasureSample boundary_measure_sample(const Body& region, const LogConcaveFunc& density,
                                              const Position& ball_pos, std::uint64_t count,
                                              std::uint64_t seed) {
  require(region.dim() == density.dim(), ErrorCode::dimension_mismatch,
          "region dimension mismatch");
  require(count >= 1, ErrorCode::invalid_argument, "count must be positive");
  const int n = region.dim();
  const Body ball = Body::ball(n, 1.0);
  const Mat t_inv = ball_pos.t.inverse();
  const SurfaceSample sample = region.surface_sample(count, seed);

  BoundaryMeasureSample out;
  out.drawn = count;
  for (const SurfacePoint& p : sample.points) {
    const Vec u = t_inv * (p.x - ball_pos.z);
    if (ball.classify(u) == Region::exterior) continue;
    const double w = p.weight * density.evaluate(p.x);
    if (w == 0.0) continue;
    out.points.push_back(p.x);
    out.weights.push_back(w);
    out.total += w;
    ++out.kept;
  }
  require(out.kept > 0, ErrorCode::empty_region, "boundary region carries no measure");
  return out;
}

JohnReport john_limit_measure(const Body& region, const LogConcaveFunc& density,
                              const std::vector<double>& radii, const OptimizeConfig& cfg) {
  require(region.dim() == density.dim(), ErrorCode::dimension_mismatch,
          "region dimension mismatch");
  require(!radii.empty(), ErrorCode::invalid_argument, "radii must be non-empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    require(radii[i] > 1.0, ErrorCode::invalid_argument, "radii must exceed 1");
    require(i == 0 || radii[i] < radii[i - 1], ErrorCode::invalid_argument,
            "radii must descend toward 1");
  }
  const int n = region.dim();

  JohnReport rep;
  const InscribedResult ins = max_inscribed_ellipsoid(region, density, cfg);
  rep.inscribed_shape = ins.shape;
  require((ins.shape - Mat::Identity(n, n)).norm() <= 0.05 * std::sqrt(double(n)),
          ErrorCode::precondition, "region is not in its measure John position");

  const LogConcaveFunc ball_ind = LogConcaveFunc::indicator(Body::ball(n, 1.0));
  OptimizeConfig chain_cfg = cfg;
  chain_cfg.restarts = 1;  // later radii refine the warm chain only
  std::optional<Position> warm;
  double prev_r = 0.0;
  for (const double r : radii) {
    OptimizeResult opt;
    if (warm) {
      Position start{std::pow(r / prev_r, 1.0 / double(n)) * warm->t, warm->z};
      opt = maximize(density, ball_ind, DetMode::fixed_det, r, chain_cfg, start);
    } else {
      opt = maximize(density, ball_ind, DetMode::fixed_det, r, cfg);
    }
    warm = opt.position;
    prev_r = r;

    const BoundaryMeasureSample bms = boundary_measure_sample(
        region, density, opt.position, cfg.budget_per_eval,
        cfg.seed ^ (0x9e3779b97f4a7c15ull * std::uint64_t(rep.steps.size() + 1)));

    Mat num = Mat::Zero(n, n);
    Mat num_sq = Mat::Zero(n, n);
    double dist = 0.0;
    for (std::uint64_t i = 0; i < bms.kept; ++i) {
      const Vec& x = bms.points[i];
      const Mat term = bms.weights[i] * (x * x.transpose());
      num += term;
      num_sq += term.cwiseProduct(term);
      dist = std::max(dist, std::abs(x.norm() - 1.0));
    }
    const Mat second = num / bms.total;
    const Mat target = Mat::Identity(n, n) / double(n);
    const double denom = target.norm();

    JohnStep step;
    step.radius = r;
    step.value = opt.value;
    step.position = opt.position;
    step.converged = opt.converged;
    step.residual = (second - target).norm() / denom;
    step.support_distance = dist;
    // stderr of the weighted second moment entries, in residual units
    const double kept = double(bms.kept);
    if (bms.kept > 1) {
      Mat se(n, n);
      const Mat mean = num / kept;
      const Mat meansq = num_sq / kept;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          double var = std::max(meansq(a, b) - mean(a, b) * mean(a, b), 0.0);
          se(a, b) = std::sqrt(var / kept) * kept / bms.total;
        }
      step.residual_stderr = se.norm() / denom;
    }
    rep.steps.push_back(std::move(step));
  }
  return rep;
}

}  // namespace mip
