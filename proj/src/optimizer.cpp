#include "mip/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace mip {
namespace {

constexpr std::uint32_t kInscribedStream = 17;
constexpr double kEtaMin = 1e-6;

QuadOptions quad_options(const OptimizeConfig& cfg, std::uint64_t seed) {
  QuadOptions qo;
  qo.budget = cfg.budget_per_eval;
  qo.seed = seed;
  qo.workers = cfg.workers;
  return qo;
}

void check_config(const OptimizeConfig& cfg) {
  require(cfg.budget_per_eval >= 1000, ErrorCode::precondition, "budget too small");
  require(cfg.max_iters >= 1, ErrorCode::invalid_argument, "max_iters must be positive");
  require(cfg.step_init > 0.0, ErrorCode::invalid_argument, "step_init must be positive");
  require(cfg.armijo_c > 0.0 && cfg.armijo_c < 1.0, ErrorCode::invalid_argument,
          "armijo_c must lie in (0,1)");
  require(cfg.grad_tol > 0.0, ErrorCode::invalid_argument, "grad_tol must be positive");
  require(cfg.restarts >= 1, ErrorCode::invalid_argument, "restarts must be positive");
  require(cfg.workers >= 1, ErrorCode::invalid_argument, "workers must be positive");
}

double det_target_of(DetMode mode, double det_target) {
  if (mode == DetMode::fixed_det) {
    require(det_target > 0.0, ErrorCode::invalid_argument, "determinant target must be positive");
    return det_target;
  }
  return 1.0;
}

Mat normalize_det(const Mat& t, DetMode mode, double target) {
  if (mode == DetMode::free_det) return t;
  const int n = int(t.rows());
  const double d = t.determinant();
  require(d > 1e-300, ErrorCode::precondition, "transform determinant must stay positive");
  Mat out = t * std::pow(target / d, 1.0 / double(n));
  require(std::abs(out.determinant() - target) <= 1e-8 * target, ErrorCode::internal,
          "determinant normalization drifted");
  return out;
}

Mat random_rotation(int n, const Rng& rng, std::uint64_t index) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal(index, std::uint32_t(i * n + j));
  const Eigen::HouseholderQR<Mat> qr(m);
  Mat q = qr.householderQ();
  if (q.determinant() < 0.0) q.col(0) = -q.col(0);
  return q;
}

Position start_position(const LogConcaveFunc& f, const LogConcaveFunc& g, DetMode mode,
                        double target, int restart, const Rng& rng) {
  const int n = f.dim();
  const double scale = (mode == DetMode::fixed_det) ? std::pow(target, 1.0 / double(n)) : 1.0;
  Mat t = scale * Mat::Identity(n, n);
  if (restart > 0) t = scale * random_rotation(n, rng, std::uint64_t(restart));
  // Anchor the g mode onto the f mode so the product is positive somewhere.
  Vec z = f.mode_hint() - t * g.mode_hint();
  if (restart > 0) {
    Vec jitter(n);
    for (int j = 0; j < n; ++j)
      jitter[j] = rng.normal(std::uint64_t(restart), std::uint32_t(n * n + j));
    z += 0.25 * (1.0 + z.norm()) * jitter;
  }
  return Position{t, z};
}

struct RestartOutcome {
  Position pos;
  double crn_value = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  bool viable = false;
  std::vector<TrajectoryPoint> trajectory;
};

RestartOutcome run_restart(const LogConcaveFunc& f, const LogConcaveFunc& g, DetMode mode,
                           double target, const OptimizeConfig& cfg, const CrnObjective& crn,
                           const std::optional<std::pair<DecayFit, DecayFit>>& decays,
                           const Position& start) {
  const int n = f.dim();
  RestartOutcome out;
  out.pos = start;
  const std::uint64_t grad_seed = cfg.seed ^ 0x6d9f2c433a1bull;
  const QuadOptions grad_opts = quad_options(cfg, grad_seed);

  double current = crn.evaluate(out.pos.t, out.pos.z).value;
  const Mat eye = Mat::Identity(n, n);
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const GradientResult gr = gradient(f, g.pullback(out.pos), grad_opts);
    const Mat& gmat = (mode == DetMode::free_det) ? gr.m_raw : gr.g;
    const double joint = std::sqrt(gmat.squaredNorm() + gr.v.squaredNorm());
    const double noise = std::sqrt(gr.g_stderr.squaredNorm() + gr.v_stderr.squaredNorm());
    out.grad_norm = joint;
    out.trajectory.push_back({iter, current, joint});
    if (current == 0.0 && joint == 0.0) return out;  // no overlap signal at all
    out.viable = true;
    // Stop once the remaining signal is below tolerance or below what the
    // gradient estimate can resolve.
    if (joint <= std::max(cfg.grad_tol, 2.0 * noise)) {
      out.converged = true;
      break;
    }
    const Mat dir_t = gmat / joint;
    const Vec dir_z = gr.v / joint;
    bool accepted = false;
    for (double eta = cfg.step_init; eta >= kEtaMin; eta *= 0.5) {
      Mat cand_t = (eye + eta * dir_t) * out.pos.t;
      if (mode != DetMode::free_det && cand_t.determinant() <= 1e-300) continue;
      cand_t = normalize_det(cand_t, mode, target);
      const Vec cand_z = out.pos.z + eta * dir_z;
      if (decays && objective_upper_bound(decays->first, decays->second, cand_t) < current)
        continue;  // certified bound already rules the candidate out
      const double cand_val = crn.evaluate(cand_t, cand_z).value;
      if (cand_val >= current + cfg.armijo_c * eta * joint) {
        require(cand_val > current, ErrorCode::internal, "objective must increase when accepted");
        out.pos = Position{cand_t, cand_z};
        current = cand_val;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.crn_value = current;
  return out;
}

OptimizeResult maximize_impl(const LogConcaveFunc& f, const LogConcaveFunc& g, DetMode mode,
                             double det_target, const OptimizeConfig& cfg, const Position* warm) {
  require(f.dim() == g.dim(), ErrorCode::dimension_mismatch, "function dimension mismatch");
  check_config(cfg);
  const double target = det_target_of(mode, det_target);
  const QuadOptions qo = quad_options(cfg, cfg.seed);
  const CrnObjective crn(f, g, qo);

  std::optional<std::pair<DecayFit, DecayFit>> decays;
  try {
    decays.emplace(fit_linear_decay(f), fit_linear_decay(g));
  } catch (const Error&) {
    // no certified decay, run without the divergence guard
  }

  const Rng start_rng(cfg.seed, 19);
  std::optional<RestartOutcome> best;
  Position initial = Position::identity(f.dim());
  for (int r = 0; r < cfg.restarts; ++r) {
    Position start = (r == 0 && warm != nullptr)
                         ? *warm
                         : start_position(f, g, mode, target, r, start_rng);
    if (mode != DetMode::free_det) start.t = normalize_det(start.t, mode, target);
    if (r == 0) initial = start;
    RestartOutcome outcome = run_restart(f, g, mode, target, cfg, crn, decays, start);
    if (!outcome.viable) continue;
    if (!best || outcome.crn_value > best->crn_value) best = std::move(outcome);
  }

  OptimizeResult result;
  result.restarts_used = cfg.restarts;
  if (!best) {
    result.position = initial;
    const IntegralEstimate est = integrate_product(f, g, initial, qo);
    result.value = est.value;
    result.value_stderr = est.stderror;
    return result;
  }
  result.position = best->pos;
  result.grad_norm = best->grad_norm;
  result.converged = best->converged;
  result.trajectory = std::move(best->trajectory);
  const IntegralEstimate est = integrate_product(f, g, result.position, qo);
  result.value = est.value;
  result.value_stderr = est.stderror;
  return result;
}

}  // namespace

OptimizeResult maximize(const LogConcaveFunc& f, const LogConcaveFunc& g, DetMode mode,
                        double det_target, const OptimizeConfig& cfg) {
  return maximize_impl(f, g, mode, det_target, cfg, nullptr);
}

OptimizeResult maximize(const LogConcaveFunc& f, const LogConcaveFunc& g, DetMode mode,
                        double det_target, const OptimizeConfig& cfg, const Position& warm_start) {
  return maximize_impl(f, g, mode, det_target, cfg, &warm_start);
}

std::vector<ScanPoint> scan_radius(const LogConcaveFunc& f, const LogConcaveFunc& g,
                                   const std::vector<double>& radii, const OptimizeConfig& cfg) {
  require(!radii.empty(), ErrorCode::invalid_argument, "radii must be non-empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    require(radii[i] >= 1.0, ErrorCode::invalid_argument, "radii must be at least 1");
    require(i == 0 || radii[i] > radii[i - 1], ErrorCode::invalid_argument,
            "radii must be strictly ascending");
  }
  const int n = f.dim();
  std::vector<ScanPoint> out;
  out.reserve(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double r = radii[i];
    std::optional<Position> warm;
    if (i > 0) {
      const double grow = std::pow(r / radii[i - 1], 1.0 / double(n));
      warm = Position{grow * out.back().position.t, out.back().position.z};
    }
    const OptimizeResult res =
        maximize_impl(f, g, DetMode::fixed_det, r, cfg, warm ? &*warm : nullptr);
    ScanPoint pt;
    pt.radius = r;
    pt.value = res.value;
    pt.value_stderr = res.value_stderr;
    pt.position = res.position;
    pt.converged = res.converged;
    if (i > 0) {
      const ScanPoint& prev = out.back();
      const double ratio = r / prev.radius;
      const double lo_noise = 3.0 * std::hypot(prev.value_stderr, pt.value_stderr);
      const double hi_noise = 3.0 * std::hypot(ratio * prev.value_stderr, pt.value_stderr);
      pt.sandwich_ok =
          pt.value >= prev.value - lo_noise && pt.value <= ratio * prev.value + hi_noise;
    }
    out.push_back(std::move(pt));
  }
  return out;
}

BruteResult brute_force(const LogConcaveFunc& f, const LogConcaveFunc& g, DetMode mode,
                        double det_target, const BruteGrid& grid, const QuadOptions& opts) {
  require(f.dim() == g.dim(), ErrorCode::dimension_mismatch, "function dimension mismatch");
  const int n = f.dim();
  require(n <= 2, ErrorCode::unsupported, "grid reference covers dimensions 1 and 2");
  require(mode != DetMode::free_det, ErrorCode::unsupported,
          "grid reference needs a determinant constraint");
  const double target = det_target_of(mode, det_target);
  const double scale = std::pow(target, 1.0 / double(n));
  require(grid.rot_steps >= 1 && grid.aniso_steps >= 1 && grid.shear_steps >= 1 &&
              grid.shift_steps >= 1,
          ErrorCode::invalid_argument, "grid steps must be positive");

  const auto axis = [](int steps, double extent, int k) {
    if (steps == 1) return 0.0;
    return -extent + 2.0 * extent * double(k) / double(steps - 1);
  };

  const CrnObjective crn(f, g, opts);
  BruteResult best;
  best.value = -1.0;
  if (n == 1) {
    require(std::uint64_t(grid.shift_steps) <= 10000000ull, ErrorCode::invalid_argument,
            "grid too large");
    const Mat t = Mat::Constant(1, 1, scale);
    for (int k = 0; k < grid.shift_steps; ++k) {
      const Vec z = Vec::Constant(1, axis(grid.shift_steps, grid.shift_max, k));
      const double val = crn.evaluate(t, z).value;
      if (val > best.value) best = BruteResult{Position{t, z}, val};
    }
    return best;
  }

  const std::uint64_t total = std::uint64_t(grid.rot_steps) * std::uint64_t(grid.aniso_steps) *
                              std::uint64_t(grid.shear_steps) * std::uint64_t(grid.shift_steps) *
                              std::uint64_t(grid.shift_steps);
  require(total <= 10000000ull, ErrorCode::invalid_argument, "grid too large");
  for (int ir = 0; ir < grid.rot_steps; ++ir) {
    const double th = 2.0 * M_PI * double(ir) / double(grid.rot_steps);
    Mat rot(2, 2);
    rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    for (int ia = 0; ia < grid.aniso_steps; ++ia) {
      const double a = axis(grid.aniso_steps, grid.aniso_max, ia);
      for (int is = 0; is < grid.shear_steps; ++is) {
        const double sh = axis(grid.shear_steps, grid.shear_max, is);
        Mat base(2, 2);
        base << std::exp(a), sh, 0.0, std::exp(-a);
        const Mat t = scale * rot * base;
        for (int iz = 0; iz < grid.shift_steps; ++iz) {
          for (int jz = 0; jz < grid.shift_steps; ++jz) {
            Vec z(2);
            z << axis(grid.shift_steps, grid.shift_max, iz),
                axis(grid.shift_steps, grid.shift_max, jz);
            const double val = crn.evaluate(t, z).value;
            if (val > best.value) best = BruteResult{Position{t, z}, val};
          }
        }
      }
    }
  }
  return best;
}

namespace {

double feasible_scale(const Body& region, const Mat& a) {
  if (region.kind() == BodyKind::ball) {
    const Eigen::SelfAdjointEigenSolver<Mat> es(a);
    const double smax = es.eigenvalues().cwiseAbs().maxCoeff();
    return region.ball_radius() / smax;
  }
  const Mat rows = region.polytope_rows();
  const Vec offs = region.polytope_offsets();
  double s = std::numeric_limits<double>::infinity();
  for (int i = 0; i < rows.rows(); ++i) {
    const double reach = (a * rows.row(i).transpose()).norm();
    if (reach > 0.0) s = std::min(s, offs[i] / reach);
  }
  return s;
}

// Gradients (symmetrized) of the active touching constraints at shape a.
std::vector<Mat> active_normals(const Body& region, const Mat& a) {
  std::vector<Mat> normals;
  if (region.kind() == BodyKind::ball) {
    const Eigen::SelfAdjointEigenSolver<Mat> es(a);
    const double smax = es.eigenvalues().maxCoeff();
    for (int i = 0; i < a.rows(); ++i) {
      if (es.eigenvalues()[i] >= (1.0 - 1e-6) * smax) {
        const Vec u = es.eigenvectors().col(i);
        normals.push_back(u * u.transpose());
      }
    }
    return normals;
  }
  const Mat rows = region.polytope_rows();
  const Vec offs = region.polytope_offsets();
  for (int i = 0; i < rows.rows(); ++i) {
    const Vec ai = rows.row(i).transpose();
    const Vec reach = a * ai;
    const double len = reach.norm();
    if (len >= (1.0 - 1e-6) * offs[i] && len > 0.0) {
      const Mat raw = reach * ai.transpose() / len;
      normals.push_back(0.5 * (raw + raw.transpose()));
    }
  }
  return normals;
}

// Removes the outward components along the active constraint normals so an
// ascent step can slide along the touching facets instead of being scaled
// straight back.
Mat deflate_direction(const Mat& d, const std::vector<Mat>& normals) {
  Mat out = d;
  for (int pass = 0; pass < 3; ++pass) {
    for (const Mat& nmat : normals) {
      const double denom = nmat.squaredNorm();
      if (denom < 1e-30) continue;
      const double comp = (out.array() * nmat.array()).sum() / denom;
      if (comp > 0.0) out -= comp * nmat;
    }
  }
  return out;
}

}  // namespace

InscribedResult max_inscribed_ellipsoid(const Body& region, const LogConcaveFunc& density,
                                        const OptimizeConfig& cfg) {
  require(region.kind() == BodyKind::ball || region.kind() == BodyKind::hpolytope,
          ErrorCode::unsupported, "region must be a ball or a polytope");
  require(density.dim() == region.dim(), ErrorCode::dimension_mismatch,
          "density dimension mismatch");
  check_config(cfg);
  const int n = region.dim();
  const std::uint64_t count = cfg.budget_per_eval;
  const Rng rng(cfg.seed, kInscribedStream);

  // Fixed unit-ball draws; the objective in shape a is |det a| times the
  // mean density over a * B, so comparisons share randomness.
  std::vector<Vec> draws;
  draws.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Vec u(n);
    for (int j = 0; j < n; ++j) u[j] = rng.normal(i, std::uint32_t(j));
    const double norm = u.norm();
    if (norm < 1e-12) {
      draws.push_back(Vec::Zero(n));
      continue;
    }
    const double r = std::pow(rng.uniform(i, std::uint32_t(n)), 1.0 / double(n));
    draws.push_back((r / norm) * u);
  }
  const double ball_vol = unit_ball_volume(n);
  const auto evaluate = [&](const Mat& a) {
    const double adet = std::abs(a.determinant());
    double sum = 0.0, sumsq = 0.0;
    for (const Vec& u : draws) {
      const double val = ball_vol * adet * density.evaluate(a * u);
      sum += val;
      sumsq += val * val;
    }
    const double mean = sum / double(count);
    double var = (sumsq - double(count) * mean * mean) / double(count - 1);
    if (var < 0.0) var = 0.0;
    return std::pair<double, double>(mean, std::sqrt(var / double(count)));
  };

  InscribedResult out;
  Mat a = feasible_scale(region, Mat::Identity(n, n)) * Mat::Identity(n, n);
  double current = evaluate(a).first;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    // Boundary flux of the density under the shape perturbation a -> a + e H.
    const Body shell = Body::ellipsoid(a);
    const SurfaceSample sample =
        shell.surface_sample(count, cfg.seed ^ (0x9e3779b97f4a7c15ull * std::uint64_t(iter + 1)));
    const Mat a_inv = a.inverse();
    Mat flux = Mat::Zero(n, n);
    for (const SurfacePoint& p : sample.points)
      flux += (p.weight * density.evaluate(p.x)) * (p.normal * (a_inv * p.x).transpose());
    const Mat d =
        deflate_direction(0.5 * (flux + flux.transpose()), active_normals(region, a));
    const double dnorm = d.norm();
    out.trajectory.push_back({iter, current, dnorm});
    if (dnorm <= cfg.grad_tol * std::max(1.0, current)) {
      out.converged = true;
      break;
    }
    const Mat dir = d / dnorm;
    bool accepted = false;
    for (double eta = cfg.step_init; eta >= kEtaMin; eta *= 0.5) {
      Mat cand = a + eta * dir;
      const Eigen::SelfAdjointEigenSolver<Mat> es(cand);
      if (es.eigenvalues().minCoeff() <= 1e-12) continue;
      const double s = feasible_scale(region, cand);
      const bool projected = s < 1.0;
      if (projected) cand *= s;
      const double cand_val = evaluate(cand).first;
      const double threshold =
          projected ? current : current + cfg.armijo_c * eta * dnorm;
      if (cand_val > threshold) {
        a = cand;
        current = cand_val;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.converged = true;  // no feasible ascent left along the flux direction
      break;
    }
  }
  out.shape = a;
  const auto fin = evaluate(a);
  out.value = fin.first;
  out.value_stderr = fin.second;
  return out;
}

}  // namespace mip
