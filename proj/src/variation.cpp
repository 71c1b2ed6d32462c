#include "mip/variation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mip/parallel.hpp"

namespace mip {
namespace {

constexpr std::uint32_t kCrnStream = 11;
constexpr std::uint32_t kDecayStream = 13;
constexpr int kMaxAttempts = 64;

double stderr_of(double sum, double sumsq, std::uint64_t n) {
  if (n < 2) return 0.0;
  const double mean = sum / double(n);
  double var = (sumsq - double(n) * mean * mean) / double(n - 1);
  if (var < 0.0) var = 0.0;
  return std::sqrt(var / double(n));
}

double frobenius_dot(const Mat& a, const Mat& b) { return (a.array() * b.array()).sum(); }

double frobenius_stderr(const Mat& dir, const Mat& entry_stderr) {
  return std::sqrt((dir.array().square() * entry_stderr.array().square()).sum());
}

VariationReport assemble(double it, double ise, double bt, double bse) {
  VariationReport r;
  r.interior_term = it;
  r.interior_stderr = ise;
  r.boundary_term = bt;
  r.boundary_stderr = bse;
  r.total = it + bt;
  r.total_stderr = std::hypot(ise, bse);
  return r;
}

struct MomentPartial {
  double sum = 0.0, sumsq = 0.0;
};

}  // namespace

Mat traceless_part(const Mat& t) {
  require(t.rows() == t.cols(), ErrorCode::dimension_mismatch, "direction must be square");
  const double c = t.trace() / double(t.rows());
  Mat out = t;
  out.diagonal().array() -= c;
  return out;
}

void check_det(const Mat& t, DetMode mode, double det_target) {
  require(t.rows() == t.cols() && t.rows() >= 1, ErrorCode::dimension_mismatch,
          "transform must be square");
  const double d = t.determinant();
  switch (mode) {
    case DetMode::unit_det:
      require(std::abs(d - 1.0) <= 1e-8, ErrorCode::precondition,
              "unit determinant constraint violated");
      break;
    case DetMode::fixed_det:
      require(det_target > 0.0, ErrorCode::invalid_argument, "determinant target must be positive");
      require(std::abs(d - det_target) <= 1e-8 * det_target, ErrorCode::precondition,
              "fixed determinant constraint violated");
      break;
    case DetMode::free_det:
      require(std::abs(d) > 1e-300, ErrorCode::precondition, "transform is singular");
      break;
  }
}

IntegralEstimate objective(const LogConcaveFunc& f, const LogConcaveFunc& g, const Position& pos,
                           DetMode mode, double det_target, const QuadOptions& opts) {
  check_det(pos.t, mode, det_target);
  return integrate_product(f, g, pos, opts);
}

VariationReport sl_directional_derivative(const LogConcaveFunc& f, const LogConcaveFunc& g,
                                          const Mat& t_dir, const QuadOptions& opts) {
  require(t_dir.rows() == f.dim() && t_dir.cols() == f.dim(), ErrorCode::dimension_mismatch,
          "direction dimension mismatch");
  const Mat p = traceless_part(t_dir);
  const MomentBundle b = moment_bundle(f, g, opts);
  return assemble(frobenius_dot(p, b.g_int), frobenius_stderr(p, b.g_int_stderr),
                  frobenius_dot(p, b.g_bd), frobenius_stderr(p, b.g_bd_stderr));
}

VariationReport shift_directional_derivative(const LogConcaveFunc& f, const LogConcaveFunc& g,
                                             const Vec& y, const QuadOptions& opts) {
  require(y.size() == f.dim(), ErrorCode::dimension_mismatch, "direction dimension mismatch");
  const MomentBundle b = moment_bundle(f, g, opts);
  const double ise = std::sqrt((y.array().square() * b.v_int_stderr.array().square()).sum());
  const double bse = std::sqrt((y.array().square() * b.v_bd_stderr.array().square()).sum());
  return assemble(b.v_int.dot(y), ise, b.v_bd.dot(y), bse);
}

GradientResult gradient(const LogConcaveFunc& f, const LogConcaveFunc& g,
                        const QuadOptions& opts) {
  GradientResult out;
  out.bundle = moment_bundle(f, g, opts);
  out.m_raw = out.bundle.g_int + out.bundle.g_bd;
  out.g = traceless_part(out.m_raw);
  out.g_stderr =
      (out.bundle.g_int_stderr.array().square() + out.bundle.g_bd_stderr.array().square()).sqrt();
  out.v = out.bundle.v_int + out.bundle.v_bd;
  out.v_stderr =
      (out.bundle.v_int_stderr.array().square() + out.bundle.v_bd_stderr.array().square()).sqrt();
  return out;
}

CrnObjective::CrnObjective(const LogConcaveFunc& f, const LogConcaveFunc& g,
                           const QuadOptions& opts)
    : f_(f), dim_(f.dim()), workers_(opts.workers), seed_(opts.seed) {
  require(g.dim() == dim_, ErrorCode::dimension_mismatch, "function dimension mismatch");
  require(opts.budget >= 1000, ErrorCode::precondition, "budget too small");
  const std::uint64_t count = opts.budget;
  points_.reserve(count);
  g_weight_.reserve(count);
  const Rng rng(opts.seed, kCrnStream);
  const Body& gs = g.support();
  const Body& fs = f.support();
  if (gs.bounded()) {
    const double vol = gs.enclosing_volume();
    for (std::uint64_t i = 0; i < count; ++i) {
      Vec u = gs.enclosing_point(rng, i, 0);
      points_.push_back(u);
      g_weight_.push_back(vol * g.evaluate(u));
    }
  } else if (fs.bounded()) {
    // g covers all of space, so the mass lives where f does; an inflated ball
    // around the f support keeps coverage through nearby transforms.
    const double rho = 2.5 * (fs.bounding_center().norm() + fs.bounding_radius() + 1.0);
    const Body region = Body::ball(dim_, rho);
    const double vol = region.enclosing_volume();
    for (std::uint64_t i = 0; i < count; ++i) {
      Vec u = region.enclosing_point(rng, i, 0);
      points_.push_back(u);
      g_weight_.push_back(vol * g.evaluate(u));
    }
  } else {
    require(gs.is_all_space() && fs.is_all_space(), ErrorCode::unsupported,
            "unbounded restricted support");
    const Proposal prop = fit_gaussian_proposal(f, g, opts.tail_bound, false);
    const std::uint32_t stride = std::uint32_t(dim_) + 2;
    for (std::uint64_t i = 0; i < count; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
        double w = 0.0;
        if (auto u = proposal_point(prop, rng, i, std::uint32_t(attempt) * stride, w)) {
          points_.push_back(*u);
          g_weight_.push_back(w * g.evaluate(*u));
          placed = true;
        }
      }
      require(placed, ErrorCode::internal, "proposal truncation kept rejecting");
    }
  }
}

IntegralEstimate CrnObjective::evaluate(const Mat& t, const Vec& z) const {
  require(t.rows() == dim_ && t.cols() == dim_ && z.size() == dim_,
          ErrorCode::dimension_mismatch, "position dimension mismatch");
  const double adet = std::abs(t.determinant());
  const auto body = [&](std::uint64_t begin, std::uint64_t end, MomentPartial& part) {
    for (std::uint64_t i = begin; i < end; ++i) {
      double val = 0.0;
      if (g_weight_[i] != 0.0) val = g_weight_[i] * f_.evaluate(t * points_[i] + z) * adet;
      part.sum += val;
      part.sumsq += val * val;
    }
  };
  const auto merge = [](MomentPartial& into, const MomentPartial& from) {
    into.sum += from.sum;
    into.sumsq += from.sumsq;
  };
  const MomentPartial part =
      block_reduce(std::uint64_t(points_.size()), workers_, MomentPartial{}, body, merge);
  const std::uint64_t n = points_.size();
  IntegralEstimate est;
  est.value = part.sum / double(n);
  est.stderror = stderr_of(part.sum, part.sumsq, n);
  est.samples = n;
  est.seed = seed_;
  return est;
}

IntegralEstimate CrnObjective::difference(const Mat& t_plus, const Vec& z_plus, const Mat& t_minus,
                                          const Vec& z_minus, double denom) const {
  require(denom != 0.0, ErrorCode::invalid_argument, "zero denominator");
  require(t_plus.rows() == dim_ && t_minus.rows() == dim_ && z_plus.size() == dim_ &&
              z_minus.size() == dim_,
          ErrorCode::dimension_mismatch, "position dimension mismatch");
  const double adet_p = std::abs(t_plus.determinant());
  const double adet_m = std::abs(t_minus.determinant());
  const auto body = [&](std::uint64_t begin, std::uint64_t end, MomentPartial& part) {
    for (std::uint64_t i = begin; i < end; ++i) {
      double val = 0.0;
      if (g_weight_[i] != 0.0) {
        const double hi = f_.evaluate(t_plus * points_[i] + z_plus) * adet_p;
        const double lo = f_.evaluate(t_minus * points_[i] + z_minus) * adet_m;
        val = g_weight_[i] * (hi - lo) / denom;
      }
      part.sum += val;
      part.sumsq += val * val;
    }
  };
  const auto merge = [](MomentPartial& into, const MomentPartial& from) {
    into.sum += from.sum;
    into.sumsq += from.sumsq;
  };
  const MomentPartial part =
      block_reduce(std::uint64_t(points_.size()), workers_, MomentPartial{}, body, merge);
  const std::uint64_t n = points_.size();
  IntegralEstimate est;
  est.value = part.sum / double(n);
  est.stderror = stderr_of(part.sum, part.sumsq, n);
  est.samples = n;
  est.seed = seed_;
  return est;
}

namespace {

void check_fd_step(double h) {
  require(h >= 1e-4 && h <= 1e-1, ErrorCode::invalid_argument, "step must lie in [1e-4, 1e-1]");
}

Mat det_normalized_path(const Mat& t_dir, double e) {
  const int n = int(t_dir.rows());
  Mat m = Mat::Identity(n, n) + e * t_dir;
  const double d = m.determinant();
  require(d > 0.0, ErrorCode::invalid_argument, "path leaves the positive determinant branch");
  return m / std::pow(d, 1.0 / double(n));
}

FdCheck finish_fd(const VariationReport& a, const IntegralEstimate& num) {
  FdCheck out;
  out.analytic = a.total;
  out.analytic_stderr = a.total_stderr;
  out.numeric = num.value;
  out.numeric_stderr = num.stderror;
  out.gap = std::abs(out.analytic - out.numeric);
  return out;
}

}  // namespace

FdCheck fd_check_sl(const LogConcaveFunc& f, const LogConcaveFunc& g, const Mat& t_dir, double h,
                    const QuadOptions& opts) {
  check_fd_step(h);
  require(t_dir.rows() == f.dim() && t_dir.cols() == f.dim(), ErrorCode::dimension_mismatch,
          "direction dimension mismatch");
  const VariationReport a = sl_directional_derivative(f, g, t_dir, opts);
  const CrnObjective crn(f, g, opts);
  const Vec zero = Vec::Zero(f.dim());
  const IntegralEstimate num =
      crn.difference(det_normalized_path(t_dir, h), zero, det_normalized_path(t_dir, -h), zero,
                     2.0 * h);
  return finish_fd(a, num);
}

FdCheck fd_check_shift(const LogConcaveFunc& f, const LogConcaveFunc& g, const Vec& y, double h,
                       const QuadOptions& opts) {
  check_fd_step(h);
  require(y.size() == f.dim(), ErrorCode::dimension_mismatch, "direction dimension mismatch");
  const VariationReport a = shift_directional_derivative(f, g, y, opts);
  const CrnObjective crn(f, g, opts);
  const Mat eye = Mat::Identity(f.dim(), f.dim());
  const IntegralEstimate num = crn.difference(eye, h * y, eye, -h * y, 2.0 * h);
  return finish_fd(a, num);
}

double laplace_pair_integral(double lambda, double s) {
  require(std::isfinite(lambda) && lambda > 0.0, ErrorCode::invalid_argument,
          "scale must be positive");
  require(std::isfinite(s), ErrorCode::invalid_argument, "offset must be finite");
  const double a = std::abs(s);
  const double delta = lambda - 1.0;
  if (std::abs(delta) <= 1e-12) return (a + 1.0) * std::exp(-a);
  if (std::abs(delta) <= 1e-6) {
    // Series in delta avoids the cancellation of the direct formula near 1.
    const double c2 = 0.5 * a * a;
    const double c3 = a * a * a / 6.0 - 0.5 * a * a;
    return 2.0 * std::exp(-a) * ((a + 1.0) + delta * (c2 + delta * c3)) / (2.0 + delta);
  }
  return 2.0 * (std::exp(-a) - lambda * std::exp(-a / lambda)) / (1.0 - lambda * lambda);
}

double objective_upper_bound(const DecayFit& f_decay, const DecayFit& g_decay, const Mat& t) {
  require(f_decay.slope > 0.0 && g_decay.slope > 0.0, ErrorCode::invalid_argument,
          "decay slopes must be positive");
  require(t.rows() == t.cols() && t.rows() >= 1, ErrorCode::dimension_mismatch,
          "transform must be square");
  const int n = int(t.rows());
  const Eigen::JacobiSVD<Mat> svd(t);
  double prod = 1.0;
  for (int i = 0; i < n; ++i) {
    const double lam = svd.singularValues()[i];
    require(lam > 0.0, ErrorCode::precondition, "transform is singular");
    prod *= 2.0 * lam / (1.0 + lam);
  }
  const double m = std::min(f_decay.slope, g_decay.slope);
  return std::exp(-(f_decay.offset + g_decay.offset)) * std::pow(std::sqrt(double(n)), n) *
         std::pow(m, -double(n)) * prod;
}

namespace {

std::vector<Vec> decay_directions(int n, const Rng& rng) {
  std::vector<Vec> dirs;
  if (n == 1) {
    dirs.push_back(Vec::Constant(1, 1.0));
    dirs.push_back(Vec::Constant(1, -1.0));
    return dirs;
  }
  for (std::uint64_t k = 0; k < 64; ++k) {
    Vec u(n);
    for (int j = 0; j < n; ++j) u[j] = rng.normal(k, std::uint32_t(j));
    const double norm = u.norm();
    if (norm < 1e-12) continue;
    dirs.push_back(u / norm);
  }
  return dirs;
}

Vec ball_point(int n, double radius, const Rng& rng, std::uint64_t index) {
  Vec u(n);
  for (int j = 0; j < n; ++j) u[j] = rng.normal(index, std::uint32_t(j));
  const double norm = u.norm();
  if (norm < 1e-12) return Vec::Zero(n);
  const double r = radius * std::pow(rng.uniform(index, std::uint32_t(n)), 1.0 / double(n));
  return (r / norm) * u;
}

// Certifies slope*|x| + offset <= phi(x) over sampled support points.
bool certify_decay(const LogConcaveFunc& f, double slope, double offset, double reach,
                   const Rng& rng, Vec* violation) {
  const int n = f.dim();
  const Body& support = f.support();
  const bool restricted = !support.is_all_space();
  const std::uint64_t count = 10000;
  for (std::uint64_t i = 0; i < count; ++i) {
    Vec x;
    if (restricted && support.bounded()) {
      x = support.enclosing_point(rng, i, 0);
      if (support.classify(x) == Region::exterior) continue;
    } else {
      x = ball_point(n, reach, rng, i);
    }
    const double phi = f.potential(x);
    if (slope * x.norm() + offset > phi + 1e-9 * (1.0 + std::abs(phi))) {
      if (violation != nullptr) *violation = x;
      return false;
    }
  }
  return true;
}

}  // namespace

DecayFit fit_linear_decay(const LogConcaveFunc& f) {
  const int n = f.dim();
  const Rng dir_rng(0x5eed, kDecayStream);
  const Rng cert_rng(0x5eed, kDecayStream + 1);
  const Body& support = f.support();

  double slope = 0.0, chord_reach = 0.0, cert_reach = 0.0, phi_min = 0.0, phi_base = 0.0;
  if (support.bounded()) {
    chord_reach = support.bounding_center().norm() + support.bounding_radius();
    require(chord_reach > 0.0, ErrorCode::precondition, "degenerate support");
    cert_reach = chord_reach;
    slope = 1.0 / chord_reach;
    phi_min = std::numeric_limits<double>::infinity();
    const Vec hint = f.mode_hint();
    if (support.classify(hint) != Region::exterior) phi_min = f.potential(hint);
    for (std::uint64_t i = 0; i < 4096; ++i) {
      const Vec x = support.enclosing_point(cert_rng, i + (std::uint64_t(1) << 32), 0);
      if (support.classify(x) == Region::exterior) continue;
      phi_min = std::min(phi_min, f.potential(x));
    }
    require(std::isfinite(phi_min), ErrorCode::precondition, "no support point found");
    phi_base = phi_min;
  } else {
    require(support.is_all_space(), ErrorCode::unsupported, "unbounded restricted support");
    const std::vector<Vec> dirs = decay_directions(n, dir_rng);
    const Vec origin = Vec::Zero(n);
    const double phi_o = f.potential(origin);
    phi_min = std::min(phi_o, f.potential(f.mode_hint()));
    chord_reach = 10.0;
    for (int doubling = 0; doubling < 40; ++doubling) {
      double chord = std::numeric_limits<double>::infinity();
      for (const Vec& u : dirs) chord = std::min(chord, f.potential(chord_reach * u) - phi_o);
      if (chord >= 10.0) {
        slope = chord / chord_reach;
        break;
      }
      chord_reach *= 2.0;
    }
    require(slope > 0.0, ErrorCode::precondition, "no linear decay along sampled rays");
    phi_base = std::min(phi_min, phi_o);
    cert_reach = 3.0 * chord_reach;  // certify past the chord radius to catch direction gaps
  }

  const double candidates[2] = {phi_min, phi_base - slope * chord_reach};
  Vec violation = Vec::Zero(n);
  for (const double offset : candidates) {
    if (certify_decay(f, slope, offset, cert_reach, cert_rng, &violation)) return {slope, offset};
  }
  std::string what = "decay bound violated at (";
  for (int j = 0; j < n; ++j) {
    if (j > 0) what += ", ";
    what += std::to_string(violation[j]);
  }
  what += ")";
  fail(ErrorCode::precondition, what);
}

}  // namespace mip
