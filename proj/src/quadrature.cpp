#include "mip/quadrature.hpp"

#include <cmath>
#include <optional>

#include "mip/parallel.hpp"

namespace mip {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::uint32_t kMaxAttempts = 64;

// RNG streams: 1 interior volume draws, 5 surface samplers (inside Body),
// 7 polar radial draws. Keeping them apart makes accumulators independent.
constexpr std::uint64_t kInteriorStream = 1;
constexpr std::uint64_t kPolarStream = 7;

double stderr_of(double sum, double sumsq, std::uint64_t n) {
  if (n < 2) return 0.0;
  const double mean = sum / static_cast<double>(n);
  const double var = (sumsq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
  return std::sqrt(std::max(0.0, var) / static_cast<double>(n));
}

bool provably_disjoint(const Body& a, const Body& b) {
  if (!a.bounded() || !b.bounded()) return false;
  return (a.bounding_center() - b.bounding_center()).norm() >
         a.bounding_radius() + b.bounding_radius();
}

Vec interior_anchor(const Body& b) {
  if (b.kind() == BodyKind::affine_image)
    return b.transform() * interior_anchor(b.base()) + b.shift();
  return Vec::Zero(b.dim());
}

// Radius of a ball certain to hold all but a negligible sliver of f's mass.
double cover_radius(const LogConcaveFunc& fn, double trunc_radius) {
  const Body& s = fn.support();
  if (s.bounded()) return s.bounding_center().norm() + s.bounding_radius();
  switch (fn.potential_kind()) {
    case PotentialKind::quadratic: {
      Eigen::SelfAdjointEigenSolver<Mat> es(fn.quadratic_sigma_inv());
      const double sigma_max = 1.0 / std::sqrt(es.eigenvalues().minCoeff());
      return fn.quadratic_mean().norm() + trunc_radius * sigma_max;
    }
    case PotentialKind::gauge_power: {
      const double reach = std::pow(45.0, 1.0 / fn.gauge_exponent());
      return fn.gauge_center().norm() + reach * fn.gauge_body().bounding_radius();
    }
    case PotentialKind::linear_max: {
      const Mat& forms = fn.linear_max_forms();
      std::vector<int> nz;
      for (int i = 0; i < forms.rows(); ++i)
        if (forms.row(i).norm() > 0) nz.push_back(i);
      Mat rows(static_cast<int>(nz.size()), forms.cols());
      for (std::size_t k = 0; k < nz.size(); ++k)
        rows.row(static_cast<int>(k)) = forms.row(nz[k]);
      const double rp = Body::hpolytope(rows, Vec::Ones(rows.rows())).bounding_radius();
      const double spread = fn.linear_max_constants().cwiseAbs().maxCoeff();
      return (45.0 + 2.0 * spread) * rp;
    }
    case PotentialKind::zero:
      break;
  }
  fail(ErrorCode::internal, "cover_radius: unbounded support with flat potential");
}

struct DrawPlan {
  bool use_proposal = false;
  std::optional<Body> region;
  double region_volume = 0.0;
  Proposal prop;
  std::uint32_t stride = 1;
  bool antithetic = false;
  int dim = 0;

  Vec point(const Rng& rng, std::uint64_t index, std::uint32_t attempt, double& weight) const {
    if (!use_proposal) {
      weight = region_volume;
      return region->enclosing_point(rng, index, attempt * stride);
    }
    auto x = proposal_point(prop, rng, index, attempt * stride, weight);
    // Truncation rejection reuses the resample-and-retry signal.
    require(x.has_value(), ErrorCode::singular_point, "proposal draw beyond truncation radius");
    return *x;
  }
};

DrawPlan make_plan(const LogConcaveFunc& f, const LogConcaveFunc& g, const QuadOptions& opts,
                   bool antithetic) {
  DrawPlan plan;
  plan.dim = f.dim();
  plan.antithetic = antithetic;
  if (f.support().bounded() && g.support().bounded()) {
    const double vf = f.support().enclosing_volume();
    const double vg = g.support().enclosing_volume();
    plan.region = (vf <= vg) ? f.support() : g.support();
    plan.region_volume = std::min(vf, vg);
    plan.stride = std::max<std::uint32_t>(plan.region->enclosing_slots(), 1);
  } else {
    plan.use_proposal = true;
    plan.prop = fit_gaussian_proposal(f, g, opts.tail_bound, antithetic);
    plan.stride = static_cast<std::uint32_t>(plan.dim);
  }
  return plan;
}

struct ScalarPartial {
  double sum = 0.0, sumsq = 0.0;
};

void merge_scalar(ScalarPartial& into, const ScalarPartial& from) {
  into.sum += from.sum;
  into.sumsq += from.sumsq;
}

// Runs fn(index, attempt) with the resample-on-singular convention.
template <class Fn>
auto with_retries(std::uint64_t index, const Fn& fn) {
  for (std::uint32_t attempt = 0;; ++attempt) {
    require(attempt < kMaxAttempts, ErrorCode::internal, "quadrature: retry budget exhausted");
    try {
      return fn(attempt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::singular_point) throw;
    }
  }
  (void)index;
}

struct BundlePartial {
  Mat g_sum, g_sumsq;
  Vec v_sum, v_sumsq;
  double s_sum = 0.0, s_sumsq = 0.0;

  static BundlePartial zero(int n) {
    BundlePartial p;
    p.g_sum = Mat::Zero(n, n);
    p.g_sumsq = Mat::Zero(n, n);
    p.v_sum = Vec::Zero(n);
    p.v_sumsq = Vec::Zero(n);
    return p;
  }
};

void merge_bundle(BundlePartial& into, const BundlePartial& from) {
  into.g_sum += from.g_sum;
  into.g_sumsq += from.g_sumsq;
  into.v_sum += from.v_sum;
  into.v_sumsq += from.v_sumsq;
  into.s_sum += from.s_sum;
  into.s_sumsq += from.s_sumsq;
}

struct Fields {
  Mat g;
  Vec v;
  double s = 0.0;
};

void accumulate(BundlePartial& p, const Fields& c) {
  p.g_sum += c.g;
  p.g_sumsq += c.g.cwiseProduct(c.g);
  p.v_sum += c.v;
  p.v_sumsq += c.v.cwiseProduct(c.v);
  p.s_sum += c.s;
  p.s_sumsq += c.s * c.s;
}

// Interior integrand of the variation formulas at one point.
Fields interior_fields(const LogConcaveFunc& f, const LogConcaveFunc& g, const Vec& x, double w) {
  const int n = static_cast<int>(x.size());
  Fields c;
  const double fg = f.evaluate(x) * g.evaluate(x);
  if (fg == 0.0) {
    c.g = Mat::Zero(n, n);
    c.v = Vec::Zero(n);
    return c;
  }
  const Vec grad = g.potential_gradient(x);  // may raise the resample signal
  const double a = w * fg;
  c.g = a * grad * x.transpose();
  c.v = a * grad;
  c.s = a * grad.dot(x);
  return c;
}

}  // namespace

std::optional<Vec> proposal_point(const Proposal& prop, const Rng& rng, std::uint64_t index,
                                  std::uint32_t slot_base, double& weight) {
  const int n = static_cast<int>(prop.mean.size());
  Vec xi(n);
  for (int k = 0; k < n; ++k) xi[k] = rng.normal(index, slot_base + static_cast<std::uint32_t>(k));
  const double r2 = xi.squaredNorm();
  if (r2 > prop.trunc_radius * prop.trunc_radius) return std::nullopt;
  weight = std::exp(0.5 * r2 + prop.log_norm);
  return prop.mean + prop.spread * xi;
}

Proposal fit_gaussian_proposal(const LogConcaveFunc& f, const LogConcaveFunc& g, double tail_bound,
                               bool force_even) {
  const int n = f.dim();
  require(g.dim() == n, ErrorCode::dimension_mismatch, "proposal: dimension mismatch");
  require(tail_bound > 0 && tail_bound < 1, ErrorCode::invalid_argument,
          "proposal: tail bound must be in (0,1)");
  const double trunc = std::sqrt(static_cast<double>(n)) + std::sqrt(-2.0 * std::log(tail_bound));

  const auto psi = [&](const Vec& x) { return f.potential(x) + g.potential(x); };

  Vec x = 0.5 * (f.mode_hint() + g.mode_hint());
  const auto fd_gradient = [&](const Vec& p, double h) {
    Vec grad(n);
    Vec e = p;
    for (int i = 0; i < n; ++i) {
      e[i] = p[i] + h;
      const double up = psi(e);
      e[i] = p[i] - h;
      const double dn = psi(e);
      e[i] = p[i];
      grad[i] = (up - dn) / (2 * h);
    }
    return grad;
  };
  const auto fd_hessian = [&](const Vec& p, double h) {
    Mat hess(n, n);
    const double base = psi(p);
    Vec e = p;
    for (int i = 0; i < n; ++i) {
      e[i] = p[i] + h;
      const double up = psi(e);
      e[i] = p[i] - h;
      const double dn = psi(e);
      e[i] = p[i];
      hess(i, i) = (up - 2 * base + dn) / (h * h);
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Vec q = p;
        q[i] += h;
        q[j] += h;
        const double pp = psi(q);
        q[j] -= 2 * h;
        const double pm = psi(q);
        q[i] -= 2 * h;
        const double mm = psi(q);
        q[j] += 2 * h;
        const double mp = psi(q);
        hess(i, j) = hess(j, i) = (pp - pm - mp + mm) / (4 * h * h);
      }
    return hess;
  };

  // Damped Newton descent on the joint potential; 20 steps is plenty for the
  // smooth families and harmless for the kinked ones.
  for (int iter = 0; iter < 20; ++iter) {
    const double h = 1e-4 * (1.0 + x.norm());
    const Vec grad = fd_gradient(x, h);
    Mat hess = fd_hessian(x, h);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (hess + hess.transpose()));
    Vec lam = es.eigenvalues();
    const double ridge = 1e-8 * (1.0 + lam.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) lam[i] = std::max(lam[i], ridge);
    const Vec d = -(es.eigenvectors() *
                    lam.cwiseInverse().asDiagonal() * es.eigenvectors().transpose() * grad);
    const double slope = grad.dot(d);
    const double psi0 = psi(x);
    double t = 1.0;
    while (t > 1e-6 && psi(x + t * d) > psi0 + 0.1 * t * slope) t *= 0.5;
    if (t <= 1e-6 || (t * d).norm() <= 1e-12 * (1.0 + x.norm())) break;
    x += t * d;
  }

  // Pull the center inside any bounded support it escaped.
  for (const LogConcaveFunc* fn : {&f, &g}) {
    const Body& s = fn->support();
    if (!s.bounded() || s.classify(x) != Region::exterior) continue;
    const Vec anchor = interior_anchor(s);
    double lo = 0.0, hi = 1.0;
    for (int step = 0; step < 40; ++step) {
      const double mid = 0.5 * (lo + hi);
      if (s.classify(anchor + mid * (x - anchor)) == Region::exterior)
        hi = mid;
      else
        lo = mid;
    }
    x = anchor + 0.9 * lo * (x - anchor);
  }

  const double r_cover =
      std::max({1.0, cover_radius(f, trunc), cover_radius(g, trunc)});
  Mat hess = fd_hessian(x, 1e-4 * (1.0 + x.norm()));
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (hess + hess.transpose()));
  Vec lam = es.eigenvalues();
  // Floor keeps flat (indicator) directions covered; the cap keeps the
  // truncated proposal wide enough to reach the whole mass region.
  const double floor_ev = std::pow(0.5 / r_cover, 2);
  const double cap_ev = std::pow(1.3 * trunc / r_cover, 2);
  for (int i = 0; i < n; ++i) lam[i] = std::min(std::max(lam[i], floor_ev), cap_ev);

  Proposal prop;
  prop.mean = force_even ? Vec::Zero(n) : x;
  const Mat v = es.eigenvectors();
  Vec sigma = (1.3 * lam.cwiseSqrt().cwiseInverse());
  prop.spread = v * sigma.asDiagonal() * v.transpose();
  prop.spread_inv = v * sigma.cwiseInverse().asDiagonal() * v.transpose();
  prop.log_norm = 0.5 * n * std::log(2 * kPi) + sigma.array().log().sum();
  prop.trunc_radius = trunc;
  prop.scale = prop.mean.norm() + sigma.maxCoeff() * trunc;
  return prop;
}

IntegralEstimate integrate_product(const LogConcaveFunc& f, const LogConcaveFunc& g,
                                   const Position& pos, const QuadOptions& opts) {
  require(f.dim() == g.dim(), ErrorCode::dimension_mismatch, "integrate_product: dim mismatch");
  require(opts.budget >= 1000, ErrorCode::precondition,
          "integrate_product: budget must be at least 1000");
  const LogConcaveFunc gp = g.pullback(pos);

  IntegralEstimate out;
  out.seed = opts.seed;
  if (provably_disjoint(f.support(), gp.support())) {
    out.empty = true;
    return out;
  }

  const bool anti = opts.allow_antithetic && f.even() && gp.even();
  const DrawPlan plan = make_plan(f, gp, opts, anti);
  const Rng rng(opts.seed, kInteriorStream);
  const std::uint64_t count = opts.budget;

  const auto block = [&](std::uint64_t begin, std::uint64_t end, ScalarPartial& part) {
    for (std::uint64_t i = begin; i < end; ++i) {
      const double h = with_retries(i, [&](std::uint32_t attempt) {
        double w = 0.0;
        const Vec x = plan.point(rng, i, attempt, w);
        double value = f.evaluate(x) * gp.evaluate(x) * w;
        if (plan.antithetic) value = 0.5 * (value + f.evaluate(-x) * gp.evaluate(-x) * w);
        return value;
      });
      part.sum += h;
      part.sumsq += h * h;
    }
  };
  const ScalarPartial total =
      block_reduce(count, opts.workers, ScalarPartial{}, block, merge_scalar);

  out.value = total.sum / static_cast<double>(count);
  out.stderror = stderr_of(total.sum, total.sumsq, count);
  out.samples = count;
  return out;
}

MomentBundle moment_bundle(const LogConcaveFunc& f, const LogConcaveFunc& g,
                           const QuadOptions& opts) {
  const int n = f.dim();
  require(g.dim() == n, ErrorCode::dimension_mismatch, "moment_bundle: dim mismatch");
  require(opts.budget >= 1000, ErrorCode::precondition,
          "moment_bundle: budget must be at least 1000");
  require(g.second_moment_ok(), ErrorCode::precondition,
          "moment_bundle: g must satisfy the second-moment condition");

  MomentBundle out;
  out.seed = opts.seed;
  out.g_int = out.g_int_stderr = out.g_bd = out.g_bd_stderr = Mat::Zero(n, n);
  out.v_int = out.v_int_stderr = out.v_bd = out.v_bd_stderr = Vec::Zero(n);

  const Body& kg = g.support();
  const bool has_boundary = !kg.is_all_space();
  require(!has_boundary || kg.bounded(), ErrorCode::unsupported,
          "moment_bundle: unbounded non-all-space g support");

  if (provably_disjoint(f.support(), kg)) {
    out.empty = true;
    return out;
  }

  const bool anti = opts.allow_antithetic && f.even() && g.even();
  out.antithetic = anti;
  const std::uint64_t n_bd = has_boundary ? (opts.budget * 3) / 10 : 0;
  const std::uint64_t n_int = opts.budget - n_bd;
  out.samples_interior = n_int;
  out.samples_boundary = n_bd;

  const DrawPlan plan = make_plan(f, g, opts, anti);
  const Rng rng(opts.seed, kInteriorStream);

  const auto interior_block = [&](std::uint64_t begin, std::uint64_t end, BundlePartial& part) {
    for (std::uint64_t i = begin; i < end; ++i) {
      const Fields c = with_retries(i, [&](std::uint32_t attempt) {
        double w = 0.0;
        const Vec x = plan.point(rng, i, attempt, w);
        Fields one = interior_fields(f, g, x, w);
        if (plan.antithetic) {
          const Fields two = interior_fields(f, g, -x, w);
          one.g = 0.5 * (one.g + two.g);
          one.v = 0.5 * (one.v + two.v);
          one.s = 0.5 * (one.s + two.s);
        }
        return one;
      });
      accumulate(part, c);
    }
  };
  const BundlePartial interior =
      block_reduce(n_int, opts.workers, BundlePartial::zero(n), interior_block, merge_bundle);

  const auto finish_mat = [](const Mat& sum, const Mat& sumsq, std::uint64_t cnt, Mat& mean,
                             Mat& se) {
    const int d = static_cast<int>(sum.rows());
    mean = sum / static_cast<double>(cnt);
    se = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) se(i, j) = stderr_of(sum(i, j), sumsq(i, j), cnt);
  };
  const auto finish_vec = [](const Vec& sum, const Vec& sumsq, std::uint64_t cnt, Vec& mean,
                             Vec& se) {
    mean = sum / static_cast<double>(cnt);
    se = Vec::Zero(sum.size());
    for (int i = 0; i < sum.size(); ++i) se[i] = stderr_of(sum[i], sumsq[i], cnt);
  };

  if (n_int > 0) {
    finish_mat(interior.g_sum, interior.g_sumsq, n_int, out.g_int, out.g_int_stderr);
    finish_vec(interior.v_sum, interior.v_sumsq, n_int, out.v_int, out.v_int_stderr);
    out.s_int = interior.s_sum / static_cast<double>(n_int);
    out.s_int_stderr = stderr_of(interior.s_sum, interior.s_sumsq, n_int);
  }

  if (n_bd > 0) {
    const SurfaceSampler sampler = kg.surface_sampler(opts.seed);
    const auto boundary_block = [&](std::uint64_t begin, std::uint64_t end, BundlePartial& part) {
      for (std::uint64_t i = begin; i < end; ++i) {
        const SurfacePoint sp = sampler.point(i);
        Fields c;
        {
          const double a = sp.weight * f.evaluate(sp.x) * g.evaluate(sp.x);
          c.g = a * sp.normal * sp.x.transpose();
          c.v = a * sp.normal;
          c.s = a * sp.normal.dot(sp.x);
        }
        if (anti) {
          const Vec mx = -sp.x;
          const Vec mn = -sp.normal;
          const double a = sp.weight * f.evaluate(mx) * g.evaluate(mx);
          Fields two;
          two.g = a * mn * mx.transpose();
          two.v = a * mn;
          two.s = a * mn.dot(mx);
          c.g = 0.5 * (c.g + two.g);
          c.v = 0.5 * (c.v + two.v);
          c.s = 0.5 * (c.s + two.s);
        }
        accumulate(part, c);
      }
    };
    const BundlePartial boundary =
        block_reduce(n_bd, opts.workers, BundlePartial::zero(n), boundary_block, merge_bundle);
    finish_mat(boundary.g_sum, boundary.g_sumsq, n_bd, out.g_bd, out.g_bd_stderr);
    finish_vec(boundary.v_sum, boundary.v_sumsq, n_bd, out.v_bd, out.v_bd_stderr);
    out.s_bd = boundary.s_sum / static_cast<double>(n_bd);
    out.s_bd_stderr = stderr_of(boundary.s_sum, boundary.s_sumsq, n_bd);
  }

  return out;
}

std::pair<IntegralEstimate, IntegralEstimate> polar_identity_check(
    const std::function<double(const Vec&)>& phi, const Body& m, const Mat& a, const Mat& t,
    const QuadOptions& opts) {
  const int n = m.dim();
  require(a.rows() == n && a.cols() == n && t.rows() == n && t.cols() == n,
          ErrorCode::dimension_mismatch, "polar_identity_check: dimension mismatch");
  require(m.bounded() && !m.shifted(), ErrorCode::invalid_body,
          "polar_identity_check: body must be bounded with the origin interior");
  require(opts.budget >= 1000, ErrorCode::precondition,
          "polar_identity_check: budget must be at least 1000");

  const Body tm = m.affine_image(t, Vec::Zero(n));
  const double gamma_n = std::tgamma(static_cast<double>(n));
  const std::uint64_t n_lhs = opts.budget / 2;
  const std::uint64_t n_rhs = opts.budget - n_lhs;

  IntegralEstimate lhs;
  lhs.seed = opts.seed;
  lhs.samples = n_lhs;
  {
    const SurfaceSampler sampler = tm.surface_sampler(opts.seed);
    const auto block = [&](std::uint64_t begin, std::uint64_t end, ScalarPartial& part) {
      for (std::uint64_t i = begin; i < end; ++i) {
        const SurfacePoint sp = sampler.point(i);
        const double h = gamma_n * sp.weight * phi(sp.x) * sp.normal.dot(a * sp.x);
        part.sum += h;
        part.sumsq += h * h;
      }
    };
    const ScalarPartial total =
        block_reduce(n_lhs, opts.workers, ScalarPartial{}, block, merge_scalar);
    lhs.value = total.sum / static_cast<double>(n_lhs);
    lhs.stderror = stderr_of(total.sum, total.sumsq, n_lhs);
  }

  // Full-space side: directions uniform on the sphere, radius Gamma(n)-shaped
  // along each ray so the gauge of the draw is Gamma(n,1).
  IntegralEstimate rhs;
  rhs.seed = opts.seed;
  rhs.samples = n_rhs;
  {
    const Rng rng(opts.seed, kPolarStream);
    const double area = sphere_area(n, 1.0);
    const std::uint32_t stride = static_cast<std::uint32_t>(2 * n);
    const auto block = [&](std::uint64_t begin, std::uint64_t end, ScalarPartial& part) {
      for (std::uint64_t i = begin; i < end; ++i) {
        const double h = with_retries(i, [&](std::uint32_t attempt) {
          const std::uint32_t base = attempt * stride;
          Vec dir(n);
          for (int k = 0; k < n; ++k) dir[k] = rng.normal(i, base + static_cast<std::uint32_t>(k));
          const double norm = dir.norm();
          require(norm > 1e-154, ErrorCode::singular_point, "degenerate direction draw");
          const Vec u = dir / norm;
          double s_exp = 0.0;
          for (int k = 0; k < n; ++k)
            s_exp += -std::log(rng.uniform(i, base + static_cast<std::uint32_t>(n + k)));
          const double g_u = tm.gauge(u);
          const Vec x = (s_exp / g_u) * u;
          const double g_x = tm.gauge(x);
          const Vec xb = x / g_x;
          const Vec grad = tm.gauge_gradient(xb);  // ridge draws resample
          const double grad_norm = grad.norm();
          const Vec nb = grad / grad_norm;
          const double integrand =
              std::exp(-g_x) * grad_norm * phi(xb) * nb.dot(a * xb);
          const double weight = area * gamma_n * std::exp(g_x) / std::pow(g_u, n);
          return integrand * weight;
        });
        part.sum += h;
        part.sumsq += h * h;
      }
    };
    const ScalarPartial total =
        block_reduce(n_rhs, opts.workers, ScalarPartial{}, block, merge_scalar);
    rhs.value = total.sum / static_cast<double>(n_rhs);
    rhs.stderror = stderr_of(total.sum, total.sumsq, n_rhs);
  }

  return {lhs, rhs};
}

}  // namespace mip
