#include "mip/function.hpp"

#include <cmath>
#include <limits>

namespace mip {

struct LogConcaveFunc::Impl {
  PotentialKind kind = PotentialKind::zero;
  int dim = 0;
  Body support = Body::all_space(1);

  // quadratic
  Mat sigma_inv;
  Vec mean;
  double offset = 0.0;

  // gauge power
  Body gauge_body = Body::all_space(1);
  double power = 1.0;
  Vec center;

  // linear max
  Mat forms;
  Vec constants;
};

namespace {

using Impl = LogConcaveFunc::Impl;

void check_spd(const Mat& s) {
  require(s.rows() == s.cols() && s.rows() >= 1, ErrorCode::invalid_argument,
          "gaussian: sigma_inv must be square");
  require((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + s.cwiseAbs().maxCoeff()),
          ErrorCode::invalid_argument, "gaussian: sigma_inv must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
  require(es.eigenvalues().minCoeff() > 0, ErrorCode::invalid_argument,
          "gaussian: sigma_inv must be positive definite");
}

// Coercive max of affine forms: every direction must see a strictly positive
// slope, which is exactly boundedness of {x : forms x <= 1} over nonzero rows.
bool linear_max_coercive(const Mat& forms) {
  std::vector<int> nz;
  for (int i = 0; i < forms.rows(); ++i)
    if (forms.row(i).norm() > 0) nz.push_back(i);
  if (nz.empty()) return false;
  Mat rows(static_cast<int>(nz.size()), forms.cols());
  for (std::size_t k = 0; k < nz.size(); ++k) rows.row(static_cast<int>(k)) = forms.row(nz[k]);
  return Body::hpolytope(rows, Vec::Ones(rows.rows())).bounded();
}

std::shared_ptr<Impl> make_impl(PotentialKind kind, const Body& support) {
  auto im = std::make_shared<Impl>();
  im->kind = kind;
  im->dim = support.dim();
  im->support = support;
  return im;
}

}  // namespace

LogConcaveFunc LogConcaveFunc::indicator(const Body& support) {
  require(support.bounded(), ErrorCode::invalid_body,
          "indicator: support must be bounded (integrability)");
  return LogConcaveFunc(make_impl(PotentialKind::zero, support));
}

LogConcaveFunc LogConcaveFunc::gaussian(const Mat& sigma_inv, const Vec& mean, double offset) {
  check_spd(sigma_inv);
  require(mean.size() == sigma_inv.rows(), ErrorCode::dimension_mismatch,
          "gaussian: mean/sigma_inv mismatch");
  auto im = make_impl(PotentialKind::quadratic, Body::all_space(static_cast<int>(mean.size())));
  im->sigma_inv = 0.5 * (sigma_inv + sigma_inv.transpose());
  im->mean = mean;
  im->offset = offset;
  return LogConcaveFunc(std::move(im));
}

LogConcaveFunc LogConcaveFunc::restricted_gaussian(const Body& support, const Mat& sigma_inv,
                                                   const Vec& mean, double offset) {
  check_spd(sigma_inv);
  require(mean.size() == sigma_inv.rows() && support.dim() == mean.size(),
          ErrorCode::dimension_mismatch, "restricted_gaussian: dimension mismatch");
  auto im = make_impl(PotentialKind::quadratic, support);
  im->sigma_inv = 0.5 * (sigma_inv + sigma_inv.transpose());
  im->mean = mean;
  im->offset = offset;
  return LogConcaveFunc(std::move(im));
}

LogConcaveFunc LogConcaveFunc::gauge_power(const Body& gauge_body, double power) {
  require(power >= 1.0, ErrorCode::invalid_argument, "gauge_power: exponent must be >= 1");
  require(gauge_body.bounded(), ErrorCode::invalid_body, "gauge_power: gauge body must be bounded");
  require(!gauge_body.shifted(), ErrorCode::invalid_body,
          "gauge_power: gauge body must contain the origin");
  auto im = make_impl(PotentialKind::gauge_power, Body::all_space(gauge_body.dim()));
  im->gauge_body = gauge_body;
  im->power = power;
  im->center = Vec::Zero(gauge_body.dim());
  return LogConcaveFunc(std::move(im));
}

LogConcaveFunc LogConcaveFunc::linear_max(const Mat& forms, const Vec& constants) {
  require(forms.rows() == constants.size() && forms.rows() >= 1, ErrorCode::invalid_argument,
          "linear_max: forms/constants size mismatch");
  require(linear_max_coercive(forms), ErrorCode::invalid_body,
          "linear_max: potential must grow in every direction (integrability)");
  auto im = make_impl(PotentialKind::linear_max, Body::all_space(static_cast<int>(forms.cols())));
  im->forms = forms;
  im->constants = constants;
  return LogConcaveFunc(std::move(im));
}

int LogConcaveFunc::dim() const { return impl_->dim; }
const Body& LogConcaveFunc::support() const { return impl_->support; }
PotentialKind LogConcaveFunc::potential_kind() const { return impl_->kind; }
bool LogConcaveFunc::is_indicator() const { return impl_->kind == PotentialKind::zero; }

bool LogConcaveFunc::even() const {
  if (!impl_->support.even_symmetric()) return false;
  switch (impl_->kind) {
    case PotentialKind::zero:
      return true;
    case PotentialKind::quadratic:
      return impl_->mean.isZero(0.0);
    case PotentialKind::gauge_power:
      return impl_->center.isZero(0.0) && impl_->gauge_body.even_symmetric();
    case PotentialKind::linear_max: {
      const Mat& a = impl_->forms;
      for (int i = 0; i < a.rows(); ++i) {
        bool found = false;
        for (int j = 0; j < a.rows() && !found; ++j)
          if (impl_->constants[j] == impl_->constants[i] &&
              (a.row(j).array() == (-a.row(i)).array()).all())
            found = true;
        if (!found) return false;
      }
      return true;
    }
  }
  return false;
}

bool LogConcaveFunc::second_moment_ok() const {
  if (impl_->support.bounded()) return true;
  // Unbounded supports only arise with coercive potentials, validated on build.
  return impl_->kind != PotentialKind::zero;
}

double LogConcaveFunc::potential(const Vec& x) const {
  require(x.size() == impl_->dim, ErrorCode::dimension_mismatch, "potential: dimension mismatch");
  switch (impl_->kind) {
    case PotentialKind::zero:
      return 0.0;
    case PotentialKind::quadratic: {
      Vec d = x - impl_->mean;
      return 0.5 * d.dot(impl_->sigma_inv * d) + impl_->offset;
    }
    case PotentialKind::gauge_power:
      return std::pow(impl_->gauge_body.gauge(x - impl_->center), impl_->power);
    case PotentialKind::linear_max:
      return (impl_->forms * x + impl_->constants).maxCoeff();
  }
  fail(ErrorCode::internal, "potential: unreachable");
}

double LogConcaveFunc::evaluate(const Vec& x) const {
  require(x.size() == impl_->dim, ErrorCode::dimension_mismatch, "evaluate: dimension mismatch");
  if (impl_->support.classify(x) == Region::exterior) return 0.0;
  return std::exp(-potential(x));
}

Vec LogConcaveFunc::potential_gradient(const Vec& x) const {
  require(x.size() == impl_->dim, ErrorCode::dimension_mismatch,
          "potential_gradient: dimension mismatch");
  switch (impl_->kind) {
    case PotentialKind::zero:
      return Vec::Zero(impl_->dim);
    case PotentialKind::quadratic:
      return impl_->sigma_inv * (x - impl_->mean);
    case PotentialKind::gauge_power: {
      Vec y = x - impl_->center;
      const double g = impl_->gauge_body.gauge(y);
      if (g == 0.0) {
        require(impl_->power > 1.0, ErrorCode::singular_point,
                "potential_gradient: gauge not differentiable at its center");
        return Vec::Zero(impl_->dim);
      }
      return impl_->power * std::pow(g, impl_->power - 1.0) * impl_->gauge_body.gauge_gradient(y);
    }
    case PotentialKind::linear_max: {
      Vec vals = impl_->forms * x + impl_->constants;
      int best = 0;
      for (int i = 1; i < vals.size(); ++i)
        if (vals[i] > vals[best]) best = i;
      for (int i = 0; i < vals.size(); ++i)
        require(i == best || vals[best] - vals[i] > 1e-12 * std::max(1.0, std::fabs(vals[best])),
                ErrorCode::singular_point, "potential_gradient: tied affine forms");
      return impl_->forms.row(best).transpose();
    }
  }
  fail(ErrorCode::internal, "potential_gradient: unreachable");
}

LogConcaveFunc LogConcaveFunc::pullback(const Position& pos) const {
  const int n = impl_->dim;
  require(pos.t.rows() == n && pos.t.cols() == n && pos.z.size() == n,
          ErrorCode::dimension_mismatch, "pullback: position dimension mismatch");
  Eigen::FullPivLU<Mat> lu(pos.t);
  lu.setThreshold(1e-12);
  require(lu.isInvertible(), ErrorCode::invalid_argument, "pullback: singular transform");
  const Mat t_inv = lu.inverse();

  auto im = std::make_shared<Impl>(*impl_);
  im->support = impl_->support.affine_image(pos.t, pos.z);
  switch (impl_->kind) {
    case PotentialKind::zero:
      break;
    case PotentialKind::quadratic:
      im->sigma_inv = t_inv.transpose() * impl_->sigma_inv * t_inv;
      im->mean = pos.t * impl_->mean + pos.z;
      break;
    case PotentialKind::gauge_power:
      im->gauge_body = impl_->gauge_body.affine_image(pos.t, Vec::Zero(n));
      im->center = pos.t * impl_->center + pos.z;
      break;
    case PotentialKind::linear_max:
      im->forms = impl_->forms * t_inv;
      im->constants = impl_->constants - im->forms * pos.z;
      break;
  }
  return LogConcaveFunc(std::move(im));
}

Vec LogConcaveFunc::mode_hint() const {
  switch (impl_->kind) {
    case PotentialKind::quadratic:
      if (impl_->support.classify(impl_->mean) != Region::exterior) return impl_->mean;
      break;
    case PotentialKind::gauge_power:
      return impl_->center;
    default:
      break;
  }
  if (impl_->support.bounded()) return impl_->support.barycenter();
  return Vec::Zero(impl_->dim);
}

const Mat& LogConcaveFunc::quadratic_sigma_inv() const {
  require(impl_->kind == PotentialKind::quadratic, ErrorCode::invalid_argument, "not quadratic");
  return impl_->sigma_inv;
}

const Vec& LogConcaveFunc::quadratic_mean() const {
  require(impl_->kind == PotentialKind::quadratic, ErrorCode::invalid_argument, "not quadratic");
  return impl_->mean;
}

double LogConcaveFunc::quadratic_offset() const {
  require(impl_->kind == PotentialKind::quadratic, ErrorCode::invalid_argument, "not quadratic");
  return impl_->offset;
}

const Body& LogConcaveFunc::gauge_body() const {
  require(impl_->kind == PotentialKind::gauge_power, ErrorCode::invalid_argument,
          "not a gauge power");
  return impl_->gauge_body;
}

double LogConcaveFunc::gauge_exponent() const {
  require(impl_->kind == PotentialKind::gauge_power, ErrorCode::invalid_argument,
          "not a gauge power");
  return impl_->power;
}

const Vec& LogConcaveFunc::gauge_center() const {
  require(impl_->kind == PotentialKind::gauge_power, ErrorCode::invalid_argument,
          "not a gauge power");
  return impl_->center;
}

const Mat& LogConcaveFunc::linear_max_forms() const {
  require(impl_->kind == PotentialKind::linear_max, ErrorCode::invalid_argument,
          "not a linear max");
  return impl_->forms;
}

const Vec& LogConcaveFunc::linear_max_constants() const {
  require(impl_->kind == PotentialKind::linear_max, ErrorCode::invalid_argument,
          "not a linear max");
  return impl_->constants;
}

}  // namespace mip
