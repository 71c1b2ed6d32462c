#include "mip/body.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mip {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec solve_square(const Mat& a, const Vec& b, bool& ok) {
  Eigen::FullPivLU<Mat> lu(a);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible()) {
    ok = false;
    return Vec::Zero(b.size());
  }
  ok = true;
  return lu.solve(b);
}

}  // namespace

double unit_ball_volume(int dim) {
  require(dim >= 1, ErrorCode::invalid_argument, "unit_ball_volume: dim must be positive");
  return std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
}

double sphere_area(int dim, double radius) {
  return dim * unit_ball_volume(dim) * std::pow(radius, dim - 1);
}

double SurfaceSample::total_weight() const {
  double s = 0.0;
  for (const auto& p : points) s += p.weight;
  return s;
}

// A boundary cell: a point (dim 1), segment (dim 2) or triangle (dim 3) on one facet.
struct SurfaceCell {
  int facet = -1;
  Vec a, b, c;
  double measure = 0.0;
};

struct PolytopeGeometry {
  bool bounded = false;
  bool geometry_ok = false;  // exact cells/volume available (dim <= 3, bounded)
  std::vector<Vec> vertices;
  std::vector<SurfaceCell> cells;
  std::vector<double> cell_cum;  // cumulative cell measure
  double area = 0.0;
  double volume = 0.0;
  Vec centroid;
  Vec bbox_lo, bbox_hi;
  double bounding_radius = 0.0;
};

struct Body::Impl {
  BodyKind kind;
  int dim = 0;

  // ball
  double radius = 0.0;

  // ellipsoid
  Mat shape, shape_inv, shape_inv_t;
  double shape_absdet = 0.0;
  double shape_sigma_max = 0.0;

  // hpolytope
  Mat rows;
  Vec offsets;
  Vec row_norms;
  PolytopeGeometry geom;
  bool even = false;

  // affine image
  std::shared_ptr<const Impl> base;
  Mat t, t_inv, t_inv_t;
  Vec z;
  double t_absdet = 0.0;
  double t_sigma_max = 0.0;
};

namespace {

using Impl = Body::Impl;

double spectral_norm(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a.transpose() * a);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

bool rows_even(const Mat& rows, const Vec& offsets) {
  const int m = static_cast<int>(rows.rows());
  for (int i = 0; i < m; ++i) {
    bool found = false;
    for (int j = 0; j < m && !found; ++j) {
      if (offsets[j] == offsets[i] && (rows.row(j).array() == (-rows.row(i)).array()).all())
        found = true;
    }
    if (!found) return false;
  }
  return true;
}

// Recession check over a deterministic direction grid; exact for dim <= 2.
bool polytope_bounded(const Mat& rows, const Vec& row_norms) {
  const int n = static_cast<int>(rows.cols());
  const int m = static_cast<int>(rows.rows());
  if (n == 1) {
    bool pos = false, neg = false;
    for (int i = 0; i < m; ++i) {
      if (rows(i, 0) > 0) pos = true;
      if (rows(i, 0) < 0) neg = true;
    }
    return pos && neg;
  }
  if (n == 2) {
    std::vector<double> angles;
    angles.reserve(m);
    for (int i = 0; i < m; ++i) angles.push_back(std::atan2(rows(i, 1), rows(i, 0)));
    std::sort(angles.begin(), angles.end());
    double max_gap = 2 * kPi - (angles.back() - angles.front());
    for (std::size_t i = 1; i < angles.size(); ++i)
      max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
    return max_gap < kPi - 1e-9;
  }
  std::vector<Vec> dirs;
  for (int i = 0; i < m; ++i) {
    dirs.push_back(rows.row(i).transpose() / row_norms[i]);
    dirs.push_back(-rows.row(i).transpose() / row_norms[i]);
  }
  const int grid = 1024;
  for (int k = 0; k < grid; ++k) {
    const double phi = std::acos(1.0 - 2.0 * (k + 0.5) / grid);
    const double theta = kPi * (1 + std::sqrt(5.0)) * k;
    Vec d(3);
    d << std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta), std::cos(phi);
    dirs.push_back(d);
  }
  for (const Vec& d : dirs) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) best = std::max(best, rows.row(i).dot(d) / row_norms[i]);
    if (best <= 1e-9) return false;
  }
  return true;
}

void add_vertex(std::vector<Vec>& verts, const Vec& v) {
  for (const Vec& w : verts)
    if ((w - v).norm() <= 1e-9 * (1.0 + v.norm())) return;
  verts.push_back(v);
}

std::vector<Vec> enumerate_vertices(const Mat& rows, const Vec& offsets) {
  const int n = static_cast<int>(rows.cols());
  const int m = static_cast<int>(rows.rows());
  std::vector<Vec> verts;
  auto feasible = [&](const Vec& v) {
    for (int j = 0; j < m; ++j) {
      const double slack = rows.row(j).dot(v) - offsets[j];
      if (slack > 1e-9 * (1.0 + std::fabs(offsets[j]) + rows.row(j).norm() * v.norm()))
        return false;
    }
    return true;
  };
  auto try_subset = [&](const std::vector<int>& idx) {
    Mat a(n, n);
    Vec b(n);
    for (int r = 0; r < n; ++r) {
      a.row(r) = rows.row(idx[r]);
      b[r] = offsets[idx[r]];
    }
    bool ok = false;
    Vec v = solve_square(a, b, ok);
    if (ok && feasible(v)) add_vertex(verts, v);
  };
  if (n == 1) {
    for (int i = 0; i < m; ++i) try_subset({i});
  } else if (n == 2) {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) try_subset({i, j});
  } else if (n == 3) {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        for (int k = j + 1; k < m; ++k) try_subset({i, j, k});
  }
  return verts;
}

PolytopeGeometry build_geometry(const Mat& rows, const Vec& offsets, const Vec& row_norms) {
  PolytopeGeometry g;
  const int n = static_cast<int>(rows.cols());
  const int m = static_cast<int>(rows.rows());
  g.bounded = polytope_bounded(rows, row_norms);
  if (n > 3 || !g.bounded) return g;

  g.vertices = enumerate_vertices(rows, offsets);
  if (g.vertices.empty()) return g;

  g.bbox_lo = g.vertices[0];
  g.bbox_hi = g.vertices[0];
  for (const Vec& v : g.vertices) {
    g.bbox_lo = g.bbox_lo.cwiseMin(v);
    g.bbox_hi = g.bbox_hi.cwiseMax(v);
    g.bounding_radius = std::max(g.bounding_radius, v.norm());
  }

  for (int i = 0; i < m; ++i) {
    std::vector<Vec> on_facet;
    for (const Vec& v : g.vertices) {
      const double slack = std::fabs(rows.row(i).dot(v) - offsets[i]);
      if (slack <= 1e-8 * (1.0 + std::fabs(offsets[i]) + rows.row(i).norm() * v.norm()))
        on_facet.push_back(v);
    }
    if (static_cast<int>(on_facet.size()) < n) continue;  // redundant row
    if (n == 1) {
      SurfaceCell c;
      c.facet = i;
      c.a = on_facet[0];
      c.measure = 1.0;  // counting measure on endpoints
      g.cells.push_back(c);
    } else if (n == 2) {
      // Extreme pair along the facet direction.
      Vec tangent(2);
      tangent << -rows(i, 1), rows(i, 0);
      auto cmp = [&](const Vec& u, const Vec& v) { return tangent.dot(u) < tangent.dot(v); };
      const Vec lo = *std::min_element(on_facet.begin(), on_facet.end(), cmp);
      const Vec hi = *std::max_element(on_facet.begin(), on_facet.end(), cmp);
      SurfaceCell c;
      c.facet = i;
      c.a = lo;
      c.b = hi;
      c.measure = (hi - lo).norm();
      if (c.measure > 0) g.cells.push_back(c);
    } else {
      // Fan triangulation of the facet polygon, ordered around its centroid.
      const Eigen::Vector3d normal = rows.row(i).transpose() / row_norms[i];
      const Eigen::Vector3d e1 = normal.unitOrthogonal();
      const Eigen::Vector3d e2 = normal.cross(e1);
      Vec centroid = Vec::Zero(3);
      for (const Vec& v : on_facet) centroid += v;
      centroid /= static_cast<double>(on_facet.size());
      std::sort(on_facet.begin(), on_facet.end(), [&](const Vec& u, const Vec& v) {
        const Vec du = u - centroid, dv = v - centroid;
        return std::atan2(e2.dot(du), e1.dot(du)) < std::atan2(e2.dot(dv), e1.dot(dv));
      });
      const std::size_t k = on_facet.size();
      for (std::size_t t = 1; t + 1 < k; ++t) {
        SurfaceCell c;
        c.facet = i;
        c.a = on_facet[0];
        c.b = on_facet[t];
        c.c = on_facet[t + 1];
        const Eigen::Vector3d ab = c.b - c.a;
        const Eigen::Vector3d ac = c.c - c.a;
        c.measure = 0.5 * ab.cross(ac).norm();
        if (c.measure > 1e-14) g.cells.push_back(c);
      }
    }
  }

  g.cell_cum.reserve(g.cells.size());
  double cum = 0.0;
  for (const auto& c : g.cells) {
    cum += c.measure;
    g.cell_cum.push_back(cum);
  }
  g.area = cum;

  // Cone decomposition from the (interior) origin.
  g.volume = 0.0;
  g.centroid = Vec::Zero(n);
  for (const auto& c : g.cells) {
    const double h = offsets[c.facet] / row_norms[c.facet];
    const double cone_vol = h * c.measure / n;
    Vec cell_centroid;
    if (n == 1)
      cell_centroid = c.a;
    else if (n == 2)
      cell_centroid = 0.5 * (c.a + c.b);
    else
      cell_centroid = (c.a + c.b + c.c) / 3.0;
    g.volume += cone_vol;
    g.centroid += cone_vol * (static_cast<double>(n) / (n + 1)) * cell_centroid;
  }
  if (g.volume > 0) g.centroid /= g.volume;
  g.geometry_ok = !g.cells.empty() && g.volume > 0;
  return g;
}

const PolytopeGeometry& geometry(const Impl& im) {
  require(im.kind == BodyKind::hpolytope, ErrorCode::internal, "geometry: not a polytope");
  require(im.geom.bounded, ErrorCode::invalid_body, "polytope: unbounded body has no surface geometry");
  require(im.geom.geometry_ok, ErrorCode::unsupported,
          "polytope: exact surface geometry requires dim <= 3");
  return im.geom;
}

double gauge_impl(const Impl& im, const Vec& x);
Region classify_impl(const Impl& im, const Vec& x, double tol);
Vec normal_impl(const Impl& im, const Vec& x);

double gauge_impl(const Impl& im, const Vec& x) {
  switch (im.kind) {
    case BodyKind::ball:
      return x.norm() / im.radius;
    case BodyKind::ellipsoid:
      return (im.shape_inv * x).norm();
    case BodyKind::hpolytope: {
      double best = 0.0;
      for (int i = 0; i < im.rows.rows(); ++i)
        best = std::max(best, im.rows.row(i).dot(x) / im.offsets[i]);
      return best;
    }
    case BodyKind::affine_image:
      require(im.z.isZero(0.0), ErrorCode::invalid_argument,
              "gauge: shifted body has no origin gauge");
      return gauge_impl(*im.base, im.t_inv * x);
    case BodyKind::all_space:
      return 0.0;
  }
  fail(ErrorCode::internal, "gauge: unreachable");
}

Region classify_impl(const Impl& im, const Vec& x, double tol) {
  if (im.kind == BodyKind::all_space) return Region::interior;
  double value;
  if (im.kind == BodyKind::affine_image)
    return classify_impl(*im.base, im.t_inv * (x - im.z), tol);
  value = gauge_impl(im, x);
  if (std::fabs(value - 1.0) <= tol) return Region::boundary;
  return value < 1.0 ? Region::interior : Region::exterior;
}

Vec normal_impl(const Impl& im, const Vec& x) {
  switch (im.kind) {
    case BodyKind::ball: {
      const double nx = x.norm();
      require(nx > 0, ErrorCode::invalid_argument, "outward_normal: undefined at the origin");
      return x / nx;
    }
    case BodyKind::ellipsoid: {
      Vec w = im.shape_inv_t * (im.shape_inv * x);
      const double nw = w.norm();
      require(nw > 0, ErrorCode::invalid_argument, "outward_normal: undefined at the origin");
      return w / nw;
    }
    case BodyKind::hpolytope: {
      double best = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < im.rows.rows(); ++i)
        best = std::max(best, im.rows.row(i).dot(x) / im.offsets[i]);
      for (int i = 0; i < im.rows.rows(); ++i) {
        const double r = im.rows.row(i).dot(x) / im.offsets[i];
        if (r >= best - 1e-12 * std::max(1.0, std::fabs(best)))
          return im.rows.row(i).transpose() / im.row_norms[i];
      }
      fail(ErrorCode::internal, "outward_normal: no active facet");
    }
    case BodyKind::affine_image: {
      Vec nb = normal_impl(*im.base, im.t_inv * (x - im.z));
      Vec w = im.t_inv_t * nb;
      return w / w.norm();
    }
    case BodyKind::all_space:
      fail(ErrorCode::invalid_body, "outward_normal: all-space has no boundary");
  }
  fail(ErrorCode::internal, "outward_normal: unreachable");
}

struct SamplerState {
  std::shared_ptr<const Impl> impl;
  Rng rng;
};

SurfacePoint sample_surface(const Impl& im, const Rng& rng, std::uint64_t index);

SurfacePoint sample_ball(const Impl& im, const Rng& rng, std::uint64_t index) {
  const int n = im.dim;
  SurfacePoint p;
  if (n == 1) {
    const double u = (rng.bits(index, 0) & 1) ? 1.0 : -1.0;
    p.x = Vec::Constant(1, u * im.radius);
    p.normal = Vec::Constant(1, u);
    p.weight = 2.0;
    return p;
  }
  for (std::uint32_t attempt = 0;; ++attempt) {
    require(attempt < 64, ErrorCode::internal, "surface sample: degenerate direction draws");
    Vec v(n);
    for (int k = 0; k < n; ++k) v[k] = rng.normal(index, attempt * 16 + k);
    const double nv = v.norm();
    if (nv < 1e-154) continue;
    Vec u = v / nv;
    p.x = im.radius * u;
    p.normal = u;
    p.weight = sphere_area(n, im.radius);
    return p;
  }
}

SurfacePoint sample_ellipsoid(const Impl& im, const Rng& rng, std::uint64_t index) {
  const int n = im.dim;
  SurfacePoint p;
  Vec u(n);
  if (n == 1) {
    u[0] = (rng.bits(index, 0) & 1) ? 1.0 : -1.0;
  } else {
    for (std::uint32_t attempt = 0;; ++attempt) {
      require(attempt < 64, ErrorCode::internal, "surface sample: degenerate direction draws");
      Vec v(n);
      for (int k = 0; k < n; ++k) v[k] = rng.normal(index, attempt * 16 + k);
      const double nv = v.norm();
      if (nv < 1e-154) continue;
      u = v / nv;
      break;
    }
  }
  Vec w = im.shape_inv_t * u;
  const double nw = w.norm();
  p.x = im.shape * u;
  p.normal = w / nw;
  p.weight = sphere_area(n, 1.0) * im.shape_absdet * nw;
  return p;
}

SurfacePoint sample_polytope(const Impl& im, const Rng& rng, std::uint64_t index) {
  const PolytopeGeometry& g = geometry(im);
  const int n = im.dim;
  const double pick = rng.uniform(index, 0) * g.area;
  const std::size_t ci =
      std::lower_bound(g.cell_cum.begin(), g.cell_cum.end(), pick) - g.cell_cum.begin();
  const SurfaceCell& c = g.cells[std::min(ci, g.cells.size() - 1)];
  SurfacePoint p;
  if (n == 1) {
    p.x = c.a;
  } else if (n == 2) {
    const double t = rng.uniform(index, 1);
    p.x = c.a + t * (c.b - c.a);
  } else {
    double u = rng.uniform(index, 1), v = rng.uniform(index, 2);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    p.x = c.a + u * (c.b - c.a) + v * (c.c - c.a);
  }
  p.normal = im.rows.row(c.facet).transpose() / im.row_norms[c.facet];
  p.weight = g.area;  // cells picked proportionally to measure, uniform within
  return p;
}

SurfacePoint sample_affine(const Impl& im, const Rng& rng, std::uint64_t index) {
  SurfacePoint b = sample_surface(*im.base, rng, index);
  SurfacePoint p;
  p.x = im.t * b.x + im.z;
  Vec w = im.t_inv_t * b.normal;
  const double nw = w.norm();
  p.normal = w / nw;
  p.weight = b.weight * im.t_absdet * nw;
  return p;
}

SurfacePoint sample_surface(const Impl& im, const Rng& rng, std::uint64_t index) {
  switch (im.kind) {
    case BodyKind::ball:
      return sample_ball(im, rng, index);
    case BodyKind::ellipsoid:
      return sample_ellipsoid(im, rng, index);
    case BodyKind::hpolytope:
      return sample_polytope(im, rng, index);
    case BodyKind::affine_image:
      return sample_affine(im, rng, index);
    case BodyKind::all_space:
      fail(ErrorCode::invalid_body, "surface_sample: all-space has no boundary");
  }
  fail(ErrorCode::internal, "surface_sample: unreachable");
}

SurfacePoint sampler_thunk(const void* state, std::uint64_t index) {
  const auto* s = static_cast<const SamplerState*>(state);
  return sample_surface(*s->impl, s->rng, index);
}

}  // namespace

Body Body::ball(int dim, double radius) {
  require(dim >= 1, ErrorCode::invalid_argument, "ball: dim must be positive");
  require(radius > 0, ErrorCode::invalid_body, "ball: radius must be positive");
  auto im = std::make_shared<Impl>();
  im->kind = BodyKind::ball;
  im->dim = dim;
  im->radius = radius;
  return Body(im);
}

Body Body::ellipsoid(const Mat& shape) {
  require(shape.rows() == shape.cols() && shape.rows() >= 1, ErrorCode::invalid_body,
          "ellipsoid: shape matrix must be square");
  auto im = std::make_shared<Impl>();
  im->kind = BodyKind::ellipsoid;
  im->dim = static_cast<int>(shape.rows());
  im->shape = shape;
  Eigen::FullPivLU<Mat> lu(shape);
  lu.setThreshold(1e-12);
  require(lu.isInvertible(), ErrorCode::invalid_body, "ellipsoid: shape matrix must be invertible");
  im->shape_inv = lu.inverse();
  im->shape_inv_t = im->shape_inv.transpose();
  im->shape_absdet = std::fabs(lu.determinant());
  im->shape_sigma_max = spectral_norm(shape);
  return Body(im);
}

Body Body::hpolytope(const Mat& rows, const Vec& offsets) {
  require(rows.rows() == offsets.size() && rows.rows() >= 1, ErrorCode::invalid_body,
          "hpolytope: rows/offsets size mismatch");
  require(rows.cols() >= 1, ErrorCode::invalid_body, "hpolytope: dim must be positive");
  auto im = std::make_shared<Impl>();
  im->kind = BodyKind::hpolytope;
  im->dim = static_cast<int>(rows.cols());
  im->rows = rows;
  im->offsets = offsets;
  im->row_norms = Vec(rows.rows());
  for (int i = 0; i < rows.rows(); ++i) {
    require(offsets[i] > 0, ErrorCode::invalid_body,
            "hpolytope: offsets must be positive (origin interior)");
    im->row_norms[i] = rows.row(i).norm();
    require(im->row_norms[i] > 0, ErrorCode::invalid_body, "hpolytope: zero facet normal");
  }
  im->geom = build_geometry(rows, offsets, im->row_norms);
  im->even = rows_even(rows, offsets);
  return Body(im);
}

Body Body::cube(int dim, double half_width) {
  require(dim >= 1, ErrorCode::invalid_argument, "cube: dim must be positive");
  require(half_width > 0, ErrorCode::invalid_body, "cube: half_width must be positive");
  Mat rows = Mat::Zero(2 * dim, dim);
  Vec offsets = Vec::Constant(2 * dim, half_width);
  for (int k = 0; k < dim; ++k) {
    rows(2 * k, k) = 1.0;
    rows(2 * k + 1, k) = -1.0;
  }
  return hpolytope(rows, offsets);
}

Body Body::all_space(int dim) {
  require(dim >= 1, ErrorCode::invalid_argument, "all_space: dim must be positive");
  auto im = std::make_shared<Impl>();
  im->kind = BodyKind::all_space;
  im->dim = dim;
  return Body(im);
}

int Body::dim() const { return impl_->dim; }
BodyKind Body::kind() const { return impl_->kind; }
bool Body::is_all_space() const { return impl_->kind == BodyKind::all_space; }

bool Body::bounded() const {
  switch (impl_->kind) {
    case BodyKind::ball:
    case BodyKind::ellipsoid:
      return true;
    case BodyKind::hpolytope:
      return impl_->geom.bounded;
    case BodyKind::affine_image:
      return Body(impl_->base).bounded();
    case BodyKind::all_space:
      return false;
  }
  return false;
}

bool Body::shifted() const {
  return impl_->kind == BodyKind::affine_image && !impl_->z.isZero(0.0);
}

bool Body::even_symmetric() const {
  switch (impl_->kind) {
    case BodyKind::ball:
    case BodyKind::ellipsoid:
      return true;
    case BodyKind::hpolytope:
      return impl_->even;
    case BodyKind::affine_image:
      return impl_->z.isZero(0.0) && Body(impl_->base).even_symmetric();
    case BodyKind::all_space:
      return true;
  }
  return false;
}

double Body::gauge(const Vec& x) const {
  require(x.size() == impl_->dim, ErrorCode::dimension_mismatch, "gauge: dimension mismatch");
  return gauge_impl(*impl_, x);
}

Vec Body::gauge_gradient(const Vec& x) const {
  require(x.size() == impl_->dim, ErrorCode::dimension_mismatch,
          "gauge_gradient: dimension mismatch");
  switch (impl_->kind) {
    case BodyKind::ball: {
      const double nx = x.norm();
      require(nx > 0, ErrorCode::singular_point, "gauge_gradient: undefined at the origin");
      return x / (impl_->radius * nx);
    }
    case BodyKind::ellipsoid: {
      Vec u = impl_->shape_inv * x;
      const double nu = u.norm();
      require(nu > 0, ErrorCode::singular_point, "gauge_gradient: undefined at the origin");
      return impl_->shape_inv_t * u / nu;
    }
    case BodyKind::hpolytope: {
      const double value = gauge_impl(*impl_, x);
      require(value > 0, ErrorCode::singular_point, "gauge_gradient: undefined at the origin");
      int best = -1;
      for (int i = 0; i < impl_->rows.rows(); ++i) {
        const double r = impl_->rows.row(i).dot(x) / impl_->offsets[i];
        if (std::fabs(r - value) <= 1e-12 * std::max(1.0, std::fabs(value))) {
          require(best < 0, ErrorCode::singular_point, "gauge_gradient: facet ridge");
          best = i;
        }
      }
      require(best >= 0, ErrorCode::internal, "gauge_gradient: no active facet");
      return impl_->rows.row(best).transpose() / impl_->offsets[best];
    }
    case BodyKind::affine_image:
      require(impl_->z.isZero(0.0), ErrorCode::invalid_argument,
              "gauge_gradient: shifted body has no origin gauge");
      return impl_->t_inv_t * Body(impl_->base).gauge_gradient(impl_->t_inv * x);
    case BodyKind::all_space:
      fail(ErrorCode::invalid_body, "gauge_gradient: all-space gauge is constant");
  }
  fail(ErrorCode::internal, "gauge_gradient: unreachable");
}

Region Body::classify(const Vec& x, double tol) const {
  require(x.size() == impl_->dim, ErrorCode::dimension_mismatch, "classify: dimension mismatch");
  require(tol >= 0, ErrorCode::invalid_argument, "classify: tol must be nonnegative");
  return classify_impl(*impl_, x, tol);
}

Vec Body::outward_normal(const Vec& x) const {
  require(x.size() == impl_->dim, ErrorCode::dimension_mismatch,
          "outward_normal: dimension mismatch");
  return normal_impl(*impl_, x);
}

Body Body::affine_image(const Mat& t, const Vec& z) const {
  const int n = impl_->dim;
  require(t.rows() == n && t.cols() == n && z.size() == n, ErrorCode::dimension_mismatch,
          "affine_image: dimension mismatch");
  Eigen::FullPivLU<Mat> lu(t);
  lu.setThreshold(1e-12);
  require(lu.isInvertible(), ErrorCode::invalid_argument, "affine_image: singular transform");

  if (impl_->kind == BodyKind::all_space) return *this;
  if (z.isZero(0.0)) {
    switch (impl_->kind) {
      case BodyKind::ball: {
        const double c = t(0, 0);
        if (c > 0 && t.isApprox(c * Mat::Identity(n, n), 0.0)) return ball(n, c * impl_->radius);
        return ellipsoid(t * impl_->radius);
      }
      case BodyKind::ellipsoid:
        return ellipsoid(t * impl_->shape);
      case BodyKind::hpolytope: {
        Mat inv = lu.inverse();
        return hpolytope(impl_->rows * inv, impl_->offsets);
      }
      case BodyKind::all_space:
        return *this;
      case BodyKind::affine_image:
        break;  // compose below
    }
  }

  auto im = std::make_shared<Impl>();
  im->kind = BodyKind::affine_image;
  im->dim = n;
  if (impl_->kind == BodyKind::affine_image) {
    im->base = impl_->base;
    im->t = t * impl_->t;
    im->z = t * impl_->z + z;
  } else {
    im->base = impl_;
    im->t = t;
    im->z = z;
  }
  Eigen::FullPivLU<Mat> lu2(im->t);
  lu2.setThreshold(1e-12);
  require(lu2.isInvertible(), ErrorCode::invalid_argument, "affine_image: singular transform");
  im->t_inv = lu2.inverse();
  im->t_inv_t = im->t_inv.transpose();
  im->t_absdet = std::fabs(lu2.determinant());
  im->t_sigma_max = spectral_norm(im->t);
  return Body(im);
}

SurfaceSampler Body::surface_sampler(std::uint64_t seed) const {
  require(impl_->kind != BodyKind::all_space, ErrorCode::invalid_body,
          "surface_sampler: all-space has no boundary");
  if (impl_->kind == BodyKind::hpolytope) geometry(*impl_);  // validate up front
  SurfaceSampler s(*this, seed);
  return s;
}

SurfaceSampler::SurfaceSampler(const Body& body, std::uint64_t seed) {
  auto state = std::make_shared<SamplerState>(SamplerState{body.impl_, Rng(seed, 0x5u)});
  dim_ = body.dim();
  impl_ = state;
  fn_ = &sampler_thunk;
}

SurfacePoint SurfaceSampler::point(std::uint64_t index) const { return fn_(impl_.get(), index); }
int SurfaceSampler::dim() const { return dim_; }

SurfaceSample Body::surface_sample(std::uint64_t count, std::uint64_t seed) const {
  require(count >= 1, ErrorCode::invalid_argument, "surface_sample: count must be positive");
  SurfaceSampler s = surface_sampler(seed);
  SurfaceSample out;
  out.seed = seed;
  out.points.reserve(count);
  const double inv = 1.0 / static_cast<double>(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    SurfacePoint p = s.point(i);
    p.weight *= inv;
    out.points.push_back(std::move(p));
  }
  return out;
}

double Body::enclosing_volume() const {
  switch (impl_->kind) {
    case BodyKind::ball:
    case BodyKind::ellipsoid:
      return volume();
    case BodyKind::hpolytope: {
      const PolytopeGeometry& g = geometry(*impl_);
      double v = 1.0;
      for (int k = 0; k < impl_->dim; ++k) {
        double lo = g.bbox_lo[k], hi = g.bbox_hi[k];
        if (impl_->even) {
          hi = std::max(hi, -lo);
          lo = -hi;
        }
        v *= hi - lo;
      }
      return v;
    }
    case BodyKind::affine_image:
      return Body(impl_->base).enclosing_volume() * impl_->t_absdet;
    case BodyKind::all_space:
      fail(ErrorCode::invalid_body, "enclosing_volume: all-space is unbounded");
  }
  fail(ErrorCode::internal, "enclosing_volume: unreachable");
}

std::uint32_t Body::enclosing_slots() const {
  switch (impl_->kind) {
    case BodyKind::ball:
    case BodyKind::ellipsoid:
      return static_cast<std::uint32_t>(impl_->dim) + 1;
    case BodyKind::hpolytope:
      return static_cast<std::uint32_t>(impl_->dim);
    case BodyKind::affine_image:
      return Body(impl_->base).enclosing_slots();
    default:
      return 0;
  }
}

Vec Body::enclosing_point(const Rng& rng, std::uint64_t index, std::uint32_t slot_base) const {
  const int n = impl_->dim;
  switch (impl_->kind) {
    case BodyKind::ball:
    case BodyKind::ellipsoid: {
      Vec v(n);
      for (int k = 0; k < n; ++k) v[k] = rng.normal(index, slot_base + k);
      const double nv = v.norm();
      const double u = rng.uniform(index, slot_base + n);
      const double r = std::pow(u, 1.0 / n);
      Vec x = (nv < 1e-154) ? Vec::Zero(n) : Vec(v * (r / nv));
      if (impl_->kind == BodyKind::ball) return impl_->radius * x;
      return impl_->shape * x;
    }
    case BodyKind::hpolytope: {
      const PolytopeGeometry& g = geometry(*impl_);
      Vec x(n);
      for (int k = 0; k < n; ++k) {
        double lo = g.bbox_lo[k], hi = g.bbox_hi[k];
        if (impl_->even) {
          hi = std::max(hi, -lo);
          lo = -hi;
        }
        x[k] = lo + rng.uniform(index, slot_base + k) * (hi - lo);
      }
      return x;
    }
    case BodyKind::affine_image:
      return impl_->t * Body(impl_->base).enclosing_point(rng, index, slot_base) + impl_->z;
    case BodyKind::all_space:
      fail(ErrorCode::invalid_body, "enclosing_point: all-space is unbounded");
  }
  fail(ErrorCode::internal, "enclosing_point: unreachable");
}

double Body::volume() const {
  switch (impl_->kind) {
    case BodyKind::ball:
      return unit_ball_volume(impl_->dim) * std::pow(impl_->radius, impl_->dim);
    case BodyKind::ellipsoid:
      return unit_ball_volume(impl_->dim) * impl_->shape_absdet;
    case BodyKind::hpolytope:
      return geometry(*impl_).volume;
    case BodyKind::affine_image:
      return Body(impl_->base).volume() * impl_->t_absdet;
    case BodyKind::all_space:
      fail(ErrorCode::invalid_body, "volume: all-space is unbounded");
  }
  fail(ErrorCode::internal, "volume: unreachable");
}

double Body::surface_area() const {
  switch (impl_->kind) {
    case BodyKind::ball:
      return sphere_area(impl_->dim, impl_->radius);
    case BodyKind::hpolytope:
      return geometry(*impl_).area;
    case BodyKind::ellipsoid: {
      if (impl_->dim == 1) return 2.0;
      // Angular quadrature of the surface Jacobian |shape^{-T} u| det(shape).
      if (impl_->dim == 2) {
        const int steps = 1 << 14;
        double acc = 0.0;
        for (int k = 0; k < steps; ++k) {
          const double a = 2 * kPi * (k + 0.5) / steps;
          Vec u(2);
          u << std::cos(a), std::sin(a);
          acc += (impl_->shape_inv_t * u).norm();
        }
        return acc * impl_->shape_absdet * 2 * kPi / steps;
      }
      require(impl_->dim == 3, ErrorCode::unsupported, "surface_area: ellipsoid dim > 3");
      const int nt = 512, np = 1024;
      double acc = 0.0;
      for (int i = 0; i < nt; ++i) {
        const double ct = 1.0 - 2.0 * (i + 0.5) / nt;
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (int j = 0; j < np; ++j) {
          const double ph = 2 * kPi * (j + 0.5) / np;
          Vec u(3);
          u << st * std::cos(ph), st * std::sin(ph), ct;
          acc += (impl_->shape_inv_t * u).norm();
        }
      }
      return acc * impl_->shape_absdet * 4 * kPi / (nt * np);
    }
    case BodyKind::affine_image:
      fail(ErrorCode::unsupported, "surface_area: not available for affine images");
    case BodyKind::all_space:
      fail(ErrorCode::invalid_body, "surface_area: all-space has no boundary");
  }
  fail(ErrorCode::internal, "surface_area: unreachable");
}

Vec Body::barycenter() const {
  switch (impl_->kind) {
    case BodyKind::ball:
    case BodyKind::ellipsoid:
    case BodyKind::all_space:
      return Vec::Zero(impl_->dim);
    case BodyKind::hpolytope:
      return geometry(*impl_).centroid;
    case BodyKind::affine_image:
      return impl_->t * Body(impl_->base).barycenter() + impl_->z;
  }
  fail(ErrorCode::internal, "barycenter: unreachable");
}

double Body::bounding_radius() const {
  switch (impl_->kind) {
    case BodyKind::ball:
      return impl_->radius;
    case BodyKind::ellipsoid:
      return impl_->shape_sigma_max;
    case BodyKind::hpolytope:
      return geometry(*impl_).bounding_radius;
    case BodyKind::affine_image:
      return impl_->t_sigma_max * Body(impl_->base).bounding_radius();
    case BodyKind::all_space:
      fail(ErrorCode::invalid_body, "bounding_radius: all-space is unbounded");
  }
  fail(ErrorCode::internal, "bounding_radius: unreachable");
}

Vec Body::bounding_center() const {
  if (impl_->kind == BodyKind::affine_image)
    return impl_->t * Body(impl_->base).bounding_center() + impl_->z;
  return Vec::Zero(impl_->dim);
}

Mat Body::transform() const {
  if (impl_->kind == BodyKind::affine_image) return impl_->t;
  return Mat::Identity(impl_->dim, impl_->dim);
}

Vec Body::shift() const {
  if (impl_->kind == BodyKind::affine_image) return impl_->z;
  return Vec::Zero(impl_->dim);
}

Body Body::base() const {
  require(impl_->kind == BodyKind::affine_image, ErrorCode::invalid_argument,
          "base: not an affine image");
  return Body(impl_->base);
}

double Body::ball_radius() const {
  require(impl_->kind == BodyKind::ball, ErrorCode::invalid_argument, "ball_radius: not a ball");
  return impl_->radius;
}

const Mat& Body::ellipsoid_shape() const {
  require(impl_->kind == BodyKind::ellipsoid, ErrorCode::invalid_argument,
          "ellipsoid_shape: not an ellipsoid");
  return impl_->shape;
}

const Mat& Body::polytope_rows() const {
  require(impl_->kind == BodyKind::hpolytope, ErrorCode::invalid_argument,
          "polytope_rows: not a polytope");
  return impl_->rows;
}

const Vec& Body::polytope_offsets() const {
  require(impl_->kind == BodyKind::hpolytope, ErrorCode::invalid_argument,
          "polytope_offsets: not a polytope");
  return impl_->offsets;
}

}  // namespace mip
