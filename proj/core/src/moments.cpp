#include "mvs/moments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvs/errors.hpp"

namespace mvs {

namespace {

double ipow(double base, int exponent) {
  double r = 1.0;
  for (int i = 0; i < exponent; ++i) r *= base;
  return r;
}

double signed_area(const std::vector<Eigen::Vector2d>& v) {
  double twice = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % v.size()];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * twice;
}

}  // namespace

GrayImage::GrayImage(int width, int height)
    : GrayImage(width, height,
                std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                        static_cast<std::size_t>(std::max(height, 0)),
                                    0.0)) {}

GrayImage::GrayImage(int width, int height, std::vector<double> intensities)
    : width_(width), height_(height), data_(std::move(intensities)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::DimensionMismatch, "intensity buffer does not match width*height");
  }
  for (double v : data_) {
    if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "intensities must be non-negative");
  }
}

std::size_t GrayImage::index(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) {
    throw Error(ErrorCode::InvalidArgument, "pixel index out of range");
  }
  return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
}

void GrayImage::set(int x, int y, double value) {
  if (!(value >= 0.0)) throw Error(ErrorCode::InvalidArgument, "intensities must be non-negative");
  data_[index(x, y)] = value;
}

GrayImage GrayImage::shifted(int dx, int dy) const {
  GrayImage out(width_, height_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const int nx = x + dx;
      const int ny = y + dy;
      if (nx >= 0 && ny >= 0 && nx < width_ && ny < height_) out.set(nx, ny, at(x, y));
    }
  }
  return out;
}

ConvexPolygon::ConvexPolygon(std::vector<Eigen::Vector2d> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3) {
    throw Error(ErrorCode::DegeneratePolygon, "polygon needs at least 3 vertices");
  }
  double area = signed_area(vertices_);
  if (area < 0.0) {
    std::reverse(vertices_.begin(), vertices_.end());
    area = -area;
  }
  if (!(area > 0.0) || !std::isfinite(area)) {
    throw Error(ErrorCode::DegeneratePolygon, "polygon area must be strictly positive");
  }
  area_ = area;
}

ConvexPolygon ConvexPolygon::rectangle(double width, double height, Eigen::Vector2d center,
                                       double angle) {
  const double hw = 0.5 * width;
  const double hh = 0.5 * height;
  const Eigen::Rotation2Dd rot(angle);
  std::vector<Eigen::Vector2d> v = {{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}};
  for (auto& p : v) p = center + rot * p;
  return ConvexPolygon(std::move(v));
}

ConvexPolygon ConvexPolygon::rotated(double angle, const Eigen::Vector2d& pivot) const {
  const Eigen::Rotation2Dd rot(angle);
  std::vector<Eigen::Vector2d> v = vertices_;
  for (auto& p : v) p = pivot + rot * (p - pivot);
  return ConvexPolygon(std::move(v));
}

ConvexPolygon ConvexPolygon::scaled(double factor) const {
  std::vector<Eigen::Vector2d> v = vertices_;
  for (auto& p : v) p *= factor;
  return ConvexPolygon(std::move(v));
}

ConvexPolygon ConvexPolygon::translated(const Eigen::Vector2d& offset) const {
  std::vector<Eigen::Vector2d> v = vertices_;
  for (auto& p : v) p += offset;
  return ConvexPolygon(std::move(v));
}

Eigen::Vector2d ConvexPolygon::vertex_mean() const {
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  for (const auto& p : vertices_) s += p;
  return s / static_cast<double>(vertices_.size());
}

double raw_moment(const GrayImage& img, int p, int q) {
  if (p < 0 || q < 0 || p > 2 || q > 2) {
    throw Error(ErrorCode::InvalidArgument, "moment orders must lie in {0, 1, 2}");
  }
  double sum = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    const double yq = ipow(static_cast<double>(y), q);
    for (int x = 0; x < img.width(); ++x) {
      const double v = img.at(x, y);
      if (v != 0.0) sum += ipow(static_cast<double>(x), p) * yq * v;
    }
  }
  return sum;
}

MomentSet central_moments(const GrayImage& img) {
  // Work in coordinates relative to the first occupied row/column so that
  // integer shifts of the image reproduce the central moments bit for bit.
  int x_min = img.width();
  int y_min = img.height();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (img.at(x, y) > 0.0) {
        x_min = std::min(x_min, x);
        y_min = std::min(y_min, y);
      }
    }
  }
  if (x_min == img.width()) throw Error(ErrorCode::EmptyRegion, "image has no positive intensity");

  double s0 = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (int y = y_min; y < img.height(); ++y) {
    for (int x = x_min; x < img.width(); ++x) {
      const double v = img.at(x, y);
      if (v == 0.0) continue;
      s0 += v;
      sx += (x - x_min) * v;
      sy += (y - y_min) * v;
    }
  }
  const double cx = sx / s0;
  const double cy = sy / s0;

  MomentSet m;
  m.m00 = raw_moment(img, 0, 0);
  m.m10 = raw_moment(img, 1, 0);
  m.m01 = raw_moment(img, 0, 1);
  m.centroid_x = m.m10 / m.m00;
  m.centroid_y = m.m01 / m.m00;
  for (int y = y_min; y < img.height(); ++y) {
    const double dy = (y - y_min) - cy;
    for (int x = x_min; x < img.width(); ++x) {
      const double v = img.at(x, y);
      if (v == 0.0) continue;
      const double dx = (x - x_min) - cx;
      m.mu20 += dx * dx * v;
      m.mu02 += dy * dy * v;
      m.mu11 += dx * dy * v;
    }
  }
  return m;
}

MomentSet polygon_moments(const ConvexPolygon& poly) {
  const auto& v = poly.vertices();
  // Integrals are evaluated about the vertex mean to limit round-off for
  // polygons far from the origin.
  const Eigen::Vector2d ref = poly.vertex_mean();

  double a2 = 0.0;  // 2 * area
  double sx = 0.0;  // 6 * int x dA
  double sy = 0.0;
  double sxx = 0.0;  // 12 * int x^2 dA
  double syy = 0.0;
  double sxy = 0.0;  // 24 * int xy dA
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Eigen::Vector2d p = v[i] - ref;
    const Eigen::Vector2d n = v[(i + 1) % v.size()] - ref;
    const double c = p.x() * n.y() - n.x() * p.y();
    a2 += c;
    sx += (p.x() + n.x()) * c;
    sy += (p.y() + n.y()) * c;
    sxx += (p.x() * p.x() + p.x() * n.x() + n.x() * n.x()) * c;
    syy += (p.y() * p.y() + p.y() * n.y() + n.y() * n.y()) * c;
    sxy += (p.x() * n.y() + 2.0 * p.x() * p.y() + 2.0 * n.x() * n.y() + n.x() * p.y()) * c;
  }

  const double area = 0.5 * a2;
  if (!(area > 0.0)) throw Error(ErrorCode::DegeneratePolygon, "polygon area must be positive");

  const double cx_local = sx / (6.0 * area);
  const double cy_local = sy / (6.0 * area);

  MomentSet m;
  m.m00 = area;
  m.centroid_x = ref.x() + cx_local;
  m.centroid_y = ref.y() + cy_local;
  m.m10 = area * m.centroid_x;
  m.m01 = area * m.centroid_y;
  m.mu20 = sxx / 12.0 - area * cx_local * cx_local;
  m.mu02 = syy / 12.0 - area * cy_local * cy_local;
  m.mu11 = sxy / 24.0 - area * cx_local * cy_local;
  return m;
}

GrayImage rasterize(const ConvexPolygon& poly, const PixelGrid& grid, int supersample) {
  if (grid.width <= 0 || grid.height <= 0 || !(grid.pixel_size > 0.0) || supersample < 1) {
    throw Error(ErrorCode::InvalidArgument, "invalid raster grid");
  }
  const auto& v = poly.vertices();
  auto inside = [&v](double x, double y) {
    // Counter-clockwise convex polygon: inside iff left of every edge.
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& a = v[i];
      const auto& b = v[(i + 1) % v.size()];
      if ((b.x() - a.x()) * (y - a.y()) - (b.y() - a.y()) * (x - a.x()) < 0.0) return false;
    }
    return true;
  };

  GrayImage img(grid.width, grid.height);
  const double sub = grid.pixel_size / supersample;
  const double weight = 1.0 / (supersample * supersample);
  for (int j = 0; j < grid.height; ++j) {
    for (int i = 0; i < grid.width; ++i) {
      const double x0 = grid.origin.x() + i * grid.pixel_size;
      const double y0 = grid.origin.y() + j * grid.pixel_size;
      int hits = 0;
      for (int sj = 0; sj < supersample; ++sj) {
        for (int si = 0; si < supersample; ++si) {
          if (inside(x0 + (si + 0.5) * sub, y0 + (sj + 0.5) * sub)) ++hits;
        }
      }
      if (hits > 0) img.set(i, j, hits * weight);
    }
  }
  return img;
}

MomentSet to_plane_units(const MomentSet& pm, const PixelGrid& grid) {
  const double s = grid.pixel_size;
  const double s2 = s * s;
  MomentSet m;
  m.m00 = pm.m00 * s2;
  // Pixel i is centred at origin + (i + 0.5) * s.
  m.centroid_x = grid.origin.x() + (pm.centroid_x + 0.5) * s;
  m.centroid_y = grid.origin.y() + (pm.centroid_y + 0.5) * s;
  m.m10 = m.m00 * m.centroid_x;
  m.m01 = m.m00 * m.centroid_y;
  m.mu20 = pm.mu20 * s2 * s2;
  m.mu02 = pm.mu02 * s2 * s2;
  m.mu11 = pm.mu11 * s2 * s2;
  return m;
}

double spread_area(const MomentSet& moms) {
  if (!(moms.m00 > 0.0)) throw Error(ErrorCode::EmptyRegion, "moment set has no mass");
  return (moms.mu20 + moms.mu02) / moms.m00;
}

FeatureVector feature_vector(const MomentSet& moms, double z_star, double a_star) {
  if (!(z_star > 0.0)) throw Error(ErrorCode::InvalidArgument, "z_star must be positive");
  if (!(a_star > 0.0)) throw Error(ErrorCode::InvalidArgument, "a_star must be positive");
  const double a = spread_area(moms);
  if (!(a > 0.0)) throw Error(ErrorCode::NonPositiveArea, "moment spread a must be positive");

  FeatureVector q;
  q.a_n = z_star * std::sqrt(a_star / a);
  q.x_n = q.a_n * moms.centroid_x;
  q.y_n = q.a_n * moms.centroid_y;
  q.theta = 0.5 * std::atan2(2.0 * moms.mu11, moms.mu20 - moms.mu02);
  return q;
}

}  // namespace mvs
