#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mvs/types.hpp"

namespace mvs {

/// Row-major image of non-negative intensities; x is the column, y the row.
class GrayImage {
 public:
  GrayImage(int width, int height);
  GrayImage(int width, int height, std::vector<double> intensities);

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] double at(int x, int y) const { return data_[index(x, y)]; }
  void set(int x, int y, double value);
  [[nodiscard]] std::span<const double> intensities() const noexcept { return data_; }

  /// Copy shifted by whole pixels; content pushed off the border is dropped.
  [[nodiscard]] GrayImage shifted(int dx, int dy) const;

 private:
  [[nodiscard]] std::size_t index(int x, int y) const;

  int width_;
  int height_;
  std::vector<double> data_;
};

/// Simple polygon in normalized image coordinates, stored counter-clockwise.
class ConvexPolygon {
 public:
  explicit ConvexPolygon(std::vector<Eigen::Vector2d> vertices);

  [[nodiscard]] const std::vector<Eigen::Vector2d>& vertices() const noexcept { return vertices_; }
  [[nodiscard]] double area() const noexcept { return area_; }

  static ConvexPolygon rectangle(double width, double height, Eigen::Vector2d center = {0.0, 0.0},
                                 double angle = 0.0);
  [[nodiscard]] ConvexPolygon rotated(double angle, const Eigen::Vector2d& pivot) const;
  [[nodiscard]] ConvexPolygon scaled(double factor) const;
  [[nodiscard]] ConvexPolygon translated(const Eigen::Vector2d& offset) const;
  [[nodiscard]] Eigen::Vector2d vertex_mean() const;

 private:
  std::vector<Eigen::Vector2d> vertices_;
  double area_ = 0.0;
};

/// Raw moments up to order one and central moments of order two.
struct MomentSet {
  double m00 = 0.0;
  double m10 = 0.0;
  double m01 = 0.0;
  double mu20 = 0.0;
  double mu02 = 0.0;
  double mu11 = 0.0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
};

/// M_pq = sum_x sum_y x^p y^q I(x, y) for p, q in {0, 1, 2}.
double raw_moment(const GrayImage& img, int p, int q);

/// Centroid and second-order central moments. Throws EmptyRegion when M00 == 0.
MomentSet central_moments(const GrayImage& img);

/// Exact area moments of a uniform-density polygon (Green's theorem).
MomentSet polygon_moments(const ConvexPolygon& poly);

/// Maps a pixel grid onto the normalized image plane: pixel (i, j) covers
/// [origin + i*pixel_size, origin + (i+1)*pixel_size) along each axis.
struct PixelGrid {
  Eigen::Vector2d origin{0.0, 0.0};
  double pixel_size = 1.0;
  int width = 0;
  int height = 0;
};

/// Rasterizes the polygon with per-pixel coverage estimated by supersampling.
GrayImage rasterize(const ConvexPolygon& poly, const PixelGrid& grid, int supersample = 4);

/// Converts pixel-unit moments of an image over `grid` into normalized-plane
/// area moments comparable with polygon_moments.
MomentSet to_plane_units(const MomentSet& pixel_moments, const PixelGrid& grid);

/// Spread measure a = (mu20 + mu02) / m00.
double spread_area(const MomentSet& moms);

/// Builds [x_n, y_n, a_n, theta] with a_n = z_star * sqrt(a_star / a), x_n = a_n * xbar,
/// y_n = a_n * ybar and theta the principal-axis orientation.
FeatureVector feature_vector(const MomentSet& moms, double z_star, double a_star);

}  // namespace mvs
