#pragma once

#include "lfd/types.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lfd {

struct KeypointSet {
  std::vector<Vec2> points;  // pixels
  std::string source;
};

struct KeypointConfig {
  std::size_t per_site = 30;
  double noise_px = 2.0;
  std::size_t clutter = 10;
  double width = 640.0;  // image extent for clutter (px)
  double height = 480.0;
};

/// Synthetic feature detector: `per_site` Gaussian points around each site
/// pixel plus uniform clutter over the image.
KeypointSet generate_keypoints(std::span<const Vec2> site_pixels, const KeypointConfig& cfg, std::uint64_t seed);

struct GmmConfig {
  std::size_t max_iter = 200;
  double tol = 1e-8;
  double cov_floor = 1.0;  // px^2
  std::uint64_t seed = 0;
  std::size_t restarts = 4;  // independent seedings; best final log-likelihood kept
};

struct GmmModel {
  std::size_t K = 0;
  std::vector<double> weights;
  std::vector<Vec2> means;
  std::vector<Eigen::Matrix2d> covariances;
  std::vector<double> log_likelihood_history;  // total log-likelihood per EM iteration
};

/// EM for a 2D Gaussian mixture seeded by k-means++ (D^2 sampling).
GmmModel gmm_fit(std::span<const Vec2> points, std::size_t K, const GmmConfig& cfg = {});
inline GmmModel gmm_fit(const KeypointSet& set, std::size_t K, const GmmConfig& cfg = {}) {
  return gmm_fit(set.points, K, cfg);
}

double gmm_log_likelihood(const GmmModel& model, std::span<const Vec2> points);

/// Means ordered by decreasing weight; equal weights ordered by x.
std::vector<Vec2> cluster_centers(const GmmModel& model);

/// Image pixels -> board millimetres, H(2,2) == 1.
struct PlanarTransform {
  Mat3 H = Mat3::Identity();
  double board_plane_height = 0.0;  // m
  double reprojection_rmse = 0.0;   // px
};

PlanarTransform estimate_board_homography(std::span<const Vec2> pixels, std::span<const Vec2> board_mm,
                                          double board_plane_height = 0.0);

/// Board mm are mapped to world x/y in metres; z is the plane height.
Vec3 image_to_world(const PlanarTransform& tf, const Vec2& pixel);
Vec2 world_to_image(const PlanarTransform& tf, const Vec3& world);

/// Center nearest the nominal target; the first index wins ties.
Vec3 select_goal(std::span<const Vec3> centers, const Vec3& nominal);

}  // namespace lfd
