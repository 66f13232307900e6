#include "lfd/perception.hpp"

#include "lfd/errors.hpp"
#include "lfd/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace lfd {

KeypointSet generate_keypoints(std::span<const Vec2> site_pixels, const KeypointConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  KeypointSet out;
  out.source = "synthetic per_site=" + std::to_string(cfg.per_site) + " clutter=" + std::to_string(cfg.clutter) +
               " seed=" + std::to_string(seed);
  out.points.reserve(site_pixels.size() * cfg.per_site + cfg.clutter);
  for (const Vec2& site : site_pixels) {
    for (std::size_t i = 0; i < cfg.per_site; ++i) {
      const double dx = rng.normal();
      const double dy = rng.normal();
      out.points.emplace_back(site.x() + cfg.noise_px * dx, site.y() + cfg.noise_px * dy);
    }
  }
  for (std::size_t i = 0; i < cfg.clutter; ++i) {
    const double x = rng.uniform(0.0, cfg.width);
    const double y = rng.uniform(0.0, cfg.height);
    out.points.emplace_back(x, y);
  }
  return out;
}

namespace {

Eigen::Matrix2d floor_covariance(const Eigen::Matrix2d& S, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(0.5 * (S + S.transpose()));
  Eigen::Vector2d ev = es.eigenvalues().cwiseMax(floor);
  Eigen::Matrix2d out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

// log N(x | mu, S) for every point and component, N x K.
Eigen::MatrixXd log_densities(const GmmModel& m, std::span<const Vec2> pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  const auto K = static_cast<Eigen::Index>(m.K);
  Eigen::MatrixXd out(n, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& S = m.covariances[static_cast<std::size_t>(k)];
    const Eigen::Matrix2d Si = S.inverse();
    const double log_norm = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(S.determinant());
    const double log_w = std::log(m.weights[static_cast<std::size_t>(k)]);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec2 d = pts[static_cast<std::size_t>(i)] - m.means[static_cast<std::size_t>(k)];
      out(i, k) = log_w + log_norm - 0.5 * d.dot(Si * d);
    }
  }
  return out;
}

double logsumexp_rows(const Eigen::MatrixXd& L, Eigen::VectorXd* row_lse) {
  double total = 0.0;
  if (row_lse) row_lse->resize(L.rows());
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    const double mx = L.row(i).maxCoeff();
    const double v = mx + std::log((L.row(i).array() - mx).exp().sum());
    if (row_lse) (*row_lse)(i) = v;
    total += v;
  }
  return total;
}

GmmModel seed_model(std::span<const Vec2> pts, std::size_t K, double cov_floor, Rng& rng) {
  const std::size_t n = pts.size();
  GmmModel m;
  m.K = K;
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.below(n);
  for (std::size_t k = 0; k < K; ++k) {
    if (k > 0) {
      double total = 0.0;
      for (double v : d2) total += v;
      if (total > 0.0) {
        double u = rng.uniform() * total;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          u -= d2[i];
          if (u < 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.below(n);
      }
    }
    m.means.push_back(pts[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], (pts[i] - pts[pick]).squaredNorm());
  }

  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(n);
  Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) S += (p - mean) * (p - mean).transpose();
  S /= static_cast<double>(n);
  m.covariances.assign(K, floor_covariance(S, cov_floor));
  m.weights.assign(K, 1.0 / static_cast<double>(K));
  return m;
}

void m_step(GmmModel& m, std::span<const Vec2> pts, const Eigen::MatrixXd& resp, double cov_floor) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  double wsum = 0.0;
  for (std::size_t k = 0; k < m.K; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double Nk = resp.col(kk).sum();
    m.weights[k] = Nk / static_cast<double>(n);
    wsum += m.weights[k];
    if (Nk < 1e-12) continue;  // starved component keeps its shape
    Vec2 mu = Vec2::Zero();
    for (Eigen::Index i = 0; i < n; ++i) mu += resp(i, kk) * pts[static_cast<std::size_t>(i)];
    mu /= Nk;
    Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec2 d = pts[static_cast<std::size_t>(i)] - mu;
      S += resp(i, kk) * d * d.transpose();
    }
    m.means[k] = mu;
    m.covariances[k] = floor_covariance(S / Nk, cov_floor);
  }
  for (double& w : m.weights) w /= wsum;
}

GmmModel run_em(std::span<const Vec2> pts, GmmModel m, const GmmConfig& cfg) {
  Eigen::VectorXd lse;
  double ll = logsumexp_rows(log_densities(m, pts), nullptr);
  m.log_likelihood_history.push_back(ll);
  for (std::size_t it = 0; it < cfg.max_iter; ++it) {
    Eigen::MatrixXd L = log_densities(m, pts);
    logsumexp_rows(L, &lse);
    for (Eigen::Index i = 0; i < L.rows(); ++i) L.row(i) = (L.row(i).array() - lse(i)).exp();

    GmmModel next = m;
    m_step(next, pts, L, cfg.cov_floor);
    const double ll_next = logsumexp_rows(log_densities(next, pts), nullptr);
    // A decrease can only come from rounding at convergence; keep the old fit.
    if (!(ll_next >= ll)) break;
    next.log_likelihood_history.push_back(ll_next);
    m = std::move(next);
    const double gain = ll_next - ll;
    ll = ll_next;
    if (gain < cfg.tol) break;
  }
  return m;
}

}  // namespace

GmmModel gmm_fit(std::span<const Vec2> points, std::size_t K, const GmmConfig& cfg) {
  if (K == 0) throw InvalidArgument("gmm_fit: K must be >= 1");
  if (points.size() < K) throw InsufficientDataError("gmm_fit: fewer points than components");
  if (!(cfg.cov_floor > 0.0)) throw InvalidArgument("gmm_fit: cov_floor must be > 0");

  GmmModel best;
  double best_ll = -std::numeric_limits<double>::infinity();
  const std::size_t runs = std::max<std::size_t>(cfg.restarts, 1);
  for (std::size_t r = 0; r < runs; ++r) {
    Rng rng(derive_seed(cfg.seed, r));
    GmmModel m = run_em(points, seed_model(points, K, cfg.cov_floor, rng), cfg);
    const double ll = m.log_likelihood_history.back();
    if (r == 0 || ll > best_ll) {
      best_ll = ll;
      best = std::move(m);
    }
  }
  return best;
}

double gmm_log_likelihood(const GmmModel& model, std::span<const Vec2> points) {
  return logsumexp_rows(log_densities(model, points), nullptr);
}

std::vector<Vec2> cluster_centers(const GmmModel& model) {
  std::vector<std::size_t> idx(model.K);
  for (std::size_t k = 0; k < model.K; ++k) idx[k] = k;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (model.weights[a] != model.weights[b]) return model.weights[a] > model.weights[b];
    return model.means[a].x() < model.means[b].x();
  });
  std::vector<Vec2> out;
  out.reserve(model.K);
  for (std::size_t k : idx) out.push_back(model.means[k]);
  return out;
}

namespace {

Mat3 normalizing_transform(std::span<const Vec2> pts) {
  Vec2 c = Vec2::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - c).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) throw DegenerateGeometryError("estimate_board_homography: coincident points");
  const double s = std::sqrt(2.0) / mean_dist;
  Mat3 T;
  T << s, 0.0, -s * c.x(), 0.0, s, -s * c.y(), 0.0, 0.0, 1.0;
  return T;
}

bool has_collinear_triple(std::span<const Vec2> p) {
  for (std::size_t a = 0; a < p.size(); ++a)
    for (std::size_t b = a + 1; b < p.size(); ++b)
      for (std::size_t c = b + 1; c < p.size(); ++c) {
        const Vec2 u = p[b] - p[a];
        const Vec2 v = p[c] - p[a];
        const double scale = std::max(u.squaredNorm(), v.squaredNorm());
        if (std::abs(u.x() * v.y() - u.y() * v.x()) <= 1e-9 * scale) return true;
      }
  return false;
}

Vec2 apply_h(const Mat3& H, const Vec2& p) {
  const Vec3 r = H * Vec3(p.x(), p.y(), 1.0);
  if (std::abs(r.z()) < 1e-9) throw DegenerateGeometryError("homography: point maps to infinity");
  return r.head<2>() / r.z();
}

}  // namespace

PlanarTransform estimate_board_homography(std::span<const Vec2> pixels, std::span<const Vec2> board_mm,
                                          double board_plane_height) {
  if (pixels.size() != board_mm.size())
    throw InvalidArgument("estimate_board_homography: correspondence lists differ in length");
  const std::size_t n = pixels.size();
  if (n < 4) throw DegenerateGeometryError("estimate_board_homography: need at least 4 correspondences");
  if (n == 4 && (has_collinear_triple(pixels) || has_collinear_triple(board_mm)))
    throw DegenerateGeometryError("estimate_board_homography: three collinear points");

  const Mat3 Ta = normalizing_transform(pixels);
  const Mat3 Tb = normalizing_transform(board_mm);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(2 * n), 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 a = Ta * Vec3(pixels[i].x(), pixels[i].y(), 1.0);
    const Vec3 b = Tb * Vec3(board_mm[i].x(), board_mm[i].y(), 1.0);
    const double x = a.x() / a.z(), y = a.y() / a.z();
    const double u = b.x() / b.z(), v = b.y() / b.z();
    const auto r = static_cast<Eigen::Index>(2 * i);
    A.row(r) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    A.row(r + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(7) > 1e-9 * sv(0)))
    throw DegenerateGeometryError("estimate_board_homography: correspondences are rank deficient");
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 Hn;
  Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Mat3 H = Tb.inverse() * Hn * Ta;
  if (std::abs(H(2, 2)) < 1e-12) throw DegenerateGeometryError("estimate_board_homography: H33 vanishes");
  H /= H(2, 2);
  if (!(std::abs(H.determinant()) > 1e-12)) throw DegenerateGeometryError("estimate_board_homography: singular H");

  PlanarTransform tf;
  tf.H = H;
  tf.board_plane_height = board_plane_height;
  const Mat3 Hinv = H.inverse();
  double se = 0.0;
  for (std::size_t i = 0; i < n; ++i) se += (apply_h(Hinv, board_mm[i]) - pixels[i]).squaredNorm();
  tf.reprojection_rmse = std::sqrt(se / static_cast<double>(n));
  return tf;
}

Vec3 image_to_world(const PlanarTransform& tf, const Vec2& pixel) {
  const Vec2 mm = apply_h(tf.H, pixel);
  return {mm.x() / 1000.0, mm.y() / 1000.0, tf.board_plane_height};
}

Vec2 world_to_image(const PlanarTransform& tf, const Vec3& world) {
  return apply_h(tf.H.inverse(), Vec2(world.x() * 1000.0, world.y() * 1000.0));
}

Vec3 select_goal(std::span<const Vec3> centers, const Vec3& nominal) {
  if (centers.empty()) throw InvalidArgument("select_goal: no centers");
  std::size_t best = 0;
  double best_d = (centers[0] - nominal).squaredNorm();
  for (std::size_t i = 1; i < centers.size(); ++i) {
    const double d = (centers[i] - nominal).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return centers[best];
}

}  // namespace lfd
