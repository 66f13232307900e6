#include "lfd/registration.hpp"

#include "lfd/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lfd {

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.R = R.transpose();
  inv.t = -(inv.R * t);
  return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  RigidTransform out;
  out.R = R * other.R;
  out.t = R * other.t + t;
  return out;
}

double RigidTransform::rotation_angle() const {
  const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near zero; recover the small-angle part from the
  // skew-symmetric component instead.
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return std::atan2(0.5 * w.norm(), c);
}

RigidTransform kabsch_rotation(std::span<const Vec3> P, std::span<const Vec3> Q) {
  if (P.size() != Q.size())
    throw InvalidArgument("kabsch_rotation: point lists differ in length");
  if (P.size() < 3) throw DegenerateGeometryError("kabsch_rotation: need at least 3 points");

  Vec3 cp = Vec3::Zero();
  Vec3 cq = Vec3::Zero();
  for (std::size_t i = 0; i < P.size(); ++i) {
    cp += P[i];
    cq += Q[i];
  }
  cp /= static_cast<double>(P.size());
  cq /= static_cast<double>(Q.size());

  Mat3 H = Mat3::Zero();
  for (std::size_t i = 0; i < P.size(); ++i) H += (P[i] - cp) * (Q[i] - cq).transpose();

  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0))
    throw DegenerateGeometryError("kabsch_rotation: cross-covariance has rank < 2");

  const Mat3& U = svd.matrixU();
  const Mat3& V = svd.matrixV();
  Mat3 D = Mat3::Identity();
  if ((V * U.transpose()).determinant() < 0.0) D(2, 2) = -1.0;

  RigidTransform out;
  out.R = V * D * U.transpose();
  out.t = cq - out.R * cp;
  return out;
}

namespace {

struct Correspondence {
  std::vector<Vec3> matched;
  double rmse = 0.0;
};

Correspondence nearest_neighbours(std::span<const Vec3> source, const RigidTransform& T,
                                  std::span<const Vec3> target) {
  Correspondence c;
  c.matched.reserve(source.size());
  double sse = 0.0;
  for (const Vec3& s : source) {
    const Vec3 x = T.apply(s);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < target.size(); ++j) {
      const double d = (target[j] - x).squaredNorm();
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    c.matched.push_back(target[best_j]);
    sse += best;
  }
  c.rmse = std::sqrt(sse / static_cast<double>(source.size()));
  return c;
}

IcpResult icp_refine(std::span<const Vec3> source, std::span<const Vec3> target, const RigidTransform& init,
                     const IcpConfig& cfg) {
  IcpResult result;
  result.transform = init;
  Correspondence corr = nearest_neighbours(source, result.transform, target);
  result.residual_history.push_back(corr.rmse);

  for (int it = 0; it < cfg.max_iter; ++it) {
    const RigidTransform next = kabsch_rotation(source, corr.matched);
    Correspondence next_corr = nearest_neighbours(source, next, target);
    if (next_corr.rmse > corr.rmse) break;  // rounding at convergence
    const double improvement = corr.rmse - next_corr.rmse;
    result.transform = next;
    corr = std::move(next_corr);
    result.residual_history.push_back(corr.rmse);
    if (improvement < cfg.tol) break;
  }
  return result;
}

}  // namespace

IcpResult icp_align(std::span<const Vec3> source, std::span<const Vec3> target, const IcpConfig& cfg) {
  if (source.empty() || target.empty()) throw InvalidArgument("icp_align: empty point set");
  if (cfg.max_iter < 1) throw InvalidArgument("icp_align: max_iter must be >= 1");

  Vec3 cs = Vec3::Zero();
  Vec3 ct = Vec3::Zero();
  for (const Vec3& p : source) cs += p;
  for (const Vec3& p : target) ct += p;
  cs /= static_cast<double>(source.size());
  ct /= static_cast<double>(target.size());

  RigidTransform centroid;
  centroid.t = ct - cs;
  IcpResult best = icp_refine(source, target, centroid, cfg);

  // Nearest-neighbour ICP is local. The inputs are ordered trajectories, so
  // pairing samples by their fraction along the sequence gives a second start
  // that usually lands in the right basin.
  const std::size_t n = std::min(source.size(), target.size());
  if (n >= 3) {
    std::vector<Vec3> a, b;
    a.reserve(n);
    b.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      a.push_back(source[static_cast<std::size_t>(std::lround(u * static_cast<double>(source.size() - 1)))]);
      b.push_back(target[static_cast<std::size_t>(std::lround(u * static_cast<double>(target.size() - 1)))]);
    }
    try {
      IcpResult ordered = icp_refine(source, target, kabsch_rotation(a, b), cfg);
      if (ordered.residual_history.back() < best.residual_history.back()) best = std::move(ordered);
    } catch (const DegenerateGeometryError&) {
    }
  }
  return best;
}

IcpResult icp_align(const Trajectory& source, const Trajectory& target, const IcpConfig& cfg) {
  const auto src = source.positions();
  const auto tgt = target.positions();
  return icp_align(std::span<const Vec3>(src), std::span<const Vec3>(tgt), cfg);
}

bool WarpPath::is_valid(std::size_t n, std::size_t m) const {
  if (pairs.empty() || n == 0 || m == 0) return false;
  if (pairs.front() != std::pair<std::size_t, std::size_t>{0, 0}) return false;
  if (pairs.back() != std::pair<std::size_t, std::size_t>{n - 1, m - 1}) return false;
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    const auto [i0, j0] = pairs[k - 1];
    const auto [i1, j1] = pairs[k];
    if (i1 < i0 || j1 < j0) return false;
    const std::size_t di = i1 - i0;
    const std::size_t dj = j1 - j0;
    if (di > 1 || dj > 1 || (di == 0 && dj == 0)) return false;
  }
  return true;
}

DtwResult dtw_align(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const auto n = static_cast<std::size_t>(a.rows());
  const auto m = static_cast<std::size_t>(b.rows());
  if (n == 0 || m == 0) throw InvalidArgument("dtw_align: empty series");
  if (a.cols() != b.cols()) throw InvalidArgument("dtw_align: series differ in dimension");

  // Cumulative cost, row-major n x m.
  std::vector<double> D(n * m);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return D[i * m + j]; };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = (a.row(static_cast<Eigen::Index>(i)) - b.row(static_cast<Eigen::Index>(j))).norm();
      double prev;
      if (i == 0 && j == 0) {
        prev = 0.0;
      } else if (i == 0) {
        prev = at(0, j - 1);
      } else if (j == 0) {
        prev = at(i - 1, 0);
      } else {
        prev = std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
      }
      at(i, j) = d + prev;
    }
  }

  DtwResult result;
  result.cost = at(n - 1, m - 1);
  std::size_t i = n - 1;
  std::size_t j = m - 1;
  result.path.pairs.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      // Ties prefer the diagonal, then advancing in `a`.
      const double diag = at(i - 1, j - 1);
      const double up = at(i - 1, j);
      const double left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    result.path.pairs.emplace_back(i, j);
  }
  std::reverse(result.path.pairs.begin(), result.path.pairs.end());
  return result;
}

namespace {
Eigen::MatrixXd as_matrix(std::span<const Vec3> pts) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return m;
}
}  // namespace

DtwResult dtw_align(std::span<const Vec3> a, std::span<const Vec3> b) {
  return dtw_align(as_matrix(a), as_matrix(b));
}

Trajectory warp_to_reference(const Trajectory& traj, std::span<const double> ref_times,
                             const WarpPath& path) {
  if (path.pairs.empty()) throw InvalidArgument("warp_to_reference: empty warp path");
  if (!path.is_valid(traj.size(), ref_times.size()))
    throw InvalidArgument("warp_to_reference: path does not match series lengths");

  std::vector<std::vector<std::size_t>> sources(ref_times.size());
  for (const auto& [i, j] : path.pairs) sources[j].push_back(i);

  Trajectory out;
  out.arm = traj.arm;
  out.samples.resize(ref_times.size());
  for (std::size_t j = 0; j < ref_times.size(); ++j) {
    const auto& idx = sources[j];
    Vec3 p = Vec3::Zero();
    Eigen::Vector4d qsum = Eigen::Vector4d::Zero();
    const Quat& q0 = traj.samples[idx.front()].q;
    for (std::size_t i : idx) {
      const auto& s = traj.samples[i];
      p += s.p;
      Eigen::Vector4d qv(s.q.w(), s.q.x(), s.q.y(), s.q.z());
      if (s.q.dot(q0) < 0.0) qv = -qv;
      qsum += qv;
    }
    p /= static_cast<double>(idx.size());

    std::size_t keep = idx.front();
    if (idx.size() > 1 && qsum.norm() > 0.0) {
      const Eigen::Vector4d mean = qsum.normalized();
      double best = -1.0;
      for (std::size_t i : idx) {
        const auto& q = traj.samples[i].q;
        const double d = std::abs(mean.dot(Eigen::Vector4d(q.w(), q.x(), q.y(), q.z())));
        if (d > best) {
          best = d;
          keep = i;
        }
      }
    }
    auto& s = out.samples[j];
    s.t = ref_times[j];
    s.p = p;
    s.q = traj.samples[keep].q;
    s.grip = traj.samples[keep].grip;
  }
  return out;
}

std::pair<std::size_t, Eigen::MatrixXd> dtw_medoid(std::span<const Trajectory> demos) {
  const std::size_t n = demos.size();
  Eigen::MatrixXd costs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<std::vector<Vec3>> pos;
  pos.reserve(n);
  for (const auto& d : demos) pos.push_back(d.positions());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = dtw_align(std::span<const Vec3>(pos[i]), std::span<const Vec3>(pos[j])).cost;
      costs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
      costs(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c;
    }
  }
  std::size_t best = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double s = costs.row(static_cast<Eigen::Index>(i)).sum();
    if (s < best_sum) {
      best_sum = s;
      best = i;
    }
  }
  return {best, costs};
}

RegisteredDemoSet register_demos(std::span<const Trajectory> demos, const RegistrationConfig& cfg) {
  if (demos.empty()) throw InvalidArgument("register_demos: no demonstrations");
  for (const auto& d : demos) {
    d.validate();
    if (d.arm != demos.front().arm) throw InvalidArgument("register_demos: demos mix arms");
  }

  RegisteredDemoSet set;
  set.arm = demos.front().arm;
  set.reference_index = dtw_medoid(demos).first;

  const Trajectory& ref = demos[set.reference_index];
  const auto ref_pos = ref.positions();
  std::vector<double> ref_times;
  ref_times.reserve(ref.size());
  for (const auto& s : ref.samples) ref_times.push_back(s.t);

  for (std::size_t k = 0; k < demos.size(); ++k) {
    if (k == set.reference_index) {
      set.demos.push_back(ref);
      set.transforms.push_back(RigidTransform::identity());
      set.warp_costs.push_back(0.0);
      continue;
    }
    const Trajectory& demo = demos[k];
    const IcpResult icp = icp_align(demo, ref, cfg.icp);
    Trajectory aligned = demo;
    const Quat rq(icp.transform.R);
    for (auto& s : aligned.samples) {
      s.p = icp.transform.apply(s.p);
      s.q = (rq * s.q).normalized();
    }
    const auto aligned_pos = aligned.positions();
    const DtwResult dtw = dtw_align(std::span<const Vec3>(aligned_pos), std::span<const Vec3>(ref_pos));
    set.demos.push_back(warp_to_reference(aligned, ref_times, dtw.path));
    set.transforms.push_back(icp.transform);
    set.warp_costs.push_back(dtw.cost);
  }
  return set;
}

}  // namespace lfd
