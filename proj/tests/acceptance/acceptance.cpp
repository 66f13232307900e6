// Headless acceptance run: one PASS/FAIL line per criterion, exit status 1
// when any criterion fails.

#include "lfd/dmp.hpp"
#include "lfd/episode.hpp"
#include "lfd/gpr.hpp"
#include "lfd/io.hpp"
#include "lfd/perception.hpp"
#include "lfd/registration.hpp"
#include "lfd/rng.hpp"
#include "lfd/shared_control.hpp"
#include "lfd/stats.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"

#include <Eigen/Geometry>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace lfd;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool run_criterion(int id, const char* name, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double dt = seconds_since(t0);
  if (budget_s > 0.0 && dt >= budget_s) {
    o.pass = false;
    o.detail << " [over the " << budget_s << " s budget]";
  }
  std::printf("criterion %d %-22s %s  (%.2f s)%s\n", id, name, o.pass ? "PASS" : "FAIL", dt, o.detail.str().c_str());
  std::fflush(stdout);
  return o.pass;
}

// ---- 1 registration

std::vector<Vec3> random_curve(Rng& rng, std::size_t n) {
  std::array<double, 9> c{};
  for (double& v : c) v = rng.uniform(1.0, 9.0);
  std::vector<Vec3> pts;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(n - 1);
    pts.emplace_back(0.05 * std::sin(c[0] * u + c[1]) + 0.02 * u, 0.04 * std::cos(c[2] * u + c[3]),
                     0.03 * std::sin(c[4] * u) * std::cos(c[5] * u + c[6]) + 0.01 * c[7] * u * u);
  }
  return pts;
}

void criterion_registration(Outcome& o) {
  Rng rng(2024);
  double worst_rot = 0.0, worst_trans = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto target = random_curve(rng, 200);
    const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    RigidTransform T;
    T.R = Eigen::AngleAxisd(rng.uniform(0.0, M_PI), axis).toRotationMatrix();
    T.t = Vec3(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05));
    std::vector<Vec3> source;
    for (const auto& p : target) source.push_back(T.apply(p));
    const IcpResult r = icp_align(std::span<const Vec3>(source), std::span<const Vec3>(target));
    const RigidTransform E = r.transform * T;  // identity when recovered
    worst_rot = std::max(worst_rot, oracle::rotation_error(E.R, Mat3::Identity()));
    worst_trans = std::max(worst_trans, E.t.norm());
  }
  o.check(worst_rot < 1e-6, "ICP rotation error");
  o.check(worst_trans < 1e-6, "ICP translation error");

  // every pair of series with lengths 1..6 over {0, 1, 2}
  std::size_t pairs = 0, mismatches = 0;
  for (int n = 1; n <= 6; ++n) {
    std::size_t na = 1;
    for (int q = 0; q < n; ++q) na *= 3;
    for (std::size_t ka = 0; ka < na; ++ka) {
      std::vector<int> a;
      for (std::size_t k = ka, q = 0; q < static_cast<std::size_t>(n); ++q, k /= 3) a.push_back(static_cast<int>(k % 3));
      Eigen::MatrixXd A(n, 1);
      for (int i = 0; i < n; ++i) A(i, 0) = a[static_cast<std::size_t>(i)];
      for (int m = 1; m <= 6; ++m) {
        std::uint64_t paths = 0;
        const std::vector<int> brute = oracle::brute_dtw_cost_all(a, m, &paths);
        if (paths != oracle::delannoy(n - 1, m - 1)) ++mismatches;
        Eigen::MatrixXd B(m, 1);
        for (std::size_t kb = 0; kb < brute.size(); ++kb) {
          for (std::size_t k = kb, q = 0; q < static_cast<std::size_t>(m); ++q, k /= 3)
            B(static_cast<Eigen::Index>(q), 0) = static_cast<double>(k % 3);
          const DtwResult d = dtw_align(A, B);
          if (d.cost != static_cast<double>(brute[kb]) || !d.path.is_valid(static_cast<std::size_t>(n), static_cast<std::size_t>(m)))
            ++mismatches;
          ++pairs;
        }
      }
    }
  }
  o.check(mismatches == 0, "DTW differs from path enumeration");
  o.detail << " icp rot " << worst_rot << " rad, trans " << worst_trans << " m; dtw " << pairs << " pairs, "
           << mismatches << " mismatches";
}

// ---- 2 GPR

void criterion_gpr(Outcome& o) {
  Rng rng(77);
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 13u, 21u, 34u, 50u}) {
    for (int h = 0; h < 4; ++h) {
      const GprHyper hyper{std::exp(rng.uniform(std::log(0.02), std::log(0.5))),
                           std::exp(rng.uniform(std::log(1e-5), std::log(1.0))),
                           std::exp(rng.uniform(std::log(1e-8), std::log(1e-3)))};
      std::vector<double> x, f, xs;
      for (std::size_t i = 0; i < n; ++i) {
        x.push_back(rng.uniform(0.0, 1.0));
        f.push_back(std::sqrt(hyper.signal_var) * std::sin(7.0 * x.back()) + 1e-3 * rng.normal());
      }
      for (int i = 0; i <= 60; ++i) xs.push_back(-0.25 + 1.5 * i / 60.0);
      const GprModel model = gpr_fit(x, f, hyper);
      const GprPrediction p = gpr_predict(model, xs);
      const oracle::DenseGp d = oracle::dense_gp(x, f, hyper, xs);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        worst = std::max(worst, std::abs(p.mean[i] - d.mean[i]));
        worst = std::max(worst, std::abs(p.variance[i] - std::max(0.0, d.variance[i])));
      }
      ++cases;
    }
  }
  o.check(worst < 1e-8, "posterior differs from the dense oracle");

  // noiseless interpolation and reversion to the prior far from the data
  double interp = 0.0, interp_var = 0.0, prior_mean = 0.0, prior_var = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const GprHyper hyper{0.1 + 0.02 * trial, 1e-3, 1e-14};
    std::vector<double> x, f;
    for (int i = 0; i < 12; ++i) {
      x.push_back(i / 11.0);
      f.push_back(0.03 * std::cos(4.0 * x.back() + trial));
    }
    const GprModel model = gpr_fit(x, f, hyper);
    const GprPrediction at = gpr_predict(model, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      interp = std::max(interp, std::abs(at.mean[i] - f[i]) / 0.03);
      interp_var = std::max(interp_var, at.variance[i] / hyper.signal_var);
    }
    const std::vector<double> far{1.0 + 40.0 * hyper.lengthscale, -40.0 * hyper.lengthscale};
    const GprPrediction away = gpr_predict(model, far);
    for (std::size_t i = 0; i < far.size(); ++i) {
      prior_mean = std::max(prior_mean, std::abs(away.mean[i]) / 0.03);
      prior_var = std::max(prior_var, std::abs(away.variance[i] - hyper.signal_var) / hyper.signal_var);
    }
  }
  o.check(interp < 1e-6 && interp_var < 1e-6, "noiseless interpolation");
  o.check(prior_mean < 1e-12 && prior_var < 1e-12, "prior reversion");
  o.detail << " " << cases << " oracle cases, max |diff| " << worst << "; interp rel " << interp << ", prior rel "
           << std::max(prior_mean, prior_var);
}

// ---- 3 DMP

void criterion_dmp(Outcome& o) {
  Rng rng(31);
  double worst_reach = 0.0, worst_over = 0.0;
  for (double gamma : {1.0, 2.0, 5.0}) {
    DmpModel m;
    m.params = make_dmp_params(50, gamma);
    m.weights = Eigen::MatrixX3d::Zero(50, 3);
    m.g = Vec3::Ones();
    for (int k = 0; k < 10; ++k) {
      const Vec3 x0(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
      const Vec3 g(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
      const double amp = (g - x0).norm();
      const Trajectory tr = rollout(m, x0, g, gamma, 1e-3, 1.5 * gamma);
      worst_reach = std::max(worst_reach, (tr.samples.back().p - g).norm() / amp);
      for (const auto& s : tr.samples)
        for (int d = 0; d < 3; ++d) {
          const double dir = g(d) - x0(d);
          if (std::abs(dir) < 1e-12) continue;
          worst_over = std::max(worst_over, (s.p(d) - g(d)) * (dir > 0 ? 1.0 : -1.0) / amp);
        }
    }
  }
  o.check(worst_reach < 0.01, "zero-weight rollout misses the goal");
  o.check(worst_over < 1e-3, "zero-weight rollout overshoots");

  double worst_fit = 0.0;
  for (int k = 0; k < 12; ++k) {
    const Vec3 x0(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0.0, 0.05));
    Vec3 g;
    do {
      g = Vec3(rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08), rng.uniform(0.0, 0.05));
    } while ((g - x0).norm() < 0.02);
    const double T = rng.uniform(0.5, 3.0);
    const Trajectory demo = oracle::min_jerk_demo(x0, g, T, 501);
    const DmpModel model = fit_weights(demo, make_dmp_params(50));
    const double dt = T / 500.0 / 4.0;
    const Trajectory roll = rollout(model, x0, g, T, dt);
    double sse = 0.0;
    for (std::size_t i = 0; i < demo.size(); ++i) sse += (roll.samples[std::min(4 * i, roll.size() - 1)].p - demo.samples[i].p).squaredNorm();
    worst_fit = std::max(worst_fit, std::sqrt(sse / static_cast<double>(demo.size())) / (g - x0).norm());
  }
  o.check(worst_fit < 0.02, "min-jerk reproduction RMSE");

  double worst_hom = 0.0;
  for (int k = 0; k < 6; ++k) {
    const Vec3 x0(0.0, 0.01 * k, 0.0);
    const Vec3 g(0.06, -0.02, 0.03 + 0.005 * k);
    Trajectory demo = oracle::min_jerk_demo(x0, g, 1.0 + 0.2 * k, 401);
    for (auto& s : demo.samples) s.p.y() += 0.015 * std::sin(2.0 * M_PI * s.t / demo.duration());
    const DmpModel model = fit_weights(demo, make_dmp_params(50));
    const Vec3 start(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
    const Trajectory base = rollout(model, start, start + (g - x0), demo.duration(), 1e-3);
    for (double scale : {0.1, 0.5, 3.0, 10.0}) {
      const Trajectory s = rollout(model, start, start + scale * (g - x0), demo.duration(), 1e-3);
      double err = 0.0, peak = 0.0;
      for (std::size_t i = 0; i < base.size(); ++i) {
        const Vec3 expect = scale * (base.samples[i].p - start);
        err = std::max(err, (s.samples[i].p - start - expect).norm());
        peak = std::max(peak, expect.norm());
      }
      worst_hom = std::max(worst_hom, err / peak);
    }
  }
  o.check(worst_hom < 1e-6, "amplitude homogeneity");
  o.detail << " reach " << worst_reach << ", overshoot " << worst_over << ", fit rmse " << worst_fit
           << ", homogeneity " << worst_hom << " (relative to |g-x0|)";
}

// ---- 4 perception

void criterion_perception(Outcome& o) {
  std::size_t runs = 0, non_monotone = 0;
  double worst_mean = 0.0;
  const std::vector<Vec2> sites{Vec2(150, 120), Vec2(330, 300), Vec2(480, 140)};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const KeypointSet cluttered = generate_keypoints(sites, {}, seed);
    for (std::size_t K : {2u, 3u, 4u, 5u}) {
      GmmConfig gc;
      gc.seed = seed;
      const GmmModel m = gmm_fit(cluttered, K, gc);
      const auto& h = m.log_likelihood_history;
      for (std::size_t i = 1; i < h.size(); ++i)
        if (h[i] < h[i - 1] - 1e-9 * std::abs(h[i - 1])) ++non_monotone;
      ++runs;
    }
    KeypointConfig clean;
    clean.clutter = 0;
    const KeypointSet kp = generate_keypoints(sites, clean, seed + 100);
    GmmConfig gc;
    gc.seed = seed;
    const GmmModel m = gmm_fit(kp, 3, gc);
    const auto& h = m.log_likelihood_history;
    for (std::size_t i = 1; i < h.size(); ++i)
      if (h[i] < h[i - 1] - 1e-9 * std::abs(h[i - 1])) ++non_monotone;
    ++runs;
    for (const Vec2& s : sites) {
      double best = 1e300;
      for (const Vec2& mu : m.means) best = std::min(best, (mu - s).norm());
      worst_mean = std::max(worst_mean, best);
    }
  }
  o.check(non_monotone == 0, "EM log-likelihood decreased");
  o.check(worst_mean < 2.0, "cluster mean error");

  Rng rng(404);
  double worst_rmse = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Mat3 H;
    H << rng.uniform(0.5, 2.0), rng.uniform(-0.3, 0.3), rng.uniform(-100, 100), rng.uniform(-0.3, 0.3),
        rng.uniform(0.5, 2.0), rng.uniform(-100, 100), rng.uniform(-5e-4, 5e-4), rng.uniform(-5e-4, 5e-4), 1.0;
    std::vector<Vec2> board, pixels;
    for (int i = 0; i < 4 + trial; ++i) {
      const Vec2 b(rng.uniform(0, 200), rng.uniform(0, 150));
      board.push_back(b);
      const Vec3 r = H.inverse() * Vec3(b.x(), b.y(), 1.0);
      pixels.push_back(r.head<2>() / r.z());
    }
    const PlanarTransform tf = estimate_board_homography(pixels, board);
    worst_rmse = std::max(worst_rmse, tf.reprojection_rmse);
  }
  o.check(worst_rmse < 1e-9, "homography reprojection");
  o.detail << " " << runs << " EM runs monotone, worst mean error " << worst_mean << " px, homography rmse "
           << worst_rmse << " px";
}

// ---- 5 classifier, shared with 7

struct Trained {
  EpisodeConfig cfg;
  HumanAgentConfig agent;
  std::vector<DemoTrial> demos;
  Classifier source;
};

Dataset merge(const std::vector<DemoTrial>& trials) {
  Dataset d;
  for (const auto& t : trials) {
    d.images.insert(d.images.end(), t.frames.images.begin(), t.frames.images.end());
    d.labels.insert(d.labels.end(), t.frames.labels.begin(), t.frames.labels.end());
  }
  return d;
}

double worst_gradient_error() {
  ClassifierArch a;
  a.input_size = 16;
  a.conv = {{4, 3, 2, 1}, {6, 3, 2, 1}};
  a.fc = {8};
  Classifier clf = make_classifier(a, 12);
  Rng rng(13);
  for (Eigen::Index i = 0; i < clf.params.size(); ++i) clf.params(i) += rng.uniform(-0.05, 0.05);
  std::vector<Image> imgs;
  for (int k = 0; k < 4; ++k) {
    Image im(16, 16);
    for (auto& v : im.data) v = static_cast<float>(rng.uniform(0.0, 1.0));
    imgs.push_back(im);
  }
  std::vector<const Image*> batch;
  for (const auto& im : imgs) batch.push_back(&im);
  const std::vector<int> labels{0, 1, 2, 1};
  Eigen::VectorXd grad, unused;
  loss_and_gradient(clf, batch, labels, grad);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < clf.params.size(); ++i) {
    Classifier p = clf, m = clf;
    p.params(i) += 1e-6;
    m.params(i) -= 1e-6;
    const double fd = (loss_and_gradient(p, batch, labels, unused) - loss_and_gradient(m, batch, labels, unused)) / 2e-6;
    worst = std::max(worst, std::abs(fd - grad(i)) / std::max(1e-6, std::abs(fd) + std::abs(grad(i))));
  }
  return worst;
}

void criterion_classifier(Outcome& o, Trained& t) {
  const double grad = worst_gradient_error();
  o.check(grad < 1e-4, "gradient check");

  // source domain: scripted demos until at least 1500 oracle-labelled frames
  std::size_t frames = 0;
  for (std::uint64_t i = 0; frames < 1500; ++i) {
    auto more = generate_demos(1, t.cfg, t.agent, derive_seed(7, i));
    frames += more[0].frames.size();
    t.demos.push_back(std::move(more[0]));
  }
  const Dataset source = merge(t.demos);
  TrainConfig tc;  // lr 1e-4, batch 32, patience 5, 70/30 split
  tc.seed = 11;
  ClassifierArch arch = ClassifierArch::desk();
  arch.input_size = t.cfg.sim.image_size;
  const TrainResult r = train(make_classifier(arch, 5), source, tc);
  t.source = r.clf;
  const double acc = evaluate(r.clf, source, r.val_indices).accuracy;
  o.check(acc >= 0.95, "source held-out accuracy");

  // perturbed-renderer domain, first two conv layers frozen
  DemoGenConfig g;
  g.style = RenderStyle::target();
  const Dataset target = merge(generate_demos(4, t.cfg, t.agent, 99, g));
  const double zero_shot = evaluate(r.clf, target).accuracy;
  TrainConfig fc = tc;
  fc.seed = 13;
  const TrainResult ft = finetune(r.clf, target, 2, fc);
  const double ft_acc = evaluate(ft.clf, target, ft.val_indices).accuracy;
  o.check(ft_acc >= 0.90, "fine-tuned held-out accuracy");
  bool frozen_same = true;
  const auto boundary = static_cast<Eigen::Index>(ft.clf.frozen_boundary());
  for (Eigen::Index i = 0; i < boundary; ++i) frozen_same = frozen_same && ft.clf.params(i) == r.clf.params(i);
  o.check(frozen_same, "frozen layers changed");
  o.detail << " " << t.demos.size() << " demos, " << source.size() << " frames, held-out acc " << acc << " (epoch "
           << r.best_epoch << "); target " << target.size() << " frames, zero-shot " << zero_shot << ", fine-tuned "
           << ft_acc << "; gradient rel err " << grad;
}

// ---- 6 role adaptation

void criterion_alpha(Outcome& o) {
  std::size_t checked = 0, mismatches = 0, boundary = 0;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; i + j <= 20; ++j) {
      const std::array<double, 3> p{0.05 * i, 0.05 * j, 0.05 * (20 - i - j)};
      for (int prev = 0; prev < 3; ++prev) {
        const AlphaUpdate u = compute_alpha(p, {prev, 1.0}, 0.5);
        if (u.alpha != oracle::alpha_table(p, prev, 0.5)) ++mismatches;
        if (u.delta_pc == 0.5) ++boundary;
        ++checked;
      }
    }
  // exact binary boundary cases
  const std::array<std::array<double, 3>, 3> edges{{{0.75, 0.25, 0.0}, {0.25, 0.75, 0.0}, {0.0, 0.25, 0.75}}};
  for (const auto& p : edges)
    for (int prev = 0; prev < 3; ++prev) {
      if (compute_alpha(p, {prev, 1.0}, 0.5).alpha != oracle::alpha_table(p, prev, 0.5)) ++mismatches;
      ++checked;
    }
  o.check(mismatches == 0, "compute_alpha differs from the table");
  o.detail << " " << checked << " cases, " << mismatches << " mismatches, " << boundary
           << " sweep points exactly on the margin";
}

// ---- 7 end-to-end trend

void criterion_trend(Outcome& o, const Trained& t) {
  std::vector<Trajectory> left, right;
  for (const auto& d : t.demos) {
    left.push_back(d.left);
    right.push_back(d.right);
  }
  const std::vector<RegisteredDemoSet> sets{register_demos(left), register_demos(right)};
  const PipelineConfig defaults;
  const DesiredTrajectory desired = fit_desired_trajectory(sets, defaults.gpr);
  EpisodeModels models;
  models.dmps = fit_phase_dmps(desired, sets, defaults.dmp.params(), defaults.dmp.still_tol);
  models.classifier = t.source;
  const EpisodeModels none;

  std::vector<double> Mm, Ms, Cm, Cs, Tm, Ts, Am, As;
  std::size_t shared_ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Metrics mm = compute_metrics(run_episode(RunMode::Manual, none, t.cfg, t.agent, seed));
    const EpisodeLog ls = run_episode(RunMode::Shared, models, t.cfg, t.agent, seed);
    const Metrics ms = compute_metrics(ls);
    shared_ok += ls.success ? 1 : 0;
    Mm.push_back(mm.M), Ms.push_back(ms.M);
    Cm.push_back(static_cast<double>(mm.C)), Cs.push_back(static_cast<double>(ms.C));
    Tm.push_back(mm.T), Ts.push_back(ms.T);
    Am.push_back(mm.A), As.push_back(ms.A);
  }
  const CompareResult M = stats_compare(Mm, Ms), C = stats_compare(Cm, Cs), T = stats_compare(Tm, Ts),
                      A = stats_compare(Am, As);
  const double m_drop = 1.0 - M.median_b / M.median_a;
  o.check(m_drop >= 0.30, "median M reduction below 30%");
  o.check(C.median_b < C.median_a, "median C not reduced");
  o.check(T.median_b < T.median_a, "median T not reduced");
  o.check(M.wilcoxon.p < 0.05, "Wilcoxon p for M");
  o.check(C.wilcoxon.p < 0.05, "Wilcoxon p for C");
  o.check(T.wilcoxon.p < 0.05, "Wilcoxon p for T");
  o.detail << " 20 seeds, shared success " << shared_ok << "/20; median M " << M.median_a << " -> " << M.median_b
           << " m (-" << 100.0 * m_drop << "%, p " << M.wilcoxon.p << "), C " << C.median_a << " -> " << C.median_b
           << " (p " << C.wilcoxon.p << "), T " << T.median_a << " -> " << T.median_b << " s (p " << T.wilcoxon.p
           << "), A " << A.median_a << " -> " << A.median_b << " mm/s (p " << A.wilcoxon.p << ")";
}

// ---- 8 determinism

void criterion_determinism(Outcome& o) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "lfd_acceptance_determinism";
  const auto config = pipeline::small_config(dir);
  std::array<std::map<std::string, std::string>, 2> snaps;
  for (auto& snap : snaps) {
    fs::remove_all(dir);
    for (const auto& [name, r] : pipeline::run_all(dir, config))
      if (r.code != 0) throw std::runtime_error(name + " failed: " + r.err);
    snap = pipeline::snapshot(dir);
  }
  std::size_t differing = 0, bytes = 0;
  for (const auto& [path, data] : snaps[0]) {
    bytes += data.size();
    const auto it = snaps[1].find(path);
    if (it == snaps[1].end() || it->second != data) ++differing;
  }
  if (snaps[0].size() != snaps[1].size()) ++differing;
  o.check(differing == 0, "artifacts differ between runs");
  o.check(snaps[0].size() > 40, "pipeline produced too few artifacts");
  o.detail << " every pipeline command run twice, " << snaps[0].size() << " files (" << bytes << " bytes), "
           << differing << " differing";
  fs::remove_all(dir);
}

}  // namespace

int main() {
  bool all = true;
  Trained t;
  all &= run_criterion(1, "registration", 10.0, criterion_registration);
  all &= run_criterion(2, "gpr", 10.0, criterion_gpr);
  all &= run_criterion(3, "dmp", 30.0, criterion_dmp);
  all &= run_criterion(4, "perception", 30.0, criterion_perception);
  all &= run_criterion(5, "context classifier", 600.0, [&t](Outcome& o) { criterion_classifier(o, t); });
  all &= run_criterion(6, "role adaptation", 1.0, criterion_alpha);
  all &= run_criterion(7, "shared vs manual", 300.0, [&t](Outcome& o) {
    if (t.source.params.size() == 0) throw std::runtime_error("needs the criterion 5 classifier");
    criterion_trend(o, t);
  });
  all &= run_criterion(8, "determinism", 0.0, criterion_determinism);
  std::printf("acceptance: %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : 1;
}
