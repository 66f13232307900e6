#include "lfd/context.hpp"

#include "lfd/errors.hpp"
#include "lfd/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace lfd {

namespace {

// Overlap of output cell i (width `scale` in input units) with input cell j.
Eigen::MatrixXd area_weights(int in, int out) {
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(out, in);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    const double lo = i * scale;
    const double hi = (i + 1) * scale;
    for (int j = static_cast<int>(std::floor(lo)); j < in && j < hi; ++j) {
      const double ov = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
      if (ov > 0.0) R(i, j) = ov / scale;
    }
  }
  return R;
}

}  // namespace

Image preprocess(const RawImage& raw, int target) {
  if (raw.width <= 0 || raw.height <= 0 || target <= 0) throw InvalidArgument("preprocess: zero-sized image");
  if (raw.channels != 1 && raw.channels != 3) throw InvalidArgument("preprocess: channels must be 1 or 3");
  if (raw.data.size() != static_cast<std::size_t>(raw.width) * raw.height * raw.channels)
    throw SizeMismatchError("preprocess: data size does not match dimensions");

  Eigen::MatrixXd gray(raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const std::size_t base = (static_cast<std::size_t>(y) * raw.width + x) * raw.channels;
      gray(y, x) = raw.channels == 1 ? raw.data[base]
                                     : 0.299 * raw.data[base] + 0.587 * raw.data[base + 1] + 0.114 * raw.data[base + 2];
    }
  }
  const Eigen::MatrixXd out = area_weights(raw.height, target) * gray * area_weights(raw.width, target).transpose();
  Image img(target, target);
  for (int y = 0; y < target; ++y)
    for (int x = 0; x < target; ++x) img.at(x, y) = static_cast<float>(std::clamp(out(y, x), 0.0, 1.0));
  return img;
}

ClassifierArch ClassifierArch::desk() {
  ClassifierArch a;
  a.input_size = 64;
  a.conv = {{8, 3, 2, 1}, {16, 3, 2, 1}, {32, 3, 2, 1}};
  a.fc = {64};
  return a;
}

ClassifierArch ClassifierArch::paper() {
  ClassifierArch a;
  a.input_size = 150;
  a.conv = {{16, 3, 1, 1}, {16, 3, 2, 1}, {32, 3, 1, 1}, {32, 3, 2, 1}, {64, 3, 1, 1}, {64, 3, 2, 1}};
  a.fc = {128};
  return a;
}

bool ClassifierArch::operator==(const ClassifierArch& o) const {
  if (input_size != o.input_size || fc != o.fc || output != o.output || conv.size() != o.conv.size()) return false;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const auto& a = conv[i];
    const auto& b = o.conv[i];
    if (a.filters != b.filters || a.kernel != b.kernel || a.stride != b.stride || a.pad != b.pad) return false;
  }
  return true;
}

namespace {

struct ConvGeom {
  int C, H, W;   // input
  int F, k, s, p;
  int Ho, Wo;
  std::size_t w_off, b_off;
};

struct FcGeom {
  int in, out;
  std::size_t w_off, b_off;
  bool relu;
};

struct Geometry {
  std::vector<ConvGeom> conv;
  std::vector<FcGeom> fc;
  std::vector<std::size_t> layer_offsets;
  std::size_t total = 0;
};

Geometry geometry(const ClassifierArch& a) {
  Geometry g;
  int C = 1, H = a.input_size, W = a.input_size;
  std::size_t off = 0;
  for (const auto& spec : a.conv) {
    ConvGeom c{C, H, W, spec.filters, spec.kernel, spec.stride, spec.pad, 0, 0, 0, 0};
    c.Ho = (H + 2 * spec.pad - spec.kernel) / spec.stride + 1;
    c.Wo = (W + 2 * spec.pad - spec.kernel) / spec.stride + 1;
    if (c.Ho <= 0 || c.Wo <= 0) throw InvalidArgument("ClassifierArch: convolution shrinks the map to nothing");
    g.layer_offsets.push_back(off);
    c.w_off = off;
    off += static_cast<std::size_t>(c.F) * C * c.k * c.k;
    c.b_off = off;
    off += static_cast<std::size_t>(c.F);
    g.conv.push_back(c);
    C = c.F;
    H = c.Ho;
    W = c.Wo;
  }
  int in = C * H * W;
  for (std::size_t i = 0; i <= a.fc.size(); ++i) {
    const bool last = i == a.fc.size();
    FcGeom f{in, last ? a.output : a.fc[i], 0, 0, !last};
    g.layer_offsets.push_back(off);
    f.w_off = off;
    off += static_cast<std::size_t>(f.in) * f.out;
    f.b_off = off;
    off += static_cast<std::size_t>(f.out);
    g.fc.push_back(f);
    in = f.out;
  }
  g.total = off;
  g.layer_offsets.push_back(off);
  return g;
}

}  // namespace

void ClassifierArch::validate() const {
  if (input_size <= 0) throw InvalidArgument("ClassifierArch: input_size must be > 0");
  if (output != 3) throw InvalidArgument("ClassifierArch: output width must be 3");
  for (const auto& c : conv)
    if (c.filters <= 0 || c.kernel <= 0 || c.stride <= 0 || c.pad < 0)
      throw InvalidArgument("ClassifierArch: invalid convolution layer");
  for (int w : fc)
    if (w <= 0) throw InvalidArgument("ClassifierArch: fully connected widths must be > 0");
  (void)geometry(*this);
}

std::size_t ClassifierArch::param_count() const { return geometry(*this).total; }
std::vector<std::size_t> ClassifierArch::layer_offsets() const { return geometry(*this).layer_offsets; }

std::size_t Classifier::frozen_boundary() const {
  const auto offs = arch.layer_offsets();
  return offs[std::min(frozen_prefix, offs.size() - 1)];
}

Classifier make_classifier(const ClassifierArch& arch, std::uint64_t seed) {
  arch.validate();
  const Geometry g = geometry(arch);
  Classifier clf;
  clf.arch = arch;
  clf.seed = seed;
  clf.params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.total));
  Rng rng(seed);
  auto fill = [&](std::size_t off, std::size_t n, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    for (std::size_t i = 0; i < n; ++i) clf.params(static_cast<Eigen::Index>(off + i)) = rng.uniform(-bound, bound);
  };
  for (const auto& c : g.conv) fill(c.w_off, c.b_off - c.w_off, static_cast<double>(c.C * c.k * c.k));
  for (const auto& f : g.fc) fill(f.w_off, f.b_off - f.w_off, static_cast<double>(f.in));
  // Stored at float precision so the saved file reproduces the model exactly.
  clf.params = clf.params.cast<float>().cast<double>();
  return clf;
}

namespace {

using MapM = Eigen::Map<const Eigen::MatrixXd>;
using MapV = Eigen::Map<const Eigen::VectorXd>;

// Activation layout: C x (B * H * W), column index b * H * W + y * W + x.
void im2col(const Eigen::MatrixXd& act, const ConvGeom& g, int B, Eigen::MatrixXd& cols) {
  const int HW = g.H * g.W;
  const int HoWo = g.Ho * g.Wo;
  cols.resize(static_cast<Eigen::Index>(g.C) * g.k * g.k, static_cast<Eigen::Index>(B) * HoWo);
  const double* src = act.data();
  for (int b = 0; b < B; ++b) {
    for (int oy = 0; oy < g.Ho; ++oy) {
      for (int ox = 0; ox < g.Wo; ++ox) {
        double* dst = cols.col(static_cast<Eigen::Index>(b) * HoWo + oy * g.Wo + ox).data();
        for (int c = 0; c < g.C; ++c) {
          for (int ky = 0; ky < g.k; ++ky) {
            const int iy = oy * g.s - g.p + ky;
            for (int kx = 0; kx < g.k; ++kx) {
              const int ix = ox * g.s - g.p + kx;
              if (iy < 0 || iy >= g.H || ix < 0 || ix >= g.W) {
                *dst++ = 0.0;
              } else {
                const std::size_t col = static_cast<std::size_t>(b) * HW + static_cast<std::size_t>(iy) * g.W + ix;
                *dst++ = src[c + static_cast<std::size_t>(g.C) * col];
              }
            }
          }
        }
      }
    }
  }
}

void col2im(const Eigen::MatrixXd& dcols, const ConvGeom& g, int B, Eigen::MatrixXd& dact) {
  const int HW = g.H * g.W;
  const int HoWo = g.Ho * g.Wo;
  dact = Eigen::MatrixXd::Zero(g.C, static_cast<Eigen::Index>(B) * HW);
  double* dst = dact.data();
  for (int b = 0; b < B; ++b) {
    for (int oy = 0; oy < g.Ho; ++oy) {
      for (int ox = 0; ox < g.Wo; ++ox) {
        const double* src = dcols.col(static_cast<Eigen::Index>(b) * HoWo + oy * g.Wo + ox).data();
        for (int c = 0; c < g.C; ++c) {
          for (int ky = 0; ky < g.k; ++ky) {
            const int iy = oy * g.s - g.p + ky;
            for (int kx = 0; kx < g.k; ++kx, ++src) {
              const int ix = ox * g.s - g.p + kx;
              if (iy < 0 || iy >= g.H || ix < 0 || ix >= g.W) continue;
              const std::size_t col = static_cast<std::size_t>(b) * HW + static_cast<std::size_t>(iy) * g.W + ix;
              dst[c + static_cast<std::size_t>(g.C) * col] += *src;
            }
          }
        }
      }
    }
  }
}

struct Cache {
  std::vector<Eigen::MatrixXd> cols;      // per conv layer
  std::vector<Eigen::MatrixXd> conv_act;  // post-ReLU, per conv layer
  std::vector<Eigen::MatrixXd> fc_in;     // input to each fc layer (in x B)
  std::vector<Eigen::MatrixXd> fc_act;    // output of each fc layer (post-ReLU for hidden)
};

Eigen::MatrixXd forward_batch(const Classifier& clf, const Geometry& g, std::span<const Image* const> batch,
                              Cache* cache) {
  const int B = static_cast<int>(batch.size());
  const int n = clf.arch.input_size;
  for (const Image* img : batch)
    if (img->width != n || img->height != n) throw SizeMismatchError("classifier: image size does not match input_size");

  Eigen::MatrixXd act(1, static_cast<Eigen::Index>(B) * n * n);
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < n * n; ++i)
      act(0, static_cast<Eigen::Index>(b) * n * n + i) = static_cast<double>(batch[static_cast<std::size_t>(b)]->data[static_cast<std::size_t>(i)]);

  const double* P = clf.params.data();
  Eigen::MatrixXd cols;
  for (const auto& c : g.conv) {
    im2col(act, c, B, cols);
    const MapM Wt(P + c.w_off, c.F, static_cast<Eigen::Index>(c.C) * c.k * c.k);
    const MapV bias(P + c.b_off, c.F);
    Eigen::MatrixXd z = Wt * cols;
    z.colwise() += bias;
    act = z.cwiseMax(0.0);
    if (cache) {
      cache->cols.push_back(cols);
      cache->conv_act.push_back(act);
    }
  }

  Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(act.data(), act.size() / B, B);
  for (const auto& f : g.fc) {
    const MapM Wt(P + f.w_off, f.out, f.in);
    const MapV bias(P + f.b_off, f.out);
    Eigen::MatrixXd z = Wt * x;
    z.colwise() += bias;
    if (f.relu) z = z.cwiseMax(0.0);
    if (cache) {
      cache->fc_in.push_back(x);
      cache->fc_act.push_back(z);
    }
    x = std::move(z);
  }
  return x;  // logits, 3 x B
}

Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& L) {
  Eigen::MatrixXd P(L.rows(), L.cols());
  for (Eigen::Index j = 0; j < L.cols(); ++j) {
    const double mx = L.col(j).maxCoeff();
    P.col(j) = (L.col(j).array() - mx).exp();
    P.col(j) /= P.col(j).sum();
  }
  return P;
}

double batch_loss(const Eigen::MatrixXd& logits, std::span<const int> labels) {
  double loss = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    const double lse = mx + std::log((logits.col(j).array() - mx).exp().sum());
    loss += lse - logits(labels[static_cast<std::size_t>(j)], j);
  }
  return loss;
}

}  // namespace

ContextProbs softmax(const std::array<double, 3>& l) {
  const double mx = std::max({l[0], l[1], l[2]});
  ContextProbs p{std::exp(l[0] - mx), std::exp(l[1] - mx), std::exp(l[2] - mx)};
  const double s = p[0] + p[1] + p[2];
  for (double& v : p) v /= s;
  return p;
}

std::array<double, 3> logits(const Classifier& clf, const Image& img) {
  const Image* ptr = &img;
  const Eigen::MatrixXd L = forward_batch(clf, geometry(clf.arch), std::span<const Image* const>(&ptr, 1), nullptr);
  return {L(0, 0), L(1, 0), L(2, 0)};
}

ContextProbs forward(const Classifier& clf, const Image& img) { return softmax(logits(clf, img)); }

int argmax(const ContextProbs& p) {
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(best)]) best = i;
  return best;
}

ContextPrediction predict_context(const Classifier& clf, const Image& img) {
  ContextPrediction out;
  out.probs = forward(clf, img);
  out.c = argmax(out.probs);
  return out;
}

double loss_and_gradient(const Classifier& clf, std::span<const Image* const> batch, std::span<const int> labels,
                         Eigen::VectorXd& grad) {
  if (batch.empty()) throw InvalidArgument("loss_and_gradient: empty batch");
  if (batch.size() != labels.size()) throw SizeMismatchError("loss_and_gradient: batch/labels size mismatch");
  for (int l : labels)
    if (l < 0 || l > 2) throw InvalidArgument("loss_and_gradient: label out of range");

  const Geometry g = geometry(clf.arch);
  const int B = static_cast<int>(batch.size());
  Cache cache;
  const Eigen::MatrixXd L = forward_batch(clf, g, batch, &cache);
  grad = Eigen::VectorXd::Zero(clf.params.size());

  Eigen::MatrixXd dz = softmax_cols(L);
  for (int j = 0; j < B; ++j) dz(labels[static_cast<std::size_t>(j)], j) -= 1.0;
  dz /= static_cast<double>(B);

  const std::size_t nconv = g.conv.size();
  const std::size_t frozen = clf.frozen_prefix;
  const double* P = clf.params.data();
  double* G = grad.data();

  for (std::size_t li = g.fc.size(); li-- > 0;) {
    const std::size_t layer = nconv + li;
    if (layer < frozen) return batch_loss(L, labels) / B;
    const auto& f = g.fc[li];
    Eigen::Map<Eigen::MatrixXd>(G + f.w_off, f.out, f.in) = dz * cache.fc_in[li].transpose();
    Eigen::Map<Eigen::VectorXd>(G + f.b_off, f.out) = dz.rowwise().sum();
    if (layer == frozen || layer == 0) return batch_loss(L, labels) / B;
    Eigen::MatrixXd dx = MapM(P + f.w_off, f.out, f.in).transpose() * dz;
    if (li > 0) {
      dz = dx.cwiseProduct((cache.fc_act[li - 1].array() > 0.0).cast<double>().matrix());
    } else {
      const Eigen::MatrixXd& act = cache.conv_act.back();
      dz = Eigen::Map<const Eigen::MatrixXd>(dx.data(), act.rows(), act.cols())
               .cwiseProduct((act.array() > 0.0).cast<double>().matrix());
    }
  }

  for (std::size_t li = nconv; li-- > 0;) {
    if (li < frozen) break;
    const auto& c = g.conv[li];
    const Eigen::Index kk = static_cast<Eigen::Index>(c.C) * c.k * c.k;
    Eigen::Map<Eigen::MatrixXd>(G + c.w_off, c.F, kk) = dz * cache.cols[li].transpose();
    Eigen::Map<Eigen::VectorXd>(G + c.b_off, c.F) = dz.rowwise().sum();
    if (li == frozen || li == 0) break;
    const Eigen::MatrixXd dcols = MapM(P + c.w_off, c.F, kk).transpose() * dz;
    Eigen::MatrixXd dact;
    col2im(dcols, c, B, dact);
    dz = dact.cwiseProduct((cache.conv_act[li - 1].array() > 0.0).cast<double>().matrix());
  }
  return batch_loss(L, labels) / B;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw InvalidArgument("TrainConfig: lr must be > 0");
  if (!(split > 0.0 && split < 1.0)) throw InvalidArgument("TrainConfig: split must be in (0, 1)");
  if (batch == 0) throw InvalidArgument("TrainConfig: batch must be >= 1");
  if (max_epochs == 0) throw InvalidArgument("TrainConfig: max_epochs must be >= 1");
}

void split_indices(std::size_t n, double split, std::uint64_t seed, std::vector<std::size_t>& train,
                   std::vector<std::size_t>& val) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  auto n_train = static_cast<std::size_t>(std::llround(split * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n > 1 ? n - 1 : 1);
  train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
}

Evaluation evaluate(const Classifier& clf, const Dataset& data, std::span<const std::size_t> indices) {
  Evaluation ev;
  if (indices.empty()) return ev;
  const Geometry g = geometry(clf.arch);
  constexpr std::size_t chunk = 64;
  std::size_t correct = 0;
  double loss = 0.0;
  std::vector<const Image*> imgs;
  std::vector<int> labels;
  for (std::size_t start = 0; start < indices.size(); start += chunk) {
    imgs.clear();
    labels.clear();
    for (std::size_t i = start; i < std::min(indices.size(), start + chunk); ++i) {
      imgs.push_back(&data.images[indices[i]]);
      labels.push_back(data.labels[indices[i]]);
    }
    const Eigen::MatrixXd L = forward_batch(clf, g, imgs, nullptr);
    loss += batch_loss(L, labels);
    for (Eigen::Index j = 0; j < L.cols(); ++j) {
      const ContextProbs p{L(0, j), L(1, j), L(2, j)};
      if (argmax(p) == labels[static_cast<std::size_t>(j)]) ++correct;
    }
  }
  ev.loss = loss / static_cast<double>(indices.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
  return ev;
}

Evaluation evaluate(const Classifier& clf, const Dataset& data) {
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return evaluate(clf, data, all);
}

namespace {

void round_to_float(Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = static_cast<double>(static_cast<float>(v(i)));
}

}  // namespace

TrainResult train(const Classifier& clf, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  clf.arch.validate();
  if (data.size() == 0) throw InsufficientDataError("train: empty dataset");
  if (data.labels.size() != data.images.size()) throw SizeMismatchError("train: images/labels size mismatch");
  if (data.size() < 10) throw InsufficientDataError("train: need at least 10 samples");
  std::array<bool, 3> seen{false, false, false};
  for (int l : data.labels) {
    if (l < 0 || l > 2) throw InvalidArgument("train: label out of range");
    seen[static_cast<std::size_t>(l)] = true;
  }
  if (!seen[0] || !seen[1] || !seen[2]) throw InsufficientDataError("train: every context label must be present");
  if (clf.frozen_prefix > clf.arch.layer_count()) throw InvalidArgument("train: frozen_prefix exceeds layer count");

  TrainResult res;
  split_indices(data.size(), cfg.split, cfg.seed, res.train_indices, res.val_indices);

  Classifier work = clf;
  const std::size_t boundary = work.frozen_boundary();
  const auto np = work.params.size();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(np);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(np);
  Eigen::VectorXd grad;
  Eigen::VectorXd best = work.params;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t bad = 0;
  std::uint64_t step = 0;

  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order = res.train_indices;
  std::vector<const Image*> imgs;
  std::vector<int> labels;
  const auto b0 = static_cast<Eigen::Index>(boundary);
  const Eigen::Index nfree = np - b0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      imgs.clear();
      labels.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch); ++i) {
        imgs.push_back(&data.images[order[i]]);
        labels.push_back(data.labels[order[i]]);
      }
      if (nfree == 0) {
        const Eigen::MatrixXd L = forward_batch(work, geometry(work.arch), imgs, nullptr);
        loss_sum += batch_loss(L, labels);
        for (Eigen::Index j = 0; j < L.cols(); ++j)
          if (argmax({L(0, j), L(1, j), L(2, j)}) == labels[static_cast<std::size_t>(j)]) ++correct;
        continue;
      }
      loss_sum += loss_and_gradient(work, imgs, labels, grad) * static_cast<double>(imgs.size());
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      auto g = grad.tail(nfree).array();
      auto mm = m.tail(nfree).array();
      auto vv = v.tail(nfree).array();
      mm = cfg.beta1 * mm + (1.0 - cfg.beta1) * g;
      vv = cfg.beta2 * vv + (1.0 - cfg.beta2) * g.square();
      work.params.tail(nfree).array() -= cfg.lr * (mm / bc1) / ((vv / bc2).sqrt() + cfg.eps);
    }
    EpochStats st;
    st.train_loss = loss_sum / static_cast<double>(order.size());
    if (nfree > 0) {
      st.train_acc = evaluate(work, data, res.train_indices).accuracy;
    } else {
      st.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
    }
    const Evaluation val = evaluate(work, data, res.val_indices);
    st.val_loss = val.loss;
    st.val_acc = val.accuracy;
    res.history.push_back(st);

    if (st.val_loss < best_val) {
      best_val = st.val_loss;
      best = work.params;
      res.best_epoch = epoch;
      bad = 0;
    } else if (++bad >= cfg.patience) {
      break;
    }
  }

  res.clf = work;
  // Frozen parameters are copied back untouched; only the trainable tail is rounded.
  res.clf.params.tail(nfree) = best.tail(nfree);
  Eigen::VectorXd tail = res.clf.params.tail(nfree);
  round_to_float(tail);
  res.clf.params.tail(nfree) = tail;
  return res;
}

TrainResult finetune(const Classifier& clf, const Dataset& data, std::size_t freeze, const TrainConfig& cfg) {
  Classifier c = clf;
  c.frozen_prefix = freeze;
  return train(c, data, cfg);
}

namespace {

constexpr char kMagic[8] = {'L', 'F', 'D', 'C', 'L', 'F', '0', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError("classifier file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_classifier(std::ostream& os, const Classifier& clf) {
  nlohmann::json h;
  h["type"] = "context_classifier";
  h["version"] = 1;
  h["input_size"] = clf.arch.input_size;
  h["output"] = clf.arch.output;
  nlohmann::json conv = nlohmann::json::array();
  for (const auto& c : clf.arch.conv)
    conv.push_back({{"filters", c.filters}, {"kernel", c.kernel}, {"stride", c.stride}, {"pad", c.pad}});
  h["conv"] = conv;
  h["fc"] = clf.arch.fc;
  h["layer_offsets"] = clf.arch.layer_offsets();
  h["param_count"] = static_cast<std::size_t>(clf.params.size());
  h["seed"] = clf.seed;
  h["frozen_prefix"] = clf.frozen_prefix;
  h["dtype"] = "float32_le";
  const std::string text = h.dump();

  os.write(kMagic, sizeof kMagic);
  put_u32(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (Eigen::Index i = 0; i < clf.params.size(); ++i) {
    const auto f = static_cast<float>(clf.params(i));
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(os, bits);
  }
  if (!os) throw FormatError("failed to write classifier");
}

Classifier read_classifier(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw FormatError("not a classifier file");
  const std::uint32_t len = get_u32(is);
  std::string text(len, '\0');
  if (!is.read(text.data(), len)) throw FormatError("classifier header truncated");
  Classifier clf;
  try {
    const auto h = nlohmann::json::parse(text);
    if (h.at("type") != "context_classifier") throw FormatError("unexpected model type");
    clf.arch.input_size = h.at("input_size").get<int>();
    clf.arch.output = h.at("output").get<int>();
    for (const auto& c : h.at("conv"))
      clf.arch.conv.push_back({c.at("filters").get<int>(), c.at("kernel").get<int>(), c.at("stride").get<int>(),
                               c.at("pad").get<int>()});
    clf.arch.fc = h.at("fc").get<std::vector<int>>();
    clf.seed = h.at("seed").get<std::uint64_t>();
    clf.frozen_prefix = h.at("frozen_prefix").get<std::size_t>();
    clf.arch.validate();
    if (h.at("param_count").get<std::size_t>() != clf.arch.param_count())
      throw FormatError("classifier parameter count does not match architecture");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("classifier header: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("classifier header: ") + e.what());
  }
  const std::size_t n = clf.arch.param_count();
  clf.params.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = get_u32(is);
    float f;
    std::memcpy(&f, &bits, 4);
    if (!std::isfinite(f)) throw FormatError("classifier parameter is not finite");
    clf.params(static_cast<Eigen::Index>(i)) = f;
  }
  return clf;
}

void save_classifier(const std::string& path, const Classifier& clf) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  write_classifier(os, clf);
}

Classifier load_classifier(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingModelError("cannot open classifier " + path);
  return read_classifier(is);
}

}  // namespace lfd
