#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lfd {

/// Row-major grayscale image with intensities in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, float fill = 0.0f) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  [[nodiscard]] float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const Image&) const = default;
};

/// Interleaved raw frame; `channels` is 1 (gray) or 3 (RGB), values in [0, 1].
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;
};

/// Luminance conversion, area-average resize to target x target, clamp to [0, 1].
Image preprocess(const RawImage& raw, int target);

struct ConvSpec {
  int filters = 8;
  int kernel = 3;
  int stride = 2;
  int pad = 1;
};

struct ClassifierArch {
  int input_size = 64;
  std::vector<ConvSpec> conv;
  std::vector<int> fc;  // hidden widths; a final linear layer of `output` units follows
  int output = 3;

  /// 64x64 input, conv 8/16/32 (3x3, stride 2), FC 64 then 3.
  static ClassifierArch desk();
  /// 150x150 input, six conv layers and two fully connected layers.
  static ClassifierArch paper();

  [[nodiscard]] std::size_t layer_count() const { return conv.size() + fc.size() + 1; }
  [[nodiscard]] std::size_t param_count() const;
  /// Offset of the first parameter of each layer, plus the total at the end.
  [[nodiscard]] std::vector<std::size_t> layer_offsets() const;
  void validate() const;
  bool operator==(const ClassifierArch&) const;
};

struct Classifier {
  ClassifierArch arch;
  Eigen::VectorXd params;
  /// Leading layers (conv first, then fully connected) excluded from updates.
  std::size_t frozen_prefix = 0;
  std::uint64_t seed = 0;

  /// Parameters at offsets below this index never change during training.
  [[nodiscard]] std::size_t frozen_boundary() const;
};

/// Fan-in scaled uniform weights U(+-1/sqrt(fan_in)), zero biases.
Classifier make_classifier(const ClassifierArch& arch, std::uint64_t seed);

using ContextProbs = std::array<double, 3>;

ContextProbs softmax(const std::array<double, 3>& logits);
std::array<double, 3> logits(const Classifier& clf, const Image& img);
ContextProbs forward(const Classifier& clf, const Image& img);

struct ContextPrediction {
  int c = 0;
  ContextProbs probs{};
};

/// argmax with ties to the lowest index.
int argmax(const ContextProbs& p);
ContextPrediction predict_context(const Classifier& clf, const Image& img);

/// Mean cross-entropy over a batch and its gradient w.r.t. every parameter.
/// Layers inside the frozen prefix get zero gradient.
double loss_and_gradient(const Classifier& clf, std::span<const Image* const> batch, std::span<const int> labels,
                         Eigen::VectorXd& grad);

struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;

  [[nodiscard]] std::size_t size() const { return images.size(); }
};

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  double split = 0.7;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

struct EpochStats {
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  Classifier clf;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
};

/// Seeded shuffle, first round(split * n) indices train, the rest validate.
void split_indices(std::size_t n, double split, std::uint64_t seed, std::vector<std::size_t>& train,
                   std::vector<std::size_t>& val);

/// Adam on mini-batches with early stopping on validation loss. Returns the
/// best-validation parameters rounded to float32 precision.
TrainResult train(const Classifier& clf, const Dataset& data, const TrainConfig& cfg);

/// train() with the first `freeze` layers held fixed.
TrainResult finetune(const Classifier& clf, const Dataset& data, std::size_t freeze, const TrainConfig& cfg);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(const Classifier& clf, const Dataset& data, std::span<const std::size_t> indices);
Evaluation evaluate(const Classifier& clf, const Dataset& data);

/// Binary classifier file: magic, JSON header (architecture, layer offsets,
/// seed, frozen prefix), then the parameters as little-endian float32.
void write_classifier(std::ostream& os, const Classifier& clf);
Classifier read_classifier(std::istream& is);
void save_classifier(const std::string& path, const Classifier& clf);
Classifier load_classifier(const std::string& path);

}  // namespace lfd
