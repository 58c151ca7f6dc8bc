// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gradstft/dstft.hpp"
#include "gradstft/history.hpp"
#include "gradstft/tape.hpp"

namespace gradstft {

// Linear softmax classifier over magnitude features of dimension `dim`.
// weights is classes × dim, row-major.
struct ClassifierParams {
  int classes = 2;
  int dim = 128;
  std::vector<double> weights;
  std::vector<double> bias;

  // Weights uniform in [-0.01, 0.01] from a seeded mt19937_64, bias zero.
  static ClassifierParams init(int classes, int dim, std::uint64_t seed);
  void validate() const;
};

struct LabeledFrames {
  std::vector<long> centers;
  std::vector<int> labels;
};

// Frames centred at 0, hop, 2·hop, ... < M, each labelled with the class of
// the sample under its centre.
LabeledFrames label_frames(std::span<const int> sample_labels, int hop);

// How a frame of N bins becomes a feature vector of dimension D.
enum class FeatureMode {
  // The windowed segment is transformed with a D-point DFT, so bin k always
  // means frequency k/D whatever N is.
  dft_padded,
  // The N-point DFT magnitudes are zero-padded to D entries.
  feature_padded,
};

std::vector<double> softmax(std::span<const double> logits);
std::vector<Var> softmax(std::span<const Var> logits);

// Magnitudes of `frame`, zero-padded to params.dim, through the classifier.
// Throws std::invalid_argument if the frame has more than params.dim bins.
std::vector<double> classify_frame(const Spectrum& frame, const ClassifierParams& params);

// −Σ_m log z_{t[m]}[m] + λ/σ. Throws std::invalid_argument on shape mismatch
// or a non-positive probability.
Var classification_loss(const std::vector<std::vector<Var>>& predictions,
                        std::span<const int> labels, const Var& sigma, double lambda);

// Cross-entropy of one frame computed from logits with a log-sum-exp shift.
Var cross_entropy_from_logits(std::span<const Var> logits, int label);

struct VarClassifier {
  int classes = 0;
  int dim = 0;
  std::vector<Var> weights;
  std::vector<Var> bias;
};
VarClassifier lift(Tape& tape, const ClassifierParams& params);

// Logits of one frame: features |F_k| / mass over `bins` DFT bins (zero-padded
// to dim in feature_padded mode), then W·feature + b. Each logit is one tape
// node with the window taps, the mass, the weight row and the bias as parents.
std::vector<Var> frame_logits(std::span<const double> segment, std::span<const Var> taps,
                              std::span<const long> phase, int bins, const Var& mass,
                              const VarClassifier& classifier);

struct ClassifierConfig {
  double lambda = 0.1;
  double sigma_learning_rate = 0.05;
  double weight_learning_rate = 0.05;
  // Largest change of sigma in one iteration; 0 disables the cap. The first
  // steps from untrained weights carry a summed cross-entropy gradient large
  // enough to throw sigma onto its ceiling.
  double sigma_max_step = 0.25;
  int max_iters = 3000;
  double hop_ratio = 0.05;
  int feature_dim = 128;
  FeatureMode feature_mode = FeatureMode::dft_padded;
  bool mean_loss = false;  // average instead of sum the frame cross-entropies
  std::uint64_t seed = 1;
  // Frames whose centre is closer than this fraction of a segment to a class
  // change are left out of the accuracy.
  double interior_margin = 0.25;

  void validate() const;
};

struct JointResult {
  double sigma = 0.0;
  ClassifierParams params;
  TrainHistory history;
};

// Largest σ whose window still fits in feature_dim bins.
double classifier_sigma_ceiling(int feature_dim);

// Loss of one pass at the given σ and parameters, as a tape expression.
struct JointPass {
  Var loss;
  double accuracy = 0.0;
  int frames = 0;
};
JointPass joint_loss(const Signal& signal, std::span<const int> sample_labels,
                     const Var& sigma, const VarClassifier& classifier,
                     const ClassifierConfig& config);

// Simultaneous gradient descent on σ, weights and bias. σ is clamped to
// [sigma_floor(), classifier_sigma_ceiling()]; a run that ends on a clamp or
// with a non-finite loss is flagged failed.
JointResult train_joint(const Signal& signal, std::span<const int> sample_labels,
                        double sigma0, const ClassifierConfig& config);

// Interior accuracy of fixed parameters at σ.
double frame_accuracy(const Signal& signal, std::span<const int> sample_labels, double sigma,
                      const ClassifierParams& params, const ClassifierConfig& config);

}  // namespace gradstft
