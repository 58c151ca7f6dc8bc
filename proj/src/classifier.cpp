// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gradstft/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include "gradstft/fft.hpp"
#include "gradstft/sparsity.hpp"

namespace gradstft {

ClassifierParams ClassifierParams::init(int classes, int dim, std::uint64_t seed) {
  if (classes < 2 || dim < 1) throw std::invalid_argument("classifier needs 2+ classes and dim >= 1");
  ClassifierParams p;
  p.classes = classes;
  p.dim = dim;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  p.weights.resize(static_cast<std::size_t>(classes) * dim);
  for (double& w : p.weights) w = u(rng);
  p.bias.assign(static_cast<std::size_t>(classes), 0.0);
  return p;
}

void ClassifierParams::validate() const {
  if (classes < 2 || dim < 1) throw std::invalid_argument("classifier needs 2+ classes and dim >= 1");
  if (weights.size() != static_cast<std::size_t>(classes) * dim || bias.size() != static_cast<std::size_t>(classes)) {
    throw std::invalid_argument("classifier parameter shapes do not match");
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw std::invalid_argument("classifier weight is not finite");
  }
  for (double b : bias) {
    if (!std::isfinite(b)) throw std::invalid_argument("classifier bias is not finite");
  }
}

LabeledFrames label_frames(std::span<const int> sample_labels, int hop) {
  if (hop < 1) throw std::invalid_argument("hop must be positive");
  LabeledFrames f;
  for (std::size_t m = 0; m < sample_labels.size(); m += static_cast<std::size_t>(hop)) {
    f.centers.push_back(static_cast<long>(m));
    f.labels.push_back(sample_labels[m]);
  }
  return f;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("no logits");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> z(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += z[i] = std::exp(logits[i] - top);
  for (double& v : z) v /= total;
  return z;
}

std::vector<Var> softmax(std::span<const Var> logits) {
  if (logits.empty()) throw std::invalid_argument("no logits");
  double top = logits[0].value;
  for (const Var& l : logits) top = std::max(top, l.value);
  std::vector<Var> e;
  for (const Var& l : logits) e.push_back(exp(l - top));
  const Var total = sum(e);
  for (Var& v : e) v = v / total;
  return e;
}

std::vector<double> classify_frame(const Spectrum& frame, const ClassifierParams& params) {
  params.validate();
  if (frame.size() > static_cast<std::size_t>(params.dim)) {
    throw std::invalid_argument("frame has more bins than the classifier input");
  }
  std::vector<double> logits(params.bias);
  for (int c = 0; c < params.classes; ++c) {
    const double* w = params.weights.data() + static_cast<std::size_t>(c) * params.dim;
    for (std::size_t k = 0; k < frame.size(); ++k) logits[c] += w[k] * std::abs(frame[k]);
  }
  return softmax(logits);
}

Var classification_loss(const std::vector<std::vector<Var>>& predictions,
                        std::span<const int> labels, const Var& sigma, double lambda) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("one label per prediction is required");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  std::vector<Var> terms;
  for (std::size_t m = 0; m < predictions.size(); ++m) {
    const int t = labels[m];
    if (t < 0 || static_cast<std::size_t>(t) >= predictions[m].size()) {
      throw std::invalid_argument("label out of range");
    }
    const Var& z = predictions[m][static_cast<std::size_t>(t)];
    if (!(z.value > 0.0)) throw std::invalid_argument("probabilities must be positive");
    terms.push_back(-log(z));
  }
  Var loss = sum(terms);
  if (lambda > 0.0) loss = loss + lambda / sigma;
  return loss;
}

Var cross_entropy_from_logits(std::span<const Var> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw std::invalid_argument("label out of range");
  }
  double top = logits[0].value;
  for (const Var& l : logits) top = std::max(top, l.value);
  std::vector<Var> e;
  for (const Var& l : logits) e.push_back(exp(l - top));
  return log(sum(e)) + top - logits[static_cast<std::size_t>(label)];
}

VarClassifier lift(Tape& tape, const ClassifierParams& params) {
  params.validate();
  VarClassifier v;
  v.classes = params.classes;
  v.dim = params.dim;
  for (double w : params.weights) v.weights.push_back(tape.variable(w));
  for (double b : params.bias) v.bias.push_back(tape.variable(b));
  return v;
}

std::vector<Var> frame_logits(std::span<const double> segment, std::span<const Var> taps,
                              std::span<const long> phase, int bins, const Var& mass,
                              const VarClassifier& classifier) {
  const std::size_t n = segment.size();
  if (taps.size() != n || phase.size() != n) {
    throw std::invalid_argument("segment, taps and phase differ in length");
  }
  if (bins < 1 || bins > classifier.dim) throw std::invalid_argument("bins must lie in [1, dim]");
  if (!(mass.value > 0.0)) throw std::invalid_argument("window mass must be positive");

  std::vector<long> p(n);
  for (std::size_t j = 0; j < n; ++j) {
    const long r = phase[j] % bins;
    p[j] = r < 0 ? r + bins : r;
  }

  std::vector<std::complex<double>> spec(static_cast<std::size_t>(bins), 0.0);
  for (std::size_t j = 0; j < n; ++j) spec[p[j]] += segment[j] * taps[j].value;
  dft_inplace(spec);
  std::vector<double> mag(static_cast<std::size_t>(bins));
  for (int k = 0; k < bins; ++k) mag[k] = std::abs(spec[k]);

  const double inv_mass = 1.0 / mass.value;
  const std::size_t dim = static_cast<std::size_t>(classifier.dim);
  std::vector<Var> out;
  std::vector<Var> parents;
  std::vector<double> partials;
  for (int c = 0; c < classifier.classes; ++c) {
    const Var* w = classifier.weights.data() + static_cast<std::size_t>(c) * dim;
    parents.clear();
    partials.clear();

    double value = classifier.bias[c].value;
    double weighted_mag = 0.0;
    for (int k = 0; k < bins; ++k) weighted_mag += w[k].value * mag[k];
    value += weighted_mag * inv_mass;

    // d logit / d tap_j = s_j / mass · Re(Σ_k W_ck · conj(F_k) / |F_k| · e^{-iθ_kj}),
    // one forward DFT of the weighted conjugate spectrum.
    std::vector<std::complex<double>> q(static_cast<std::size_t>(bins), 0.0);
    for (int k = 0; k < bins; ++k) {
      if (mag[k] > 0.0) q[k] = w[k].value * std::conj(spec[k]) / mag[k];
    }
    dft_inplace(q);
    for (std::size_t j = 0; j < n; ++j) {
      parents.push_back(taps[j]);
      partials.push_back(segment[j] * inv_mass * q[p[j]].real());
    }
    parents.push_back(mass);
    partials.push_back(-weighted_mag * inv_mass * inv_mass);
    for (int k = 0; k < bins; ++k) {
      parents.push_back(w[k]);
      partials.push_back(mag[k] * inv_mass);
    }
    parents.push_back(classifier.bias[c]);
    partials.push_back(1.0);

    Tape* tape = nullptr;
    for (const Var& v : parents) {
      if (!v.is_constant()) {
        tape = v.tape;
        break;
      }
    }
    out.push_back(tape == nullptr ? constant(value) : tape->custom(value, parents, partials));
  }
  return out;
}

void ClassifierConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  if (!(sigma_learning_rate >= 0.0) || !(weight_learning_rate >= 0.0)) {
    throw std::invalid_argument("learning rates must be non-negative");
  }
  if (!(sigma_max_step >= 0.0)) throw std::invalid_argument("sigma max step must be non-negative");
  if (max_iters < 0) throw std::invalid_argument("max iters must be non-negative");
  if (!(hop_ratio > 0.0 && hop_ratio <= 1.0)) throw std::invalid_argument("hop ratio must lie in (0, 1]");
  if (feature_dim < kMinWindowLength) throw std::invalid_argument("feature dim must be at least 4");
  if (!(interior_margin >= 0.0 && interior_margin < 0.5)) {
    throw std::invalid_argument("interior margin must lie in [0, 0.5)");
  }
}

double classifier_sigma_ceiling(int feature_dim) {
  // ⌊6σ⌋ ≤ D  ⇔  σ < (D + 1) / 6
  // 6·σ rounds back up to D + 1 just below the bound, so step down until the
  // window really fits.
  double s = std::nextafter((feature_dim + 1) / 6.0, 0.0);
  while (effective_length(s) > feature_dim) s = std::nextafter(s, 0.0);
  return s;
}

namespace {

// For each sample: is it at least margin·(its segment length) away from the
// nearest class change?
std::vector<bool> interior_mask(std::span<const int> labels, double margin) {
  const std::size_t m = labels.size();
  std::vector<bool> mask(m, false);
  std::size_t start = 0;
  while (start < m) {
    std::size_t end = start;
    while (end < m && labels[end] == labels[start]) ++end;
    const double len = static_cast<double>(end - start);
    const bool left_edge = start > 0;
    const bool right_edge = end < m;
    for (std::size_t t = start; t < end; ++t) {
      const double dl = left_edge ? static_cast<double>(t - start) + 0.5 : len;
      const double dr = right_edge ? static_cast<double>(end - t) - 0.5 : len;
      mask[t] = std::min(dl, dr) >= margin * len;
    }
    start = end;
  }
  return mask;
}

VarClassifier constant_classifier(const ClassifierParams& p) {
  VarClassifier v;
  v.classes = p.classes;
  v.dim = p.dim;
  for (double w : p.weights) v.weights.push_back(constant(w));
  for (double b : p.bias) v.bias.push_back(constant(b));
  return v;
}

}  // namespace

JointPass joint_loss(const Signal& signal, std::span<const int> sample_labels,
                     const Var& sigma, const VarClassifier& classifier,
                     const ClassifierConfig& config) {
  config.validate();
  validate(signal);
  if (sample_labels.size() != signal.size()) {
    throw std::invalid_argument("one label per sample is required");
  }
  const int length = effective_length(sigma.value);
  if (length > classifier.dim) throw std::invalid_argument("window exceeds the classifier input");
  const int hop = std::max(1, static_cast<int>(std::lround(config.hop_ratio * length)));
  const LabeledFrames frames = label_frames(sample_labels, hop);
  const auto interior = interior_mask(sample_labels, config.interior_margin);
  const int bins = config.feature_mode == FeatureMode::dft_padded ? classifier.dim : length;

  const int half = length / 2;
  std::vector<Var> taps;
  std::vector<long> phase;
  for (int n = -half; n <= half; ++n) {
    taps.push_back(gaussian_window(sigma, n));
    phase.push_back(n);
  }
  const Var mass = sum(taps);

  std::vector<Var> ce;
  ce.reserve(frames.centers.size());
  std::vector<double> segment(taps.size());
  int scored = 0;
  int correct = 0;
  for (std::size_t f = 0; f < frames.centers.size(); ++f) {
    const long m = frames.centers[f];
    for (int n = -half; n <= half; ++n) segment[n + half] = signal.at(m + n);
    const auto logits = frame_logits(segment, taps, phase, bins, mass, classifier);
    const int label = frames.labels[f];
    ce.push_back(cross_entropy_from_logits(logits, label));
    if (interior[static_cast<std::size_t>(m)]) {
      int best = 0;
      for (int c = 1; c < classifier.classes; ++c) {
        if (logits[c].value > logits[best].value) best = c;
      }
      ++scored;
      correct += best == label;
    }
  }
  Var loss = sum(ce);
  if (config.mean_loss) loss = loss / static_cast<double>(ce.size());
  if (config.lambda > 0.0) loss = loss + config.lambda / sigma;

  JointPass pass;
  pass.loss = loss;
  pass.frames = static_cast<int>(frames.centers.size());
  pass.accuracy = scored > 0 ? static_cast<double>(correct) / scored : kNotRecorded;
  return pass;
}

JointResult train_joint(const Signal& signal, std::span<const int> sample_labels,
                        double sigma0, const ClassifierConfig& config) {
  config.validate();
  const double lo = sigma_floor();
  const double hi = classifier_sigma_ceiling(config.feature_dim);
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw std::invalid_argument("sigma0 must be positive");

  JointResult r;
  r.params = ClassifierParams::init(2, config.feature_dim, config.seed);
  int max_label = 0;
  for (int l : sample_labels) {
    if (l < 0) throw std::invalid_argument("labels must be non-negative");
    max_label = std::max(max_label, l);
  }
  if (max_label + 1 > 2) r.params = ClassifierParams::init(max_label + 1, config.feature_dim, config.seed);

  double sigma = std::clamp(sigma0, lo, hi);
  r.history.stop_reason = "max-iters";
  Tape tape;
  for (int it = 0; it <= config.max_iters; ++it) {
    tape.reset();
    const Var sv = tape.variable(sigma);
    const VarClassifier vc = lift(tape, r.params);
    const JointPass pass = joint_loss(signal, sample_labels, sv, vc, config);
    r.history.rows.push_back(
        {it, pass.loss.value, sigma, effective_length(sigma), pass.accuracy, kNotRecorded});
    if (!std::isfinite(pass.loss.value)) {
      r.history.failed = true;
      r.history.stop_reason = "loss is not finite";
      break;
    }
    if (it == config.max_iters) break;

    const Gradient g = tape.backward(pass.loss);
    double delta = -config.sigma_learning_rate * g[sv];
    if (config.sigma_max_step > 0.0) delta = std::clamp(delta, -config.sigma_max_step, config.sigma_max_step);
    const double next = std::clamp(sigma + delta, lo, hi);
    r.history.rows.back().step = next - sigma;
    sigma = next;
    for (std::size_t i = 0; i < vc.weights.size(); ++i) {
      r.params.weights[i] -= config.weight_learning_rate * g[vc.weights[i]];
    }
    for (std::size_t i = 0; i < vc.bias.size(); ++i) {
      r.params.bias[i] -= config.weight_learning_rate * g[vc.bias[i]];
    }
  }
  r.sigma = sigma;
  if (!r.history.failed && (sigma <= lo || sigma >= hi)) {
    r.history.failed = true;
    r.history.stop_reason = "sigma ended on its clamp";
  }
  return r;
}

double frame_accuracy(const Signal& signal, std::span<const int> sample_labels, double sigma,
                      const ClassifierParams& params, const ClassifierConfig& config) {
  return joint_loss(signal, sample_labels, constant(sigma), constant_classifier(params), config)
      .accuracy;
}

}  // namespace gradstft
