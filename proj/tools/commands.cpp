// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <numbers>

#include <json.hpp>

#include "gradstft/adaptive.hpp"
#include "gradstft/classifier.hpp"
#include "gradstft/signals_io.hpp"
#include "gradstft/sparsity.hpp"

namespace gradstft::cli {

namespace {

using nlohmann::ordered_json;

struct LoadedSignal {
  LabeledSignal data;
  std::string kind;
};

CliError config_failure(const std::string& message) { return CliError("config", message, kExitConfig); }

// Runs a library call and reports std::invalid_argument as a config error,
// since every argument it sees comes from the config.
template <class F>
auto checked(const char* what, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw config_failure(std::string(what) + ": " + e.what());
  }
}

std::filesystem::path resolve(const RunOptions& options, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : options.config_dir / path;
}

LoadedSignal load_signal(const RunConfig& cfg, const RunOptions& options, std::uint64_t seed,
                         const std::string& default_kind) {
  LoadedSignal out;
  out.kind = cfg.get_string("signal", "kind", default_kind);
  const double rate = cfg.get_double("signal", "sample_rate", 1.0);
  const std::string& k = out.kind;
  if (k == "sine") {
    const int length = cfg.get_int("signal", "length", 1024);
    const double f = cfg.get_double("signal", "frequency", 64.0 / 1024.0);
    const double amp = cfg.get_double("signal", "amplitude", 1.0);
    if (length < 1) throw config_failure("signal.length must be positive");
    if (!(f > 0.0 && f < 0.5)) throw config_failure("signal.frequency must lie in (0, 0.5) cycles/sample");
    std::vector<double> x(static_cast<std::size_t>(length));
    for (std::size_t t = 0; t < x.size(); ++t) {
      x[t] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t));
    }
    out.data.signal = checked("signal", [&] { return make_signal(std::move(x)); });
  } else if (k == "alternating_sines") {
    const double f1 = cfg.get_double("signal", "f1", 0.2);
    const double f2 = cfg.get_double("signal", "f2", 0.2225);
    const int len = cfg.get_int("signal", "segment_length", 40);
    const int segs = cfg.get_int("signal", "segments", 16);
    out.data = checked("signal", [&] { return gen_alternating_sines(f1, f2, len, segs); });
  } else if (k == "chirp_sine") {
    const double lo = cfg.get_double("signal", "f_lo", 0.02);
    const double hi = cfg.get_double("signal", "f_hi", 0.2);
    const double fs = cfg.get_double("signal", "sine_frequency", 0.05);
    const int len = cfg.get_int("signal", "segment_length", 2048);
    const int segs = cfg.get_int("signal", "segments", 6);
    out.data = checked("signal", [&] { return gen_chirp_sine(lo, hi, fs, len, segs); });
  } else if (k == "exp_chirp") {
    const double f0 = cfg.get_double("signal", "f0", 0.01);
    const double f1 = cfg.get_double("signal", "f1", 0.25);
    const int length = cfg.get_int("signal", "length", 16384);
    out.data.signal = checked("signal", [&] { return gen_exp_chirp(f0, f1, length); });
  } else if (k == "wav") {
    if (!cfg.has("signal", "path")) throw config_failure("signal.path is required for a wav signal");
    const auto path = resolve(options, cfg.get_string("signal", "path", ""));
    try {
      out.data.signal = load_wav(path);
    } catch (const std::exception& e) {
      throw CliError("input", path.string() + ": " + e.what(), kExitInput);
    }
  } else {
    throw config_failure("unknown signal.kind '" + k +
                         "' (sine, alternating_sines, chirp_sine, exp_chirp, wav)");
  }
  if (k != "wav") out.data.signal.sample_rate = rate;
  if (!(out.data.signal.sample_rate > 0.0)) throw config_failure("signal.sample_rate must be positive");

  const double noise = cfg.get_double("signal", "noise", 0.0);
  if (noise < 0.0) throw config_failure("signal.noise must be non-negative");
  if (noise > 0.0) add_white_noise(out.data.signal, noise, seed);
  return out;
}

ordered_json signal_summary(const LoadedSignal& s) {
  ordered_json j;
  j["kind"] = s.kind;
  j["length"] = s.data.signal.size();
  j["sample_rate"] = s.data.signal.sample_rate;
  return j;
}

std::string json_text(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string csv_number(double v) { return std::isnan(v) ? "" : format_double(v); }

std::uint64_t run_seed(const RunConfig& cfg, const RunOptions& options) {
  const std::uint64_t from_config = cfg.get_u64("run", "seed", 1);
  return options.seed.value_or(from_config);
}

std::vector<OutputFile> cmd_sparsity(const RunConfig& cfg, const RunOptions& options) {
  const std::uint64_t seed = run_seed(cfg, options);
  const LoadedSignal sig = load_signal(cfg, options, seed, "sine");
  const std::vector<double> starts = cfg.get_doubles("sparsity", "sigma0", {5.0, 25.0});
  SigmaSearchOptions opt;
  opt.learning_rate = cfg.get_double("sparsity", "learning_rate", 100.0);
  opt.max_iters = cfg.get_int("sparsity", "max_iters", 300);
  opt.tolerance = cfg.get_double("sparsity", "tolerance", opt.tolerance);
  opt.patience = cfg.get_int("sparsity", "patience", opt.patience);
  opt.max_halvings = cfg.get_int("sparsity", "max_halvings", opt.max_halvings);
  cfg.reject_unused();
  if (opt.max_iters < 0 || opt.patience < 1 || opt.max_halvings < 0 || !(opt.learning_rate > 0.0)) {
    throw config_failure("sparsity optimizer settings out of range");
  }

  std::string history = "start,sigma0,iteration,sigma,length,loss,step\n";
  ordered_json runs = ordered_json::array();
  std::size_t best = 0;
  std::vector<SigmaSearchResult> results;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    results.push_back(checked("sparsity", [&] { return optimize_sigma(sig.data.signal, starts[s], opt); }));
    const SigmaSearchResult& r = results.back();
    for (const HistoryRow& row : r.history.rows) {
      history += std::to_string(s) + ',' + format_double(starts[s]) + ',' + std::to_string(row.iteration) +
                 ',' + csv_number(row.sigma) + ',' + std::to_string(row.length) + ',' +
                 csv_number(row.loss) + ',' + csv_number(row.step) + '\n';
    }
    ordered_json j;
    j["sigma0"] = starts[s];
    j["sigma"] = r.sigma;
    j["N"] = effective_length(r.sigma);
    j["loss"] = r.loss;
    j["iterations"] = r.history.rows.empty() ? 0 : r.history.last().iteration;
    j["stop_reason"] = r.history.stop_reason;
    j["failed"] = r.history.failed;
    runs.push_back(j);
    if (r.loss > results[best].loss) best = s;
  }

  const double sigma_before = starts.front();
  const double sigma_after = results[best].sigma;
  const auto pgm_at = [&](double sigma) {
    return spectrogram_pgm(stft(sig.data.signal, GaussianStftConfig{sigma, 0.5, 3.0}));
  };

  ordered_json summary;
  summary["command"] = "sparsity";
  summary["seed"] = seed;
  summary["signal"] = signal_summary(sig);
  summary["runs"] = runs;
  summary["best_run"] = best;
  summary["spectrogram_before_sigma"] = sigma_before;
  summary["spectrogram_after_sigma"] = sigma_after;
  return {{"history.csv", history},
          {"spectrogram_before.pgm", pgm_at(sigma_before)},
          {"spectrogram_after.pgm", pgm_at(sigma_after)},
          {"summary.json", json_text(summary)}};
}

std::vector<OutputFile> cmd_classify(const RunConfig& cfg, const RunOptions& options) {
  const std::uint64_t seed = run_seed(cfg, options);
  const LoadedSignal sig = load_signal(cfg, options, seed, "alternating_sines");
  if (sig.data.labels.empty()) {
    throw config_failure("classify needs a labelled signal (alternating_sines or chirp_sine)");
  }
  const std::vector<double> starts = cfg.get_doubles("classify", "sigma0", {3.0, 12.0, 20.0});
  ClassifierConfig c;
  c.lambda = cfg.get_double("classify", "lambda", c.lambda);
  c.sigma_learning_rate = cfg.get_double("classify", "sigma_learning_rate", c.sigma_learning_rate);
  c.weight_learning_rate = cfg.get_double("classify", "weight_learning_rate", c.weight_learning_rate);
  c.sigma_max_step = cfg.get_double("classify", "sigma_max_step", c.sigma_max_step);
  c.max_iters = cfg.get_int("classify", "max_iters", c.max_iters);
  c.hop_ratio = cfg.get_double("classify", "hop_ratio", c.hop_ratio);
  c.feature_dim = cfg.get_int("classify", "feature_dim", c.feature_dim);
  const std::string mode = cfg.get_string("classify", "feature_mode", "dft_padded");
  if (mode == "dft_padded") {
    c.feature_mode = FeatureMode::dft_padded;
  } else if (mode == "feature_padded") {
    c.feature_mode = FeatureMode::feature_padded;
  } else {
    throw config_failure("classify.feature_mode must be dft_padded or feature_padded");
  }
  c.mean_loss = cfg.get_bool("classify", "mean_loss", c.mean_loss);
  c.interior_margin = cfg.get_double("classify", "interior_margin", c.interior_margin);
  c.seed = seed;
  cfg.reject_unused();
  checked("classify", [&] {
    c.validate();
    return 0;
  });

  std::string history = "start,sigma0,iteration,sigma,length,loss,accuracy\n";
  ordered_json runs = ordered_json::array();
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const JointResult r =
        checked("classify", [&] { return train_joint(sig.data.signal, sig.data.labels, starts[s], c); });
    for (const HistoryRow& row : r.history.rows) {
      history += std::to_string(s) + ',' + format_double(starts[s]) + ',' + std::to_string(row.iteration) +
                 ',' + csv_number(row.sigma) + ',' + std::to_string(row.length) + ',' +
                 csv_number(row.loss) + ',' + csv_number(row.accuracy) + '\n';
    }
    const HistoryRow& last = r.history.last();
    ordered_json j;
    j["sigma0"] = starts[s];
    j["sigma"] = r.sigma;
    j["N"] = last.length;
    j["loss"] = last.loss;
    j["accuracy"] = last.accuracy;
    j["iterations"] = last.iteration;
    j["stop_reason"] = r.history.stop_reason;
    j["failed"] = r.history.failed;
    runs.push_back(j);
  }

  ordered_json summary;
  summary["command"] = "classify";
  summary["seed"] = seed;
  summary["signal"] = signal_summary(sig);
  summary["lambda"] = c.lambda;
  summary["regularization"] = c.lambda == 0.0 ? "unregularized" : "regularized";
  summary["feature_mode"] = mode;
  summary["feature_dim"] = c.feature_dim;
  summary["runs"] = runs;
  return {{"history.csv", history}, {"summary.json", json_text(summary)}};
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<OutputFile> cmd_adaptive(const RunConfig& cfg, const RunOptions& options) {
  const std::uint64_t seed = run_seed(cfg, options);
  const LoadedSignal sig = load_signal(cfg, options, seed, "chirp_sine");
  AdaptiveConfig a;
  a.initial_window = cfg.get_double("adaptive", "initial_window", a.initial_window);
  a.index_range = cfg.get_int("adaptive", "index_range", a.index_range);
  a.pad = cfg.get_double("adaptive", "pad", a.pad);
  a.dft_length = cfg.get_int("adaptive", "dft_length", a.dft_length);
  a.max_iters = cfg.get_int("adaptive", "max_iters", a.max_iters);
  a.learning_rate = cfg.get_double("adaptive", "learning_rate", a.learning_rate);
  const std::string opt = cfg.get_string("adaptive", "optimizer", "adam");
  if (opt == "adam") {
    a.optimizer = AdaptiveOptimizer::adam;
  } else if (opt == "safeguarded") {
    a.optimizer = AdaptiveOptimizer::safeguarded;
  } else {
    throw config_failure("adaptive.optimizer must be adam or safeguarded");
  }
  a.nodes_per_unit = cfg.get_int("adaptive", "nodes_per_unit", a.nodes_per_unit);
  a.map_init_gain = cfg.get_double("adaptive", "map_init_gain", a.map_init_gain);
  a.seed = seed;
  cfg.reject_unused();
  checked("adaptive", [&] {
    a.validate();
    return 0;
  });

  const AdaptiveResult r = checked("adaptive", [&] { return train_adaptive(sig.data.signal, a); });

  std::string history = "iteration,loss,windows,step\n";
  for (const HistoryRow& row : r.history.rows) {
    history += std::to_string(row.iteration) + ',' + csv_number(row.loss) + ',' + std::to_string(row.length) +
               ',' + csv_number(row.step) + '\n';
  }

  // Statistics over windows centred on the signal itself, not the padding.
  const double M = static_cast<double>(sig.data.signal.size());
  std::vector<double> index;
  std::vector<double> length;
  std::vector<std::vector<double>> by_label(2);
  for (const auto& w : r.layout.windows) {
    const double c = w.center();
    if (c < 0.0 || c >= M) continue;
    index.push_back(w.index);
    length.push_back(w.length());
    if (!sig.data.labels.empty()) {
      const int label = sig.data.labels[static_cast<std::size_t>(c)];
      if (label >= 0 && label < 2) by_label[static_cast<std::size_t>(label)].push_back(w.length());
    }
  }

  ordered_json summary;
  summary["command"] = "adaptive";
  summary["seed"] = seed;
  summary["signal"] = signal_summary(sig);
  summary["optimizer"] = opt;
  summary["learning_rate"] = a.learning_rate;
  summary["dft_length"] = a.dft_length;
  summary["index_range"] = r.model.index_range;
  summary["iterations"] = r.history.last().iteration;
  summary["stop_reason"] = r.history.stop_reason;
  summary["failed"] = r.history.failed;
  summary["initial_loss"] = r.history.rows.front().loss;
  summary["final_loss"] = r.history.last().loss;
  summary["windows"] = r.layout.window_count();
  summary["interior_windows"] = index.size();
  summary["median_length"] = median(length);
  summary["kendall_tau_index_length"] = kendall_tau(index, length);
  if (!sig.data.labels.empty()) {
    summary["median_length_label0"] = median(by_label[0]);
    summary["median_length_label1"] = median(by_label[1]);
  }

  const Spectrogram spec = adaptive_stft(sig.data.signal, r.layout, a.dft_length);
  return {{"layout.csv", layout_csv(r.layout)},
          {"history.csv", history},
          {"spectrogram.pgm", spectrogram_pgm(spec)},
          {"window-overlay.csv", window_overlay_csv(r.layout)},
          {"summary.json", json_text(summary)}};
}

std::vector<OutputFile> cmd_render(const RunConfig& cfg, const RunOptions& options) {
  if (!cfg.has("render", "input")) throw config_failure("render.input is required");
  const auto input = resolve(options, cfg.get_string("render", "input", ""));
  const std::string output = cfg.get_string("render", "output", "spectrogram.pgm");
  cfg.reject_unused();
  if (std::filesystem::path(output).has_parent_path() || output == "." || output == "..") {
    throw config_failure("render.output must be a plain file name");
  }
  std::string text;
  Spectrogram spec;
  try {
    text = read_file(input);
    spec = parse_spectrogram_csv(text);
  } catch (const std::exception& e) {
    throw CliError("input", input.string() + ": " + e.what(), kExitInput);
  }
  return {{output, spectrogram_pgm(spec)}};
}

}  // namespace

std::vector<OutputFile> run_command(const std::string& command, const RunConfig& config,
                                    const RunOptions& options) {
  try {
    if (command == "sparsity") return cmd_sparsity(config, options);
    if (command == "classify") return cmd_classify(config, options);
    if (command == "adaptive") return cmd_adaptive(config, options);
    if (command == "render") return cmd_render(config, options);
  } catch (const CliError&) {
    throw;
  } catch (const std::exception& e) {
    throw CliError("run", e.what(), kExitRun);
  }
  throw CliError("usage", "unknown command '" + command + "'", kExitUsage);
}

void write_outputs(const std::filesystem::path& dir, const std::vector<OutputFile>& files) {
  try {
    std::filesystem::create_directories(dir);
    for (const auto& f : files) write_file_atomic(dir / f.name, f.contents);
  } catch (const std::exception& e) {
    throw CliError("output", e.what(), kExitRun);
  }
}

std::string config_reference() {
  return R"(Config file: INI sections of "key = value"; '#' or ';' start a comment.
Relative paths resolve against the config file's directory.

[run]      seed = 1                 (--seed overrides)
[output]   dir = gradstft-out       (--out overrides; relative to the working directory)

[signal]   kind = sine | alternating_sines | chirp_sine | exp_chirp | wav
           noise = 0                white-noise standard deviation, seeded by the run seed
           sample_rate = 1          generated signals only
  sine:              length = 1024, frequency = 0.0625, amplitude = 1
  alternating_sines: f1 = 0.2, f2 = 0.2225, segment_length = 40, segments = 16
  chirp_sine:        f_lo = 0.02, f_hi = 0.2, sine_frequency = 0.05,
                     segment_length = 2048, segments = 6
  exp_chirp:         f0 = 0.01, f1 = 0.25, length = 16384
  wav:               path (16-bit PCM)
  Frequencies are in cycles per sample.

sparsity (default signal: sine)
[sparsity] sigma0 = 5, 25; learning_rate = 100; max_iters = 300;
           tolerance = 1e-4; patience = 20; max_halvings = 10

classify (default signal: alternating_sines)
[classify] sigma0 = 3, 12, 20; lambda = 0.1; sigma_learning_rate = 0.05;
           weight_learning_rate = 0.05; sigma_max_step = 0.25 (0: no cap);
           max_iters = 3000; hop_ratio = 0.05;
           feature_dim = 128; feature_mode = dft_padded | feature_padded;
           mean_loss = false; interior_margin = 0.25

adaptive (default signal: chirp_sine)
[adaptive] initial_window = 512; index_range = 0 (derived); pad = 1024;
           dft_length = 4096 (0: each frame's own support); max_iters = 2000;
           learning_rate = 0.003; optimizer = adam | safeguarded;
           nodes_per_unit = 32; map_init_gain = 16

render
[render]   input = <spectrogram csv>; output = spectrogram.pgm
)";
}

}  // namespace gradstft::cli
