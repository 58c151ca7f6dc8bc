// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <complex>
#include <string>
#include <vector>

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gradstft/adaptive.hpp"
#include "gradstft/classifier.hpp"
#include "gradstft/signals_io.hpp"
#include "gradstft/sparsity.hpp"

namespace py = pybind11;
using namespace gradstft;

namespace {

using Samples = py::array_t<double, py::array::c_style | py::array::forcecast>;

Signal to_signal(const Samples& x, double sample_rate = 1.0) {
  if (x.ndim() != 1) throw std::invalid_argument("expected a 1-D array of samples");
  return make_signal(std::vector<double>(x.data(), x.data() + x.size()), sample_rate);
}

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::dict history_dict(const TrainHistory& h) {
  std::vector<int> iteration;
  std::vector<int> length;
  std::vector<double> loss;
  std::vector<double> sigma;
  std::vector<double> accuracy;
  std::vector<double> step;
  for (const HistoryRow& r : h.rows) {
    iteration.push_back(r.iteration);
    length.push_back(r.length);
    loss.push_back(r.loss);
    sigma.push_back(r.sigma);
    accuracy.push_back(r.accuracy);
    step.push_back(r.step);
  }
  py::dict d;
  d["iteration"] = iteration;
  d["loss"] = to_array(loss);
  d["sigma"] = to_array(sigma);
  d["length"] = length;
  d["accuracy"] = to_array(accuracy);
  d["step"] = to_array(step);
  d["failed"] = h.failed;
  d["stop_reason"] = h.stop_reason;
  return d;
}

// Rows of (i, x_i, y_i, length, center).
py::array_t<double> layout_array(const WindowLayout& layout) {
  py::array_t<double> out({static_cast<py::ssize_t>(layout.window_count()), py::ssize_t{5}});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < layout.window_count(); ++r) {
    const TrapezoidWindow& w = layout.windows[r];
    const auto i = static_cast<py::ssize_t>(r);
    a(i, 0) = w.index;
    a(i, 1) = w.flat_start;
    a(i, 2) = w.rise_start;
    a(i, 3) = w.length();
    a(i, 4) = w.center();
  }
  return out;
}

py::list frames_list(const Spectrogram& s) {
  py::list frames;
  for (const Spectrum& f : s.frames) {
    frames.append(py::array_t<std::complex<double>>(static_cast<py::ssize_t>(f.size()), f.data()));
  }
  return frames;
}

py::tuple labeled(const LabeledSignal& ls) {
  return py::make_tuple(to_array(ls.signal.samples),
                        py::array_t<int>(static_cast<py::ssize_t>(ls.labels.size()), ls.labels.data()));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Differentiable STFT window optimisation";

  m.def("effective_length", [](double sigma) { return effective_length(sigma); }, py::arg("sigma"),
        "Window length floor(6 sigma), at least 4.");

  m.def(
      "stft",
      [](const Samples& x, double sigma, double hop_ratio) {
        const Spectrogram s = stft(to_signal(x), GaussianStftConfig{sigma, hop_ratio, 3.0});
        return py::make_tuple(frames_list(s), to_array(s.centers));
      },
      py::arg("samples"), py::arg("sigma"), py::arg("hop_ratio") = 0.5,
      "Gaussian-window STFT. Returns (list of complex frames, frame centres).");

  m.def(
      "concentration",
      [](const std::vector<std::complex<double>>& frame) { return concentration(frame); },
      py::arg("frame"), "c4 / c2^2 of a spectral frame, in [1/N, 1].");

  m.def(
      "sparsity_loss",
      [](const Samples& x, double sigma) {
        Tape tape;
        const Var s = tape.variable(sigma);
        const Var loss = sparsity_loss_global(to_signal(x), s);
        return py::make_tuple(loss.value, tape.backward(loss)[s]);
      },
      py::arg("samples"), py::arg("sigma"), "Global sparsity L_S and dL_S/dsigma.");

  m.def(
      "optimize_sigma",
      [](const Samples& x, double sigma0, double learning_rate, int max_iters) {
        SigmaSearchOptions opt;
        opt.learning_rate = learning_rate;
        opt.max_iters = max_iters;
        const SigmaSearchResult r = optimize_sigma(to_signal(x), sigma0, opt);
        py::dict d;
        d["sigma"] = r.sigma;
        d["loss"] = r.loss;
        d["history"] = history_dict(r.history);
        return d;
      },
      py::arg("samples"), py::arg("sigma0"), py::arg("learning_rate") = 100.0, py::arg("max_iters") = 300);

  m.def(
      "train_joint",
      [](const Samples& x, const std::vector<int>& labels, double sigma0, double lambda, int max_iters,
         std::uint64_t seed) {
        ClassifierConfig c;
        c.lambda = lambda;
        c.max_iters = max_iters;
        c.seed = seed;
        const JointResult r = train_joint(to_signal(x), labels, sigma0, c);
        py::dict d;
        d["sigma"] = r.sigma;
        d["length"] = effective_length(r.sigma);
        d["history"] = history_dict(r.history);
        return d;
      },
      py::arg("samples"), py::arg("labels"), py::arg("sigma0"), py::arg("lambda_") = 0.1,
      py::arg("max_iters") = 3000, py::arg("seed") = 1,
      "Joint window-size and linear-classifier training on per-sample labels.");

  py::class_<AdaptiveConfig>(m, "AdaptiveConfig")
      .def(py::init<>())
      .def_readwrite("initial_window", &AdaptiveConfig::initial_window)
      .def_readwrite("index_range", &AdaptiveConfig::index_range)
      .def_readwrite("pad", &AdaptiveConfig::pad)
      .def_readwrite("dft_length", &AdaptiveConfig::dft_length)
      .def_readwrite("max_iters", &AdaptiveConfig::max_iters)
      .def_readwrite("learning_rate", &AdaptiveConfig::learning_rate)
      .def_readwrite("seed", &AdaptiveConfig::seed)
      .def_readwrite("nodes_per_unit", &AdaptiveConfig::nodes_per_unit)
      .def_readwrite("map_init_gain", &AdaptiveConfig::map_init_gain)
      .def_property(
          "optimizer",
          [](const AdaptiveConfig& c) { return c.optimizer == AdaptiveOptimizer::adam ? "adam" : "safeguarded"; },
          [](AdaptiveConfig& c, const std::string& v) {
            if (v == "adam") {
              c.optimizer = AdaptiveOptimizer::adam;
            } else if (v == "safeguarded") {
              c.optimizer = AdaptiveOptimizer::safeguarded;
            } else {
              throw std::invalid_argument("optimizer must be 'adam' or 'safeguarded'");
            }
          });

  m.def(
      "train_adaptive",
      [](const Samples& x, const AdaptiveConfig& config) {
        const Signal s = to_signal(x);
        const AdaptiveResult r = train_adaptive(s, config);
        py::dict d;
        d["layout"] = layout_array(r.layout);
        d["history"] = history_dict(r.history);
        const Spectrogram spec = adaptive_stft(s, r.layout, config.dft_length);
        d["frames"] = frames_list(spec);
        return d;
      },
      py::arg("samples"), py::arg("config") = AdaptiveConfig{},
      "Train the window map. layout rows are (i, x_i, y_i, length, center).");

  m.def("trapezoid_window", py::overload_cast<double, double, double, double, double>(&trapezoid_window),
        py::arg("m"), py::arg("x_i"), py::arg("y_i"), py::arg("x_next"), py::arg("y_next"));

  m.def(
      "kendall_tau",
      [](const std::vector<double>& a, const std::vector<double>& b) { return kendall_tau(a, b); },
      py::arg("a"), py::arg("b"));

  m.def(
      "alternating_sines",
      [](double f1, double f2, int segment_length, int segments) {
        return labeled(gen_alternating_sines(f1, f2, segment_length, segments));
      },
      py::arg("f1"), py::arg("f2"), py::arg("segment_length"), py::arg("segments"));
  m.def(
      "chirp_sine",
      [](double f_lo, double f_hi, double sine_frequency, int segment_length, int segments) {
        return labeled(gen_chirp_sine(f_lo, f_hi, sine_frequency, segment_length, segments));
      },
      py::arg("f_lo"), py::arg("f_hi"), py::arg("sine_frequency"), py::arg("segment_length"), py::arg("segments"));
  m.def(
      "exp_chirp", [](double f0, double f1, int length) { return to_array(gen_exp_chirp(f0, f1, length).samples); },
      py::arg("f0"), py::arg("f1"), py::arg("length"));

  m.def(
      "load_wav",
      [](const std::string& path) {
        const Signal s = load_wav(path);
        return py::make_tuple(to_array(s.samples), s.sample_rate);
      },
      py::arg("path"), "Samples averaged to mono and the sample rate.");
  m.def(
      "encode_wav",
      [](const Samples& x, int sample_rate, int channels) {
        const auto bytes = encode_wav(std::vector<double>(x.data(), x.data() + x.size()), sample_rate, channels);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("channels") = 1, "16-bit PCM WAV bytes.");
}
