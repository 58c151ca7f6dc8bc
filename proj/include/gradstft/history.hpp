// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <limits>
#include <string>
#include <vector>

namespace gradstft {

inline constexpr double kNotRecorded = std::numeric_limits<double>::quiet_NaN();

// One optimizer iteration. Fields that do not apply to a given experiment
// stay NaN (or 0 for length).
struct HistoryRow {
  int iteration = 0;
  double loss = kNotRecorded;
  double sigma = kNotRecorded;
  int length = 0;
  double accuracy = kNotRecorded;
  double step = kNotRecorded;
};

struct TrainHistory {
  std::vector<HistoryRow> rows;
  bool failed = false;
  // Why the run ended: "max-iters", "converged", "stalled" or a failure text.
  std::string stop_reason;

  const HistoryRow& last() const { return rows.back(); }
};

}  // namespace gradstft
