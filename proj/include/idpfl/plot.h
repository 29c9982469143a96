// Copyright 2026 The IDP-FL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IDPFL_PLOT_H_
#define IDPFL_PLOT_H_

#include <string>
#include <vector>

namespace idpfl::harness {

// One evaluated point of a learning curve.
struct CurvePoint {
  int round = 0;
  double accuracy = 0.0;
};

// Reads the (round, eval_acc) pairs of a metrics CSV, skipping rounds that
// were not evaluated. Throws ParameterError naming the row on malformed input.
std::vector<CurvePoint> read_accuracy_curve(const std::string& csv_path);

// Legend label for a metrics CSV: the file stem without its "_seed<k>" suffix.
std::string distribution_label(const std::string& csv_path);

// Writes an SVG with one accuracy-vs-round polyline per distribution label;
// seeds sharing a label are averaged round by round. Throws ParameterError
// when `csv_paths` is empty.
void emit_curve_plot(const std::vector<std::string>& csv_paths,
                     const std::string& out_path);

}  // namespace idpfl::harness

#endif  // IDPFL_PLOT_H_
