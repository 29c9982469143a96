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

#include "idpfl/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "idpfl/errors.h"
#include "idpfl/experiment.h"

namespace idpfl::harness {
namespace {

constexpr int kWidth = 800;
constexpr int kHeight = 500;
constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 180;
constexpr int kMarginTop = 30;
constexpr int kMarginBottom = 50;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                    "#bcbd22", "#17becf"};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_field(const std::string& s, bool& ok) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  ok = !s.empty() && end == s.c_str() + s.size();
  return v;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::vector<CurvePoint> read_accuracy_curve(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ParameterError("cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ParameterError(csv_path + ": row 1: expected header \"" +
                         std::string(kCsvHeader) + "\"");
  }
  std::vector<CurvePoint> points;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 7) {
      throw ParameterError(csv_path + ": row " + std::to_string(row) +
                           ": expected 7 fields, got " +
                           std::to_string(fields.size()));
    }
    bool ok = true;
    std::vector<double> values;
    for (const auto& f : fields) {
      bool field_ok = true;
      values.push_back(parse_field(f, field_ok));
      ok = ok && field_ok;
    }
    if (!ok || values[0] < 1 || values[0] != std::floor(values[0])) {
      throw ParameterError(csv_path + ": row " + std::to_string(row) +
                           ": malformed value");
    }
    if (!std::isnan(values[6])) {
      points.push_back({static_cast<int>(values[0]), values[6]});
    }
  }
  return points;
}

std::string distribution_label(const std::string& csv_path) {
  const std::string stem = std::filesystem::path(csv_path).stem().string();
  static const std::regex seed_suffix("_seed[0-9]+$");
  return std::regex_replace(stem, seed_suffix, "");
}

void emit_curve_plot(const std::vector<std::string>& csv_paths,
                     const std::string& out_path) {
  if (csv_paths.empty()) {
    throw ParameterError("usage: plot needs at least one metrics CSV");
  }
  // label -> round -> (sum, count); labels keep first-seen order.
  std::vector<std::string> labels;
  std::map<std::string, std::map<int, std::pair<double, int>>> curves;
  for (const auto& path : csv_paths) {
    const std::string label = distribution_label(path);
    if (!curves.count(label)) labels.push_back(label);
    auto& curve = curves[label];
    for (const CurvePoint& p : read_accuracy_curve(path)) {
      auto& [sum, n] = curve[p.round];
      sum += p.accuracy;
      ++n;
    }
  }
  int max_round = 1;
  for (const auto& [label, curve] : curves) {
    if (!curve.empty()) max_round = std::max(max_round, curve.rbegin()->first);
  }
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto x_of = [&](int round) {
    return kMarginLeft + plot_w * round / static_cast<double>(max_round);
  };
  auto y_of = [&](double acc) {
    return kMarginTop + plot_h * (1.0 - std::clamp(acc, 0.0, 1.0));
  };

  std::ofstream out(out_path);
  if (!out) throw ParameterError("cannot write " + out_path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<g stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h
      << "\" x2=\"" << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h
      << "\"/>\n"
      << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
      << kMarginLeft << "\" y2=\"" << kMarginTop + plot_h << "\"/>\n</g>\n";
  out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double acc = t / 4.0;
    out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << fmt(y_of(acc) + 4)
        << "\" text-anchor=\"end\">" << fmt(acc) << "</text>\n";
  }
  out << "<text x=\"" << kMarginLeft << "\" y=\"" << kHeight - 15
      << "\">0</text>\n"
      << "<text x=\"" << kMarginLeft + plot_w << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"end\">" << max_round << "</text>\n"
      << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">round</text>\n"
      << "<text x=\"15\" y=\"" << kMarginTop + plot_h / 2
      << "\" transform=\"rotate(-90 15 " << kMarginTop + plot_h / 2
      << ")\" text-anchor=\"middle\">test accuracy</text>\n</g>\n";

  for (size_t i = 0; i < labels.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    const auto& curve = curves[labels[i]];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const auto& [round, acc] : curve) {
      out << (first ? "" : " ") << fmt(x_of(round)) << ','
          << fmt(y_of(acc.first / acc.second));
      first = false;
    }
    out << "\"/>\n";
    const double ly = kMarginTop + 20.0 * i + 10;
    const double lx = kMarginLeft + plot_w + 15;
    out << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly) << "\" x2=\""
        << fmt(lx + 20) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << fmt(lx + 26) << "\" y=\"" << fmt(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(labels[i]) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace idpfl::harness
