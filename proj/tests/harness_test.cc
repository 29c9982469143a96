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

#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "idpfl/config.h"
#include "idpfl/errors.h"
#include "idpfl/experiment.h"
#include "idpfl/plot.h"

namespace idpfl::harness {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("idpfl_harness_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

json minimal_config() {
  return json::parse(R"({
    "dataset": {"num_classes": 3, "dim": 4, "samples_per_class": 40,
                "test_samples_per_class": 30, "num_clients": 12},
    "privacy": {"epsilons": [1, 3],
                "distributions": [{"name": "mixed", "fractions": [0.5, 0.5]},
                                  {"name": "nonprivate", "fractions": [0, 0]}]},
    "engine": {"rounds": 6, "cohort": 4, "hidden_dims": [], "eval_interval": 2},
    "seeds": [1, 2]
  })");
}

std::string config_error_key(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<accepted>";
}

TEST(ParseConfig, Defaults) {
  const ExperimentConfig c =
      parse_config(json::parse(R"({"dataset": {}, "privacy": {}})"));
  EXPECT_EQ(c.engine.rounds, 200);
  EXPECT_EQ(c.cohort, 10);
  EXPECT_EQ(c.privacy.delta, 1e-5);
  EXPECT_EQ(c.seeds, (std::vector<uint64_t>{1, 2, 3}));
  EXPECT_EQ(c.privacy.epsilons, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(c.dataset.num_clients, 100);
  EXPECT_EQ(c.privacy.distributions.size(), default_distributions().size());
  EXPECT_EQ(c.engine.mode, engine::Mode::kIdpSample);
}

TEST(ParseConfig, PresetDistributions) {
  const auto jensen = preset_distribution("jensen");
  ASSERT_TRUE(jensen.has_value());
  EXPECT_EQ(jensen->fractions, (std::vector<double>{0.54, 0.37, 0.09}));
  EXPECT_EQ(preset_distribution("acquisti")->fractions,
            (std::vector<double>{0.34, 0.43, 0.23}));
  EXPECT_TRUE(preset_distribution("nonprivate")->non_private());
  EXPECT_FALSE(preset_distribution("bogus").has_value());
}

TEST(ParseConfig, RejectsFractionsThatDoNotSumToOne) {
  json j = minimal_config();
  j["privacy"]["distributions"] =
      json::parse(R"([{"name": "bad", "fractions": [0.5, 0.6]}])");
  EXPECT_NE(config_error_key(j).find("fractions"), std::string::npos);
}

TEST(ParseConfig, RejectsUnknownKeysWithTheirPath) {
  json j = minimal_config();
  j["engine"]["learnign_rate"] = 0.1;
  EXPECT_EQ(config_error_key(j), "engine.learnign_rate");
  json k = minimal_config();
  k["surprise"] = 1;
  EXPECT_EQ(config_error_key(k), "surprise");
}

TEST(ParseConfig, AcceptsInfiniteEpsilon) {
  json j = minimal_config();
  j["privacy"]["epsilons"] = json::parse(R"([1, "inf"])");
  const ExperimentConfig c = parse_config(j);
  EXPECT_TRUE(std::isinf(c.privacy.epsilons[1]));
}

TEST(ParseConfig, RejectsBadValues) {
  json j = minimal_config();
  j["engine"]["mode"] = "turbo";
  EXPECT_EQ(config_error_key(j), "engine.mode");
  json k = minimal_config();
  k["engine"]["rounds"] = 0;
  EXPECT_EQ(config_error_key(k), "engine.rounds");
  json m = minimal_config();
  m.erase("privacy");
  EXPECT_EQ(config_error_key(m), "privacy");
}

TEST(RunExperiment, WritesConsistentOutputs) {
  TempDir dir;
  const ExperimentConfig c = parse_config(minimal_config());
  const ExperimentResult r = run_experiment(c, dir.path().string(), 2);

  ASSERT_TRUE(fs::exists(dir.file("plans.json")));
  ASSERT_TRUE(fs::exists(dir.file("summary.json")));
  for (const std::string dist : {"mixed", "nonprivate"}) {
    std::vector<double> finals;
    for (uint64_t seed : c.seeds) {
      const std::string path = dir.file(csv_filename(dist, seed));
      std::ifstream in(path);
      std::string line;
      std::getline(in, line);
      EXPECT_EQ(line, kCsvHeader);
      int rows = 0;
      for (const auto& p : read_accuracy_curve(path)) {
        EXPECT_GE(p.accuracy, 0.0);
        EXPECT_LE(p.accuracy, 1.0);
      }
      while (std::getline(in, line)) ++rows;
      EXPECT_EQ(rows, 6);
      finals.push_back(read_accuracy_curve(path).back().accuracy);
    }
    // CSVs carry ten significant digits.
    EXPECT_NEAR(r.summary.at(dist).final_mean, mean(finals), 1e-9) << dist;
    const json s = json::parse(slurp(dir.file("summary.json")));
    EXPECT_NEAR(s[dist]["final_mean"].get<double>(), mean(finals), 1e-9);
  }
}

TEST(RunExperiment, RerunsAreByteIdentical) {
  TempDir a, b;
  const ExperimentConfig c = parse_config(minimal_config());
  run_experiment(c, a.path().string(), 1);
  run_experiment(c, b.path().string(), 3);
  for (const auto& entry : fs::directory_iterator(a.path())) {
    const std::string name = entry.path().filename().string();
    EXPECT_EQ(slurp(entry.path().string()), slurp(b.file(name))) << name;
  }
}

TEST(Statistics, MeanAndSampleStd) {
  EXPECT_DOUBLE_EQ(mean({1.0, 2.0, 6.0}), 3.0);
  EXPECT_DOUBLE_EQ(sample_std({1.0, 2.0, 6.0}), std::sqrt(7.0));
  EXPECT_EQ(sample_std({4.0}), 0.0);
}

TEST(ResolveOutputDir, FlagThenConfigThenEnvironment) {
  ExperimentConfig c;
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(resolve_output_dir(c, ""), "results");
  ::setenv(kOutputDirEnv, "from_env", 1);
  EXPECT_EQ(resolve_output_dir(c, ""), "from_env");
  c.output_dir = "from_config";
  EXPECT_EQ(resolve_output_dir(c, ""), "from_config");
  EXPECT_EQ(resolve_output_dir(c, "from_flag"), "from_flag");
  ::unsetenv(kOutputDirEnv);
}

constexpr const char* kTwoRoundCsv =
    "round,sampled,clip_norm,noise_std,train_loss,eval_loss,eval_acc\n"
    "1,3,0.1,0.05,1.2,1.1,0.4\n"
    "2,2,0.1,0.05,1.0,0.9,0.6\n";

int count_of(const std::string& text, const std::string& needle) {
  int n = 0;
  for (size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

TEST(Plot, OneCurvePerDistribution) {
  TempDir dir;
  write_text(dir.file("mixed_seed1.csv"), kTwoRoundCsv);
  emit_curve_plot({dir.file("mixed_seed1.csv")}, dir.file("out.svg"));
  const std::string svg = slurp(dir.file("out.svg"));
  EXPECT_EQ(count_of(svg, "<polyline"), 1);

  boost::property_tree::ptree tree;
  std::istringstream in(svg);
  ASSERT_NO_THROW(boost::property_tree::read_xml(in, tree));
  const auto& line = tree.get_child("svg").get_child("polyline");
  std::istringstream points(line.get<std::string>("<xmlattr>.points"));
  int n = 0;
  for (std::string p; points >> p;) ++n;
  EXPECT_EQ(n, 2);
}

TEST(Plot, SeedsShareOneCurve) {
  TempDir dir;
  write_text(dir.file("a&b_seed1.csv"), kTwoRoundCsv);
  write_text(dir.file("a&b_seed2.csv"), kTwoRoundCsv);
  write_text(dir.file("other_seed1.csv"), kTwoRoundCsv);
  emit_curve_plot({dir.file("a&b_seed1.csv"), dir.file("a&b_seed2.csv"),
                   dir.file("other_seed1.csv")},
                  dir.file("out.svg"));
  const std::string svg = slurp(dir.file("out.svg"));
  EXPECT_EQ(count_of(svg, "<polyline"), 2);
  EXPECT_NE(svg.find("a&amp;b"), std::string::npos);
  boost::property_tree::ptree tree;
  std::istringstream in(svg);
  EXPECT_NO_THROW(boost::property_tree::read_xml(in, tree));
}

TEST(Plot, Errors) {
  TempDir dir;
  EXPECT_THROW(emit_curve_plot({}, dir.file("out.svg")), ParameterError);
  write_text(dir.file("bad_seed1.csv"),
             std::string(kCsvHeader) + "\n1,3,0.1,0.05,1.2,1.1,0.4\n2,2,0.1\n");
  try {
    read_accuracy_curve(dir.file("bad_seed1.csv"));
    FAIL() << "malformed CSV accepted";
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos)
        << e.what();
  }
  write_text(dir.file("hdr.csv"), "round,acc\n1,0.5\n");
  EXPECT_THROW(read_accuracy_curve(dir.file("hdr.csv")), ParameterError);
  EXPECT_EQ(distribution_label("/x/y/acquisti_seed12.csv"), "acquisti");
  EXPECT_EQ(distribution_label("plain.csv"), "plain");
}

int run_cli(const std::string& args) {
  const char* cli = std::getenv("IDPFL_CLI");
  if (cli == nullptr) return -1;
  const int status =
      std::system((std::string(cli) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  if (std::getenv("IDPFL_CLI") == nullptr) GTEST_SKIP() << "IDPFL_CLI not set";
  TempDir dir;
  write_text(dir.file("ok.json"), minimal_config().dump());
  json bad = minimal_config();
  bad["engine"]["typo"] = 1;
  write_text(dir.file("bad.json"), bad.dump());
  json infeasible = minimal_config();
  infeasible["privacy"]["epsilons"] = json::parse(R"([1, "inf"])");
  infeasible["privacy"]["distributions"] =
      json::parse(R"([{"name": "mostly_open", "fractions": [0.25, 0.75]}])");
  write_text(dir.file("infeasible.json"), infeasible.dump());

  EXPECT_EQ(run_cli("plan " + dir.file("ok.json")), 0);
  EXPECT_EQ(run_cli("run " + dir.file("ok.json") + " --out " + dir.file("res")),
            0);
  EXPECT_TRUE(fs::exists(dir.file("res/summary.json")));
  EXPECT_EQ(run_cli("plot " + dir.file("res/mixed_seed1.csv") + " --out " +
                    dir.file("c.svg")),
            0);
  EXPECT_TRUE(fs::exists(dir.file("c.svg")));
  EXPECT_EQ(run_cli("export-data " + dir.file("ok.json") + " --seed 3 --out " +
                    dir.file("data")),
            0);
  EXPECT_TRUE(fs::exists(dir.file("data/train.jsonl")));
  EXPECT_EQ(run_cli("plan " + dir.file("bad.json")), 2);
  EXPECT_EQ(run_cli("plan " + dir.file("missing.json")), 2);
  EXPECT_EQ(run_cli("plan " + dir.file("infeasible.json")), 3);
}

}  // namespace
}  // namespace idpfl::harness
