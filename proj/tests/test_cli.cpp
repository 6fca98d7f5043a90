// Copyright 2026 The saedrift Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "saedrift/cli.hpp"
#include "test_support.hpp"

using namespace saedrift;
using saedrift::testing::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

/// Minimal well-formedness check: every element closes in order.
bool balanced_xml(const std::string& text) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  while ((pos = text.find('<', pos)) != std::string::npos) {
    const auto end = text.find('>', pos);
    if (end == std::string::npos) return false;
    const std::string tag = text.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty() || tag[0] == '?' || tag[0] == '!') continue;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else if (tag.back() != '/') {
      stack.push_back(tag.substr(0, tag.find(' ')));
    }
  }
  return stack.empty();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

void write_layers(const std::filesystem::path& dir, const std::vector<ActivationSet>& sets) {
  std::filesystem::create_directories(dir);
  for (const auto& s : sets) write_activation_set(s, dir / ("layer_" + std::to_string(s.layer_index) + ".actv"));
}

ActivationSet identity_fixture_set() {
  ActivationSet set;
  set.model_tag = "fixture";
  set.dataset_tag = "toy";
  set.hidden_dim = 4;
  set.sample_count = 3;
  set.token_counts = {2, 3, 1};
  set.tokens = std::vector<std::vector<std::string>>{{"[CLS]", "[SEP]"}, {"[CLS]", "good", "[SEP]"}, {"x<y"}};
  set.data = Matrix::from_rows(
      {{1, 0, 2, 0}, {3, 0, 2, 1}, {0, 5, 1, 0}, {0.5f, 1, 0, 2}, {1, 0, 0, 4}, {0, 0, 9, 3}});
  return set;
}

SaeModelFile identity_model(std::size_t n) {
  SaeModelFile model;
  model.params = SaeParams<float>::zeros(n, n);
  model.params.encoder_weight = Matrix::identity(n);
  model.params.decoder_weight = Matrix::identity(n);
  return model;
}

}  // namespace

TEST(CliSynth, WritesDeterministicFile) {
  TempDir dir("cli");
  const std::vector<std::string> base{"synth", "--dim", "64", "--atoms", "128", "--sparsity", "4",
                                      "--samples", "2000", "--scale", "0.05", "--seed", "7", "--out"};
  auto a = base;
  a.push_back((dir / "a.actv").string());
  auto b = base;
  b.push_back((dir / "b.actv").string());
  EXPECT_EQ(run(a).code, 0);
  EXPECT_EQ(run(b).code, 0);
  EXPECT_EQ(read_file(dir / "a.actv"), read_file(dir / "b.actv"));
  EXPECT_EQ(read_activation_set(dir / "a.actv").data.rows(), 2000u);
}

TEST(CliSynth, SparsityAboveAtomsIsExitOne) {
  TempDir dir("cli");
  const auto r = run({"synth", "--dim", "8", "--atoms", "128", "--sparsity", "200", "--samples", "5", "--out",
                      (dir / "x.actv").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
  EXPECT_FALSE(std::filesystem::exists(dir / "x.actv"));
}

TEST(Cli, BadFlagsAreExitOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  const auto r = run({"synth", "--dim", "abc"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, HelpIsExitZero) { EXPECT_EQ(run({"--help"}).code, 0); }

class CliTrain : public ::testing::Test {
 protected:
  void SetUp() override {
    write_activation_set(
        synth_generate({.dim = 16, .atom_count = 32, .sparsity = 3, .sample_count = 150, .scale = 0.5, .seed = 2}),
        dir / "s.actv");
  }
  TempDir dir{"cli_train"};
};

TEST_F(CliTrain, DeterministicModelAndHistory) {
  auto args = [&](const std::string& tag) {
    return std::vector<std::string>{"train", "--activations", (dir / "s.actv").string(), "--out",
                                    (dir / (tag + ".sae")).string(), "--seed", "0", "--hidden", "32",
                                    "--epochs", "4", "--history", (dir / (tag + ".csv")).string()};
  };
  const auto input_before = read_file(dir / "s.actv");
  ASSERT_EQ(run(args("a")).code, 0);
  ASSERT_EQ(run(args("b")).code, 0);
  EXPECT_EQ(read_file(dir / "a.sae"), read_file(dir / "b.sae"));
  EXPECT_EQ(read_file(dir / "a.csv"), read_file(dir / "b.csv"));
  EXPECT_EQ(read_file(dir / "s.actv"), input_before);
  const auto hist = lines(read_file(dir / "a.csv"));
  ASSERT_EQ(hist.size(), 5u);
  EXPECT_EQ(hist[0], "epoch,mse,sparsity,total");
  const auto model = read_sae_model(dir / "a.sae");
  EXPECT_EQ(model.lambda, 1e-3);
  EXPECT_EQ(model.epochs_trained, 4u);
  EXPECT_EQ(model.hidden_dim(), 32u);
}

TEST_F(CliTrain, DefaultsMatchRecipe) {
  ASSERT_EQ(run({"train", "--activations", (dir / "s.actv").string(), "--out", (dir / "m.sae").string(),
                 "--history", (dir / "h.csv").string(), "--hidden", "8"})
                .code,
            0);
  EXPECT_EQ(lines(read_file(dir / "h.csv")).size(), 11u);
  const auto model = read_sae_model(dir / "m.sae");
  EXPECT_EQ(model.lambda, 1e-3);
  EXPECT_EQ(model.epochs_trained, 10u);
  EXPECT_EQ(model.seed, 0u);
}

TEST_F(CliTrain, MissingInputIsExitTwo) {
  const auto r = run({"train", "--activations", (dir / "nope.actv").string(), "--out", (dir / "m.sae").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTrain, CorruptInputIsExitTwo) {
  const auto bytes = read_file(dir / "s.actv");
  write_file_atomic(dir / "bad.actv", bytes.substr(0, bytes.size() - 10));
  EXPECT_EQ(run({"train", "--activations", (dir / "bad.actv").string(), "--out", (dir / "m.sae").string()}).code, 2);
}

TEST_F(CliTrain, DivergenceIsExitThree) {
  const auto r = run({"train", "--activations", (dir / "s.actv").string(), "--out", (dir / "m.sae").string(), "--lr",
                      "1e38", "--hidden", "8"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("epoch"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(dir / "m.sae"));
}

TEST(CliSimilarity, IdenticalDirectoriesGiveOnes) {
  TempDir dir("cli_sim");
  const auto fx = saedrift::testing::make_drift_fixture(3, {0.0, 0.5, 1.0});
  write_layers(dir / "pre", fx.pre);
  const auto r = run({"similarity", "--pre", (dir / "pre").string(), "--post", (dir / "pre").string(), "--out",
                      (dir / "p.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(dir / "p.csv"), "layer,cosine\n1,1\n2,1\n3,1\n");
}

TEST(CliSimilarity, DriftFixtureIsNonIncreasingAndChartIsWellFormed) {
  TempDir dir("cli_sim");
  const auto fx = saedrift::testing::make_drift_fixture(4, {0.0, 0.2, 0.4, 0.8, 1.6});
  write_layers(dir / "pre", fx.pre);
  write_layers(dir / "post", fx.post);
  const auto r = run({"similarity", "--pre", (dir / "pre").string(), "--post", (dir / "post").string(), "--out",
                      (dir / "p.csv").string(), "--svg", (dir / "p.svg").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(read_file(dir / "p.csv"));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], "layer,cosine");
  double prev = 2.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double c = std::stod(rows[i].substr(rows[i].find(',') + 1));
    EXPECT_LE(c, prev);
    prev = c;
  }
  const auto svg = read_file(dir / "p.svg");
  EXPECT_TRUE(balanced_xml(svg));
  EXPECT_EQ(count(svg, "<polyline"), 1u);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
}

TEST(CliSimilarity, LayerMismatchIsExitOne) {
  TempDir dir("cli_sim");
  const auto fx = saedrift::testing::make_drift_fixture(5, {0.0, 0.5, 1.0});
  write_layers(dir / "pre", fx.pre);
  write_layers(dir / "post", {fx.post[0], fx.post[1]});
  const auto r = run({"similarity", "--pre", (dir / "pre").string(), "--post", (dir / "post").string(), "--out",
                      (dir / "p.csv").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST(CliSimilarity, ExtractorShapedGoldens) {
  TempDir dir("cli_sim");
  for (const char* ckpt : {"pretrained", "finetuned"}) {
    std::filesystem::create_directories(dir / ckpt);
    for (int layer : {1, 2}) {
      std::filesystem::copy_file(
          saedrift::testing::golden_dir() / ("tiny_bert_" + std::string(ckpt) + "_layer_" + std::to_string(layer) + ".actv"),
          dir / ckpt / ("layer_" + std::to_string(layer) + ".actv"));
    }
  }
  const auto r = run({"similarity", "--pre", (dir / "pretrained").string(), "--post", (dir / "finetuned").string(),
                      "--out", (dir / "p.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(read_file(dir / "p.csv")).size(), 3u);
}

class CliAnalysis : public ::testing::Test {
 protected:
  void SetUp() override {
    write_activation_set(identity_fixture_set(), dir / "act.actv");
    write_sae_model(identity_model(4), dir / "id.sae");
  }
  TempDir dir{"cli_an"};
};

// With an identity encoder and nonnegative rows the codes are the pooled
// coordinates themselves, so the ranking must equal a raw-variance ranking.
TEST_F(CliAnalysis, RankIdentityMatchesRawVariance) {
  ASSERT_EQ(run({"rank", "--model", (dir / "id.sae").string(), "--activations", (dir / "act.actv").string(), "--out",
                 (dir / "r.csv").string()})
                .code,
            0);
  const auto set = identity_fixture_set();
  // pooled rows: sample0 = [2,0,2,0.5], sample1 = [0.5,2,1/3,2], sample2 = [0,0,9,3]
  std::vector<std::pair<double, int>> raw;
  std::vector<std::vector<double>> pooled{{2, 0, 2, 0.5}, {0.5, 2, 1.0 / 3.0, 2}, {0, 0, 9, 3}};
  for (int j = 0; j < 4; ++j) {
    double mean = 0;
    for (const auto& p : pooled) mean += p[j] / 3;
    double var = 0;
    for (const auto& p : pooled) var += (p[j] - mean) * (p[j] - mean) / 2;
    raw.push_back({-var, j});
  }
  std::sort(raw.begin(), raw.end());
  const auto rows = lines(read_file(dir / "r.csv"));
  ASSERT_EQ(rows.size(), 4u);  // header + default top 3
  EXPECT_EQ(rows[0], "rank,feature_index,variance");
  for (int k = 0; k < 3; ++k) {
    std::istringstream in(rows[k + 1]);
    std::string rank, idx, var;
    std::getline(in, rank, ',');
    std::getline(in, idx, ',');
    std::getline(in, var, ',');
    EXPECT_EQ(std::stoi(rank), k + 1);
    EXPECT_EQ(std::stoi(idx), raw[k].second);
    EXPECT_NEAR(std::stod(var), -raw[k].first, 1e-6);
  }
}

TEST_F(CliAnalysis, RankErrors) {
  EXPECT_EQ(run({"rank", "--model", (dir / "id.sae").string(), "--activations", (dir / "act.actv").string(), "--top",
                 "0", "--out", (dir / "r.csv").string()})
                .code,
            1);
  write_sae_model(identity_model(3), dir / "id3.sae");
  EXPECT_EQ(run({"rank", "--model", (dir / "id3.sae").string(), "--activations", (dir / "act.actv").string(), "--out",
                 (dir / "r.csv").string()})
                .code,
            1);
}

TEST_F(CliAnalysis, TokensIdentityReportAndChart) {
  const auto r = run({"tokens", "--model", (dir / "id.sae").string(), "--activations", (dir / "act.actv").string(),
                      "--sample", "1", "--feature", "3", "--out", (dir / "t.json").string(), "--svg",
                      (dir / "t.svg").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = parse_token_report(read_file(dir / "t.json"));
  EXPECT_EQ(report.sample_index, 1u);
  EXPECT_EQ(report.feature_index, 3u);
  EXPECT_EQ(report.tokens, (std::vector<std::string>{"[CLS]", "good", "[SEP]"}));
  EXPECT_EQ(report.activations, (std::vector<double>{0, 2, 4}));
  const auto svg = read_file(dir / "t.svg");
  EXPECT_TRUE(balanced_xml(svg));
  EXPECT_EQ(count(svg, "class=\"bar\""), 3u);
}

TEST_F(CliAnalysis, TokensEscapesLabels) {
  ASSERT_EQ(run({"tokens", "--model", (dir / "id.sae").string(), "--activations", (dir / "act.actv").string(),
                 "--sample", "2", "--feature", "2", "--out", (dir / "t.json").string(), "--svg",
                 (dir / "t.svg").string()})
                .code,
            0);
  const auto svg = read_file(dir / "t.svg");
  EXPECT_NE(svg.find("x&lt;y"), std::string::npos);
  EXPECT_TRUE(balanced_xml(svg));
}

TEST_F(CliAnalysis, TokensOnPooledInputIsExitOne) {
  ActivationSet pooled;
  pooled.model_tag = "m";
  pooled.dataset_tag = "d";
  pooled.pooled = true;
  pooled.hidden_dim = 4;
  pooled.sample_count = 1;
  pooled.data = Matrix::from_rows({{1, 2, 3, 4}});
  write_activation_set(pooled, dir / "pooled.actv");
  const auto r = run({"tokens", "--model", (dir / "id.sae").string(), "--activations", (dir / "pooled.actv").string(),
                      "--feature", "0", "--out", (dir / "t.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}
