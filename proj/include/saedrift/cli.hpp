// Copyright 2026 The saedrift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "saedrift/actstore.hpp"
#include "saedrift/analysis.hpp"
#include "saedrift/error.hpp"
#include "saedrift/io.hpp"
#include "saedrift/sae.hpp"
#include "saedrift/svg.hpp"

namespace saedrift::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2, kDivergence = 3 };

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::storage:
    case ErrorKind::format:
    case ErrorKind::corruption: return kIo;
    case ErrorKind::divergence: return kDivergence;
    default: return kValidation;
  }
}

/// Reads every `layer_<k>.actv` in `dir`.
inline std::vector<ActivationSet> read_layer_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorKind::storage, dir.string() + " is not a readable directory");
  static const std::regex pattern(R"(layer_(\d+)\.actv)");
  std::vector<std::pair<std::uint32_t, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch match;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, match, pattern)) {
      found.emplace_back(static_cast<std::uint32_t>(std::stoul(match[1].str())), entry.path());
    }
  }
  if (found.empty()) fail(ErrorKind::validation, "no layer_<k>.actv files in " + dir.string());
  std::sort(found.begin(), found.end());
  std::vector<ActivationSet> sets;
  for (const auto& [layer, path] : found) {
    auto set = read_activation_set(path);
    if (set.layer_index != layer) {
      fail(ErrorKind::validation, path.string() + " holds layer " + std::to_string(set.layer_index));
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

struct SynthArgs {
  SynthConfig cfg;
  std::string out;
};

struct TrainArgs {
  TrainConfig cfg;
  std::string activations;
  std::string out;
  std::string history;
};

struct SimilarityArgs {
  std::string pre;
  std::string post;
  std::string out;
  std::string svg;
};

struct RankArgs {
  std::string model;
  std::string activations;
  std::size_t top = 3;
  std::string out;
};

struct TokensArgs {
  std::string model;
  std::string activations;
  std::size_t sample = 0;
  std::size_t feature = 0;
  std::string out;
  std::string svg;
};

inline void cmd_synth(const SynthArgs& a, std::ostream& out) {
  const auto set = synth_generate(a.cfg);
  write_activation_set(set, a.out);
  out << "wrote " << set.sample_count << "x" << set.hidden_dim << " activations to " << a.out << "\n";
}

inline void cmd_train(const TrainArgs& a, std::ostream& out) {
  const auto data = read_activation_set(a.activations);
  const auto result = train(data, a.cfg);
  write_sae_model(result.model, a.out);
  if (!a.history.empty()) write_file_atomic(a.history, history_csv(result.history));
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    out << "epoch " << result.history.size() << " mse=" << format_float(last.mse)
        << " sparsity=" << format_float(last.sparsity) << " total=" << format_float(last.total) << "\n";
  }
  out << "wrote model to " << a.out << "\n";
}

inline void cmd_similarity(const SimilarityArgs& a, std::ostream& out) {
  const auto profile = similarity_profile(read_layer_dir(a.pre), read_layer_dir(a.post));
  write_file_atomic(a.out, profile_csv(profile));
  if (!a.svg.empty()) {
    svg::Series series{profile.model_tag + " / " + profile.dataset_tag, {}, {}};
    for (const auto& e : profile.entries) {
      series.x.push_back(e.layer_index);
      series.y.push_back(e.cosine);
    }
    write_file_atomic(a.svg, svg::line_chart("Layer-wise cosine similarity (" + profile.dataset_tag + ")", {series},
                                             0.0, 1.05, "layer", "cosine similarity"));
  }
  out << "compared " << profile.entries.size() << " layers\n";
}

inline void cmd_rank(const RankArgs& a, std::ostream& out) {
  const auto model = read_sae_model(a.model);
  const auto set = read_activation_set(a.activations);
  const auto ranking = top_variable_features(feature_variances(model, set), a.top);
  write_file_atomic(a.out, ranking_csv(ranking));
  out << "ranked " << model.hidden_dim() << " features, kept " << ranking.size() << "\n";
}

inline void cmd_tokens(const TokensArgs& a, std::ostream& out) {
  const auto model = read_sae_model(a.model);
  const auto set = read_activation_set(a.activations);
  const auto report = token_feature_activations(model, set, a.sample, a.feature);
  write_file_atomic(a.out, token_report_json(report));
  if (!a.svg.empty()) {
    write_file_atomic(a.svg, svg::bar_chart("Feature " + std::to_string(a.feature) + ", sample " + std::to_string(a.sample),
                                            report.tokens, report.activations));
  }
  out << "reported " << report.tokens.size() << " tokens\n";
}

/// Runs one command line (without the program name). Never throws.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Sparse autoencoder training and representation drift analysis", "saedrift"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate sparse-dictionary synthetic activations");
  synth_cmd->add_option("--dim", synth.cfg.dim, "Activation dimension")->required();
  synth_cmd->add_option("--atoms", synth.cfg.atom_count, "Dictionary size")->required();
  synth_cmd->add_option("--sparsity", synth.cfg.sparsity, "Active atoms per sample")->required();
  synth_cmd->add_option("--samples", synth.cfg.sample_count, "Number of samples")->required();
  synth_cmd->add_option("--scale", synth.cfg.scale, "Output scale")->capture_default_str();
  synth_cmd->add_option("--seed", synth.cfg.seed, "RNG seed")->capture_default_str();
  synth_cmd->add_option("--dataset-tag", synth.cfg.dataset_tag, "Dataset tag written to the header")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output .actv file")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a sparse autoencoder on an activation file");
  train_cmd->add_option("--activations", tr.activations, "Input .actv file")->required();
  train_cmd->add_option("--out", tr.out, "Output model file")->required();
  train_cmd->add_option("--seed", tr.cfg.seed, "Initialisation and shuffle seed")->capture_default_str();
  train_cmd->add_option("--lambda", tr.cfg.lambda, "L1 sparsity weight")->capture_default_str();
  train_cmd->add_option("--lr", tr.cfg.learning_rate, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--epochs", tr.cfg.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--batch-size", tr.cfg.batch_size, "Minibatch size")->capture_default_str();
  train_cmd->add_option("--hidden", tr.cfg.hidden_dim, "Number of features")->capture_default_str();
  train_cmd->add_option("--history", tr.history, "Optional per-epoch loss CSV");

  SimilarityArgs sim;
  auto* sim_cmd = app.add_subcommand("similarity", "Layer-wise cosine similarity between two checkpoints");
  sim_cmd->add_option("--pre", sim.pre, "Directory of layer_<k>.actv files (before fine-tuning)")->required();
  sim_cmd->add_option("--post", sim.post, "Directory of layer_<k>.actv files (after fine-tuning)")->required();
  sim_cmd->add_option("--out", sim.out, "Output CSV")->required();
  sim_cmd->add_option("--svg", sim.svg, "Optional line chart");

  RankArgs rank;
  auto* rank_cmd = app.add_subcommand("rank", "Rank features by activation variance across samples");
  rank_cmd->add_option("--model", rank.model, "Model file")->required();
  rank_cmd->add_option("--activations", rank.activations, "Activation file")->required();
  rank_cmd->add_option("--top", rank.top, "Number of features to keep")->capture_default_str();
  rank_cmd->add_option("--out", rank.out, "Output CSV")->required();

  TokensArgs tok;
  auto* tokens_cmd = app.add_subcommand("tokens", "Per-token activations of one feature for one sample");
  tokens_cmd->add_option("--model", tok.model, "Model file")->required();
  tokens_cmd->add_option("--activations", tok.activations, "Per-token activation file")->required();
  tokens_cmd->add_option("--sample", tok.sample, "Sample index")->capture_default_str();
  tokens_cmd->add_option("--feature", tok.feature, "Feature index")->required();
  tokens_cmd->add_option("--out", tok.out, "Output JSON")->required();
  tokens_cmd->add_option("--svg", tok.svg, "Optional bar chart");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "saedrift: " << e.what() << "\n";
    return kValidation;
  }

  try {
    if (synth_cmd->parsed()) cmd_synth(synth, out);
    if (train_cmd->parsed()) cmd_train(tr, out);
    if (sim_cmd->parsed()) cmd_similarity(sim, out);
    if (rank_cmd->parsed()) cmd_rank(rank, out);
    if (tokens_cmd->parsed()) cmd_tokens(tok, out);
  } catch (const Error& e) {
    err << "saedrift: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "saedrift: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}

}  // namespace saedrift::cli
