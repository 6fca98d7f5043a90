// Copyright 2026 The saedrift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "saedrift/actstore.hpp"
#include "saedrift/error.hpp"
#include "saedrift/io.hpp"
#include "saedrift/numkit.hpp"
#include "saedrift/sae.hpp"

namespace saedrift {

struct SimilarityEntry {
  std::uint32_t layer_index = 0;
  double cosine = 0.0;
};

struct SimilarityProfile {
  std::string model_tag;
  std::string dataset_tag;
  std::vector<SimilarityEntry> entries;
};

struct RankedFeature {
  std::uint32_t feature_index = 0;
  double variance = 0.0;

  friend bool operator==(const RankedFeature&, const RankedFeature&) = default;
};

using FeatureRanking = std::vector<RankedFeature>;

struct TokenActivationReport {
  std::uint32_t sample_index = 0;
  std::uint32_t feature_index = 0;
  std::vector<std::string> tokens;
  std::vector<double> activations;
};

/// Mean of one sample's token rows. Special tokens are rows like any other.
inline std::vector<double> pool_sample(const ActivationSet& set, std::size_t sample_index) {
  if (set.pooled) fail(ErrorKind::already_pooled, "pool_sample needs a per-token set");
  if (sample_index >= set.sample_count) {
    fail(ErrorKind::index, "sample " + std::to_string(sample_index) + " of " + std::to_string(set.sample_count));
  }
  const std::size_t first = set.row_offset(sample_index);
  const std::size_t count = set.token_counts[sample_index];
  std::vector<accum_t> acc(set.hidden_dim, 0.0);
  for (std::size_t r = first; r < first + count; ++r) {
    const auto row = set.data.row(r);
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += row[c];
  }
  for (auto& v : acc) v /= static_cast<double>(count);
  return acc;
}

/// One row per sample: the pooled vector of each sample, or the stored rows
/// if the set is already pooled.
inline Matrix pooled_rows(const ActivationSet& set) {
  if (set.pooled) return set.data;
  Matrix out(set.sample_count, set.hidden_dim);
  for (std::size_t s = 0; s < set.sample_count; ++s) {
    const auto v = pool_sample(set, s);
    for (std::size_t c = 0; c < v.size(); ++c) out(s, c) = static_cast<float>(v[c]);
  }
  return out;
}

/// Two-stage mean: tokens within each sample, then samples.
inline std::vector<double> dataset_representative(const ActivationSet& set) {
  if (set.sample_count == 0) fail(ErrorKind::validation, "activation set has no samples");
  std::vector<accum_t> acc(set.hidden_dim, 0.0);
  for (std::size_t s = 0; s < set.sample_count; ++s) {
    if (set.pooled) {
      const auto row = set.data.row(s);
      for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += row[c];
    } else {
      const auto v = pool_sample(set, s);
      for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += v[c];
    }
  }
  for (auto& v : acc) v /= static_cast<double>(set.sample_count);
  return acc;
}

inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) fail(ErrorKind::shape, "cosine of vectors with different lengths");
  accum_t dot = 0.0;
  accum_t uu = 0.0;
  accum_t vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  const double nu = std::sqrt(uu);
  const double nv = std::sqrt(vv);
  if (nu < 1e-12 || nv < 1e-12) fail(ErrorKind::degenerate_vector, "cosine of a (near) zero vector");
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

/// Per-layer cosine between the representative vectors of two checkpoints.
inline SimilarityProfile similarity_profile(const std::vector<ActivationSet>& pre_sets,
                                            const std::vector<ActivationSet>& post_sets) {
  if (pre_sets.empty()) fail(ErrorKind::pairing, "no layers to compare");
  auto by_layer = [](const std::vector<ActivationSet>& sets, const char* side) {
    std::map<std::uint32_t, const ActivationSet*> out;
    for (const auto& s : sets) {
      if (!out.emplace(s.layer_index, &s).second) {
        fail(ErrorKind::pairing, std::string(side) + " side lists layer " + std::to_string(s.layer_index) + " twice");
      }
    }
    return out;
  };
  const auto pre = by_layer(pre_sets, "pre");
  const auto post = by_layer(post_sets, "post");
  if (pre.size() != post.size()) fail(ErrorKind::pairing, "pre and post cover different layer counts");

  const std::string& dataset = pre_sets.front().dataset_tag;
  const std::uint32_t dim = pre_sets.front().hidden_dim;
  SimilarityProfile profile;
  profile.model_tag = pre_sets.front().model_tag;
  profile.dataset_tag = dataset;
  for (const auto& [layer, a] : pre) {
    const auto it = post.find(layer);
    if (it == post.end()) fail(ErrorKind::pairing, "layer " + std::to_string(layer) + " missing on post side");
    const ActivationSet* b = it->second;
    if (a->dataset_tag != dataset || b->dataset_tag != dataset) {
      fail(ErrorKind::provenance, "layer " + std::to_string(layer) + " mixes datasets '" + a->dataset_tag + "' and '" +
                                      b->dataset_tag + "'");
    }
    if (a->hidden_dim != dim || b->hidden_dim != dim) {
      fail(ErrorKind::pairing, "layer " + std::to_string(layer) + " has a different hidden_dim");
    }
    profile.entries.push_back({layer, cosine_similarity(dataset_representative(*a), dataset_representative(*b))});
  }
  return profile;
}

/// Unbiased per-column variance, two-pass (means first).
template <typename T>
std::vector<double> column_variances(const BasicMatrix<T>& m) {
  if (m.rows() < 2) fail(ErrorKind::insufficient_samples, "variance needs at least two samples");
  const auto means = column_means(m);
  std::vector<accum_t> ss(m.cols(), 0.0);
  for (std::size_t s = 0; s < m.rows(); ++s) {
    const auto row = m.row(s);
    for (std::size_t j = 0; j < ss.size(); ++j) {
      const double dv = static_cast<double>(row[j]) - means[j];
      ss[j] += dv * dv;
    }
  }
  for (auto& v : ss) v /= static_cast<double>(m.rows() - 1);
  return ss;
}

/// Variance across samples of each feature of the pooled codes.
inline std::vector<double> feature_variances(const SaeModelFile& model, const ActivationSet& set) {
  if (set.hidden_dim != model.input_dim()) {
    fail(ErrorKind::validation, "activation dim " + std::to_string(set.hidden_dim) + " != model input dim " +
                                    std::to_string(model.input_dim()));
  }
  if (set.sample_count < 2) fail(ErrorKind::insufficient_samples, "variance needs at least two samples");
  return column_variances(encode(model.params, pooled_rows(set)));
}

/// The n largest variances, descending; equal variances keep index order.
inline FeatureRanking top_variable_features(std::span<const double> variances, std::size_t n = 3) {
  if (n < 1 || n > variances.size()) {
    fail(ErrorKind::range, "top-n must lie in [1, " + std::to_string(variances.size()) + "]; got " + std::to_string(n));
  }
  std::vector<std::uint32_t> idx(variances.size());
  for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      if (variances[a] != variances[b]) return variances[a] > variances[b];
                      return a < b;
                    });
  FeatureRanking out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back({idx[k], variances[idx[k]]});
  return out;
}

/// Value of one feature at every token of one sample.
inline TokenActivationReport token_feature_activations(const SaeModelFile& model, const ActivationSet& set,
                                                       std::size_t sample_index, std::size_t feature_index) {
  if (set.pooled) fail(ErrorKind::needs_tokens, "token report needs a per-token set");
  if (!set.tokens) fail(ErrorKind::metadata, "activation set carries no token strings");
  if (sample_index >= set.sample_count) {
    fail(ErrorKind::index, "sample " + std::to_string(sample_index) + " of " + std::to_string(set.sample_count));
  }
  if (feature_index >= model.hidden_dim()) {
    fail(ErrorKind::index, "feature " + std::to_string(feature_index) + " of " + std::to_string(model.hidden_dim()));
  }
  if (set.hidden_dim != model.input_dim()) fail(ErrorKind::validation, "activation dim differs from model input dim");

  const auto rows = set.data.slice_rows(set.row_offset(sample_index), set.token_counts[sample_index]);
  const auto codes = encode(model.params, rows);
  TokenActivationReport report;
  report.sample_index = static_cast<std::uint32_t>(sample_index);
  report.feature_index = static_cast<std::uint32_t>(feature_index);
  report.tokens = (*set.tokens)[sample_index];
  for (std::size_t t = 0; t < codes.rows(); ++t) report.activations.push_back(codes(t, feature_index));
  return report;
}

// ---------------------------------------------------------------------------
// Text outputs

inline std::string profile_csv(const SimilarityProfile& profile) {
  std::string out = "layer,cosine\n";
  for (const auto& e : profile.entries) out += std::to_string(e.layer_index) + "," + format_float(e.cosine) + "\n";
  return out;
}

inline std::string ranking_csv(const FeatureRanking& ranking) {
  std::string out = "rank,feature_index,variance\n";
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    out += std::to_string(r + 1) + "," + std::to_string(ranking[r].feature_index) + "," +
           format_float(ranking[r].variance) + "\n";
  }
  return out;
}

/// Hand-assembled so floats carry exactly 9 significant digits.
inline std::string token_report_json(const TokenActivationReport& report) {
  std::string out = "{\"sample_index\":" + std::to_string(report.sample_index) +
                    ",\"feature_index\":" + std::to_string(report.feature_index) + ",\"tokens\":[";
  for (std::size_t i = 0; i < report.tokens.size(); ++i) {
    if (i) out += ",";
    out += nlohmann::json(report.tokens[i]).dump();
  }
  out += "],\"activations\":[";
  for (std::size_t i = 0; i < report.activations.size(); ++i) {
    if (i) out += ",";
    out += format_float(report.activations[i]);
  }
  out += "]}\n";
  return out;
}

inline TokenActivationReport parse_token_report(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    TokenActivationReport r;
    r.sample_index = j.at("sample_index").get<std::uint32_t>();
    r.feature_index = j.at("feature_index").get<std::uint32_t>();
    r.tokens = j.at("tokens").get<std::vector<std::string>>();
    r.activations = j.at("activations").get<std::vector<double>>();
    if (r.tokens.size() != r.activations.size()) fail(ErrorKind::validation, "token and activation counts differ");
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("token report: ") + e.what());
  }
}

}  // namespace saedrift
