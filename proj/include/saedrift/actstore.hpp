// Copyright 2026 The saedrift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "saedrift/error.hpp"
#include "saedrift/io.hpp"
#include "saedrift/numkit.hpp"
#include "saedrift/sae_params.hpp"

namespace saedrift {

enum class CheckpointTag { pretrained, finetuned, synthetic };

inline std::string to_string(CheckpointTag tag) {
  switch (tag) {
    case CheckpointTag::pretrained: return "pretrained";
    case CheckpointTag::finetuned: return "finetuned";
    case CheckpointTag::synthetic: return "synthetic";
  }
  return "synthetic";
}

inline CheckpointTag parse_checkpoint_tag(std::string_view text) {
  if (text == "pretrained") return CheckpointTag::pretrained;
  if (text == "finetuned") return CheckpointTag::finetuned;
  if (text == "synthetic") return CheckpointTag::synthetic;
  fail(ErrorKind::validation, "unknown checkpoint_tag '" + std::string(text) + "'");
}

/// Hidden states of one layer of one checkpoint over one dataset.
///
/// Pooled sets hold one row per sample. Per-token sets hold the token rows of
/// every sample concatenated in sample order; `token_counts[s]` says how many
/// rows sample `s` owns.
struct ActivationSet {
  std::string model_tag;
  CheckpointTag checkpoint_tag = CheckpointTag::synthetic;
  std::string dataset_tag;
  std::uint32_t layer_index = 1;
  std::uint32_t hidden_dim = 1;
  bool pooled = false;
  std::uint32_t sample_count = 0;
  std::vector<std::uint32_t> token_counts;
  std::optional<std::vector<std::vector<std::string>>> tokens;
  Matrix data;

  std::size_t expected_rows() const {
    if (pooled) return sample_count;
    return std::accumulate(token_counts.begin(), token_counts.end(), std::size_t{0});
  }

  std::size_t row_offset(std::size_t sample) const {
    if (pooled) return sample;
    return std::accumulate(token_counts.begin(), token_counts.begin() + static_cast<std::ptrdiff_t>(sample),
                           std::size_t{0});
  }

  std::size_t rows_of(std::size_t sample) const { return pooled ? 1 : token_counts.at(sample); }

  /// Throws a validation error naming the first broken invariant.
  void validate() const {
    if (layer_index < 1) fail(ErrorKind::validation, "layer_index must be >= 1");
    if (hidden_dim < 1) fail(ErrorKind::validation, "hidden_dim must be >= 1");
    if (pooled) {
      if (!token_counts.empty()) fail(ErrorKind::validation, "pooled set must not carry token_counts");
      if (tokens) fail(ErrorKind::validation, "pooled set must not carry tokens");
    } else {
      if (token_counts.size() != sample_count) {
        fail(ErrorKind::validation, "token_counts has " + std::to_string(token_counts.size()) + " entries, expected " +
                                        std::to_string(sample_count));
      }
      for (auto c : token_counts) {
        if (c < 1) fail(ErrorKind::validation, "every sample needs at least one token row");
      }
      if (tokens) {
        if (tokens->size() != sample_count) fail(ErrorKind::validation, "tokens list length != sample_count");
        for (std::size_t s = 0; s < sample_count; ++s) {
          if ((*tokens)[s].size() != token_counts[s]) {
            fail(ErrorKind::validation, "sample " + std::to_string(s) + " has " + std::to_string((*tokens)[s].size()) +
                                            " token strings but " + std::to_string(token_counts[s]) + " rows");
          }
        }
      }
    }
    if (data.cols() != hidden_dim || data.rows() != expected_rows()) {
      fail(ErrorKind::validation, "payload is " + detail::dims(data.rows(), data.cols()) + ", header implies " +
                                      detail::dims(expected_rows(), hidden_dim));
    }
    if (!data.all_finite()) fail(ErrorKind::validation, "payload contains non-finite values");
  }

  friend bool operator==(const ActivationSet&, const ActivationSet&) = default;
};

/// A trained (or freshly initialised) autoencoder plus the metadata needed to
/// reproduce it.
struct SaeModelFile {
  double lambda = 1e-3;
  std::uint64_t seed = 0;
  std::uint32_t epochs_trained = 0;
  SaeParams<float> params;

  std::size_t input_dim() const noexcept { return params.input_dim(); }
  std::size_t hidden_dim() const noexcept { return params.hidden_dim(); }

  void validate() const {
    if (input_dim() < 1 || hidden_dim() < 1) fail(ErrorKind::validation, "model dims must be >= 1");
    if (!params.consistent()) fail(ErrorKind::validation, "model parameter shapes are inconsistent");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorKind::validation, "lambda must be finite and >= 0");
    if (!params.all_finite()) fail(ErrorKind::validation, "model parameters contain non-finite values");
  }

  friend bool operator==(const SaeModelFile&, const SaeModelFile&) = default;
};

inline constexpr std::string_view kActivationMagic{"SAEACTV1", 8};
inline constexpr std::string_view kModelMagic{"SAEMDL1\0", 8};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

inline void put_floats(std::string& out, std::span<const float> values) {
  for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

inline void get_floats(std::string_view in, std::size_t at, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::bit_cast<float>(get_u32(in, at + 4 * i));
}

inline std::string frame(std::string_view magic, const nlohmann::json& header) {
  const std::string text = header.dump();
  std::string out(magic);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  return out;
}

struct Framed {
  nlohmann::json header;
  std::size_t payload_offset;
};

inline Framed unframe(std::string_view bytes, std::string_view magic, const std::string& what) {
  if (bytes.size() < 12 || bytes.substr(0, 8) != magic) fail(ErrorKind::format, what + ": bad magic");
  const std::uint32_t header_len = get_u32(bytes, 8);
  if (bytes.size() - 12 < header_len) fail(ErrorKind::corruption, what + ": header truncated");
  nlohmann::json header = nlohmann::json::parse(bytes.substr(12, header_len), nullptr, false);
  if (header.is_discarded() || !header.is_object()) fail(ErrorKind::format, what + ": header is not a JSON object");
  if (!header.contains("format_version") || header["format_version"] != 1) {
    fail(ErrorKind::format, what + ": unsupported format_version");
  }
  return {std::move(header), 12 + static_cast<std::size_t>(header_len)};
}

inline void check_payload(std::string_view bytes, std::size_t offset, std::size_t floats, const std::string& what) {
  const std::size_t have = bytes.size() - offset;
  if (floats > have / 4) {
    fail(ErrorKind::corruption, what + ": payload truncated (" + std::to_string(have) + " of " +
                                    std::to_string(floats * 4) + " bytes)");
  }
  if (have != floats * 4) fail(ErrorKind::corruption, what + ": trailing bytes after payload");
}

}  // namespace detail

/// ACTV1 encoding: magic "SAEACTV1", u32 LE header length, compact JSON
/// header with sorted keys, then the f32 LE row-major payload.
inline std::string encode_activation_set(const ActivationSet& set) {
  set.validate();
  nlohmann::json header = {
      {"format_version", 1},
      {"model_tag", set.model_tag},
      {"checkpoint_tag", to_string(set.checkpoint_tag)},
      {"dataset_tag", set.dataset_tag},
      {"layer_index", set.layer_index},
      {"hidden_dim", set.hidden_dim},
      {"pooled", set.pooled},
      {"sample_count", set.sample_count},
  };
  if (!set.pooled) header["token_counts"] = set.token_counts;
  if (set.tokens) header["tokens"] = *set.tokens;
  std::string out = detail::frame(kActivationMagic, header);
  detail::put_floats(out, set.data.values());
  return out;
}

inline ActivationSet decode_activation_set(std::string_view bytes, const std::string& what = "activation file") {
  auto [header, offset] = detail::unframe(bytes, kActivationMagic, what);
  ActivationSet set;
  try {
    set.model_tag = header.at("model_tag").get<std::string>();
    set.checkpoint_tag = parse_checkpoint_tag(header.at("checkpoint_tag").get<std::string>());
    set.dataset_tag = header.at("dataset_tag").get<std::string>();
    set.layer_index = header.at("layer_index").get<std::uint32_t>();
    set.hidden_dim = header.at("hidden_dim").get<std::uint32_t>();
    set.pooled = header.at("pooled").get<bool>();
    set.sample_count = header.at("sample_count").get<std::uint32_t>();
    if (header.contains("token_counts")) set.token_counts = header["token_counts"].get<std::vector<std::uint32_t>>();
    if (header.contains("tokens")) set.tokens = header["tokens"].get<std::vector<std::vector<std::string>>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::validation, what + ": bad header field: " + e.what());
  }
  if (set.layer_index < 1 || set.hidden_dim < 1) fail(ErrorKind::validation, what + ": layer_index and hidden_dim must be >= 1");
  if (!set.pooled && set.token_counts.size() != set.sample_count) {
    fail(ErrorKind::validation, what + ": token_counts does not match sample_count");
  }
  const std::size_t rows = set.expected_rows();
  detail::check_payload(bytes, offset, rows * set.hidden_dim, what);
  set.data = Matrix(rows, set.hidden_dim);
  detail::get_floats(bytes, offset, set.data.values());
  set.validate();
  return set;
}

inline void write_activation_set(const ActivationSet& set, const std::filesystem::path& path) {
  write_file_atomic(path, encode_activation_set(set));
}

inline ActivationSet read_activation_set(const std::filesystem::path& path) {
  return decode_activation_set(read_file(path), path.string());
}

/// SAEMDL1 encoding: magic "SAEMDL1\0", u32 LE header length, JSON header,
/// then encoder weight, encoder bias, decoder weight, decoder bias as f32 LE.
inline std::string encode_sae_model(const SaeModelFile& model) {
  model.validate();
  nlohmann::json header = {
      {"format_version", 1},
      {"input_dim", model.input_dim()},
      {"hidden_dim", model.hidden_dim()},
      {"lambda", model.lambda},
      {"seed", model.seed},
      {"epochs_trained", model.epochs_trained},
  };
  std::string out = detail::frame(kModelMagic, header);
  model.params.for_each([&](const Matrix& m) { detail::put_floats(out, m.values()); });
  return out;
}

inline SaeModelFile decode_sae_model(std::string_view bytes, const std::string& what = "model file") {
  auto [header, offset] = detail::unframe(bytes, kModelMagic, what);
  SaeModelFile model;
  std::uint32_t d = 0;
  std::uint32_t m = 0;
  try {
    d = header.at("input_dim").get<std::uint32_t>();
    m = header.at("hidden_dim").get<std::uint32_t>();
    model.lambda = header.at("lambda").get<double>();
    model.seed = header.at("seed").get<std::uint64_t>();
    model.epochs_trained = header.at("epochs_trained").get<std::uint32_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::validation, what + ": bad header field: " + e.what());
  }
  if (d < 1 || m < 1) fail(ErrorKind::validation, what + ": input_dim and hidden_dim must be >= 1");
  model.params = SaeParams<float>::zeros(d, m);
  const std::size_t floats = 2 * static_cast<std::size_t>(d) * m + d + m;
  detail::check_payload(bytes, offset, floats, what);
  std::size_t at = offset;
  model.params.for_each([&](Matrix& t) {
    detail::get_floats(bytes, at, t.values());
    at += 4 * t.size();
  });
  model.validate();
  return model;
}

inline void write_sae_model(const SaeModelFile& model, const std::filesystem::path& path) {
  write_file_atomic(path, encode_sae_model(model));
}

inline SaeModelFile read_sae_model(const std::filesystem::path& path) {
  return decode_sae_model(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Synthetic activations

struct SynthConfig {
  std::uint32_t dim = 64;
  std::uint32_t atom_count = 128;
  std::uint32_t sparsity = 4;
  std::uint32_t sample_count = 100;
  double scale = 0.05;
  std::uint64_t seed = 0;
  std::string dataset_tag = "synthetic";

  void validate() const {
    if (dim < 1) fail(ErrorKind::config, "dim must be >= 1");
    if (atom_count < 1) fail(ErrorKind::config, "atom count must be >= 1");
    if (sparsity < 1 || sparsity > atom_count) {
      fail(ErrorKind::config, "sparsity must lie in [1, atom count]; got " + std::to_string(sparsity) + " with " +
                                  std::to_string(atom_count) + " atoms");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) fail(ErrorKind::config, "scale must be positive");
  }
};

/// Ground truth recorded while generating: the dictionary (atom-major, each
/// atom a unit vector of length dim) and, per sample, the active atoms with
/// their coefficients.
struct SynthLog {
  std::vector<std::vector<double>> atoms;
  std::vector<std::vector<std::uint32_t>> active;
  std::vector<std::vector<double>> coefficients;
};

/// Sparse-dictionary activations: row s = scale * sum_j c_j * atom[a_j] with
/// `sparsity` distinct atoms a_j and c_j ~ U[0.5, 1). One token per sample,
/// named after its active atoms.
///
/// Draw order from RngStream(seed): dictionary entries U[-1, 1) atom by atom,
/// then per sample a partial Fisher-Yates over [0, atom_count) choosing the
/// atoms followed by the coefficients.
inline ActivationSet synth_generate(const SynthConfig& cfg, SynthLog* log = nullptr) {
  cfg.validate();
  RngStream rng(cfg.seed);

  std::vector<std::vector<double>> atoms(cfg.atom_count, std::vector<double>(cfg.dim));
  for (auto& atom : atoms) {
    accum_t norm2 = 0.0;
    for (auto& v : atom) {
      v = rng.uniform(-1.0, 1.0);
      norm2 += v * v;
    }
    const double norm = std::sqrt(norm2);
    for (auto& v : atom) v /= norm;
  }

  ActivationSet set;
  set.model_tag = "synthetic";
  set.checkpoint_tag = CheckpointTag::synthetic;
  set.dataset_tag = cfg.dataset_tag;
  set.layer_index = 1;
  set.hidden_dim = cfg.dim;
  set.pooled = false;
  set.sample_count = cfg.sample_count;
  set.token_counts.assign(cfg.sample_count, 1);
  set.tokens.emplace();
  set.data = Matrix(cfg.sample_count, cfg.dim);

  std::vector<std::uint32_t> order(cfg.atom_count);
  std::vector<double> row(cfg.dim);
  for (std::uint32_t s = 0; s < cfg.sample_count; ++s) {
    std::iota(order.begin(), order.end(), 0u);
    for (std::uint32_t j = 0; j < cfg.sparsity; ++j) {
      const auto pick = j + static_cast<std::uint32_t>(rng.next_below(cfg.atom_count - j));
      std::swap(order[j], order[pick]);
    }
    std::vector<std::uint32_t> chosen(order.begin(), order.begin() + cfg.sparsity);
    std::vector<double> coeffs(cfg.sparsity);
    for (auto& c : coeffs) c = rng.uniform(0.5, 1.0);

    std::fill(row.begin(), row.end(), 0.0);
    for (std::uint32_t j = 0; j < cfg.sparsity; ++j) {
      const auto& atom = atoms[chosen[j]];
      for (std::uint32_t i = 0; i < cfg.dim; ++i) row[i] += coeffs[j] * atom[i];
    }
    for (std::uint32_t i = 0; i < cfg.dim; ++i) set.data(s, i) = static_cast<float>(cfg.scale * row[i]);

    auto sorted = chosen;
    std::sort(sorted.begin(), sorted.end());
    std::string name;
    for (auto a : sorted) name += (name.empty() ? "a" : "+a") + std::to_string(a);
    set.tokens->push_back({std::move(name)});

    if (log) {
      log->active.push_back(std::move(chosen));
      log->coefficients.push_back(std::move(coeffs));
    }
  }
  if (log) log->atoms = std::move(atoms);
  return set;
}

}  // namespace saedrift
