// Copyright 2026 The saedrift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "saedrift/numkit.hpp"

namespace saedrift {

/// Encoder and decoder weights of a sparse autoencoder mapping d-dimensional
/// activations onto m features and back.
///
///   encoder_weight  m x d     encoder_bias  1 x m
///   decoder_weight  d x m     decoder_bias  1 x d
///
/// The same layout doubles as the gradient buffer and the Adam moment buffers.
template <typename T>
struct SaeParams {
  BasicMatrix<T> encoder_weight;
  BasicMatrix<T> encoder_bias;
  BasicMatrix<T> decoder_weight;
  BasicMatrix<T> decoder_bias;

  static SaeParams zeros(std::size_t input_dim, std::size_t hidden_dim) {
    return {BasicMatrix<T>(hidden_dim, input_dim), BasicMatrix<T>(1, hidden_dim), BasicMatrix<T>(input_dim, hidden_dim),
            BasicMatrix<T>(1, input_dim)};
  }

  std::size_t input_dim() const noexcept { return encoder_weight.cols(); }
  std::size_t hidden_dim() const noexcept { return encoder_weight.rows(); }

  bool consistent() const noexcept {
    const auto d = input_dim();
    const auto m = hidden_dim();
    return encoder_bias.rows() == 1 && encoder_bias.cols() == m && decoder_weight.rows() == d &&
           decoder_weight.cols() == m && decoder_bias.rows() == 1 && decoder_bias.cols() == d;
  }

  bool all_finite() const noexcept {
    return encoder_weight.all_finite() && encoder_bias.all_finite() && decoder_weight.all_finite() &&
           decoder_bias.all_finite();
  }

  /// Visits the four tensors in storage order.
  template <typename Fn>
  void for_each(Fn&& fn) {
    fn(encoder_weight);
    fn(encoder_bias);
    fn(decoder_weight);
    fn(decoder_bias);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    fn(encoder_weight);
    fn(encoder_bias);
    fn(decoder_weight);
    fn(decoder_bias);
  }

  friend bool operator==(const SaeParams&, const SaeParams&) = default;
};

}  // namespace saedrift
