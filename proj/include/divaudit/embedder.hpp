/// @file embedder.hpp
/// @brief Unit-norm step embeddings and cosine similarity.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divaudit/remote.hpp"

namespace divaudit {

/// Vector with unit L2 norm. Construction normalizes; a zero vector throws.
class Embedding {
 public:
  Embedding() = default;

  static Embedding normalized(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t dimension() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const Embedding&) const = default;

 private:
  explicit Embedding(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

inline constexpr std::size_t kDefaultEmbeddingDim = 256;

/// Signed feature hashing of word unigrams and bigrams. Requires d >= 8.
/// Throws std::invalid_argument when the text has no alphanumeric token.
Embedding embed_hashing(std::string_view text, std::size_t d = kDefaultEmbeddingDim);

/// Provider vector, normalized locally. Throws BackendError when the
/// returned dimension differs from `d`.
Embedding embed_remote(std::string_view text, EmbeddingBackend& client, std::size_t d);

/// Inner product clamped to [-1, 1]. Throws on dimension mismatch.
double cosine(const Embedding& a, const Embedding& b);

/// Lowercased alphanumeric tokens, as used by embed_hashing.
std::vector<std::string> hashing_tokens(std::string_view text);

class StepEmbedder {
 public:
  virtual ~StepEmbedder() = default;
  virtual Embedding embed(std::string_view text) const = 0;
  virtual std::size_t dimension() const = 0;
};

class HashingEmbedder : public StepEmbedder {
 public:
  explicit HashingEmbedder(std::size_t d = kDefaultEmbeddingDim);
  Embedding embed(std::string_view text) const override { return embed_hashing(text, d_); }
  std::size_t dimension() const override { return d_; }

 private:
  std::size_t d_;
};

class RemoteEmbedder : public StepEmbedder {
 public:
  RemoteEmbedder(EmbeddingBackend& client, std::size_t d) : client_(client), d_(d) {}
  Embedding embed(std::string_view text) const override { return embed_remote(text, client_, d_); }
  std::size_t dimension() const override { return d_; }

 private:
  EmbeddingBackend& client_;
  std::size_t d_;
};

}  // namespace divaudit
