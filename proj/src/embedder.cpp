/// @file embedder.cpp

#include "divaudit/embedder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "divaudit/errors.hpp"

namespace divaudit {

namespace {

// FNV-1a, 64 bit. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void add_feature(std::vector<double>& v, std::string_view feature) {
  const std::uint64_t h = fnv1a(feature);
  const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
  v[h % v.size()] += sign;
}

}  // namespace

Embedding Embedding::normalized(std::vector<double> values) {
  double sq = 0.0;
  for (double x : values) {
    if (!std::isfinite(x)) throw std::invalid_argument("embedding has non-finite component");
    sq += x * x;
  }
  if (sq == 0.0) throw std::invalid_argument("zero-vector embedding");
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : values) x *= inv;
  return Embedding(std::move(values));
}

std::vector<std::string> hashing_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) != 0) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

Embedding embed_hashing(std::string_view text, std::size_t d) {
  if (d < 8) throw std::invalid_argument("embedding dimension must be >= 8");
  const auto tokens = hashing_tokens(text);
  if (tokens.empty()) throw std::invalid_argument("zero-vector embedding: text has no tokens");
  std::vector<double> v(d, 0.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add_feature(v, tokens[i]);
    if (i + 1 < tokens.size()) add_feature(v, tokens[i] + ' ' + tokens[i + 1]);
  }
  return Embedding::normalized(std::move(v));
}

Embedding embed_remote(std::string_view text, EmbeddingBackend& client, std::size_t d) {
  auto vectors = client.embed({std::string(text)});
  if (vectors.size() != 1) throw BackendError("embedding backend returned no vector");
  if (vectors[0].size() != d) {
    throw BackendError("embedding dimension mismatch: expected " + std::to_string(d) + ", got " +
                       std::to_string(vectors[0].size()));
  }
  try {
    return Embedding::normalized(std::move(vectors[0]));
  } catch (const std::invalid_argument& e) {
    throw BackendError(std::string("embedding backend: ") + e.what());
  }
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dimension() != b.dimension()) {
    throw std::invalid_argument("cosine: dimension mismatch " + std::to_string(a.dimension()) +
                                " vs " + std::to_string(b.dimension()));
  }
  double dot = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) dot += av[i] * bv[i];
  return std::clamp(dot, -1.0, 1.0);
}

HashingEmbedder::HashingEmbedder(std::size_t d) : d_(d) {
  if (d < 8) throw std::invalid_argument("embedding dimension must be >= 8");
}

}  // namespace divaudit
