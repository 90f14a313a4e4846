#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mleval {

// Immutable word -> vector index. Vectors are kept raw (not normalized);
// Euclidean transport costs need the original magnitudes.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  // Builds a store from (token, vector) pairs. Throws DimensionMismatch when a
  // vector's length differs from dim and DuplicateToken on repeated tokens.
  static EmbeddingStore from_entries(std::size_t dim,
                                     std::vector<std::pair<std::string, std::vector<float>>> entries,
                                     std::string source_path = {});

  std::size_t vocab_size() const noexcept { return tokens_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::string& source_path() const noexcept { return source_path_; }

  bool contains(std::string_view token) const;
  std::optional<std::span<const float>> find(std::string_view token) const;

  // Tokens in load order.
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  std::size_t dim_ = 0;
  std::string source_path_;
  std::vector<std::string> tokens_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

EmbeddingStore load_text_model(const std::filesystem::path& path);
EmbeddingStore load_binary_model(const std::filesystem::path& path);

// ".bin" files load as binary, everything else as text.
EmbeddingStore load_model(const std::filesystem::path& path);

void save_text_model(const EmbeddingStore& store, const std::filesystem::path& path);
void save_binary_model(const EmbeddingStore& store, const std::filesystem::path& path);

enum class Permutation { AsIs, NoSpace, Underscore, TitleUnderscore };

std::string_view permutation_name(Permutation p) noexcept;

struct LabelResolution {
  std::string raw_label;
  std::optional<std::string> token;  // empty means Unknown
  std::optional<Permutation> permutation_used;

  bool resolved() const noexcept { return token.has_value(); }
};

// Tries the cleaned label as-is, without spaces, with underscores, and
// title-cased with underscores ("parking meter" -> "Parking_Meter").
// The first form present in the store wins.
LabelResolution resolve_label(const EmbeddingStore& store, std::string_view raw);

// The candidate forms tried by resolve_label, in order. Empty when the
// cleaned label is empty.
std::vector<std::pair<Permutation, std::string>> label_permutations(std::string_view raw);

// Both accumulate sequentially in component order in double precision.
double cosine(std::span<const double> u, std::span<const double> v);
double cosine(std::span<const float> u, std::span<const float> v);
double euclidean(std::span<const double> u, std::span<const double> v);
double euclidean(std::span<const float> u, std::span<const float> v);

}  // namespace mleval
