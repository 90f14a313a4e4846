#include "mleval/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "mleval/error.hpp"
#include "mleval/text.hpp"

namespace mleval {

namespace fs = std::filesystem;

EmbeddingStore EmbeddingStore::from_entries(
    std::size_t dim, std::vector<std::pair<std::string, std::vector<float>>> entries,
    std::string source_path) {
  EmbeddingStore store;
  store.dim_ = dim;
  store.source_path_ = std::move(source_path);
  store.tokens_.reserve(entries.size());
  store.data_.reserve(entries.size() * dim);
  store.index_.reserve(entries.size());
  for (auto& [token, vec] : entries) {
    if (vec.size() != dim) {
      throw Error(Errc::DimensionMismatch, "token '" + token + "' has " +
                                               std::to_string(vec.size()) + " components, expected " +
                                               std::to_string(dim));
    }
    const auto [it, inserted] = store.index_.emplace(token, store.tokens_.size());
    if (!inserted) throw Error(Errc::DuplicateToken, token);
    store.tokens_.push_back(std::move(token));
    store.data_.insert(store.data_.end(), vec.begin(), vec.end());
  }
  return store;
}

bool EmbeddingStore::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

std::optional<std::span<const float>> EmbeddingStore::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return std::span<const float>(data_.data() + it->second * dim_, dim_);
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool parse_count(std::string_view text, std::size_t& out) {
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

struct Header {
  std::size_t vocab = 0;
  std::size_t dim = 0;
  std::size_t body_offset = 0;
};

Header parse_header(std::string_view content) {
  const auto newline = content.find('\n');
  if (newline == std::string_view::npos) throw Error(Errc::MalformedHeader, "missing header line");
  auto line = content.substr(0, newline);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto space = line.find(' ');
  Header header;
  if (space == std::string_view::npos || !parse_count(line.substr(0, space), header.vocab) ||
      !parse_count(line.substr(space + 1), header.dim)) {
    throw Error(Errc::MalformedHeader, "expected 'V D', got '" + std::string(line) + "'");
  }
  header.body_offset = newline + 1;
  return header;
}

}  // namespace

EmbeddingStore load_text_model(const fs::path& path) {
  const std::string content = read_file(path);
  const Header header = parse_header(content);

  std::vector<std::pair<std::string, std::vector<float>>> entries;
  entries.reserve(header.vocab);
  std::string_view body = std::string_view(content).substr(header.body_offset);
  std::size_t line_no = 1;
  while (!body.empty()) {
    const auto newline = body.find('\n');
    auto line = body.substr(0, newline);
    body = newline == std::string_view::npos ? std::string_view{} : body.substr(newline + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    // word2vec's own writer leaves a trailing space on every row.
    while (!line.empty() && line.back() == ' ') line.remove_suffix(1);
    if (line.empty()) continue;

    const auto space = line.find(' ');
    std::string token(line.substr(0, space));
    std::vector<float> vec;
    vec.reserve(header.dim);
    std::string_view rest = space == std::string_view::npos ? std::string_view{} : line.substr(space + 1);
    while (!rest.empty()) {
      const auto next = rest.find(' ');
      const auto field = rest.substr(0, next);
      float value = 0.0f;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw Error(Errc::DimensionMismatch, "line " + std::to_string(line_no) +
                                                 ": bad component '" + std::string(field) + "'");
      }
      vec.push_back(value);
      rest = next == std::string_view::npos ? std::string_view{} : rest.substr(next + 1);
    }
    if (vec.size() != header.dim) {
      throw Error(Errc::DimensionMismatch, "line " + std::to_string(line_no) + ": " +
                                               std::to_string(vec.size()) + " components, expected " +
                                               std::to_string(header.dim));
    }
    if (entries.size() == header.vocab) {
      throw Error(Errc::MalformedHeader, "more rows than the header's vocabulary size " +
                                             std::to_string(header.vocab));
    }
    entries.emplace_back(std::move(token), std::move(vec));
  }
  if (entries.size() != header.vocab) {
    throw Error(Errc::MalformedHeader, "header declares " + std::to_string(header.vocab) +
                                           " rows, file holds " + std::to_string(entries.size()));
  }
  return EmbeddingStore::from_entries(header.dim, std::move(entries), path.string());
}

namespace {

float read_le_float(const char* bytes) {
  std::uint32_t raw = 0;
  std::memcpy(&raw, bytes, sizeof(raw));
  if constexpr (std::endian::native == std::endian::big) {
    raw = ((raw & 0xffu) << 24) | ((raw & 0xff00u) << 8) | ((raw >> 8) & 0xff00u) | (raw >> 24);
  }
  return std::bit_cast<float>(raw);
}

void write_le_float(std::ostream& out, float value) {
  auto raw = std::bit_cast<std::uint32_t>(value);
  const char bytes[4] = {static_cast<char>(raw & 0xff), static_cast<char>((raw >> 8) & 0xff),
                         static_cast<char>((raw >> 16) & 0xff), static_cast<char>((raw >> 24) & 0xff)};
  out.write(bytes, 4);
}

}  // namespace

EmbeddingStore load_binary_model(const fs::path& path) {
  const std::string content = read_file(path);
  const Header header = parse_header(content);

  std::vector<std::pair<std::string, std::vector<float>>> entries;
  entries.reserve(header.vocab);
  std::size_t pos = header.body_offset;
  const std::size_t vector_bytes = header.dim * 4;
  for (std::size_t index = 0; index < header.vocab; ++index) {
    while (pos < content.size() && content[pos] == '\n') ++pos;
    const auto space = content.find(' ', pos);
    if (space == std::string::npos) throw Error(Errc::TruncatedRecord, "record " + std::to_string(index));
    std::string token = content.substr(pos, space - pos);
    pos = space + 1;
    if (content.size() - pos < vector_bytes) {
      throw Error(Errc::TruncatedRecord, "record " + std::to_string(index) + " ('" + token + "')");
    }
    std::vector<float> vec(header.dim);
    for (std::size_t k = 0; k < header.dim; ++k) vec[k] = read_le_float(content.data() + pos + 4 * k);
    pos += vector_bytes;
    entries.emplace_back(std::move(token), std::move(vec));
  }
  return EmbeddingStore::from_entries(header.dim, std::move(entries), path.string());
}

EmbeddingStore load_model(const fs::path& path) {
  if (path.extension() == ".bin") return load_binary_model(path);
  return load_text_model(path);
}

void save_text_model(const EmbeddingStore& store, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << store.vocab_size() << ' ' << store.dim() << '\n';
  char buffer[64];
  for (const auto& token : store.tokens()) {
    out << token;
    const auto vec = *store.find(token);
    for (float value : vec) {
      const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
      out << ' ' << std::string_view(buffer, static_cast<std::size_t>(ptr - buffer));
    }
    out << '\n';
  }
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

void save_binary_model(const EmbeddingStore& store, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << store.vocab_size() << ' ' << store.dim() << '\n';
  for (const auto& token : store.tokens()) {
    out << token << ' ';
    const auto vec = *store.find(token);
    for (float value : vec) write_le_float(out, value);
    out << '\n';
  }
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

std::string_view permutation_name(Permutation p) noexcept {
  switch (p) {
    case Permutation::AsIs: return "AsIs";
    case Permutation::NoSpace: return "NoSpace";
    case Permutation::Underscore: return "Underscore";
    case Permutation::TitleUnderscore: return "TitleUnderscore";
  }
  return "?";
}

std::vector<std::pair<Permutation, std::string>> label_permutations(std::string_view raw) {
  const std::string cleaned = clean_label(raw);
  if (cleaned.empty()) return {};

  std::string no_space;
  std::string underscore;
  std::string title;
  bool word_start = true;
  for (char c : cleaned) {
    if (c == ' ') {
      underscore.push_back('_');
      title.push_back('_');
      word_start = true;
      continue;
    }
    no_space.push_back(c);
    underscore.push_back(c);
    title.push_back(word_start && c >= 'a' && c <= 'z' ? static_cast<char>(c - 'a' + 'A') : c);
    word_start = false;
  }
  return {{Permutation::AsIs, cleaned},
          {Permutation::NoSpace, std::move(no_space)},
          {Permutation::Underscore, std::move(underscore)},
          {Permutation::TitleUnderscore, std::move(title)}};
}

LabelResolution resolve_label(const EmbeddingStore& store, std::string_view raw) {
  LabelResolution result{std::string(raw), std::nullopt, std::nullopt};
  for (auto& [permutation, candidate] : label_permutations(raw)) {
    if (store.contains(candidate)) {
      result.token = std::move(candidate);
      result.permutation_used = permutation;
      break;
    }
  }
  return result;
}

namespace {

template <typename T>
double cosine_impl(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) {
    throw Error(Errc::DimensionMismatch,
                std::to_string(u.size()) + " vs " + std::to_string(v.size()) + " components");
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double a = u[k];
    const double b = v[k];
    dot += a * b;
    uu += a * a;
    vv += b * b;
  }
  if (uu == 0.0 || vv == 0.0) throw Error(Errc::ZeroVector, "cosine of a zero vector");
  const double value = dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(value, -1.0, 1.0);
}

template <typename T>
double euclidean_impl(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) {
    throw Error(Errc::DimensionMismatch,
                std::to_string(u.size()) + " vs " + std::to_string(v.size()) + " components");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double d = static_cast<double>(u[k]) - static_cast<double>(v[k]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace

double cosine(std::span<const double> u, std::span<const double> v) { return cosine_impl(u, v); }
double cosine(std::span<const float> u, std::span<const float> v) { return cosine_impl(u, v); }
double euclidean(std::span<const double> u, std::span<const double> v) { return euclidean_impl(u, v); }
double euclidean(std::span<const float> u, std::span<const float> v) { return euclidean_impl(u, v); }

}  // namespace mleval
