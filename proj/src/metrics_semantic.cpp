#include "mleval/metrics_semantic.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>

#include "mleval/error.hpp"
#include "mleval/text.hpp"

namespace mleval {

namespace {

// Resolved vector for a label, or nothing when the label is Unknown or its
// vector has zero norm (cosine undefined).
std::optional<std::span<const float>> comparable_vector(const EmbeddingStore& store, const std::string& label) {
  const auto resolution = resolve_label(store, label);
  if (!resolution.token) return std::nullopt;
  const auto vec = store.find(*resolution.token);
  const bool nonzero = std::any_of(vec->begin(), vec->end(), [](float x) { return x != 0.0f; });
  if (!nonzero) return std::nullopt;
  return vec;
}

}  // namespace

SimilarityMatrix similarity_matrix(const std::vector<std::string>& truth, const std::vector<PredictedObject>& objects,
                                   const EmbeddingStore& store) {
  const auto rows = dedup_truth(truth);
  SimilarityMatrix m;
  m.rows = rows.size();
  m.cols = objects.size();
  m.cells.assign(m.rows * m.cols, -1.0);
  m.exact.assign(m.rows * m.cols, false);

  std::vector<std::optional<std::span<const float>>> truth_vectors;
  truth_vectors.reserve(rows.size());
  for (const auto& label : rows) truth_vectors.push_back(comparable_vector(store, label));

  for (std::size_t j = 0; j < objects.size(); ++j) {
    std::vector<std::string> cleaned;
    std::vector<std::span<const float>> vectors;
    for (const auto& synonym : objects[j].synonyms) {
      cleaned.push_back(clean_label(synonym));
      if (auto vec = comparable_vector(store, synonym)) vectors.push_back(*vec);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::size_t cell = i * m.cols + j;
      if (std::find(cleaned.begin(), cleaned.end(), rows[i]) != cleaned.end()) {
        m.cells[cell] = 1.0;
        m.exact[cell] = true;
        continue;
      }
      if (!truth_vectors[i] || vectors.empty()) continue;
      double best = -1.0;
      for (const auto& vec : vectors) best = std::max(best, cosine(*truth_vectors[i], vec));
      m.cells[cell] = best;
    }
  }
  return m;
}

SemanticMatch semantic_intersection(const SimilarityMatrix& matrix, double threshold) {
  if (!(threshold > 0.0)) throw Error(Errc::InvalidArgument, "semantic threshold must be > 0");
  SemanticMatch match;
  match.threshold = threshold;
  std::vector<bool> row_taken(matrix.rows, false);
  std::vector<bool> col_taken(matrix.cols, false);

  for (std::size_t j = 0; j < matrix.cols; ++j) {
    for (std::size_t i = 0; i < matrix.rows; ++i) {
      if (row_taken[i] || !matrix.is_exact(i, j)) continue;
      row_taken[i] = true;
      col_taken[j] = true;
      match.pairs.push_back({i, j, matrix.at(i, j)});
      break;
    }
  }

  struct Candidate {
    double similarity;
    std::size_t row;
    std::size_t col;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    if (row_taken[i]) continue;
    for (std::size_t j = 0; j < matrix.cols; ++j) {
      if (col_taken[j]) continue;
      const double s = matrix.at(i, j);
      if (s >= threshold) candidates.push_back({s, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });
  for (const auto& c : candidates) {
    if (row_taken[c.row] || col_taken[c.col]) continue;
    row_taken[c.row] = true;
    col_taken[c.col] = true;
    match.pairs.push_back({c.row, c.col, c.similarity});
  }
  return match;
}

ExampleScores semantic_example_scores(const std::vector<std::string>& truth,
                                      const std::vector<PredictedObject>& objects, const EmbeddingStore& store,
                                      double threshold) {
  const auto matrix = similarity_matrix(truth, objects, store);
  if (matrix.rows == 0) throw Error(Errc::EmptyTruth, "no usable truth labels");
  const auto match = semantic_intersection(matrix, threshold);
  return scores_from_counts(match.pairs.size(), matrix.rows, objects.size());
}

}  // namespace mleval
