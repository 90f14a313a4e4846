#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mleval/embeddings.hpp"
#include "mleval/labelset.hpp"
#include "mleval/metrics_bipartition.hpp"

namespace mleval {

inline constexpr double kDefaultSemanticThreshold = 0.4;

// Rows are deduplicated truth labels, columns are predicted objects.
struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> cells;  // row-major, in [-1, 1]
  std::vector<bool> exact;    // a synonym equals the truth label; cell pinned to 1.0

  double at(std::size_t row, std::size_t col) const { return cells[row * cols + col]; }
  bool is_exact(std::size_t row, std::size_t col) const { return exact[row * cols + col]; }
};

struct SemanticPair {
  std::size_t truth_index;
  std::size_t object_index;
  double similarity;
};

struct SemanticMatch {
  std::vector<SemanticPair> pairs;
  double threshold = kDefaultSemanticThreshold;
};

// Cell = 1.0 on an exact text match, otherwise the best cosine over the
// object's resolvable synonyms, or -1 when either side is Unknown.
SimilarityMatrix similarity_matrix(const std::vector<std::string>& truth, const std::vector<PredictedObject>& objects,
                                   const EmbeddingStore& store);

// Exact cells are matched first, the same way exact_intersection does (each
// object in order takes its lowest unmatched exact row), so exact matches
// count at any threshold. Remaining rows and columns are then paired greedily
// by descending similarity (ties: lower truth index, then lower object index)
// while the similarity is >= threshold. threshold must be > 0.
SemanticMatch semantic_intersection(const SimilarityMatrix& matrix, double threshold);

ExampleScores semantic_example_scores(const std::vector<std::string>& truth,
                                      const std::vector<PredictedObject>& objects, const EmbeddingStore& store,
                                      double threshold = kDefaultSemanticThreshold);

}  // namespace mleval
