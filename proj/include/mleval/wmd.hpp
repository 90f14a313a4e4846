#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mleval/embeddings.hpp"
#include "mleval/labelset.hpp"
#include "mleval/transport.hpp"

namespace mleval {

// Normalized bag of words: distinct tokens in first-appearance order and
// their relative frequencies.
struct NBow {
  std::vector<Token> tokens;
  std::vector<double> weights;
};

NBow build_nbow(const LabelBag& bag);

// Euclidean distance between token vectors. Unknown embeds as the zero
// vector, so its cost to word w is |w| and Unknown-to-Unknown costs 0.
Matrix cost_matrix(const NBow& from, const NBow& to, const EmbeddingStore& store);

struct WmdResult {
  double distance = 0.0;
  NBow truth;
  NBow predicted;
  TransportPlan plan;
};

WmdResult wmd_solve(const LabelBag& truth_bag, const LabelBag& predicted_bag, const EmbeddingStore& store);
double wmd_pair(const LabelBag& truth_bag, const LabelBag& predicted_bag, const EmbeddingStore& store);

struct WmdInput {
  std::string image_id;
  LabelBag truth;
  LabelBag predicted;
};

struct DatasetWmd {
  double mean = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // pairs with an empty side
};

struct ImageWmd {
  std::string image_id;
  double distance;
};

// Mean in natural image_id order. Throws EmptyDataset on no values.
double average_wmd(std::vector<ImageWmd> values);

DatasetWmd dataset_wmd(const std::vector<WmdInput>& pairs, const EmbeddingStore& store);

}  // namespace mleval
