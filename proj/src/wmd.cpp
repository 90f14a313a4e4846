#include "mleval/wmd.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <spdlog/spdlog.h>

#include "mleval/error.hpp"
#include "mleval/text.hpp"

namespace mleval {

NBow build_nbow(const LabelBag& bag) {
  if (bag.empty()) throw Error(Errc::EmptyBag, "cannot normalize an empty bag of words");
  NBow nbow;
  std::vector<std::size_t> counts;
  for (const auto& token : bag) {
    const auto it = std::find(nbow.tokens.begin(), nbow.tokens.end(), token);
    if (it == nbow.tokens.end()) {
      nbow.tokens.push_back(token);
      counts.push_back(1);
    } else {
      ++counts[static_cast<std::size_t>(it - nbow.tokens.begin())];
    }
  }
  const auto total = static_cast<double>(bag.size());
  nbow.weights.reserve(counts.size());
  for (auto c : counts) nbow.weights.push_back(static_cast<double>(c) / total);
  return nbow;
}

namespace {

std::vector<float> token_vector(const Token& token, const EmbeddingStore& store) {
  if (token.is_unknown()) return std::vector<float>(store.dim(), 0.0f);
  const auto vec = store.find(token.text());
  if (!vec) throw Error(Errc::UnresolvedToken, token.text());
  return {vec->begin(), vec->end()};
}

}  // namespace

Matrix cost_matrix(const NBow& from, const NBow& to, const EmbeddingStore& store) {
  std::vector<std::vector<float>> rows;
  std::vector<std::vector<float>> cols;
  for (const auto& t : from.tokens) rows.push_back(token_vector(t, store));
  for (const auto& t : to.tokens) cols.push_back(token_vector(t, store));
  Matrix costs(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      costs(i, j) = from.tokens[i] == to.tokens[j] ? 0.0
                                                    : euclidean(std::span<const float>(rows[i]),
                                                                std::span<const float>(cols[j]));
    }
  }
  return costs;
}

WmdResult wmd_solve(const LabelBag& truth_bag, const LabelBag& predicted_bag, const EmbeddingStore& store) {
  WmdResult result;
  result.truth = build_nbow(truth_bag);
  result.predicted = build_nbow(predicted_bag);
  const auto costs = cost_matrix(result.truth, result.predicted, store);
  result.plan = solve_transport(result.truth.weights, result.predicted.weights, costs);
  result.distance = result.plan.objective;
  return result;
}

double wmd_pair(const LabelBag& truth_bag, const LabelBag& predicted_bag, const EmbeddingStore& store) {
  return wmd_solve(truth_bag, predicted_bag, store).distance;
}

double average_wmd(std::vector<ImageWmd> values) {
  if (values.empty()) throw Error(Errc::EmptyDataset, "no word mover's distances to average");
  std::stable_sort(values.begin(), values.end(),
                   [](const ImageWmd& a, const ImageWmd& b) { return natural_less(a.image_id, b.image_id); });
  double sum = 0.0;
  for (const auto& v : values) sum += v.distance;
  return sum / static_cast<double>(values.size());
}

DatasetWmd dataset_wmd(const std::vector<WmdInput>& pairs, const EmbeddingStore& store) {
  DatasetWmd out;
  std::vector<ImageWmd> values;
  for (const auto& pair : pairs) {
    if (pair.truth.empty() || pair.predicted.empty()) {
      ++out.skipped;
      continue;
    }
    values.push_back({pair.image_id, wmd_pair(pair.truth, pair.predicted, store)});
  }
  if (out.skipped > 0) spdlog::info("word mover's distance skipped {} pair(s) with an empty side", out.skipped);
  out.evaluated = values.size();
  out.mean = average_wmd(std::move(values));
  return out;
}

}  // namespace mleval
