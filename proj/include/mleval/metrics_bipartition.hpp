#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mleval/labelset.hpp"

namespace mleval {

struct ExampleScores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const ExampleScores&) const = default;
};

// Cleaned truth labels, first occurrence kept. Labels that clean to the empty
// string are dropped.
std::vector<std::string> dedup_truth(const std::vector<std::string>& truth);

struct ExactMatch {
  std::size_t matched = 0;
  std::vector<std::size_t> truth_indices;   // into dedup_truth(truth)
  std::vector<std::size_t> object_indices;  // into objects
};

// One-to-one greedy in object order: each object takes the first unmatched
// truth label equal to any of its (cleaned) synonyms.
ExactMatch exact_intersection(const std::vector<std::string>& truth, const std::vector<PredictedObject>& objects);

// Example-based scores for one image from the match count and set sizes.
ExampleScores scores_from_counts(std::size_t matched, std::size_t truth_size, std::size_t object_count);

ExampleScores example_scores(const std::vector<std::string>& truth, const std::vector<PredictedObject>& objects);

struct ImageScores {
  std::string image_id;
  ExampleScores scores;
};

// Mean over images, accumulated in natural (numeric-aware) image_id order.
ExampleScores mean_example_scores(std::vector<ImageScores> per_image);

ExampleScores dataset_example_metrics(std::span<const EvaluationUnit> units);

class ConfusionLedger {
 public:
  // Labels are cleaned and deduplicated; order of first appearance is kept.
  explicit ConfusionLedger(const std::vector<std::string>& label_space);

  void accumulate(const std::vector<std::string>& truth, const std::vector<PredictedObject>& objects);
  // Counter addition; both ledgers must share the label space.
  void merge(const ConfusionLedger& other);

  std::size_t label_count() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t images() const noexcept { return images_; }

  std::size_t tp(std::size_t j) const { return tp_.at(j); }
  std::size_t fp(std::size_t j) const { return fp_.at(j); }
  std::size_t fn(std::size_t j) const { return fn_.at(j); }
  std::size_t tn(std::size_t j) const { return images_ - tp_.at(j) - fp_.at(j) - fn_.at(j); }
  // Unmatched predicted objects that claim no label of the label space.
  std::size_t extra_fp() const noexcept { return extra_fp_; }

  std::ptrdiff_t index_of(const std::string& cleaned_label) const;

  // Builds a ledger directly from counters; used by tests and merges.
  static ConfusionLedger from_counts(std::vector<std::string> labels, std::vector<std::size_t> tp,
                                     std::vector<std::size_t> fp, std::vector<std::size_t> fn,
                                     std::size_t images, std::size_t extra_fp);

 private:
  ConfusionLedger() = default;

  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> tp_;
  std::vector<std::size_t> fp_;
  std::vector<std::size_t> fn_;
  std::size_t images_ = 0;
  std::size_t extra_fp_ = 0;
};

struct LabelBasedScores {
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
};

enum class ExtraFalsePositives { Include, Exclude };

// Macro averages run over the ledger's label space with 0/0 taken as 0.
LabelBasedScores label_based_scores(const ConfusionLedger& ledger,
                                    ExtraFalsePositives extra = ExtraFalsePositives::Include);

}  // namespace mleval
