#include "mleval/metrics_bipartition.hpp"

#include <algorithm>
#include <unordered_set>

#include "mleval/error.hpp"
#include "mleval/text.hpp"

namespace mleval {

std::vector<std::string> dedup_truth(const std::vector<std::string>& truth) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& label : truth) {
    auto cleaned = clean_label(label);
    if (cleaned.empty()) continue;
    if (seen.insert(cleaned).second) out.push_back(std::move(cleaned));
  }
  return out;
}

namespace {

std::vector<std::string> cleaned_synonyms(const PredictedObject& object) {
  std::vector<std::string> out;
  out.reserve(object.synonyms.size());
  for (const auto& s : object.synonyms) out.push_back(clean_label(s));
  return out;
}

ExactMatch match_exact(const std::vector<std::string>& deduped, const std::vector<PredictedObject>& objects) {
  ExactMatch match;
  std::vector<bool> taken(deduped.size(), false);
  for (std::size_t j = 0; j < objects.size(); ++j) {
    const auto synonyms = cleaned_synonyms(objects[j]);
    for (std::size_t i = 0; i < deduped.size(); ++i) {
      if (taken[i]) continue;
      if (std::find(synonyms.begin(), synonyms.end(), deduped[i]) != synonyms.end()) {
        taken[i] = true;
        match.truth_indices.push_back(i);
        match.object_indices.push_back(j);
        ++match.matched;
        break;
      }
    }
  }
  return match;
}

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double harmonic(double a, double b) { return (a + b) == 0.0 ? 0.0 : 2.0 * a * b / (a + b); }

}  // namespace

ExactMatch exact_intersection(const std::vector<std::string>& truth, const std::vector<PredictedObject>& objects) {
  return match_exact(dedup_truth(truth), objects);
}

ExampleScores scores_from_counts(std::size_t matched, std::size_t truth_size, std::size_t object_count) {
  if (truth_size == 0) throw Error(Errc::EmptyTruth, "example-based scores need at least one truth label");
  const auto m = static_cast<double>(matched);
  const auto y = static_cast<double>(truth_size);
  const auto z = static_cast<double>(object_count);
  ExampleScores s;
  s.precision = ratio(m, z);
  s.recall = m / y;
  s.accuracy = m / (y + z - m);
  s.f1 = 2.0 * m / (y + z);
  return s;
}

ExampleScores example_scores(const std::vector<std::string>& truth, const std::vector<PredictedObject>& objects) {
  const auto deduped = dedup_truth(truth);
  if (deduped.empty()) throw Error(Errc::EmptyTruth, "no usable truth labels");
  return scores_from_counts(match_exact(deduped, objects).matched, deduped.size(), objects.size());
}

ExampleScores mean_example_scores(std::vector<ImageScores> per_image) {
  if (per_image.empty()) throw Error(Errc::EmptyDataset, "no images to average");
  std::stable_sort(per_image.begin(), per_image.end(), [](const ImageScores& a, const ImageScores& b) {
    return natural_less(a.image_id, b.image_id);
  });
  ExampleScores sum;
  for (const auto& item : per_image) {
    sum.accuracy += item.scores.accuracy;
    sum.precision += item.scores.precision;
    sum.recall += item.scores.recall;
    sum.f1 += item.scores.f1;
  }
  const auto n = static_cast<double>(per_image.size());
  return {sum.accuracy / n, sum.precision / n, sum.recall / n, sum.f1 / n};
}

ExampleScores dataset_example_metrics(std::span<const EvaluationUnit> units) {
  std::vector<ImageScores> per_image;
  per_image.reserve(units.size());
  for (const auto& unit : units) {
    per_image.push_back({unit.image_id, example_scores(unit.truth_labels, unit.predicted_objects)});
  }
  return mean_example_scores(std::move(per_image));
}

ConfusionLedger::ConfusionLedger(const std::vector<std::string>& label_space) {
  for (const auto& label : label_space) {
    auto cleaned = clean_label(label);
    if (cleaned.empty() || index_.count(cleaned)) continue;
    index_.emplace(cleaned, labels_.size());
    labels_.push_back(std::move(cleaned));
  }
  tp_.assign(labels_.size(), 0);
  fp_.assign(labels_.size(), 0);
  fn_.assign(labels_.size(), 0);
}

std::ptrdiff_t ConfusionLedger::index_of(const std::string& cleaned_label) const {
  const auto it = index_.find(cleaned_label);
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

void ConfusionLedger::accumulate(const std::vector<std::string>& truth, const std::vector<PredictedObject>& objects) {
  const auto deduped = dedup_truth(truth);
  const auto match = match_exact(deduped, objects);

  // Per image every label lands in exactly one of tp / fn / fp / tn.
  std::vector<char> state(labels_.size(), 0);
  std::vector<bool> truth_matched(deduped.size(), false);
  for (auto i : match.truth_indices) truth_matched[i] = true;
  for (std::size_t i = 0; i < deduped.size(); ++i) {
    const auto j = index_of(deduped[i]);
    if (j < 0) continue;
    state[static_cast<std::size_t>(j)] = truth_matched[i] ? 't' : 'n';
  }

  std::vector<bool> object_matched(objects.size(), false);
  for (auto j : match.object_indices) object_matched[j] = true;
  for (std::size_t o = 0; o < objects.size(); ++o) {
    if (object_matched[o]) continue;
    bool claimed_in_space = false;
    for (const auto& synonym : cleaned_synonyms(objects[o])) {
      const auto j = index_of(synonym);
      if (j < 0) continue;
      claimed_in_space = true;
      auto& s = state[static_cast<std::size_t>(j)];
      if (s == 0) s = 'p';
    }
    if (!claimed_in_space) ++extra_fp_;
  }

  for (std::size_t j = 0; j < labels_.size(); ++j) {
    switch (state[j]) {
      case 't': ++tp_[j]; break;
      case 'n': ++fn_[j]; break;
      case 'p': ++fp_[j]; break;
      default: break;
    }
  }
  ++images_;
}

void ConfusionLedger::merge(const ConfusionLedger& other) {
  if (other.labels_ != labels_) throw Error(Errc::InvalidArgument, "ledger label spaces differ");
  for (std::size_t j = 0; j < labels_.size(); ++j) {
    tp_[j] += other.tp_[j];
    fp_[j] += other.fp_[j];
    fn_[j] += other.fn_[j];
  }
  images_ += other.images_;
  extra_fp_ += other.extra_fp_;
}

ConfusionLedger ConfusionLedger::from_counts(std::vector<std::string> labels, std::vector<std::size_t> tp,
                                             std::vector<std::size_t> fp, std::vector<std::size_t> fn,
                                             std::size_t images, std::size_t extra_fp) {
  if (tp.size() != labels.size() || fp.size() != labels.size() || fn.size() != labels.size()) {
    throw Error(Errc::InvalidArgument, "counter vectors must match the label space");
  }
  ConfusionLedger ledger;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (tp[j] + fp[j] + fn[j] > images) throw Error(Errc::InvalidArgument, "counters exceed image count");
    ledger.index_.emplace(labels[j], j);
  }
  ledger.labels_ = std::move(labels);
  ledger.tp_ = std::move(tp);
  ledger.fp_ = std::move(fp);
  ledger.fn_ = std::move(fn);
  ledger.images_ = images;
  ledger.extra_fp_ = extra_fp;
  return ledger;
}

LabelBasedScores label_based_scores(const ConfusionLedger& ledger, ExtraFalsePositives extra) {
  const std::size_t q = ledger.label_count();
  if (q == 0 || ledger.images() == 0) throw Error(Errc::EmptyLedger, "no labels or no images accumulated");

  double sum_tp = 0.0;
  double sum_fp = extra == ExtraFalsePositives::Include ? static_cast<double>(ledger.extra_fp()) : 0.0;
  double sum_fn = 0.0;
  double macro_p = 0.0;
  double macro_r = 0.0;
  double macro_f = 0.0;
  for (std::size_t j = 0; j < q; ++j) {
    const auto tp = static_cast<double>(ledger.tp(j));
    const auto fp = static_cast<double>(ledger.fp(j));
    const auto fn = static_cast<double>(ledger.fn(j));
    sum_tp += tp;
    sum_fp += fp;
    sum_fn += fn;
    const double p = ratio(tp, tp + fp);
    const double r = ratio(tp, tp + fn);
    macro_p += p;
    macro_r += r;
    macro_f += harmonic(p, r);
  }
  LabelBasedScores s;
  const auto qd = static_cast<double>(q);
  s.macro_precision = macro_p / qd;
  s.macro_recall = macro_r / qd;
  s.macro_f1 = macro_f / qd;
  s.micro_precision = ratio(sum_tp, sum_tp + sum_fp);
  s.micro_recall = ratio(sum_tp, sum_tp + sum_fn);
  s.micro_f1 = harmonic(s.micro_precision, s.micro_recall);
  return s;
}

}  // namespace mleval
