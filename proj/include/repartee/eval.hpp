#pragma once

// Inference over held-out chains and metric computation: confusion matrix,
// per-class precision/recall/F1, macro and support-weighted aggregates.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "repartee/corpus.hpp"
#include "repartee/models.hpp"

namespace repartee {

struct Metrics {
  int n_classes = 0;
  std::vector<int64_t> confusion;  // row-major, rows gold, cols predicted
  std::vector<int64_t> support;    // gold count per class
  std::vector<double> precision, recall, f1;
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
  double weighted_precision = 0, weighted_recall = 0, weighted_f1 = 0;
  int64_t total = 0;
  double accuracy = 0;

  int64_t at(int gold, int pred) const {
    return confusion[static_cast<size_t>(gold) * n_classes + pred];
  }
};

// gold[i]/pred[i] in [0, n_classes). Absent classes score 0 by convention and
// still enter the macro mean; the weighted mean is support-weighted so they
// drop out of it naturally.
Metrics compute_metrics(const std::vector<int>& gold, const std::vector<int>& pred,
                        int n_classes);

// One model output for one comment inside one chain.
struct Prediction {
  std::string thread_id;
  std::string comment_id;
  int gold = -1;  // -1 when unlabeled
  int pred = 0;
  std::vector<float> probs;
  size_t chain_length = 0;  // length of the chain that produced it
};

// Argmax tagging of one chain with one model.
std::vector<Prediction> tag_chain(Model<float>& model, const ChainSample<float>& sample);

// Comments shared by several chains get one final prediction: the majority
// vote over their per-chain predictions, ties broken by the prediction from
// the longest chain (input order breaks exact ties). Output is ordered by
// first appearance.
std::vector<Prediction> dedup_predictions(const std::vector<Prediction>& per_chain);

// Pairs (gold, pred) from labeled predictions only.
void split_gold_pred(const std::vector<Prediction>& preds, std::vector<int>* gold,
                     std::vector<int>* pred);

// --- serialization ----------------------------------------------------------

// `class,precision,recall,f1,support` rows plus macro/weighted summary rows.
void save_metrics_csv(const Metrics& m, const std::string& path);
// Tab-separated counts, rows gold, cols predicted, with a header row/column.
void save_confusion_tsv(const Metrics& m, const std::string& path);
// One JSON object per line: {"thread_id","comment_id","gold","pred","probs":[...]}.
void save_predictions_jsonl(const std::vector<Prediction>& preds, const std::string& path);
std::vector<Prediction> load_predictions_jsonl(const std::string& path);
// Aggregate numbers as one JSON document.
void save_metrics_summary_json(const Metrics& m, const std::string& path);

}  // namespace repartee
