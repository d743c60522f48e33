#include "repartee/eval.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace repartee {

using nlohmann::json;

Metrics compute_metrics(const std::vector<int>& gold, const std::vector<int>& pred,
                        int n_classes) {
  if (gold.size() != pred.size())
    throw DataError("compute_metrics: gold and prediction lengths differ");
  if (n_classes < 1) throw DataError("compute_metrics: need at least one class");

  Metrics m;
  m.n_classes = n_classes;
  m.confusion.assign(static_cast<size_t>(n_classes) * n_classes, 0);
  m.support.assign(n_classes, 0);
  m.precision.assign(n_classes, 0);
  m.recall.assign(n_classes, 0);
  m.f1.assign(n_classes, 0);

  int64_t correct = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || gold[i] >= n_classes || pred[i] < 0 || pred[i] >= n_classes)
      throw DataError("compute_metrics: label out of range at position " + std::to_string(i));
    m.confusion[static_cast<size_t>(gold[i]) * n_classes + pred[i]] += 1;
    m.support[gold[i]] += 1;
    if (gold[i] == pred[i]) ++correct;
  }
  m.total = static_cast<int64_t>(gold.size());
  m.accuracy = m.total > 0 ? static_cast<double>(correct) / static_cast<double>(m.total) : 0;

  double wp = 0, wr = 0, wf = 0;
  for (int c = 0; c < n_classes; ++c) {
    int64_t tp = m.at(c, c);
    int64_t fp = 0, fn = 0;
    for (int o = 0; o < n_classes; ++o) {
      if (o == c) continue;
      fp += m.at(o, c);
      fn += m.at(c, o);
    }
    // 0/0 scores 0: an absent or never-predicted class earns nothing.
    m.precision[c] = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0;
    m.recall[c] = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0;
    double pr = m.precision[c] + m.recall[c];
    m.f1[c] = pr > 0 ? 2 * m.precision[c] * m.recall[c] / pr : 0;

    m.macro_precision += m.precision[c];
    m.macro_recall += m.recall[c];
    m.macro_f1 += m.f1[c];
    wp += static_cast<double>(m.support[c]) * m.precision[c];
    wr += static_cast<double>(m.support[c]) * m.recall[c];
    wf += static_cast<double>(m.support[c]) * m.f1[c];
  }
  m.macro_precision /= n_classes;
  m.macro_recall /= n_classes;
  m.macro_f1 /= n_classes;
  if (m.total > 0) {
    m.weighted_precision = wp / static_cast<double>(m.total);
    m.weighted_recall = wr / static_cast<double>(m.total);
    m.weighted_f1 = wf / static_cast<double>(m.total);
  }
  return m;
}

std::vector<Prediction> tag_chain(Model<float>& model, const ChainSample<float>& sample) {
  auto dists = model.forward(sample);
  std::vector<Prediction> out;
  out.reserve(dists.size());
  for (size_t i = 0; i < dists.size(); ++i) {
    Prediction p;
    p.thread_id = sample.thread_id;
    p.comment_id = i < sample.comment_ids.size() ? sample.comment_ids[i] : std::to_string(i);
    p.gold = sample.gold[i];
    EIndex best;
    dists[i].maxCoeff(&best);
    p.pred = static_cast<int>(best);
    p.probs.assign(dists[i].data(), dists[i].data() + dists[i].size());
    p.chain_length = dists.size();
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Prediction> dedup_predictions(const std::vector<Prediction>& per_chain) {
  struct Slot {
    std::vector<const Prediction*> votes;
    size_t order;  // first-appearance rank
  };
  std::map<std::pair<std::string, std::string>, Slot> by_comment;
  size_t next_order = 0;
  for (const auto& p : per_chain) {
    auto key = std::make_pair(p.thread_id, p.comment_id);
    auto it = by_comment.find(key);
    if (it == by_comment.end()) it = by_comment.emplace(key, Slot{{}, next_order++}).first;
    it->second.votes.push_back(&p);
  }

  std::vector<const Slot*> ordered(by_comment.size());
  for (const auto& [k, slot] : by_comment) ordered[slot.order] = &slot;

  std::vector<Prediction> out;
  out.reserve(ordered.size());
  for (const Slot* slot : ordered) {
    std::map<int, int> counts;
    for (const Prediction* v : slot->votes) counts[v->pred] += 1;
    int best_count = 0;
    for (const auto& [cls, n] : counts) best_count = std::max(best_count, n);

    // Majority winner; on a tie, the vote cast by the longest chain wins
    // (earlier vote wins an exact length tie).
    const Prediction* winner = nullptr;
    for (const Prediction* v : slot->votes) {
      if (counts[v->pred] != best_count) continue;
      if (!winner || v->chain_length > winner->chain_length) winner = v;
    }
    out.push_back(*winner);
  }
  return out;
}

void split_gold_pred(const std::vector<Prediction>& preds, std::vector<int>* gold,
                     std::vector<int>* pred) {
  gold->clear();
  pred->clear();
  for (const auto& p : preds) {
    if (p.gold < 0) continue;
    gold->push_back(p.gold);
    pred->push_back(p.pred);
  }
}

// --- serialization ----------------------------------------------------------

namespace {
std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  return out;
}
}  // namespace

void save_metrics_csv(const Metrics& m, const std::string& path) {
  auto out = open_out(path);
  out << "class,precision,recall,f1,support\n";
  out.precision(6);
  out << std::fixed;
  for (int c = 0; c < m.n_classes; ++c)
    out << act_name(act_from_code(c)) << ',' << m.precision[c] << ',' << m.recall[c] << ','
        << m.f1[c] << ',' << m.support[c] << '\n';
  out << "macro," << m.macro_precision << ',' << m.macro_recall << ',' << m.macro_f1 << ','
      << m.total << '\n';
  out << "weighted," << m.weighted_precision << ',' << m.weighted_recall << ','
      << m.weighted_f1 << ',' << m.total << '\n';
  if (!out) throw DataError("failed writing " + path);
}

void save_confusion_tsv(const Metrics& m, const std::string& path) {
  auto out = open_out(path);
  out << "gold\\pred";
  for (int c = 0; c < m.n_classes; ++c) out << '\t' << act_name(act_from_code(c));
  out << '\n';
  for (int g = 0; g < m.n_classes; ++g) {
    out << act_name(act_from_code(g));
    for (int p = 0; p < m.n_classes; ++p) out << '\t' << m.at(g, p);
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

void save_predictions_jsonl(const std::vector<Prediction>& preds, const std::string& path) {
  auto out = open_out(path);
  for (const auto& p : preds) {
    json j;
    j["thread_id"] = p.thread_id;
    j["comment_id"] = p.comment_id;
    j["gold"] = p.gold;
    j["pred"] = p.pred;
    j["probs"] = p.probs;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

std::vector<Prediction> load_predictions_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions: " + path);
  std::vector<Prediction> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      Prediction p;
      p.thread_id = j.at("thread_id").get<std::string>();
      p.comment_id = j.at("comment_id").get<std::string>();
      p.gold = j.at("gold").get<int>();
      p.pred = j.at("pred").get<int>();
      if (j.contains("probs")) p.probs = j.at("probs").get<std::vector<float>>();
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw DataError("bad prediction line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_metrics_summary_json(const Metrics& m, const std::string& path) {
  json j;
  j["total"] = m.total;
  j["accuracy"] = m.accuracy;
  j["macro"] = {{"precision", m.macro_precision},
                {"recall", m.macro_recall},
                {"f1", m.macro_f1}};
  j["weighted"] = {{"precision", m.weighted_precision},
                   {"recall", m.weighted_recall},
                   {"f1", m.weighted_f1}};
  json per;
  for (int c = 0; c < m.n_classes; ++c)
    per[act_name(act_from_code(c))] = {{"precision", m.precision[c]},
                                       {"recall", m.recall[c]},
                                       {"f1", m.f1[c]},
                                       {"support", m.support[c]}};
  j["per_class"] = per;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace repartee
