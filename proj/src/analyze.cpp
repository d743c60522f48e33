#include "repartee/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>

namespace repartee {

using nlohmann::json;

// --- word relevance ---------------------------------------------------------

std::vector<RelevanceRecord> dump_relevance(Model<float>& model,
                                            const ChainSample<float>& sample,
                                            const Vocab& vocab) {
  auto p = model.relevance(sample);  // throws for non-attention architectures
  auto dists = model.forward(sample);

  std::vector<RelevanceRecord> out;
  for (size_t i = 0; i < sample.tokens.size(); ++i) {
    RelevanceRecord rec;
    rec.thread_id = sample.thread_id;
    rec.comment_id = i < sample.comment_ids.size() ? sample.comment_ids[i] : std::to_string(i);
    for (size_t t = 0; t < sample.tokens[i].size(); ++t) {
      if (!sample.word_mask[i][t]) continue;  // PAD positions stay out
      int id = sample.tokens[i][t];
      rec.tokens.push_back(id >= 0 && static_cast<size_t>(id) < vocab.index_to_token.size()
                               ? vocab.index_to_token[id]
                               : kUnkToken);
      rec.relevance.push_back(static_cast<double>(p[i][static_cast<EIndex>(t)]));
    }
    EIndex best;
    dists[i].maxCoeff(&best);
    rec.pred = static_cast<int>(best);
    out.push_back(std::move(rec));
  }
  return out;
}

void save_relevance_jsonl(const std::vector<RelevanceRecord>& records,
                          const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (const auto& r : records) {
    json j;
    j["thread_id"] = r.thread_id;
    j["comment_id"] = r.comment_id;
    j["tokens"] = r.tokens;
    j["relevance"] = r.relevance;
    j["pred"] = r.pred;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

// --- temporal fractions -----------------------------------------------------

namespace {
int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
}  // namespace

DiscourseSeries temporal_fractions(const std::vector<TaggedComment>& tagged,
                                   int64_t window_seconds) {
  if (window_seconds < 1) throw UsageError("window must be at least one second");

  DiscourseSeries series;
  series.window_seconds = window_seconds;
  std::map<int64_t, std::map<int, int64_t>> counts;  // window start -> act -> n
  for (const auto& c : tagged) {
    if (!c.timestamp) {
      ++series.skipped_unstamped;
      continue;
    }
    int64_t start = floor_div(*c.timestamp, window_seconds) * window_seconds;
    counts[start][c.act] += 1;
  }
  if (counts.empty()) throw DataError("no timestamped comments to bucket");

  for (const auto& [start, per_act] : counts) {
    WindowFractions w;
    w.window_start = start;
    for (const auto& [act, n] : per_act) w.count += n;
    for (const auto& [act, n] : per_act)
      w.fractions[act] = static_cast<double>(n) / static_cast<double>(w.count);
    series.windows.push_back(std::move(w));
  }
  return series;
}

void save_series_csv(const DiscourseSeries& series, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "window_start,act,fraction\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& w : series.windows)
    for (const auto& [act, frac] : w.fractions)
      out << w.window_start << ',' << act_name(act_from_code(act)) << ',' << frac << '\n';
  if (!out) throw DataError("failed writing " + path);
}

// --- signed user graph ------------------------------------------------------

int edge_sign(DiscourseAct act, bool humor_negative) {
  switch (act) {
    case DiscourseAct::Agreement:
    case DiscourseAct::Appreciation:
      return 1;
    case DiscourseAct::Disagreement:
    case DiscourseAct::NegativeReaction:
      return -1;
    case DiscourseAct::Humor:
      return humor_negative ? -1 : 0;
    default:
      return 0;
  }
}

int SignedUserGraph::user_id(const std::string& name) {
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  int id = static_cast<int>(users.size());
  users.push_back(name);
  ids_.emplace(name, id);
  return id;
}

void SignedUserGraph::add_interaction(const std::string& u, const std::string& v,
                                      DiscourseAct act, bool humor_negative) {
  int sign = edge_sign(act, humor_negative);
  if (sign == 0) return;
  if (u.empty() || v.empty() || u == v) return;
  int a = user_id(u), b = user_id(v);
  int lo = std::min(a, b), hi = std::max(a, b);
  auto& [pos, neg] = edges[{lo, hi}];
  if (sign > 0)
    pos += 1;
  else
    neg += 1;
}

SignedUserGraph build_user_graph(
    const std::vector<Thread>& threads,
    const std::map<std::pair<std::string, std::string>, int>* act_overrides,
    bool humor_negative) {
  SignedUserGraph g;
  for (const auto& th : threads) {
    std::map<std::string, const Comment*> by_id;
    for (const auto& c : th.comments) by_id[c.id] = &c;
    for (const auto& c : th.comments) {
      if (!c.parent_id) continue;
      auto parent = by_id.find(*c.parent_id);
      if (parent == by_id.end()) continue;

      std::optional<DiscourseAct> act;
      if (act_overrides) {
        auto it = act_overrides->find({th.id, c.id});
        if (it != act_overrides->end()) act = act_from_code(it->second);
      }
      if (!act) act = c.gold_act;
      if (!act) continue;
      g.add_interaction(c.author, parent->second->author, *act, humor_negative);
    }
  }
  return g;
}

// --- partitioning -----------------------------------------------------------

namespace {

double frustration_of(const SignedUserGraph& g, const std::vector<uint8_t>& side) {
  double f = 0;
  for (const auto& [key, w] : g.edges) {
    bool same = side[static_cast<size_t>(key.first)] == side[static_cast<size_t>(key.second)];
    f += same ? w.second : w.first;  // negative inside, positive across
  }
  return f;
}

// Steepest-descent single-node flips until no move helps.
double climb(const SignedUserGraph& g,
             const std::vector<std::vector<std::pair<int, std::pair<double, double>>>>& adj,
             std::vector<uint8_t>& side) {
  double current = frustration_of(g, side);
  const size_t n = side.size();
  for (;;) {
    double best_gain = 0;
    size_t best_node = n;
    for (size_t u = 0; u < n; ++u) {
      // Flipping u swaps the contribution of each incident edge.
      double gain = 0;
      for (const auto& [v, w] : adj[u]) {
        bool same = side[u] == side[static_cast<size_t>(v)];
        double now = same ? w.second : w.first;
        double then = same ? w.first : w.second;
        gain += now - then;
      }
      if (gain > best_gain + 1e-12) {
        best_gain = gain;
        best_node = u;
      }
    }
    if (best_node == n) break;
    side[best_node] ^= 1;
    current -= best_gain;
  }
  return current;
}

}  // namespace

Partition partition_users(const SignedUserGraph& graph, uint64_t seed, int exact_limit,
                          int restarts) {
  const size_t n = graph.users.size();
  if (n < 2) throw DataError("partitioning needs at least 2 users");

  std::vector<uint8_t> best_side(n, 0);
  double best = std::numeric_limits<double>::infinity();
  Partition out;

  if (exact_limit >= 0 && n <= static_cast<size_t>(exact_limit)) {
    out.method = "exact";
    // Node 0 pinned to group A halves the symmetric search space.
    uint64_t combos = 1ull << (n - 1);
    std::vector<uint8_t> side(n, 0);
    for (uint64_t m = 0; m < combos; ++m) {
      for (size_t u = 1; u < n; ++u) side[u] = (m >> (u - 1)) & 1;
      double f = frustration_of(graph, side);
      if (f < best) {
        best = f;
        best_side = side;
      }
    }
  } else {
    out.method = "heuristic";
    std::vector<std::vector<std::pair<int, std::pair<double, double>>>> adj(n);
    for (const auto& [key, w] : graph.edges) {
      adj[static_cast<size_t>(key.first)].emplace_back(key.second, w);
      adj[static_cast<size_t>(key.second)].emplace_back(key.first, w);
    }
    Rng rng(seed);
    for (int r = 0; r < std::max(restarts, 1); ++r) {
      Rng start_rng = rng.derive("restart-" + std::to_string(r));
      std::vector<uint8_t> side(n);
      for (size_t u = 0; u < n; ++u) side[u] = static_cast<uint8_t>(start_rng.uniform_int(2));
      side[0] = 0;  // fix the symmetry
      double f = climb(graph, adj, side);
      if (f < best) {
        best = f;
        best_side = side;
      }
    }
  }

  out.frustration = best;
  for (size_t u = 0; u < n; ++u)
    (best_side[u] == 0 ? out.group_a : out.group_b).push_back(graph.users[u]);
  return out;
}

void save_partition_json(const Partition& p, const std::string& path) {
  json j;
  j["group_a"] = p.group_a;
  j["group_b"] = p.group_b;
  j["frustration"] = p.frustration;
  j["method"] = p.method;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace repartee
