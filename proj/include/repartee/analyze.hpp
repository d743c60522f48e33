#pragma once

// Discussion-characterization analyses over tagged corpora:
//   - word-relevance dumps (which words the attention weighted),
//   - temporal discourse-act fraction series,
//   - signed user graphs and 2-partitioning into antagonistic groups.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "repartee/corpus.hpp"
#include "repartee/models.hpp"

namespace repartee {

// --- word relevance ---------------------------------------------------------

struct RelevanceRecord {
  std::string thread_id;
  std::string comment_id;
  std::vector<std::string> tokens;  // real (unpadded) positions only
  std::vector<double> relevance;    // aligned with tokens; sums to 1
  int pred = 0;                     // predicted act code
};

// One record per comment in the chain. The model must be an attention
// architecture (UsageError otherwise).
std::vector<RelevanceRecord> dump_relevance(Model<float>& model,
                                            const ChainSample<float>& sample,
                                            const Vocab& vocab);

void save_relevance_jsonl(const std::vector<RelevanceRecord>& records,
                          const std::string& path);

// --- temporal fractions -----------------------------------------------------

struct TaggedComment {
  std::optional<int64_t> timestamp;  // unix seconds
  int act = 0;                       // act code
};

struct WindowFractions {
  int64_t window_start = 0;            // floor-aligned to the window size
  int64_t count = 0;                   // comments in the window
  std::map<int, double> fractions;     // act code -> share; sums to 1
};

struct DiscourseSeries {
  int64_t window_seconds = 86400;
  std::vector<WindowFractions> windows;  // ascending, empty windows omitted
  int64_t skipped_unstamped = 0;
};

// Buckets timestamped comments into fixed windows and reports per-act shares.
// Comments without timestamps are skipped (counted); none at all is fatal.
DiscourseSeries temporal_fractions(const std::vector<TaggedComment>& tagged,
                                   int64_t window_seconds = 86400);

// `window_start,act,fraction` rows, acts listed by code within each window.
void save_series_csv(const DiscourseSeries& series, const std::string& path);

// --- signed user graph ------------------------------------------------------

// +1 for acts that signal alignment, -1 for antagonistic acts (humor counts
// as antagonistic only when humor_negative), 0 for everything else.
int edge_sign(DiscourseAct act, bool humor_negative);

struct SignedUserGraph {
  std::vector<std::string> users;  // node id -> name
  // key (min id, max id); value (positive weight, negative weight).
  std::map<std::pair<int, int>, std::pair<double, double>> edges;

  int user_id(const std::string& name);           // adds when missing
  const std::string& user_name(int id) const { return users[static_cast<size_t>(id)]; }

  // Records one reply interaction u -> v carrying the given act. Self-loops
  // and sign-neutral acts are ignored.
  void add_interaction(const std::string& u, const std::string& v, DiscourseAct act,
                       bool humor_negative = true);

 private:
  std::map<std::string, int> ids_;
};

// Builds the graph from reply pairs in the threads. An override map
// (thread_id, comment_id) -> act code replaces gold labels (e.g. model
// predictions); comments with neither are skipped.
SignedUserGraph build_user_graph(
    const std::vector<Thread>& threads,
    const std::map<std::pair<std::string, std::string>, int>* act_overrides,
    bool humor_negative = true);

struct Partition {
  std::vector<std::string> group_a, group_b;
  double frustration = 0;  // negative weight inside groups + positive across
  std::string method;      // "exact" or "heuristic"
};

// Minimum-frustration 2-partition: exhaustive for graphs up to exact_limit
// nodes, seeded best-of-restarts greedy flipping beyond that.
Partition partition_users(const SignedUserGraph& graph, uint64_t seed = 1,
                          int exact_limit = 20, int restarts = 10);

void save_partition_json(const Partition& p, const std::string& path);

}  // namespace repartee
