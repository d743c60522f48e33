#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "repartee/common.hpp"

namespace repartee {

// The ten pragmatic roles a comment can play. Codes are stable and
// round-trip through names.
enum class DiscourseAct : int {
  Question = 0,
  Answer = 1,
  Announcement = 2,
  Elaboration = 3,
  Agreement = 4,
  Disagreement = 5,
  Humor = 6,
  Appreciation = 7,
  NegativeReaction = 8,
  Other = 9,
};

constexpr int kNumActs = 10;

const char* act_name(DiscourseAct a);
DiscourseAct act_from_code(int code);
// Case-insensitive, ignores separators ("Negative Reaction" == negativereaction).
// Unknown strings map to Other and bump *unknown_counter when given.
DiscourseAct act_from_string(const std::string& s, bool* known = nullptr);

struct Comment {
  std::string id;
  std::optional<std::string> parent_id;  // absent for the thread root
  std::string author;
  std::optional<int64_t> timestamp;  // seconds since epoch
  std::string body;
  std::vector<int> tokens;  // vocab indices, filled by tokenize_threads
  std::optional<DiscourseAct> gold_act;

  bool is_root() const { return !parent_id.has_value(); }
};

struct Thread {
  std::string id;
  std::string title;
  std::vector<Comment> comments;  // tree; exactly one root, parents resolve

  const Comment* root() const {
    for (const auto& c : comments)
      if (c.is_root()) return &c;
    return nullptr;
  }
};

// A root-to-leaf path through a thread's reply tree; the unit the sequence
// models consume.
struct Chain {
  std::string thread_id;
  std::vector<const Comment*> comments;  // root first
  size_t length() const { return comments.size(); }
};

struct ParseReport {
  int64_t threads_parsed = 0;
  int64_t comments_kept = 0;
  int64_t orphans_dropped = 0;        // unresolved parent (or unreachable)
  int64_t malformed_lines = 0;        // line skipped entirely
  int64_t threads_without_root = 0;   // skipped
  int64_t unknown_act_strings = 0;    // mapped to Other
  std::vector<std::string> errors;    // "line N: why"
};

// One thread per JSONL line:
// {"id","title","posts":[{"id","in_reply_to","author","created_utc","body","majority_type"}]}
std::vector<Thread> parse_threads(const std::string& path, ParseReport* report = nullptr);
std::vector<Thread> parse_threads_text(const std::string& jsonl, ParseReport* report = nullptr);

// Root-to-leaf paths with length >= min_len; sibling order = input order.
std::vector<Chain> extract_chains(const Thread& thread, size_t min_len);

// Lowercased, split on non-alphanumerics (any non-ASCII byte sequence is
// treated as letters), punctuation-only runs dropped.
std::vector<std::string> tokenize(const std::string& body);

constexpr int kPadIndex = 0;
constexpr int kUnkIndex = 1;
inline const char* kPadToken = "<pad>";
inline const char* kUnkToken = "<unk>";

struct Vocab {
  std::unordered_map<std::string, int> token_to_index;
  std::vector<std::string> index_to_token;  // [0]=<pad>, [1]=<unk>
  std::vector<int64_t> counts;              // corpus frequency per index

  int size() const { return static_cast<int>(index_to_token.size()); }
  int lookup(const std::string& tok) const {
    auto it = token_to_index.find(tok);
    return it == token_to_index.end() ? kUnkIndex : it->second;
  }
};

// Indices by descending corpus frequency, ties broken lexicographically;
// tokens under min_count fold into <unk>.
Vocab build_vocab(const std::vector<Thread>& threads, int64_t min_count);

// Fill every Comment::tokens with vocab indices. The root comment's text is
// the thread title concatenated with its body.
void tokenize_threads(std::vector<Thread>& threads, const Vocab& vocab);

enum class IdfKind { ThreadIdf, CommentIdf };

struct IdfTable {
  IdfKind kind = IdfKind::ThreadIdf;
  std::vector<double> idf;  // by vocab index; absent tokens have 0
  int64_t document_count = 0;

  double lookup(int token_index) const {
    if (token_index < 0 || token_index >= static_cast<int>(idf.size())) return 0.0;
    return idf[token_index];
  }
};

// ThreadIdf: documents are threads. CommentIdf: documents are comments.
// idf = ln(N / df), computed only for tokens that occur.
IdfTable compute_idf(const std::vector<Thread>& threads, const Vocab& vocab, IdfKind kind);

// Pluggable content-word selection (the attention targets use it).
// heuristic: function-word/stopword and pure-number exclusion with a small
// suffix tagger; identity: keep everything.
enum class SelectorKind { Heuristic, Identity };

SelectorKind selector_from_string(const std::string& s);
const char* selector_name(SelectorKind k);

std::vector<int> select_content_words(const Comment& comment, const Vocab& vocab,
                                      SelectorKind selector);

// TSV persistence: vocab as "token\tindex\tcount", idf as "token\tidf".
void save_vocab_tsv(const Vocab& vocab, const std::string& path);
Vocab load_vocab_tsv(const std::string& path);
void save_idf_tsv(const IdfTable& table, const Vocab& vocab, const std::string& path);
IdfTable load_idf_tsv(const Vocab& vocab, IdfKind kind, const std::string& path);

}  // namespace repartee
