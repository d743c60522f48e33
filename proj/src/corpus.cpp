#include "repartee/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace repartee {

using json = nlohmann::json;

namespace {

const std::array<const char*, kNumActs> kActNames = {
    "Question",     "Answer",       "Announcement", "Elaboration",      "Agreement",
    "Disagreement", "Humor",        "Appreciation", "NegativeReaction", "Other"};

// Lowercased act name with separators stripped, for forgiving matching.
std::string act_key(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (std::isalpha(static_cast<unsigned char>(ch)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

}  // namespace

const char* act_name(DiscourseAct a) { return kActNames[static_cast<int>(a)]; }

DiscourseAct act_from_code(int code) {
  if (code < 0 || code >= kNumActs)
    throw DataError("discourse act code out of range: " + std::to_string(code));
  return static_cast<DiscourseAct>(code);
}

DiscourseAct act_from_string(const std::string& s, bool* known) {
  static const std::unordered_map<std::string, DiscourseAct> table = [] {
    std::unordered_map<std::string, DiscourseAct> t;
    for (int i = 0; i < kNumActs; ++i)
      t[act_key(kActNames[i])] = static_cast<DiscourseAct>(i);
    // A few aliases seen in annotation exports.
    t["negative"] = DiscourseAct::NegativeReaction;
    t["positive"] = DiscourseAct::Appreciation;
    return t;
  }();
  auto it = table.find(act_key(s));
  if (it == table.end()) {
    if (known) *known = false;
    return DiscourseAct::Other;
  }
  if (known) *known = true;
  return it->second;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

// Build one Thread from a parsed JSON object. Throws DataError on
// structurally hopeless input; softer problems go through the report.
Thread thread_from_json(const json& j, ParseReport* report) {
  Thread t;
  t.id = j.value("id", "");
  if (t.id.empty()) throw DataError("thread missing id");
  t.title = j.value("title", "");
  if (!j.contains("posts") || !j["posts"].is_array())
    throw DataError("thread " + t.id + " has no posts array");

  std::vector<Comment> raw;
  for (const auto& p : j["posts"]) {
    if (!p.is_object() || !p.contains("id")) {
      if (report) ++report->malformed_lines;
      continue;
    }
    Comment c;
    c.id = p["id"].get<std::string>();
    if (p.contains("in_reply_to") && !p["in_reply_to"].is_null())
      c.parent_id = p["in_reply_to"].get<std::string>();
    c.author = p.value("author", "");
    if (p.contains("created_utc") && p["created_utc"].is_number())
      c.timestamp = p["created_utc"].get<int64_t>();
    c.body = p.value("body", "");
    if (p.contains("majority_type") && !p["majority_type"].is_null()) {
      bool known = true;
      c.gold_act = act_from_string(p["majority_type"].get<std::string>(), &known);
      if (!known && report) ++report->unknown_act_strings;
    }
    raw.push_back(std::move(c));
  }

  // Keep only comments reachable from the root; a reply whose parent was
  // dropped goes with it (cascade).
  std::unordered_map<std::string, size_t> by_id;
  for (size_t i = 0; i < raw.size(); ++i) by_id.emplace(raw[i].id, i);

  std::vector<char> reachable(raw.size(), 0);
  // Roots first.
  size_t root_count = 0;
  for (size_t i = 0; i < raw.size(); ++i) {
    if (!raw[i].parent_id) {
      reachable[i] = 1;
      ++root_count;
    }
  }
  if (root_count == 0) {
    if (report) ++report->threads_without_root;
    throw DataError("thread " + t.id + " has no root comment");
  }
  // Propagate reachability in input order until stable (trees are shallow;
  // this converges in depth iterations).
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < raw.size(); ++i) {
      if (reachable[i] || !raw[i].parent_id) continue;
      auto it = by_id.find(*raw[i].parent_id);
      if (it != by_id.end() && reachable[it->second]) {
        reachable[i] = 1;
        changed = true;
      }
    }
  }

  for (size_t i = 0; i < raw.size(); ++i) {
    if (reachable[i])
      t.comments.push_back(std::move(raw[i]));
    else if (report)
      ++report->orphans_dropped;
  }
  if (report) report->comments_kept += static_cast<int64_t>(t.comments.size());
  return t;
}

std::vector<Thread> parse_stream(std::istream& in, ParseReport* report) {
  std::vector<Thread> threads;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // Tolerate whitespace-only lines.
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      threads.push_back(thread_from_json(j, report));
      if (report) ++report->threads_parsed;
    } catch (const json::exception& e) {
      if (report) {
        ++report->malformed_lines;
        report->errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
      }
    } catch (const DataError& e) {
      if (report) {
        ++report->malformed_lines;
        report->errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  if (threads.empty()) throw DataError("no parseable threads in input");
  return threads;
}

}  // namespace

std::vector<Thread> parse_threads(const std::string& path, ParseReport* report) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open threads file: " + path);
  return parse_stream(in, report);
}

std::vector<Thread> parse_threads_text(const std::string& jsonl, ParseReport* report) {
  std::istringstream in(jsonl);
  return parse_stream(in, report);
}

// ---------------------------------------------------------------------------
// Chains

std::vector<Chain> extract_chains(const Thread& thread, size_t min_len) {
  // children[i] = comment indices replying to comment i, in input order.
  std::unordered_map<std::string, size_t> by_id;
  for (size_t i = 0; i < thread.comments.size(); ++i)
    by_id.emplace(thread.comments[i].id, i);

  std::vector<std::vector<size_t>> children(thread.comments.size());
  std::vector<size_t> roots;
  for (size_t i = 0; i < thread.comments.size(); ++i) {
    const auto& c = thread.comments[i];
    if (!c.parent_id) {
      roots.push_back(i);
      continue;
    }
    auto it = by_id.find(*c.parent_id);
    if (it != by_id.end()) children[it->second].push_back(i);
  }

  std::vector<Chain> chains;
  // Iterative DFS keeping the current path. Stack entries are (node,
  // child-cursor); pushing a node appends it to the path, exhausting its
  // cursor pops it.
  for (size_t root : roots) {
    std::vector<std::pair<size_t, size_t>> stack;
    std::vector<size_t> path;
    stack.emplace_back(root, 0);
    path.push_back(root);
    while (!stack.empty()) {
      auto& [node, cursor] = stack.back();
      if (cursor < children[node].size()) {
        size_t next = children[node][cursor++];
        stack.emplace_back(next, 0);
        path.push_back(next);
      } else {
        if (children[node].empty() && path.size() >= min_len) {
          Chain chain;
          chain.thread_id = thread.id;
          for (size_t idx : path) chain.comments.push_back(&thread.comments[idx]);
          chains.push_back(std::move(chain));
        }
        stack.pop_back();
        path.pop_back();
      }
    }
  }
  return chains;
}

// ---------------------------------------------------------------------------
// Tokenization

std::vector<std::string> tokenize(const std::string& body) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char ch : body) {
    bool wordy = std::isalnum(ch) || ch >= 0x80;  // non-ASCII bytes stay in-token
    if (wordy) {
      cur.push_back(ch < 0x80 ? static_cast<char>(std::tolower(ch))
                              : static_cast<char>(ch));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocab build_vocab(const std::vector<Thread>& threads, int64_t min_count) {
  std::unordered_map<std::string, int64_t> freq;
  int64_t unk_mass = 0;
  for (const auto& t : threads) {
    for (const auto& c : t.comments) {
      std::string text = c.is_root() ? t.title + " " + c.body : c.body;
      for (auto& tok : tokenize(text)) ++freq[tok];
    }
  }

  std::vector<std::pair<std::string, int64_t>> kept;
  kept.reserve(freq.size());
  for (auto& [tok, n] : freq) {
    if (n >= min_count)
      kept.emplace_back(tok, n);
    else
      unk_mass += n;
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab v;
  v.index_to_token = {kPadToken, kUnkToken};
  v.counts = {0, unk_mass};
  v.token_to_index[kPadToken] = kPadIndex;
  v.token_to_index[kUnkToken] = kUnkIndex;
  for (auto& [tok, n] : kept) {
    v.token_to_index[tok] = static_cast<int>(v.index_to_token.size());
    v.index_to_token.push_back(tok);
    v.counts.push_back(n);
  }
  return v;
}

void tokenize_threads(std::vector<Thread>& threads, const Vocab& vocab) {
  for (auto& t : threads) {
    for (auto& c : t.comments) {
      std::string text = c.is_root() ? t.title + " " + c.body : c.body;
      c.tokens.clear();
      for (auto& tok : tokenize(text)) c.tokens.push_back(vocab.lookup(tok));
    }
  }
}

// ---------------------------------------------------------------------------
// Idf

IdfTable compute_idf(const std::vector<Thread>& threads, const Vocab& vocab, IdfKind kind) {
  IdfTable table;
  table.kind = kind;
  std::vector<int64_t> df(vocab.size(), 0);
  int64_t n_docs = 0;

  auto count_doc = [&](const std::set<int>& seen) {
    ++n_docs;
    for (int idx : seen) ++df[idx];
  };

  for (const auto& t : threads) {
    std::set<int> thread_seen;
    for (const auto& c : t.comments) {
      if (kind == IdfKind::CommentIdf) {
        std::set<int> comment_seen(c.tokens.begin(), c.tokens.end());
        count_doc(comment_seen);
      } else {
        thread_seen.insert(c.tokens.begin(), c.tokens.end());
      }
    }
    if (kind == IdfKind::ThreadIdf) count_doc(thread_seen);
  }

  if (n_docs == 0) throw DataError("idf: no documents (tokenize first?)");
  table.document_count = n_docs;
  table.idf.assign(vocab.size(), 0.0);
  for (int i = 0; i < vocab.size(); ++i) {
    if (df[i] > 0)
      table.idf[i] = std::log(static_cast<double>(n_docs) / static_cast<double>(df[i]));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Content-word selection

namespace {

// Coarse function-word list: determiners, pronouns, prepositions,
// conjunctions, auxiliaries, common discourse glue. Deliberately small —
// recall on content words matters more than precision on function words.
const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> s = {
      "a",      "an",     "the",    "this",   "that",   "these",  "those",  "some",
      "any",    "no",     "each",   "every",  "either", "neither","both",   "all",
      "i",      "me",     "my",     "mine",   "we",     "us",     "our",    "ours",
      "you",    "your",   "yours",  "he",     "him",    "his",    "she",    "her",
      "hers",   "it",     "its",    "they",   "them",   "their",  "theirs", "who",
      "whom",   "whose",  "which",  "what",   "where",  "when",   "why",    "how",
      "in",     "on",     "at",     "by",     "for",    "with",   "about",  "against",
      "between","into",   "through","during", "before", "after",  "above",  "below",
      "to",     "from",   "up",     "down",   "of",     "off",    "over",   "under",
      "and",    "or",     "but",    "nor",    "so",     "yet",    "if",     "then",
      "else",   "because","as",     "until",  "while",  "than",   "though", "although",
      "be",     "am",     "is",     "are",    "was",    "were",   "been",   "being",
      "have",   "has",    "had",    "having", "do",     "does",   "did",    "doing",
      "will",   "would",  "shall",  "should", "can",    "could",  "may",    "might",
      "must",   "not",    "dont",   "cant",   "wont",   "isnt",   "arent",  "im",
      "ive",    "youre",  "youve",  "hes",    "shes",   "theyre", "thats",  "there",
      "here",   "just",   "very",   "too",    "also",   "only",   "such",
  };
  return s;
}

bool all_digits(const std::string& tok) {
  for (char ch : tok)
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
  return !tok.empty();
}

enum class CoarsePos { Function, Number, Noun, Verb, Adjective, Adverb };

bool ends_with(const std::string& s, const char* suf) {
  size_t n = std::strlen(suf);
  return s.size() >= n && s.compare(s.size() - n, n, suf) == 0;
}

// Suffix-driven coarse tagging. Order matters: the most specific and most
// reliable suffixes first. Defaults to Noun, which keeps unrecognized open
// vocabulary in play.
CoarsePos coarse_tag(const std::string& tok) {
  if (stopwords().count(tok)) return CoarsePos::Function;
  if (all_digits(tok)) return CoarsePos::Number;
  if (tok.size() >= 4 && ends_with(tok, "ly")) return CoarsePos::Adverb;
  if (ends_with(tok, "ous") || ends_with(tok, "ful") || ends_with(tok, "less") ||
      ends_with(tok, "able") || ends_with(tok, "ible") || ends_with(tok, "ive") ||
      ends_with(tok, "ical") || ends_with(tok, "ish"))
    return CoarsePos::Adjective;
  if (ends_with(tok, "ize") || ends_with(tok, "ise") || ends_with(tok, "ify") ||
      ends_with(tok, "ing") || ends_with(tok, "ed"))
    return CoarsePos::Verb;
  return CoarsePos::Noun;
}

}  // namespace

SelectorKind selector_from_string(const std::string& s) {
  if (s == "heuristic") return SelectorKind::Heuristic;
  if (s == "identity") return SelectorKind::Identity;
  throw UsageError("unknown selector: " + s + " (want heuristic|identity)");
}

const char* selector_name(SelectorKind k) {
  return k == SelectorKind::Heuristic ? "heuristic" : "identity";
}

std::vector<int> select_content_words(const Comment& comment, const Vocab& vocab,
                                      SelectorKind selector) {
  if (selector == SelectorKind::Identity) return comment.tokens;
  std::vector<int> out;
  for (int idx : comment.tokens) {
    if (idx == kPadIndex || idx == kUnkIndex) continue;  // nothing to weight
    const std::string& tok = vocab.index_to_token[idx];
    CoarsePos pos = coarse_tag(tok);
    if (pos == CoarsePos::Function || pos == CoarsePos::Number) continue;
    out.push_back(idx);
  }
  return out;
}

// ---------------------------------------------------------------------------
// TSV IO

void save_vocab_tsv(const Vocab& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocab: " + path);
  for (int i = 0; i < vocab.size(); ++i)
    out << vocab.index_to_token[i] << '\t' << i << '\t' << vocab.counts[i] << '\n';
  if (!out) throw DataError("short write: " + path);
}

Vocab load_vocab_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocab: " + path);
  Vocab v;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    int index;
    int64_t count;
    if (!std::getline(ss, tok, '\t') || !(ss >> index >> count))
      throw DataError("vocab " + path + " line " + std::to_string(lineno) + ": bad row");
    if (index != static_cast<int>(v.index_to_token.size()))
      throw DataError("vocab " + path + " line " + std::to_string(lineno) +
                      ": index out of order");
    v.token_to_index[tok] = index;
    v.index_to_token.push_back(tok);
    v.counts.push_back(count);
  }
  if (v.size() < 2 || v.index_to_token[0] != kPadToken || v.index_to_token[1] != kUnkToken)
    throw DataError("vocab " + path + ": missing reserved <pad>/<unk> rows");
  return v;
}

void save_idf_tsv(const IdfTable& table, const Vocab& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write idf: " + path);
  out.precision(17);
  for (int i = 0; i < vocab.size() && i < static_cast<int>(table.idf.size()); ++i) {
    if (table.idf[i] != 0.0)
      out << vocab.index_to_token[i] << '\t' << table.idf[i] << '\n';
  }
  if (!out) throw DataError("short write: " + path);
}

IdfTable load_idf_tsv(const Vocab& vocab, IdfKind kind, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open idf: " + path);
  IdfTable table;
  table.kind = kind;
  table.idf.assign(vocab.size(), 0.0);
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("idf " + path + " line " + std::to_string(lineno) + ": bad row");
    std::string tok = line.substr(0, tab);
    double val = std::stod(line.substr(tab + 1));
    auto it = vocab.token_to_index.find(tok);
    if (it != vocab.token_to_index.end()) table.idf[it->second] = val;
  }
  return table;
}

}  // namespace repartee
