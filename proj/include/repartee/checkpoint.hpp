#pragma once

// Binary containers for embedding matrices and model checkpoints.
//
// Both formats are little-endian and versioned. Floats are stored as raw
// IEEE-754 f32 so a save/load round trip is bit-exact.
//
// Embedding container ("REMB"):
//   magic[4] version:u32 rows:u64 cols:u64 data:f32[rows*cols] (row-major)
//   plus a sidecar TSV mapping row -> token (or comment id).
//
// Checkpoint ("RCKP"):
//   magic[4] version:u32 header_len:u64 header:json-utf8
//   n_tensors:u64 then per tensor:
//   name_len:u32 name rows:u64 cols:u64 data:f32[rows*cols]

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "repartee/common.hpp"
#include "repartee/paramstore.hpp"
#include "repartee/tensor.hpp"

namespace repartee {

constexpr uint32_t kEmbeddingVersion = 1;
constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_bytes(std::ostream& out, const void* p, size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out) throw DataError("short write to binary stream");
}

inline void read_bytes(std::istream& in, void* p, size_t n) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) throw DataError("truncated binary stream");
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  write_bytes(out, &v, sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
  static_assert(std::is_trivially_copyable_v<T>);
  T v;
  read_bytes(in, &v, sizeof v);
  return v;
}

inline void write_matf(std::ostream& out, const MatF& m) {
  write_pod<uint64_t>(out, static_cast<uint64_t>(m.rows()));
  write_pod<uint64_t>(out, static_cast<uint64_t>(m.cols()));
  write_bytes(out, m.data(), sizeof(float) * static_cast<size_t>(m.size()));
}

inline MatF read_matf(std::istream& in) {
  auto rows = read_pod<uint64_t>(in);
  auto cols = read_pod<uint64_t>(in);
  constexpr uint64_t kMaxElems = uint64_t(1) << 31;  // ~8 GB of f32, sanity cap
  if (rows * cols > kMaxElems) throw DataError("matrix claims implausible size");
  MatF m(static_cast<EIndex>(rows), static_cast<EIndex>(cols));
  read_bytes(in, m.data(), sizeof(float) * static_cast<size_t>(m.size()));
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Embedding container

struct EmbeddingFile {
  MatF vectors;                     // row per item
  std::vector<std::string> labels;  // sidecar: row -> token or comment id
};

inline void save_embeddings(const EmbeddingFile& e, const std::string& path) {
  if (e.vectors.rows() != static_cast<EIndex>(e.labels.size()))
    throw DataError("embedding rows and labels disagree");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write embeddings: " + path);
  detail::write_bytes(out, "REMB", 4);
  detail::write_pod<uint32_t>(out, kEmbeddingVersion);
  detail::write_matf(out, e.vectors);

  std::ofstream side(path + ".tsv");
  if (!side) throw DataError("cannot write embedding sidecar: " + path + ".tsv");
  for (size_t i = 0; i < e.labels.size(); ++i) side << i << '\t' << e.labels[i] << '\n';
  if (!side) throw DataError("short write: " + path + ".tsv");
}

inline EmbeddingFile load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings: " + path);
  char magic[4];
  detail::read_bytes(in, magic, 4);
  if (std::string(magic, 4) != "REMB") throw DataError("not an embedding file: " + path);
  auto version = detail::read_pod<uint32_t>(in);
  if (version != kEmbeddingVersion)
    throw DataError("unsupported embedding version " + std::to_string(version));
  EmbeddingFile e;
  e.vectors = detail::read_matf(in);

  std::ifstream side(path + ".tsv");
  if (!side) throw DataError("missing embedding sidecar: " + path + ".tsv");
  std::string line;
  while (std::getline(side, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("bad sidecar row: " + line);
    e.labels.push_back(line.substr(tab + 1));
  }
  if (e.vectors.rows() != static_cast<EIndex>(e.labels.size()))
    throw DataError("embedding sidecar length mismatch: " + path);
  return e;
}

// ---------------------------------------------------------------------------
// Checkpoint

struct CheckpointHeader {
  std::string arch;         // "mlp" | "seqlstm" | "hlstm" | ... |
  int word_dim = 0;
  int comment_dim = 0;
  int n_classes = 0;
  int chain_len = 0;        // chain length this model was trained at
  int max_words = 0;        // padded words-per-comment (C_max)
  int vocab_size = 0;
  uint64_t seed = 0;
  bool attention = false;
  std::map<std::string, int> dims;  // arch-specific hidden sizes

  nlohmann::json to_json() const {
    nlohmann::json j = {{"arch", arch},         {"word_dim", word_dim},
                        {"comment_dim", comment_dim}, {"n_classes", n_classes},
                        {"chain_len", chain_len},     {"max_words", max_words},
                        {"vocab_size", vocab_size},   {"seed", seed},
                        {"attention", attention}};
    j["dims"] = dims;
    return j;
  }
  static CheckpointHeader from_json(const nlohmann::json& j) {
    CheckpointHeader h;
    h.arch = j.at("arch").get<std::string>();
    h.word_dim = j.at("word_dim").get<int>();
    h.comment_dim = j.at("comment_dim").get<int>();
    h.n_classes = j.at("n_classes").get<int>();
    h.chain_len = j.at("chain_len").get<int>();
    h.max_words = j.at("max_words").get<int>();
    h.vocab_size = j.at("vocab_size").get<int>();
    h.seed = j.at("seed").get<uint64_t>();
    h.attention = j.at("attention").get<bool>();
    if (j.contains("dims"))
      h.dims = j.at("dims").get<std::map<std::string, int>>();
    return h;
  }
};

inline void save_checkpoint(const CheckpointHeader& header, const ParamStore<float>& store,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  detail::write_bytes(out, "RCKP", 4);
  detail::write_pod<uint32_t>(out, kCheckpointVersion);
  std::string hdr = header.to_json().dump();
  detail::write_pod<uint64_t>(out, hdr.size());
  detail::write_bytes(out, hdr.data(), hdr.size());

  auto params = const_cast<ParamStore<float>&>(store).all();  // name-sorted
  detail::write_pod<uint64_t>(out, params.size());
  for (const auto* p : params) {
    detail::write_pod<uint32_t>(out, static_cast<uint32_t>(p->name.size()));
    detail::write_bytes(out, p->name.data(), p->name.size());
    detail::write_matf(out, p->value);
  }
}

struct LoadedCheckpoint {
  CheckpointHeader header;
  std::map<std::string, MatF> tensors;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  detail::read_bytes(in, magic, 4);
  if (std::string(magic, 4) != "RCKP") throw DataError("not a checkpoint file: " + path);
  auto version = detail::read_pod<uint32_t>(in);
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  auto hdr_len = detail::read_pod<uint64_t>(in);
  if (hdr_len > (uint64_t(1) << 20)) throw DataError("checkpoint header implausibly large");
  std::string hdr(hdr_len, '\0');
  detail::read_bytes(in, hdr.data(), hdr_len);

  LoadedCheckpoint ck;
  try {
    ck.header = CheckpointHeader::from_json(nlohmann::json::parse(hdr));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }
  auto n = detail::read_pod<uint64_t>(in);
  for (uint64_t i = 0; i < n; ++i) {
    auto name_len = detail::read_pod<uint32_t>(in);
    if (name_len > 4096) throw DataError("checkpoint tensor name implausibly long");
    std::string name(name_len, '\0');
    detail::read_bytes(in, name.data(), name_len);
    ck.tensors[name] = detail::read_matf(in);
  }
  return ck;
}

// Copy loaded tensors into an existing store. Every store param must be
// present with matching shape; extra tensors in the file are an error too —
// silent drift between writer and reader is how checkpoints rot.
inline void restore_into(const LoadedCheckpoint& ck, ParamStore<float>& store) {
  size_t matched = 0;
  for (auto* p : store.all()) {
    auto it = ck.tensors.find(p->name);
    if (it == ck.tensors.end())
      throw DataError("checkpoint missing tensor: " + p->name);
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols())
      throw DataError("checkpoint tensor " + p->name + " shape mismatch");
    p->value = it->second;
    ++matched;
  }
  if (matched != ck.tensors.size())
    throw DataError("checkpoint has " + std::to_string(ck.tensors.size() - matched) +
                    " unexpected extra tensors");
}

}  // namespace repartee
