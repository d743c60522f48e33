#pragma once

// Every tunable the pipeline exposes, with its default value, plus JSON
// round-tripping. A copy of the effective configuration is written next to
// every set of outputs so any run can be reproduced from its directory alone.

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "repartee/common.hpp"

namespace repartee {

struct RunConfig {
  // architecture & dimensions
  std::string arch = "hlstm-attn";
  int word_dim = 150;
  int comment_dim = 700;
  int lstm1_hidden = 150;
  int lstm2_hidden = 200;
  int comment_lstm_hidden = 200;
  int mlp_h1 = 300;
  int mlp_h2 = 100;
  int cnn_channels = 64;

  // corpus construction
  int64_t min_count = 5;     // vocabulary frequency floor
  int min_chain_len = 2;     // shortest root-to-leaf path kept
  std::string selector = "heuristic";  // content-word selection for targets

  // embedding pretraining
  int embed_window = 5;
  int embed_negatives = 5;
  int embed_epochs = 5;
  double embed_lr = 0.025;

  // training protocol
  int folds = 5;
  int epochs = 20;
  int patience = 3;
  int batch_size = 32;
  double lr = 1e-3;
  double cmax_percentile = 0.95;
  int cmax_cap = 120;
  bool class_weights = true;
  bool deterministic = false;
  int max_threads = 0;  // 0 = hardware count
  uint64_t seed = 1;

  // discussion characterization
  int64_t window_seconds = 86400;
  bool humor_negative = true;
  int exact_limit = 20;   // largest user count still partitioned exhaustively
  int partition_restarts = 10;

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"arch", arch},
        {"word_dim", word_dim},
        {"comment_dim", comment_dim},
        {"lstm1_hidden", lstm1_hidden},
        {"lstm2_hidden", lstm2_hidden},
        {"comment_lstm_hidden", comment_lstm_hidden},
        {"mlp_h1", mlp_h1},
        {"mlp_h2", mlp_h2},
        {"cnn_channels", cnn_channels},
        {"min_count", min_count},
        {"min_chain_len", min_chain_len},
        {"selector", selector},
        {"embed_window", embed_window},
        {"embed_negatives", embed_negatives},
        {"embed_epochs", embed_epochs},
        {"embed_lr", embed_lr},
        {"folds", folds},
        {"epochs", epochs},
        {"patience", patience},
        {"batch_size", batch_size},
        {"lr", lr},
        {"cmax_percentile", cmax_percentile},
        {"cmax_cap", cmax_cap},
        {"class_weights", class_weights},
        {"deterministic", deterministic},
        {"max_threads", max_threads},
        {"seed", seed},
        {"window_seconds", window_seconds},
        {"humor_negative", humor_negative},
        {"exact_limit", exact_limit},
        {"partition_restarts", partition_restarts},
    };
  }

  // Missing keys keep their defaults, so partial files are valid overrides.
  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    c.arch = j.value("arch", c.arch);
    c.word_dim = j.value("word_dim", c.word_dim);
    c.comment_dim = j.value("comment_dim", c.comment_dim);
    c.lstm1_hidden = j.value("lstm1_hidden", c.lstm1_hidden);
    c.lstm2_hidden = j.value("lstm2_hidden", c.lstm2_hidden);
    c.comment_lstm_hidden = j.value("comment_lstm_hidden", c.comment_lstm_hidden);
    c.mlp_h1 = j.value("mlp_h1", c.mlp_h1);
    c.mlp_h2 = j.value("mlp_h2", c.mlp_h2);
    c.cnn_channels = j.value("cnn_channels", c.cnn_channels);
    c.min_count = j.value("min_count", c.min_count);
    c.min_chain_len = j.value("min_chain_len", c.min_chain_len);
    c.selector = j.value("selector", c.selector);
    c.embed_window = j.value("embed_window", c.embed_window);
    c.embed_negatives = j.value("embed_negatives", c.embed_negatives);
    c.embed_epochs = j.value("embed_epochs", c.embed_epochs);
    c.embed_lr = j.value("embed_lr", c.embed_lr);
    c.folds = j.value("folds", c.folds);
    c.epochs = j.value("epochs", c.epochs);
    c.patience = j.value("patience", c.patience);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.cmax_percentile = j.value("cmax_percentile", c.cmax_percentile);
    c.cmax_cap = j.value("cmax_cap", c.cmax_cap);
    c.class_weights = j.value("class_weights", c.class_weights);
    c.deterministic = j.value("deterministic", c.deterministic);
    c.max_threads = j.value("max_threads", c.max_threads);
    c.seed = j.value("seed", c.seed);
    c.window_seconds = j.value("window_seconds", c.window_seconds);
    c.humor_negative = j.value("humor_negative", c.humor_negative);
    c.exact_limit = j.value("exact_limit", c.exact_limit);
    c.partition_restarts = j.value("partition_restarts", c.partition_restarts);
    return c;
  }
};

inline void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write config: " + path);
  out << cfg.to_json().dump(2) << '\n';
  if (!out) throw DataError("short write: " + path);
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad config JSON in " + path + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

}  // namespace repartee
