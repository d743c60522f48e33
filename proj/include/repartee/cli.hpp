#pragma once

// Command-line front end: one binary, subcommand style.
//
//   ingest        threads JSONL -> corpus directory (vocab, idf tables, chains)
//   embed         corpus -> pretrained word and comment vectors
//   train         corpus -> per-fold, per-length checkpoints + logs
//   evaluate      cross-validated tagging of held-out chains -> metrics
//   tag           one checkpoint over a corpus -> predictions JSONL
//   relevance     attention checkpoint -> per-word relevance JSONL
//   characterize  tagged corpus -> temporal series + user partition
//
// A --config JSON file seeds the defaults; explicit flags override it.

#include <string>
#include <vector>

namespace repartee {

// args = argv without the program name. Returns the process exit code:
// 0 success, 1 usage error, 2 data error, 3 numeric failure.
int run_command(const std::vector<std::string>& args);

}  // namespace repartee
