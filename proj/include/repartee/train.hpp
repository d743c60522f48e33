#pragma once

// Training protocol: stratified k-fold assignment, length bucketing with a
// per-bucket padded comment width, padded sample construction, and the
// fold-parallel / bucket-sequential training loop with weight transfer
// between consecutive buckets.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "repartee/checkpoint.hpp"
#include "repartee/corpus.hpp"
#include "repartee/models.hpp"
#include "repartee/paramstore.hpp"

namespace repartee {

// --- fold assignment --------------------------------------------------------

struct FoldPlan {
  int k = 0;
  std::vector<int> fold_of;    // chain index -> fold in [0, k)
  std::vector<int> strat_key;  // chain index -> stratum key after merging
  int merged_strata = 0;       // strata folded into a neighbor for being < k
};

// Stratified assignment, key = chain length (or the first comment's act when
// by_first_label). Strata smaller than k merge into the nearest key so every
// stratum can spread over all folds; per-key fold counts differ by at most 1.
FoldPlan make_folds(const std::vector<Chain>& chains, int k, uint64_t seed,
                    bool by_first_label = false);

void save_fold_plan_json(const FoldPlan& plan, const std::string& path);
FoldPlan load_fold_plan_json(const std::string& path);

// --- length buckets ---------------------------------------------------------

struct Bucket {
  int length = 0;                 // every member chain has exactly this length
  int c_max = 1;                  // padded comment width for this bucket
  std::vector<size_t> chain_idx;  // indices into the chain list
};

// One bucket per occurring chain length, ascending. c_max is the given
// percentile of member comment word counts (nearest-rank), capped and never
// below 1.
std::vector<Bucket> bucket_by_length(const std::vector<Chain>& chains,
                                     double percentile = 0.95, int cap = 120);

// --- sample construction ----------------------------------------------------

// Everything a padded sample may need besides the chain itself. Word models
// need the vocabulary; attention variants add static embeddings + idf tables;
// vector models (mlp, seqlstm) need pretrained comment vectors instead.
struct SampleInputs {
  const Vocab* vocab = nullptr;
  const MatF* static_words = nullptr;
  const IdfTable* thread_idf = nullptr;
  const IdfTable* comment_idf = nullptr;
  SelectorKind selector = SelectorKind::Heuristic;
  const EmbeddingFile* comment_vecs = nullptr;
  // Optional label -> row index; avoids a linear scan per comment lookup.
  const std::unordered_map<std::string, int>* comment_index = nullptr;
};

// Row index over an embedding file's labels for O(1) lookups.
std::unordered_map<std::string, int> build_label_index(const EmbeddingFile& e);

// Pads/truncates each comment to c_max token positions. A comment with no
// tokens keeps one live PAD position so every comment drives at least one
// step. The chain's first element has no parent, so its parent target is
// zero; every comment's first-target summarizes the thread root.
ChainSample<float> make_sample(const Chain& chain, int c_max, Arch arch,
                               const SampleInputs& in);

// Inverse-frequency class weights over the labeled comments of the given
// chains, normalized to mean 1 over the classes present; classes with no
// examples get weight 1 (they never enter a training loss). Disabled -> all
// ones.
VecF inverse_frequency_weights(const std::vector<const Chain*>& chains, int n_classes,
                               bool enabled);

// --- the run ----------------------------------------------------------------

struct TrainSettings {
  Arch arch = Arch::Hlstm;
  int folds = 5;
  int epochs = 20;        // per bucket
  int patience = 3;       // epochs without val-loss improvement before stopping
  int batch_size = 32;    // chains per optimizer step
  double cmax_percentile = 0.95;
  int cmax_cap = 120;
  bool class_weights = true;
  bool deterministic = false;  // force a single worker thread
  int max_threads = 0;         // 0 = hardware count; env cap applied on top
  uint64_t seed = 1;
  AdamConfig adam;
  std::string out_dir;     // checkpoints + logs land here
  ModelConfig model;       // dimension template; per-bucket fields filled in
};

struct EpochRow {
  int fold = 0;
  int bucket_len = 0;
  int epoch = 0;
  double loss = 0;
  double train_acc = 0;
  double val_loss = 0;  // NaN when the fold has no validation chains
  double val_f1 = 0;
};

struct TrainRunResult {
  std::vector<EpochRow> log;
  // (fold, chain length) -> checkpoint path, written as
  // {arch}.fold{f}.len{l}.ckpt inside out_dir.
  std::map<std::pair<int, int>, std::string> checkpoints;
};

// Trains every fold (in parallel when allowed), each fold walking the buckets
// in ascending length and carrying weights forward: tensors with matching
// names and shapes copy bitwise; the attention score table copies its
// overlapping leading rows. Throws NumericError with a batch diagnostic if a
// loss turns non-finite.
TrainRunResult train_run(const std::vector<Chain>& chains, const FoldPlan& plan,
                         const std::vector<Bucket>& buckets, const SampleInputs& inputs,
                         const TrainSettings& cfg);

// `fold,bucket_len,epoch,loss,train_acc,val_loss,val_f1` rows.
void save_training_log_csv(const std::vector<EpochRow>& rows, const std::string& path);

// Copy values from a previous model where shapes allow; returns the number of
// tensors copied in full (the score table counts when any rows transfer).
int transfer_weights(const ParamStore<float>& from, ParamStore<float>& to);

// Worker count honoring settings, hardware, and the DISCOURSE_CHAIN_THREADS
// environment cap.
int resolve_thread_count(const TrainSettings& cfg, int jobs);

}  // namespace repartee
