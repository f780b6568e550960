#pragma once

#include "tf4ctr/rng.hpp"
#include "tf4ctr/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace tf4ctr {

// Per-field token dictionary. Id 0 is always the shared OOV token; retained
// tokens get dense ids in first-appearance order.
struct FieldVocab {
  static constexpr std::int32_t kOov = 0;
  static constexpr const char* kOovToken = "<OOV>";

  std::string name;
  std::vector<std::string> tokens;  // index -> token; tokens[0] == kOovToken
  std::unordered_map<std::string, std::int32_t> to_index;

  std::int32_t size() const { return std::int32_t(tokens.size()); }

  // Unseen tokens fold to OOV, so encoded ids are always in range.
  std::int32_t encode(const std::string& token) const {
    auto it = to_index.find(token);
    return it == to_index.end() ? kOov : it->second;
  }
};

// Raw string table as read from CSV: rows of per-field tokens plus labels.
struct RawTable {
  std::vector<std::string> field_names;
  std::vector<std::vector<std::string>> rows;  // n x f tokens
  std::vector<std::int8_t> labels;
  std::vector<std::int64_t> user_ids;  // empty when no user_id column

  std::size_t size() const { return rows.size(); }
};

struct Dataset {
  std::vector<FieldVocab> vocabs;
  IdMat ids;  // n x f
  std::vector<std::int8_t> labels;
  std::vector<std::int64_t> user_ids;  // empty when absent

  Eigen::Index rows() const { return ids.rows(); }
  Eigen::Index fields() const { return ids.cols(); }
  std::vector<std::int32_t> vocab_sizes() const;
};

struct Batch {
  IdMat ids;
  std::vector<std::int8_t> labels;
  std::vector<std::int64_t> user_ids;

  Eigen::Index rows() const { return ids.rows(); }
};

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

// UTF-8, comma-separated, header required. One column must be named "label"
// with values in {0,1}; an optional "user_id" column provides gAUC groups.
// No quoting support: cells must not contain commas.
RawTable read_csv(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const RawTable& table);

// Numeric bucketing: floor((log2 x)^2) for x > 2, else 1.
std::int64_t discretize_numeric(double x);

// Replaces the named columns with discretized tokens, parsing cells as reals.
void discretize_fields(RawTable& table, const std::vector<std::string>& fields);

// Fills user_ids from a feature field's raw tokens (dense first-appearance
// numbering), for datasets whose grouping key is an ordinary field.
void derive_user_ids(RawTable& table, const std::string& field_name);

// Token frequencies are counted on the given (training) rows only; tokens
// seen fewer than min_frequency times fold into the OOV id.
std::vector<FieldVocab> build_vocabs(const RawTable& train, int min_frequency);

Dataset encode(const RawTable& table, const std::vector<FieldVocab>& vocabs);

// Sidecar with one line per (field, token, id) for reproducible re-encoding.
void save_vocabs(const std::filesystem::path& path, const std::vector<FieldVocab>& vocabs);
std::vector<FieldVocab> load_vocabs(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Splits and batches
// ---------------------------------------------------------------------------

enum class SplitStrategy { Random, TimeOrdered };

struct SplitIndices {
  std::vector<int> train, valid, test;
};

// Disjoint and exhaustive. Random shuffles with the seed then slices;
// TimeOrdered slices in row order. Ratios must sum to 1 within 1e-9.
SplitIndices split_indices(int n, const std::array<double, 3>& ratios,
                           SplitStrategy strategy, std::uint64_t seed);

RawTable take(const RawTable& table, const std::vector<int>& rows);
Dataset take(const Dataset& dataset, const std::vector<int>& rows);

// Single-epoch batch iterator. Shuffling consumes the rng passed in, so the
// caller derives a per-epoch sub-stream for multi-epoch training.
class BatchStream {
 public:
  BatchStream(const Dataset& dataset, int batch_size, bool shuffle, Rng rng);

  // Fills `out` and returns true until the epoch is exhausted. The last batch
  // may be short.
  bool next(Batch& out);

 private:
  const Dataset* dataset_;
  std::vector<int> order_;
  int batch_size_;
  std::size_t cursor_ = 0;
};

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

// Planted logistic model over one-hot fields: labels are drawn from
// sigmoid(sum of per-token weights + bias). A hard_fraction of rows has the
// planted logit sign-flipped before label sampling, which makes those rows
// label-inconsistent with their features.
struct SynthSpec {
  int n = 0;
  int fields = 5;
  int vocab_per_field = 50;
  double hard_fraction = 0.0;
  double weight_scale = 3.0;  // per-token weights ~ U(-scale, scale)
  double bias = 0.0;
  std::uint64_t seed = 0;
};

struct SynthData {
  RawTable table;
  std::vector<std::vector<double>> weights;  // per field, per token id
  double bias = 0.0;
  std::vector<std::uint8_t> hard_mask;       // exactly round(n * hard_fraction) ones
  std::vector<double> planted_logits;        // pre-flip logit per row
};

SynthData synth_generate(const SynthSpec& spec);

}  // namespace tf4ctr
