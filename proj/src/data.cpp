#include "tf4ctr/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

namespace tf4ctr {

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::int32_t> Dataset::vocab_sizes() const {
  std::vector<std::int32_t> sizes;
  sizes.reserve(vocabs.size());
  for (const auto& v : vocabs) sizes.push_back(v.size());
  return sizes;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

RawTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_line(line, ',');
  int label_col = -1;
  int user_col = -1;
  RawTable table;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = trim(header[i]);
    if (name == "label") {
      label_col = int(i);
    } else if (name == "user_id") {
      user_col = int(i);
    } else {
      table.field_names.push_back(name);
    }
  }
  if (label_col < 0) throw DataError("CSV header has no 'label' column: " + path.string());
  if (table.field_names.empty()) throw DataError("CSV has no feature columns: " + path.string());

  std::unordered_map<std::string, std::int64_t> user_index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line, ',');
    if (cells.size() != header.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(header.size()) + " cells, got " +
                      std::to_string(cells.size()));
    std::vector<std::string> row;
    row.reserve(table.field_names.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (int(i) == label_col) {
        const std::string v = trim(cells[i]);
        if (v == "0") {
          table.labels.push_back(0);
        } else if (v == "1") {
          table.labels.push_back(1);
        } else {
          throw DataError(path.string() + ":" + std::to_string(line_no) +
                          ": label must be 0 or 1, got '" + v + "'");
        }
      } else if (int(i) == user_col) {
        const std::string v = trim(cells[i]);
        auto [it, inserted] = user_index.emplace(v, std::int64_t(user_index.size()));
        (void)inserted;
        table.user_ids.push_back(it->second);
      } else {
        row.push_back(trim(cells[i]));
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv(const std::filesystem::path& path, const RawTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV file: " + path.string());
  const bool with_user = !table.user_ids.empty();
  for (std::size_t i = 0; i < table.field_names.size(); ++i)
    out << table.field_names[i] << ',';
  out << "label";
  if (with_user) out << ",user_id";
  out << '\n';
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (const auto& cell : table.rows[r]) out << cell << ',';
    out << int(table.labels[r]);
    if (with_user) out << ',' << table.user_ids[r];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Numeric discretization
// ---------------------------------------------------------------------------

std::int64_t discretize_numeric(double x) {
  if (!std::isfinite(x)) throw DataError("discretize_numeric: non-finite input");
  if (!(x > 2.0)) return 1;
  const double l = std::log2(x);
  return std::int64_t(std::floor(l * l));
}

void discretize_fields(RawTable& table, const std::vector<std::string>& fields) {
  for (const auto& name : fields) {
    auto it = std::find(table.field_names.begin(), table.field_names.end(), name);
    if (it == table.field_names.end())
      throw DataError("discretize_fields: unknown field '" + name + "'");
    const std::size_t col = std::size_t(it - table.field_names.begin());
    for (auto& row : table.rows) {
      char* end = nullptr;
      const double v = std::strtod(row[col].c_str(), &end);
      if (end == row[col].c_str() || *end != '\0')
        throw DataError("discretize_fields: non-numeric cell '" + row[col] + "' in field '" +
                        name + "'");
      row[col] = std::to_string(discretize_numeric(v));
    }
  }
}

void derive_user_ids(RawTable& table, const std::string& field_name) {
  auto it = std::find(table.field_names.begin(), table.field_names.end(), field_name);
  if (it == table.field_names.end())
    throw DataError("user field not found: '" + field_name + "'");
  const std::size_t col = std::size_t(it - table.field_names.begin());
  std::unordered_map<std::string, std::int64_t> index;
  table.user_ids.clear();
  table.user_ids.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    auto [pos, inserted] = index.emplace(row[col], std::int64_t(index.size()));
    (void)inserted;
    table.user_ids.push_back(pos->second);
  }
}

// ---------------------------------------------------------------------------
// Vocabularies
// ---------------------------------------------------------------------------

std::vector<FieldVocab> build_vocabs(const RawTable& train, int min_frequency) {
  if (min_frequency < 1) throw ConfigError("min_frequency must be >= 1");
  if (train.size() == 0) throw DataError("build_vocabs: empty training split");

  const std::size_t f = train.field_names.size();
  std::vector<std::unordered_map<std::string, int>> counts(f);
  for (const auto& row : train.rows)
    for (std::size_t i = 0; i < f; ++i) ++counts[i][row[i]];

  std::vector<FieldVocab> vocabs(f);
  for (std::size_t i = 0; i < f; ++i) {
    vocabs[i].name = train.field_names[i];
    vocabs[i].tokens.push_back(FieldVocab::kOovToken);
    vocabs[i].to_index.emplace(FieldVocab::kOovToken, FieldVocab::kOov);
  }
  // Stable ids: first appearance order over the training rows.
  for (const auto& row : train.rows) {
    for (std::size_t i = 0; i < f; ++i) {
      const std::string& tok = row[i];
      if (counts[i][tok] < min_frequency) continue;
      auto [it, inserted] = vocabs[i].to_index.emplace(tok, vocabs[i].size());
      (void)it;
      if (inserted) vocabs[i].tokens.push_back(tok);
    }
  }
  return vocabs;
}

Dataset encode(const RawTable& table, const std::vector<FieldVocab>& vocabs) {
  if (table.field_names.size() != vocabs.size())
    throw DataError("encode: field count does not match vocabulary count");
  Dataset ds;
  ds.vocabs = vocabs;
  ds.labels = table.labels;
  ds.user_ids = table.user_ids;
  ds.ids.resize(Eigen::Index(table.size()), Eigen::Index(vocabs.size()));
  for (std::size_t r = 0; r < table.size(); ++r)
    for (std::size_t i = 0; i < vocabs.size(); ++i)
      ds.ids(Eigen::Index(r), Eigen::Index(i)) = vocabs[i].encode(table.rows[r][i]);
  return ds;
}

void save_vocabs(const std::filesystem::path& path, const std::vector<FieldVocab>& vocabs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocab file: " + path.string());
  for (const auto& v : vocabs) {
    for (std::int32_t id = 0; id < v.size(); ++id) {
      if (v.tokens[std::size_t(id)].find('\t') != std::string::npos)
        throw DataError("vocab token contains a tab: field '" + v.name + "'");
      out << v.name << '\t' << v.tokens[std::size_t(id)] << '\t' << id << '\n';
    }
  }
}

std::vector<FieldVocab> load_vocabs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocab file: " + path.string());
  std::vector<FieldVocab> vocabs;
  std::unordered_map<std::string, std::size_t> field_index;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line, '\t');
    if (cells.size() != 3) throw DataError("malformed vocab line: " + line);
    auto [it, inserted] = field_index.emplace(cells[0], vocabs.size());
    if (inserted) {
      vocabs.emplace_back();
      vocabs.back().name = cells[0];
    }
    FieldVocab& v = vocabs[it->second];
    const std::int32_t id = std::int32_t(std::stol(cells[2]));
    if (id != v.size()) throw DataError("vocab ids out of order in " + path.string());
    v.tokens.push_back(cells[1]);
    v.to_index.emplace(cells[1], id);
  }
  for (const auto& v : vocabs)
    if (v.size() == 0 || v.tokens[0] != FieldVocab::kOovToken)
      throw DataError("vocab for field '" + v.name + "' lacks the reserved OOV entry");
  return vocabs;
}

// ---------------------------------------------------------------------------
// Splits and batches
// ---------------------------------------------------------------------------

SplitIndices split_indices(int n, const std::array<double, 3>& ratios,
                           SplitStrategy strategy, std::uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  int nonzero = 0;
  for (double r : ratios)
    if (r > 0) ++nonzero;
  if (n < nonzero) throw DataError("split: fewer rows than splits");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  if (strategy == SplitStrategy::Random) {
    Rng rng = Rng(seed).stream("split");
    rng.shuffle(order);
  }
  const int b1 = int(std::llround(ratios[0] * n));
  const int b2 = std::max(b1, int(std::llround((ratios[0] + ratios[1]) * n)));
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + b1);
  out.valid.assign(order.begin() + b1, order.begin() + b2);
  out.test.assign(order.begin() + b2, order.end());
  return out;
}

RawTable take(const RawTable& table, const std::vector<int>& rows) {
  RawTable out;
  out.field_names = table.field_names;
  out.rows.reserve(rows.size());
  out.labels.reserve(rows.size());
  for (int r : rows) {
    out.rows.push_back(table.rows[std::size_t(r)]);
    out.labels.push_back(table.labels[std::size_t(r)]);
    if (!table.user_ids.empty()) out.user_ids.push_back(table.user_ids[std::size_t(r)]);
  }
  return out;
}

Dataset take(const Dataset& dataset, const std::vector<int>& rows) {
  Dataset out;
  out.vocabs = dataset.vocabs;
  out.ids.resize(Eigen::Index(rows.size()), dataset.fields());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.ids.row(Eigen::Index(i)) = dataset.ids.row(rows[i]);
    out.labels.push_back(dataset.labels[std::size_t(rows[i])]);
    if (!dataset.user_ids.empty())
      out.user_ids.push_back(dataset.user_ids[std::size_t(rows[i])]);
  }
  return out;
}

BatchStream::BatchStream(const Dataset& dataset, int batch_size, bool shuffle, Rng rng)
    : dataset_(&dataset), batch_size_(batch_size) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  order_.resize(std::size_t(dataset.rows()));
  std::iota(order_.begin(), order_.end(), 0);
  if (shuffle) rng.shuffle(order_);
}

bool BatchStream::next(Batch& out) {
  if (cursor_ >= order_.size()) return false;
  const std::size_t end = std::min(cursor_ + std::size_t(batch_size_), order_.size());
  const Eigen::Index n = Eigen::Index(end - cursor_);
  out.ids.resize(n, dataset_->fields());
  out.labels.resize(std::size_t(n));
  out.user_ids.clear();
  const bool with_user = !dataset_->user_ids.empty();
  if (with_user) out.user_ids.resize(std::size_t(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int r = order_[cursor_ + std::size_t(i)];
    out.ids.row(i) = dataset_->ids.row(r);
    out.labels[std::size_t(i)] = dataset_->labels[std::size_t(r)];
    if (with_user) out.user_ids[std::size_t(i)] = dataset_->user_ids[std::size_t(r)];
  }
  cursor_ = end;
  return true;
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

SynthData synth_generate(const SynthSpec& spec) {
  if (spec.n < 0) throw ConfigError("synth: n must be >= 0");
  if (spec.fields < 1 || spec.vocab_per_field < 1)
    throw ConfigError("synth: fields and vocab_per_field must be >= 1");
  if (spec.hard_fraction < 0.0 || spec.hard_fraction > 1.0)
    throw ConfigError("synth: hard_fraction must be in [0, 1]");

  const Rng root(spec.seed);
  Rng weight_rng = root.stream("weights");
  Rng id_rng = root.stream("ids");
  Rng mask_rng = root.stream("mask");
  Rng label_rng = root.stream("labels");

  SynthData out;
  out.bias = spec.bias;
  out.weights.resize(std::size_t(spec.fields));
  for (auto& field : out.weights) {
    field.resize(std::size_t(spec.vocab_per_field));
    for (auto& w : field) w = weight_rng.uniform(-spec.weight_scale, spec.weight_scale);
  }

  out.table.field_names.reserve(std::size_t(spec.fields));
  for (int i = 0; i < spec.fields; ++i) out.table.field_names.push_back("f" + std::to_string(i));

  // Exactly round(n * hard_fraction) rows are flipped; the mask is drawn from
  // a uniformly random subset.
  const int n_hard = int(std::llround(double(spec.n) * spec.hard_fraction));
  std::vector<int> perm(static_cast<std::size_t>(spec.n));
  std::iota(perm.begin(), perm.end(), 0);
  mask_rng.shuffle(perm);
  out.hard_mask.assign(std::size_t(spec.n), 0);
  for (int i = 0; i < n_hard; ++i) out.hard_mask[std::size_t(perm[std::size_t(i)])] = 1;

  out.table.rows.reserve(std::size_t(spec.n));
  out.table.labels.reserve(std::size_t(spec.n));
  out.planted_logits.reserve(std::size_t(spec.n));
  for (int r = 0; r < spec.n; ++r) {
    std::vector<std::string> row(std::size_t(spec.fields));
    double logit = spec.bias;
    for (int i = 0; i < spec.fields; ++i) {
      const int tok = int(id_rng.below(std::uint64_t(spec.vocab_per_field)));
      row[std::size_t(i)] = "v" + std::to_string(tok);
      logit += out.weights[std::size_t(i)][std::size_t(tok)];
    }
    out.planted_logits.push_back(logit);
    const double effective = out.hard_mask[std::size_t(r)] ? -logit : logit;
    const double p = 1.0 / (1.0 + std::exp(-effective));
    out.table.labels.push_back(label_rng.uniform() < p ? 1 : 0);
    out.table.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace tf4ctr
