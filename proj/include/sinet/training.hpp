#pragma once

// Training workflow: stratified splitting, dataset encoding, the mini-batch
// Adam loop with validation-MSE early stopping, and evaluation metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sinet/adam.hpp"
#include "sinet/data_io.hpp"
#include "sinet/model.hpp"
#include "sinet/rng.hpp"

namespace sinet {

// ---- metrics ----

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  // Mean absolute percentage error; absent when any |target| is below 1e-9
  // (the ratio is undefined there).  MSE/MAE are always reported.
  std::optional<double> mape;
};

inline Metrics compute_metrics(std::span<const double> predictions,
                               std::span<const double> targets) {
  if (predictions.size() != targets.size())
    throw DimensionError("compute_metrics: " + std::to_string(predictions.size()) +
                         " predictions vs " + std::to_string(targets.size()) + " targets");
  if (predictions.empty()) throw DataError("compute_metrics: empty batch");
  const double n = static_cast<double>(predictions.size());
  Metrics m;
  bool mape_defined = true;
  double mape_acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - targets[i];
    m.mse += e * e;
    m.mae += std::abs(e);
    if (std::abs(targets[i]) < 1e-9)
      mape_defined = false;
    else
      mape_acc += std::abs(e) / std::abs(targets[i]);
  }
  m.mse /= n;
  m.mae /= n;
  if (mape_defined) m.mape = 100.0 * mape_acc / n;
  return m;
}

// ---- stratified split ----

struct SplitSpec {
  double train_ratio = 0.70;
  double test_ratio = 0.20;
  double validation_ratio = 0.10;
  int strat_bins = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train_ratio > 0.0) || !(test_ratio > 0.0) || !(validation_ratio > 0.0))
      throw UsageError("SplitSpec: ratios must be positive");
    const double s = train_ratio + test_ratio + validation_ratio;
    if (std::abs(s - 1.0) > 1e-9)
      throw UsageError("SplitSpec: ratios must sum to 1, got " + detail::format_double(s));
    if (strat_bins < 1) throw UsageError("SplitSpec: strat_bins must be >= 1");
  }
};

struct SplitIndices {
  std::vector<std::size_t> train, test, validation;
};

// Rank-based stratification: samples are sorted by target, cut into
// strat_bins contiguous quantile bins, each bin is shuffled with a seeded
// stream, and the concatenated order is dealt to (train, test, validation) by
// largest-deficit apportionment, which makes the counts exact whenever
// n * ratio is integral (e.g. 100 -> 70/20/10) and every partition non-empty
// for n >= 3.
inline SplitIndices stratified_split(const std::vector<double>& targets, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = targets.size();
  if (n < static_cast<std::size_t>(spec.strat_bins))
    throw DataError("stratified_split: " + std::to_string(n) + " samples cannot fill " +
                    std::to_string(spec.strat_bins) + " strata");
  if (n < 3) throw DataError("stratified_split: need at least 3 samples, got " + std::to_string(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&targets](std::size_t a, std::size_t b) {
    if (targets[a] != targets[b]) return targets[a] < targets[b];
    return a < b;
  });

  SplitRng rng = SplitRng(spec.seed).split("stratified_split");
  const std::size_t bins = static_cast<std::size_t>(spec.strat_bins);
  std::vector<std::size_t> dealt;
  dealt.reserve(n);
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = b * n / bins;
    const std::size_t hi = (b + 1) * n / bins;
    std::vector<std::size_t> bin(order.begin() + lo, order.begin() + hi);
    rng.shuffle(bin);
    dealt.insert(dealt.end(), bin.begin(), bin.end());
  }

  const double ratios[3] = {spec.train_ratio, spec.test_ratio, spec.validation_ratio};
  std::size_t counts[3] = {0, 0, 0};
  SplitIndices out;
  std::vector<std::size_t>* parts[3] = {&out.train, &out.test, &out.validation};
  for (std::size_t m = 1; m <= n; ++m) {
    int pick = 0;
    double best_deficit = -std::numeric_limits<double>::infinity();
    for (int p = 0; p < 3; ++p) {
      const double deficit = ratios[p] * static_cast<double>(m) - static_cast<double>(counts[p]);
      if (deficit > best_deficit + 1e-12) {
        best_deficit = deficit;
        pick = p;
      }
    }
    parts[pick]->push_back(dealt[m - 1]);
    ++counts[pick];
  }
  return out;
}

// ---- encoded datasets ----

// Strings plus the encoder specs to materialize them; one-hot matrices are
// produced on demand (they are large, the strings are not).  Construction
// pre-validates that every record encodes cleanly.
struct EncodedDataset {
  EncoderSpec smiles_spec;
  EncoderSpec inchi_spec;
  std::vector<std::string> ids;
  std::vector<std::string> smiles;
  std::vector<std::string> inchi;
  std::vector<double> targets;

  std::size_t size() const { return targets.size(); }
  Tensor smiles_onehot(std::size_t i) const { return encode_onehot(smiles[i], smiles_spec); }
  Tensor inchi_onehot(std::size_t i) const { return encode_onehot(inchi[i], inchi_spec); }

  EncodedDataset subset(std::span<const std::size_t> indices) const {
    EncodedDataset out;
    out.smiles_spec = smiles_spec;
    out.inchi_spec = inchi_spec;
    out.ids.reserve(indices.size());
    out.smiles.reserve(indices.size());
    out.inchi.reserve(indices.size());
    out.targets.reserve(indices.size());
    for (const std::size_t i : indices) {
      if (i >= size())
        throw DimensionError("EncodedDataset::subset: index " + std::to_string(i) +
                             " out of range for " + std::to_string(size()) + " samples");
      out.ids.push_back(ids[i]);
      out.smiles.push_back(smiles[i]);
      out.inchi.push_back(inchi[i]);
      out.targets.push_back(targets[i]);
    }
    return out;
  }
};

inline EncodedDataset encode_dataset(const Dataset& ds, EncoderSpec smiles_spec,
                                     EncoderSpec inchi_spec) {
  smiles_spec.validate();
  inchi_spec.validate();
  EncodedDataset out;
  out.smiles_spec = std::move(smiles_spec);
  out.inchi_spec = std::move(inchi_spec);
  out.ids.reserve(ds.size());
  out.smiles.reserve(ds.size());
  out.inchi.reserve(ds.size());
  out.targets.reserve(ds.size());
  for (const MoleculeRecord& r : ds.records) {
    try {
      (void)encode_onehot(r.smiles, out.smiles_spec);
      (void)encode_onehot(r.inchi, out.inchi_spec);
    } catch (const Error& e) {
      throw DataError("encode_dataset: record '" + r.id + "': " + e.what());
    }
    out.ids.push_back(r.id);
    out.smiles.push_back(r.smiles);
    out.inchi.push_back(r.inchi);
    out.targets.push_back(r.homo_ev);
  }
  return out;
}

// ---- evaluation ----

inline std::vector<double> predict_all(const SinetModel& model, const EncodedDataset& ds) {
  NoGradGuard no_grad;
  std::vector<double> preds;
  preds.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Tensor sm = ds.smiles_onehot(i);
    const Tensor in = ds.inchi_onehot(i);
    preds.push_back(model.forward_one(&sm, &in).item());
  }
  return preds;
}

inline Metrics evaluate(const SinetModel& model, const EncodedDataset& ds) {
  if (ds.size() == 0) throw DataError("evaluate: empty dataset");
  const std::vector<double> preds = predict_all(model, ds);
  return compute_metrics(preds, ds.targets);
}

// ---- early stopping ----

// Tracks the best validation MSE seen so far; stop() after `patience`
// consecutive observations without strict improvement.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {
    if (patience < 1) throw UsageError("EarlyStopper: patience must be >= 1");
  }

  // Returns true when training should stop after this observation.
  bool observe(double val_mse) {
    ++observed_;
    if (val_mse < best_) {
      best_ = val_mse;
      best_epoch_ = observed_;
      stale_ = 0;
      return false;
    }
    ++stale_;
    return stale_ >= patience_;
  }

  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }
  int observed() const { return observed_; }

 private:
  int patience_;
  int observed_ = 0;
  int stale_ = 0;
  int best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

// ---- training loop ----

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 20;
  bool restore_best = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw UsageError("TrainConfig: learning rate must be positive and finite");
    if (batch_size < 1) throw UsageError("TrainConfig: batch size must be >= 1");
    if (max_epochs < 0) throw UsageError("TrainConfig: max_epochs must be >= 0");
    if (patience < 1) throw UsageError("TrainConfig: patience must be >= 1");
  }
};

struct EpochRecord {
  int epoch = 0;        // 1-based
  double train_mse = 0.0;
  Metrics val;
};

using History = std::vector<EpochRecord>;

struct TrainStats {
  History history;
  std::int64_t optimizer_steps = 0;
  int best_epoch = 0;
  double best_val_mse = std::numeric_limits<double>::infinity();
};

// Shuffled mini-batch Adam with per-epoch validation.  The returned model
// carries the best-validation weights when restore_best is set.  Epoch
// shuffles come from a private substream of cfg.seed, so results depend only
// on (model, data, config).
inline TrainStats train(SinetModel& model, const EncodedDataset& train_set,
                        const EncodedDataset& val_set, const TrainConfig& cfg) {
  cfg.validate();
  TrainStats stats;
  if (cfg.max_epochs == 0) return stats;
  if (train_set.size() == 0) throw DataError("train: empty training set");
  if (val_set.size() == 0) throw DataError("train: empty validation set");

  ParamSet& params = model.parameters();
  AdamState adam = AdamState::create(params, cfg.learning_rate);
  SplitRng shuffle_rng = SplitRng(cfg.seed).split("train.shuffle");
  EarlyStopper stopper(cfg.patience);

  std::vector<std::vector<double>> best_weights;
  auto snapshot = [&params](std::vector<std::vector<double>>& dst) {
    dst.clear();
    dst.reserve(params.size());
    for (const Param& p : params) dst.push_back(p.value.data());
  };

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batch_start = 0;
    int batch_index = 0;
    while (batch_start < n) {
      const std::size_t batch_end = std::min(batch_start + static_cast<std::size_t>(cfg.batch_size), n);
      std::vector<Tensor> preds;
      std::vector<double> ys;
      preds.reserve(batch_end - batch_start);
      ys.reserve(batch_end - batch_start);
      for (std::size_t k = batch_start; k < batch_end; ++k) {
        const std::size_t i = order[k];
        const Tensor sm = train_set.smiles_onehot(i);
        const Tensor in = train_set.inchi_onehot(i);
        preds.push_back(model.forward_one(&sm, &in));
        ys.push_back(train_set.targets[i]);
      }
      const Tensor loss = mse_loss(stack_scalars(preds), Tensor::vec(std::move(ys)));
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value))
        throw NumericError("train: non-finite training loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index));
      zero_grads(params);
      backward(loss);
      adam_step(params, adam);
      loss_sum += loss_value * static_cast<double>(batch_end - batch_start);
      batch_start = batch_end;
      ++batch_index;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = loss_sum / static_cast<double>(n);
    rec.val = evaluate(model, val_set);
    stats.history.push_back(rec);

    const bool improved = rec.val.mse < stopper.best();
    const bool stop = stopper.observe(rec.val.mse);
    if (improved) snapshot(best_weights);
    if (stop) break;
  }

  stats.optimizer_steps = adam.step;
  stats.best_epoch = stopper.best_epoch();
  stats.best_val_mse = stopper.best();
  if (cfg.restore_best && !best_weights.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i].value.data() = best_weights[i];
  }
  return stats;
}

inline void write_history_csv(const History& history, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_history_csv: cannot open " + path);
  out << "epoch,train_mse,val_mse,val_mape\n";
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << detail::format_double(r.train_mse) << ','
        << detail::format_double(r.val.mse) << ',';
    if (r.val.mape) out << detail::format_double(*r.val.mape);
    out << '\n';
  }
  if (!out) throw IoError("write_history_csv: write failed for " + path);
}

}  // namespace sinet
