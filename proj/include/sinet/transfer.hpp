#pragma once

// Transfer learning: fine-tune a trained model on a small target dataset
// (whole model, no frozen layers, fresh optimizer state), and the paired
// scratch-vs-finetuned comparison across seeds.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sinet/checkpoint.hpp"
#include "sinet/parallel.hpp"
#include "sinet/training.hpp"

namespace sinet {

struct FinetuneOptions {
  TrainConfig train;
  SplitSpec split;
  // Target molecules may contain characters or lengths the source vocabulary
  // never saw; these policies decide what happens then.
  UnknownPolicy unknown_policy = UnknownPolicy::MapToUnk;
  OverflowPolicy overflow_policy = OverflowPolicy::Reject;
};

// Encoder specs implied by a trained model's checkpointed vocabularies.
inline std::pair<EncoderSpec, EncoderSpec> encoder_specs_for(const SinetModel& model,
                                                             OverflowPolicy overflow,
                                                             UnknownPolicy unknown) {
  const SinetConfig& c = model.config();
  if (unknown == UnknownPolicy::MapToUnk) {
    if (c.uses_smiles() && !c.smiles_vocab.has_unk)
      throw UsageError("encoder_specs_for: checkpoint SMILES vocabulary has no UNK slot; use the "
                       "reject policy or retrain with a reserved UNK");
    if (c.uses_inchi() && !c.inchi_vocab.has_unk)
      throw UsageError("encoder_specs_for: checkpoint InChI vocabulary has no UNK slot; use the "
                       "reject policy or retrain with a reserved UNK");
  }
  EncoderSpec smiles{c.smiles_vocab, c.smiles_len, overflow, unknown};
  EncoderSpec inchi{c.inchi_vocab, c.inchi_len, overflow, unknown};
  // Single-representation variants still need a valid spec for the unused
  // side (datasets always carry both strings); fall back to a permissive one.
  if (!c.uses_smiles()) smiles = EncoderSpec{Vocabulary{"*", true}, c.smiles_len,
                                             OverflowPolicy::Truncate, UnknownPolicy::MapToUnk};
  if (!c.uses_inchi()) inchi = EncoderSpec{Vocabulary{"*", true}, c.inchi_len,
                                           OverflowPolicy::Truncate, UnknownPolicy::MapToUnk};
  return {smiles, inchi};
}

inline EncodedDataset encode_for_model(const SinetModel& model, const Dataset& target,
                                       OverflowPolicy overflow, UnknownPolicy unknown) {
  const auto [smiles_spec, inchi_spec] = encoder_specs_for(model, overflow, unknown);
  try {
    return encode_dataset(target, smiles_spec, inchi_spec);
  } catch (const DataError& e) {
    throw DataError("target dataset is incompatible with the checkpoint encoders: " +
                    std::string(e.what()));
  }
}

struct FinetuneRun {
  SinetModel model;
  TrainStats stats;
  Metrics test_metrics;
  SplitIndices split;
};

namespace detail {
inline std::string source_id_of(const SinetModel& source) {
  return source.metadata().checkpoint_id.empty() ? compute_checkpoint_id(source)
                                                 : source.metadata().checkpoint_id;
}
}  // namespace detail

// Fine-tune a copy of `source` on `target`.  The copy starts bit-identical to
// the source (a zero-epoch fine-tune predicts exactly what the source does),
// trains every parameter with a fresh Adam state, and records provenance.
inline FinetuneRun finetune(const SinetModel& source, const Dataset& target,
                            const FinetuneOptions& opts) {
  opts.train.validate();
  opts.split.validate();
  FinetuneRun run;
  run.model = source.clone();
  run.model.metadata().provenance = "finetuned-from:" + detail::source_id_of(source);
  run.model.metadata().checkpoint_id.clear();

  const EncodedDataset enc =
      encode_for_model(source, target, opts.overflow_policy, opts.unknown_policy);
  run.split = stratified_split(enc.targets, opts.split);
  const EncodedDataset train_set = enc.subset(run.split.train);
  const EncodedDataset val_set = enc.subset(run.split.validation);
  run.stats = train(run.model, train_set, val_set, opts.train);
  if (!run.split.test.empty()) run.test_metrics = evaluate(run.model, enc.subset(run.split.test));
  return run;
}

// ---- paired comparison across seeds ----

struct SeedOutcome {
  std::uint64_t seed = 0;
  Metrics scratch;
  Metrics finetuned;
};

struct MetricAggregate {
  double mean = 0.0;
  double stdev = 0.0;  // sample stdev (n-1); 0 for a single seed
};

struct TransferAggregate {
  MetricAggregate mse, mae;
  std::optional<MetricAggregate> mape;
};

struct TransferReport {
  std::string source_checkpoint_id;
  std::vector<SeedOutcome> per_seed;
  TransferAggregate scratch;
  TransferAggregate finetuned;
};

namespace detail {

inline MetricAggregate aggregate_of(const std::vector<double>& xs) {
  MetricAggregate a;
  const double n = static_cast<double>(xs.size());
  for (const double x : xs) a.mean += x;
  a.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (const double x : xs) ss += (x - a.mean) * (x - a.mean);
    a.stdev = std::sqrt(ss / (n - 1.0));
  }
  return a;
}

inline TransferAggregate aggregate_metrics(const std::vector<Metrics>& ms) {
  TransferAggregate agg;
  std::vector<double> mse, mae, mape;
  bool mape_ok = true;
  for (const Metrics& m : ms) {
    mse.push_back(m.mse);
    mae.push_back(m.mae);
    if (m.mape)
      mape.push_back(*m.mape);
    else
      mape_ok = false;
  }
  agg.mse = aggregate_of(mse);
  agg.mae = aggregate_of(mae);
  if (mape_ok && !mape.empty()) agg.mape = aggregate_of(mape);
  return agg;
}

}  // namespace detail

// For every seed: one model fine-tuned from `source` and one trained from
// scratch with the *same* architecture, split and training budget; both are
// scored on the identical held-out test fold.  Seeds fan out over
// SINET_THREADS worker threads; outputs are independent of the thread count.
inline TransferReport compare_transfer(const SinetModel& source, const Dataset& target,
                                       const FinetuneOptions& base,
                                       const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw UsageError("compare_transfer: no seeds given");
  base.train.validate();
  base.split.validate();
  const EncodedDataset enc =
      encode_for_model(source, target, base.overflow_policy, base.unknown_policy);

  TransferReport report;
  report.source_checkpoint_id = detail::source_id_of(source);
  report.per_seed.resize(seeds.size());

  parallel_for_index(seeds.size(), env_thread_budget(), [&](std::size_t k) {
    const std::uint64_t seed = seeds[k];
    FinetuneOptions opts = base;
    opts.split.seed = seed;
    opts.train.seed = seed;

    SplitSpec split_spec = opts.split;
    const SplitIndices split = stratified_split(enc.targets, split_spec);
    const EncodedDataset train_set = enc.subset(split.train);
    const EncodedDataset val_set = enc.subset(split.validation);
    const EncodedDataset test_set = enc.subset(split.test);

    SeedOutcome outcome;
    outcome.seed = seed;

    SinetModel ft = source.clone();
    ft.metadata().provenance = "finetuned-from:" + report.source_checkpoint_id;
    train(ft, train_set, val_set, opts.train);
    outcome.finetuned = evaluate(ft, test_set);

    SinetModel scratch = build_model(source.config(), seed);
    train(scratch, train_set, val_set, opts.train);
    outcome.scratch = evaluate(scratch, test_set);

    report.per_seed[k] = outcome;
  });

  std::vector<Metrics> scratch_ms, ft_ms;
  for (const SeedOutcome& o : report.per_seed) {
    scratch_ms.push_back(o.scratch);
    ft_ms.push_back(o.finetuned);
  }
  report.scratch = detail::aggregate_metrics(scratch_ms);
  report.finetuned = detail::aggregate_metrics(ft_ms);
  return report;
}

// ---- report serialization ----

inline void write_transfer_csv(const TransferReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_transfer_csv: cannot open " + path);
  out << "seed,run,mse,mae,mape\n";
  for (const SeedOutcome& o : report.per_seed) {
    auto row = [&out, &o](const char* run, const Metrics& m) {
      out << o.seed << ',' << run << ',' << detail::format_double(m.mse) << ','
          << detail::format_double(m.mae) << ',';
      if (m.mape) out << detail::format_double(*m.mape);
      out << '\n';
    };
    row("scratch", o.scratch);
    row("finetuned", o.finetuned);
  }
  if (!out) throw IoError("write_transfer_csv: write failed for " + path);
}

inline nlohmann::json metrics_to_json(const Metrics& m) {
  nlohmann::json j = {{"mse", m.mse}, {"mae", m.mae}};
  if (m.mape)
    j["mape"] = *m.mape;
  else
    j["mape"] = nullptr;
  return j;
}

inline nlohmann::json transfer_report_json(const TransferReport& report) {
  auto agg_json = [](const TransferAggregate& a) {
    nlohmann::json j = {{"mse", {{"mean", a.mse.mean}, {"stdev", a.mse.stdev}}},
                        {"mae", {{"mean", a.mae.mean}, {"stdev", a.mae.stdev}}}};
    if (a.mape)
      j["mape"] = {{"mean", a.mape->mean}, {"stdev", a.mape->stdev}};
    else
      j["mape"] = nullptr;
    return j;
  };
  nlohmann::json per_seed = nlohmann::json::array();
  for (const SeedOutcome& o : report.per_seed)
    per_seed.push_back({{"seed", o.seed},
                        {"scratch", metrics_to_json(o.scratch)},
                        {"finetuned", metrics_to_json(o.finetuned)}});
  return {{"source_checkpoint_id", report.source_checkpoint_id},
          {"per_seed", per_seed},
          {"aggregate", {{"scratch", agg_json(report.scratch)}, {"finetuned", agg_json(report.finetuned)}}}};
}

}  // namespace sinet
