#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "sinet/checkpoint.hpp"
#include "sinet/transfer.hpp"
#include "support/synthetic.hpp"

using namespace sinet;

namespace {

struct TransferFixture {
  Dataset ds;
  SinetConfig config;
  SinetModel source;

  explicit TransferFixture(bool pretrain = true, bool reserve_unk = true)
      : ds(make_corpus()), config(make_config(ds, reserve_unk)), source(build_model(config, 7)) {
    if (!pretrain) return;
    const EncodedDataset all = synth::encode_for_config(config, ds);
    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < all.size(); ++i)
      (i % 5 == 4 ? val_idx : train_idx).push_back(i);
    TrainConfig cfg;
    cfg.max_epochs = 4;
    cfg.batch_size = 16;
    cfg.patience = 10;
    cfg.seed = 1;
    train(source, all.subset(train_idx), all.subset(val_idx), cfg);
  }

  static Dataset make_corpus() {
    synth::CountingParams p;
    p.n = 60;
    p.seed = 12;
    p.max_count = 3;
    p.noise_sigma = 0.01;
    return synth::counting_corpus(p);
  }

  static SinetConfig make_config(const Dataset& ds, bool reserve_unk) {
    synth::NetSize size;
    size.conv_layers = 1;
    size.conv_filters = 4;
    size.lstm_layers = 1;
    size.lstm_units = 6;
    size.dense_units = 8;
    return synth::small_config(Variant::SmilesOnly, ds, 24, 32, size, reserve_unk);
  }
};

FinetuneOptions quick_options(std::uint64_t seed, int epochs) {
  FinetuneOptions opts;
  opts.train.max_epochs = epochs;
  opts.train.batch_size = 16;
  opts.train.patience = 10;
  opts.train.seed = seed;
  opts.split.seed = seed;
  return opts;
}

}  // namespace

TEST_CASE("a zero-epoch fine-tune is a bitwise copy with provenance") {
  TransferFixture fix(false);
  const FinetuneRun run = finetune(fix.source, fix.ds, quick_options(3, 0));

  REQUIRE(run.model.metadata().provenance ==
          "finetuned-from:" + compute_checkpoint_id(fix.source));
  REQUIRE(run.model.metadata().checkpoint_id.empty());
  REQUIRE(run.stats.history.empty());
  REQUIRE(run.stats.optimizer_steps == 0);
  for (std::size_t i = 0; i < fix.source.parameters().size(); ++i)
    REQUIRE(run.model.parameters()[i].value.data() ==
            fix.source.parameters()[i].value.data());

  // the held-out fold is scored with the untouched weights
  const EncodedDataset enc = encode_for_model(fix.source, fix.ds, OverflowPolicy::Reject,
                                              UnknownPolicy::MapToUnk);
  const Metrics direct = evaluate(fix.source, enc.subset(run.split.test));
  REQUIRE(run.test_metrics.mse == direct.mse);
}

TEST_CASE("provenance follows the checkpoint id through save and load") {
  synth::TempDir dir;
  TransferFixture fix(false);
  const std::string path = dir.file("source.sinc");
  save_checkpoint(fix.source, path);
  const SinetModel loaded = load_checkpoint(path);
  REQUIRE_FALSE(loaded.metadata().checkpoint_id.empty());

  const FinetuneRun run = finetune(loaded, fix.ds, quick_options(4, 1));
  REQUIRE(run.model.metadata().provenance ==
          "finetuned-from:" + loaded.metadata().checkpoint_id);

  // a second hop records the new identity, not the original one
  SinetModel hop = run.model.clone();
  const std::string hop_id = compute_checkpoint_id(hop);
  const FinetuneRun run2 = finetune(hop, fix.ds, quick_options(5, 0));
  REQUIRE(run2.model.metadata().provenance == "finetuned-from:" + hop_id);
  REQUIRE(run2.model.metadata().provenance != run.model.metadata().provenance);
}

TEST_CASE("fine-tuning trains: weights move and loss is finite") {
  TransferFixture fix;
  const FinetuneRun run = finetune(fix.source, fix.ds, quick_options(6, 2));
  REQUIRE(run.stats.history.size() == 2);
  bool moved = false;
  for (std::size_t i = 0; i < fix.source.parameters().size(); ++i)
    if (run.model.parameters()[i].value.data() != fix.source.parameters()[i].value.data())
      moved = true;
  REQUIRE(moved);
  REQUIRE(std::isfinite(run.test_metrics.mse));
}

TEST_CASE("self-transfer does not degrade a trained model beyond noise") {
  TransferFixture fix;  // pretrained on this very distribution
  const EncodedDataset enc = encode_for_model(fix.source, fix.ds, OverflowPolicy::Reject,
                                              UnknownPolicy::MapToUnk);
  double src_sum = 0.0, ft_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const FinetuneRun run = finetune(fix.source, fix.ds, quick_options(seed, 2));
    const Metrics src = evaluate(fix.source, enc.subset(run.split.test));
    REQUIRE(src.mape.has_value());
    REQUIRE(run.test_metrics.mape.has_value());
    src_sum += *src.mape;
    ft_sum += *run.test_metrics.mape;
  }
  REQUIRE(ft_sum / 5.0 <= (src_sum / 5.0) * 1.5 + 1.0);
}

TEST_CASE("the paired comparison reports every seed against the same folds") {
  TransferFixture fix;
  const std::vector<std::uint64_t> seeds = {1, 2};
  const TransferReport report = compare_transfer(fix.source, fix.ds, quick_options(0, 2), seeds);

  REQUIRE(report.source_checkpoint_id == compute_checkpoint_id(fix.source));
  REQUIRE(report.per_seed.size() == 2);
  REQUIRE(report.per_seed[0].seed == 1);
  REQUIRE(report.per_seed[1].seed == 2);

  // aggregates match hand arithmetic over the per-seed rows
  const double m1 = report.per_seed[0].finetuned.mse;
  const double m2 = report.per_seed[1].finetuned.mse;
  const double mean = (m1 + m2) / 2.0;
  REQUIRE(report.finetuned.mse.mean == Catch::Approx(mean).epsilon(1e-12));
  const double ss = (m1 - mean) * (m1 - mean) + (m2 - mean) * (m2 - mean);
  REQUIRE(report.finetuned.mse.stdev == Catch::Approx(std::sqrt(ss)).epsilon(1e-12));
  REQUIRE(report.scratch.mse.mean ==
          Catch::Approx((report.per_seed[0].scratch.mse + report.per_seed[1].scratch.mse) / 2.0)
              .epsilon(1e-12));
  REQUIRE_THROWS_AS(compare_transfer(fix.source, fix.ds, quick_options(0, 1), {}), UsageError);
}

TEST_CASE("comparison results are independent of the thread budget") {
  TransferFixture fix(false);
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  setenv("SINET_THREADS", "1", 1);
  const TransferReport serial = compare_transfer(fix.source, fix.ds, quick_options(0, 1), seeds);
  setenv("SINET_THREADS", "4", 1);
  const TransferReport threaded = compare_transfer(fix.source, fix.ds, quick_options(0, 1), seeds);
  unsetenv("SINET_THREADS");
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    REQUIRE(serial.per_seed[k].finetuned.mse == threaded.per_seed[k].finetuned.mse);
    REQUIRE(serial.per_seed[k].scratch.mse == threaded.per_seed[k].scratch.mse);
    REQUIRE(serial.per_seed[k].finetuned.mae == threaded.per_seed[k].finetuned.mae);
  }
}

TEST_CASE("vocabulary compatibility is enforced up front") {
  TransferFixture fix(false, /*reserve_unk=*/false);
  // map-to-UNK needs an UNK slot in the checkpointed vocabulary
  REQUIRE_THROWS_WITH(
      encoder_specs_for(fix.source, OverflowPolicy::Reject, UnknownPolicy::MapToUnk),
      Catch::Matchers::ContainsSubstring("no UNK slot"));

  // with reject semantics, a novel character in the target is a data error
  Dataset novel = fix.ds;
  novel.records[0].smiles = "\x7E" + novel.records[0].smiles;  // '~' never in the corpus
  FinetuneOptions opts = quick_options(1, 0);
  opts.unknown_policy = UnknownPolicy::Reject;
  REQUIRE_THROWS_WITH(finetune(fix.source, novel, opts),
                      Catch::Matchers::ContainsSubstring("incompatible with the checkpoint"));
}

TEST_CASE("single-branch models accept any text on the unused side") {
  TransferFixture fix(false);  // SMILES-only
  Dataset weird = fix.ds;
  for (MoleculeRecord& r : weird.records) r.inchi = "InChI=@@@##$%^&*()_+{}|:\"<>?" + r.id;
  REQUIRE_NOTHROW(encode_for_model(fix.source, weird, OverflowPolicy::Reject,
                                   UnknownPolicy::MapToUnk));
}

TEST_CASE("transfer reports serialize to CSV and JSON") {
  synth::TempDir dir;
  TransferFixture fix(false);
  const TransferReport report =
      compare_transfer(fix.source, fix.ds, quick_options(0, 1), {1, 2});

  const std::string csv_path = dir.file("compare.csv");
  write_transfer_csv(report, csv_path);
  const std::string csv = synth::read_bytes(csv_path);
  REQUIRE(csv.rfind("seed,run,mse,mae,mape\n", 0) == 0);
  REQUIRE(csv.find("\n1,scratch,") != std::string::npos);
  REQUIRE(csv.find("\n1,finetuned,") != std::string::npos);
  REQUIRE(csv.find("\n2,scratch,") != std::string::npos);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 2 rows per seed

  const nlohmann::json j = transfer_report_json(report);
  REQUIRE(j["source_checkpoint_id"] == report.source_checkpoint_id);
  REQUIRE(j["per_seed"].size() == 2);
  REQUIRE(j["aggregate"]["finetuned"]["mse"]["mean"].get<double>() ==
          Catch::Approx(report.finetuned.mse.mean));
  REQUIRE(j["per_seed"][0]["scratch"]["mse"].get<double>() == report.per_seed[0].scratch.mse);
}
