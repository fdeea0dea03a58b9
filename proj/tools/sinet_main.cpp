// sinet — train, fine-tune, evaluate and inspect dual-representation HOMO
// predictors from the command line.
//
// Exit codes: 0 success, 2 usage, 3 data/format, 4 numeric, 5 I/O.

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sinet/sinet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso8601_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sinet::IoError("cannot open " + path + " for digesting");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char crc[16];
  std::snprintf(crc, sizeof(crc), "%08x", sinet::crc32(bytes.data(), bytes.size()));
  return {{"path", path}, {"crc32", crc}, {"bytes", bytes.size()}};
}

void write_manifest(const std::string& out_dir, json manifest) {
  manifest["finished"] = iso8601_now();
  const fs::path path = fs::path(out_dir) / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sinet::IoError("cannot write " + path.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw sinet::IoError("write failed for " + path.string());
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec && !fs::is_directory(out_dir))
    throw sinet::IoError("cannot create output directory " + out_dir + ": " + ec.message());
}

sinet::OverflowPolicy overflow_from(const std::string& s) {
  if (s == "reject") return sinet::OverflowPolicy::Reject;
  if (s == "truncate") return sinet::OverflowPolicy::Truncate;
  throw sinet::UsageError("--overflow must be 'reject' or 'truncate', got '" + s + "'");
}

sinet::UnknownPolicy unknown_from(const std::string& s) {
  if (s == "reject") return sinet::UnknownPolicy::Reject;
  if (s == "map") return sinet::UnknownPolicy::MapToUnk;
  throw sinet::UsageError("--unknown must be 'reject' or 'map', got '" + s + "'");
}

json metrics_json(const sinet::Metrics& m) {
  json j = {{"mse", m.mse}, {"mae", m.mae}};
  if (m.mape)
    j["mape"] = *m.mape;
  else
    j["mape"] = nullptr;
  return j;
}

// ---- shared flag bundles ----

struct DataFlags {
  std::string data;
  bool boltzmann = false;
  double temperature = sinet::kRoomTemperatureK;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", data, "input CSV (id,smiles,inchi,homo_ev[,conformer columns])")
        ->required();
    cmd->add_flag("--boltzmann", boltzmann,
                  "replace homo_ev with the Boltzmann-weighted conformer average where "
                  "conformer columns are present");
    cmd->add_option("--temperature", temperature, "Boltzmann temperature in kelvin")
        ->capture_default_str();
  }

  sinet::Dataset load() const {
    std::vector<std::string> warnings;
    sinet::Dataset ds = sinet::load_csv(data, {}, &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
    if (boltzmann) ds = sinet::with_boltzmann_homo(std::move(ds), temperature);
    return ds;
  }
};

struct TrainFlags {
  sinet::TrainConfig cfg;
  int strat_bins = 10;

  void attach(CLI::App* cmd) {
    cmd->add_option("--learning-rate", cfg.learning_rate, "Adam learning rate")
        ->capture_default_str();
    cmd->add_option("--batch-size", cfg.batch_size, "mini-batch size")->capture_default_str();
    cmd->add_option("--max-epochs", cfg.max_epochs, "epoch budget")->capture_default_str();
    cmd->add_option("--patience", cfg.patience,
                    "early-stopping patience in epochs without validation improvement")
        ->capture_default_str();
    cmd->add_flag("!--no-restore-best", cfg.restore_best,
                  "keep the final-epoch weights instead of the best-validation weights");
    cmd->add_option("--strat-bins", strat_bins, "stratification quantile bins")
        ->capture_default_str();
  }

  sinet::SplitSpec split(std::uint64_t seed) const {
    sinet::SplitSpec s;
    s.strat_bins = strat_bins;
    s.seed = seed;
    return s;
  }

  json to_json() const {
    return {{"learning_rate", cfg.learning_rate},
            {"batch_size", cfg.batch_size},
            {"max_epochs", cfg.max_epochs},
            {"patience", cfg.patience},
            {"restore_best", cfg.restore_best},
            {"strat_bins", strat_bins}};
  }
};

// ---- subcommand options ----

struct TrainOpts {
  DataFlags data;
  TrainFlags train;
  std::string variant = "dual";
  std::string out = ".";
  std::uint64_t seed = 0;
  int smiles_len = 82;
  int inchi_len = 162;
  int conv_layers = 2, conv_filters = 32, kernel_size = 3, pool_size = 2;
  int lstm_layers = 2, lstm_units = 64, dense_units = 64;
  bool reserve_unk = true;
  std::string overflow = "reject";
  std::string unknown = "reject";
};

struct FinetuneOpts {
  DataFlags data;
  TrainFlags train;
  std::string checkpoint;
  std::string out = ".";
  std::uint64_t seed = 0;
  std::string overflow = "reject";
  std::string unknown = "map";
  bool compare_scratch = false;
  int seeds = 10;
};

struct EvalOpts {
  DataFlags data;
  std::string checkpoint;
  std::string out = ".";
  std::string overflow = "reject";
  std::string unknown = "reject";
};

struct PredictOpts {
  DataFlags data;
  std::string checkpoint;
  std::string out = ".";
  std::string overflow = "reject";
  std::string unknown = "reject";
};

struct ScharberOpts {
  sinet::ScharberInputs in;
  std::string out = ".";
  bool magnitude = false;
};

struct EncodeOpts {
  std::string text;
  std::string checkpoint;
  std::string data;
  std::string which = "smiles";
  std::string out = ".";
  int max_len = 0;  // 0 = use checkpoint/default length
  bool reserve_unk = false;
  std::string overflow = "reject";
  std::string unknown = "reject";
};

struct GradcheckOpts {
  std::uint64_t seed = 1;
  int trials = 20;
  std::string out = ".";
};

// ---- command implementations ----

int cmd_train(const TrainOpts& o) {
  const std::string started = iso8601_now();
  const sinet::Dataset ds = o.data.load();
  const sinet::DatasetStats stats = sinet::dataset_stats(ds);
  if (stats.smiles.max_len > static_cast<std::size_t>(o.smiles_len))
    std::cerr << "warning: longest SMILES in " << o.data.data << " has " << stats.smiles.max_len
              << " characters but --smiles-len is " << o.smiles_len << '\n';
  if (stats.inchi.max_len > static_cast<std::size_t>(o.inchi_len))
    std::cerr << "warning: longest InChI in " << o.data.data << " has " << stats.inchi.max_len
              << " characters but --inchi-len is " << o.inchi_len << '\n';

  sinet::SinetConfig config;
  config.variant = sinet::variant_from_string(o.variant);
  config.smiles_len = o.smiles_len;
  config.inchi_len = o.inchi_len;
  config.conv_layers = o.conv_layers;
  config.conv_filters = o.conv_filters;
  config.kernel_size = o.kernel_size;
  config.pool_size = o.pool_size;
  config.lstm_layers = o.lstm_layers;
  config.lstm_units = o.lstm_units;
  config.dense_units = o.dense_units;
  std::vector<std::string> smiles_strings, inchi_strings;
  for (const sinet::MoleculeRecord& r : ds.records) {
    smiles_strings.push_back(r.smiles);
    inchi_strings.push_back(r.inchi);
  }
  config.smiles_vocab = sinet::build_vocabulary(smiles_strings, o.reserve_unk);
  config.inchi_vocab = sinet::build_vocabulary(inchi_strings, o.reserve_unk);
  config.validate();

  sinet::SinetModel model = sinet::build_model(config, o.seed);
  const sinet::EncodedDataset encoded =
      sinet::encode_for_model(model, ds, overflow_from(o.overflow), unknown_from(o.unknown));
  const sinet::SplitSpec split_spec = o.train.split(o.seed);
  const sinet::SplitIndices split = sinet::stratified_split(encoded.targets, split_spec);

  sinet::TrainConfig cfg = o.train.cfg;
  cfg.seed = o.seed;
  const sinet::TrainStats train_stats =
      sinet::train(model, encoded.subset(split.train), encoded.subset(split.validation), cfg);
  const sinet::Metrics test = sinet::evaluate(model, encoded.subset(split.test));

  ensure_out_dir(o.out);
  const std::string model_path = (fs::path(o.out) / "model.sinc").string();
  const std::string history_path = (fs::path(o.out) / "history.csv").string();
  sinet::save_checkpoint(model, model_path);
  sinet::write_history_csv(train_stats.history, history_path);

  const json result = {{"test", metrics_json(test)},
                       {"best_val_mse", train_stats.best_val_mse},
                       {"best_epoch", train_stats.best_epoch},
                       {"epochs_run", train_stats.history.size()},
                       {"optimizer_steps", train_stats.optimizer_steps},
                       {"checkpoint_id", model.metadata().checkpoint_id}};
  std::cout << result.dump(2) << '\n';

  write_manifest(o.out, {{"command", "train"},
                         {"started", started},
                         {"seed", o.seed},
                         {"inputs", json::array({file_digest(o.data.data)})},
                         {"config",
                          {{"model", sinet::config_to_json(config)},
                           {"train", o.train.to_json()},
                           {"overflow", o.overflow},
                           {"unknown", o.unknown},
                           {"boltzmann", o.data.boltzmann},
                           {"temperature", o.data.temperature}}},
                         {"artifacts", {{"checkpoint", model_path}, {"history", history_path}}},
                         {"metrics", result}});
  return 0;
}

int cmd_finetune(const FinetuneOpts& o) {
  const std::string started = iso8601_now();
  sinet::SinetModel source = sinet::load_checkpoint(o.checkpoint);
  const sinet::Dataset ds = o.data.load();

  sinet::FinetuneOptions opts;
  opts.train = o.train.cfg;
  opts.train.seed = o.seed;
  opts.split = o.train.split(o.seed);
  opts.overflow_policy = overflow_from(o.overflow);
  opts.unknown_policy = unknown_from(o.unknown);

  ensure_out_dir(o.out);
  json manifest = {{"command", "finetune"},
                   {"started", started},
                   {"seed", o.seed},
                   {"inputs", json::array({file_digest(o.checkpoint), file_digest(o.data.data)})},
                   {"config",
                    {{"train", o.train.to_json()},
                     {"overflow", o.overflow},
                     {"unknown", o.unknown},
                     {"compare_scratch", o.compare_scratch},
                     {"boltzmann", o.data.boltzmann},
                     {"temperature", o.data.temperature}}},
                   {"source_checkpoint_id", sinet::compute_checkpoint_id(source)}};

  if (o.compare_scratch) {
    if (o.seeds < 1) throw sinet::UsageError("--seeds must be >= 1");
    std::vector<std::uint64_t> seeds;
    for (int k = 0; k < o.seeds; ++k) seeds.push_back(o.seed + static_cast<std::uint64_t>(k));
    const sinet::TransferReport report = sinet::compare_transfer(source, ds, opts, seeds);
    const std::string csv_path = (fs::path(o.out) / "compare.csv").string();
    sinet::write_transfer_csv(report, csv_path);
    const json report_json = sinet::transfer_report_json(report);
    std::cout << report_json.dump(2) << '\n';
    manifest["artifacts"] = {{"comparison", csv_path}};
    manifest["metrics"] = report_json["aggregate"];
    write_manifest(o.out, manifest);
    return 0;
  }

  sinet::FinetuneRun run = sinet::finetune(source, ds, opts);
  const std::string model_path = (fs::path(o.out) / "model.sinc").string();
  const std::string history_path = (fs::path(o.out) / "history.csv").string();
  sinet::save_checkpoint(run.model, model_path);
  sinet::write_history_csv(run.stats.history, history_path);

  const json result = {{"test", metrics_json(run.test_metrics)},
                       {"best_val_mse", run.stats.best_val_mse},
                       {"best_epoch", run.stats.best_epoch},
                       {"epochs_run", run.stats.history.size()},
                       {"provenance", run.model.metadata().provenance},
                       {"checkpoint_id", run.model.metadata().checkpoint_id}};
  std::cout << result.dump(2) << '\n';
  manifest["artifacts"] = {{"checkpoint", model_path}, {"history", history_path}};
  manifest["metrics"] = result;
  write_manifest(o.out, manifest);
  return 0;
}

int cmd_eval(const EvalOpts& o) {
  const std::string started = iso8601_now();
  const sinet::SinetModel model = sinet::load_checkpoint(o.checkpoint);
  const sinet::Dataset ds = o.data.load();
  const sinet::EncodedDataset encoded =
      sinet::encode_for_model(model, ds, overflow_from(o.overflow), unknown_from(o.unknown));
  const sinet::Metrics m = sinet::evaluate(model, encoded);
  json result = metrics_json(m);
  result["count"] = encoded.size();
  std::cout << result.dump(2) << '\n';

  ensure_out_dir(o.out);
  write_manifest(o.out, {{"command", "eval"},
                         {"started", started},
                         {"inputs",
                          json::array({file_digest(o.checkpoint), file_digest(o.data.data)})},
                         {"config", {{"overflow", o.overflow}, {"unknown", o.unknown}}},
                         {"artifacts", json::object()},
                         {"metrics", result}});
  return 0;
}

int cmd_predict(const PredictOpts& o) {
  const std::string started = iso8601_now();
  const sinet::SinetModel model = sinet::load_checkpoint(o.checkpoint);
  const sinet::Dataset ds = o.data.load();
  const sinet::EncodedDataset encoded =
      sinet::encode_for_model(model, ds, overflow_from(o.overflow), unknown_from(o.unknown));
  const std::vector<double> preds = sinet::predict_all(model, encoded);

  ensure_out_dir(o.out);
  const std::string csv_path = (fs::path(o.out) / "predictions.csv").string();
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw sinet::IoError("cannot write " + csv_path);
  out << "id,homo_ev_pred\n";
  for (std::size_t i = 0; i < preds.size(); ++i)
    out << sinet::detail::csv_quote(encoded.ids[i]) << ','
        << sinet::detail::format_double(preds[i]) << '\n';
  if (!out) throw sinet::IoError("write failed for " + csv_path);

  const json result = {{"predictions", csv_path}, {"count", preds.size()}};
  std::cout << result.dump(2) << '\n';
  write_manifest(o.out, {{"command", "predict"},
                         {"started", started},
                         {"inputs",
                          json::array({file_digest(o.checkpoint), file_digest(o.data.data)})},
                         {"config", {{"overflow", o.overflow}, {"unknown", o.unknown}}},
                         {"artifacts", {{"predictions", csv_path}}},
                         {"metrics", result}});
  return 0;
}

int cmd_scharber(const ScharberOpts& o) {
  const std::string started = iso8601_now();
  const sinet::ScharberResult r =
      o.magnitude ? sinet::scharber_pce_magnitude(o.in) : sinet::scharber_pce(o.in);
  std::printf("Voc=%.3f V, PCE=%.3f%%\n", r.voc_v, r.pce_percent);
  if (o.magnitude)
    std::printf("(magnitude convention: Voc = |E_HOMO,donor| - |E_LUMO,acceptor| - 0.3)\n");

  ensure_out_dir(o.out);
  write_manifest(o.out, {{"command", "scharber"},
                         {"started", started},
                         {"inputs", json::array()},
                         {"config",
                          {{"e_homo_donor_ev", o.in.e_homo_donor_ev},
                           {"e_lumo_acceptor_ev", o.in.e_lumo_acceptor_ev},
                           {"fill_factor", o.in.fill_factor},
                           {"j_sc_ma_cm2", o.in.j_sc_ma_cm2},
                           {"p_in_mw_cm2", o.in.p_in_mw_cm2},
                           {"magnitude_convention", o.magnitude}}},
                         {"artifacts", json::object()},
                         {"metrics", {{"voc_v", r.voc_v}, {"pce_percent", r.pce_percent}}}});
  return 0;
}

int cmd_encode(const EncodeOpts& o) {
  const std::string started = iso8601_now();
  if (o.checkpoint.empty() == o.data.empty())
    throw sinet::UsageError("encode needs exactly one vocabulary source: --checkpoint or --data");
  if (o.which != "smiles" && o.which != "inchi")
    throw sinet::UsageError("--which must be 'smiles' or 'inchi', got '" + o.which + "'");

  sinet::EncoderSpec spec;
  json inputs = json::array();
  if (!o.checkpoint.empty()) {
    const sinet::SinetModel model = sinet::load_checkpoint(o.checkpoint);
    const auto [sm, in] =
        sinet::encoder_specs_for(model, overflow_from(o.overflow), unknown_from(o.unknown));
    spec = o.which == "smiles" ? sm : in;
    inputs.push_back(file_digest(o.checkpoint));
  } else {
    const sinet::Dataset ds = sinet::load_csv(o.data);
    std::vector<std::string> strings;
    for (const sinet::MoleculeRecord& r : ds.records)
      strings.push_back(o.which == "smiles" ? r.smiles : r.inchi);
    spec.vocab = sinet::build_vocabulary(strings, o.reserve_unk);
    spec.max_len = o.which == "smiles" ? 82 : 162;
    spec.overflow = overflow_from(o.overflow);
    spec.unknown = unknown_from(o.unknown);
    inputs.push_back(file_digest(o.data));
  }
  if (o.max_len > 0) spec.max_len = o.max_len;

  const sinet::Tensor t = sinet::encode_onehot(o.text, spec);
  std::cout << "# string: " << o.text << '\n';
  std::cout << "# vocab: " << spec.vocab.chars << (spec.vocab.has_unk ? " (+UNK)" : "") << '\n';
  std::cout << "# shape: " << t.dim(0) << " x " << t.dim(1) << '\n';
  for (sinet::Dim r = 0; r < t.dim(0); ++r) {
    for (sinet::Dim c = 0; c < t.dim(1); ++c) {
      if (c) std::cout << ' ';
      std::cout << static_cast<int>(t.at2(r, c));
    }
    std::cout << '\n';
  }

  ensure_out_dir(o.out);
  write_manifest(o.out, {{"command", "encode"},
                         {"started", started},
                         {"inputs", inputs},
                         {"config",
                          {{"string", o.text},
                           {"which", o.which},
                           {"max_len", spec.max_len},
                           {"overflow", o.overflow},
                           {"unknown", o.unknown}}},
                         {"artifacts", json::object()},
                         {"metrics", {{"rows", t.dim(0)}, {"cols", t.dim(1)}}}});
  return 0;
}

int cmd_gradcheck(const GradcheckOpts& o) {
  const std::string started = iso8601_now();
  const sinet::GradCheckReport report = sinet::run_gradient_audit(o.seed, o.trials);
  sinet::print_gradcheck_report(report, std::cout);

  json entries = json::array();
  for (const sinet::GradCheckEntry& e : report.entries)
    entries.push_back({{"name", e.name},
                       {"trials", e.trials},
                       {"max_rel_err", e.max_rel_err},
                       {"tolerance", e.tolerance},
                       {"pass", e.pass}});
  ensure_out_dir(o.out);
  write_manifest(o.out, {{"command", "gradcheck"},
                         {"started", started},
                         {"seed", o.seed},
                         {"inputs", json::array()},
                         {"config", {{"trials", o.trials}}},
                         {"artifacts", json::object()},
                         {"metrics",
                          {{"all_pass", report.all_pass},
                           {"worst_primitive", report.worst_primitive},
                           {"worst_composite", report.worst_composite},
                           {"entries", entries}}}});
  return report.all_pass ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sinet — dual-representation molecular HOMO prediction"};
  app.require_subcommand(1);

  TrainOpts train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model from a molecule CSV");
  train_opts.data.attach(train_cmd);
  train_opts.train.attach(train_cmd);
  train_cmd->add_option("--variant", train_opts.variant, "dual | smiles | inchi | concat")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_opts.seed, "controls init, split and batch order")
      ->capture_default_str();
  train_cmd->add_option("--out", train_opts.out, "output directory")->capture_default_str();
  train_cmd->add_option("--smiles-len", train_opts.smiles_len)->capture_default_str();
  train_cmd->add_option("--inchi-len", train_opts.inchi_len)->capture_default_str();
  train_cmd->add_option("--conv-layers", train_opts.conv_layers)->capture_default_str();
  train_cmd->add_option("--conv-filters", train_opts.conv_filters)->capture_default_str();
  train_cmd->add_option("--kernel-size", train_opts.kernel_size)->capture_default_str();
  train_cmd->add_option("--pool-size", train_opts.pool_size)->capture_default_str();
  train_cmd->add_option("--lstm-layers", train_opts.lstm_layers)->capture_default_str();
  train_cmd->add_option("--lstm-units", train_opts.lstm_units)->capture_default_str();
  train_cmd->add_option("--dense-units", train_opts.dense_units)->capture_default_str();
  train_cmd->add_flag("!--no-reserve-unk", train_opts.reserve_unk,
                      "build vocabularies without an UNK slot");
  train_cmd->add_option("--overflow", train_opts.overflow, "reject | truncate")
      ->capture_default_str();
  train_cmd->add_option("--unknown", train_opts.unknown, "reject | map")->capture_default_str();

  FinetuneOpts ft_opts;
  CLI::App* ft_cmd = app.add_subcommand("finetune", "adapt a checkpoint to a new dataset");
  ft_opts.data.attach(ft_cmd);
  ft_opts.train.attach(ft_cmd);
  ft_cmd->add_option("--checkpoint", ft_opts.checkpoint, "source model (.sinc)")->required();
  ft_cmd->add_option("--seed", ft_opts.seed)->capture_default_str();
  ft_cmd->add_option("--out", ft_opts.out, "output directory")->capture_default_str();
  ft_cmd->add_option("--overflow", ft_opts.overflow, "reject | truncate")->capture_default_str();
  ft_cmd->add_option("--unknown", ft_opts.unknown, "reject | map")->capture_default_str();
  ft_cmd->add_flag("--compare-scratch", ft_opts.compare_scratch,
                   "also train from-scratch baselines and report the paired comparison");
  ft_cmd->add_option("--seeds", ft_opts.seeds, "seed count for --compare-scratch")
      ->capture_default_str();

  EvalOpts eval_opts;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a dataset");
  eval_opts.data.attach(eval_cmd);
  eval_cmd->add_option("--checkpoint", eval_opts.checkpoint, "model to score (.sinc)")->required();
  eval_cmd->add_option("--out", eval_opts.out, "output directory")->capture_default_str();
  eval_cmd->add_option("--overflow", eval_opts.overflow, "reject | truncate")
      ->capture_default_str();
  eval_cmd->add_option("--unknown", eval_opts.unknown, "reject | map")->capture_default_str();

  PredictOpts pred_opts;
  CLI::App* pred_cmd = app.add_subcommand("predict", "write per-molecule HOMO predictions");
  pred_opts.data.attach(pred_cmd);
  pred_cmd->add_option("--checkpoint", pred_opts.checkpoint, "model to apply (.sinc)")
      ->required();
  pred_cmd->add_option("--out", pred_opts.out, "output directory")->capture_default_str();
  pred_cmd->add_option("--overflow", pred_opts.overflow, "reject | truncate")
      ->capture_default_str();
  pred_cmd->add_option("--unknown", pred_opts.unknown, "reject | map")->capture_default_str();

  ScharberOpts sch_opts;
  CLI::App* sch_cmd = app.add_subcommand(
      "scharber", "open-circuit voltage and power conversion efficiency from energy levels");
  sch_cmd->add_option("--homo", sch_opts.in.e_homo_donor_ev, "donor HOMO in eV")->required();
  sch_cmd->add_option("--lumo", sch_opts.in.e_lumo_acceptor_ev, "acceptor LUMO in eV")
      ->required();
  sch_cmd->add_option("--ff", sch_opts.in.fill_factor, "fill factor in (0, 1]")
      ->capture_default_str();
  sch_cmd->add_option("--jsc", sch_opts.in.j_sc_ma_cm2, "short-circuit current, mA/cm^2")
      ->capture_default_str();
  sch_cmd->add_option("--pin", sch_opts.in.p_in_mw_cm2, "incident power, mW/cm^2")
      ->capture_default_str();
  sch_cmd->add_flag("--magnitude-convention", sch_opts.magnitude,
                    "use Voc = |E_HOMO| - |E_LUMO| - 0.3 instead of the literal difference");
  sch_cmd->add_option("--out", sch_opts.out, "output directory")->capture_default_str();

  EncodeOpts enc_opts;
  CLI::App* enc_cmd = app.add_subcommand("encode", "dump the one-hot matrix of a string");
  enc_cmd->add_option("--string", enc_opts.text, "text to encode")->required();
  enc_cmd->add_option("--checkpoint", enc_opts.checkpoint, "take vocabulary from this model");
  enc_cmd->add_option("--data", enc_opts.data, "build vocabulary from this CSV");
  enc_cmd->add_option("--which", enc_opts.which, "smiles | inchi")->capture_default_str();
  enc_cmd->add_option("--max-len", enc_opts.max_len, "override the padded length");
  enc_cmd->add_flag("--reserve-unk", enc_opts.reserve_unk,
                    "reserve an UNK slot when building from --data");
  enc_cmd->add_option("--overflow", enc_opts.overflow, "reject | truncate")
      ->capture_default_str();
  enc_cmd->add_option("--unknown", enc_opts.unknown, "reject | map")->capture_default_str();
  enc_cmd->add_option("--out", enc_opts.out, "output directory")->capture_default_str();

  GradcheckOpts gc_opts;
  CLI::App* gc_cmd =
      app.add_subcommand("gradcheck", "finite-difference audit of every backward pass");
  gc_cmd->add_option("--seed", gc_opts.seed)->capture_default_str();
  gc_cmd->add_option("--trials", gc_opts.trials, "random cases per operation")
      ->capture_default_str();
  gc_cmd->add_option("--out", gc_opts.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_opts);
    if (ft_cmd->parsed()) return cmd_finetune(ft_opts);
    if (eval_cmd->parsed()) return cmd_eval(eval_opts);
    if (pred_cmd->parsed()) return cmd_predict(pred_opts);
    if (sch_cmd->parsed()) return cmd_scharber(sch_opts);
    if (enc_cmd->parsed()) return cmd_encode(enc_opts);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc_opts);
    return 2;
  } catch (const sinet::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const sinet::DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const sinet::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const sinet::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const sinet::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const sinet::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  } catch (const sinet::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
