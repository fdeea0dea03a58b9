#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "sinet/data_io.hpp"
#include "support/synthetic.hpp"

// SINET_CLI_PATH is injected by the build: the path of the `sinet` binary.

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args, synth::TempDir& dir, const std::string& env = "") {
  const std::string out_path = dir.file("cli_stdout.txt");
  const std::string err_path = dir.file("cli_stderr.txt");
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" SINET_CLI_PATH "\" " + args +
                          " > \"" + out_path + "\" 2> \"" + err_path + "\"";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = synth::read_bytes(out_path);
  r.err = synth::read_bytes(err_path);
  return r;
}

std::string write_corpus(synth::TempDir& dir, int n = 30, std::uint64_t seed = 5) {
  synth::CountingParams p;
  p.n = n;
  p.seed = seed;
  p.max_count = 3;
  const sinet::Dataset ds = synth::counting_corpus(p);
  const std::string path = dir.file("corpus.csv");
  sinet::export_csv(ds, path);
  return path;
}

// small-network flags shared by the training-path tests
const char* kTinyNet =
    "--variant smiles --smiles-len 24 --inchi-len 40 --conv-layers 1 --conv-filters 2 "
    "--kernel-size 3 --lstm-layers 1 --lstm-units 3 --dense-units 4 --strat-bins 5";

}  // namespace

TEST_CASE("scharber prints the formula result to three decimals") {
  synth::TempDir dir;
  const RunResult r = run_cli("scharber --homo -5.0 --lumo -4.7 --ff 0.65 --jsc 15 --pin 100 "
                              "--out \"" + dir.path() + "\"",
                              dir);
  REQUIRE(r.code == 0);
  REQUIRE(r.out == "Voc=-0.600 V, PCE=-5.850%\n");

  const json manifest = json::parse(synth::read_bytes(dir.file("manifest.json")));
  REQUIRE(manifest["command"] == "scharber");
  REQUIRE(manifest["metrics"]["voc_v"].get<double>() == Catch::Approx(-0.6).margin(1e-12));
  REQUIRE(manifest.contains("started"));
  REQUIRE(manifest.contains("finished"));
}

TEST_CASE("scharber can apply the magnitude convention behind a labeled flag") {
  synth::TempDir dir;
  const RunResult r = run_cli("scharber --homo -5.4 --lumo -4.0 --magnitude-convention --out \"" +
                                  dir.path() + "\"",
                              dir);
  REQUIRE(r.code == 0);
  REQUIRE(r.out.rfind("Voc=1.100 V, PCE=10.725%\n", 0) == 0);
  REQUIRE(r.out.find("magnitude convention") != std::string::npos);
}

TEST_CASE("scharber rejects a non-physical fill factor with a numeric exit code") {
  synth::TempDir dir;
  const RunResult r = run_cli("scharber --homo -5.0 --lumo -4.7 --ff 1.5 --out \"" + dir.path() +
                                  "\"",
                              dir);
  REQUIRE(r.code == 4);
  REQUIRE(r.err.find("error:") != std::string::npos);
  REQUIRE_FALSE(fs::exists(dir.file("manifest.json")));  // manifests only on success
}

TEST_CASE("missing required flags and unknown subcommands exit with usage code 2") {
  synth::TempDir dir;
  REQUIRE(run_cli("train", dir).code == 2);  // no --data
  REQUIRE(run_cli("", dir).code == 2);       // no subcommand
  REQUIRE(run_cli("frobnicate", dir).code == 2);
  REQUIRE(run_cli("--help", dir).code == 0);
  REQUIRE(run_cli("scharber --help", dir).code == 0);
}

TEST_CASE("train writes checkpoint, history and manifest and reports metrics") {
  synth::TempDir dir;
  const std::string csv = write_corpus(dir);
  const std::string out = dir.path() + "/run1";
  const RunResult r = run_cli("train --data \"" + csv + "\" --seed 7 --max-epochs 2 "
                              "--batch-size 16 " + std::string(kTinyNet) + " --out \"" + out +
                              "\"",
                              dir);
  INFO(r.err);
  REQUIRE(r.code == 0);
  REQUIRE(fs::exists(out + "/model.sinc"));
  REQUIRE(fs::exists(out + "/history.csv"));
  REQUIRE(fs::exists(out + "/manifest.json"));

  const json result = json::parse(r.out);
  REQUIRE(result["test"]["mse"].get<double>() >= 0.0);
  REQUIRE(result["epochs_run"] == 2);
  REQUIRE(result["checkpoint_id"].get<std::string>().size() == 16);

  const json manifest = json::parse(synth::read_bytes(out + "/manifest.json"));
  REQUIRE(manifest["command"] == "train");
  REQUIRE(manifest["seed"] == 7);
  REQUIRE(manifest["inputs"][0]["crc32"].get<std::string>().size() == 8);
  REQUIRE(manifest["config"]["model"]["variant"] == "smiles");
  REQUIRE(manifest["artifacts"]["checkpoint"] == out + "/model.sinc");

  const std::string history = synth::read_bytes(out + "/history.csv");
  REQUIRE(history.rfind("epoch,train_mse,val_mse,val_mape\n", 0) == 0);
}

TEST_CASE("identical train invocations produce bitwise-identical checkpoints") {
  synth::TempDir dir;
  const std::string csv = write_corpus(dir);
  const std::string flags = "train --data \"" + csv + "\" --seed 3 --max-epochs 1 "
                            "--batch-size 16 " + std::string(kTinyNet);
  const RunResult a = run_cli(flags + " --out \"" + dir.path() + "/a\"", dir, "SINET_THREADS=1");
  const RunResult b = run_cli(flags + " --out \"" + dir.path() + "/b\"", dir, "SINET_THREADS=1");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  REQUIRE(synth::read_bytes(dir.path() + "/a/model.sinc") ==
          synth::read_bytes(dir.path() + "/b/model.sinc"));
  REQUIRE(a.out == b.out);  // identical metric outputs too
}

TEST_CASE("eval and predict run against a trained checkpoint") {
  synth::TempDir dir;
  const std::string csv = write_corpus(dir);
  const std::string out = dir.path() + "/run";
  REQUIRE(run_cli("train --data \"" + csv + "\" --seed 1 --max-epochs 1 --batch-size 16 " +
                      std::string(kTinyNet) + " --out \"" + out + "\"",
                  dir)
              .code == 0);

  const RunResult ev = run_cli("eval --checkpoint \"" + out + "/model.sinc\" --data \"" + csv +
                                   "\" --out \"" + dir.path() + "/eval\"",
                               dir);
  INFO(ev.err);
  REQUIRE(ev.code == 0);
  const json metrics = json::parse(ev.out);
  REQUIRE(metrics["count"] == 30);
  REQUIRE(metrics["mse"].get<double>() >= 0.0);
  REQUIRE(fs::exists(dir.path() + "/eval/manifest.json"));

  const RunResult pr = run_cli("predict --checkpoint \"" + out + "/model.sinc\" --data \"" + csv +
                                   "\" --out \"" + dir.path() + "/pred\"",
                               dir);
  INFO(pr.err);
  REQUIRE(pr.code == 0);
  const std::string preds = synth::read_bytes(dir.path() + "/pred/predictions.csv");
  REQUIRE(preds.rfind("id,homo_ev_pred\n", 0) == 0);
  REQUIRE(std::count(preds.begin(), preds.end(), '\n') == 31);  // header + one row per molecule
}

TEST_CASE("finetune adapts a checkpoint and records provenance") {
  synth::TempDir dir;
  const std::string csv = write_corpus(dir);
  const std::string out = dir.path() + "/src";
  REQUIRE(run_cli("train --data \"" + csv + "\" --seed 2 --max-epochs 1 --batch-size 16 " +
                      std::string(kTinyNet) + " --out \"" + out + "\"",
                  dir)
              .code == 0);

  const RunResult ft = run_cli("finetune --checkpoint \"" + out + "/model.sinc\" --data \"" +
                                   csv + "\" --seed 4 --max-epochs 1 --batch-size 16 "
                                   "--strat-bins 5 --out \"" + dir.path() + "/ft\"",
                               dir);
  INFO(ft.err);
  REQUIRE(ft.code == 0);
  const json result = json::parse(ft.out);
  REQUIRE(result["provenance"].get<std::string>().rfind("finetuned-from:", 0) == 0);
  REQUIRE(fs::exists(dir.path() + "/ft/model.sinc"));

  const json manifest = json::parse(synth::read_bytes(dir.path() + "/ft/manifest.json"));
  REQUIRE(manifest["command"] == "finetune");
  REQUIRE(manifest["source_checkpoint_id"].get<std::string>().size() == 16);
}

TEST_CASE("finetune --compare-scratch writes one CSV row per run") {
  synth::TempDir dir;
  const std::string csv = write_corpus(dir);
  const std::string out = dir.path() + "/src";
  REQUIRE(run_cli("train --data \"" + csv + "\" --seed 2 --max-epochs 1 --batch-size 16 " +
                      std::string(kTinyNet) + " --out \"" + out + "\"",
                  dir)
              .code == 0);

  const RunResult cmp = run_cli("finetune --checkpoint \"" + out + "/model.sinc\" --data \"" +
                                    csv + "\" --seed 1 --seeds 2 --compare-scratch "
                                    "--max-epochs 1 --batch-size 16 --strat-bins 5 --out \"" +
                                    dir.path() + "/cmp\"",
                                dir);
  INFO(cmp.err);
  REQUIRE(cmp.code == 0);
  const std::string rows = synth::read_bytes(dir.path() + "/cmp/compare.csv");
  REQUIRE(rows.rfind("seed,run,mse,mae,mape\n", 0) == 0);
  REQUIRE(std::count(rows.begin(), rows.end(), '\n') == 5);  // header + 2 seeds x 2 runs
  const json report = json::parse(cmp.out);
  REQUIRE(report["per_seed"].size() == 2);
  REQUIRE(report["aggregate"]["finetuned"]["mse"].contains("mean"));
}

TEST_CASE("encode dumps a readable one-hot matrix") {
  synth::TempDir dir;
  const std::string csv = write_corpus(dir);
  const RunResult r = run_cli("encode --string CO --data \"" + csv +
                                  "\" --which smiles --max-len 4 --out \"" + dir.path() + "\"",
                              dir);
  INFO(r.err);
  REQUIRE(r.code == 0);
  REQUIRE(r.out.find("# string: CO") != std::string::npos);
  REQUIRE(r.out.find("# shape: 4 x ") != std::string::npos);
  // four matrix rows follow the three comment lines
  REQUIRE(std::count(r.out.begin(), r.out.end(), '\n') == 7);

  // exactly one vocabulary source is accepted
  REQUIRE(run_cli("encode --string CO --out \"" + dir.path() + "\"", dir).code == 2);
  // unknown characters under the default reject policy are data errors
  REQUIRE(run_cli("encode --string '~~~' --data \"" + csv + "\" --out \"" + dir.path() + "\"",
                  dir)
              .code == 3);
}

TEST_CASE("data and file problems map to the documented exit codes") {
  synth::TempDir dir;
  const std::string bad = dir.file("bad.csv");
  synth::write_text(bad, "id,smiles\nm1,CC\n");  // missing inchi and homo_ev columns
  REQUIRE(run_cli("train --data \"" + bad + "\" --out \"" + dir.path() + "\"", dir).code == 3);
  REQUIRE(run_cli("train --data \"" + dir.file("absent.csv") + "\" --out \"" + dir.path() + "\"",
                  dir)
              .code == 5);
  REQUIRE(run_cli("eval --checkpoint \"" + dir.file("absent.sinc") + "\" --data \"" + bad +
                      "\" --out \"" + dir.path() + "\"",
                  dir)
              .code == 5);

  const std::string fake = dir.file("fake.sinc");
  synth::write_text(fake, "this is not a checkpoint at all, but it is long enough");
  REQUIRE(run_cli("eval --checkpoint \"" + fake + "\" --data \"" + bad + "\" --out \"" +
                      dir.path() + "\"",
                  dir)
              .code == 3);
}

TEST_CASE("gradcheck reports a clean audit from the command line") {
  synth::TempDir dir;
  const RunResult r = run_cli("gradcheck --seed 1 --trials 1 --out \"" + dir.path() + "\"", dir);
  INFO(r.err);
  REQUIRE(r.code == 0);
  REQUIRE(r.out.find("all clear") != std::string::npos);
  const json manifest = json::parse(synth::read_bytes(dir.file("manifest.json")));
  REQUIRE(manifest["metrics"]["all_pass"] == true);
  REQUIRE(manifest["metrics"]["worst_primitive"].get<double>() <= 1e-6);
}
