// End-to-end library tour: encode a toy corpus, train a small dual-branch
// model, round-trip it through a checkpoint, predict, and turn a predicted
// HOMO level into a Scharber PCE estimate.

#include <cstdio>
#include <string>
#include <vector>

#include "sinet/sinet.hpp"

using namespace sinet;

int main() {
  // A toy corpus: HOMO tracks the number of nitrogens. Real work would use
  // load_csv(path) on a file with smiles/inchi/homo_ev columns.
  Dataset ds;
  const std::string smiles_pool = "CCO(N)", inchi_pool = "CHNO/123c";
  SplitRng rng(7);
  for (int i = 0; i < 120; ++i) {
    MoleculeRecord r;
    r.id = "mol-" + std::to_string(i);
    const int nitrogens = static_cast<int>(rng.next_below(4));
    r.smiles = "C";
    for (int k = 0; k < nitrogens; ++k) r.smiles += "N";
    while (r.smiles.size() < 10) r.smiles += smiles_pool[rng.next_below(smiles_pool.size())];
    r.inchi = "InChI=1S/";
    for (int k = 0; k < 8; ++k) r.inchi += inchi_pool[rng.next_below(inchi_pool.size())];
    r.homo_ev = -5.0 + 0.2 * nitrogens;
    ds.records.push_back(std::move(r));
  }
  std::vector<std::string> smiles_corpus, inchi_corpus;
  for (const MoleculeRecord& r : ds.records) {
    smiles_corpus.push_back(r.smiles);
    inchi_corpus.push_back(r.inchi);
  }

  // Model sized for this corpus rather than the published defaults.
  SinetConfig config;
  config.variant = Variant::DualBranch;
  config.smiles_len = 12;
  config.inchi_len = 20;
  config.smiles_vocab = build_vocabulary(smiles_corpus, /*reserve_unk=*/true);
  config.inchi_vocab = build_vocabulary(inchi_corpus, /*reserve_unk=*/true);
  config.conv_layers = 1;
  config.conv_filters = 8;
  config.lstm_layers = 1;
  config.lstm_units = 12;
  config.dense_units = 16;
  config.validate();

  SinetModel model = build_model(config, /*seed=*/1);
  std::printf("model: %lld parameters\n",
              static_cast<long long>(count_parameters(model)));

  const EncoderSpec smiles_spec{config.smiles_vocab, config.smiles_len, OverflowPolicy::Truncate,
                                UnknownPolicy::MapToUnk};
  const EncoderSpec inchi_spec{config.inchi_vocab, config.inchi_len, OverflowPolicy::Truncate,
                               UnknownPolicy::MapToUnk};
  const EncodedDataset all = encode_dataset(ds, smiles_spec, inchi_spec);
  SplitSpec split_spec;
  split_spec.seed = 1;
  const SplitIndices split = stratified_split(all.targets, split_spec);

  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 16;
  tc.max_epochs = 40;
  tc.patience = 8;
  tc.seed = 1;
  const TrainStats stats =
      train(model, all.subset(split.train), all.subset(split.validation), tc);
  std::printf("trained %zu epochs, best val MSE %.4g (epoch %d)\n", stats.history.size(),
              stats.best_val_mse, stats.best_epoch);

  const Metrics test = evaluate(model, all.subset(split.test));
  std::printf("test: MSE %.4g, MAE %.4g\n", test.mse, test.mae);

  // Checkpoints round-trip bitwise; the id is a content hash.
  save_checkpoint(model, "quickstart.sinc");
  SinetModel restored = load_checkpoint("quickstart.sinc");
  std::printf("checkpoint id %s\n", restored.metadata().checkpoint_id.c_str());

  // Predict a single molecule and feed the HOMO level into the PCE estimate.
  NoGradGuard no_grad;
  const Tensor sm = encode_onehot("CNNC(N)", smiles_spec);
  const Tensor in = encode_onehot("InChI=1S/C2H3N/c1", inchi_spec);
  const double homo = restored.forward_one(&sm, &in).item();
  ScharberInputs cell;
  cell.e_homo_donor_ev = homo;
  cell.e_lumo_acceptor_ev = -4.0;
  cell.fill_factor = 0.65;
  cell.j_sc_ma_cm2 = 10.0;
  cell.p_in_mw_cm2 = 100.0;
  const ScharberResult pce = scharber_pce(cell);
  std::printf("predicted HOMO %.3f eV -> Voc %.3f V, PCE %.3f%%\n", homo, pce.voc_v,
              pce.pce_percent);
  return 0;
}
