#pragma once

// Synthetic corpora and disk fixtures shared by the unit, CLI and acceptance
// suites.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sinet/sinet.hpp"

namespace synth {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "sinet-test-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (::mkdtemp(buf.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    root_ = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(root_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string path() const { return root_.string(); }
  std::string file(const std::string& name) const { return (root_ / name).string(); }

 private:
  std::filesystem::path root_;
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("write_text failed: " + path);
}

inline std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_bytes failed: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Standard normal via Box-Muller.
inline double normal(sinet::SplitRng& rng) {
  double u1 = rng.next_double();
  while (u1 <= 0.0) u1 = rng.next_double();
  const double u2 = rng.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// ---- counting corpora ----
//
// target = base + coef_smiles * (#'N' in SMILES)/10
//               + coef_inchi  * (#digits in the InChI body)/10 + noise.
//
// Each notation also carries a decoy drawn from the *same* character pool as
// the other notation's signal: ring-closure digits in the SMILES, nitrogen
// atoms in the InChI.  Per-notation counts are clean features, but counts
// over the union of both strings mix signal with decoy, so a model that sees
// the two strings as one undifferentiated sequence has a handicap.

struct CountingParams {
  int n = 5000;
  std::uint64_t seed = 1;
  double base = -5.0;
  double coef_smiles = 2.0;
  double coef_inchi = 2.0;
  double noise_sigma = 0.02;
  int max_count = 5;   // signal/decoy counts are uniform on {0..max_count}
  bool sulfur = false; // sprinkle 'S' atoms into the SMILES (vocabulary shift)
};

inline sinet::Dataset counting_corpus(const CountingParams& p) {
  sinet::SplitRng rng = sinet::SplitRng(p.seed).split("counting_corpus");
  const std::string digit_pool = "1234";
  const std::string smiles_filler = "CO()=";
  const std::string inchi_filler = "cHO-h";
  sinet::Dataset ds;
  ds.name = "counting";
  ds.records.reserve(static_cast<std::size_t>(p.n));
  for (int i = 0; i < p.n; ++i) {
    const int bound = p.max_count + 1;
    const int n_nitrogen = static_cast<int>(rng.next_below(bound));
    const int n_decoy_digits = static_cast<int>(rng.next_below(bound));
    const int n_signal_digits = static_cast<int>(rng.next_below(bound));
    const int n_decoy_nitrogen = static_cast<int>(rng.next_below(bound));

    std::vector<char> bag;
    for (int k = 0; k < n_nitrogen; ++k) bag.push_back('N');
    for (int k = 0; k < n_decoy_digits; ++k)
      bag.push_back(digit_pool[rng.next_below(digit_pool.size())]);
    const int filler = 6 + static_cast<int>(rng.next_below(9));
    for (int k = 0; k < filler; ++k)
      bag.push_back(smiles_filler[rng.next_below(smiles_filler.size())]);
    if (p.sulfur && rng.next_below(3) == 0) bag.push_back('S');
    rng.shuffle(bag);
    const std::string smiles(bag.begin(), bag.end());

    bag.clear();
    for (int k = 0; k < n_signal_digits; ++k)
      bag.push_back(digit_pool[rng.next_below(digit_pool.size())]);
    for (int k = 0; k < n_decoy_nitrogen; ++k) bag.push_back('N');
    const int body_filler = 6 + static_cast<int>(rng.next_below(9));
    for (int k = 0; k < body_filler; ++k)
      bag.push_back(inchi_filler[rng.next_below(inchi_filler.size())]);
    rng.shuffle(bag);
    const std::string inchi = "InChI=1S/" + std::string(bag.begin(), bag.end());

    sinet::MoleculeRecord r;
    r.id = "m" + std::to_string(i + 1);
    r.smiles = smiles;
    r.inchi = inchi;
    r.homo_ev = p.base + p.coef_smiles * n_nitrogen / 10.0 +
                p.coef_inchi * n_signal_digits / 10.0 + p.noise_sigma * normal(rng);
    ds.records.push_back(std::move(r));
  }
  return ds;
}

// 32 alkane-style chains of distinct lengths with a clean linear target:
// small enough to memorize, structured enough that memorizing requires the
// convolution/recurrence path to distinguish sequence lengths.
inline sinet::Dataset overfit_corpus() {
  sinet::Dataset ds;
  ds.name = "overfit";
  for (int k = 1; k <= 32; ++k) {
    sinet::MoleculeRecord r;
    r.id = "m" + std::to_string(k);
    r.smiles = std::string(static_cast<std::size_t>(k), 'C');
    r.inchi = "InChI=1S/CH4";
    r.homo_ev = -1.0 + 0.05 * k;
    ds.records.push_back(std::move(r));
  }
  return ds;
}

// ---- model scaffolding over a corpus ----

struct NetSize {
  int conv_layers = 1;
  int conv_filters = 8;
  int kernel_size = 3;
  int pool_size = 2;
  int lstm_layers = 1;
  int lstm_units = 12;
  int dense_units = 16;
};

inline sinet::SinetConfig small_config(sinet::Variant v, const sinet::Dataset& ds, int smiles_len,
                                       int inchi_len, NetSize sz = {}, bool reserve_unk = false) {
  std::vector<std::string> smiles_corpus, inchi_corpus;
  smiles_corpus.reserve(ds.size());
  inchi_corpus.reserve(ds.size());
  for (const sinet::MoleculeRecord& r : ds.records) {
    smiles_corpus.push_back(r.smiles);
    inchi_corpus.push_back(r.inchi);
  }
  sinet::SinetConfig c;
  c.variant = v;
  c.smiles_len = smiles_len;
  c.inchi_len = inchi_len;
  c.smiles_vocab = sinet::build_vocabulary(smiles_corpus, reserve_unk);
  c.inchi_vocab = sinet::build_vocabulary(inchi_corpus, reserve_unk);
  c.conv_layers = sz.conv_layers;
  c.conv_filters = sz.conv_filters;
  c.kernel_size = sz.kernel_size;
  c.pool_size = sz.pool_size;
  c.lstm_layers = sz.lstm_layers;
  c.lstm_units = sz.lstm_units;
  c.dense_units = sz.dense_units;
  return c;
}

inline sinet::EncodedDataset encode_for_config(
    const sinet::SinetConfig& c, const sinet::Dataset& ds,
    sinet::OverflowPolicy overflow = sinet::OverflowPolicy::Reject,
    sinet::UnknownPolicy unknown = sinet::UnknownPolicy::Reject) {
  const sinet::EncoderSpec smiles{c.smiles_vocab, c.smiles_len, overflow, unknown};
  const sinet::EncoderSpec inchi{c.inchi_vocab, c.inchi_len, overflow, unknown};
  return sinet::encode_dataset(ds, smiles, inchi);
}

}  // namespace synth
