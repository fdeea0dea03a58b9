#pragma once

// The SINet dual-representation regressor.
//
// Each representation branch is
//   onehot [T x V] -> conv(3, F, same)+relu -> conv(3, F, same)+relu
//                  -> maxpool(2) -> LSTM(H, sequences) -> LSTM(H, final) -> [H]
// and the head is concat -> dense(D, relu) -> dense(1, linear).
//
// Variants: a SMILES-only branch, an InChI-only branch, both branches merged
// (DualBranch), or a single branch fed the two strings stacked row-wise in a
// shared union vocabulary (ConcatSingleBranch).
//
// The hidden head layer is computed as dense(linear) followed by a standalone
// relu op: identical math to a fused dense+relu, but it leaves the
// pre-activation visible on the graph for the gradient audit's kink checks.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sinet/adam.hpp"
#include "sinet/encoding.hpp"
#include "sinet/ops.hpp"
#include "sinet/rng.hpp"
#include "sinet/tensor.hpp"

namespace sinet {

enum class Variant { SmilesOnly, InchiOnly, ConcatSingleBranch, DualBranch };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::SmilesOnly: return "smiles";
    case Variant::InchiOnly: return "inchi";
    case Variant::ConcatSingleBranch: return "concat";
    case Variant::DualBranch: return "dual";
  }
  throw UsageError("to_string: bad variant");
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "smiles") return Variant::SmilesOnly;
  if (s == "inchi") return Variant::InchiOnly;
  if (s == "concat") return Variant::ConcatSingleBranch;
  if (s == "dual") return Variant::DualBranch;
  throw UsageError("variant_from_string: unknown variant \"" + s +
                   "\" (expected smiles|inchi|concat|dual)");
}

struct SinetConfig {
  Variant variant = Variant::DualBranch;
  int smiles_len = 82;
  int inchi_len = 162;
  Vocabulary smiles_vocab;
  Vocabulary inchi_vocab;
  int conv_layers = 2;
  int conv_filters = 32;
  int kernel_size = 3;
  int pool_size = 2;
  int lstm_layers = 2;
  int lstm_units = 64;
  int dense_units = 64;

  bool uses_smiles() const { return variant != Variant::InchiOnly; }
  bool uses_inchi() const { return variant != Variant::SmilesOnly; }

  void validate() const {
    if (smiles_len < 1 || inchi_len < 1)
      throw UsageError("SinetConfig: sequence lengths must be positive");
    if (conv_layers < 1 || conv_filters < 1 || lstm_layers < 1 || lstm_units < 1 ||
        dense_units < 1)
      throw UsageError("SinetConfig: layer counts and widths must be positive");
    if (kernel_size < 1 || kernel_size % 2 == 0)
      throw UsageError("SinetConfig: kernel size must be odd and positive, got " +
                       std::to_string(kernel_size));
    if (pool_size < 1) throw UsageError("SinetConfig: pool size must be positive");
    if (uses_smiles() && smiles_vocab.size() < 1)
      throw UsageError("SinetConfig: variant '" + to_string(variant) +
                       "' needs a SMILES vocabulary");
    if (uses_inchi() && inchi_vocab.size() < 1)
      throw UsageError("SinetConfig: variant '" + to_string(variant) +
                       "' needs an InChI vocabulary");
    const int branch_len = variant == Variant::ConcatSingleBranch ? smiles_len + inchi_len
                           : variant == Variant::InchiOnly        ? inchi_len
                                                                  : smiles_len;
    if (branch_len / pool_size < 1)
      throw UsageError("SinetConfig: pooling over " + std::to_string(pool_size) +
                       " empties a length-" + std::to_string(branch_len) + " branch");
    if (variant == Variant::DualBranch && inchi_len / pool_size < 1)
      throw UsageError("SinetConfig: pooling empties the InChI branch");
  }
};

struct ModelMetadata {
  std::uint64_t init_seed = 0;
  std::string conv_activation = "relu";
  std::string head_activation = "relu";
  std::string output_activation = "linear";
  std::string init_scheme = "glorot-uniform; lstm recurrent uniform(1/sqrt(h)); forget bias 1";
  std::string concat_input = "union-vocab-row-stack";
  std::string provenance = "scratch";
  std::string checkpoint_id;  // filled when saved
};

struct ConvLayer {
  Tensor kernels;  // [K x Cin x Cout]
  Tensor bias;     // [Cout]
};

struct BranchParams {
  std::vector<ConvLayer> convs;
  std::vector<LstmParams> lstms;
};

struct HeadParams {
  Tensor hidden_w, hidden_b;  // [merge x D], [D]
  Tensor out_w, out_b;        // [D x 1], [1]
};

class SinetModel;
inline SinetModel build_model(const SinetConfig& config, std::uint64_t seed);

class SinetModel {
 public:
  SinetModel() = default;

  const SinetConfig& config() const { return cfg_; }
  const ModelMetadata& metadata() const { return meta_; }
  ModelMetadata& metadata() { return meta_; }
  ParamSet& parameters() { return params_; }
  const ParamSet& parameters() const { return params_; }
  const Vocabulary& union_vocab() const { return union_vocab_; }

  // Width of the vector entering the head.
  Dim merge_width() const {
    return cfg_.variant == Variant::DualBranch ? 2 * static_cast<Dim>(cfg_.lstm_units)
                                               : static_cast<Dim>(cfg_.lstm_units);
  }

  // Single-sample forward.  Unused inputs may be null; missing required
  // inputs are a usage error.  Returns a [1] tensor on the autodiff graph.
  Tensor forward_one(const Tensor* smiles_onehot, const Tensor* inchi_onehot) const {
    switch (cfg_.variant) {
      case Variant::SmilesOnly: {
        require(smiles_onehot, "smiles");
        check_input(*smiles_onehot, cfg_.smiles_len, cfg_.smiles_vocab.size(), "smiles");
        return head(branch_forward(smiles_, *smiles_onehot));
      }
      case Variant::InchiOnly: {
        require(inchi_onehot, "inchi");
        check_input(*inchi_onehot, cfg_.inchi_len, cfg_.inchi_vocab.size(), "inchi");
        return head(branch_forward(inchi_, *inchi_onehot));
      }
      case Variant::DualBranch: {
        require(smiles_onehot, "smiles");
        require(inchi_onehot, "inchi");
        check_input(*smiles_onehot, cfg_.smiles_len, cfg_.smiles_vocab.size(), "smiles");
        check_input(*inchi_onehot, cfg_.inchi_len, cfg_.inchi_vocab.size(), "inchi");
        const Tensor hs = branch_forward(smiles_, *smiles_onehot);
        const Tensor hi = branch_forward(inchi_, *inchi_onehot);
        return head(concat(hs, hi));
      }
      case Variant::ConcatSingleBranch: {
        require(smiles_onehot, "smiles");
        require(inchi_onehot, "inchi");
        check_input(*smiles_onehot, cfg_.smiles_len, cfg_.smiles_vocab.size(), "smiles");
        check_input(*inchi_onehot, cfg_.inchi_len, cfg_.inchi_vocab.size(), "inchi");
        return head(branch_forward(concat_, concat_input(*smiles_onehot, *inchi_onehot)));
      }
    }
    throw UsageError("forward_one: bad variant");
  }

  // Batch forward over [B x T x V] stacks; returns [B] predictions.
  Tensor forward_batch(const Tensor* smiles_batch, const Tensor* inchi_batch) const {
    Dim B = -1;
    auto batch_of = [&](const Tensor* t, const char* which) {
      if (!t || !t->defined()) return;
      if (t->rank() != 3)
        throw DimensionError(std::string("forward: ") + which + " batch must be [B x T x V], got " +
                             shape_str(t->shape()));
      if (B >= 0 && t->dim(0) != B)
        throw DimensionError("forward: mismatched batch sizes, " + std::to_string(B) + " vs " +
                             std::to_string(t->dim(0)));
      B = t->dim(0);
    };
    batch_of(smiles_batch, "smiles");
    batch_of(inchi_batch, "inchi");
    if (B < 0) throw UsageError("forward: no inputs given");
    if (B == 0) throw DataError("forward: empty batch");
    std::vector<Tensor> preds;
    preds.reserve(static_cast<std::size_t>(B));
    for (Dim b = 0; b < B; ++b) {
      Tensor sm, in;
      if (smiles_batch && smiles_batch->defined()) sm = slice_sample(*smiles_batch, b);
      if (inchi_batch && inchi_batch->defined()) in = slice_sample(*inchi_batch, b);
      preds.push_back(forward_one(sm.defined() ? &sm : nullptr, in.defined() ? &in : nullptr));
    }
    return stack_scalars(preds);
  }

  // Deep copy: fresh parameter storage, same values and metadata.
  SinetModel clone() const {
    SinetModel m = build_model(cfg_, meta_.init_seed);
    m.meta_ = meta_;
    m.copy_parameters_from(*this);
    return m;
  }

  void copy_parameters_from(const SinetModel& other) {
    if (other.params_.size() != params_.size())
      throw DimensionError("copy_parameters_from: parameter count mismatch, " +
                           std::to_string(other.params_.size()) + " vs " +
                           std::to_string(params_.size()));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].name != other.params_[i].name ||
          params_[i].value.shape() != other.params_[i].value.shape())
        throw DimensionError("copy_parameters_from: parameter '" + params_[i].name +
                             "' does not match '" + other.params_[i].name + "'");
      params_[i].value.data() = other.params_[i].value.data();
    }
  }

 private:
  friend SinetModel build_model(const SinetConfig& config, std::uint64_t seed);

  static void require(const Tensor* t, const char* which) {
    if (!t || !t->defined())
      throw UsageError(std::string("forward: variant requires a ") + which + " input");
  }

  static void check_input(const Tensor& t, int len, int width, const char* which) {
    if (t.rank() != 2 || t.dim(0) != len || t.dim(1) != width)
      throw DimensionError(std::string("forward: ") + which + " input must be [" +
                           std::to_string(len) + "x" + std::to_string(width) + "], got " +
                           shape_str(t.shape()));
  }

  static Tensor slice_sample(const Tensor& batch, Dim b) {
    const Dim T = batch.dim(1), V = batch.dim(2);
    const std::size_t n = static_cast<std::size_t>(T * V);
    const double* src = batch.data().data() + static_cast<std::size_t>(b) * n;
    return Tensor(Shape{T, V}, std::vector<double>(src, src + n));
  }

  Tensor branch_forward(const BranchParams& branch, const Tensor& input) const {
    Tensor h = input;
    for (const ConvLayer& conv : branch.convs) h = relu(conv1d_same(h, conv.kernels, conv.bias));
    h = maxpool1d(h, cfg_.pool_size);
    for (std::size_t l = 0; l < branch.lstms.size(); ++l) {
      const bool return_sequence = l + 1 < branch.lstms.size();
      h = lstm_layer_forward(h, branch.lstms[l], return_sequence);
    }
    return h;
  }

  Tensor head(const Tensor& merged) const {
    const Tensor hidden = relu(dense(merged, head_.hidden_w, head_.hidden_b, Activation::Linear));
    return dense(hidden, head_.out_w, head_.out_b, Activation::Linear);
  }

  // Union-vocabulary re-encoding for the concat variant: both one-hot blocks
  // are column-permuted into the union alphabet and stacked row-wise.  Inputs
  // are constants, so this happens outside the autodiff graph.
  Tensor concat_input(const Tensor& smiles_onehot, const Tensor& inchi_onehot) const {
    const int Vu = union_vocab_.size();
    const Dim rows = cfg_.smiles_len + cfg_.inchi_len;
    std::vector<double> data(static_cast<std::size_t>(rows) * Vu, 0.0);
    auto scatter = [&](const Tensor& block, const std::vector<int>& col_map, Dim row_offset) {
      const Dim T = block.dim(0), V = block.dim(1);
      const std::vector<double>& src = block.data();
      for (Dim t = 0; t < T; ++t)
        for (Dim c = 0; c < V; ++c) {
          const double v = src[t * V + c];
          if (v != 0.0) data[(row_offset + t) * Vu + col_map[static_cast<std::size_t>(c)]] += v;
        }
    };
    scatter(smiles_onehot, smiles_col_map_, 0);
    scatter(inchi_onehot, inchi_col_map_, cfg_.smiles_len);
    return Tensor(Shape{rows, static_cast<Dim>(Vu)}, std::move(data));
  }

  SinetConfig cfg_;
  ModelMetadata meta_;
  BranchParams smiles_, inchi_, concat_;
  HeadParams head_;
  ParamSet params_;
  Vocabulary union_vocab_;
  std::vector<int> smiles_col_map_, inchi_col_map_;
};

namespace detail {

inline Tensor init_uniform(Shape shape, double limit, SplitRng stream) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (double& v : t.data()) v = stream.uniform(-limit, limit);
  return t;
}

inline double glorot_limit(Dim fan_in, Dim fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace detail

// Deterministic construction: every parameter draws from a private RNG
// substream keyed by its name, so values depend only on (config, seed).
inline SinetModel build_model(const SinetConfig& config, std::uint64_t seed) {
  config.validate();
  SinetModel m;
  m.cfg_ = config;
  m.meta_.init_seed = seed;
  const SplitRng root(seed);

  auto add_param = [&m](const std::string& name, Tensor t) -> Tensor {
    m.params_.push_back({name, t});
    return t;
  };

  auto build_branch = [&](const std::string& prefix, int in_channels) {
    BranchParams branch;
    const Dim K = config.kernel_size, F = config.conv_filters;
    Dim ci = in_channels;
    for (int l = 1; l <= config.conv_layers; ++l) {
      const std::string base = prefix + ".conv" + std::to_string(l);
      ConvLayer layer;
      layer.kernels = add_param(
          base + ".kernels",
          detail::init_uniform(Shape{K, ci, F}, detail::glorot_limit(K * ci, K * F),
                               root.split(base + ".kernels")));
      layer.bias = add_param(base + ".bias", Tensor::zeros(Shape{F}, true));
      branch.convs.push_back(std::move(layer));
      ci = F;
    }
    Dim d = ci;
    const Dim h = config.lstm_units;
    for (int l = 1; l <= config.lstm_layers; ++l) {
      const std::string base = prefix + ".lstm" + std::to_string(l);
      LstmParams lstm;
      lstm.input_dim = d;
      lstm.hidden_dim = h;
      lstm.W = add_param(base + ".W",
                         detail::init_uniform(Shape{d, 4 * h}, detail::glorot_limit(d, 4 * h),
                                              root.split(base + ".W")));
      lstm.U = add_param(base + ".U",
                         detail::init_uniform(Shape{h, 4 * h},
                                              1.0 / std::sqrt(static_cast<double>(h)),
                                              root.split(base + ".U")));
      Tensor b = Tensor::zeros(Shape{4 * h}, true);
      for (Dim j = 0; j < h; ++j) b.data()[h + j] = 1.0;  // forget-gate bias
      lstm.b = add_param(base + ".b", std::move(b));
      branch.lstms.push_back(std::move(lstm));
      d = h;
    }
    return branch;
  };

  switch (config.variant) {
    case Variant::SmilesOnly:
      m.smiles_ = build_branch("smiles", config.smiles_vocab.size());
      break;
    case Variant::InchiOnly:
      m.inchi_ = build_branch("inchi", config.inchi_vocab.size());
      break;
    case Variant::DualBranch:
      m.smiles_ = build_branch("smiles", config.smiles_vocab.size());
      m.inchi_ = build_branch("inchi", config.inchi_vocab.size());
      break;
    case Variant::ConcatSingleBranch: {
      bool seen[256] = {};
      for (const char c : config.smiles_vocab.chars) seen[static_cast<unsigned char>(c)] = true;
      for (const char c : config.inchi_vocab.chars) seen[static_cast<unsigned char>(c)] = true;
      Vocabulary u;
      for (int c = 33; c <= 126; ++c)
        if (seen[c]) u.chars.push_back(static_cast<char>(c));
      u.has_unk = config.smiles_vocab.has_unk || config.inchi_vocab.has_unk;
      m.union_vocab_ = u;
      auto col_map = [&u](const Vocabulary& v) {
        std::vector<int> map(static_cast<std::size_t>(v.size()));
        for (std::size_t i = 0; i < v.chars.size(); ++i) map[i] = *u.find(v.chars[i]);
        if (v.has_unk) map[v.chars.size()] = u.unk_index();
        return map;
      };
      m.smiles_col_map_ = col_map(config.smiles_vocab);
      m.inchi_col_map_ = col_map(config.inchi_vocab);
      m.concat_ = build_branch("concat", u.size());
      break;
    }
  }

  const Dim merge = m.merge_width();
  const Dim D = config.dense_units;
  m.head_.hidden_w = add_param("head.dense1.weight",
                               detail::init_uniform(Shape{merge, D},
                                                    detail::glorot_limit(merge, D),
                                                    root.split("head.dense1.weight")));
  m.head_.hidden_b = add_param("head.dense1.bias", Tensor::zeros(Shape{D}, true));
  m.head_.out_w = add_param("head.output.weight",
                            detail::init_uniform(Shape{D, 1}, detail::glorot_limit(D, 1),
                                                 root.split("head.output.weight")));
  m.head_.out_b = add_param("head.output.bias", Tensor::zeros(Shape{1}, true));
  return m;
}

// Spec-shaped batch entry point; pass an undefined Tensor for an unused slot.
inline Tensor forward(const SinetModel& model, const Tensor& smiles_batch,
                      const Tensor& inchi_batch) {
  return model.forward_batch(smiles_batch.defined() ? &smiles_batch : nullptr,
                             inchi_batch.defined() ? &inchi_batch : nullptr);
}

inline std::int64_t count_parameters(const SinetModel& model) {
  return total_size(model.parameters());
}

// ---- config / metadata JSON (checkpoint header + summaries) ----

inline nlohmann::json vocab_to_json(const Vocabulary& v) {
  return {{"chars", v.chars}, {"has_unk", v.has_unk}};
}

inline Vocabulary vocab_from_json(const nlohmann::json& j) {
  Vocabulary v;
  v.chars = j.at("chars").get<std::string>();
  v.has_unk = j.at("has_unk").get<bool>();
  return v;
}

inline nlohmann::json config_to_json(const SinetConfig& c) {
  return {{"variant", to_string(c.variant)},
          {"smiles_len", c.smiles_len},
          {"inchi_len", c.inchi_len},
          {"smiles_vocab", vocab_to_json(c.smiles_vocab)},
          {"inchi_vocab", vocab_to_json(c.inchi_vocab)},
          {"conv_layers", c.conv_layers},
          {"conv_filters", c.conv_filters},
          {"kernel_size", c.kernel_size},
          {"pool_size", c.pool_size},
          {"lstm_layers", c.lstm_layers},
          {"lstm_units", c.lstm_units},
          {"dense_units", c.dense_units}};
}

inline SinetConfig config_from_json(const nlohmann::json& j) {
  SinetConfig c;
  c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.smiles_len = j.at("smiles_len").get<int>();
  c.inchi_len = j.at("inchi_len").get<int>();
  c.smiles_vocab = vocab_from_json(j.at("smiles_vocab"));
  c.inchi_vocab = vocab_from_json(j.at("inchi_vocab"));
  c.conv_layers = j.at("conv_layers").get<int>();
  c.conv_filters = j.at("conv_filters").get<int>();
  c.kernel_size = j.at("kernel_size").get<int>();
  c.pool_size = j.at("pool_size").get<int>();
  c.lstm_layers = j.at("lstm_layers").get<int>();
  c.lstm_units = j.at("lstm_units").get<int>();
  c.dense_units = j.at("dense_units").get<int>();
  return c;
}

inline nlohmann::json metadata_to_json(const ModelMetadata& m) {
  return {{"init_seed", m.init_seed},
          {"conv_activation", m.conv_activation},
          {"head_activation", m.head_activation},
          {"output_activation", m.output_activation},
          {"init_scheme", m.init_scheme},
          {"concat_input", m.concat_input},
          {"provenance", m.provenance},
          {"checkpoint_id", m.checkpoint_id}};
}

inline ModelMetadata metadata_from_json(const nlohmann::json& j) {
  ModelMetadata m;
  m.init_seed = j.at("init_seed").get<std::uint64_t>();
  m.conv_activation = j.at("conv_activation").get<std::string>();
  m.head_activation = j.at("head_activation").get<std::string>();
  m.output_activation = j.at("output_activation").get<std::string>();
  m.init_scheme = j.at("init_scheme").get<std::string>();
  m.concat_input = j.at("concat_input").get<std::string>();
  m.provenance = j.at("provenance").get<std::string>();
  m.checkpoint_id = j.at("checkpoint_id").get<std::string>();
  return m;
}

// Human/machine-readable description: per-parameter shapes, the sequence-length
// pipeline of every branch, and the closed-form parameter count.
inline nlohmann::json model_summary(const SinetModel& model) {
  const SinetConfig& c = model.config();
  nlohmann::json params = nlohmann::json::array();
  for (const Param& p : model.parameters()) {
    nlohmann::json shape = nlohmann::json::array();
    for (const Dim d : p.value.shape()) shape.push_back(d);
    params.push_back({{"name", p.name}, {"shape", shape}, {"size", p.value.size()}});
  }
  nlohmann::json pipelines = nlohmann::json::object();
  auto pipeline = [&c](int len, int width) {
    return nlohmann::json{{"input", {len, width}},
                          {"after_conv", {len, c.conv_filters}},
                          {"after_pool", {len / c.pool_size, c.conv_filters}},
                          {"lstm_output", {c.lstm_units}}};
  };
  switch (c.variant) {
    case Variant::SmilesOnly:
      pipelines["smiles"] = pipeline(c.smiles_len, c.smiles_vocab.size());
      break;
    case Variant::InchiOnly:
      pipelines["inchi"] = pipeline(c.inchi_len, c.inchi_vocab.size());
      break;
    case Variant::DualBranch:
      pipelines["smiles"] = pipeline(c.smiles_len, c.smiles_vocab.size());
      pipelines["inchi"] = pipeline(c.inchi_len, c.inchi_vocab.size());
      break;
    case Variant::ConcatSingleBranch:
      pipelines["concat"] = pipeline(c.smiles_len + c.inchi_len, model.union_vocab().size());
      break;
  }
  return {{"variant", to_string(c.variant)},
          {"config", config_to_json(c)},
          {"metadata", metadata_to_json(model.metadata())},
          {"pipelines", pipelines},
          {"merge_width", model.merge_width()},
          {"parameters", params},
          {"total_parameters", count_parameters(model)}};
}

}  // namespace sinet
