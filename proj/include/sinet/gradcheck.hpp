#pragma once

// Gradient audit: central finite differences (h = 1e-5) against the
// analytic backward pass, for every differentiable primitive and for the full
// dual-branch composite.
//
// Error measure: |analytic - numeric| / max(|analytic|, |numeric|, 1e-4).
// The guarded denominator is deliberate: central differences on doubles carry
// ~1e-10 absolute noise, so a bare ratio is unattainable for near-zero
// gradients while the guarded one still demands six digits wherever the
// gradient is meaningful.
//
// ReLU and max-pool are only piecewise smooth, so audit cases keep every
// pre-activation and every pool-window runner-up at least 1e-3 away from the
// kink; a finite-difference step can then never straddle one.

#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "sinet/model.hpp"
#include "sinet/ops.hpp"
#include "sinet/rng.hpp"

namespace sinet {

struct GradCheckEntry {
  std::string name;
  int trials = 0;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool all_pass = true;

  double worst_primitive = 0.0;
  double worst_composite = 0.0;
};

namespace gradcheck_detail {

inline constexpr double kStep = 1e-5;
inline constexpr double kDenomFloor = 1e-4;
inline constexpr double kKinkMargin = 1e-3;

// Max guarded relative error between backward() gradients and central
// differences, over every coordinate of every leaf.
inline double fd_max_rel_err(const std::function<Tensor()>& forward, std::vector<Tensor> leaves) {
  Tensor loss = forward();
  for (Tensor& leaf : leaves) leaf.zero_grad();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (const Tensor& leaf : leaves)
    analytic.push_back(leaf.has_grad() ? leaf.grad()
                                       : std::vector<double>(leaf.data().size(), 0.0));

  double max_rel = 0.0;
  NoGradGuard no_grad;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    std::vector<double>& x = leaves[li].data();
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double orig = x[j];
      x[j] = orig + kStep;
      const double fp = forward().item();
      x[j] = orig - kStep;
      const double fm = forward().item();
      x[j] = orig;
      const double numeric = (fp - fm) / (2.0 * kStep);
      const double a = analytic[li][j];
      const double denom = std::max({std::abs(a), std::abs(numeric), kDenomFloor});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  return max_rel;
}

inline Tensor random_tensor(Shape shape, double limit, SplitRng& rng, bool requires_grad) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

// Push every coordinate at least `margin` away from zero (for relu inputs).
inline void enforce_zero_margin(std::vector<double>& xs, double margin) {
  for (double& v : xs) {
    if (std::abs(v) < margin) v = v < 0.0 ? v - 2.0 * margin : v + 2.0 * margin;
  }
}

using CaseFn = std::function<double(SplitRng)>;

inline void run_entry(GradCheckReport& report, const std::string& name, double tolerance,
                      std::uint64_t base_seed, int trials, bool composite, const CaseFn& one_case) {
  GradCheckEntry entry;
  entry.name = name;
  entry.tolerance = tolerance;
  entry.trials = trials;
  const SplitRng root = SplitRng(base_seed).split(name);
  for (int t = 0; t < trials; ++t)
    entry.max_rel_err = std::max(entry.max_rel_err, one_case(root.split(static_cast<std::uint64_t>(t))));
  entry.pass = entry.max_rel_err <= tolerance;
  report.all_pass = report.all_pass && entry.pass;
  if (composite)
    report.worst_composite = std::max(report.worst_composite, entry.max_rel_err);
  else
    report.worst_primitive = std::max(report.worst_primitive, entry.max_rel_err);
  report.entries.push_back(std::move(entry));
}

// Scan a recorded graph for kink safety: relu inputs away from zero, and in
// every pool window whose values compete (two or more strictly positive
// entries) a clear top-2 gap.
inline bool graph_kinks_safe(const Tensor& loss, Dim pool_size) {
  std::vector<detail::Node*> stack{loss.node()};
  std::unordered_set<detail::Node*> seen{loss.node()};
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    const std::string op = n->op;
    if (op == "relu") {
      for (const double v : n->parents[0]->data)
        if (std::abs(v) < kKinkMargin) return false;
    } else if (op == "maxpool1d") {
      const detail::Node* src = n->parents[0].get();
      const Dim T = src->shape[0], C = src->shape[1];
      const Dim W = T / pool_size;
      for (Dim w = 0; w < W; ++w)
        for (Dim c = 0; c < C; ++c) {
          double top1 = -std::numeric_limits<double>::infinity(), top2 = top1;
          int positive = 0;
          for (Dim j = 0; j < pool_size; ++j) {
            const double v = src->data[(w * pool_size + j) * C + c];
            if (v > 0.0) ++positive;
            if (v > top1) {
              top2 = top1;
              top1 = v;
            } else if (v > top2) {
              top2 = v;
            }
          }
          if (positive >= 2 && top1 - top2 < kKinkMargin) return false;
        }
    }
    for (const detail::NodePtr& p : n->parents)
      if (p && seen.insert(p.get()).second) stack.push_back(p.get());
  }
  return true;
}

}  // namespace gradcheck_detail

// Runs the full audit.  `trials` independent random cases per entry, derived
// from base_seed; deterministic end to end.
inline GradCheckReport run_gradient_audit(std::uint64_t base_seed = 1, int trials = 20) {
  namespace gd = gradcheck_detail;
  if (trials < 1) throw UsageError("run_gradient_audit: trials must be >= 1");
  GradCheckReport report;
  const double prim_tol = 1e-6;
  const double comp_tol = 1e-5;

  gd::run_entry(report, "conv1d_same", prim_tol, base_seed, trials, false, [](SplitRng rng) {
    const Dim T = 7, Cin = 3, Cout = 2, K = 3;
    Tensor x = gd::random_tensor({T, Cin}, 0.8, rng, true);
    Tensor w = gd::random_tensor({K, Cin, Cout}, 0.8, rng, true);
    Tensor b = gd::random_tensor({Cout}, 0.5, rng, true);
    Tensor proj = gd::random_tensor({T, Cout}, 1.0, rng, false);
    auto fwd = [&] { return sum(mul(conv1d_same(x, w, b), proj)); };
    return gd::fd_max_rel_err(fwd, {x, w, b});
  });

  gd::run_entry(report, "relu", prim_tol, base_seed, trials, false, [](SplitRng rng) {
    Tensor x = gd::random_tensor({24}, 1.0, rng, true);
    gd::enforce_zero_margin(x.data(), gd::kKinkMargin);
    Tensor proj = gd::random_tensor({24}, 1.0, rng, false);
    auto fwd = [&] { return sum(mul(relu(x), proj)); };
    return gd::fd_max_rel_err(fwd, {x});
  });

  gd::run_entry(report, "maxpool1d", prim_tol, base_seed, trials, false, [](SplitRng rng) {
    const Dim T = 12, C = 3, pool = 3;
    Tensor x = gd::random_tensor({T, C}, 1.0, rng, true);
    // Windows are disjoint, so widening each window's top-2 gap is local.
    std::vector<double>& d = x.data();
    for (Dim w = 0; w < T / pool; ++w)
      for (Dim c = 0; c < C; ++c) {
        Dim best = w * pool;
        for (Dim j = 1; j < pool; ++j)
          if (d[(w * pool + j) * C + c] > d[best * C + c]) best = w * pool + j;
        double second = -std::numeric_limits<double>::infinity();
        for (Dim j = 0; j < pool; ++j) {
          const Dim t = w * pool + j;
          if (t != best) second = std::max(second, d[t * C + c]);
        }
        if (d[best * C + c] - second < gd::kKinkMargin) d[best * C + c] += 2.0 * gd::kKinkMargin;
      }
    Tensor proj = gd::random_tensor({T / pool, C}, 1.0, rng, false);
    auto fwd = [&] { return sum(mul(maxpool1d(x, pool), proj)); };
    return gd::fd_max_rel_err(fwd, {x});
  });

  gd::run_entry(report, "dense-linear", prim_tol, base_seed, trials, false, [](SplitRng rng) {
    Tensor x = gd::random_tensor({5}, 0.9, rng, true);
    Tensor w = gd::random_tensor({5, 4}, 0.9, rng, true);
    Tensor b = gd::random_tensor({4}, 0.5, rng, true);
    Tensor proj = gd::random_tensor({4}, 1.0, rng, false);
    auto fwd = [&] { return sum(mul(dense(x, w, b, Activation::Linear), proj)); };
    return gd::fd_max_rel_err(fwd, {x, w, b});
  });

  gd::run_entry(report, "dense-relu", prim_tol, base_seed, trials, false, [](SplitRng rng) {
    Tensor x = gd::random_tensor({5}, 0.9, rng, true);
    Tensor w = gd::random_tensor({5, 4}, 0.9, rng, true);
    Tensor b = gd::random_tensor({4}, 0.5, rng, true);
    // Shift biases until every pre-activation clears the kink margin.
    for (Dim j = 0; j < 4; ++j) {
      double pre = b.data()[j];
      for (Dim i = 0; i < 5; ++i) pre += x.data()[i] * w.data()[i * 4 + j];
      if (std::abs(pre) < gd::kKinkMargin)
        b.data()[j] += pre < 0.0 ? -2.0 * gd::kKinkMargin : 2.0 * gd::kKinkMargin;
    }
    Tensor proj = gd::random_tensor({4}, 1.0, rng, false);
    auto fwd = [&] { return sum(mul(dense(x, w, b, Activation::Relu), proj)); };
    return gd::fd_max_rel_err(fwd, {x, w, b});
  });

  auto lstm_case = [](SplitRng rng, bool return_sequence) {
    const Dim T = 4, d = 3, h = 2;
    Tensor x = gd::random_tensor({T, d}, 0.8, rng, true);
    LstmParams p;
    p.input_dim = d;
    p.hidden_dim = h;
    p.W = gd::random_tensor({d, 4 * h}, 0.7, rng, true);
    p.U = gd::random_tensor({h, 4 * h}, 0.7, rng, true);
    p.b = gd::random_tensor({4 * h}, 0.5, rng, true);
    Tensor proj = return_sequence ? gd::random_tensor({T, h}, 1.0, rng, false)
                                  : gd::random_tensor({h}, 1.0, rng, false);
    auto fwd = [&, return_sequence] {
      return sum(mul(lstm_layer_forward(x, p, return_sequence), proj));
    };
    return gd::fd_max_rel_err(fwd, {x, p.W, p.U, p.b});
  };
  gd::run_entry(report, "lstm-sequence", prim_tol, base_seed, trials, false,
                [&](SplitRng rng) { return lstm_case(rng, true); });
  gd::run_entry(report, "lstm-final", prim_tol, base_seed, trials, false,
                [&](SplitRng rng) { return lstm_case(rng, false); });

  gd::run_entry(report, "concat", prim_tol, base_seed, trials, false, [](SplitRng rng) {
    Tensor a = gd::random_tensor({3}, 1.0, rng, true);
    Tensor b = gd::random_tensor({4}, 1.0, rng, true);
    Tensor proj = gd::random_tensor({7}, 1.0, rng, false);
    auto fwd = [&] { return sum(mul(concat(a, b), proj)); };
    return gd::fd_max_rel_err(fwd, {a, b});
  });

  gd::run_entry(report, "mse_loss", prim_tol, base_seed, trials, false, [](SplitRng rng) {
    Tensor pred = gd::random_tensor({6}, 1.0, rng, true);
    Tensor target = gd::random_tensor({6}, 1.0, rng, true);
    auto fwd = [&] { return mse_loss(pred, target); };
    return gd::fd_max_rel_err(fwd, {pred, target});
  });

  gd::run_entry(report, "sum-scale-mul", prim_tol, base_seed, trials, false, [](SplitRng rng) {
    Tensor a = gd::random_tensor({6}, 1.0, rng, true);
    Tensor b = gd::random_tensor({6}, 1.0, rng, true);
    auto fwd = [&] { return scale(sum(mul(a, b)), 1.7); };
    return gd::fd_max_rel_err(fwd, {a, b});
  });

  gd::run_entry(report, "stack_scalars", prim_tol, base_seed, trials, false, [](SplitRng rng) {
    std::vector<Tensor> xs;
    for (int i = 0; i < 5; ++i) xs.push_back(Tensor::scalar(rng.uniform(-1.0, 1.0), true));
    Tensor proj = gd::random_tensor({5}, 1.0, rng, false);
    auto fwd = [&] { return sum(mul(stack_scalars(xs), proj)); };
    return gd::fd_max_rel_err(fwd, xs);
  });

  // Full dual-branch model: a two-sample batch through every layer, MSE loss,
  // finite differences over ALL parameters.  Cases whose activations sit too
  // close to a relu/pool kink are re-drawn from the next substream.
  gd::run_entry(report, "sinet-composite", comp_tol, base_seed, trials, true, [](SplitRng rng) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt == 100)
        throw NumericError("gradient audit: no kink-safe composite case in 100 attempts");
      SplitRng stream = rng.split(attempt);

      SinetConfig cfg;
      cfg.variant = Variant::DualBranch;
      cfg.smiles_len = 8;
      cfg.inchi_len = 12;
      cfg.conv_layers = 2;
      cfg.conv_filters = 3;
      cfg.kernel_size = 3;
      cfg.pool_size = 2;
      cfg.lstm_layers = 2;
      cfg.lstm_units = 3;
      cfg.dense_units = 4;
      const std::string smiles_alpha = "CNO()=";
      const std::string inchi_alpha = "InChI=1S/c0123456789";
      cfg.smiles_vocab = build_vocabulary({smiles_alpha}, false);
      cfg.inchi_vocab = build_vocabulary({inchi_alpha}, false);

      SinetModel model = build_model(cfg, stream.split("init").next_u64());
      // Audit-friendly weights: plain uniform draws, larger than Glorot so
      // activations are spread well away from zero.
      SplitRng wstream = stream.split("weights");
      for (Param& p : model.parameters())
        for (double& v : p.value.data()) v = wstream.uniform(-0.6, 0.6);

      auto random_string = [](const std::string& alpha, int len, SplitRng& s) {
        std::string out;
        for (int i = 0; i < len; ++i)
          out.push_back(alpha[static_cast<std::size_t>(s.next_below(alpha.size()))]);
        return out;
      };
      SplitRng istream = stream.split("inputs");
      const EncoderSpec smiles_spec{cfg.smiles_vocab, cfg.smiles_len, OverflowPolicy::Reject,
                                    UnknownPolicy::Reject};
      const EncoderSpec inchi_spec{cfg.inchi_vocab, cfg.inchi_len, OverflowPolicy::Reject,
                                   UnknownPolicy::Reject};
      std::vector<Tensor> sm, in;
      std::vector<double> ys;
      for (int b = 0; b < 2; ++b) {
        sm.push_back(encode_onehot(
            random_string(smiles_alpha, 5 + static_cast<int>(istream.next_below(4)), istream),
            smiles_spec));
        in.push_back(encode_onehot(
            "InChI=" + random_string(inchi_alpha.substr(6), 4 + static_cast<int>(istream.next_below(3)), istream),
            inchi_spec));
        ys.push_back(istream.uniform(-1.0, 1.0));
      }
      auto fwd = [&] {
        std::vector<Tensor> preds;
        for (int b = 0; b < 2; ++b) preds.push_back(model.forward_one(&sm[b], &in[b]));
        return mse_loss(stack_scalars(preds), Tensor::vec(ys));
      };

      const Tensor probe = fwd();
      if (!gd::graph_kinks_safe(probe, cfg.pool_size)) continue;

      std::vector<Tensor> leaves;
      for (Param& p : model.parameters()) leaves.push_back(p.value);
      return gd::fd_max_rel_err(fwd, leaves);
    }
  });

  return report;
}

inline void print_gradcheck_report(const GradCheckReport& report, std::ostream& out) {
  out << std::left << std::setw(18) << "op" << std::right << std::setw(8) << "trials"
      << std::setw(14) << "max rel err" << std::setw(12) << "tolerance" << std::setw(8)
      << "result" << '\n';
  for (const GradCheckEntry& e : report.entries) {
    std::ostringstream err, tol;
    err << std::scientific << std::setprecision(2) << e.max_rel_err;
    tol << std::scientific << std::setprecision(0) << e.tolerance;
    out << std::left << std::setw(18) << e.name << std::right << std::setw(8) << e.trials
        << std::setw(14) << err.str() << std::setw(12) << tol.str() << std::setw(8)
        << (e.pass ? "ok" : "FAIL") << '\n';
  }
  out << (report.all_pass ? "gradient audit: all clear" : "gradient audit: FAILURES") << '\n';
}

}  // namespace sinet
