#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lorlab/matrix.hpp"
#include "lorlab/model_config.hpp"
#include "lorlab/rng.hpp"

namespace lorlab {

/// Named target-module shorthands: Attention = {q,k,v,o}, MLP = {gate,up,down},
/// All = their union.
enum class TargetSet { attention, mlp, all };

inline const char* to_string(TargetSet t) {
  switch (t) {
    case TargetSet::attention: return "attention";
    case TargetSet::mlp: return "mlp";
    case TargetSet::all: return "all";
  }
  throw std::logic_error("to_string: bad TargetSet");
}

inline TargetSet target_set_from_string(const std::string& s) {
  if (s == "attention") return TargetSet::attention;
  if (s == "mlp") return TargetSet::mlp;
  if (s == "all") return TargetSet::all;
  throw std::invalid_argument("unknown target set '" + s + "'");
}

struct LoraConfig {
  int rank = 16;
  double alpha = 32.0;
  double dropout_p = 0.0;
  std::variant<TargetSet, std::vector<ModulePath>> targets = TargetSet::all;

  double gamma() const { return alpha / static_cast<double>(rank); }

  void validate() const {
    if (rank < 1) throw std::invalid_argument("LoraConfig: rank must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("LoraConfig: alpha must be positive");
    if (dropout_p < 0.0 || dropout_p >= 1.0) {
      throw std::invalid_argument("LoraConfig: dropout_p must lie in [0, 1)");
    }
    const double g = gamma();
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw std::invalid_argument("LoraConfig: gamma = alpha/rank must be finite and positive");
    }
  }

  std::vector<ModulePath> resolve_targets(const ModelConfig& config) const {
    std::vector<ModulePath> out;
    if (const auto* named = std::get_if<TargetSet>(&targets)) {
      std::vector<ModuleKind> kinds;
      switch (*named) {
        case TargetSet::attention:
          kinds = {ModuleKind::q, ModuleKind::k, ModuleKind::v, ModuleKind::o};
          break;
        case TargetSet::mlp:
          kinds = {ModuleKind::gate, ModuleKind::up, ModuleKind::down};
          break;
        case TargetSet::all:
          kinds.assign(kAllModuleKinds.begin(), kAllModuleKinds.end());
          break;
      }
      for (int l = 0; l < config.n_layers; ++l) {
        for (ModuleKind k : kinds) out.push_back({l, k});
      }
    } else {
      out = std::get<std::vector<ModulePath>>(targets);
      std::set<ModulePath> seen;
      for (const auto& p : out) {
        if (p.layer < 0 || p.layer >= config.n_layers) {
          throw std::invalid_argument("LoraConfig: target layer " +
                                      std::to_string(p.layer) + " out of range");
        }
        if (!seen.insert(p).second) {
          throw std::invalid_argument("LoraConfig: duplicate target " + to_string(p));
        }
      }
    }
    if (out.empty()) throw std::invalid_argument("LoraConfig: target set resolves to no modules");
    return out;
  }

  std::string targets_string() const {
    if (const auto* named = std::get_if<TargetSet>(&targets)) return to_string(*named);
    std::string s;
    for (const auto& p : std::get<std::vector<ModulePath>>(targets)) {
      if (!s.empty()) s += ",";
      s += to_string(p);
    }
    return s;
  }
};

/// One low-rank perturbation Delta = gamma * a * b for the weight at `path`;
/// a starts N(0,1), b starts all zero, so the merged model equals the base
/// model exactly at construction.
struct LoraAdapter {
  ModulePath path;
  Matrix a;  // d_in × r
  Matrix b;  // r × d_out
  double gamma = 1.0;

  Matrix delta() const { return matmul(a, b) * gamma; }
};

struct AdapterSet {
  LoraConfig config;
  std::map<ModulePath, LoraAdapter> adapters;

  const LoraAdapter* find(const ModulePath& p) const {
    auto it = adapters.find(p);
    return it == adapters.end() ? nullptr : &it->second;
  }
  LoraAdapter* find(const ModulePath& p) {
    auto it = adapters.find(p);
    return it == adapters.end() ? nullptr : &it->second;
  }
};

inline AdapterSet init_adapters(const LoraConfig& config, const ModelConfig& model_config,
                                Rng& rng) {
  config.validate();
  model_config.validate();
  AdapterSet set;
  set.config = config;
  const auto r = static_cast<std::size_t>(config.rank);
  for (const ModulePath& path : config.resolve_targets(model_config)) {
    const auto [d_in, d_out] = model_config.module_shape(path.kind);
    LoraAdapter adapter;
    adapter.path = path;
    adapter.a = gaussian_matrix(rng, d_in, r);
    adapter.b = Matrix(r, d_out, 0.0);
    adapter.gamma = config.gamma();
    set.adapters.emplace(path, std::move(adapter));
  }
  return set;
}

/// base + gamma·a·b.
inline Matrix effective_weight(const Matrix& base, const LoraAdapter& adapter) {
  if (base.rows() != adapter.a.rows() || base.cols() != adapter.b.cols() ||
      adapter.a.cols() != adapter.b.rows()) {
    throw std::invalid_argument("effective_weight: shape mismatch, base " +
                                base.shape_string() + ", a " + adapter.a.shape_string() +
                                ", b " + adapter.b.shape_string());
  }
  Matrix out = base;
  const std::size_t r = adapter.a.cols();
  for (std::size_t i = 0; i < base.rows(); ++i) {
    double* orow = out.row_ptr(i);
    const double* arow = adapter.a.row_ptr(i);
    for (std::size_t k = 0; k < r; ++k) {
      const double scale = adapter.gamma * arow[k];
      if (scale == 0.0) continue;
      const double* brow = adapter.b.row_ptr(k);
      for (std::size_t j = 0; j < base.cols(); ++j) orow[j] += scale * brow[j];
    }
  }
  return out;
}

inline void merge_into(Matrix& base, const LoraAdapter& adapter) {
  base = effective_weight(base, adapter);
}

inline void unmerge_from(Matrix& base, const LoraAdapter& adapter) {
  LoraAdapter negated = adapter;
  negated.gamma = -adapter.gamma;
  base = effective_weight(base, negated);
}

/// Trainable-parameter count over the targeted modules and its fraction of
/// those modules' base parameter count.
struct TrainableCount {
  std::size_t count = 0;
  double fraction_of_base = 0.0;
};

inline TrainableCount count_trainable(const ModelConfig& model_config,
                                      const LoraConfig& lora_config) {
  lora_config.validate();
  model_config.validate();
  const auto r = static_cast<std::size_t>(lora_config.rank);
  std::size_t trainable = 0;
  std::size_t base = 0;
  for (const ModulePath& path : lora_config.resolve_targets(model_config)) {
    const auto [d_in, d_out] = model_config.module_shape(path.kind);
    trainable += d_in * r + r * d_out;
    base += d_in * d_out;
  }
  return {trainable, static_cast<double>(trainable) / static_cast<double>(base)};
}

/// Exact gradients of the adapter factors given the upstream gradient of the
/// module output and the (dropout-adjusted) input activations; the base
/// weight receives nothing. upstream is P×d_out, inputs is P×d_in.
inline std::pair<Matrix, Matrix> adapter_backward(const LoraAdapter& adapter,
                                                  const Matrix& upstream,
                                                  const Matrix& inputs) {
  if (upstream.rows() != inputs.rows() || inputs.cols() != adapter.a.rows() ||
      upstream.cols() != adapter.b.cols()) {
    throw std::invalid_argument("adapter_backward: shape mismatch, upstream " +
                                upstream.shape_string() + ", inputs " +
                                inputs.shape_string());
  }
  Matrix grad_a = matmul_nt(matmul_tn(inputs, upstream), adapter.b);  // Xᵀ G Bᵀ
  Matrix grad_b = matmul_tn(matmul(inputs, adapter.a), upstream);     // (X A)ᵀ G
  grad_a *= adapter.gamma;
  grad_b *= adapter.gamma;
  return {std::move(grad_a), std::move(grad_b)};
}

/// Inverted dropout on the adapter input path: zero with probability p and
/// scale survivors by 1/(1-p) while training; identity in eval mode.
inline Matrix lora_dropout_apply(const Matrix& input, double dropout_p, Rng& rng,
                                 bool training) {
  if (dropout_p < 0.0 || dropout_p >= 1.0) {
    throw std::invalid_argument("lora_dropout_apply: p must lie in [0, 1)");
  }
  if (!training || dropout_p == 0.0) return input;
  Matrix out = input;
  const double scale = 1.0 / (1.0 - dropout_p);
  for (double& v : out.data()) {
    v = rng.next_uniform() < dropout_p ? 0.0 : v * scale;
  }
  return out;
}

}  // namespace lorlab
