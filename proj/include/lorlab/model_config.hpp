#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lorlab {

/// The seven adaptable linear maps of one decoder block.
enum class ModuleKind { q, k, v, o, gate, up, down };

inline constexpr std::array<ModuleKind, 7> kAllModuleKinds = {
    ModuleKind::q,  ModuleKind::k,  ModuleKind::v,   ModuleKind::o,
    ModuleKind::gate, ModuleKind::up, ModuleKind::down};

inline const char* to_string(ModuleKind k) {
  switch (k) {
    case ModuleKind::q: return "q";
    case ModuleKind::k: return "k";
    case ModuleKind::v: return "v";
    case ModuleKind::o: return "o";
    case ModuleKind::gate: return "gate";
    case ModuleKind::up: return "up";
    case ModuleKind::down: return "down";
  }
  throw std::logic_error("to_string: bad ModuleKind");
}

inline ModuleKind module_kind_from_string(const std::string& s) {
  for (ModuleKind k : kAllModuleKinds) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown module kind '" + s + "'");
}

/// Identifies one adaptable weight: layer index times module kind.
struct ModulePath {
  int layer = 0;
  ModuleKind kind = ModuleKind::q;

  auto operator<=>(const ModulePath&) const = default;
};

inline std::string to_string(const ModulePath& p) {
  return std::to_string(p.layer) + "." + to_string(p.kind);
}

struct ModelConfig {
  int n_layers = 4;
  int d_model = 64;
  int n_heads = 4;
  int d_ff = 172;
  int vocab_size = 256;
  int max_seq_len = 64;

  void validate() const {
    if (n_layers < 1 || d_model < 1 || n_heads < 1 || d_ff < 1 ||
        vocab_size < 1 || max_seq_len < 1) {
      throw std::invalid_argument("ModelConfig: all counts must be >= 1");
    }
    if (d_model % n_heads != 0) {
      throw std::invalid_argument("ModelConfig: d_model (" +
                                  std::to_string(d_model) +
                                  ") not divisible by n_heads (" +
                                  std::to_string(n_heads) + ")");
    }
  }

  int head_dim() const { return d_model / n_heads; }

  /// (rows, cols) of the base weight at `kind`; row-vector activations
  /// multiply on the left, so rows = input width.
  std::pair<std::size_t, std::size_t> module_shape(ModuleKind kind) const {
    const auto d = static_cast<std::size_t>(d_model);
    const auto f = static_cast<std::size_t>(d_ff);
    switch (kind) {
      case ModuleKind::q:
      case ModuleKind::k:
      case ModuleKind::v:
      case ModuleKind::o: return {d, d};
      case ModuleKind::gate:
      case ModuleKind::up: return {d, f};
      case ModuleKind::down: return {f, d};
    }
    throw std::logic_error("module_shape: bad ModuleKind");
  }

  std::vector<ModulePath> all_module_paths() const {
    std::vector<ModulePath> out;
    out.reserve(static_cast<std::size_t>(n_layers) * kAllModuleKinds.size());
    for (int l = 0; l < n_layers; ++l) {
      for (ModuleKind k : kAllModuleKinds) out.push_back({l, k});
    }
    return out;
  }

  bool operator==(const ModelConfig&) const = default;
};

/// Token ids plus a 0/1 mask marking the positions whose tokens are
/// prediction targets. Position 0 has no prefix and must carry mask 0.
struct Batch {
  std::vector<std::vector<int>> token_ids;
  std::vector<std::vector<int>> loss_mask;

  void validate(const ModelConfig& config) const {
    if (token_ids.size() != loss_mask.size()) {
      throw std::invalid_argument("Batch: token_ids/loss_mask sequence counts differ");
    }
    if (token_ids.empty()) throw std::invalid_argument("Batch: empty batch");
    for (std::size_t s = 0; s < token_ids.size(); ++s) {
      const auto& ids = token_ids[s];
      const auto& mask = loss_mask[s];
      if (ids.size() != mask.size()) {
        throw std::invalid_argument("Batch: sequence " + std::to_string(s) +
                                    " ids/mask lengths differ");
      }
      if (ids.empty()) {
        throw std::invalid_argument("Batch: sequence " + std::to_string(s) + " empty");
      }
      if (ids.size() > static_cast<std::size_t>(config.max_seq_len)) {
        throw std::invalid_argument("Batch: sequence " + std::to_string(s) +
                                    " longer than max_seq_len");
      }
      if (mask[0] != 0) {
        throw std::invalid_argument("Batch: sequence " + std::to_string(s) +
                                    " marks position 0, which has no prefix");
      }
      for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] < 0 || ids[t] >= config.vocab_size) {
          throw std::invalid_argument("Batch: token id " + std::to_string(ids[t]) +
                                      " outside vocab at (" + std::to_string(s) +
                                      "," + std::to_string(t) + ")");
        }
        if (mask[t] != 0 && mask[t] != 1) {
          throw std::invalid_argument("Batch: loss_mask entries must be 0 or 1");
        }
      }
    }
  }

  std::size_t masked_positions() const {
    std::size_t n = 0;
    for (const auto& mask : loss_mask) {
      for (int m : mask) n += static_cast<std::size_t>(m);
    }
    return n;
  }

  std::size_t total_tokens() const {
    std::size_t n = 0;
    for (const auto& ids : token_ids) n += ids.size();
    return n;
  }
};

}  // namespace lorlab
