#pragma once

// Parameter shape table (L = layers, H = hidden, C = num_classes,
// in_0 = in_dim, in_l = H for l > 0, out_l = H for l < L-1, out_{L-1} = C):
//
//   gcn, mlp           layers.l.weight   in_l x out_l
//                      layers.l.bias     1 x out_l
//   graph_transformer  layers.l.w_query  in_l x out_l   (heads side by side)
//                      layers.l.w_key    in_l x out_l
//                      layers.l.w_value  in_l x out_l
//                      layers.l.w_skip   in_l x out_l
//                      layers.l.bias     1 x out_l
//
// Graph transformer hidden layers use `heads` heads of width H / heads; the
// output layer uses a single head of width C.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "tagforge/dataset.hpp"
#include "tagforge/error.hpp"
#include "tagforge/layers.hpp"
#include "tagforge/ops.hpp"
#include "tagforge/rng.hpp"

namespace tagforge {

enum class Arch : std::uint32_t { gcn = 0, graph_transformer = 1, mlp = 2 };

inline std::string_view to_string(Arch a) noexcept {
  switch (a) {
    case Arch::gcn: return "gcn";
    case Arch::graph_transformer: return "graph_transformer";
    case Arch::mlp: return "mlp";
  }
  return "?";
}

inline Arch parse_arch(std::string_view s) {
  if (s == "gcn") return Arch::gcn;
  if (s == "graph_transformer" || s == "gt" || s == "transformer") return Arch::graph_transformer;
  if (s == "mlp") return Arch::mlp;
  throw ConfigError("unknown architecture '" + std::string(s) + "' (expected gcn, graph_transformer, mlp)");
}

/// Display label used in result tables.
inline std::string_view display_name(Arch a) noexcept {
  switch (a) {
    case Arch::gcn: return "GCN";
    case Arch::graph_transformer: return "Graph Transformer";
    case Arch::mlp: return "MLP";
  }
  return "?";
}

struct ModelSpec {
  Arch arch = Arch::gcn;
  std::size_t layers = 4;
  std::size_t hidden = 64;
  std::size_t heads = 4;
  double dropout = 0.5;
  std::size_t in_dim = 0;
  std::size_t num_classes = 0;

  bool operator==(const ModelSpec&) const = default;
};

inline void validate(const ModelSpec& s) {
  if (s.layers < 2) throw ConfigError("model: need at least 2 layers");
  if (s.hidden == 0 || s.in_dim == 0 || s.num_classes == 0) throw ConfigError("model: zero dimension");
  if (!(s.dropout >= 0.0 && s.dropout < 1.0)) throw ConfigError("model: dropout must be in [0, 1)");
  if (s.arch == Arch::graph_transformer && (s.heads == 0 || s.hidden % s.heads != 0))
    throw ConfigError("model: hidden " + std::to_string(s.hidden) + " not divisible by heads " +
                      std::to_string(s.heads));
}

template <std::floating_point T>
class Model {
 public:
  using Layer = std::variant<GcnLayer<T>, GraphTransformerLayer<T>, MlpLayer<T>>;

  Model() = default;

  /// Builds zero-initialized layers with the shapes of the table above.
  explicit Model(const ModelSpec& spec) : spec_(spec) {
    validate(spec);
    for (std::size_t l = 0; l < spec.layers; ++l) {
      const std::size_t in = l == 0 ? spec.in_dim : spec.hidden;
      const bool last = l + 1 == spec.layers;
      const std::size_t out = last ? spec.num_classes : spec.hidden;
      switch (spec.arch) {
        case Arch::gcn: layers_.emplace_back(GcnLayer<T>(in, out)); break;
        case Arch::mlp: layers_.emplace_back(MlpLayer<T>(in, out)); break;
        case Arch::graph_transformer:
          layers_.emplace_back(GraphTransformerLayer<T>(in, out, last ? 1 : spec.heads));
          break;
      }
    }
  }

  const ModelSpec& spec() const noexcept { return spec_; }
  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  /// Visits (name, Parameter&) in a fixed order.
  void for_each_parameter(const std::function<void(const std::string&, Parameter<T>&)>& f) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const std::string prefix = "layers." + std::to_string(l) + ".";
      std::visit([&](auto& layer) { layer.for_each_parameter([&](const char* n, Parameter<T>& p) { f(prefix + n, p); }); },
                 layers_[l]);
    }
  }

  std::vector<std::pair<std::string, Parameter<T>*>> named_parameters() {
    std::vector<std::pair<std::string, Parameter<T>*>> out;
    for_each_parameter([&](const std::string& n, Parameter<T>& p) { out.emplace_back(n, &p); });
    return out;
  }

  std::vector<Matrix<T>> snapshot() {
    std::vector<Matrix<T>> values;
    for_each_parameter([&](const std::string&, Parameter<T>& p) { values.push_back(p.value); });
    return values;
  }

  void restore(const std::vector<Matrix<T>>& values) {
    std::size_t k = 0;
    for_each_parameter([&](const std::string& n, Parameter<T>& p) {
      if (k >= values.size() || !values[k].same_shape(p.value)) throw ShapeError("restore: snapshot mismatch at " + n);
      p.value = values[k++];
    });
  }

  void zero_grad() {
    for_each_parameter([](const std::string&, Parameter<T>& p) { p.zero_grad(); });
  }

  /// Layers 0..L-2: layer -> ReLU -> dropout; last layer: raw logits.
  /// Caches activations for backward().
  Matrix<T> forward(const Matrix<T>& x, const GraphContext& ctx, bool training, Rng& rng) {
    if (x.cols() != spec_.in_dim)
      throw ShapeError("model expects " + std::to_string(spec_.in_dim) + " input features, got " +
                       std::to_string(x.cols()));
    pre_activations_.clear();
    masks_.clear();
    const double keep = 1.0 - spec_.dropout;
    Matrix<T> h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix<T> z = std::visit([&](auto& layer) { return layer.forward(h, ctx); }, layers_[l]);
      if (l + 1 == layers_.size()) return z;
      pre_activations_.push_back(z);
      auto [dropped, mask] = dropout(relu(std::move(z)), keep, rng, training);
      masks_.push_back(std::move(mask));
      h = std::move(dropped);
    }
    return h;
  }

  /// Accumulates parameter gradients for dLoss/dLogits of the last forward().
  void backward(const Matrix<T>& dlogits, const GraphContext& ctx) {
    Matrix<T> g = dlogits;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const bool need_input = l > 0;
      g = std::visit([&](auto& layer) { return layer.backward(g, ctx, need_input); }, layers_[l]);
      if (l > 0) g = relu_backward(pre_activations_[l - 1], dropout_backward(masks_[l - 1], std::move(g)));
    }
  }

 private:
  ModelSpec spec_;
  std::vector<Layer> layers_;
  std::vector<Matrix<T>> pre_activations_;
  std::vector<DropoutMask<T>> masks_;
};

/// Glorot-uniform weights, U(-a, a) with a = sqrt(6 / (fan_in + fan_out)),
/// fan_in/fan_out = rows/cols of the weight matrix (target stddev
/// sqrt(2 / (fan_in + fan_out))). Biases are zero. Parameters are filled in
/// named_parameters() order from one stream seeded by `seed`.
template <std::floating_point T = double>
Model<T> init_parameters(const ModelSpec& spec, std::uint64_t seed) {
  Model<T> model(spec);
  Rng rng(seed);
  model.for_each_parameter([&](const std::string& name, Parameter<T>& p) {
    p.zero_grad();
    if (name.ends_with(".bias")) {
      p.value.fill(T{0});
      return;
    }
    const double a = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
    for (auto& v : p.value.values()) v = static_cast<T>((2.0 * rng.uniform() - 1.0) * a);
  });
  return model;
}

/// Logits for every node of `ds`.
template <std::floating_point T>
Matrix<T> forward(Model<T>& model, const Dataset& ds, bool training, Rng& rng) {
  const GraphContext ctx(ds.graph);
  return model.forward(ds.features.cast<T>(), ctx, training, rng);
}

}  // namespace tagforge
