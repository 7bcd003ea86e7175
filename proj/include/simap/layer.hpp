#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "simap/dataset.hpp"
#include "simap/geometry.hpp"
#include "simap/subdivision.hpp"

namespace simap {

struct TrainConfig {
  enum class Optimizer { kSgd, kAdam };
  enum class BatchMode { kPerSample, kFullBatch };
  enum class Init { kZeros, kUniform };

  double learning_rate = 0.01;
  std::size_t epochs = 1000;
  Optimizer optimizer = Optimizer::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  BatchMode batch_mode = BatchMode::kPerSample;
  std::uint64_t seed = 0;
  Init init = Init::kUniform;
  double init_low = -0.5;
  double init_high = 0.5;
  // Stop a level early once its mean training loss drops to this value.
  std::optional<double> loss_threshold;
};

struct Prediction {
  std::vector<double> probs;
  int label = 0;
  SparseActivation activation;
};

inline std::vector<double> softmax(const std::vector<double>& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    out[j] = std::exp(logits[j] - peak);
    total += out[j];
  }
  for (double& p : out) p /= total;
  return out;
}

/// A softmax classifier over the sparse barycentric coordinates of Sd^level
/// of the enclosing simplex. Weight rows are stored per vertex id and
/// materialized on demand: a row never touched by training resolves, through
/// the parent chain, to the mean of its children's rows, which keeps the
/// level-(k+1) model equal to the level-k model everywhere until training
/// moves it.
class SimapModel {
 public:
  SimapModel(std::size_t ambient_dim, int class_count)
      : simplex_(ambient_dim), class_count_(class_count), level_(0) {
    if (class_count < 2) throw std::invalid_argument("SimapModel: need at least 2 classes");
    for (std::size_t i = 0; i <= ambient_dim; ++i) {
      interner_.intern(VertexKey::base(i));
    }
    rows_.assign(interner_.size(), std::vector<double>(class_count_, 0.0));
  }

  static std::shared_ptr<SimapModel> make_child(std::shared_ptr<const SimapModel> parent) {
    auto child = std::make_shared<SimapModel>(PrivateTag{}, parent);
    return child;
  }

  struct PrivateTag {};
  SimapModel(PrivateTag, std::shared_ptr<const SimapModel> parent)
      : simplex_(checked_parent(parent)->simplex_),
        class_count_(parent->class_count_),
        level_(parent->level_ + 1),
        parent_(std::move(parent)) {}

  std::size_t ambient_dim() const { return simplex_.dimension(); }
  int class_count() const { return class_count_; }
  int level() const { return level_; }
  const EnclosingSimplex& simplex() const { return simplex_; }
  const std::shared_ptr<const SimapModel>& parent() const { return parent_; }

  VertexInterner& interner() { return interner_; }
  const VertexInterner& interner() const { return interner_; }

  SparseActivation activate(const AmbientPoint& x) {
    return activation(x, level_, simplex_, interner_);
  }

  /// Weight row for an interned vertex, materializing it by weight transfer
  /// if training has not touched it yet.
  std::vector<double>& row(VertexId id) {
    sync_rows();
    std::vector<double>& r = rows_.at(id);
    if (r.empty()) r = transfer_row(interner_.key(id));
    return r;
  }

  bool row_materialized(VertexId id) const {
    return id < rows_.size() && !rows_[id].empty();
  }

  void set_row(VertexId id, std::vector<double> values) {
    if (values.size() != static_cast<std::size_t>(class_count_)) {
      throw std::invalid_argument("set_row: wrong class count");
    }
    sync_rows();
    rows_.at(id) = std::move(values);
  }

  /// The row this model uses for a key: the trained row when materialized,
  /// otherwise the transfer value. Does not mutate the model.
  std::vector<double> resolve_row(const VertexKey& key) const {
    if (key.level() != level_) {
      throw std::invalid_argument("resolve_row: key level does not match model level");
    }
    if (auto id = interner_.find(key)) {
      if (row_materialized(*id)) return rows_[*id];
    }
    return transfer_row(key);
  }

  void init_rows_zeros() {
    sync_rows();
    for (auto& r : rows_) r.assign(class_count_, 0.0);
  }

  void init_rows_uniform(std::uint64_t seed, double lo, double hi) {
    sync_rows();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& r : rows_) {
      r.resize(class_count_);
      for (double& w : r) w = dist(rng);
    }
  }

 private:
  friend std::vector<double> transfer_weight(const SimapModel&, const VertexKey&);

  static const std::shared_ptr<const SimapModel>& checked_parent(
      const std::shared_ptr<const SimapModel>& parent) {
    if (!parent) throw std::invalid_argument("SimapModel: missing parent model");
    return parent;
  }

  std::vector<double> transfer_row(const VertexKey& key) const {
    if (level_ == 0) {
      throw std::logic_error("transfer: level-0 rows exist from construction; key '" +
                             key.str() + "' is not part of this model");
    }
    if (!parent_) throw std::logic_error("transfer: missing parent chain");
    const auto& children = key.children();
    std::vector<double> acc(class_count_, 0.0);
    for (const VertexKey& c : children) {
      const std::vector<double> r = parent_->resolve_row(c);
      for (int j = 0; j < class_count_; ++j) acc[j] += r[j];
    }
    for (double& v : acc) v /= static_cast<double>(children.size());
    return acc;
  }

  void sync_rows() { rows_.resize(interner_.size()); }

  EnclosingSimplex simplex_;
  int class_count_;
  int level_;
  std::shared_ptr<const SimapModel> parent_;
  VertexInterner interner_;
  std::vector<std::vector<double>> rows_;  // empty row = not yet materialized
};

/// Initialization value of a weight row at this model's level: the mean of
/// the parent rows of the key's children, resolved recursively up the chain.
inline std::vector<double> transfer_weight(const SimapModel& model, const VertexKey& key) {
  if (key.level() != model.level()) {
    throw std::invalid_argument("transfer_weight: key level does not match model level");
  }
  return model.transfer_row(key);
}

inline Prediction forward(SimapModel& model, const SparseActivation& act) {
  if (act.level != model.level()) {
    throw std::invalid_argument("forward: activation level does not match model level");
  }
  std::vector<double> logits(model.class_count(), 0.0);
  for (const auto& [id, coeff] : act.entries) {
    const std::vector<double>& row = model.row(id);
    for (std::size_t j = 0; j < logits.size(); ++j) logits[j] += coeff * row[j];
  }
  Prediction pred;
  pred.probs = softmax(logits);
  pred.label = static_cast<int>(
      std::max_element(pred.probs.begin(), pred.probs.end()) - pred.probs.begin());
  pred.activation = act;
  return pred;
}

inline double loss(const Prediction& pred, int true_label) {
  return -std::log(pred.probs.at(static_cast<std::size_t>(true_label)));
}

inline double loss(const Prediction& pred, const std::vector<double>& onehot) {
  double out = 0.0;
  for (std::size_t h = 0; h < onehot.size(); ++h) {
    if (onehot[h] != 0.0) out -= onehot[h] * std::log(pred.probs.at(h));
  }
  return out;
}

struct GradEntry {
  VertexId id;
  std::vector<double> values;  // one per class
};
using SparseGradient = std::vector<GradEntry>;

/// dL/dw[t][j] = (N_j - l_j) * b_t for every vertex t of the activation.
inline SparseGradient gradient(SimapModel& model, const SparseActivation& act,
                               const std::vector<double>& onehot) {
  const Prediction pred = forward(model, act);
  SparseGradient grads;
  grads.reserve(act.entries.size());
  for (const auto& [id, coeff] : act.entries) {
    GradEntry e;
    e.id = id;
    e.values.resize(pred.probs.size());
    for (std::size_t j = 0; j < pred.probs.size(); ++j) {
      e.values[j] = (pred.probs[j] - onehot[j]) * coeff;
    }
    grads.push_back(std::move(e));
  }
  return grads;
}

inline void sgd_step(SimapModel& model, const SparseGradient& grads, double learning_rate) {
  for (const GradEntry& e : grads) {
    std::vector<double>& row = model.row(e.id);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] -= learning_rate * e.values[j];
  }
}

/// Per-(vertex, class) first/second moments, allocated lazily alongside the
/// rows they belong to. Optimizer state lives outside the model so that
/// serialized models carry weights only.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

inline void adam_step(SimapModel& model, const SparseGradient& grads, const TrainConfig& config,
                      AdamState& state, std::uint64_t step_count) {
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step_count));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step_count));
  for (const GradEntry& e : grads) {
    if (state.m.size() <= e.id) {
      state.m.resize(e.id + 1);
      state.v.resize(e.id + 1);
    }
    auto& m = state.m[e.id];
    auto& v = state.v[e.id];
    if (m.empty()) {
      m.assign(e.values.size(), 0.0);
      v.assign(e.values.size(), 0.0);
    }
    std::vector<double>& row = model.row(e.id);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double g = e.values[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const double mhat = m[j] / corr1;
      const double vhat = v[j] / corr2;
      row[j] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_epsilon);
    }
  }
}

struct EpochMetrics {
  int level = 0;
  std::size_t epoch = 0;  // 0 is the state before any update at this level
  double train_loss = 0.0;
  double train_acc = 0.0;
  std::optional<double> test_loss;
  std::optional<double> test_acc;
};

struct TrainResult {
  std::vector<std::shared_ptr<SimapModel>> models;  // one per level, 0..L
  std::vector<EpochMetrics> metrics;
};

namespace detail {

struct EvalResult {
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

inline EvalResult evaluate_activations(SimapModel& model,
                                       const std::vector<SparseActivation>& acts,
                                       const std::vector<int>& labels) {
  EvalResult out;
  for (std::size_t i = 0; i < acts.size(); ++i) {
    const Prediction pred = forward(model, acts[i]);
    out.mean_loss += loss(pred, labels[i]);
    if (pred.label == labels[i]) out.accuracy += 1.0;
  }
  out.mean_loss /= static_cast<double>(acts.size());
  out.accuracy /= static_cast<double>(acts.size());
  return out;
}

}  // namespace detail

/// Mean loss and accuracy of a model over a dataset (activations computed at
/// the model's level).
inline detail::EvalResult evaluate(SimapModel& model, const LabeledDataset& dataset) {
  std::vector<SparseActivation> acts;
  acts.reserve(dataset.size());
  for (const auto& p : dataset.points) acts.push_back(model.activate(p));
  return detail::evaluate_activations(model, acts, dataset.labels);
}

/// Trains one model per level 0..levels. Level 0 starts from the configured
/// init; each further level starts as an exact copy of its parent's function
/// via weight transfer. Activations are computed once per level since the
/// subdivision is static. Per-sample updates walk the dataset in order, so a
/// fixed seed and config reproduce the metric stream bit for bit.
inline TrainResult train(const LabeledDataset& train_set, int levels, const TrainConfig& config,
                         const LabeledDataset* test_set = nullptr) {
  train_set.validate();
  TrainResult result;
  std::shared_ptr<SimapModel> parent;
  for (int level = 0; level <= levels; ++level) {
    std::shared_ptr<SimapModel> model;
    if (level == 0) {
      model = std::make_shared<SimapModel>(train_set.dimension(), train_set.class_count);
      if (config.init == TrainConfig::Init::kUniform) {
        model->init_rows_uniform(config.seed, config.init_low, config.init_high);
      }
    } else {
      model = SimapModel::make_child(parent);
    }

    std::vector<SparseActivation> acts;
    acts.reserve(train_set.size());
    for (const auto& p : train_set.points) acts.push_back(model->activate(p));
    std::vector<SparseActivation> test_acts;
    if (test_set != nullptr) {
      test_acts.reserve(test_set->size());
      for (const auto& p : test_set->points) test_acts.push_back(model->activate(p));
    }
    std::vector<std::vector<double>> onehots;
    onehots.reserve(train_set.size());
    for (std::size_t i = 0; i < train_set.size(); ++i) onehots.push_back(train_set.onehot(i));

    AdamState adam;
    std::uint64_t step_count = 0;

    const auto record = [&](std::size_t epoch) -> double {
      EpochMetrics rec;
      rec.level = level;
      rec.epoch = epoch;
      const auto tr = detail::evaluate_activations(*model, acts, train_set.labels);
      rec.train_loss = tr.mean_loss;
      rec.train_acc = tr.accuracy;
      if (test_set != nullptr && test_set->size() > 0) {
        const auto te = detail::evaluate_activations(*model, test_acts, test_set->labels);
        rec.test_loss = te.mean_loss;
        rec.test_acc = te.accuracy;
      }
      result.metrics.push_back(rec);
      return tr.mean_loss;
    };

    record(0);
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      if (config.batch_mode == TrainConfig::BatchMode::kPerSample) {
        for (std::size_t i = 0; i < acts.size(); ++i) {
          const SparseGradient grads = gradient(*model, acts[i], onehots[i]);
          if (config.optimizer == TrainConfig::Optimizer::kSgd) {
            sgd_step(*model, grads, config.learning_rate);
          } else {
            adam_step(*model, grads, config, adam, ++step_count);
          }
        }
      } else {
        // Mean gradient accumulated in dataset order.
        std::map<VertexId, std::vector<double>> acc;
        for (std::size_t i = 0; i < acts.size(); ++i) {
          const SparseGradient grads = gradient(*model, acts[i], onehots[i]);
          for (const GradEntry& e : grads) {
            auto [it, fresh] = acc.try_emplace(e.id, e.values.size(), 0.0);
            for (std::size_t j = 0; j < e.values.size(); ++j) it->second[j] += e.values[j];
          }
        }
        SparseGradient grads;
        grads.reserve(acc.size());
        for (auto& [id, values] : acc) {
          for (double& v : values) v /= static_cast<double>(acts.size());
          grads.push_back(GradEntry{id, std::move(values)});
        }
        if (config.optimizer == TrainConfig::Optimizer::kSgd) {
          sgd_step(*model, grads, config.learning_rate);
        } else {
          adam_step(*model, grads, config, adam, ++step_count);
        }
      }
      const double train_loss = record(epoch);
      if (config.loss_threshold && train_loss <= *config.loss_threshold) break;
    }

    result.models.push_back(model);
    parent = model;
  }
  return result;
}

/// ((n+1)!)^k * (n+1); nullopt when the value does not fit in 64 bits.
inline std::optional<std::uint64_t> vc_dimension(std::size_t n, std::size_t k) {
  if (n < 1) throw std::invalid_argument("vc_dimension: n must be >= 1");
  const auto fact = checked_factorial(n + 1);
  if (!fact) return std::nullopt;
  const auto pow = checked_pow(*fact, k);
  if (!pow) return std::nullopt;
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(*pow, static_cast<std::uint64_t>(n + 1), &out)) {
    return std::nullopt;
  }
  return out;
}

struct UnclassifiableGroup {
  std::vector<VertexId> simplex_ids;     // the n+1 vertex ids, sorted
  std::vector<VertexKey> simplex_keys;   // same vertices, canonical order
  int distinct_labels = 0;
  std::vector<std::size_t> point_indices;
};

/// Groups training points by the maximal simplex of Sd^level containing them
/// and reports every simplex holding more than n+1 distinct labels; such a
/// group exceeds what the n+1 vertices of one simplex can encode.
inline std::vector<UnclassifiableGroup> detect_unclassifiable(const LabeledDataset& dataset,
                                                              int level,
                                                              const EnclosingSimplex& simplex,
                                                              VertexInterner& interner) {
  std::map<std::vector<VertexId>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    SparseActivation act = activation(dataset.points[i], level, simplex, interner);
    std::vector<VertexId> ids;
    ids.reserve(act.entries.size());
    for (const auto& [id, coeff] : act.entries) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    groups[std::move(ids)].push_back(i);
  }
  std::vector<UnclassifiableGroup> out;
  const std::size_t max_labels = simplex.dimension() + 1;
  for (auto& [ids, indices] : groups) {
    std::vector<int> labels;
    for (std::size_t i : indices) labels.push_back(dataset.labels[i]);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    if (labels.size() > max_labels) {
      UnclassifiableGroup g;
      g.simplex_ids = ids;
      for (VertexId id : ids) g.simplex_keys.push_back(interner.key(id));
      std::sort(g.simplex_keys.begin(), g.simplex_keys.end());
      g.distinct_labels = static_cast<int>(labels.size());
      g.point_indices = std::move(indices);
      out.push_back(std::move(g));
    }
  }
  return out;
}

struct VertexExplanation {
  VertexKey key;
  AmbientPoint position;
  double coefficient = 0.0;
  std::vector<double> class_distribution;  // softmax of the vertex's row
};

struct Explanation {
  std::vector<VertexExplanation> vertices;
  std::vector<double> probs;
  int label = 0;
};

/// Per-prediction report: which simplex vertices the point sits between,
/// where they are, how strongly each contributes, and what each one votes
/// for. The final probabilities are exactly forward()'s.
inline Explanation explain(SimapModel& model, const AmbientPoint& x) {
  const SparseActivation act = model.activate(x);
  const Prediction pred = forward(model, act);
  Explanation out;
  out.probs = pred.probs;
  out.label = pred.label;
  for (const auto& [id, coeff] : act.entries) {
    VertexExplanation v{model.interner().key(id), {}, coeff, {}};
    v.position = vertex_ambient_position(v.key, model.simplex());
    v.class_distribution = softmax(model.row(id));
    out.vertices.push_back(std::move(v));
  }
  return out;
}

}  // namespace simap
