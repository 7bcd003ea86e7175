#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "simap/dataset.hpp"
#include "simap/layer.hpp"

namespace simap {

/// Everything a saved model needs to make predictions on raw data: the
/// weight chain plus the fitted normalizer and the dense-label mapping.
struct ModelContainer {
  std::shared_ptr<SimapModel> model;
  std::optional<NormalizationTransform> normalizer;
  std::vector<long long> label_values;
  bool clamp = true;
};

namespace detail {

inline nlohmann::json model_to_json(const SimapModel& model) {
  nlohmann::json j;
  j["n"] = model.ambient_dim();
  j["classes"] = model.class_count();
  j["level"] = model.level();
  nlohmann::json vertices = nlohmann::json::array();
  nlohmann::json weights = nlohmann::json::array();
  for (VertexId id = 0; id < model.interner().size(); ++id) {
    const VertexKey& key = model.interner().key(id);
    vertices.push_back(key.str());
    weights.push_back(model.resolve_row(key));
  }
  j["vertices"] = std::move(vertices);
  j["weights"] = std::move(weights);
  j["parent"] = model.parent() ? model_to_json(*model.parent()) : nlohmann::json();
  return j;
}

inline std::shared_ptr<SimapModel> model_from_json(const nlohmann::json& j) {
  std::shared_ptr<SimapModel> model;
  if (j["parent"].is_null()) {
    model = std::make_shared<SimapModel>(j["n"].get<std::size_t>(), j["classes"].get<int>());
  } else {
    model = SimapModel::make_child(model_from_json(j["parent"]));
  }
  if (model->level() != j["level"].get<int>()) {
    throw std::runtime_error("model file: inconsistent parent chain");
  }
  const auto& vertices = j["vertices"];
  const auto& weights = j["weights"];
  if (vertices.size() != weights.size()) {
    throw std::runtime_error("model file: vertex/weight table size mismatch");
  }
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const VertexKey key = VertexKey::parse(vertices[i].get<std::string>());
    const VertexId id = model->interner().intern(key);
    if (id != i) throw std::runtime_error("model file: vertex table not in id order");
    model->set_row(id, weights[i].get<std::vector<double>>());
  }
  return model;
}

}  // namespace detail

inline void save_model(const std::string& path, const ModelContainer& container) {
  nlohmann::json j;
  j["format"] = "simap-model";
  j["version"] = 1;
  if (container.normalizer) {
    j["normalizer"] = {{"shift", container.normalizer->shift},
                       {"scale", container.normalizer->scale}};
  } else {
    j["normalizer"] = nullptr;
  }
  j["label_values"] = container.label_values;
  j["clamp"] = container.clamp;
  j["model"] = detail::model_to_json(*container.model);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

inline ModelContainer load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "simap-model" || j.value("version", 0) != 1) {
    throw std::runtime_error(path + ": not a simap model file");
  }
  ModelContainer container;
  if (!j["normalizer"].is_null()) {
    NormalizationTransform t;
    t.shift = j["normalizer"]["shift"].get<std::vector<double>>();
    t.scale = j["normalizer"]["scale"].get<std::vector<double>>();
    container.normalizer = std::move(t);
  }
  container.label_values = j["label_values"].get<std::vector<long long>>();
  container.clamp = j.value("clamp", true);
  container.model = detail::model_from_json(j["model"]);
  return container;
}

}  // namespace simap
