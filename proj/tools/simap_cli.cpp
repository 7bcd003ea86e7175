// Command-line front end for training, evaluating and inspecting SIMAP
// layer models.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "simap/dataset.hpp"
#include "simap/experiment.hpp"
#include "simap/layer.hpp"
#include "simap/model_io.hpp"
#include "simap/subdivision.hpp"

namespace fs = std::filesystem;
using namespace simap;

namespace {

struct TrainOptions {
  std::string data_path;
  std::string generator;
  std::string out_dir;
  std::string label_column = "label";
  std::string optimizer = "adam";
  std::string batch = "per-sample";
  std::string init = "uniform";
  std::string clamp = "on";
  int levels = 2;
  std::size_t epochs = 1000;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  double split_fraction = 0.0;  // 0 = no test split
  std::size_t samples = 500;
  std::size_t features = 2;
  double class_sep = 2.7;
  double noise = 0.0;
  std::size_t per_cluster = 1;
  double loss_threshold = 0.0;  // 0 = off
};

TrainConfig make_train_config(const TrainOptions& opt) {
  TrainConfig cfg;
  cfg.learning_rate = opt.learning_rate;
  cfg.epochs = opt.epochs;
  cfg.optimizer =
      opt.optimizer == "sgd" ? TrainConfig::Optimizer::kSgd : TrainConfig::Optimizer::kAdam;
  cfg.batch_mode = opt.batch == "full-batch" ? TrainConfig::BatchMode::kFullBatch
                                             : TrainConfig::BatchMode::kPerSample;
  cfg.init = opt.init == "zeros" ? TrainConfig::Init::kZeros : TrainConfig::Init::kUniform;
  cfg.seed = opt.seed;
  if (opt.loss_threshold > 0.0) cfg.loss_threshold = opt.loss_threshold;
  return cfg;
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    out.push_back(std::stod(field));
  }
  if (out.empty()) throw std::runtime_error("empty point");
  return out;
}

std::string metrics_line(const EpochMetrics& m) {
  std::string line = "level " + std::to_string(m.level) +
                     ": train_loss=" + format_double(m.train_loss) +
                     " train_acc=" + format_double(m.train_acc);
  if (m.test_loss) line += " test_loss=" + format_double(*m.test_loss);
  if (m.test_acc) line += " test_acc=" + format_double(*m.test_acc);
  return line;
}

int cmd_train(const TrainOptions& opt) {
  if (opt.data_path.empty() == opt.generator.empty()) {
    std::cerr << "train: exactly one of --data or --gen is required\n";
    return 1;
  }

  LabeledDataset raw;
  std::vector<long long> label_values;
  if (!opt.data_path.empty()) {
    CsvDataset csv = load_csv(opt.data_path, opt.label_column);
    raw = std::move(csv.dataset);
    label_values = std::move(csv.label_values);
  } else if (opt.generator == "xor") {
    raw = generate_xor(opt.per_cluster, opt.noise, opt.seed);
    label_values = {0, 1};
  } else if (opt.generator == "synth") {
    raw = generate_classification(opt.samples, opt.features, opt.class_sep, opt.seed);
    label_values = {0, 1};
  } else {
    std::cerr << "train: unknown generator '" << opt.generator << "' (use xor|synth)\n";
    return 1;
  }

  LabeledDataset train_raw = raw;
  LabeledDataset test_raw;
  const bool has_test = opt.split_fraction > 0.0 && opt.split_fraction < 1.0;
  if (has_test) {
    std::tie(train_raw, test_raw) = split(raw, opt.split_fraction, opt.seed);
  }

  const NormalizationTransform normalizer = fit_normalizer(train_raw);
  const bool clamp = opt.clamp != "off";
  LabeledDataset train_set = train_raw;
  train_set.points = apply_normalizer(normalizer, train_raw.points, true).points;
  LabeledDataset test_set = test_raw;
  if (has_test) {
    NormalizedPoints norm = apply_normalizer(normalizer, test_raw.points, clamp);
    if (!clamp && !norm.out_of_range.empty()) {
      std::cerr << "train: " << norm.out_of_range.size()
                << " test points fall outside the fitted range (clamp is off)\n";
      return 1;
    }
    test_set.points = std::move(norm.points);
  }

  const TrainConfig cfg = make_train_config(opt);
  TrainResult result = train(train_set, opt.levels, cfg, has_test ? &test_set : nullptr);

  fs::create_directories(opt.out_dir);
  const fs::path out(opt.out_dir);

  std::map<std::string, std::string> echo = {
      {"command", "train"},
      {"data", opt.data_path},
      {"gen", opt.generator},
      {"levels", std::to_string(opt.levels)},
      {"epochs", std::to_string(opt.epochs)},
      {"lr", format_double(opt.learning_rate)},
      {"optimizer", opt.optimizer},
      {"batch", opt.batch},
      {"init", opt.init},
      {"seed", std::to_string(opt.seed)},
      {"split", format_double(opt.split_fraction)},
      {"clamp", clamp ? "on" : "off"},
      {"label_column", opt.label_column},
      {"samples", std::to_string(opt.samples)},
      {"features", std::to_string(opt.features)},
      {"class_sep", format_double(opt.class_sep)},
      {"noise", format_double(opt.noise)},
      {"per_cluster", std::to_string(opt.per_cluster)},
  };
  {
    std::ostringstream shift, scale;
    for (std::size_t d = 0; d < normalizer.dimension(); ++d) {
      if (d) shift << ' ', scale << ' ';
      shift << format_double(normalizer.shift[d]);
      scale << format_double(normalizer.scale[d]);
    }
    echo["normalizer_shift"] = shift.str();
    echo["normalizer_scale"] = scale.str();
  }
  write_config_echo((out / "config.txt").string(), echo);

  {
    std::ofstream map_file(out / "label_map.csv");
    map_file << "dense,original\n";
    for (std::size_t i = 0; i < label_values.size(); ++i) {
      map_file << i << ',' << label_values[i] << '\n';
    }
  }

  write_metrics_csv((out / "metrics.csv").string(), result.metrics);
  write_summary_csv((out / "summary.csv").string(), result.metrics);

  for (const auto& model : result.models) {
    ModelContainer container{model, normalizer, label_values, clamp};
    save_model((out / ("model_L" + std::to_string(model->level()) + ".json")).string(),
               container);
  }

  std::map<int, EpochMetrics> final_rows;
  for (const EpochMetrics& m : result.metrics) final_rows[m.level] = m;
  for (const auto& [level, m] : final_rows) std::cout << metrics_line(m) << '\n';
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& label_column, const std::string& out_dir) {
  ModelContainer container = load_model(model_path);
  CsvDataset csv = load_csv(data_path, label_column);
  if (csv.dataset.dimension() != container.model->ambient_dim()) {
    std::cerr << "evaluate: dataset has " << csv.dataset.dimension()
              << " features but the model expects " << container.model->ambient_dim() << '\n';
    return 1;
  }
  // Re-map the file's original label values onto the model's dense labels.
  std::map<long long, int> dense;
  for (std::size_t i = 0; i < container.label_values.size(); ++i) {
    dense[container.label_values[i]] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < csv.dataset.labels.size(); ++i) {
    const long long original = csv.label_values[csv.dataset.labels[i]];
    auto it = dense.find(original);
    if (it == dense.end()) {
      std::cerr << "evaluate: label value " << original << " unknown to the model\n";
      return 1;
    }
    csv.dataset.labels[i] = it->second;
  }
  csv.dataset.class_count = container.model->class_count();

  if (container.normalizer) {
    csv.dataset.points = apply_normalizer(*container.normalizer, csv.dataset.points, true).points;
  }
  const auto eval = evaluate(*container.model, csv.dataset);
  const std::string line =
      "test_loss=" + format_double(eval.mean_loss) + " test_acc=" + format_double(eval.accuracy);
  std::cout << line << '\n';
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "eval.txt");
    out << line << '\n';
  }
  return 0;
}

int cmd_boundary(const std::string& model_path, std::size_t resolution,
                 const std::string& out_dir, bool raw_axes) {
  ModelContainer container = load_model(model_path);
  if (container.model->ambient_dim() != 2) {
    std::cerr << "boundary: model must have exactly 2 input dimensions\n";
    return 1;
  }
  const auto cells = boundary_grid(*container.model, resolution);
  fs::create_directories(out_dir);
  const NormalizationTransform* axes =
      raw_axes && container.normalizer ? &*container.normalizer : nullptr;
  write_boundary_csv((fs::path(out_dir) / "boundary.csv").string(), cells, axes);
  std::cout << "wrote " << cells.size() << " grid rows\n";
  return 0;
}

int cmd_explain(const std::string& model_path, const std::string& point_text, bool normalized,
                bool as_json) {
  ModelContainer container = load_model(model_path);
  AmbientPoint x = parse_point(point_text);
  if (x.size() != container.model->ambient_dim()) {
    std::cerr << "explain: point has " << x.size() << " coordinates but the model expects "
              << container.model->ambient_dim() << '\n';
    return 1;
  }
  if (!normalized && container.normalizer) {
    NormalizedPoints norm = apply_normalizer(*container.normalizer, {x}, container.clamp);
    if (!container.clamp && !norm.out_of_range.empty()) {
      std::cerr << "explain: point lies outside the model's fitted range (clamp is off)\n";
      return 1;
    }
    x = norm.points.front();
  }
  const Explanation report = explain(*container.model, x);

  if (as_json) {
    nlohmann::json j;
    j["point"] = x;
    j["probs"] = report.probs;
    j["label"] = report.label;
    j["vertices"] = nlohmann::json::array();
    for (const VertexExplanation& v : report.vertices) {
      j["vertices"].push_back({{"key", v.key.str()},
                               {"position", v.position},
                               {"coefficient", v.coefficient},
                               {"class_distribution", v.class_distribution}});
    }
    std::cout << j.dump(2) << '\n';
    return 0;
  }

  std::cout << "containing simplex (level " << container.model->level() << "):\n";
  for (const VertexExplanation& v : report.vertices) {
    std::cout << "  vertex " << v.key.str() << " at (";
    for (std::size_t d = 0; d < v.position.size(); ++d) {
      if (d) std::cout << ", ";
      std::cout << format_double(v.position[d]);
    }
    std::cout << ") coefficient " << format_double(v.coefficient) << " votes (";
    for (std::size_t c = 0; c < v.class_distribution.size(); ++c) {
      if (c) std::cout << ", ";
      std::cout << format_double(v.class_distribution[c]);
    }
    std::cout << ")\n";
  }
  std::cout << "probs (";
  for (std::size_t c = 0; c < report.probs.size(); ++c) {
    if (c) std::cout << ", ";
    std::cout << format_double(report.probs[c]);
  }
  std::cout << ")\npredicted_label " << report.label << '\n';
  return 0;
}

int cmd_census(std::size_t n, std::size_t k) {
  const SubdivisionCensus census = subdivision_census(n, k);
  const auto vc = vc_dimension(n, k);
  if (census.maximal_simplices) {
    std::cout << "maximal_simplices " << *census.maximal_simplices << '\n';
  } else {
    std::cout << "maximal_simplices overflow (exceeds 64-bit range)\n";
  }
  if (census.sd1_vertices) {
    std::cout << "sd1_vertices " << *census.sd1_vertices << '\n';
  } else {
    std::cout << "sd1_vertices overflow (exceeds 64-bit range)\n";
  }
  if (vc) {
    std::cout << "vc_dimension " << *vc << '\n';
  } else {
    std::cout << "vc_dimension overflow (exceeds 64-bit range)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SIMAP layer: interpretable classification over barycentric subdivisions"};
  app.require_subcommand(1);

  TrainOptions train_opt;
  CLI::App* train_cmd = app.add_subcommand("train", "train per-level models on a dataset");
  train_cmd->add_option("--data", train_opt.data_path, "CSV dataset path");
  train_cmd->add_option("--gen", train_opt.generator, "generator: xor|synth");
  train_cmd->add_option("--levels", train_opt.levels, "number of subdivisions")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--epochs", train_opt.epochs, "epochs per level");
  train_cmd->add_option("--lr", train_opt.learning_rate, "learning rate");
  train_cmd->add_option("--optimizer", train_opt.optimizer, "sgd|adam")
      ->check(CLI::IsMember({"sgd", "adam"}));
  train_cmd->add_option("--seed", train_opt.seed, "RNG seed");
  train_cmd->add_option("--out", train_opt.out_dir, "output directory")->required();
  train_cmd->add_option("--label-column", train_opt.label_column, "label column name");
  train_cmd->add_option("--clamp", train_opt.clamp, "on|off: clip test data into [0,1]")
      ->check(CLI::IsMember({"on", "off"}));
  train_cmd->add_option("--split", train_opt.split_fraction, "train fraction, 0 disables");
  train_cmd->add_option("--batch", train_opt.batch, "per-sample|full-batch")
      ->check(CLI::IsMember({"per-sample", "full-batch"}));
  train_cmd->add_option("--init", train_opt.init, "zeros|uniform")
      ->check(CLI::IsMember({"zeros", "uniform"}));
  train_cmd->add_option("--samples", train_opt.samples, "synth: number of points");
  train_cmd->add_option("--features", train_opt.features, "synth: number of features");
  train_cmd->add_option("--class-sep", train_opt.class_sep, "synth: distance between means");
  train_cmd->add_option("--noise", train_opt.noise, "xor: jitter standard deviation");
  train_cmd->add_option("--per-cluster", train_opt.per_cluster, "xor: points per anchor");
  train_cmd->add_option("--loss-threshold", train_opt.loss_threshold,
                        "stop a level once train loss reaches this");

  std::string eval_model, eval_data, eval_label = "label", eval_out;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "evaluate a model file on a CSV dataset");
  eval_cmd->add_option("--model", eval_model, "model file")->required();
  eval_cmd->add_option("--data", eval_data, "CSV dataset path")->required();
  eval_cmd->add_option("--label-column", eval_label, "label column name");
  eval_cmd->add_option("--out", eval_out, "optional output directory");

  std::string bound_model, bound_out;
  std::size_t bound_res = 200;
  bool bound_raw = false;
  CLI::App* bound_cmd = app.add_subcommand("boundary", "export a decision-boundary grid");
  bound_cmd->add_option("--model", bound_model, "model file")->required();
  bound_cmd->add_option("--resolution", bound_res, "lattice points per axis");
  bound_cmd->add_option("--out", bound_out, "output directory")->required();
  bound_cmd->add_flag("--raw-axes", bound_raw, "emit lattice coordinates on the raw data axes");

  std::string expl_model, expl_point;
  bool expl_norm = false, expl_json = false;
  CLI::App* expl_cmd = app.add_subcommand("explain", "explain a single prediction");
  expl_cmd->add_option("--model", expl_model, "model file")->required();
  expl_cmd->add_option("--point", expl_point, "comma-separated coordinates")->required();
  expl_cmd->add_flag("--normalized", expl_norm, "point is already in the normalized domain");
  expl_cmd->add_flag("--json", expl_json, "emit JSON");

  std::size_t census_n = 2, census_k = 1;
  CLI::App* census_cmd = app.add_subcommand("census", "subdivision counts and VC dimension");
  census_cmd->add_option("--n", census_n, "ambient dimension")->required();
  census_cmd->add_option("--k", census_k, "number of subdivisions")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_opt);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_model, eval_data, eval_label, eval_out);
    if (bound_cmd->parsed()) return cmd_boundary(bound_model, bound_res, bound_out, bound_raw);
    if (expl_cmd->parsed()) return cmd_explain(expl_model, expl_point, expl_norm, expl_json);
    if (census_cmd->parsed()) return cmd_census(census_n, census_k);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
