#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "simap/dataset.hpp"
#include "simap/layer.hpp"
#include "simap/model_io.hpp"

namespace simap {

/// Writes the per-epoch metric stream. Fields left empty when no test split
/// was given. Rows come out ordered by (level, epoch).
inline void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& metrics) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "level,epoch,train_loss,train_acc,test_loss,test_acc\n";
  for (const EpochMetrics& m : metrics) {
    out << m.level << ',' << m.epoch << ',' << format_double(m.train_loss) << ','
        << format_double(m.train_acc) << ',';
    if (m.test_loss) out << format_double(*m.test_loss);
    out << ',';
    if (m.test_acc) out << format_double(*m.test_acc);
    out << '\n';
  }
}

/// One row per level with the final metrics of that level.
inline void write_summary_csv(const std::string& path, const std::vector<EpochMetrics>& metrics) {
  std::map<int, EpochMetrics> final_rows;
  for (const EpochMetrics& m : metrics) final_rows[m.level] = m;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "level,train_loss,train_acc,test_loss,test_acc\n";
  for (const auto& [level, m] : final_rows) {
    out << level << ',' << format_double(m.train_loss) << ',' << format_double(m.train_acc)
        << ',';
    if (m.test_loss) out << format_double(*m.test_loss);
    out << ',';
    if (m.test_acc) out << format_double(*m.test_acc);
    out << '\n';
  }
}

/// Key=value run configuration echo, sorted by key so files compare equal
/// across identical runs.
inline void write_config_echo(const std::string& path,
                              const std::map<std::string, std::string>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
}

struct BoundaryCell {
  double x = 0.0;
  double y = 0.0;
  int label = 0;
  double max_prob = 0.0;
};

/// Evaluates the model over a resolution x resolution lattice spanning the
/// normalized domain [0,1]^2.
inline std::vector<BoundaryCell> boundary_grid(SimapModel& model, std::size_t resolution) {
  if (model.ambient_dim() != 2) {
    throw std::invalid_argument("boundary_grid: model must have 2 input dimensions");
  }
  if (resolution < 2) throw std::invalid_argument("boundary_grid: resolution must be >= 2");
  std::vector<BoundaryCell> cells;
  cells.reserve(resolution * resolution);
  const double step = 1.0 / static_cast<double>(resolution - 1);
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      BoundaryCell cell;
      cell.x = static_cast<double>(ix) * step;
      cell.y = static_cast<double>(iy) * step;
      const Prediction pred = forward(model, model.activate({cell.x, cell.y}));
      cell.label = pred.label;
      cell.max_prob = pred.probs[static_cast<std::size_t>(pred.label)];
      cells.push_back(cell);
    }
  }
  return cells;
}

/// Grid rows as x,y,predicted_label,max_prob. With a normalizer given, the
/// lattice coordinates are re-expressed on the original data axes.
inline void write_boundary_csv(const std::string& path, const std::vector<BoundaryCell>& cells,
                               const NormalizationTransform* raw_axes = nullptr) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "x,y,predicted_label,max_prob\n";
  for (const BoundaryCell& c : cells) {
    const double x = raw_axes ? raw_axes->invert_coord(0, c.x) : c.x;
    const double y = raw_axes ? raw_axes->invert_coord(1, c.y) : c.y;
    out << format_double(x) << ',' << format_double(y) << ',' << c.label << ','
        << format_double(c.max_prob) << '\n';
  }
}

}  // namespace simap
