#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "simap/geometry.hpp"

namespace simap {

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct LabeledDataset {
  std::vector<AmbientPoint> points;
  std::vector<int> labels;
  int class_count = 0;

  std::size_t size() const { return points.size(); }
  std::size_t dimension() const { return points.empty() ? 0 : points.front().size(); }

  std::vector<double> onehot(std::size_t i) const {
    std::vector<double> out(class_count, 0.0);
    out[static_cast<std::size_t>(labels[i])] = 1.0;
    return out;
  }

  void validate() const {
    if (points.empty()) throw std::invalid_argument("dataset: empty");
    if (points.size() != labels.size()) {
      throw std::invalid_argument("dataset: points/labels length mismatch");
    }
    for (const auto& p : points) {
      if (p.size() != points.front().size()) {
        throw std::invalid_argument("dataset: ragged points");
      }
    }
    for (int l : labels) {
      if (l < 0 || l >= class_count) {
        throw std::invalid_argument("dataset: label out of range");
      }
    }
  }
};

/// Per-dimension affine map y = (x - shift) * scale fitted so training data
/// lands in [0,1]. A constant dimension keeps scale 1 and centers on 0.5.
struct NormalizationTransform {
  std::vector<double> shift;
  std::vector<double> scale;

  std::size_t dimension() const { return shift.size(); }

  double apply_coord(std::size_t d, double x) const { return (x - shift[d]) * scale[d]; }
  double invert_coord(std::size_t d, double y) const { return y / scale[d] + shift[d]; }
};

inline NormalizationTransform fit_normalizer(const LabeledDataset& dataset) {
  if (dataset.points.empty()) throw std::invalid_argument("fit_normalizer: empty dataset");
  const std::size_t n = dataset.dimension();
  NormalizationTransform t;
  t.shift.resize(n);
  t.scale.resize(n);
  for (std::size_t d = 0; d < n; ++d) {
    double lo = dataset.points.front()[d];
    double hi = lo;
    for (const auto& p : dataset.points) {
      lo = std::min(lo, p[d]);
      hi = std::max(hi, p[d]);
    }
    if (hi > lo) {
      t.shift[d] = lo;
      t.scale[d] = 1.0 / (hi - lo);
    } else {
      t.shift[d] = lo - 0.5;
      t.scale[d] = 1.0;
    }
  }
  return t;
}

struct NormalizedPoints {
  std::vector<AmbientPoint> points;
  std::vector<std::size_t> out_of_range;  // indices, only populated with clamp off
};

inline NormalizedPoints apply_normalizer(const NormalizationTransform& transform,
                                         const std::vector<AmbientPoint>& points,
                                         bool clamp = true) {
  NormalizedPoints out;
  out.points.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const AmbientPoint& p = points[i];
    if (p.size() != transform.dimension()) {
      throw std::invalid_argument("apply_normalizer: point has wrong dimension");
    }
    AmbientPoint q(p.size());
    bool outside = false;
    for (std::size_t d = 0; d < p.size(); ++d) {
      double y = transform.apply_coord(d, p[d]);
      if (y < 0.0 || y > 1.0) {
        if (clamp) {
          y = std::clamp(y, 0.0, 1.0);
        } else {
          outside = true;
        }
      }
      q[d] = y;
    }
    if (outside) out.out_of_range.push_back(i);
    out.points.push_back(std::move(q));
  }
  return out;
}

/// The eight XOR anchors: four points on the main diagonal labelled 0 and
/// four on the anti-diagonal labelled 1. n_per_cluster copies of each anchor,
/// jittered by N(0, noise_sd^2) when noise_sd > 0.
inline LabeledDataset generate_xor(std::size_t n_per_cluster, double noise_sd,
                                   std::uint64_t seed) {
  static const double anchors[8][2] = {{1.0, 1.0}, {1.5, 1.5}, {2.5, 2.5}, {3.0, 3.0},
                                       {1.0, 3.0}, {1.5, 2.5}, {2.5, 1.5}, {3.0, 1.0}};
  if (n_per_cluster < 1) n_per_cluster = 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd);
  LabeledDataset out;
  out.class_count = 2;
  for (std::size_t a = 0; a < 8; ++a) {
    for (std::size_t rep = 0; rep < n_per_cluster; ++rep) {
      AmbientPoint p{anchors[a][0], anchors[a][1]};
      if (noise_sd > 0.0) {
        p[0] += noise(rng);
        p[1] += noise(rng);
      }
      out.points.push_back(std::move(p));
      out.labels.push_back(a < 4 ? 0 : 1);
    }
  }
  return out;
}

/// Binary classification blobs: two unit Gaussian clusters at opposite
/// hypercube corners, class_sep being the distance between their means.
/// A small fraction of labels is flipped so the problem is never exactly
/// noise-free.
inline LabeledDataset generate_classification(std::size_t n_samples, std::size_t n_features,
                                              double class_sep, std::uint64_t seed) {
  if (n_samples < 2) throw std::invalid_argument("generate_classification: n_samples < 2");
  if (n_features < 2) throw std::invalid_argument("generate_classification: n_features < 2");
  constexpr double kFlipRate = 0.002;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double offset = 0.5 * class_sep / std::sqrt(static_cast<double>(n_features));
  LabeledDataset out;
  out.class_count = 2;
  out.points.reserve(n_samples);
  out.labels.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    int label = unit(rng) < 0.5 ? 0 : 1;
    AmbientPoint p(n_features);
    const double center = label == 1 ? offset : -offset;
    for (std::size_t d = 0; d < n_features; ++d) p[d] = center + gauss(rng);
    if (unit(rng) < kFlipRate) label = 1 - label;
    out.points.push_back(std::move(p));
    out.labels.push_back(label);
  }
  return out;
}

/// Seeded shuffle, then the first floor(size * train_fraction) points go to
/// the training split.
inline std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset,
                                                       double train_fraction,
                                                       std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train_fraction must be in (0,1)");
  }
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto train_size =
      static_cast<std::size_t>(static_cast<double>(dataset.size()) * train_fraction);
  LabeledDataset train, test;
  train.class_count = test.class_count = dataset.class_count;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    LabeledDataset& dst = i < train_size ? train : test;
    dst.points.push_back(dataset.points[idx[i]]);
    dst.labels.push_back(dataset.labels[idx[i]]);
  }
  return {std::move(train), std::move(test)};
}

struct CsvDataset {
  LabeledDataset dataset;
  std::vector<std::string> feature_names;
  std::vector<long long> label_values;  // label_values[dense] = original value
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  out.push_back(field);
  return out;
}

inline double parse_double(const std::string& field, std::size_t line_no,
                           const std::string& column) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw std::runtime_error("csv line " + std::to_string(line_no) +
                             ": non-numeric value '" + field + "' in column " + column);
  }
  return value;
}

}  // namespace detail

/// Reads a header + rows CSV. Features are every column except the label
/// column, in declared order; labels are re-indexed densely with the mapping
/// reported in label_values.
inline CsvDataset load_csv(const std::string& path, const std::string& label_column = "label") {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  const std::vector<std::string> header = detail::split_csv_line(line);
  std::optional<std::size_t> label_idx;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_column) {
      label_idx = c;
      break;
    }
  }
  if (!label_idx) {
    throw std::runtime_error(path + ": missing label column '" + label_column + "'");
  }

  CsvDataset out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != *label_idx) out.feature_names.push_back(header[c]);
  }

  std::vector<long long> raw_labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
    }
    AmbientPoint p;
    p.reserve(header.size() - 1);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == *label_idx) continue;
      p.push_back(detail::parse_double(fields[c], line_no, header[c]));
    }
    const std::string& lf = fields[*label_idx];
    long long raw = 0;
    auto res = std::from_chars(lf.data(), lf.data() + lf.size(), raw);
    if (res.ec != std::errc{} || res.ptr != lf.data() + lf.size()) {
      throw std::runtime_error("csv line " + std::to_string(line_no) +
                               ": non-integer label '" + lf + "'");
    }
    out.dataset.points.push_back(std::move(p));
    raw_labels.push_back(raw);
  }
  if (out.dataset.points.empty()) {
    throw std::runtime_error(path + ": no data rows");
  }

  std::map<long long, int> dense;
  for (long long v : raw_labels) dense.emplace(v, 0);
  int next = 0;
  for (auto& [value, id] : dense) {
    id = next++;
    out.label_values.push_back(value);
  }
  out.dataset.labels.reserve(raw_labels.size());
  for (long long v : raw_labels) out.dataset.labels.push_back(dense[v]);
  out.dataset.class_count = next;
  out.dataset.validate();
  return out;
}

/// Emits the same header + rows format load_csv reads; doubles are printed in
/// shortest round-trip form. label_values, when given, maps dense labels back
/// to their original values.
inline void save_csv(const std::string& path, const LabeledDataset& dataset,
                     const std::string& label_column = "label",
                     const std::vector<long long>* label_values = nullptr) {
  std::ofstream outf(path);
  if (!outf) throw std::runtime_error("cannot write " + path);
  const std::size_t n = dataset.dimension();
  for (std::size_t d = 0; d < n; ++d) outf << 'f' << d << ',';
  outf << label_column << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (std::size_t d = 0; d < n; ++d) outf << format_double(dataset.points[i][d]) << ',';
    const long long label = label_values != nullptr
                                ? (*label_values)[static_cast<std::size_t>(dataset.labels[i])]
                                : dataset.labels[i];
    outf << label << '\n';
  }
}

}  // namespace simap
