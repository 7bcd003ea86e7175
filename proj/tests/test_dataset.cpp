#include <cstdio>
#include <filesystem>
#include <fstream>

#include <catch2/catch_amalgamated.hpp>

#include "simap/dataset.hpp"
#include "simap/geometry.hpp"
#include "simap/layer.hpp"

using namespace simap;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "simap_dataset_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::filesystem::path write_file(const std::string& name, const std::string& content) {
  const auto path = temp_file(name);
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("fit_normalizer: min-max, identity and degenerate ranges") {
  LabeledDataset xor_set = generate_xor(1, 0.0, 0);
  const NormalizationTransform t = fit_normalizer(xor_set);
  const auto norm = apply_normalizer(t, xor_set.points);
  const std::vector<AmbientPoint> expected = {
      {0.0, 0.0},  {0.25, 0.25}, {0.75, 0.75}, {1.0, 1.0},
      {0.0, 1.0},  {0.25, 0.75}, {0.75, 0.25}, {1.0, 0.0},
  };
  REQUIRE(norm.points == expected);

  LabeledDataset already;
  already.points = {{0.0, 0.0}, {1.0, 0.4}, {0.2, 1.0}};
  already.labels = {0, 0, 1};
  already.class_count = 2;
  const NormalizationTransform id = fit_normalizer(already);
  REQUIRE(id.shift == std::vector<double>{0.0, 0.0});
  REQUIRE(id.scale == std::vector<double>{1.0, 1.0});

  LabeledDataset constant;
  constant.points = {{3.0, 7.0}, {3.0, 7.0}};
  constant.labels = {0, 1};
  constant.class_count = 2;
  const auto cn = apply_normalizer(fit_normalizer(constant), constant.points);
  for (const auto& p : cn.points) REQUIRE(p == AmbientPoint{0.5, 0.5});

  REQUIRE_THROWS_AS(fit_normalizer(LabeledDataset{}), std::invalid_argument);
}

TEST_CASE("apply_normalizer: clamping and out-of-range flags") {
  LabeledDataset base;
  base.points = {{1.0}, {3.0}};
  base.labels = {0, 1};
  base.class_count = 2;
  const NormalizationTransform t = fit_normalizer(base);

  auto clamped = apply_normalizer(t, {{0.5}}, true);
  REQUIRE(clamped.points[0][0] == 0.0);
  REQUIRE(clamped.out_of_range.empty());

  auto flagged = apply_normalizer(t, {{0.5}, {2.0}}, false);
  REQUIRE(flagged.points[0][0] < 0.0);
  REQUIRE(flagged.out_of_range == std::vector<std::size_t>{0});

  REQUIRE_THROWS_AS(apply_normalizer(t, {{1.0, 2.0}}), std::invalid_argument);
}

TEST_CASE("normalization is idempotent and lands inside the simplex") {
  LabeledDataset data = generate_classification(200, 3, 2.0, 4);
  const NormalizationTransform t = fit_normalizer(data);
  data.points = apply_normalizer(t, data.points).points;

  const NormalizationTransform refit = fit_normalizer(data);
  const auto again = apply_normalizer(refit, data.points);
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    for (std::size_t d = 0; d < data.points[i].size(); ++d) {
      REQUIRE(std::abs(again.points[i][d] - data.points[i][d]) < 1e-12);
    }
  }

  const EnclosingSimplex s = build_simplex(3);
  for (const auto& p : data.points) REQUIRE(contains(s, p, 1e-9));
}

TEST_CASE("generate_xor: anchors, repetition, determinism") {
  const LabeledDataset exact = generate_xor(1, 0.0, 42);
  REQUIRE(exact.size() == 8);
  REQUIRE(exact.points[0] == AmbientPoint{1.0, 1.0});
  REQUIRE(exact.points[3] == AmbientPoint{3.0, 3.0});
  REQUIRE(exact.points[4] == AmbientPoint{1.0, 3.0});
  REQUIRE(exact.points[7] == AmbientPoint{3.0, 1.0});
  REQUIRE(exact.labels == std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1});

  const LabeledDataset repeated = generate_xor(3, 0.0, 0);
  REQUIRE(repeated.size() == 24);
  REQUIRE(repeated.points[0] == repeated.points[1]);
  REQUIRE(repeated.points[0] == repeated.points[2]);

  const LabeledDataset a = generate_xor(2, 0.3, 9);
  const LabeledDataset b = generate_xor(2, 0.3, 9);
  REQUIRE(a.points == b.points);
  REQUIRE(a.labels == b.labels);
  REQUIRE(a.points != generate_xor(2, 0.3, 10).points);
}

TEST_CASE("generate_classification: balance, separability limit, determinism") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const LabeledDataset d = generate_classification(500, 2, 2.7, seed);
    REQUIRE(d.size() == 500);
    REQUIRE(d.class_count == 2);
    const auto ones = std::count(d.labels.begin(), d.labels.end(), 1);
    REQUIRE(ones >= 200);
    REQUIRE(ones <= 300);
  }

  // Far-apart clusters are linearly separable, so no subdivision is needed.
  LabeledDataset wide = generate_classification(500, 2, 10.0, 7);
  wide.points = apply_normalizer(fit_normalizer(wide), wide.points).points;
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.seed = 7;
  const TrainResult r = train(wide, 0, cfg);
  REQUIRE(r.metrics.back().train_acc >= 0.99);

  const LabeledDataset a = generate_classification(100, 4, 2.7, 11);
  const LabeledDataset b = generate_classification(100, 4, 2.7, 11);
  REQUIRE(a.points == b.points);
  REQUIRE(a.labels == b.labels);
}

TEST_CASE("split: sizes, determinism, partition") {
  const LabeledDataset d = generate_classification(500, 2, 2.7, 0);
  auto [train_set, test_set] = split(d, 0.8, 3);
  REQUIRE(train_set.size() == 400);
  REQUIRE(test_set.size() == 100);

  LabeledDataset two;
  two.points = {{0.1}, {0.9}};
  two.labels = {0, 1};
  two.class_count = 2;
  auto [one_a, one_b] = split(two, 0.5, 0);
  REQUIRE(one_a.size() == 1);
  REQUIRE(one_b.size() == 1);

  auto [again_train, again_test] = split(d, 0.8, 3);
  REQUIRE(again_train.points == train_set.points);
  REQUIRE(again_test.points == test_set.points);

  // Union preserves the label multiset; no point is duplicated.
  std::vector<int> combined = train_set.labels;
  combined.insert(combined.end(), test_set.labels.begin(), test_set.labels.end());
  std::vector<int> original = d.labels;
  std::sort(combined.begin(), combined.end());
  std::sort(original.begin(), original.end());
  REQUIRE(combined == original);

  std::vector<AmbientPoint> all_points = train_set.points;
  all_points.insert(all_points.end(), test_set.points.begin(), test_set.points.end());
  std::vector<AmbientPoint> source = d.points;
  std::sort(all_points.begin(), all_points.end());
  std::sort(source.begin(), source.end());
  REQUIRE(all_points == source);

  REQUIRE_THROWS_AS(split(d, 0.0, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(split(d, 1.0, 0), std::invalid_argument);
}

TEST_CASE("load_csv: embedding shape, label remapping, errors") {
  std::string embedding = "e0,e1,e2,e3,label\n";
  for (int i = 0; i < 20; ++i) {
    embedding += std::to_string(0.1 * i) + ",0.5,-1.25," + std::to_string(i) + "," +
                 std::to_string(i % 10) + "\n";
  }
  const CsvDataset ten = load_csv(write_file("embedding.csv", embedding).string());
  REQUIRE(ten.dataset.dimension() == 4);
  REQUIRE(ten.dataset.class_count == 10);
  REQUIRE(ten.dataset.size() == 20);
  REQUIRE(ten.feature_names == std::vector<std::string>{"e0", "e1", "e2", "e3"});

  const auto sparse = write_file("sparse.csv", "a,b,label\n1,2,7\n3,4,3\n5,6,7\n");
  const CsvDataset remapped = load_csv(sparse.string());
  REQUIRE(remapped.dataset.class_count == 2);
  REQUIRE(remapped.label_values == std::vector<long long>{3, 7});
  REQUIRE(remapped.dataset.labels == std::vector<int>{1, 0, 1});

  REQUIRE_THROWS_WITH(load_csv(write_file("empty.csv", "").string()),
                      Catch::Matchers::ContainsSubstring("empty file"));
  REQUIRE_THROWS_WITH(load_csv(write_file("headeronly.csv", "a,label\n").string()),
                      Catch::Matchers::ContainsSubstring("no data rows"));
  REQUIRE_THROWS_WITH(load_csv(write_file("short.csv", "a,b,label\n1,2,0\n3,4\n").string()),
                      Catch::Matchers::ContainsSubstring("line 3"));
  REQUIRE_THROWS_WITH(load_csv(write_file("nolabel.csv", "a,b\n1,2\n").string()),
                      Catch::Matchers::ContainsSubstring("missing label column"));
  REQUIRE_THROWS_WITH(load_csv(write_file("alpha.csv", "a,label\nx,0\n").string()),
                      Catch::Matchers::ContainsSubstring("non-numeric"));
  REQUIRE_THROWS_WITH(load_csv(write_file("badlabel.csv", "a,label\n1,zero\n").string()),
                      Catch::Matchers::ContainsSubstring("non-integer label"));

  // Custom label column name.
  const auto custom = write_file("custom.csv", "x,target,y\n0.25,1,0.5\n0.5,0,0.75\n");
  const CsvDataset named = load_csv(custom.string(), "target");
  REQUIRE(named.dataset.dimension() == 2);
  REQUIRE(named.dataset.labels == std::vector<int>{1, 0});
}

TEST_CASE("save_csv and load_csv round-trip doubles exactly") {
  LabeledDataset data = generate_classification(60, 3, 2.7, 13);
  const auto path = temp_file("roundtrip.csv");
  save_csv(path.string(), data);
  const CsvDataset back = load_csv(path.string());
  REQUIRE(back.dataset.points == data.points);
  REQUIRE(back.dataset.labels == data.labels);

  // Original label values survive when a mapping is provided.
  LabeledDataset sparse;
  sparse.points = {{0.5}, {0.25}};
  sparse.labels = {0, 1};
  sparse.class_count = 2;
  const std::vector<long long> values{3, 7};
  const auto sparse_path = temp_file("sparse_roundtrip.csv");
  save_csv(sparse_path.string(), sparse, "label", &values);
  const CsvDataset sparse_back = load_csv(sparse_path.string());
  REQUIRE(sparse_back.label_values == values);
}
