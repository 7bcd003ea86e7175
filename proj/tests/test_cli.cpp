#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

#include "simap/dataset.hpp"
#include "simap/layer.hpp"
#include "simap/model_io.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "simap_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run_cli(const std::string& args) {
  const fs::path out_file = work_dir() / "stdout.txt";
  const fs::path err_file = work_dir() / "stderr.txt";
  const std::string cmd = std::string(SIMAP_CLI_PATH) + " " + args + " > " +
                          out_file.string() + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream out(out_file);
  std::stringstream so;
  so << out.rdbuf();
  r.out = so.str();
  std::ifstream err(err_file);
  std::stringstream se;
  se << err.rdbuf();
  r.err = se.str();
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    rows.push_back(fields);
  }
  return rows;
}

}  // namespace

TEST_CASE("train writes the full artifact set and reaches XOR accuracy 1") {
  const fs::path out = work_dir() / "xor_run";
  const RunResult r = run_cli("train --gen xor --levels 2 --epochs 1000 --seed 1 --out " +
                              out.string());
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  for (const char* name : {"config.txt", "label_map.csv", "metrics.csv", "summary.csv",
                           "model_L0.json", "model_L1.json", "model_L2.json"}) {
    REQUIRE(fs::exists(out / name));
  }
  REQUIRE(r.out.find("level 2:") != std::string::npos);
  REQUIRE(r.out.find("train_acc=1\n") != std::string::npos);

  // Metric rows are ordered by (level, epoch).
  const auto rows = read_csv_rows(out / "metrics.csv");
  REQUIRE(rows[0] == std::vector<std::string>{"level", "epoch", "train_loss", "train_acc",
                                              "test_loss", "test_acc"});
  int prev_level = -1;
  long prev_epoch = -1;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const int level = std::stoi(rows[i][0]);
    const long epoch = std::stol(rows[i][1]);
    REQUIRE(level >= prev_level);
    if (level == prev_level) REQUIRE(epoch > prev_epoch);
    prev_level = level;
    prev_epoch = epoch;
  }
}

TEST_CASE("evaluate on the training data reproduces the final metrics") {
  const fs::path data = work_dir() / "synth.csv";
  simap::save_csv(data.string(), simap::generate_classification(200, 2, 2.7, 5));

  const fs::path out = work_dir() / "synth_run";
  const RunResult tr = run_cli("train --data " + data.string() +
                               " --levels 1 --epochs 200 --seed 5 --out " + out.string());
  REQUIRE(tr.exit_code == 0);

  const RunResult ev = run_cli("evaluate --model " + (out / "model_L1.json").string() +
                               " --data " + data.string());
  REQUIRE(ev.exit_code == 0);

  const auto summary = read_csv_rows(out / "summary.csv");
  // summary: level,train_loss,train_acc,... ; level 1 is the last row.
  const std::string expected =
      "test_loss=" + summary.back()[1] + " test_acc=" + summary.back()[2] + "\n";
  REQUIRE(ev.out == expected);
}

TEST_CASE("boundary grids: corner lattice, XOR anchors, linear level-0 rows") {
  const fs::path xor_run = work_dir() / "xor_run";  // trained above
  const RunResult corners = run_cli("boundary --model " + (xor_run / "model_L0.json").string() +
                                    " --resolution 2 --out " + (work_dir() / "b2").string());
  REQUIRE(corners.exit_code == 0);
  auto rows = read_csv_rows(work_dir() / "b2" / "boundary.csv");
  REQUIRE(rows.size() == 5);  // header + 4 corners
  REQUIRE(rows[1][0] == "0");
  REQUIRE(rows[1][1] == "0");
  REQUIRE(rows[4][0] == "1");
  REQUIRE(rows[4][1] == "1");

  // The trained level-2 model labels every XOR anchor correctly at the
  // nearest lattice point of a 200x200 grid.
  const RunResult fine = run_cli("boundary --model " + (xor_run / "model_L2.json").string() +
                                 " --resolution 200 --out " + (work_dir() / "b200").string());
  REQUIRE(fine.exit_code == 0);
  rows = read_csv_rows(work_dir() / "b200" / "boundary.csv");
  REQUIRE(rows.size() == 1 + 200 * 200);
  const double anchors[8][2] = {{0, 0},    {0.25, 0.25}, {0.75, 0.75}, {1, 1},
                                {0, 1},    {0.25, 0.75}, {0.75, 0.25}, {1, 0}};
  const int labels[8] = {0, 0, 0, 0, 1, 1, 1, 1};
  for (int a = 0; a < 8; ++a) {
    const long ix = std::lround(anchors[a][0] * 199.0);
    const long iy = std::lround(anchors[a][1] * 199.0);
    const auto& row = rows[1 + static_cast<std::size_t>(iy) * 200 + ix];
    REQUIRE(std::stoi(row[2]) == labels[a]);
  }

  // A level-0 model is affine in x, so along any grid row the label switches
  // at most once.
  const fs::path synth_run = work_dir() / "synth_run";
  const RunResult lin = run_cli("boundary --model " + (synth_run / "model_L0.json").string() +
                                " --resolution 50 --out " + (work_dir() / "b50").string());
  REQUIRE(lin.exit_code == 0);
  rows = read_csv_rows(work_dir() / "b50" / "boundary.csv");
  for (int iy = 0; iy < 50; ++iy) {
    int switches = 0;
    for (int ix = 1; ix < 50; ++ix) {
      const auto& prev = rows[1 + static_cast<std::size_t>(iy) * 50 + ix - 1];
      const auto& cur = rows[1 + static_cast<std::size_t>(iy) * 50 + ix];
      if (prev[2] != cur[2]) ++switches;
    }
    REQUIRE(switches <= 1);
  }

  const RunResult bad = run_cli("boundary --model " + (work_dir() / "missing.json").string() +
                                " --resolution 4 --out " + (work_dir() / "bx").string());
  REQUIRE(bad.exit_code != 0);
}

TEST_CASE("explain emits the Example-1 coefficients and forward's probs") {
  const fs::path xor_run = work_dir() / "xor_run";
  const fs::path model_path = xor_run / "model_L1.json";
  // Raw point (2,2) normalizes to (0.5,0.5) under the XOR fit.
  const RunResult r =
      run_cli("explain --model " + model_path.string() + " --point 2,2 --json");
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  REQUIRE(j["vertices"].size() == 3);
  REQUIRE(j["vertices"][0]["key"] == "(b0)");
  REQUIRE(j["vertices"][0]["coefficient"] == 0.25);
  REQUIRE(j["vertices"][0]["position"] == std::vector<double>{0.0, 0.0});
  REQUIRE(j["vertices"][1]["key"] == "(b0,b1)");
  REQUIRE(j["vertices"][1]["coefficient"] == 0.0);
  REQUIRE(j["vertices"][1]["position"] == std::vector<double>{1.0, 0.0});
  REQUIRE(j["vertices"][2]["key"] == "(b0,b1,b2)");
  REQUIRE(j["vertices"][2]["coefficient"] == 0.75);

  // Same probabilities as a library forward pass on the loaded model.
  simap::ModelContainer container = simap::load_model(model_path.string());
  const simap::Prediction pred =
      simap::forward(*container.model, container.model->activate({0.5, 0.5}));
  const auto probs = j["probs"].get<std::vector<double>>();
  REQUIRE(probs == pred.probs);

  // --normalized skips the stored normalizer.
  const RunResult direct =
      run_cli("explain --model " + model_path.string() + " --point 0.5,0.5 --normalized --json");
  REQUIRE(direct.exit_code == 0);
  REQUIRE(nlohmann::json::parse(direct.out)["probs"].get<std::vector<double>>() == pred.probs);
}

TEST_CASE("census prints counts and flags overflow") {
  RunResult r = run_cli("census --n 2 --k 1");
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out == "maximal_simplices 6\nsd1_vertices 7\nvc_dimension 18\n");

  r = run_cli("census --n 2 --k 0");
  REQUIRE(r.out.find("maximal_simplices 1\n") != std::string::npos);
  REQUIRE(r.out.find("vc_dimension 3\n") != std::string::npos);

  r = run_cli("census --n 10 --k 5");
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.find("maximal_simplices overflow") != std::string::npos);
  REQUIRE(r.out.find("vc_dimension overflow") != std::string::npos);
}

TEST_CASE("identical train invocations produce byte-identical artifacts") {
  const std::string flags = "train --gen synth --samples 120 --features 3 --levels 1 "
                            "--epochs 120 --seed 9 --split 0.8 --out ";
  const fs::path a = work_dir() / "det_a";
  const fs::path b = work_dir() / "det_b";
  REQUIRE(run_cli(flags + a.string()).exit_code == 0);
  REQUIRE(run_cli(flags + b.string()).exit_code == 0);
  for (const char* name : {"metrics.csv", "summary.csv", "config.txt", "model_L0.json",
                           "model_L1.json"}) {
    REQUIRE(slurp(a / name) == slurp(b / name));
  }
}

TEST_CASE("bad invocations exit nonzero") {
  REQUIRE(run_cli("train --out " + (work_dir() / "none").string()).exit_code != 0);
  REQUIRE(run_cli("train --gen nope --out " + (work_dir() / "none").string()).exit_code != 0);
  REQUIRE(run_cli("evaluate --model nope.json --data nope.csv").exit_code != 0);
  const fs::path xor_run = work_dir() / "xor_run";
  // Evaluating a 2-feature model on 4-feature data fails cleanly.
  const fs::path wide = work_dir() / "wide.csv";
  simap::save_csv(wide.string(), simap::generate_classification(10, 4, 2.7, 1));
  REQUIRE(run_cli("evaluate --model " + (xor_run / "model_L0.json").string() + " --data " +
                  wide.string())
              .exit_code != 0);
}
