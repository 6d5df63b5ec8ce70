// End-to-end checks of the command-line binary via subprocesses. One tiny
// model is trained once and shared by every case in this file.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

#ifndef NOR_BIN
#error "NOR_BIN must point at the CLI binary"
#endif

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

RunResult run(const std::string& args) {
  static int counter = 0;
  const fs::path out = fs::temp_directory_path() / ("nor_cli_out_" + std::to_string(counter));
  const fs::path err = fs::temp_directory_path() / ("nor_cli_err_" + std::to_string(counter));
  ++counter;
  const std::string cmd =
      std::string(NOR_BIN) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = status == -1 ? -1 : WEXITSTATUS(status);
  r.out = slurp(out);
  r.err = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return r;
}

std::vector<json> json_lines(const std::string& text) {
  std::vector<json> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(json::parse(line));
  }
  return rows;
}

// Synth + train once; every case reads from this directory.
struct Fixture {
  fs::path root;
  fs::path data;
  fs::path out;
  std::string ckpt;
  std::string train_stdout;

  Fixture() {
    root = fs::temp_directory_path() / "nor_cli_fixture";
    fs::remove_all(root);
    fs::create_directories(root);
    data = root / "data";
    out = root / "run";

    auto synth = run("synth --out " + data.string() +
                     " --outfits 8 --image-size 16 --seed 3 --extra-pairs");
    if (synth.code != 0) throw std::runtime_error("fixture synth failed: " + synth.err);

    auto train = run(train_command(out));
    if (train.code != 0) throw std::runtime_error("fixture train failed: " + train.err);
    train_stdout = train.out;
    ckpt = (out / "model.ckpt").string();
  }

  std::string train_command(const fs::path& out_dir) const {
    return "train --data " + data.string() + " --out " + out_dir.string() +
           " --seed 5 --image_size 16 --conv_channels 2 --pool_window 8 --visual_dim 3"
           " --shared_dim 4 --embed_dim 3 --hidden_dim 4 --beam_size 2 --max_len 8"
           " --candidates_k 3 --batch_size 8 --max_epochs 2 --val_items 1 --test_items 1";
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

TEST_CASE("train exits cleanly and writes the manifest and artifacts") {
  auto& f = fixture();
  CHECK(fs::exists(f.ckpt));
  CHECK(fs::exists(f.out / "train_log.jsonl"));
  CHECK(fs::exists(f.out / "manifest.json"));
  CHECK(fs::exists(f.data / "candidates_val.jsonl"));
  CHECK(fs::exists(f.data / "candidates_test.jsonl"));

  json manifest = json::parse(slurp(f.out / "manifest.json"));
  CHECK(manifest.contains("config"));
  CHECK(manifest.contains("seed"));
  CHECK(manifest.contains("dataset_hash"));
  CHECK(manifest.contains("checkpoint"));
  CHECK(manifest.contains("wall_clock_seconds"));
  CHECK(manifest["seed"].get<std::uint64_t>() == 5);

  json summary = json::parse(f.train_stdout);
  CHECK(summary["checkpoint"].get<std::string>() == f.ckpt);
}

TEST_CASE("training twice with one seed produces an identical checkpoint") {
  auto& f = fixture();
  const fs::path out2 = f.root / "run_again";
  auto r = run(f.train_command(out2));
  REQUIRE(r.code == 0);
  CHECK(slurp(out2 / "model.ckpt") == slurp(f.out / "model.ckpt"));
  CHECK(slurp(out2 / "val_report.json") == slurp(f.out / "val_report.json"));
}

TEST_CASE("a missing dataset root fails with the path in the message") {
  auto r = run("train --data /nope/missing --out /tmp/nor_cli_never --seed 1");
  CHECK(r.code == 1);
  CHECK(r.err.find("/nope/missing") != std::string::npos);
}

TEST_CASE("recommend emits a ranked JSON line per candidate") {
  auto& f = fixture();
  json pool_row = json_lines(slurp(f.data / "candidates_val.jsonl")).at(0);
  const std::string query = pool_row["query"].get<std::string>();
  const std::string direction = pool_row["direction"].get<std::string>();

  auto r = run("recommend --checkpoint " + f.ckpt + " --query " + query + " --direction " +
               direction + " --candidates " + (f.data / "candidates_val.jsonl").string() +
               " --k 3");
  REQUIRE(r.code == 0);
  auto rows = json_lines(r.out);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i]["rank"].get<int>() == static_cast<int>(i) + 1);
    CHECK(rows[i].contains("item"));
    if (i > 0) CHECK(rows[i]["score"].get<double>() <= rows[i - 1]["score"].get<double>());
  }

  // k beyond the pool clamps to the pool size.
  const int pool_size = static_cast<int>(pool_row["candidates"].size());
  auto big = run("recommend --checkpoint " + f.ckpt + " --query " + query + " --direction " +
                 direction + " --candidates " + (f.data / "candidates_val.jsonl").string() +
                 " --k 999");
  REQUIRE(big.code == 0);
  CHECK(static_cast<int>(json_lines(big.out).size()) == pool_size);
}

TEST_CASE("recommend rejects unknown query ids") {
  auto& f = fixture();
  auto r = run("recommend --checkpoint " + f.ckpt +
               " --query top_999 --direction bottom --candidates " +
               (f.data / "candidates_val.jsonl").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("top_999") != std::string::npos);
}

TEST_CASE("generate emits one JSON object and respects the length cap") {
  auto& f = fixture();
  auto r = run("generate --checkpoint " + f.ckpt +
               " --top top_000 --bottom bottom_000 --beam 2 --max-len 6");
  REQUIRE(r.code == 0);
  json row = json::parse(r.out);
  CHECK(row["top"].get<std::string>() == "top_000");
  CHECK(row["bottom"].get<std::string>() == "bottom_000");
  CHECK(row.contains("score"));
  std::istringstream words(row["comment"].get<std::string>());
  int count = 0;
  std::string w;
  while (words >> w) ++count;
  CHECK(count <= 6);

  auto again = run("generate --checkpoint " + f.ckpt +
                   " --top top_000 --bottom bottom_000 --beam 2 --max-len 6");
  CHECK(again.out == r.out);
}

TEST_CASE("evaluate writes a report with ranking and generation sections") {
  auto& f = fixture();
  auto r = run("evaluate --checkpoint " + f.ckpt + " --data " + f.data.string() +
               " --split test");
  REQUIRE(r.code == 0);
  json report = json::parse(r.out);
  CHECK(report.contains("bottom_item"));
  CHECK(report.contains("top_item"));
  CHECK(report.contains("generation"));
  for (const char* side : {"bottom_item", "top_item"}) {
    CHECK(report[side].contains("map"));
    CHECK(report[side].contains("mrr"));
    CHECK(report[side].contains("auc"));
  }
  CHECK(report["generation"].contains("rouge"));
  CHECK(report["generation"].contains("bleu"));

  const fs::path report_path = fs::path(f.ckpt).parent_path() / "report_test.json";
  REQUIRE(fs::exists(report_path));
  const std::string first = slurp(report_path);
  auto again = run("evaluate --checkpoint " + f.ckpt + " --data " + f.data.string() +
                   " --split test");
  REQUIRE(again.code == 0);
  CHECK(slurp(report_path) == first);
  CHECK(again.out == r.out);
}

TEST_CASE("evaluate rejects unknown split names") {
  auto& f = fixture();
  auto r = run("evaluate --checkpoint " + f.ckpt + " --data " + f.data.string() +
               " --split train");
  CHECK(r.code == 1);
  CHECK(r.err.find("train") != std::string::npos);
}

TEST_CASE("dump-attention writes normalized weights matching the token count") {
  auto& f = fixture();
  const fs::path out_json = f.root / "attention.json";
  auto r = run("dump-attention --checkpoint " + f.ckpt +
               " --top top_001 --bottom bottom_001 --out " + out_json.string());
  REQUIRE(r.code == 0);
  json dump = json::parse(slurp(out_json));

  auto check_unit_sum = [](const json& vec) {
    double total = 0.0;
    for (const auto& x : vec) total += x.get<double>();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  };
  check_unit_sum(dump["mutual_attention"]["top"]);
  check_unit_sum(dump["mutual_attention"]["bottom"]);

  const auto& tokens = dump["tokens"];
  const auto& cross = dump["cross_attention"];
  REQUIRE(tokens.size() == cross.size());
  for (const auto& vec : cross) check_unit_sum(vec);
}
