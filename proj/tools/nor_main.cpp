// Command-line front end: train, recommend, generate, evaluate,
// dump-attention, synth. All machine output is JSON on stdout; diagnostics
// go to stderr and any failure exits nonzero.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nor/common.hpp"
#include "nor/config.hpp"
#include "nor/data.hpp"
#include "nor/evaluate.hpp"
#include "nor/generator.hpp"
#include "nor/metrics.hpp"
#include "nor/model.hpp"
#include "nor/synthetic.hpp"
#include "nor/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

// Config file first, then individual key flags on top.
nor::Config resolve_config(const CommonArgs& a) {
  nor::Config cfg =
      a.config_path.empty() ? nor::Config{} : nor::Config::from_file(a.config_path);
  for (const auto& [key, value] : a.overrides) cfg.set(key, value);
  cfg.validate();
  return cfg;
}

// Every config key as a --key flag; collected as strings and applied in
// command-line order so later flags win.
void add_config_flags(CLI::App* cmd, CommonArgs& a) {
  static const char* const kKeys[] = {
      "image_size", "conv_channels", "pool_window",        "visual_dim",
      "shared_dim", "embed_dim",     "hidden_dim",         "beam_size",
      "max_len",    "min_freq",      "min_comment_tokens", "val_items",
      "test_items", "candidates_k",  "lambda_reg",         "batch_size",
      "max_epochs"};
  for (const char* key : kKeys) {
    cmd->add_option_function<std::string>(
        std::string("--") + key,
        [&a, key](const std::string& value) { a.overrides.emplace_back(key, value); },
        std::string("config key ") + key);
  }
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc | std::ios::binary);
    NOR_REQUIRE(f.good(), "cannot write ", tmp);
    f << content;
    NOR_REQUIRE(f.good(), "short write to ", tmp);
  }
  fs::rename(tmp, path);
}

json config_snapshot(const nor::Config& cfg) {
  json j;
  std::istringstream lines(cfg.to_text());
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return j;
}

int cmd_train(const std::string& data, const CommonArgs& common, const std::string& out,
              std::uint64_t seed, bool seed_given) {
  const auto t0 = std::chrono::steady_clock::now();
  nor::Config cfg = resolve_config(common);
  if (seed_given) cfg.seed = seed;

  nor::Dataset dataset = nor::load_dataset(data, cfg.min_comment_tokens);
  const std::uint64_t data_hash = nor::dataset_hash(data);
  nor::Splits splits = nor::split_dataset(dataset, cfg.val_items, cfg.test_items, cfg.seed);

  nor::CandidatePool val_pool =
      nor::build_candidates(splits.val_queries, dataset, cfg.seed, cfg.candidates_k);
  nor::CandidatePool test_pool =
      nor::build_candidates(splits.test_queries, dataset, cfg.seed, cfg.candidates_k);
  nor::save_candidates(val_pool, (fs::path(data) / "candidates_val.jsonl").string());
  nor::save_candidates(test_pool, (fs::path(data) / "candidates_test.jsonl").string());

  std::vector<std::vector<std::string>> corpus;
  for (const auto& o : splits.train_outfits)
    for (const auto& c : o.comments) corpus.push_back(nor::tokenize(c));
  nor::Vocabulary vocab = nor::Vocabulary::build(corpus, cfg.min_freq);

  nor::Model model(cfg, std::move(vocab), dataset.catalog.top_ids(),
                   dataset.catalog.bottom_ids());
  nor::Runtime runtime(std::move(model), dataset);
  nor::TrainResult result = nor::train(runtime, splits, val_pool, out);

  std::string report_path;
  if (!val_pool.empty()) {
    nor::Runtime best(nor::load_model(result.checkpoint_path), dataset);
    nor::SplitEvaluation ev = nor::evaluate_split(best, val_pool, splits.val_queries, 1);
    report_path = (fs::path(out) / "val_report.json").string();
    write_file_atomic(report_path, nor::to_json(ev));
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest;
  manifest["config"] = config_snapshot(cfg);
  manifest["seed"] = cfg.seed;
  manifest["dataset_hash"] = hex64(data_hash);
  manifest["checkpoint"] = result.checkpoint_path;
  manifest["report"] = report_path;
  manifest["train_log"] = result.log_path;
  manifest["candidate_pools"] = {(fs::path(data) / "candidates_val.jsonl").string(),
                                 (fs::path(data) / "candidates_test.jsonl").string()};
  manifest["best_epoch"] = result.best_epoch;
  manifest["wall_clock_seconds"] = wall;
  write_file_atomic((fs::path(out) / "manifest.json").string(), manifest.dump(2) + "\n");

  json summary;
  summary["checkpoint"] = result.checkpoint_path;
  summary["best_epoch"] = result.best_epoch;
  summary["best_val_auc"] = result.best_val_auc;
  summary["manifest"] = (fs::path(out) / "manifest.json").string();
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_recommend(const std::string& checkpoint, const std::string& query,
                  const std::string& direction, const std::string& candidates_path, int k,
                  bool table) {
  NOR_REQUIRE(direction == "top" || direction == "bottom", "direction must be top or bottom, got ",
              direction);
  nor::Runtime runtime = nor::load_runtime(checkpoint);
  const bool query_is_top = direction == "bottom";
  const auto& catalog = runtime.dataset().catalog;
  NOR_REQUIRE(query_is_top ? catalog.has_top(query) : catalog.has_bottom(query),
              "unknown query id ", query);

  nor::CandidatePool pool = nor::load_candidates(candidates_path);
  const nor::CandidateQuery* row = nullptr;
  for (const auto& cq : pool)
    if (cq.query == query && cq.direction == direction) row = &cq;
  NOR_REQUIRE(row != nullptr, "query ", query, " (direction ", direction, ") not in pool ",
              candidates_path);

  nor::RankedList ranked = runtime.rank_candidates(query, direction, row->candidates);
  const int shown = std::min<int>(k, static_cast<int>(ranked.size()));
  if (table) {
    std::cout << "rank  score       item\n";
    for (int i = 0; i < shown; ++i) {
      std::ostringstream os;
      os << std::left << std::setw(6) << i + 1 << std::setw(12) << std::setprecision(6)
         << std::fixed << ranked[static_cast<std::size_t>(i)].score
         << ranked[static_cast<std::size_t>(i)].item;
      std::cout << os.str() << '\n';
    }
  } else {
    for (int i = 0; i < shown; ++i) {
      json j;
      j["rank"] = i + 1;
      j["item"] = ranked[static_cast<std::size_t>(i)].item;
      j["score"] = ranked[static_cast<std::size_t>(i)].score;
      std::cout << j.dump() << '\n';
    }
  }
  return 0;
}

int cmd_generate(const std::string& checkpoint, const std::string& top, const std::string& bottom,
                 int beam, int max_len) {
  nor::Runtime runtime = nor::load_runtime(checkpoint);
  const auto& catalog = runtime.dataset().catalog;
  NOR_REQUIRE(catalog.has_top(top), "unknown top id ", top);
  NOR_REQUIRE(catalog.has_bottom(bottom), "unknown bottom id ", bottom);

  nor::Hypothesis hyp = runtime.generate(top, bottom, beam, max_len);
  json j;
  j["top"] = top;
  j["bottom"] = bottom;
  j["comment"] = runtime.model().vocab().render(hyp.tokens);
  j["score"] = hyp.normalized();
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data,
                 const std::string& split) {
  NOR_REQUIRE(split == "val" || split == "test", "split must be val or test, got ", split);
  nor::Model model = nor::load_model(checkpoint);
  nor::Dataset dataset = nor::load_dataset(data, model.config().min_comment_tokens);
  nor::Runtime runtime(std::move(model), std::move(dataset));

  const std::string pool_path = (fs::path(data) / ("candidates_" + split + ".jsonl")).string();
  NOR_REQUIRE(fs::exists(pool_path), "missing candidate pool ", pool_path,
              " (run the train command to freeze pools)");
  nor::CandidatePool pool = nor::load_candidates(pool_path);

  std::vector<nor::QueryItem> queries;
  for (const auto& cq : pool) queries.push_back({cq.query, cq.direction == "bottom"});

  nor::SplitEvaluation ev = nor::evaluate_split(runtime, pool, queries);
  const std::string report = nor::to_json(ev);
  const std::string report_path =
      (fs::path(checkpoint).parent_path() / ("report_" + split + ".json")).string();
  write_file_atomic(report_path, report);
  std::cout << report;
  return 0;
}

int cmd_dump_attention(const std::string& checkpoint, const std::string& top,
                       const std::string& bottom, const std::string& out) {
  nor::Runtime runtime = nor::load_runtime(checkpoint);
  const auto& catalog = runtime.dataset().catalog;
  NOR_REQUIRE(catalog.has_top(top), "unknown top id ", top);
  NOR_REQUIRE(catalog.has_bottom(bottom), "unknown bottom id ", bottom);

  nor::NoGrad guard;
  const nor::Model& model = runtime.model();
  nor::PairEncoding pe = runtime.encode_frozen(top, bottom);
  nor::Tensor joint = nor::joint_regions(pe.f_top, pe.f_bottom);
  nor::Hypothesis hyp = nor::beam_search(pe.v_top, pe.v_bottom, joint, model.generator(),
                                         model.config().beam_size, model.config().max_len);

  // Replay the winning sequence to recover the attention behind each token.
  json tokens = json::array();
  json cross = json::array();
  nor::DecoderState state =
      nor::init_state(pe.v_top, pe.v_bottom, joint, model.generator());
  int prev = nor::Vocabulary::kBos;
  for (int id : hyp.tokens) {
    nor::StepResult step = nor::decode_step(prev, state, joint, model.generator());
    if (id != nor::Vocabulary::kPad && id != nor::Vocabulary::kBos &&
        id != nor::Vocabulary::kEos) {
      tokens.push_back(model.vocab().decode(id));
      cross.push_back(step.weights.values());
    }
    state = step.state;
    prev = id;
  }

  json j;
  j["top"] = top;
  j["bottom"] = bottom;
  j["mutual_attention"] = {{"top", pe.att_top.values()}, {"bottom", pe.att_bottom.values()}};
  j["tokens"] = tokens;
  j["cross_attention"] = cross;
  j["comment"] = model.vocab().render(hyp.tokens);
  write_file_atomic(out, j.dump(2) + "\n");
  std::cout << json{{"out", out}, {"tokens", tokens.size()}}.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Outfit matching and comment generation pipeline"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Split the dataset, freeze candidate pools, train");
  std::string train_data, train_out;
  CommonArgs train_common;
  std::uint64_t train_seed = 0;
  train->add_option("--data", train_data, "dataset root")->required();
  train->add_option("--config", train_common.config_path, "config file (key=value lines)");
  train->add_option("--out", train_out, "output directory")->required();
  auto* seed_opt = train->add_option("--seed", train_seed, "master RNG seed");
  add_config_flags(train, train_common);

  // recommend
  auto* rec = app.add_subcommand("recommend", "Rank a frozen candidate pool for one query");
  std::string rec_ckpt, rec_query, rec_dir, rec_pool;
  int rec_k = 10;
  bool rec_table = false;
  rec->add_option("--checkpoint", rec_ckpt, "model checkpoint")->required();
  rec->add_option("--query", rec_query, "query item id")->required();
  rec->add_option("--direction", rec_dir, "top|bottom: side being ranked")->required();
  rec->add_option("--candidates", rec_pool, "candidate pool file")->required();
  rec->add_option("--k", rec_k, "list length");
  rec->add_flag("--table", rec_table, "human-readable table instead of JSON lines");

  // generate
  auto* gen = app.add_subcommand("generate", "Beam-search a comment for one outfit");
  std::string gen_ckpt, gen_top, gen_bottom;
  int gen_beam = 3, gen_max_len = 20;
  gen->add_option("--checkpoint", gen_ckpt, "model checkpoint")->required();
  gen->add_option("--top", gen_top, "top item id")->required();
  gen->add_option("--bottom", gen_bottom, "bottom item id")->required();
  gen->add_option("--beam", gen_beam, "beam width");
  gen->add_option("--max-len", gen_max_len, "maximum generated tokens");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score a split's frozen pools and comments");
  std::string ev_ckpt, ev_data, ev_split;
  ev->add_option("--checkpoint", ev_ckpt, "model checkpoint")->required();
  ev->add_option("--data", ev_data, "dataset root")->required();
  ev->add_option("--split", ev_split, "val|test")->required();

  // dump-attention
  auto* dump = app.add_subcommand("dump-attention", "Raw attention weights for one outfit");
  std::string dump_ckpt, dump_top, dump_bottom, dump_out;
  dump->add_option("--checkpoint", dump_ckpt, "model checkpoint")->required();
  dump->add_option("--top", dump_top, "top item id")->required();
  dump->add_option("--bottom", dump_bottom, "bottom item id")->required();
  dump->add_option("--out", dump_out, "output JSON path")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Write a color-keyed toy dataset");
  std::string synth_out;
  int synth_n = 8, synth_size = 32, synth_comments = 0;
  std::uint64_t synth_seed = 1;
  bool synth_extra = false;
  synth->add_option("--out", synth_out, "dataset root to create")->required();
  synth->add_option("--outfits", synth_n, "number of outfits");
  synth->add_option("--image-size", synth_size, "square image side");
  synth->add_option("--seed", synth_seed, "master RNG seed");
  synth->add_flag("--extra-pairs", synth_extra, "pair every fourth top with a second bottom");
  synth->add_option("--comments-per-outfit", synth_comments, "0 = a 2-or-3 mix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(train_data, train_common, train_out, train_seed, seed_opt->count() > 0);
    if (rec->parsed())
      return cmd_recommend(rec_ckpt, rec_query, rec_dir, rec_pool, rec_k, rec_table);
    if (gen->parsed()) return cmd_generate(gen_ckpt, gen_top, gen_bottom, gen_beam, gen_max_len);
    if (ev->parsed()) return cmd_evaluate(ev_ckpt, ev_data, ev_split);
    if (dump->parsed()) return cmd_dump_attention(dump_ckpt, dump_top, dump_bottom, dump_out);
    if (synth->parsed()) {
      nor::make_synthetic(synth_out, synth_n, synth_size, synth_seed, synth_extra,
                          synth_comments);
      std::cout << json{{"out", synth_out}, {"outfits", synth_n}}.dump() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
