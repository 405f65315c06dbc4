#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "stylemimic/corpus.hpp"
#include "stylemimic/llmclient.hpp"

namespace fs = std::filesystem;

namespace {

struct Workspace {
  Workspace() : dir(fs::temp_directory_path() / ("stylemimic_cli_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }

  // Runs the CLI inside the workspace; returns its exit status.
  int run(const std::string& args) const {
    const std::string cmd = "cd '" + dir.string() + "' && '" + STYLEMIMIC_CLI + "' " + args + " > last.log 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string read(const std::string& name) const {
    std::ifstream in(dir / name, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
  bool exists(const std::string& name) const { return fs::exists(dir / name); }

  fs::path dir;
};

}  // namespace

TEST_CASE("step-by-step workflow") {
  Workspace ws;
  REQUIRE(ws.run("synth --authors 5 --samples 12 --seed 4 --out corpus.jsonl") == 0);
  CHECK(stylemimic::parse_jsonl(ws.read("corpus.jsonl")).size() == 60);

  REQUIRE(ws.run("ingest --input corpus.jsonl --out merged.jsonl") == 0);
  CHECK(ws.read("merged.jsonl") == ws.read("corpus.jsonl"));

  REQUIRE(ws.run("split --corpus merged.jsonl --out-dir split --top-n 5 --split-seed 1") == 0);
  const auto train = stylemimic::parse_jsonl(ws.read("split/train.jsonl"));
  const auto test = stylemimic::parse_jsonl(ws.read("split/test.jsonl"));
  CHECK(train.size() == 30);
  CHECK(test.size() == 30);
  CHECK(ws.exists("split/split_manifest.jsonl"));

  REQUIRE(ws.run("summarize --test split/test.jsonl --out summaries.jsonl --cache cache.jsonl") == 0);
  CHECK(stylemimic::GenerationCache(ws.dir / "cache.jsonl").size() == 30);

  const std::string common =
      "--train split/train.jsonl --test split/test.jsonl --summaries summaries.jsonl --cache cache.jsonl";
  REQUIRE(ws.run("generate " + common + " --condition fewshot --out few.jsonl") == 0);
  REQUIRE(ws.run("generate " + common + " --condition zeroshot --out zero.jsonl") == 0);
  const auto few = stylemimic::records_from_jsonl(ws.read("few.jsonl"));
  REQUIRE(few.size() == 30);
  CHECK(few[0].condition == "fewshot_5");
  CHECK(few[0].exemplar_ids.size() == 5);

  const std::string eval_common = "evaluate --train split/train.jsonl --test split/test.jsonl --dataset synth";
  REQUIRE(ws.run(eval_common + " --generations few.jsonl --out-dir ev_few") == 0);
  REQUIRE(ws.run(eval_common + " --generations zero.jsonl --out-dir ev_zero") == 0);
  for (const char* f : {"report.json", "manifest.json", "metrics.csv", "summary.txt", "author_distances.csv"}) {
    CHECK(ws.exists(std::string("ev_few/") + f));
  }
  const auto report = nlohmann::json::parse(ws.read("ev_few/report.json"));
  CHECK(report["cells"].size() == 2);
  CHECK(ws.read("ev_few/metrics.csv").starts_with("# manifest_digest: "));

  REQUIRE(ws.run("compare --a ev_few/report.json --b ev_zero/report.json --out-dir cmp") == 0);
  CHECK(ws.read("last.log").find("synth,mock,fewshot_5,zeroshot,") != std::string::npos);
  CHECK(ws.exists("cmp/comparisons.csv"));

  REQUIRE(ws.run("report --report ev_few/report.json --out-dir rep") == 0);
  CHECK(ws.read("rep/metrics.csv") == ws.read("ev_few/metrics.csv"));
}

TEST_CASE("run with a config file") {
  Workspace ws;
  REQUIRE(ws.run("synth --authors 4 --samples 10 --out corpus.jsonl") == 0);
  {
    std::ofstream cfg(ws.dir / "run.ini");
    cfg << "[run]\ncorpus = corpus.jsonl\nout-dir = out\ncondition = zeroshot\ntop-n = 4\nprovider = echo\n";
  }
  REQUIRE(ws.run("--config run.ini run") == 0);
  const auto records = stylemimic::records_from_jsonl(ws.read("out/generations.jsonl"));
  REQUIRE(records.size() == 20);
  CHECK(records[0].condition == "zeroshot");
  CHECK(ws.exists("out/report.json"));
  CHECK(ws.exists("out/metrics.csv"));

  // A fresh directory has no cache, so the serial rerun must reproduce the records byte for byte.
  REQUIRE(ws.run("--config run.ini run --concurrency 1 --out-dir out_serial") == 0);
  CHECK(ws.read("out_serial/generations.jsonl") == ws.read("out/generations.jsonl"));
  CHECK(ws.read("out_serial/report.json") == ws.read("out/report.json"));

  // Rerunning into the same directory replays the cache.
  REQUIRE(ws.run("--config run.ini run") == 0);
  for (const auto& rec : stylemimic::records_from_jsonl(ws.read("out/generations.jsonl"))) CHECK(rec.cached);
}

TEST_CASE("errors exit non-zero with the error name") {
  Workspace ws;
  REQUIRE(ws.run("synth --authors 3 --samples 4 --out corpus.jsonl") == 0);
  CHECK(ws.run("split --corpus corpus.jsonl --out-dir split") == 2);
  CHECK(ws.read("last.log").find("TooFewAuthors") != std::string::npos);
  CHECK(ws.run("split --corpus missing.jsonl --out-dir split --top-n 3") == 2);
  CHECK(ws.run("generate --bogus") != 0);
}
