// Command-line front end for the stylemimic pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stylemimic/corpus.hpp"
#include "stylemimic/digest.hpp"
#include "stylemimic/error.hpp"
#include "stylemimic/llmclient.hpp"
#include "stylemimic/orchestrator.hpp"
#include "stylemimic/synthetic.hpp"

namespace fs = std::filesystem;
using namespace stylemimic;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, std::string_view content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + p.string());
  out << content;
}

struct EndpointOptions {
  std::string url;
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  std::string api_key_env = "LLM_API_KEY";
  int timeout_s = 120;
  int max_retries = 3;

  HttpEndpoint endpoint() const {
    HttpEndpoint e;
    e.url = url;
    e.auth_header = auth_header;
    e.auth_prefix = auth_prefix;
    e.api_key_env = api_key_env;
    e.timeout = std::chrono::seconds(timeout_s);
    return e;
  }
  RetryPolicy retry() const {
    RetryPolicy r;
    r.max_retries = max_retries;
    return r;
  }
};

void add_endpoint_options(CLI::App* app, EndpointOptions& o, const std::string& prefix) {
  app->add_option("--" + prefix + "url", o.url, "Endpoint URL");
  app->add_option("--" + prefix + "auth-header", o.auth_header, "Header carrying the token")->capture_default_str();
  app->add_option("--" + prefix + "auth-prefix", o.auth_prefix, "Prefix before the token")->capture_default_str();
  app->add_option("--" + prefix + "api-key-env", o.api_key_env, "Environment variable holding the token")
      ->capture_default_str();
  app->add_option("--" + prefix + "timeout", o.timeout_s, "Request timeout in seconds")->capture_default_str();
  app->add_option("--" + prefix + "max-retries", o.max_retries, "Retries on transient failures")
      ->capture_default_str();
}

std::unique_ptr<ChatProvider> make_provider(const std::string& kind, const EndpointOptions& endpoint,
                                            const std::string& fixed_text, const Corpus* train) {
  if (kind == "echo") return std::make_unique<EchoReferenceProvider>();
  if (kind == "fixed") return std::make_unique<FixedTemplateProvider>(fixed_text);
  if (kind == "first-sentence") return std::make_unique<FirstSentenceProvider>();
  if (kind == "style") {
    std::vector<std::string> pool;
    if (train != nullptr) {
      for (const auto& s : train->samples()) pool.push_back(s.text);
    }
    return std::make_unique<StyleConditionedProvider>(std::move(pool));
  }
  if (kind == "http") {
    if (endpoint.url.empty()) throw Error(ErrorCode::kInvalidArgument, "http provider needs --url");
    return std::make_unique<HttpChatProvider>(endpoint.endpoint(), endpoint.retry(), make_http_transport());
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown provider: " + kind);
}

struct DetectorOptions {
  std::string kind = "stub";
  EndpointOptions endpoint;
  std::string text_field = "document";
  std::string pointer = "/prob_human";
  double threshold = 0.5;
  double mixed_band = 0.0;
};

std::unique_ptr<Detector> make_detector(const DetectorOptions& o) {
  if (o.kind == "stub") return std::make_unique<OfflineStubDetector>();
  if (o.kind == "http") {
    DetectorConfig c;
    c.endpoint = o.endpoint.endpoint();
    c.text_field = o.text_field;
    c.prob_human_pointer = o.pointer;
    c.threshold = o.threshold;
    c.mixed_band = o.mixed_band;
    return std::make_unique<HttpDetector>(c, o.endpoint.retry(), make_http_transport());
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown detector: " + o.kind);
}

void add_split_options(CLI::App* app, SplitConfig& s) {
  app->add_option("--min-words", s.min_words, "Minimum words per sample")->capture_default_str();
  app->add_option("--max-words", s.max_words, "Maximum words per sample")->capture_default_str();
  app->add_option("--top-n", s.top_n_authors, "Authors kept, by sample count")->capture_default_str();
  app->add_option("--train-fraction", s.train_fraction, "Per-author train share")->capture_default_str();
  app->add_option("--split-seed", s.seed, "Split seed")->capture_default_str();
  app->add_option("--stratify", s.stratify_key, "Meta key to stratify on");
}

void print_corpus_stats(const Corpus& c) {
  std::printf("%zu samples, %zu authors\n", c.size(), c.authors().size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluate how well language models imitate an author's writing style"};
  app.set_config("--config", "", "INI or TOML file with option values; [section] per subcommand");
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic multi-author corpus");
  SyntheticConfig synth_cfg;
  std::string synth_out;
  synth->add_option("--authors", synth_cfg.num_authors)->capture_default_str();
  synth->add_option("--samples", synth_cfg.samples_per_author, "Samples per author")->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed)->capture_default_str();
  synth->add_option("--out", synth_out, "Output JSONL")->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate and merge JSONL corpora");
  std::vector<std::string> ingest_inputs;
  std::vector<std::string> exclude;
  std::string ingest_out;
  ingest->add_option("--input", ingest_inputs, "Input JSONL (repeatable)")->required();
  ingest->add_option("--exclude", exclude, "Drop texts matching this regex (repeatable)");
  ingest->add_option("--out", ingest_out, "Merged corpus JSONL");

  // split
  auto* split_cmd = app.add_subcommand("split", "Filter, keep top authors and split train/test");
  std::string split_corpus;
  std::string split_out;
  SplitConfig split_cfg;
  split_cmd->add_option("--corpus", split_corpus)->required();
  split_cmd->add_option("--out-dir", split_out)->required();
  add_split_options(split_cmd, split_cfg);

  // summarize
  auto* summarize = app.add_subcommand("summarize", "Summarize every test sample");
  std::string sum_test;
  std::string sum_out;
  std::string sum_provider = "first-sentence";
  std::string sum_model = "mock-summarizer";
  std::string sum_cache;
  std::size_t sum_concurrency = 4;
  EndpointOptions sum_endpoint;
  summarize->add_option("--test", sum_test)->required();
  summarize->add_option("--out", sum_out)->required();
  summarize->add_option("--provider", sum_provider, "first-sentence or http")->capture_default_str();
  summarize->add_option("--model", sum_model)->capture_default_str();
  summarize->add_option("--cache", sum_cache, "Generation cache JSONL");
  summarize->add_option("--concurrency", sum_concurrency)->capture_default_str();
  add_endpoint_options(summarize, sum_endpoint, "");

  // generate
  auto* generate = app.add_subcommand("generate", "Generate texts for one prompting condition");
  std::string gen_train;
  std::string gen_test;
  std::string gen_summaries;
  std::string gen_out;
  std::string gen_condition = "fewshot";
  std::string gen_provider = "style";
  std::string gen_fixed = "This is a fixed reply.";
  std::string gen_cache;
  std::string gen_subset_out;
  std::optional<std::size_t> gen_per_author;
  std::optional<int> gen_max_tokens;
  RunConfig gen_cfg;
  EndpointOptions gen_endpoint;
  generate->add_option("--train", gen_train)->required();
  generate->add_option("--test", gen_test)->required();
  generate->add_option("--summaries", gen_summaries)->required();
  generate->add_option("--out", gen_out, "Generations JSONL")->required();
  generate->add_option("--condition", gen_condition, "fewshot, zeroshot, len_ctrl, sim_ctrl, snippet, quantity")
      ->capture_default_str();
  generate->add_option("--model", gen_cfg.model_ids, "Model id (repeatable)")->capture_default_str();
  generate->add_option("--k", gen_cfg.k, "Exemplars per prompt")->capture_default_str();
  generate->add_option("--sizes", gen_cfg.quantity_sizes, "Exemplar counts for quantity runs")
      ->capture_default_str();
  generate->add_option("--seed", gen_cfg.seed)->capture_default_str();
  generate->add_option("--per-author", gen_per_author, "Test samples per author");
  generate->add_option("--test-subset-out", gen_subset_out, "Where to write the selected test samples");
  generate->add_option("--temperature", gen_cfg.temperature)->capture_default_str();
  generate->add_option("--max-tokens", gen_max_tokens, "Default: 2 x target words");
  generate->add_option("--provider", gen_provider, "echo, fixed, style or http")->capture_default_str();
  generate->add_option("--fixed-text", gen_fixed, "Reply of the fixed provider");
  generate->add_option("--cache", gen_cache, "Generation cache JSONL");
  generate->add_option("--concurrency", gen_cfg.concurrency)->capture_default_str();
  add_endpoint_options(generate, gen_endpoint, "");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score generations with all evaluators");
  std::string ev_train;
  std::string ev_test;
  std::vector<std::string> ev_generations;
  std::string ev_out;
  std::string ev_dataset = "corpus";
  std::uint64_t ev_seed = 0;
  std::string ev_distance = "cosine";
  DetectorOptions det;
  EndpointOptions embed_endpoint;
  evaluate->add_option("--train", ev_train)->required();
  evaluate->add_option("--test", ev_test)->required();
  evaluate->add_option("--generations", ev_generations, "Generations JSONL (repeatable)")->required();
  evaluate->add_option("--out-dir", ev_out)->required();
  evaluate->add_option("--dataset", ev_dataset)->capture_default_str();
  evaluate->add_option("--seed", ev_seed)->capture_default_str();
  evaluate->add_option("--av-distance", ev_distance, "cosine or euclidean")->capture_default_str();
  evaluate->add_option("--detector", det.kind, "stub or http")->capture_default_str();
  evaluate->add_option("--detector-text-field", det.text_field)->capture_default_str();
  evaluate->add_option("--detector-pointer", det.pointer, "JSON pointer to prob_human")->capture_default_str();
  evaluate->add_option("--detector-threshold", det.threshold)->capture_default_str();
  evaluate->add_option("--detector-mixed-band", det.mixed_band)->capture_default_str();
  add_endpoint_options(evaluate, det.endpoint, "detector-");
  add_endpoint_options(evaluate, embed_endpoint, "embedding-");

  // compare
  auto* compare = app.add_subcommand("compare", "Paired Wilcoxon test between two evaluated conditions");
  std::string cmp_a;
  std::string cmp_b;
  std::string cmp_out;
  compare->add_option("--a", cmp_a, "report.json of the first condition")->required();
  compare->add_option("--b", cmp_b, "report.json of the second condition")->required();
  compare->add_option("--out-dir", cmp_out, "Write report files with the comparisons here");

  // report
  auto* report_cmd = app.add_subcommand("report", "Emit CSV and summary files from report.json");
  std::string rep_in;
  std::string rep_out;
  report_cmd->add_option("--report", rep_in)->required();
  report_cmd->add_option("--out-dir", rep_out)->required();

  // run
  auto* run = app.add_subcommand("run", "Full pipeline on one corpus with mock or http providers");
  std::string run_corpus;
  std::string run_out;
  std::string run_condition_name = "fewshot";
  std::string run_provider = "style";
  std::string run_summarizer = "first-sentence";
  std::optional<std::size_t> run_per_author;
  RunConfig run_cfg;
  EndpointOptions run_endpoint;
  run->add_option("--corpus", run_corpus)->required();
  run->add_option("--out-dir", run_out)->required();
  run->add_option("--dataset", run_cfg.dataset)->capture_default_str();
  run->add_option("--condition", run_condition_name)->capture_default_str();
  run->add_option("--model", run_cfg.model_ids)->capture_default_str();
  run->add_option("--k", run_cfg.k)->capture_default_str();
  run->add_option("--seed", run_cfg.seed)->capture_default_str();
  run->add_option("--per-author", run_per_author);
  run->add_option("--provider", run_provider)->capture_default_str();
  run->add_option("--summarizer", run_summarizer, "first-sentence or http")->capture_default_str();
  run->add_option("--concurrency", run_cfg.concurrency)->capture_default_str();
  add_split_options(run, run_cfg.split);
  add_endpoint_options(run, run_endpoint, "");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const auto corpus = generate_synthetic_corpus(synth_cfg);
      write_jsonl(corpus, synth_out);
      print_corpus_stats(corpus);
    } else if (*ingest) {
      IngestOptions opts{exclude};
      std::vector<WritingSample> all;
      for (const auto& path : ingest_inputs) {
        const auto c = ingest_jsonl(path, opts);
        all.insert(all.end(), c.samples().begin(), c.samples().end());
      }
      const Corpus merged(std::move(all));
      print_corpus_stats(merged);
      if (!ingest_out.empty()) write_jsonl(merged, ingest_out);
    } else if (*split_cmd) {
      const auto result = prepare_split(ingest_jsonl(split_corpus), split_cfg);
      const fs::path dir = split_out;
      fs::create_directories(dir);
      write_jsonl(result.train, dir / "train.jsonl");
      write_jsonl(result.test, dir / "test.jsonl");
      write_file(dir / "split_manifest.jsonl", split_manifest_jsonl(result));
      std::printf("train: ");
      print_corpus_stats(result.train);
      std::printf("test: ");
      print_corpus_stats(result.test);
    } else if (*summarize) {
      const auto test = ingest_jsonl(sum_test);
      auto provider = make_provider(sum_provider, sum_endpoint, "", nullptr);
      auto cache = sum_cache.empty() ? GenerationCache() : GenerationCache(sum_cache);
      const auto summaries = summarize_testset(test, *provider, cache, sum_model, sum_concurrency);
      write_file(sum_out, summaries_to_jsonl(summaries));
      std::printf("%zu summaries\n", summaries.size());
    } else if (*generate) {
      const auto train = ingest_jsonl(gen_train);
      Corpus test = ingest_jsonl(gen_test);
      const auto summaries = summaries_from_jsonl(read_file(gen_summaries));
      gen_cfg.condition = parse_condition(gen_condition);
      gen_cfg.max_tokens = gen_max_tokens;
      const CorpusSplit split{train, test};
      std::map<std::string, ClusterModel> clusters;
      if (gen_cfg.condition == Condition::kSimCtrl) clusters = fit_author_clusters(split, gen_cfg.seed);
      if (gen_per_author) {
        test = subsample_testset(split, *gen_per_author, gen_cfg.seed, gen_cfg.condition == Condition::kSimCtrl);
        if (!gen_subset_out.empty()) write_jsonl(test, gen_subset_out);
      }
      auto provider = make_provider(gen_provider, gen_endpoint, gen_fixed, &train);
      auto cache = gen_cache.empty() ? GenerationCache() : GenerationCache(gen_cache);
      const GenerationInputs inputs{&train, &test, &summaries, &clusters};
      const auto records = run_condition(inputs, gen_cfg, *provider, cache);
      write_file(gen_out, records_to_jsonl(records));
      std::printf("%zu generations\n", records.size());
    } else if (*evaluate) {
      const auto train = ingest_jsonl(ev_train);
      const auto test = ingest_jsonl(ev_test);
      std::vector<GenerationRecord> records;
      std::vector<std::string> generation_digests;
      for (const auto& path : ev_generations) {
        const auto content = read_file(path);
        generation_digests.push_back(sha256_hex(content));
        for (auto& r : records_from_jsonl(content)) records.push_back(std::move(r));
      }
      EvaluatorConfig ec;
      ec.seed = ev_seed;
      ec.av_distance = parse_distance_kind(ev_distance);
      const auto evaluators = fit_evaluators(train, ec);
      auto detector = make_detector(det);
      std::unique_ptr<HttpEmbedder> embedder;
      if (!embed_endpoint.url.empty()) {
        embedder = std::make_unique<HttpEmbedder>(embed_endpoint.endpoint(), embed_endpoint.retry(),
                                                  make_http_transport());
      }
      const EvaluationServices services{detector.get(), embedder.get()};
      EvaluationReport report;
      report.cells.push_back(
          evaluate_human_baseline(test, evaluators, ev_dataset, services, ec.av_calibration_pairs, ev_seed));
      for (auto& c : evaluate_generations(records, test, evaluators, ev_dataset, services)) {
        report.cells.push_back(std::move(c));
      }
      const nlohmann::json manifest = {{"dataset", ev_dataset},
                                       {"seed", ev_seed},
                                       {"av_distance", ev_distance},
                                       {"av_threshold", evaluators.av.threshold},
                                       {"feature_schema", evaluators.schema.id()},
                                       {"train_digest", sha256_hex(read_file(ev_train))},
                                       {"test_digest", sha256_hex(read_file(ev_test))},
                                       {"generations_digests", generation_digests}};
      report.manifest_digest = sha256_hex(manifest.dump(2));
      const fs::path dir = ev_out;
      fs::create_directories(dir);
      write_file(dir / "manifest.json", manifest.dump(2));
      write_file(dir / "report.json", report_to_json(report));
      emit_report(report, dir);
      std::cout << summary_table(report);
    } else if (*compare) {
      auto a = report_from_json(read_file(cmp_a));
      const auto b = report_from_json(read_file(cmp_b));
      a.comparisons = compare_conditions(a, b);
      a.manifest_digest = sha256_hex(a.manifest_digest + b.manifest_digest);
      for (const auto& c : b.cells) {
        if (c.condition != kHumanBaseline) a.cells.push_back(c);
      }
      if (!cmp_out.empty()) {
        fs::create_directories(cmp_out);
        write_file(fs::path(cmp_out) / "report.json", report_to_json(a));
        emit_report(a, cmp_out);
      }
      std::cout << comparisons_csv(a);
    } else if (*report_cmd) {
      const auto report = report_from_json(read_file(rep_in));
      emit_report(report, rep_out);
      std::cout << summary_table(report);
    } else if (*run) {
      const auto corpus = ingest_jsonl(run_corpus);
      run_cfg.condition = parse_condition(run_condition_name);
      run_cfg.test_per_author = run_per_author;
      const auto split = prepare_split(corpus, run_cfg.split);
      auto generator = make_provider(run_provider, run_endpoint, "This is a fixed reply.", &split.train);
      auto summarizer = make_provider(run_summarizer, run_endpoint, "", nullptr);
      GenerationCache cache(fs::path(run_out) / "cache.jsonl");
      const PipelineServices services{generator.get(), summarizer.get(), &cache, {}};
      EvaluatorConfig ec;
      ec.seed = run_cfg.seed;
      const auto result = run_pipeline(corpus, run_cfg, services, ec, run_out);
      std::cout << summary_table(result.report);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
