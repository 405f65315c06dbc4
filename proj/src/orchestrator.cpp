#include "stylemimic/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "stylemimic/digest.hpp"
#include "stylemimic/error.hpp"
#include "stylemimic/promptgen.hpp"
#include "stylemimic/rng.hpp"
#include "stylemimic/text.hpp"

namespace stylemimic {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

std::string_view to_string(Condition condition) {
  switch (condition) {
    case Condition::kFewshot:
      return "fewshot";
    case Condition::kZeroshot:
      return "zeroshot";
    case Condition::kLenCtrl:
      return "len_ctrl";
    case Condition::kSimCtrl:
      return "sim_ctrl";
    case Condition::kSnippet:
      return "snippet";
    case Condition::kQuantity:
      return "quantity";
  }
  return "unknown";
}

Condition parse_condition(std::string_view name) {
  for (auto c : {Condition::kFewshot, Condition::kZeroshot, Condition::kLenCtrl, Condition::kSimCtrl,
                 Condition::kSnippet, Condition::kQuantity}) {
    if (to_string(c) == name) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown condition: " + std::string(name));
}

std::string condition_tag(Condition condition, std::size_t k) {
  if (condition == Condition::kZeroshot) return "zeroshot";
  return std::string(to_string(condition)) + "_" + std::to_string(k);
}

void parallel_for(std::size_t n, std::size_t bound, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(bound, n));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Summaries

std::map<std::string, std::string> summarize_testset(const Corpus& test, ChatProvider& provider,
                                                     GenerationCache& cache, const std::string& model_id,
                                                     std::size_t concurrency) {
  const auto& samples = test.samples();
  std::vector<std::string> summaries(samples.size());
  parallel_for(samples.size(), concurrency, [&](std::size_t i) {
    const auto& s = samples[i];
    GenerationRequest request;
    request.model_id = model_id;
    request.prompt = render_summarize(s.text);
    request.max_tokens = 256;
    request.condition = "summarize";
    request.reference_id = s.id;
    request.reference_text = s.text;
    try {
      summaries[i] = cached_complete(request, provider, cache).response_text;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kEmptyCompletion) throw Error(ErrorCode::kEmptyCompletion, "summary of " + s.id);
      throw;
    }
  });
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < samples.size(); ++i) out.emplace(samples[i].id, std::move(summaries[i]));
  return out;
}

std::string summaries_to_jsonl(const std::map<std::string, std::string>& summaries) {
  std::string out;
  for (const auto& [id, summary] : summaries) {
    out += json{{"id", id}, {"summary", summary}}.dump();
    out += '\n';
  }
  return out;
}

std::map<std::string, std::string> summaries_from_jsonl(std::string_view content) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const auto line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (is_blank(line)) continue;
    try {
      const auto j = json::parse(line);
      out[j.at("id").get<std::string>()] = j.at("summary").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Test subsets and clusters

std::map<std::string, ClusterModel> fit_author_clusters(const CorpusSplit& split, std::uint64_t seed) {
  std::map<std::string, ClusterModel> out;
  const auto& stopwords = default_function_words();
  for (const auto& author : split.train.authors()) {
    auto refs = split.train.samples_of(author);
    const auto test_refs = split.test.samples_of(author);
    refs.insert(refs.end(), test_refs.begin(), test_refs.end());
    out.emplace(author, fit_topic_clusters(refs, default_num_clusters(refs.size()), mix_seed(seed, "cluster:" + author),
                                           stopwords));
  }
  return out;
}

Corpus subsample_testset(const CorpusSplit& split, std::size_t per_author, std::uint64_t seed,
                         bool require_cluster_support) {
  if (per_author == 0) throw Error(ErrorCode::kInvalidArgument, "per_author must be >= 1");
  std::map<std::string, ClusterModel> clusters;
  if (require_cluster_support) clusters = fit_author_clusters(split, seed);

  std::set<std::string> chosen;
  for (const auto& author : split.test.authors()) {
    auto eligible = split.test.samples_of(author);
    if (require_cluster_support) {
      const auto train = split.train.samples_of(author);
      const auto& model = clusters.at(author);
      std::erase_if(eligible, [&](const WritingSample* s) {
        return cluster_train_support(model, s->id, train) < kMinClusterSupport;
      });
    }
    if (eligible.size() < per_author) {
      throw Error(ErrorCode::kInsufficientEligibleSamples,
                  author + ": " + std::to_string(eligible.size()) + " eligible, need " + std::to_string(per_author));
    }
    const auto picked = select_random(eligible, per_author, mix_seed(seed, "subsample:" + author));
    chosen.insert(picked.sample_ids.begin(), picked.sample_ids.end());
  }
  std::vector<WritingSample> kept;
  for (const auto& s : split.test.samples()) {
    if (chosen.contains(s.id)) kept.push_back(s);
  }
  return Corpus(std::move(kept));
}

// ---------------------------------------------------------------------------
// Generation

namespace {

std::vector<std::string> texts_of(const Corpus& corpus, std::span<const std::string> ids) {
  std::vector<std::string> out;
  for (const auto& id : ids) out.push_back(corpus.at(id).text);
  return out;
}

}  // namespace

std::vector<GenerationRequest> build_requests(const GenerationInputs& inputs, const RunConfig& config) {
  if (inputs.train == nullptr || inputs.test == nullptr || inputs.summaries == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "generation inputs are incomplete");
  }
  if (config.model_ids.empty()) throw Error(ErrorCode::kInvalidArgument, "no model ids configured");
  if (config.condition == Condition::kSimCtrl && inputs.clusters == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "sim_ctrl needs cluster models");
  }
  const Corpus& train = *inputs.train;

  std::vector<GenerationRequest> requests;
  for (const auto& target : inputs.test->samples()) {
    const auto summary_it = inputs.summaries->find(target.id);
    if (summary_it == inputs.summaries->end()) throw Error(ErrorCode::kMissingReference, "summary for " + target.id);
    const auto refs = train.samples_of(target.author_id);
    const std::uint64_t seed = mix_seed(config.seed, "exemplar:" + target.id);
    const int num_words = target_num_words(target.word_count);
    const auto genre = genre_display_name(target.genre);

    // (exemplar ids, tag, snippet) per request for this target.
    struct Variant {
      std::vector<std::string> ids;
      std::string tag;
      std::string snippet;
    };
    std::vector<Variant> variants;
    switch (config.condition) {
      case Condition::kFewshot:
        variants.push_back({select_random(refs, config.k, seed, target.id).sample_ids,
                            condition_tag(config.condition, config.k), ""});
        break;
      case Condition::kZeroshot:
        variants.push_back({{}, condition_tag(config.condition, config.k), ""});
        break;
      case Condition::kLenCtrl:
        variants.push_back({select_length_closest(refs, target, config.k).sample_ids,
                            condition_tag(config.condition, config.k), ""});
        break;
      case Condition::kSimCtrl: {
        const auto it = inputs.clusters->find(target.author_id);
        if (it == inputs.clusters->end()) throw Error(ErrorCode::kMissingReference, "clusters for " + target.author_id);
        variants.push_back({select_same_cluster(it->second, target.id, refs, config.k, seed).sample_ids,
                            condition_tag(config.condition, config.k), ""});
        break;
      }
      case Condition::kSnippet:
        variants.push_back({select_random(refs, config.k, seed, target.id).sample_ids,
                            condition_tag(config.condition, config.k), extract_snippet(target.text)});
        break;
      case Condition::kQuantity:
        for (auto& set : nested_subsets(refs, config.quantity_sizes, seed, target.id)) {
          const auto size = set.sample_ids.size();
          variants.push_back({std::move(set.sample_ids), condition_tag(config.condition, size), ""});
        }
        break;
    }

    for (const auto& model : config.model_ids) {
      for (const auto& v : variants) {
        GenerationRequest request;
        request.model_id = model;
        const auto samples = texts_of(train, v.ids);
        switch (config.condition) {
          case Condition::kZeroshot:
            request.prompt = render_zeroshot(summary_it->second, genre, num_words);
            break;
          case Condition::kSnippet:
            request.prompt = render_snippet_prompt(samples, summary_it->second, genre, num_words, v.snippet);
            break;
          default:
            request.prompt = render_fewshot(samples, summary_it->second, genre, num_words);
            break;
        }
        request.temperature = config.temperature;
        request.max_tokens = config.max_tokens.value_or(2 * num_words);
        request.condition = v.tag;
        request.exemplar_ids = v.ids;
        request.summary_text = summary_it->second;
        request.reference_id = target.id;
        request.snippet = v.snippet;
        request.reference_text = target.text;
        requests.push_back(std::move(request));
      }
    }
  }
  return requests;
}

std::vector<GenerationRecord> run_condition(const GenerationInputs& inputs, const RunConfig& config,
                                            ChatProvider& provider, GenerationCache& cache) {
  const auto requests = build_requests(inputs, config);
  std::vector<GenerationRecord> records(requests.size());
  parallel_for(requests.size(), config.concurrency,
               [&](std::size_t i) { records[i] = cached_complete(requests[i], provider, cache); });
  return records;
}

std::string evaluation_text(const GenerationRecord& record) {
  const auto snippet = tokenize_words(record.snippet);
  std::string_view rest = record.response_text;
  if (!snippet.empty()) {
    for (;;) {
      std::size_t pos = 0;
      bool matched = true;
      for (const auto token : snippet) {
        while (pos < rest.size() && is_ascii_space(rest[pos])) ++pos;
        if (rest.substr(pos, token.size()) != token) {
          matched = false;
          break;
        }
        pos += token.size();
        if (pos < rest.size() && !is_ascii_space(rest[pos])) {
          matched = false;
          break;
        }
      }
      if (!matched) break;
      rest = rest.substr(pos);
    }
  }
  while (!rest.empty() && is_ascii_space(rest.front())) rest.remove_prefix(1);
  return std::string(rest);
}

// ---------------------------------------------------------------------------
// Evaluators

std::vector<double> scaled_features(const Evaluators& evaluators, std::string_view text) {
  const auto raw = extract_style_features(text, evaluators.schema);
  return apply_scaling(raw.values, evaluators.scaling);
}

namespace {

/// Largest pair count up to `wanted` whose 4:6 split the corpus can supply.
std::size_t feasible_pairs(const Corpus& corpus, std::size_t wanted) {
  std::size_t positives = 0;
  for (const auto& [author, ids] : corpus.author_index()) positives += ids.size() * (ids.size() - 1) / 2;
  const std::size_t n = corpus.size();
  const std::size_t negatives = n * (n - 1) / 2 - positives;
  for (std::size_t m = wanted; m > 0; --m) {
    const std::size_t pos = av_positive_count(m);
    if (pos <= positives && m - pos <= negatives) return m;
  }
  return 0;
}

}  // namespace

Evaluators fit_evaluators(const Corpus& train, const EvaluatorConfig& config) {
  if (train.empty()) throw Error(ErrorCode::kEmptyCorpus, "no train samples");
  FeatureSchema schema = default_style_schema();
  std::set<std::string> provenance;

  std::map<std::string, std::vector<double>> raw;
  std::vector<std::vector<double>> rows;
  for (const auto& s : train.samples()) {
    auto v = extract_style_features(s.text, schema, s.id).values;
    rows.push_back(v);
    raw.emplace(s.id, std::move(v));
    provenance.insert(s.id);
  }
  ScalingParams scaling = fit_scaling(rows);

  std::map<std::string, std::vector<double>> scaled;
  std::map<std::string, std::vector<std::vector<double>>> by_author;
  std::vector<LabeledVector> labeled;
  for (const auto& s : train.samples()) {
    auto v = apply_scaling(raw.at(s.id), scaling);
    by_author[s.author_id].push_back(v);
    labeled.push_back({s.author_id, v});
    scaled.emplace(s.id, std::move(v));
  }
  StyleGallery gallery = fit_gallery(by_author, schema.id(), scaling, config.shrinkage, config.ridge);

  std::vector<AAModel> aa_models;
  aa_models.emplace_back(train_logistic_aa(labeled, config.logistic));
  aa_models.emplace_back(train_delta_aa(train, config.delta_words));

  const auto pairs =
      build_av_pairs(train, feasible_pairs(train, config.av_calibration_pairs), mix_seed(config.seed, "av-calibration"));
  std::vector<AVExample> examples;
  for (const auto& p : pairs) examples.push_back({scaled.at(p.id_a), scaled.at(p.id_b), p.label});
  AVModel av = calibrate_av(config.av_distance, examples);

  return Evaluators{std::move(schema), std::move(scaling), std::move(gallery), std::move(aa_models), av,
                    std::move(provenance)};
}

void check_hygiene(const Evaluators& evaluators, const Corpus& test) {
  for (const auto& s : test.samples()) {
    if (evaluators.provenance.contains(s.id)) throw Error(ErrorCode::kTrainTestLeak, s.id);
  }
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

struct Scored {
  std::string author_id;
  std::string text;
  std::vector<double> scaled;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Metrics that depend only on the scored texts.
void fill_text_metrics(ReportCell& cell, const std::vector<Scored>& items, const Evaluators& ev,
                       const EvaluationServices& services) {
  std::vector<LabeledInput> inputs;
  std::vector<LabeledVector> labeled;
  std::map<std::string, std::vector<std::vector<double>>> by_author;
  std::vector<std::string> texts;
  for (const auto& it : items) {
    inputs.push_back({it.author_id, it.text, it.scaled});
    labeled.push_back({it.author_id, it.scaled});
    by_author[it.author_id].push_back(it.scaled);
    texts.push_back(it.text);
  }
  cell.n_records = items.size();
  cell.aa_top5_accuracy = topk_accuracy(ev.aa_models, inputs, 5);
  cell.style_match_accuracy = style_match_accuracy(ev.gallery, labeled);
  for (const auto& [author, vectors] : by_author) {
    cell.author_distances[author] = avg_distance_to_author(ev.gallery, author, vectors);
  }
  OfflineStubDetector stub;
  Detector& detector = services.detector != nullptr ? *services.detector : stub;
  cell.percent_human = percent_human(texts, detector);
}

}  // namespace

std::vector<ReportCell> evaluate_generations(std::span<const GenerationRecord> records, const Corpus& test,
                                             const Evaluators& evaluators, const std::string& dataset,
                                             const EvaluationServices& services) {
  check_hygiene(evaluators, test);

  std::map<std::pair<std::string, std::string>, std::vector<const GenerationRecord*>> groups;
  for (const auto& r : records) groups[{r.model_id, r.condition}].push_back(&r);

  std::map<std::string, std::vector<double>> reference_vectors;
  auto reference_scaled = [&](const WritingSample& ref) -> const std::vector<double>& {
    auto it = reference_vectors.find(ref.id);
    if (it == reference_vectors.end()) it = reference_vectors.emplace(ref.id, scaled_features(evaluators, ref.text)).first;
    return it->second;
  };

  std::vector<ReportCell> cells;
  for (auto& [key, group] : groups) {
    std::sort(group.begin(), group.end(), [](const GenerationRecord* a, const GenerationRecord* b) {
      return std::tie(a->reference_id, a->request_digest, a->response_text) <
             std::tie(b->reference_id, b->request_digest, b->response_text);
    });
    ReportCell cell;
    cell.dataset = dataset;
    cell.model_id = key.first;
    cell.condition = key.second;

    std::vector<Scored> items;
    std::vector<AVExample> av_examples;
    std::vector<double> rouge;
    std::vector<double> meteor;
    std::vector<double> embed;
    for (const auto* r : group) {
      const WritingSample& ref = test.at(r->reference_id);
      std::string text = evaluation_text(*r);
      if (is_blank(text)) throw Error(ErrorCode::kEmptyText, "nothing to evaluate for " + r->reference_id);
      auto scaled = scaled_features(evaluators, text);
      av_examples.push_back({scaled, reference_scaled(ref), AVLabel::kSame});
      const auto sim = similarity_scores(ref.text, text);
      rouge.push_back(sim.rouge_l);
      meteor.push_back(sim.meteor);
      if (services.embedder != nullptr) embed.push_back(embedding_similarity(ref.text, text, *services.embedder));
      items.push_back({ref.author_id, std::move(text), std::move(scaled)});
    }
    fill_text_metrics(cell, items, evaluators, services);
    cell.av_accuracy = av_accuracy(evaluators.av, av_examples);
    cell.rouge_l = mean_of(rouge);
    cell.meteor = mean_of(meteor);
    if (services.embedder != nullptr) cell.embedding_cos = mean_of(embed);
    cells.push_back(std::move(cell));
  }
  return cells;
}

ReportCell evaluate_human_baseline(const Corpus& test, const Evaluators& evaluators, const std::string& dataset,
                                   const EvaluationServices& services, std::size_t av_pairs, std::uint64_t seed) {
  check_hygiene(evaluators, test);
  ReportCell cell;
  cell.dataset = dataset;
  cell.model_id = std::string(kHumanBaseline);
  cell.condition = std::string(kHumanBaseline);

  std::vector<Scored> items;
  std::map<std::string, const std::vector<double>*> by_id;
  for (const auto& s : test.samples()) items.push_back({s.author_id, s.text, scaled_features(evaluators, s.text)});
  for (std::size_t i = 0; i < items.size(); ++i) by_id[test.samples()[i].id] = &items[i].scaled;
  fill_text_metrics(cell, items, evaluators, services);

  const std::size_t n_pairs = feasible_pairs(test, av_pairs);
  if (n_pairs > 0) {
    std::vector<AVExample> examples;
    for (const auto& p : build_av_pairs(test, n_pairs, mix_seed(seed, "av-test"))) {
      examples.push_back({*by_id.at(p.id_a), *by_id.at(p.id_b), p.label});
    }
    cell.av_accuracy = av_accuracy(evaluators.av, examples);
  }
  cell.rouge_l = 1.0;
  cell.meteor = 1.0;
  if (services.embedder != nullptr) cell.embedding_cos = 1.0;
  return cell;
}

// ---------------------------------------------------------------------------
// Comparisons

std::vector<Comparison> compare_conditions(const EvaluationReport& a, const EvaluationReport& b) {
  std::vector<Comparison> out;
  for (const auto& ca : a.cells) {
    if (ca.condition == kHumanBaseline) continue;
    for (const auto& cb : b.cells) {
      if (cb.condition == kHumanBaseline || cb.dataset != ca.dataset || cb.model_id != ca.model_id) continue;
      std::vector<double> x;
      std::vector<double> y;
      for (const auto& [author, d] : ca.author_distances) {
        const auto it = cb.author_distances.find(author);
        if (it == cb.author_distances.end()) throw Error(ErrorCode::kAuthorSetMismatch, author + " missing");
        x.push_back(d);
        y.push_back(it->second);
      }
      if (ca.author_distances.size() != cb.author_distances.size()) {
        throw Error(ErrorCode::kAuthorSetMismatch, "author sets differ for " + ca.dataset + "/" + ca.model_id);
      }
      Comparison cmp{ca.dataset, ca.model_id, ca.condition, cb.condition, std::nullopt, ""};
      try {
        cmp.test = wilcoxon_signed_rank(x, y);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateInput) throw;
        cmp.note = "no difference";
      }
      out.push_back(std::move(cmp));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report serialization

std::string report_to_json(const EvaluationReport& report) {
  json j;
  j["manifest_digest"] = report.manifest_digest;
  j["cells"] = json::array();
  for (const auto& c : report.cells) {
    json cell = {{"dataset", c.dataset},
                 {"model_id", c.model_id},
                 {"condition", c.condition},
                 {"n_records", c.n_records},
                 {"av_accuracy", c.av_accuracy},
                 {"aa_top5_accuracy", c.aa_top5_accuracy},
                 {"style_match_accuracy", c.style_match_accuracy},
                 {"percent_human", c.percent_human},
                 {"meteor", c.meteor},
                 {"rouge_l", c.rouge_l},
                 {"author_distances", c.author_distances}};
    if (c.embedding_cos) cell["embedding_cos"] = *c.embedding_cos;
    j["cells"].push_back(std::move(cell));
  }
  j["comparisons"] = json::array();
  for (const auto& c : report.comparisons) {
    json cmp = {{"dataset", c.dataset},
                {"model_id", c.model_id},
                {"condition_a", c.condition_a},
                {"condition_b", c.condition_b},
                {"note", c.note}};
    if (c.test) {
      cmp["w_statistic"] = c.test->w_statistic;
      cmp["n_effective"] = c.test->n_effective;
      cmp["p_value"] = c.test->p_value;
      cmp["method"] = std::string(to_string(c.test->method));
    }
    j["comparisons"].push_back(std::move(cmp));
  }
  return j.dump(2);
}

EvaluationReport report_from_json(std::string_view document) {
  try {
    const auto j = json::parse(document);
    EvaluationReport report;
    report.manifest_digest = j.at("manifest_digest").get<std::string>();
    for (const auto& c : j.at("cells")) {
      ReportCell cell;
      cell.dataset = c.at("dataset").get<std::string>();
      cell.model_id = c.at("model_id").get<std::string>();
      cell.condition = c.at("condition").get<std::string>();
      cell.n_records = c.at("n_records").get<std::size_t>();
      cell.av_accuracy = c.at("av_accuracy").get<double>();
      cell.aa_top5_accuracy = c.at("aa_top5_accuracy").get<double>();
      cell.style_match_accuracy = c.at("style_match_accuracy").get<double>();
      cell.percent_human = c.at("percent_human").get<double>();
      cell.meteor = c.at("meteor").get<double>();
      cell.rouge_l = c.at("rouge_l").get<double>();
      cell.author_distances = c.at("author_distances").get<std::map<std::string, double>>();
      if (c.contains("embedding_cos")) cell.embedding_cos = c.at("embedding_cos").get<double>();
      report.cells.push_back(std::move(cell));
    }
    for (const auto& c : j.value("comparisons", json::array())) {
      Comparison cmp;
      cmp.dataset = c.at("dataset").get<std::string>();
      cmp.model_id = c.at("model_id").get<std::string>();
      cmp.condition_a = c.at("condition_a").get<std::string>();
      cmp.condition_b = c.at("condition_b").get<std::string>();
      cmp.note = c.value("note", "");
      if (c.contains("p_value")) {
        StatTestResult t;
        t.w_statistic = c.at("w_statistic").get<double>();
        t.n_effective = c.at("n_effective").get<std::size_t>();
        t.p_value = c.at("p_value").get<double>();
        t.method = c.at("method").get<std::string>() == "exact" ? StatTestResult::Method::kExact
                                                                 : StatTestResult::Method::kNormal;
        cmp.test = t;
      }
      report.comparisons.push_back(std::move(cmp));
    }
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedLine, std::string("report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// End to end

std::string run_manifest(const RunConfig& config, const CorpusSplit& split, const Corpus& test_subset,
                         std::span<const GenerationRecord> records, const std::string& schema_id) {
  json j;
  j["dataset"] = config.dataset;
  j["condition"] = std::string(to_string(config.condition));
  j["k"] = config.k;
  j["quantity_sizes"] = config.quantity_sizes;
  j["model_ids"] = config.model_ids;
  j["summarizer_model"] = config.summarizer_model;
  j["seed"] = config.seed;
  j["temperature"] = config.temperature;
  j["max_tokens"] = config.max_tokens ? json(*config.max_tokens) : json("2*num_words");
  j["test_per_author"] = config.test_per_author ? json(*config.test_per_author) : json(nullptr);
  j["split"] = {{"min_words", config.split.min_words},
                {"max_words", config.split.max_words},
                {"top_n_authors", config.split.top_n_authors},
                {"train_fraction", config.split.train_fraction},
                {"stratify_key", config.split.stratify_key ? json(*config.split.stratify_key) : json(nullptr)},
                {"seed", config.split.seed}};
  json templates = json::object();
  for (auto t : {TemplateName::kSummarize, TemplateName::kFewshot, TemplateName::kZeroshot, TemplateName::kSnippet}) {
    templates[std::string(to_string(t))] = std::string(expected_template_digest(t));
  }
  j["template_digests"] = templates;
  j["feature_schema"] = schema_id;
  j["split_digest"] = sha256_hex(split_manifest_jsonl(split));
  std::vector<std::string> test_ids;
  for (const auto& s : test_subset.samples()) test_ids.push_back(s.id);
  j["test_ids"] = test_ids;
  json recs = json::array();
  for (const auto& r : records) {
    recs.push_back({{"request_digest", r.request_digest}, {"response_digest", sha256_hex(r.response_text)}});
  }
  j["records"] = recs;
  return j.dump(2);
}

namespace {

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace

PipelineResult run_pipeline(const Corpus& corpus, const RunConfig& config, const PipelineServices& services,
                            const EvaluatorConfig& evaluator_config, const std::filesystem::path& out_dir) {
  if (services.generator == nullptr || services.summarizer == nullptr || services.cache == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "pipeline services are incomplete");
  }
  CorpusSplit split = prepare_split(corpus, config.split);

  std::map<std::string, ClusterModel> clusters;
  if (config.condition == Condition::kSimCtrl) clusters = fit_author_clusters(split, config.seed);
  Corpus test_subset = config.test_per_author
                           ? subsample_testset(split, *config.test_per_author, config.seed,
                                               config.condition == Condition::kSimCtrl)
                           : split.test;

  auto summaries = summarize_testset(test_subset, *services.summarizer, *services.cache, config.summarizer_model,
                                     config.concurrency);
  const GenerationInputs inputs{&split.train, &test_subset, &summaries, &clusters};
  auto records = run_condition(inputs, config, *services.generator, *services.cache);

  Evaluators evaluators = fit_evaluators(split.train, evaluator_config);
  EvaluationReport report;
  report.cells.push_back(evaluate_human_baseline(test_subset, evaluators, config.dataset, services.evaluation,
                                                  evaluator_config.av_calibration_pairs, config.seed));
  for (auto& cell : evaluate_generations(records, test_subset, evaluators, config.dataset, services.evaluation)) {
    report.cells.push_back(std::move(cell));
  }
  const std::string manifest = run_manifest(config, split, test_subset, records, evaluators.schema.id());
  report.manifest_digest = sha256_hex(manifest);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "split_manifest.jsonl", split_manifest_jsonl(split));
    write_file(out_dir / "summaries.jsonl", summaries_to_jsonl(summaries));
    write_file(out_dir / "generations.jsonl", records_to_jsonl(records));
    write_file(out_dir / "manifest.json", manifest);
    write_file(out_dir / "report.json", report_to_json(report));
    write_file(out_dir / "gallery.jsonl", gallery_to_jsonl(evaluators.gallery));
    write_file(out_dir / "scaling.json", scaling_to_json(evaluators.scaling));
    emit_report(report, out_dir);
  }
  return PipelineResult{std::move(split), std::move(test_subset), std::move(summaries), std::move(records),
                        std::move(report), std::move(evaluators)};
}

}  // namespace stylemimic
