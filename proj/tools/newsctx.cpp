// Copyright 2026 The newsctx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// newsctx: context selection and evaluation for news image captioning.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 sidecar error.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "newsctx/newsctx.hpp"

namespace {

using namespace newsctx;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSidecar = 3;

struct SidecarOptions {
  std::string url;
  std::string cache_dir = ".newsctx-cache";
  std::string model_revision;

  std::unique_ptr<SidecarClient> MakeClient() const {
    if (url.empty()) return nullptr;
    SidecarConfig cfg;
    cfg.url = url;
    cfg.cache_dir = cache_dir;
    if (!model_revision.empty()) cfg.model_revision = model_revision;
    return std::make_unique<SidecarClient>(std::move(cfg));
  }
};

void AddSidecarOptions(CLI::App* cmd, SidecarOptions& opts) {
  cmd->add_option("--sidecar-url", opts.url, "Model sidecar base URL")
      ->envname("NEWSCTX_SIDECAR_URL");
  cmd->add_option("--cache-dir", opts.cache_dir, "Sidecar response cache directory")
      ->envname("NEWSCTX_CACHE_DIR");
  cmd->add_option("--model-revision", opts.model_revision,
                  "Pin the sidecar model revision used in cache keys");
}

// Writes to a file, or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw DataError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

struct DocError {
  std::string doc_id;
  int exit_code = kExitData;
  std::string message;
};

OrderedJson ErrorToJson(const DocError& e) {
  OrderedJson j;
  j["schema_version"] = kSchemaVersion;
  j["doc_id"] = e.doc_id;
  j["kind"] = e.exit_code == kExitSidecar ? "sidecar" : "data";
  j["message"] = e.message;
  return j;
}

// Runs fn(i) for i in [0, n) on `jobs` threads.
template <typename Fn>
void ParallelFor(std::size_t n, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (unsigned t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

// ---------------------------------------------------------------- select

struct SelectOptions {
  std::string dataset;
  std::string strategy = "auto";
  std::string granularity = "sentence";
  std::size_t first_words_limit = kDefaultFirstWordsLimit;
  std::size_t around_image_limit = kDefaultAroundImageLimit;
  std::size_t cap = kDefaultCap;
  std::size_t k_top = kDefaultTopSentences;
  double threshold = kDefaultRelationThreshold;
  std::size_t k = kDefaultClipTopK;
  std::string annotations;
  std::string embeddings;
  std::string relations;
  std::string output = "-";
  std::string errors;
  bool skip_errors = false;
  unsigned jobs = 1;
  SidecarOptions sidecar;
};

SelectionStrategy ParseStrategy(const SelectOptions& o) {
  Granularity g = o.granularity == "paragraph" ? Granularity::kParagraph
                                               : Granularity::kSentence;
  if (o.strategy == "original-first-words") {
    return strategy::OriginalFirstWords{o.first_words_limit};
  }
  if (o.strategy == "original-around-image") {
    return strategy::OriginalAroundImage{o.around_image_limit};
  }
  if (o.strategy == "oracle-local") return strategy::OracleLocal{g};
  if (o.strategy == "oracle-local-global") return strategy::OracleLocalPlusGlobal{g};
  if (o.strategy == "auto") return strategy::AutoLocalPlusGlobal{};
  if (o.strategy == "clip-topk") return strategy::ClipTopK{o.k};
  throw UsageError("unknown strategy '" + o.strategy + "'");
}

int RunSelect(const SelectOptions& o) {
  SelectionStrategy strat = ParseStrategy(o);
  ValidateStrategy(strat);
  AutoParams params{o.cap, o.k_top, o.threshold};
  ValidateAutoParams(params);

  auto docs = LoadDataset(o.dataset);
  std::optional<AnnotationIndex> annotations;
  if (!o.annotations.empty()) annotations = LoadAnnotations(o.annotations);
  std::unique_ptr<EmbeddingFileProvider> file_similarity;
  if (!o.embeddings.empty()) {
    file_similarity = std::make_unique<EmbeddingFileProvider>(
        EmbeddingFileProvider::FromPath(o.embeddings));
  }
  std::optional<RelationIndex> relations;
  if (!o.relations.empty()) relations = LoadRelations(o.relations);
  auto client = o.sidecar.MakeClient();
  std::unique_ptr<SidecarSimilarityProvider> sidecar_similarity;
  if (client) sidecar_similarity = std::make_unique<SidecarSimilarityProvider>(*client);

  const bool wants_annotations =
      std::holds_alternative<strategy::OracleLocal>(strat) ||
      std::holds_alternative<strategy::OracleLocalPlusGlobal>(strat) ||
      std::holds_alternative<strategy::AutoLocalPlusGlobal>(strat);
  const bool wants_relations = std::holds_alternative<strategy::AutoLocalPlusGlobal>(strat);

  std::vector<std::optional<std::string>> lines(docs.size());
  std::vector<std::optional<DocError>> errors(docs.size());

  ParallelFor(docs.size(), o.jobs, [&](std::size_t i) {
    const NewsDocument& doc = docs[i];
    try {
      SegmentedDocument seg = SegmentSentences(doc);
      SelectionInputs inputs;
      std::optional<DocumentAnnotations> fetched_ann;
      std::optional<std::vector<RelationTriple>> fetched_rel;
      if (wants_annotations) {
        if (annotations) {
          if (auto it = annotations->find(doc.doc_id); it != annotations->end()) {
            ValidateAnnotations(it->second, seg);
            inputs.annotations = &it->second;
          }
        }
        if (!inputs.annotations && client) {
          fetched_ann = AnnotateWithSidecar(*client, seg);
          inputs.annotations = &*fetched_ann;
        }
      }
      if (file_similarity) {
        inputs.similarity = file_similarity.get();
      } else if (sidecar_similarity) {
        inputs.similarity = sidecar_similarity.get();
      }
      if (wants_relations) {
        if (relations) {
          if (auto it = relations->find(doc.doc_id); it != relations->end()) {
            inputs.relations = &it->second;
          }
        }
        if (!inputs.relations && client && inputs.annotations &&
            inputs.annotations->sentence_entities) {
          fetched_rel =
              RelationsWithSidecar(*client, seg, *inputs.annotations->sentence_entities);
          inputs.relations = &*fetched_rel;
        }
      }
      ContextSelection sel = SelectContext(strat, seg, inputs, params);
      lines[i] = SelectionToJson(sel).dump();
    } catch (const SidecarError& e) {
      errors[i] = DocError{doc.doc_id, kExitSidecar, e.what()};
    } catch (const DataError& e) {
      errors[i] = DocError{doc.doc_id, kExitData, e.what()};
    }
  });

  Output out(o.output);
  for (const auto& l : lines) {
    if (l) out.stream() << *l << '\n';
  }
  int code = kExitOk;
  std::ofstream error_file;
  if (!o.errors.empty()) error_file.open(o.errors, std::ios::trunc);
  std::ostream& err = error_file.is_open() ? error_file : std::cerr;
  for (const auto& e : errors) {
    if (!e) continue;
    err << ErrorToJson(*e).dump() << '\n';
    code = std::max(code, e->exit_code);
  }
  return o.skip_errors ? kExitOk : code;
}

// -------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string predictions;
  std::string dataset;
  std::string annotations;
  std::string pred_annotations;
  std::string output = "eval_report.json";
  std::string ne_average = "micro";
  bool ne_ignore_case = false;
  SidecarOptions sidecar;
};

int RunEvaluate(const EvaluateOptions& o) {
  auto docs = LoadDataset(o.dataset);
  std::map<std::string, const NewsDocument*> by_id;
  for (const auto& d : docs) by_id[d.doc_id] = &d;
  auto ref_ann = LoadAnnotations(o.annotations);
  std::optional<AnnotationIndex> pred_ann;
  if (!o.pred_annotations.empty()) pred_ann = LoadAnnotations(o.pred_annotations);
  auto client = o.sidecar.MakeClient();
  if (!pred_ann && !client) {
    throw UsageError("entities of predicted captions need --pred-annotations or --sidecar-url");
  }

  std::vector<EvalExample> examples;
  std::set<std::string> seen;
  ForEachJsonLine(o.predictions, [&](std::size_t line, const Json& obj) {
    EvalExample ex;
    ex.doc_id = RequireField<std::string>(obj, "doc_id", line);
    ex.candidate = RequireField<std::string>(obj, "caption", line);
    if (!seen.insert(ex.doc_id).second) {
      throw DataError(o.predictions + ": " + LineTag(line) + ": duplicate doc_id '" +
                      ex.doc_id + "'");
    }
    auto doc = by_id.find(ex.doc_id);
    if (doc == by_id.end()) {
      throw DataError("prediction doc_id '" + ex.doc_id + "' not in dataset");
    }
    ex.reference = doc->second->caption;
    auto ref = ref_ann.find(ex.doc_id);
    if (ref == ref_ann.end()) {
      throw DataError("no reference annotations for doc_id '" + ex.doc_id + "'");
    }
    ex.reference_entities = SurfacesOf(ref->second.caption_entities);
    examples.push_back(std::move(ex));
  });
  if (examples.empty()) throw DataError(o.predictions + ": no predictions");

  if (pred_ann) {
    for (auto& ex : examples) {
      auto it = pred_ann->find(ex.doc_id);
      if (it == pred_ann->end()) {
        throw DataError("no prediction annotations for doc_id '" + ex.doc_id + "'");
      }
      ex.generated_entities = SurfacesOf(it->second.caption_entities);
    }
  } else {
    std::vector<std::string> texts;
    for (const auto& ex : examples) texts.push_back(ex.candidate);
    auto mentions = client->AnnotateNer(texts);
    for (std::size_t i = 0; i < examples.size(); ++i) {
      examples[i].generated_entities = SurfacesOf(mentions[i]);
    }
  }

  EvalOptions eval_options;
  if (o.ne_average == "macro") eval_options.entities.averaging = NeAveraging::kMacro;
  eval_options.entities.case_sensitive = !o.ne_ignore_case;
  EvalReport report = Evaluate(examples, eval_options);
  std::cout << ReportToTable(report);
  Output out(o.output);
  out.stream() << ReportToJson(report).dump(2) << '\n';
  return kExitOk;
}

// ----------------------------------------------------------------- stats

struct StatsOptions {
  std::string dataset;
  std::string annotations;
  std::optional<double> min_coverage;
  std::string subset_out = "high_coverage.jsonl";
  std::string output = "-";
};

int RunStats(const StatsOptions& o) {
  auto docs = LoadDataset(o.dataset);
  auto ann = LoadAnnotations(o.annotations);
  std::vector<SurfaceSet> caption;
  for (const auto& d : docs) {
    auto it = ann.find(d.doc_id);
    if (it == ann.end()) {
      throw DataError("no annotations for doc_id '" + d.doc_id + "'");
    }
    caption.push_back(SurfacesOf(it->second.caption_entities));
  }
  CoverageReport report = CoverageStats(docs, caption);

  Output out(o.output);
  for (const auto& e : report.entries) {
    OrderedJson j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "example";
    j["doc_id"] = e.doc_id;
    j["covered"] = e.covered;
    j["total"] = e.total;
    j["ratio"] = e.ratio ? OrderedJson(*e.ratio) : OrderedJson(nullptr);
    out.stream() << j.dump() << '\n';
  }
  OrderedJson summary;
  summary["schema_version"] = kSchemaVersion;
  summary["kind"] = "summary";
  summary["mean_coverage"] = report.mean;
  summary["counted"] = report.counted;
  summary["excluded_no_entities"] = report.excluded_no_entities;
  if (o.min_coverage) {
    if (!(*o.min_coverage >= 0.0 && *o.min_coverage <= 1.0)) {
      throw UsageError("--min-coverage must be in [0, 1]");
    }
    auto keep = FilterHighCoverage(report, *o.min_coverage);
    std::set<std::string> keep_ids(keep.begin(), keep.end());
    std::ofstream subset(o.subset_out, std::ios::binary | std::ios::trunc);
    if (!subset) throw DataError("cannot write " + o.subset_out);
    for (const auto& d : docs) {
      if (!keep_ids.contains(d.doc_id)) continue;
      OrderedJson j;
      j["schema_version"] = kSchemaVersion;
      Json doc = SerializeDocument(d);
      for (auto& [k, v] : doc.items()) j[k] = v;
      subset << j.dump() << '\n';
    }
    summary["min_coverage"] = *o.min_coverage;
    summary["subset_size"] = keep.size();
    summary["subset_path"] = o.subset_out;
  }
  out.stream() << summary.dump() << '\n';
  return kExitOk;
}

// -------------------------------------------------------- mine-negatives

struct MineOptions {
  std::string dataset;
  std::string stopwords;
  std::string output = "-";
};

int RunMine(const MineOptions& o) {
  auto docs = LoadDataset(o.dataset);
  StopwordSet stop = o.stopwords.empty() ? BuiltinStopwords() : LoadStopwords(o.stopwords);
  Output out(o.output);
  for (const auto& d : docs) {
    SegmentedDocument seg = SegmentSentences(d);
    std::vector<std::string> texts;
    for (const auto& s : seg.sentences) texts.push_back(s.text);
    OrderedJson j;
    j["schema_version"] = kSchemaVersion;
    j["doc_id"] = d.doc_id;
    j["caption"] = d.caption;
    j["positive"] = d.caption;
    OrderedJson negatives = OrderedJson::array();
    for (std::size_t i : MineHardNegatives(d.caption, texts, stop)) {
      negatives.push_back(texts[i]);
    }
    j["hard_negatives"] = std::move(negatives);
    out.stream() << j.dump() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------- ingest-check

struct CheckOptions {
  std::string dataset;
  std::string annotations;
  std::string embeddings;
  std::string relations;
};

int RunIngestCheck(const CheckOptions& o) {
  auto docs = LoadDataset(o.dataset);
  std::optional<AnnotationIndex> ann;
  if (!o.annotations.empty()) ann = LoadAnnotations(o.annotations);
  std::unique_ptr<EmbeddingFileProvider> emb;
  if (!o.embeddings.empty()) {
    emb = std::make_unique<EmbeddingFileProvider>(EmbeddingFileProvider::FromPath(o.embeddings));
  }
  std::optional<RelationIndex> rel;
  if (!o.relations.empty()) rel = LoadRelations(o.relations);

  std::size_t sentences = 0;
  std::size_t words = 0;
  std::vector<DocError> errors;
  for (const auto& d : docs) {
    SegmentedDocument seg = SegmentSentences(d);
    sentences += seg.sentences.size();
    for (auto w : seg.word_counts) words += w;
    try {
      if (ann) {
        auto it = ann->find(d.doc_id);
        if (it == ann->end()) throw DataError("missing annotations");
        ValidateAnnotations(it->second, seg);
      }
      if (emb) emb->Rank(seg);
      if (rel) {
        auto it = rel->find(d.doc_id);
        if (it == rel->end()) throw DataError("missing relations");
        for (const auto& t : it->second) {
          if (t.sentence_index >= seg.sentences.size()) {
            throw DataError("relation sentence_index " + std::to_string(t.sentence_index) +
                            " out of range");
          }
        }
      }
    } catch (const DataError& e) {
      errors.push_back({d.doc_id, kExitData, e.what()});
    }
  }
  OrderedJson j;
  j["schema_version"] = kSchemaVersion;
  j["documents"] = docs.size();
  j["sentences"] = sentences;
  j["words"] = words;
  OrderedJson errs = OrderedJson::array();
  for (const auto& e : errors) errs.push_back(ErrorToJson(e));
  j["errors"] = std::move(errs);
  std::cout << j.dump() << '\n';
  return errors.empty() ? kExitOk : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"newsctx: relevant context selection for news image captioning"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  SelectOptions sel;
  auto* select = app.add_subcommand("select", "Select article context per document");
  select->add_option("--dataset", sel.dataset, "Dataset JSONL")->required();
  select->add_option("--strategy", sel.strategy, "Selection strategy")
      ->check(CLI::IsMember({"original-first-words", "original-around-image", "oracle-local",
                             "oracle-local-global", "auto", "clip-topk"}));
  select->add_option("--granularity", sel.granularity, "Oracle unit granularity")
      ->check(CLI::IsMember({"sentence", "paragraph"}));
  select->add_option("--first-words-limit", sel.first_words_limit,
                     "Word limit of original-first-words");
  select->add_option("--around-image-limit", sel.around_image_limit,
                     "Word limit of original-around-image");
  select->add_option("--cap", sel.cap, "Word cap of assembled contexts");
  select->add_option("--k-top", sel.k_top, "Top-ranked sentences searched for visual entities");
  select->add_option("--threshold", sel.threshold, "Minimum relation confidence kept");
  select->add_option("--k", sel.k, "Sentences kept by clip-topk");
  select->add_option("--annotations", sel.annotations, "Annotation sidecar JSONL");
  select->add_option("--embeddings", sel.embeddings,
                     "Embedding sidecar (JSONL, or binary store with <path>.idx)");
  select->add_option("--relations", sel.relations, "Relation sidecar JSONL");
  select->add_option("--output", sel.output, "Output JSONL ('-' for stdout)");
  select->add_option("--errors", sel.errors, "Per-document error report JSONL (default stderr)");
  select->add_flag("--skip-errors", sel.skip_errors, "Exit 0 even if some documents fail");
  select->add_option("--jobs", sel.jobs, "Documents processed in parallel");
  AddSidecarOptions(select, sel.sidecar);

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score predicted captions");
  evaluate->add_option("--predictions", ev.predictions, "Predictions JSONL {doc_id, caption}")
      ->required();
  evaluate->add_option("--dataset", ev.dataset, "Dataset JSONL with reference captions")
      ->required();
  evaluate->add_option("--annotations", ev.annotations, "Reference caption entity annotations")
      ->required();
  evaluate->add_option("--pred-annotations", ev.pred_annotations,
                       "Entity annotations of predicted captions");
  evaluate->add_option("--output", ev.output, "Report JSON path ('-' for stdout)");
  evaluate->add_option("--ne-average", ev.ne_average, "Entity P/R averaging")
      ->check(CLI::IsMember({"micro", "macro"}));
  evaluate->add_flag("--ne-ignore-case", ev.ne_ignore_case,
                     "Match entity surfaces case-insensitively");
  AddSidecarOptions(evaluate, ev.sidecar);

  StatsOptions st;
  auto* stats = app.add_subcommand("stats", "Caption entity coverage statistics");
  stats->add_option("--dataset", st.dataset, "Dataset JSONL")->required();
  stats->add_option("--annotations", st.annotations, "Annotation sidecar JSONL")->required();
  stats->add_option("--min-coverage", st.min_coverage,
                    "Write the subset with coverage strictly above this ratio");
  stats->add_option("--subset-out", st.subset_out, "Subset JSONL path");
  stats->add_option("--output", st.output, "Report JSONL ('-' for stdout)");

  MineOptions mn;
  auto* mine = app.add_subcommand("mine-negatives", "Write caption/hard-negative pairs");
  mine->add_option("--dataset", mn.dataset, "Dataset JSONL")->required();
  mine->add_option("--stopwords", mn.stopwords, "Stopword list (default: built-in en-v1)");
  mine->add_option("--output", mn.output, "Pairs JSONL ('-' for stdout)");

  CheckOptions ck;
  auto* check = app.add_subcommand("ingest-check", "Validate a dataset and its sidecars");
  check->add_option("--dataset", ck.dataset, "Dataset JSONL")->required();
  check->add_option("--annotations", ck.annotations, "Annotation sidecar JSONL");
  check->add_option("--embeddings", ck.embeddings, "Embedding sidecar");
  check->add_option("--relations", ck.relations, "Relation sidecar JSONL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*select) return RunSelect(sel);
    if (*evaluate) return RunEvaluate(ev);
    if (*stats) return RunStats(st);
    if (*mine) return RunMine(mn);
    if (*check) return RunIngestCheck(ck);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SidecarError& e) {
    std::cerr << "sidecar error: " << e.what() << '\n';
    return kExitSidecar;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
