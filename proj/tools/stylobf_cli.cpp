#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stylobf/remote.hpp"
#include "stylobf/stylobf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stylobf;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Flags bound as raw strings so the file and the command line share one setter.
struct Overrides {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<CLI::Option*, std::string>> bound;

  void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    bound.emplace_back(app->add_option(flag, values[key], help), key);
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& [opt, key] : bound) {
      if (opt->count() > 0) cfg.set(key, values.at(key));
    }
    cfg.validate();
    return cfg;
  }
};

void add_shared(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "flat key = value config file");
  o.bind(app, "--seed", "seed", "seed for every random choice");
  o.bind(app, "--workers", "workers", "parallel documents");
  o.bind(app, "--out", "out", "output path");
}

void require(const std::string& value, const std::string& field) {
  if (value.empty()) throw Error(ErrorCode::kInvalidArgument, field + ": required");
}

void require_file(const std::string& path, const std::string& field) {
  require(path, field);
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::kIo, field + ": no such file " + path);
}

ObfuscationConfig obfuscation_config(const RunConfig& cfg) {
  ObfuscationConfig oc;
  oc.top_features = cfg.top_features;
  oc.ig.steps = cfg.ig_steps;
  oc.ig.c = cfg.c;
  oc.ig.rank_mode = cfg.rank_mode == "absolute" ? RankMode::kAbsolute : RankMode::kSigned;
  oc.max_changed_fraction = cfg.max_changed_fraction;
  oc.context_window = cfg.context_window;
  return oc;
}

std::unique_ptr<ReplacementGenerator> make_generator(const RunConfig& cfg, const ModelBundle& bundle) {
  if (cfg.generator == "fallback") return std::make_unique<FallbackGenerator>(bundle.lexicon);
  if (cfg.generator == "identity") return std::make_unique<IdentityGenerator>();
  RemoteOptions ro;
  ro.max_in_flight = std::max(8, cfg.workers);
  return std::make_unique<RemoteGenerator>(cfg.generator.substr(std::string("remote:").size()), ro);
}

void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << j.dump(2) << "\n";
}

int cmd_split(const Overrides& o) {
  const auto cfg = o.resolve();
  require_file(cfg.corpus, "corpus");
  const auto corpus = load_corpus(cfg.corpus);
  SplitSpec spec;
  spec.fractions = cfg.fractions;
  spec.seed = cfg.seed;
  const auto s = split(corpus, spec);
  const fs::path dir = cfg.out.empty() ? fs::path(".") : fs::path(cfg.out);
  fs::create_directories(dir);
  save_corpus(dir / "X.jsonl", s.target_train);
  save_corpus(dir / "X_star.jsonl", s.attacker_train);
  save_corpus(dir / "T.jsonl", s.test);
  auto manifest = split_manifest(s, spec);
  manifest["config"] = cfg.to_json();
  write_json((dir / "manifest.json").string(), manifest);
  std::printf("X %zu  X_star %zu  T %zu  -> %s\n", s.target_train.size(), s.attacker_train.size(), s.test.size(),
              dir.string().c_str());
  return 0;
}

struct TaggerFlags {
  std::string model_path;
  std::string conll_path;
  int epochs = 5;
};

Tagger load_tagger(const TaggerFlags& t, const RunConfig& cfg, std::optional<std::string>& path_out) {
  if (!t.model_path.empty()) {
    require_file(t.model_path, "tagger-model");
    std::ifstream in(t.model_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw FormatError("tagger", e.what());
    }
    path_out = t.model_path;
    return Tagger(std::make_shared<TaggerModel>(TaggerModel::from_json(j)));
  }
  if (!t.conll_path.empty()) {
    require_file(t.conll_path, "tagger-conll");
    std::ifstream in(t.conll_path);
    TaggerTrainOptions opt;
    opt.epochs = t.epochs;
    opt.seed = cfg.seed;
    auto report = train_tagger(parse_conll(in), opt);
    std::printf("tagger train accuracy %.4f\n", report.train_accuracy);
    path_out = t.conll_path;
    return Tagger(std::make_shared<TaggerModel>(std::move(report.model)));
  }
  return {};
}

int cmd_train(const Overrides& o, const TaggerFlags& tf) {
  const auto cfg = o.resolve();
  require_file(cfg.corpus, "corpus");
  require(cfg.out, "out");
  const auto corpus = load_corpus(cfg.corpus);
  std::optional<std::string> tagger_path;
  const Tagger tagger = load_tagger(tf, cfg, tagger_path);
  TrainOptions opt;
  opt.features.lengths = cfg.lengths;
  opt.features.vocab_cap = cfg.vocab_cap;
  opt.net.hidden = cfg.hidden;
  opt.net.epochs = cfg.epochs;
  opt.net.learning_rate = cfg.learning_rate;
  opt.net.batch_size = cfg.batch_size;
  opt.net.seed = cfg.seed;
  opt.lexicon_per_tag = cfg.lexicon_per_tag;
  auto bundle = train_bundle(corpus, opt, tagger);
  bundle.tagger_path = tagger_path;
  bundle.config = cfg.to_json();
  save_bundle(cfg.out, bundle);
  const auto& meta = bundle.model.meta();
  std::printf("documents %zu  authors %zu  features %zu\n", corpus.size(), bundle.model.author_labels().size(),
              bundle.space.dimension());
  std::printf("train accuracy %.4f\n", meta.train_accuracy);
  if (meta.validation_accuracy) std::printf("held-out accuracy %.4f\n", *meta.validation_accuracy);
  std::printf("training seconds %.2f\n", bundle.training_seconds);
  std::printf("checksum %s\n", bundle_checksum(bundle).c_str());
  return 0;
}

struct Outcome {
  json line;
  bool failed = false;
  PhaseTimes elapsed;
};

// Workers pull documents by index; the calling thread writes lines in input order.
template <typename Fn>
void ordered_parallel(std::size_t n, int workers, Fn work, const std::function<void(Outcome&)>& sink) {
  std::vector<std::optional<Outcome>> slots(n);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      Outcome out = work(i);
      {
        std::lock_guard lock(mu);
        slots[i] = std::move(out);
      }
      cv.notify_one();
    }
  };
  std::vector<std::jthread> pool;
  for (int w = 0; w < std::min<int>(workers, static_cast<int>(std::max<std::size_t>(n, 1))); ++w) pool.emplace_back(run);
  for (std::size_t i = 0; i < n; ++i) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return slots[i].has_value(); });
    Outcome out = std::move(*slots[i]);
    slots[i].reset();
    lock.unlock();
    sink(out);
  }
}

int cmd_obfuscate(const Overrides& o) {
  const auto cfg = o.resolve();
  require_file(cfg.bundle, "bundle");
  require_file(cfg.corpus, "corpus");
  require(cfg.out, "out");
  const auto bundle = load_bundle(cfg.bundle);
  const auto corpus = load_corpus(cfg.corpus);
  const auto generator = make_generator(cfg, bundle);
  const auto oc = obfuscation_config(cfg);
  const Tagger tagger = bundle.tagger();

  std::ofstream out(cfg.out);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + cfg.out);
  std::size_t failed = 0;
  PhaseTimes sum;
  ordered_parallel(
      corpus.size(), cfg.workers,
      [&](std::size_t i) {
        Outcome res;
        try {
          const auto r = obfuscate_text(corpus[i], bundle.model, bundle.space, tagger, *generator, oc);
          res.line = to_json(r);
          res.elapsed = r.elapsed;
        } catch (const GeneratorUnavailable& e) {
          res.line = to_json(e.partial());
          res.line["error"] = e.what();
          res.failed = true;
        }
        return res;
      },
      [&](Outcome& r) {
        out << r.line.dump() << "\n";
        out.flush();
        if (r.failed) {
          ++failed;
          return;
        }
        sum.attribution += r.elapsed.attribution;
        sum.matching += r.elapsed.matching;
        sum.generation += r.elapsed.generation;
      });

  const std::size_t ok = corpus.size() - failed;
  const double d = ok == 0 ? 1.0 : static_cast<double>(ok);
  json summary = {{"type", "summary"},
                  {"documents", corpus.size()},
                  {"failed", failed},
                  {"generator", generator->id()},
                  {"mean_ms",
                   {{"attribution", ms(sum.attribution) / d},
                    {"matching", ms(sum.matching) / d},
                    {"generation", ms(sum.generation) / d},
                    {"total", ms(sum.total()) / d}}},
                  {"config", cfg.to_json()}};
  out << summary.dump() << "\n";
  std::printf("documents %zu  failed %zu  mean ms/text %.2f (attribution %.2f, matching %.2f, generation %.2f)\n",
              corpus.size(), failed, ms(sum.total()) / d, ms(sum.attribution) / d, ms(sum.matching) / d,
              ms(sum.generation) / d);
  if (failed > 0) {
    std::fprintf(stderr, "error: generation failed for %zu document(s)\n", failed);
    return kExitFailure;
  }
  return 0;
}

std::vector<EvalInput> load_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<EvalInput> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      if (j.value("type", "result") != "result") continue;
      EvalInput e;
      e.pair = {j.at("doc_id").get<std::string>(), j.at("original_text").get<std::string>(),
                j.at("obfuscated_text").get<std::string>(), j.at("author").get<std::string>()};
      std::size_t changed = 0;
      for (const auto& c : j.value("changes", json::array())) {
        const auto a = c.at("original_tokens").get<std::vector<std::string>>();
        const auto b = c.at("replacement_tokens").get<std::vector<std::string>>();
        for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) changed += a[k] != b[k];
      }
      const auto tokens = j.value("token_count", std::size_t{0});
      e.change_rate = tokens == 0 ? 0.0 : static_cast<double>(changed) / static_cast<double>(tokens);
      out.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw MalformedRecord(line_no, e.what());
    }
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyEvaluationSet, "no result lines in " + path);
  return out;
}

struct EvalFlags {
  std::string pairs;
  std::string target;
  std::string csv;
  std::size_t pool = 0;
};

int cmd_evaluate(const Overrides& o, const EvalFlags& ef) {
  const auto cfg = o.resolve();
  require_file(ef.pairs, "pairs");
  require_file(ef.target, "target");
  const auto inputs = load_pairs(ef.pairs);
  auto target = std::make_shared<const ModelBundle>(load_bundle(ef.target));
  const BundleClassifier classifier(target);
  std::vector<std::string> reference;
  for (const auto& in : inputs) reference.push_back(in.pair.original);
  const TfIdfEmbedder embedder(reference);
  const auto report =
      evaluate(classifier, inputs, embedder, ef.pool > 0 ? std::optional<std::size_t>(ef.pool) : std::nullopt);
  auto j = to_json(report);
  j["config"] = cfg.to_json();
  j["pairs"] = ef.pairs;
  j["target"] = ef.target;
  if (!cfg.out.empty()) write_json(cfg.out, j);
  if (!ef.csv.empty()) {
    std::ofstream csv(ef.csv);
    if (!csv) throw Error(ErrorCode::kIo, "cannot write " + ef.csv);
    csv << to_csv(report);
  }
  std::cout << to_table(report);
  return 0;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

struct BenchFlags {
  int n = 100;
  std::size_t words = 1000;
};

int cmd_bench(const Overrides& o, const BenchFlags& bf) {
  const auto cfg = o.resolve();
  if (bf.n < 1) throw Error(ErrorCode::kInvalidArgument, "n: must be >= 1");
  if (bf.words < 1) throw Error(ErrorCode::kInvalidArgument, "words: must be >= 1");
  require_file(cfg.bundle, "bundle");
  const auto bundle = load_bundle(cfg.bundle);
  const auto generator = make_generator(cfg, bundle);
  const auto oc = obfuscation_config(cfg);
  const Tagger tagger = bundle.tagger();
  SyntheticOptions so;
  std::vector<double> attribution, matching, generation, total_ex_gen;
  std::vector<std::size_t> change_counts;
  for (int i = 0; i < bf.n; ++i) {
    const auto text = synthetic_long_text(so, static_cast<std::size_t>(i), bf.words, cfg.seed + static_cast<std::uint64_t>(i));
    const Document doc{"bench-" + std::to_string(i), synthetic_author_name(static_cast<std::size_t>(i) % so.authors), text};
    const auto r = obfuscate_text(doc, bundle.model, bundle.space, tagger, *generator, oc);
    attribution.push_back(ms(r.elapsed.attribution));
    matching.push_back(ms(r.elapsed.matching));
    generation.push_back(ms(r.elapsed.generation));
    total_ex_gen.push_back(ms(r.elapsed.attribution + r.elapsed.matching));
    change_counts.push_back(r.changes.size());
  }
  json phases;
  auto phase = [&](const char* name, const std::vector<double>& v) {
    phases[name] = {{"p50_ms", percentile(v, 0.50)}, {"p95_ms", percentile(v, 0.95)}};
  };
  phase("attribution", attribution);
  phase("matching", matching);
  phase("generation", generation);
  phase("total_excluding_generation", total_ex_gen);
  const json j = {{"texts", bf.n},
                  {"words", bf.words},
                  {"generator", generator->id()},
                  {"phases", phases},
                  {"change_counts", change_counts},
                  {"config", cfg.to_json()}};
  if (!cfg.out.empty()) write_json(cfg.out, j);
  std::printf("%-28s %10s %10s\n", "phase", "p50_ms", "p95_ms");
  for (const char* name : {"attribution", "matching", "generation", "total_excluding_generation"}) {
    std::printf("%-28s %10.3f %10.3f\n", name, phases[name]["p50_ms"].get<double>(),
                phases[name]["p95_ms"].get<double>());
  }
  return 0;
}

struct SynthFlags {
  std::size_t authors = 10;
  std::size_t docs = 500;
};

int cmd_synth(const Overrides& o, const SynthFlags& sf) {
  const auto cfg = o.resolve();
  require(cfg.out, "out");
  if (sf.authors < 2) throw Error(ErrorCode::kInvalidArgument, "authors: must be >= 2");
  if (sf.docs < 3) throw Error(ErrorCode::kInvalidArgument, "docs-per-author: must be >= 3");
  SyntheticOptions so;
  so.authors = sf.authors;
  so.docs_per_author = sf.docs;
  so.seed = cfg.seed;
  const auto corpus = generate_synthetic_corpus(so);
  save_corpus(cfg.out, corpus);
  std::printf("wrote %zu documents by %zu authors to %s\n", corpus.size(), sf.authors, cfg.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stylometric obfuscation: attribution-guided POS n-gram replacement"};
  app.require_subcommand(1);

  Overrides split_o, train_o, obf_o, eval_o, bench_o, synth_o;
  TaggerFlags tagger_flags;
  EvalFlags eval_flags;
  BenchFlags bench_flags;
  SynthFlags synth_flags;

  auto* split_cmd = app.add_subcommand("split", "split a corpus into X, X_star and T");
  add_shared(split_cmd, split_o);
  split_o.bind(split_cmd, "--corpus", "corpus", "corpus JSONL");
  split_o.bind(split_cmd, "--fractions", "fractions", "X,X_star,T fractions, e.g. 0.4,0.4,0.2");

  auto* train_cmd = app.add_subcommand("train", "train the internal attribution model bundle");
  add_shared(train_cmd, train_o);
  train_o.bind(train_cmd, "--corpus", "corpus", "training corpus JSONL");
  train_o.bind(train_cmd, "--V", "V", "n-gram lengths, e.g. 1,2,3,4");
  train_o.bind(train_cmd, "--L-vocab", "L_vocab", "features kept per (kind, length)");
  train_o.bind(train_cmd, "--epochs", "epochs", "training epochs");
  train_o.bind(train_cmd, "--hidden", "hidden", "hidden layer widths, e.g. 512");
  train_o.bind(train_cmd, "--learning-rate", "learning_rate", "Adam step size");
  train_o.bind(train_cmd, "--batch-size", "batch_size", "mini-batch size");
  train_cmd->add_option("--tagger-model", tagger_flags.model_path, "saved perceptron tagger JSON");
  train_cmd->add_option("--tagger-conll", tagger_flags.conll_path, "train a tagger on this CoNLL file first");
  train_cmd->add_option("--tagger-epochs", tagger_flags.epochs, "tagger training epochs");

  auto* obf_cmd = app.add_subcommand("obfuscate", "obfuscate every document of a corpus");
  add_shared(obf_cmd, obf_o);
  obf_o.bind(obf_cmd, "--bundle", "bundle", "model bundle from train");
  obf_o.bind(obf_cmd, "--corpus", "corpus", "corpus JSONL to obfuscate");
  obf_o.bind(obf_cmd, "--L-obf", "L_obf", "top POS features processed per text");
  obf_o.bind(obf_cmd, "--c", "c", "length scaling base");
  obf_o.bind(obf_cmd, "--ig-steps", "ig_steps", "integrated gradient steps");
  obf_o.bind(obf_cmd, "--rank-mode", "rank_mode", "signed or absolute");
  obf_o.bind(obf_cmd, "--generator", "generator", "fallback, identity or remote:<url>");
  obf_o.bind(obf_cmd, "--max-changed-fraction", "max_changed_fraction", "cap on frozen tokens per text");
  obf_o.bind(obf_cmd, "--context-window", "context_window", "tokens of context sent to the generator");

  auto* eval_cmd = app.add_subcommand("evaluate", "score obfuscation results against a target classifier");
  add_shared(eval_cmd, eval_o);
  eval_cmd->add_option("--pairs", eval_flags.pairs, "results JSONL from obfuscate")->required();
  eval_cmd->add_option("--target", eval_flags.target, "target classifier bundle")->required();
  eval_cmd->add_option("--csv", eval_flags.csv, "per-sample CSV output");
  eval_cmd->add_option("--author-pool", eval_flags.pool, "number of candidate authors for entropy");

  auto* bench_cmd = app.add_subcommand("bench", "latency percentiles on synthetic long texts");
  add_shared(bench_cmd, bench_o);
  bench_o.bind(bench_cmd, "--bundle", "bundle", "model bundle from train");
  bench_o.bind(bench_cmd, "--L-obf", "L_obf", "top POS features processed per text");
  bench_o.bind(bench_cmd, "--c", "c", "length scaling base");
  bench_o.bind(bench_cmd, "--ig-steps", "ig_steps", "integrated gradient steps");
  bench_o.bind(bench_cmd, "--generator", "generator", "fallback, identity or remote:<url>");
  bench_cmd->add_option("-n,--n", bench_flags.n, "number of texts");
  bench_cmd->add_option("--words", bench_flags.words, "minimum words per text");

  auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic multi-author corpus");
  add_shared(synth_cmd, synth_o);
  synth_cmd->add_option("--authors", synth_flags.authors, "number of authors");
  synth_cmd->add_option("--docs-per-author", synth_flags.docs, "documents per author");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*split_cmd) return cmd_split(split_o);
    if (*train_cmd) return cmd_train(train_o, tagger_flags);
    if (*obf_cmd) return cmd_obfuscate(obf_o);
    if (*eval_cmd) return cmd_evaluate(eval_o, eval_flags);
    if (*bench_cmd) return cmd_bench(bench_o, bench_flags);
    if (*synth_cmd) return cmd_synth(synth_o, synth_flags);
  } catch (const GeneratorUnavailable& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
