#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "forum_sentinel/corpus.hpp"
#include "forum_sentinel/discourse.hpp"
#include "forum_sentinel/eval.hpp"
#include "forum_sentinel/features.hpp"
#include "forum_sentinel/model.hpp"
#include "forum_sentinel/syngen.hpp"
#include "forum_sentinel/textprep.hpp"

namespace forum_sentinel::cli {

namespace fs = std::filesystem;

namespace {

struct Failure {
  int code;
  std::string message;
};

struct Options {
  std::string corpus;
  std::string lexicon = std::string(FORUM_SENTINEL_DATA_DIR) + "/connectives.tsv";
  std::string stopwords = std::string(FORUM_SENTINEL_DATA_DIR) + "/stopwords.txt";
  std::string affirmations = std::string(FORUM_SENTINEL_DATA_DIR) + "/affirmations.txt";
  std::string tags;
  std::string features = "eplusp";
  std::string baseline;
  std::string regime = "in-domain";
  std::string emit = "table";
  std::string out;
  std::string dump;
  std::string model;
  std::string spec;
  std::string normalizer = "token";
  std::string unigrams = "counts";
  std::string optimizer = "lbfgs";
  std::string class_weight = "neg_over_pos";
  std::string aggregation = "pooled";
  std::size_t k = 5;
  std::uint64_t seed = 0;
  double l2 = 1e-4;
  double threshold = 0.5;
  int max_iterations = 500;
  double tolerance = 1e-6;
  bool standardize = false;
  unsigned jobs = 1;
  std::size_t rounds = 10000;
};

// Runs `fn`, mapping any library exception to the given exit code.
template <typename Fn>
auto stage(int code, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Failure&) {
    throw;
  } catch (const CorpusError& e) {
    if (e.line() > 0) throw Failure{code, "line " + std::to_string(e.line()) + ": " + e.what()};
    throw Failure{code, e.what()};
  } catch (const std::exception& e) {
    throw Failure{code, e.what()};
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kBadInput, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream o(path, std::ios::binary | std::ios::trunc);
  if (!o) throw Failure{kOutputFailed, "cannot write " + path.string()};
  o << contents;
  o.close();
  if (!o) throw Failure{kOutputFailed, "write failed for " + path.string()};
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("forum-sentinel", sink);
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FORUM_SENTINEL_LOG")) {
    log->set_level(spdlog::level::from_str(env));
  }
  return log;
}

class Runner {
 public:
  Runner(const Options& o, std::ostream& out, spdlog::logger& log)
      : o_(o), out_(out), log_(log) {}

  void ingest() {
    const auto threads = load_filtered();
    const std::string table = corpus_stats(threads).to_table();
    emit_file("corpus_stats.txt", table);
    out_ << table;
  }

  void tag() {
    const auto prepared = prepare(load_filtered(), true);
    std::string records;
    std::vector<std::vector<PostDiscourse>> all;
    for (const PreparedThread& p : prepared) {
      for (std::size_t i = 0; i < p.thread.posts.size(); ++i) {
        records += format_tag_record(p.thread.course_id, p.thread.thread_id,
                                     p.thread.posts[i].post_id, p.discourse[i]);
        records.push_back('\n');
      }
      all.push_back(p.discourse);
    }
    const std::string table = sense_distribution(all).to_table();
    if (o_.out.empty()) {
      out_ << records;
    } else {
      emit_file("tags.tsv", records);
      emit_file("sense_distribution.txt", table);
      out_ << table;
    }
  }

  void featurize() {
    const FeatureConfig config = stage(kUsage, [&] { return parse_feature_config(o_.features); });
    const auto prepared = prepare(load_filtered(), config != FeatureConfig::edm15);
    const Dataset data = stage(kComputeFailed, [&] {
      std::optional<Vocabulary> vocab;
      if (config != FeatureConfig::pdtb) vocab = build_vocabulary(prepared);
      return vectorize(prepared, config, vocab ? &*vocab : nullptr, feature_options(),
                       o_.jobs);
    });
    std::ostringstream ss;
    write_feature_dump(ss, data, config);
    if (o_.out.empty()) {
      out_ << ss.str();
    } else {
      emit_file("features.tsv", ss.str());
      log_.info("{} threads, {} dimensions", data.examples.size(), data.space->size());
    }
  }

  void train_model() {
    Dataset data = o_.dump.empty() ? featurized_corpus() : load_dump();
    const TrainConfig cfg = train_config();
    const TrainResult r = stage(kComputeFailed, [&] { return train(data, cfg); });
    if (!r.converged) {
      log_.warn("optimizer stopped after {} iterations without converging", r.iterations);
    }
    log_.info("loss {:.6g}, gradient norm {:.3g}", r.loss, r.gradient_norm);
    const std::string text = serialize_model(r.model);
    if (o_.out.empty()) {
      out_ << text;
    } else {
      emit_file("model.txt", text);
    }
  }

  void predict_threads() {
    if (o_.model.empty()) throw Failure{kUsage, "predict needs --model"};
    const MaxentModel m = stage(kBadInput, [&] { return deserialize_model(read_file(o_.model)); });
    Dataset data = o_.dump.empty() ? featurized_corpus() : load_dump();
    std::string text = "course_id\tthread_id\tlabel\tprobability\tpredicted\n";
    for (const Example& ex : data.examples) {
      const double p = predict_proba(m, ex.features);
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", p);
      text += ex.course_id + "\t" + ex.thread_id + "\t" + std::string(to_string(ex.label)) +
              "\t" + buf + "\t" + std::string(to_string(p >= 0.5 ? Label::intervened
                                                                 : Label::not_intervened)) +
              "\n";
    }
    if (o_.out.empty()) {
      out_ << text;
    } else {
      emit_file("predictions.tsv", text);
    }
  }

  void eval() {
    const EvalConfig cfg = eval_config(o_.features);
    std::optional<EvalConfig> base_cfg;
    if (!o_.baseline.empty()) base_cfg = eval_config(o_.baseline);

    const bool need_discourse = cfg.features != FeatureConfig::edm15 ||
                                (base_cfg && base_cfg->features != FeatureConfig::edm15);
    const auto prepared = prepare(load_filtered(), need_discourse);
    EvalReport report = stage(kComputeFailed, [&] { return evaluate(prepared, cfg); });
    if (base_cfg) {
      const EvalReport base = stage(kComputeFailed, [&] { return evaluate(prepared, *base_cfg); });
      check(base, "baseline");
      annotate_significance(report, base, o_.rounds, o_.seed);
      report.config["baseline"] = o_.baseline;
      if (!o_.out.empty()) write_report(base, "baseline_");
    }
    for (const CourseResult& c : report.courses) {
      for (const std::string& w : c.warnings) log_.warn("{}: {}", c.course_id, w);
    }
    check(report, "report");
    if (!o_.out.empty()) write_report(report, "");

    if (o_.emit == "table") {
      out_ << report_table(report);
    } else if (o_.emit == "csv") {
      out_ << report_csv(report);
    } else {
      out_ << report_records(report);
    }
  }

  void syngen() {
    GenSpec spec;
    if (!o_.spec.empty()) {
      spec = stage(kBadInput, [&] { return GenSpec::from_json(read_file(o_.spec)); });
    }
    if (seed_given) spec.seed = o_.seed;
    const std::string corpus = stage(kBadInput, [&] { return generate_corpus(spec); });
    if (o_.out.empty()) {
      out_ << corpus;
    } else {
      emit_file("corpus.jsonl", corpus);
      emit_file("genspec.json", spec.to_json() + "\n");
    }
  }

  bool seed_given = false;

 private:
  std::vector<Thread> load_filtered() {
    if (o_.corpus.empty()) throw Failure{kUsage, "--corpus is required"};
    const LoadResult raw = stage(kBadInput, [&] { return load_corpus(o_.corpus); });
    if (raw.resorted_threads > 0) {
      log_.warn("{} threads had posts out of timestamp order; re-sorted", raw.resorted_threads);
    }
    std::vector<Thread> threads = filter_and_label(raw.threads);
    for (const Thread& t : threads) {
      const std::string problem = check_thread_invariants(t);
      if (!problem.empty()) {
        throw Failure{kBadInput, t.course_id + "/" + t.thread_id + ": " + problem};
      }
    }
    log_.info("{} threads loaded, {} kept after filtering", raw.threads.size(), threads.size());
    return threads;
  }

  std::vector<PreparedThread> prepare(const std::vector<Thread>& threads, bool discourse) {
    stop_ = stage(kBadInput, [&] { return StopwordList::load(o_.stopwords); });
    affirm_ = stage(kBadInput, [&] { return AffirmationList::load(o_.affirmations); });
    PrepResources res;
    res.stopwords = &stop_;
    res.affirmations = &*affirm_;
    res.tagger.prior_threshold = o_.threshold;
    if (discourse) {
      if (!o_.tags.empty()) {
        tags_ = stage(kBadInput, [&] { return TagImport::load(o_.tags); });
        res.imported_tags = &tags_;
      }
      lexicon_ = stage(kBadInput, [&] { return ConnectiveLexicon::load(o_.lexicon); });
      res.lexicon = &lexicon_;
    }
    return stage(kBadInput, [&] { return prepare_threads(threads, res, o_.jobs); });
  }

  FeatureOptions feature_options() const {
    return stage(kUsage, [&] {
      FeatureOptions f;
      f.normalizer = parse_length_normalizer(o_.normalizer);
      f.unigrams = parse_unigram_mode(o_.unigrams);
      return f;
    });
  }

  TrainConfig train_config() const {
    return stage(kUsage, [&] {
      TrainConfig t;
      t.l2_lambda = o_.l2;
      t.max_iterations = o_.max_iterations;
      t.convergence_tol = o_.tolerance;
      t.class_weight_mode = parse_class_weight_mode(o_.class_weight);
      t.seed = o_.seed;
      t.optimizer = parse_optimizer(o_.optimizer);
      t.standardize = o_.standardize;
      t.jobs = o_.jobs;
      t.validate();
      return t;
    });
  }

  EvalConfig eval_config(const std::string& features) const {
    EvalConfig c;
    c.features = stage(kUsage, [&] { return parse_feature_config(features); });
    c.feature_options = feature_options();
    c.train = train_config();
    c.regime = stage(kUsage, [&] { return parse_regime(o_.regime); });
    c.aggregation = stage(kUsage, [&] { return parse_fold_aggregation(o_.aggregation); });
    c.k = o_.k;
    c.seed = o_.seed;
    c.jobs = o_.jobs;
    return c;
  }

  Dataset featurized_corpus() {
    const FeatureConfig config = stage(kUsage, [&] { return parse_feature_config(o_.features); });
    const auto prepared = prepare(load_filtered(), config != FeatureConfig::edm15);
    return stage(kComputeFailed, [&] {
      std::optional<Vocabulary> vocab;
      if (config != FeatureConfig::pdtb) vocab = build_vocabulary(prepared);
      return vectorize(prepared, config, vocab ? &*vocab : nullptr, feature_options(),
                       o_.jobs);
    });
  }

  Dataset load_dump() {
    return stage(kBadInput, [&] {
      std::istringstream in(read_file(o_.dump));
      return read_feature_dump(in);
    });
  }

  void check(const EvalReport& report, const std::string& what) {
    const std::string problem = check_report_consistency(report);
    if (!problem.empty()) throw Failure{kInconsistentReport, what + ": " + problem};
    const std::string round_trip =
        check_report_consistency(parse_report_records(report_records(report)));
    if (!round_trip.empty()) {
      throw Failure{kInconsistentReport, what + " (reparsed): " + round_trip};
    }
  }

  void write_report(const EvalReport& r, const std::string& prefix) {
    emit_file(prefix + "report.txt", report_table(r));
    emit_file(prefix + "report.csv", report_csv(r));
    emit_file(prefix + "report.jsonl", report_records(r));
  }

  void emit_file(const std::string& name, const std::string& contents) {
    if (o_.out.empty()) return;
    write_file(fs::path(o_.out) / name, contents);
    log_.info("wrote {}", (fs::path(o_.out) / name).string());
  }

  const Options& o_;
  std::ostream& out_;
  spdlog::logger& log_;
  StopwordList stop_;
  std::optional<AffirmationList> affirm_;
  ConnectiveLexicon lexicon_;
  TagImport tags_;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  auto log = make_logger(err);
  Options o;

  CLI::App app{"Predicts instructor intervention in MOOC forum threads."};
  app.name("forum-sentinel");
  app.set_config("--config", "", "TOML or INI file with option defaults; flags win");
  app.fallthrough();
  app.require_subcommand(1);

  app.add_option("--corpus", o.corpus, "Thread corpus (JSON lines)")->check(CLI::ExistingFile);
  app.add_option("--lexicon", o.lexicon, "Connective lexicon (TSV)")->check(CLI::ExistingFile);
  app.add_option("--stopwords", o.stopwords, "Stopword list")->check(CLI::ExistingFile);
  app.add_option("--affirmations", o.affirmations, "Affirmation phrases")
      ->check(CLI::ExistingFile);
  app.add_option("--tags", o.tags, "Imported connective tags; replaces the built-in tagger")
      ->check(CLI::ExistingFile);
  app.add_option("--features", o.features, "Feature configuration")
      ->check(CLI::IsMember({"edm15", "pdtb", "eplusp"}));
  app.add_option("--baseline", o.baseline, "Second configuration for significance tests")
      ->check(CLI::IsMember({"edm15", "pdtb", "eplusp"}));
  app.add_option("--regime", o.regime, "Evaluation regime")
      ->check(CLI::IsMember({"in-domain", "ccv"}));
  app.add_option("--k", o.k, "Folds per course for in-domain evaluation")
      ->check(CLI::Range(2, 1000));
  auto* seed_opt = app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--l2", o.l2, "L2 penalty")->check(CLI::NonNegativeNumber);
  app.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::Range(1, 256));
  app.add_option("--emit", o.emit, "Report format on stdout")
      ->check(CLI::IsMember({"table", "csv", "records"}));
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--dump", o.dump, "Feature dump to train or predict from")
      ->check(CLI::ExistingFile);
  app.add_option("--model", o.model, "Model file")->check(CLI::ExistingFile);
  app.add_option("--spec", o.spec, "Generator spec (JSON)")->check(CLI::ExistingFile);
  app.add_option("--normalizer", o.normalizer, "Thread length for sense frequencies")
      ->check(CLI::IsMember({"token", "post", "sentence"}));
  app.add_option("--unigrams", o.unigrams, "Unigram values")
      ->check(CLI::IsMember({"counts", "binary"}));
  app.add_option("--optimizer", o.optimizer, "Optimizer")
      ->check(CLI::IsMember({"lbfgs", "gradient_descent"}));
  app.add_option("--class-weight", o.class_weight, "Positive class weighting")
      ->check(CLI::IsMember({"none", "neg_over_pos"}));
  app.add_option("--aggregation", o.aggregation, "In-domain fold aggregation")
      ->check(CLI::IsMember({"pooled", "mean-of-folds"}));
  app.add_option("--max-iterations", o.max_iterations, "Optimizer iteration cap")
      ->check(CLI::PositiveNumber);
  app.add_option("--tolerance", o.tolerance, "Gradient norm for convergence")
      ->check(CLI::PositiveNumber);
  app.add_flag("--standardize", o.standardize, "Scale features during optimization");
  app.add_option("--threshold", o.threshold, "Connective prior threshold")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--rounds", o.rounds, "Randomization rounds for significance")
      ->check(CLI::PositiveNumber);

  auto* ingest = app.add_subcommand("ingest", "Per-course intervention counts after filtering");
  auto* tag = app.add_subcommand("tag", "Tag explicit connectives; sense distribution");
  auto* featurize = app.add_subcommand("featurize", "Write a feature dump");
  auto* train = app.add_subcommand("train", "Train a model on a corpus or feature dump");
  auto* predict = app.add_subcommand("predict", "Score threads with a trained model");
  auto* eval = app.add_subcommand("eval", "Cross-validated evaluation report");
  auto* syngen = app.add_subcommand("syngen", "Generate a synthetic corpus");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  Runner runner(o, out, *log);
  runner.seed_given = seed_opt->count() > 0;
  try {
    if (*ingest) runner.ingest();
    if (*tag) runner.tag();
    if (*featurize) runner.featurize();
    if (*train) runner.train_model();
    if (*predict) runner.predict_threads();
    if (*eval) runner.eval();
    if (*syngen) runner.syngen();
  } catch (const Failure& f) {
    err << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  out.flush();
  return kOk;
}

}  // namespace forum_sentinel::cli
