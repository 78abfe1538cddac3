#include "forum_sentinel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "forum_sentinel/parallel.hpp"

namespace forum_sentinel {

using json = nlohmann::json;

void ConfusionCounts::add(Label truth, Label predicted) {
  const bool t = truth == Label::intervened;
  const bool p = predicted == Label::intervened;
  if (t && p) {
    ++tp;
  } else if (!t && p) {
    ++fp;
  } else if (t) {
    ++fn;
  } else {
    ++tn;
  }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

double harmonic_f1(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

Metrics metrics_from_pr(double precision, double recall) {
  return {precision, recall, harmonic_f1(precision, recall)};
}

Metrics prf1(const ConfusionCounts& c) {
  const double p = c.tp + c.fp ? 100.0 * static_cast<double>(c.tp) /
                                     static_cast<double>(c.tp + c.fp)
                               : 0.0;
  const double r = c.tp + c.fn ? 100.0 * static_cast<double>(c.tp) /
                                     static_cast<double>(c.tp + c.fn)
                               : 0.0;
  return metrics_from_pr(p, r);
}

Metrics macro_average(std::span<const Metrics> per_course) {
  if (per_course.empty()) throw EvalError("macro average of zero courses");
  double p = 0.0, r = 0.0;
  for (const Metrics& m : per_course) {
    p += m.precision;
    r += m.recall;
  }
  const auto n = static_cast<double>(per_course.size());
  return metrics_from_pr(p / n, r / n);
}

Metrics weighted_macro_average(std::span<const Metrics> per_course,
                               std::span<const double> weights) {
  if (per_course.size() != weights.size()) {
    throw EvalError("one weight per course required");
  }
  double p = 0.0, r = 0.0, total = 0.0;
  for (std::size_t i = 0; i < per_course.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw EvalError("negative course weight");
    p += weights[i] * per_course[i].precision;
    r += weights[i] * per_course[i].recall;
    total += weights[i];
  }
  if (!(total > 0.0)) throw EvalError("total course weight is zero");
  return metrics_from_pr(p / total, r / total);
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: zero bound");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = 0;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

FoldAssignment stratified_kfold(const std::vector<Label>& labels,
                                const std::vector<std::string>& keys, std::size_t k,
                                std::uint64_t seed) {
  if (k < 2) throw EvalError("k-fold needs k >= 2");
  if (labels.size() != keys.size()) throw EvalError("one key per label required");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  std::vector<std::size_t> pos, neg;
  for (std::size_t i : order) {
    (labels[i] == Label::intervened ? pos : neg).push_back(i);
  }
  std::mt19937_64 rng(seed);
  deterministic_shuffle(pos, rng);
  deterministic_shuffle(neg, rng);

  FoldAssignment out;
  out.folds.resize(k);
  for (std::size_t i = 0; i < pos.size(); ++i) out.folds[i % k].push_back(pos[i]);
  const std::size_t offset = pos.size() % k;
  for (std::size_t i = 0; i < neg.size(); ++i) {
    out.folds[(offset + i) % k].push_back(neg[i]);
  }
  for (auto& f : out.folds) std::sort(f.begin(), f.end());
  if (pos.size() < k) {
    out.warnings.push_back("only " + std::to_string(pos.size()) +
                           " positive examples for " + std::to_string(k) +
                           " folds; some folds have none");
  }
  if (neg.size() < k) {
    out.warnings.push_back("only " + std::to_string(neg.size()) +
                           " negative examples for " + std::to_string(k) + " folds");
  }
  return out;
}

double significance(std::span<const double> a, std::span<const double> b,
                    std::size_t rounds, std::uint64_t seed) {
  if (a.size() != b.size()) throw EvalError("significance: score lists differ in length");
  if (rounds == 0) throw EvalError("significance: zero rounds");
  std::vector<double> d(a.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d[i] = a[i] - b[i];
    scale += std::abs(d[i]);
  }
  double observed = 0.0;
  for (double x : d) observed += x;
  observed = std::abs(observed);
  const double eps = 1e-12 * std::max(1.0, scale);

  std::mt19937_64 rng(seed);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < rounds; ++r) {
    double s = 0.0;
    for (double x : d) s += uniform_below(rng, 2) ? -x : x;
    if (std::abs(s) >= observed - eps) ++hits;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(rounds + 1);
}

std::string_view to_string(Regime r) {
  return r == Regime::in_domain ? "in-domain" : "ccv";
}

Regime parse_regime(std::string_view s) {
  if (s == "in-domain") return Regime::in_domain;
  if (s == "ccv") return Regime::ccv;
  throw std::invalid_argument("unknown regime '" + std::string(s) + "'");
}

std::string_view to_string(FoldAggregation a) {
  return a == FoldAggregation::pooled ? "pooled" : "mean-of-folds";
}

FoldAggregation parse_fold_aggregation(std::string_view s) {
  if (s == "pooled") return FoldAggregation::pooled;
  if (s == "mean-of-folds") return FoldAggregation::mean_of_folds;
  throw std::invalid_argument("unknown fold aggregation '" + std::string(s) + "'");
}

void EvalReport::finalize() {
  if (courses.empty()) {
    macro = weighted_macro = Metrics{};
    return;
  }
  std::vector<Metrics> rows;
  std::vector<double> weights;
  for (const CourseResult& c : courses) {
    rows.push_back(c.metrics);
    weights.push_back(static_cast<double>(c.n_threads));
  }
  macro = macro_average(rows);
  weighted_macro = weighted_macro_average(rows, weights);
}

std::string check_report_consistency(const EvalReport& report) {
  EvalReport copy;
  copy.courses = report.courses;
  try {
    copy.finalize();
  } catch (const EvalError& e) {
    return e.what();
  }
  for (const CourseResult& c : report.courses) {
    if (c.counts.total() != c.n_threads) {
      return "course " + c.course_id + ": confusion counts do not sum to thread count";
    }
  }
  if (!(copy.macro == report.macro)) return "macro row does not match per-course rows";
  if (!(copy.weighted_macro == report.weighted_macro)) {
    return "weighted macro row does not match per-course rows";
  }
  return {};
}

namespace {

std::map<std::string, std::string> config_echo(const EvalConfig& cfg) {
  char buf[40];
  auto g = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::map<std::string, std::string> m;
  m["features"] = to_string(cfg.features);
  m["regime"] = to_string(cfg.regime);
  m["k"] = std::to_string(cfg.k);
  m["seed"] = std::to_string(cfg.seed);
  m["aggregation"] = to_string(cfg.aggregation);
  m["l2_lambda"] = g(cfg.train.l2_lambda);
  m["max_iterations"] = std::to_string(cfg.train.max_iterations);
  m["convergence_tol"] = g(cfg.train.convergence_tol);
  m["class_weight_mode"] = to_string(cfg.train.class_weight_mode);
  m["optimizer"] = to_string(cfg.train.optimizer);
  m["standardize"] = cfg.train.standardize ? "1" : "0";
  switch (cfg.feature_options.normalizer) {
    case LengthNormalizer::token:
      m["length_normalizer"] = "token";
      break;
    case LengthNormalizer::post:
      m["length_normalizer"] = "post";
      break;
    case LengthNormalizer::sentence:
      m["length_normalizer"] = "sentence";
      break;
  }
  m["unigrams"] = cfg.feature_options.unigrams == UnigramMode::counts ? "counts" : "binary";
  return m;
}

using CourseGroups = std::map<std::string, std::vector<const PreparedThread*>>;

CourseGroups group_prepared(const std::vector<PreparedThread>& threads) {
  CourseGroups g;
  for (const PreparedThread& t : threads) g[t.thread.course_id].push_back(&t);
  return g;
}

struct FitOutcome {
  std::vector<ThreadOutcome> outcomes;  // same order as `test`
  std::optional<Vocabulary> vocabulary;
  std::size_t vocabulary_size = 0;
  bool trained = false;
  bool converged = false;
  int iterations = 0;
  std::string warning;
};

// Builds the vocabulary and model on `training`, then scores `test`.
FitOutcome fit_and_score(const std::vector<const PreparedThread*>& training,
                         const std::vector<const PreparedThread*>& test,
                         const EvalConfig& cfg, bool allow_single_class) {
  FitOutcome out;
  std::optional<Vocabulary>& vocab = out.vocabulary;
  if (cfg.features != FeatureConfig::pdtb) {
    vocab.emplace(build_vocabulary(training));
    out.vocabulary_size = vocab->size();
  }
  const Featurizer featurizer(cfg.features, vocab ? &*vocab : nullptr,
                              cfg.feature_options);
  const Dataset train_data = vectorize(training, featurizer);
  const Dataset test_data = vectorize(test, featurizer);

  const std::size_t n_pos = train_data.positives();
  const std::size_t n_neg = train_data.negatives();
  std::optional<MaxentModel> model;
  Label fallback = Label::not_intervened;
  if (n_pos == 0 || n_neg == 0) {
    if (!allow_single_class) {
      throw EvalError(n_pos == 0 ? "training pool has no positive examples"
                                 : "training pool has no negative examples");
    }
    fallback = n_pos > 0 ? Label::intervened : Label::not_intervened;
    out.warning = "training split is single-class; predicting " +
                  std::string(to_string(fallback));
  } else {
    TrainConfig tc = cfg.train;
    tc.jobs = 1;
    TrainResult r = train(train_data, tc);
    out.trained = true;
    out.converged = r.converged;
    out.iterations = r.iterations;
    model = std::move(r.model);
  }

  out.outcomes.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    ThreadOutcome o;
    o.thread_id = test[i]->thread.thread_id;
    o.truth = test[i]->thread.label;
    if (model) {
      o.probability = predict_proba(*model, test_data.examples[i].features);
      o.predicted = o.probability >= 0.5 ? Label::intervened : Label::not_intervened;
    } else {
      o.predicted = fallback;
      o.probability = fallback == Label::intervened ? 1.0 : 0.0;
    }
    out.outcomes.push_back(std::move(o));
  }
  return out;
}

CourseResult in_domain_course(const std::string& course,
                              const std::vector<const PreparedThread*>& threads,
                              const EvalConfig& cfg) {
  CourseResult res;
  res.course_id = course;
  res.n_threads = threads.size();
  std::vector<Label> labels;
  std::vector<std::string> keys;
  for (const PreparedThread* t : threads) {
    labels.push_back(t->thread.label);
    keys.push_back(t->thread.thread_id);
  }
  const FoldAssignment folds = stratified_kfold(labels, keys, cfg.k, cfg.seed);
  res.warnings = folds.warnings;
  res.outcomes.resize(threads.size());

  std::vector<Metrics> fold_metrics;
  for (std::size_t f = 0; f < folds.folds.size(); ++f) {
    const auto& test_idx = folds.folds[f];
    std::vector<bool> in_test(threads.size(), false);
    for (std::size_t i : test_idx) in_test[i] = true;
    std::vector<const PreparedThread*> training, test;
    for (std::size_t i = 0; i < threads.size(); ++i) {
      (in_test[i] ? test : training).push_back(threads[i]);
    }
    FoldDetail detail;
    detail.fold = f;
    if (test.empty() || training.empty()) {
      detail.trained = false;
      res.folds.push_back(detail);
      continue;
    }
    FitOutcome fit = fit_and_score(training, test, cfg, /*allow_single_class=*/true);
    if (!fit.warning.empty()) {
      res.warnings.push_back("fold " + std::to_string(f) + ": " + fit.warning);
    }
    for (std::size_t j = 0; j < test_idx.size(); ++j) {
      const ThreadOutcome& o = fit.outcomes[j];
      detail.counts.add(o.truth, o.predicted);
      res.outcomes[test_idx[j]] = o;
    }
    detail.metrics = prf1(detail.counts);
    detail.vocabulary_size = fit.vocabulary_size;
    detail.trained = fit.trained;
    detail.converged = fit.converged;
    detail.iterations = fit.iterations;
    res.counts += detail.counts;
    fold_metrics.push_back(detail.metrics);
    res.folds.push_back(detail);
  }
  if (cfg.aggregation == FoldAggregation::pooled || fold_metrics.empty()) {
    res.metrics = prf1(res.counts);
  } else {
    res.metrics = macro_average(fold_metrics);
  }
  return res;
}

}  // namespace

EvalReport run_in_domain(const std::vector<PreparedThread>& threads,
                         const EvalConfig& cfg) {
  const CourseGroups groups = group_prepared(threads);
  std::vector<std::pair<std::string, std::vector<const PreparedThread*>>> units(
      groups.begin(), groups.end());
  EvalReport report;
  report.config = config_echo(cfg);
  report.courses.resize(units.size());
  parallel_for(units.size(), cfg.jobs, [&](std::size_t i) {
    report.courses[i] = in_domain_course(units[i].first, units[i].second, cfg);
  });
  report.finalize();
  return report;
}

EvalReport run_loo_ccv(const std::vector<PreparedThread>& threads,
                       const EvalConfig& cfg) {
  const CourseGroups groups = group_prepared(threads);
  if (groups.size() < 2) throw EvalError("cross-course validation needs >= 2 courses");
  std::vector<std::string> courses;
  for (const auto& [c, _] : groups) courses.push_back(c);

  // Content tokens per course, for the leakage diagnostic.
  std::map<std::string, std::set<std::string>> course_tokens;
  for (const auto& [c, ts] : groups) {
    auto& set = course_tokens[c];
    for (const PreparedThread* t : ts) {
      for (const auto& post : t->content_tokens) set.insert(post.begin(), post.end());
    }
  }

  EvalReport report;
  report.config = config_echo(cfg);
  report.courses.resize(courses.size());
  parallel_for(courses.size(), cfg.jobs, [&](std::size_t ci) {
    const std::string& held_out = courses[ci];
    std::vector<const PreparedThread*> training;
    for (const auto& [c, ts] : groups) {
      if (c != held_out) training.insert(training.end(), ts.begin(), ts.end());
    }
    const auto& test = groups.at(held_out);
    FitOutcome fit = fit_and_score(training, test, cfg, /*allow_single_class=*/false);

    CourseResult res;
    res.course_id = held_out;
    res.n_threads = test.size();
    res.outcomes = std::move(fit.outcomes);
    for (const ThreadOutcome& o : res.outcomes) res.counts.add(o.truth, o.predicted);
    res.metrics = prf1(res.counts);
    res.vocabulary_size = fit.vocabulary_size;
    FoldDetail detail;
    detail.counts = res.counts;
    detail.metrics = res.metrics;
    detail.vocabulary_size = fit.vocabulary_size;
    detail.trained = fit.trained;
    detail.converged = fit.converged;
    detail.iterations = fit.iterations;
    res.folds.push_back(detail);

    if (cfg.features != FeatureConfig::pdtb) {
      std::unordered_set<std::string> training_tokens;
      for (const auto& [c, set] : course_tokens) {
        if (c != held_out) training_tokens.insert(set.begin(), set.end());
      }
      const Vocabulary& vocab = *fit.vocabulary;
      for (const std::string& tok : course_tokens.at(held_out)) {
        if (training_tokens.contains(tok)) continue;
        ++res.held_out_unique_tokens;
        if (vocab.contains(tok)) ++res.leaked_tokens;
      }
    }
    report.courses[ci] = std::move(res);
  });
  report.finalize();
  return report;
}

EvalReport evaluate(const std::vector<PreparedThread>& threads, const EvalConfig& cfg) {
  return cfg.regime == Regime::in_domain ? run_in_domain(threads, cfg)
                                         : run_loo_ccv(threads, cfg);
}

void annotate_significance(EvalReport& system, const EvalReport& baseline,
                           std::size_t rounds, std::uint64_t seed) {
  for (CourseResult& c : system.courses) {
    auto it = std::find_if(baseline.courses.begin(), baseline.courses.end(),
                           [&](const CourseResult& b) { return b.course_id == c.course_id; });
    if (it == baseline.courses.end()) continue;
    std::map<std::string, double> base_correct;
    for (const ThreadOutcome& o : it->outcomes) {
      base_correct[o.thread_id] = o.truth == o.predicted ? 1.0 : 0.0;
    }
    std::vector<double> a, b;
    for (const ThreadOutcome& o : c.outcomes) {
      auto bc = base_correct.find(o.thread_id);
      if (bc == base_correct.end()) continue;
      a.push_back(o.truth == o.predicted ? 1.0 : 0.0);
      b.push_back(bc->second);
    }
    if (!a.empty()) c.p_value = significance(a, b, rounds, seed);
  }
}

namespace {

std::string stars(const std::optional<double>& p) {
  if (!p) return "";
  if (*p < 0.01) return "**";
  if (*p < 0.05) return "*";
  return "";
}

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

json metrics_json(const Metrics& m) {
  return json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

json counts_json(const ConfusionCounts& c) {
  return json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

Metrics metrics_from_json(const json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(),
          j.at("f1").get<double>()};
}

ConfusionCounts counts_from_json(const json& j) {
  return {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
          j.at("fn").get<std::size_t>(), j.at("tn").get<std::size_t>()};
}

}  // namespace

std::string report_table(const EvalReport& report) {
  std::size_t width = std::string_view("Weighted macro avg.").size();
  for (const CourseResult& c : report.courses) width = std::max(width, c.course_id.size());
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %7s %7s %9s\n", static_cast<int>(width), "Course",
                "P", "R", "F1");
  os << buf;
  auto row = [&](const std::string& name, const Metrics& m, const std::string& mark) {
    std::snprintf(buf, sizeof buf, "%-*s %7s %7s %7s%-2s\n", static_cast<int>(width),
                  name.c_str(), fixed1(m.precision).c_str(), fixed1(m.recall).c_str(),
                  fixed1(m.f1).c_str(), mark.c_str());
    os << buf;
  };
  for (const CourseResult& c : report.courses) row(c.course_id, c.metrics, stars(c.p_value));
  if (!report.courses.empty()) {
    row("Macro avg.", report.macro, "");
    row("Weighted macro avg.", report.weighted_macro, "");
  }
  return os.str();
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "course,precision,recall,f1,tp,fp,fn,tn,n_threads,p_value\n";
  char buf[512];
  for (const CourseResult& c : report.courses) {
    std::string p;
    if (c.p_value) {
      char pb[40];
      std::snprintf(pb, sizeof pb, "%.6g", *c.p_value);
      p = pb;
    }
    std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%.4f,%zu,%zu,%zu,%zu,%zu,%s\n",
                  c.course_id.c_str(), c.metrics.precision, c.metrics.recall,
                  c.metrics.f1, c.counts.tp, c.counts.fp, c.counts.fn, c.counts.tn,
                  c.n_threads, p.c_str());
    os << buf;
  }
  if (!report.courses.empty()) {
    std::snprintf(buf, sizeof buf, "macro,%.4f,%.4f,%.4f,,,,,,\n", report.macro.precision,
                  report.macro.recall, report.macro.f1);
    os << buf;
    std::snprintf(buf, sizeof buf, "weighted_macro,%.4f,%.4f,%.4f,,,,,,\n",
                  report.weighted_macro.precision, report.weighted_macro.recall,
                  report.weighted_macro.f1);
    os << buf;
  }
  return os.str();
}

std::string report_records(const EvalReport& report) {
  std::ostringstream os;
  json cfg = {{"type", "config"}, {"config", report.config}};
  os << cfg.dump() << '\n';
  for (const CourseResult& c : report.courses) {
    json folds = json::array();
    for (const FoldDetail& f : c.folds) {
      folds.push_back({{"fold", f.fold},
                       {"counts", counts_json(f.counts)},
                       {"metrics", metrics_json(f.metrics)},
                       {"vocabulary_size", f.vocabulary_size},
                       {"trained", f.trained},
                       {"converged", f.converged},
                       {"iterations", f.iterations}});
    }
    json outcomes = json::array();
    for (const ThreadOutcome& o : c.outcomes) {
      outcomes.push_back({o.thread_id, o.truth == Label::intervened ? 1 : 0,
                          o.predicted == Label::intervened ? 1 : 0, o.probability});
    }
    json rec = {{"type", "course"},
                {"course_id", c.course_id},
                {"counts", counts_json(c.counts)},
                {"metrics", metrics_json(c.metrics)},
                {"n_threads", c.n_threads},
                {"vocabulary_size", c.vocabulary_size},
                {"held_out_unique_tokens", c.held_out_unique_tokens},
                {"leaked_tokens", c.leaked_tokens},
                {"p_value", c.p_value ? json(*c.p_value) : json(nullptr)},
                {"warnings", c.warnings},
                {"folds", std::move(folds)},
                {"outcomes", std::move(outcomes)}};
    os << rec.dump() << '\n';
  }
  os << json{{"type", "macro"}, {"metrics", metrics_json(report.macro)}}.dump() << '\n';
  os << json{{"type", "weighted_macro"}, {"metrics", metrics_json(report.weighted_macro)}}
            .dump()
     << '\n';
  return os.str();
}

EvalReport parse_report_records(std::string_view contents) {
  EvalReport report;
  std::istringstream is{std::string(contents)};
  std::string line;
  std::size_t line_no = 0;
  try {
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json rec = json::parse(line);
      const std::string type = rec.at("type").get<std::string>();
      if (type == "config") {
        report.config = rec.at("config").get<std::map<std::string, std::string>>();
      } else if (type == "course") {
        CourseResult c;
        c.course_id = rec.at("course_id").get<std::string>();
        c.counts = counts_from_json(rec.at("counts"));
        c.metrics = metrics_from_json(rec.at("metrics"));
        c.n_threads = rec.at("n_threads").get<std::size_t>();
        c.vocabulary_size = rec.at("vocabulary_size").get<std::size_t>();
        c.held_out_unique_tokens = rec.at("held_out_unique_tokens").get<std::size_t>();
        c.leaked_tokens = rec.at("leaked_tokens").get<std::size_t>();
        if (!rec.at("p_value").is_null()) c.p_value = rec.at("p_value").get<double>();
        c.warnings = rec.at("warnings").get<std::vector<std::string>>();
        for (const json& f : rec.at("folds")) {
          FoldDetail d;
          d.fold = f.at("fold").get<std::size_t>();
          d.counts = counts_from_json(f.at("counts"));
          d.metrics = metrics_from_json(f.at("metrics"));
          d.vocabulary_size = f.at("vocabulary_size").get<std::size_t>();
          d.trained = f.at("trained").get<bool>();
          d.converged = f.at("converged").get<bool>();
          d.iterations = f.at("iterations").get<int>();
          c.folds.push_back(d);
        }
        for (const json& o : rec.at("outcomes")) {
          ThreadOutcome t;
          t.thread_id = o.at(0).get<std::string>();
          t.truth = o.at(1).get<int>() ? Label::intervened : Label::not_intervened;
          t.predicted = o.at(2).get<int>() ? Label::intervened : Label::not_intervened;
          t.probability = o.at(3).get<double>();
          c.outcomes.push_back(std::move(t));
        }
        report.courses.push_back(std::move(c));
      } else if (type == "macro") {
        report.macro = metrics_from_json(rec.at("metrics"));
      } else if (type == "weighted_macro") {
        report.weighted_macro = metrics_from_json(rec.at("metrics"));
      } else {
        throw EvalError("unknown record type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw EvalError("report records line " + std::to_string(line_no) + ": " + e.what());
  }
  return report;
}

}  // namespace forum_sentinel
