#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forum_sentinel/features.hpp"
#include "forum_sentinel/model.hpp"

namespace forum_sentinel {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  void add(Label truth, Label predicted);
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

/// Positive-class scores on a 0-100 scale.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const Metrics&) const = default;
};

/// Harmonic mean of P and R, 0 when both are 0.
double harmonic_f1(double precision, double recall);
Metrics metrics_from_pr(double precision, double recall);
Metrics prf1(const ConfusionCounts& c);

/// Unweighted mean of P and R; F1 is recomputed from the means.
Metrics macro_average(std::span<const Metrics> per_course);
/// Weighted mean of P and R; F1 is recomputed from the weighted means.
Metrics weighted_macro_average(std::span<const Metrics> per_course,
                               std::span<const double> weights);

/// Uniform integer in [0, bound) from a 64-bit Mersenne Twister, by
/// rejection sampling, so results are identical across standard libraries.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// Fisher-Yates shuffle driven by uniform_below.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_below(rng, i)]);
  }
}

struct FoldAssignment {
  /// Indices into the input, ascending within each fold.
  std::vector<std::vector<std::size_t>> folds;
  std::vector<std::string> warnings;
};

/// Splits items into k folds so each class is spread as evenly as possible.
/// Items are canonicalized by `keys` before shuffling, so the result does not
/// depend on input order. Warns when a class has fewer than k members.
FoldAssignment stratified_kfold(const std::vector<Label>& labels,
                                const std::vector<std::string>& keys, std::size_t k,
                                std::uint64_t seed);

/// Two-sided approximate randomization test on paired scores, using the
/// absolute mean difference as statistic. Returns (hits + 1) / (rounds + 1).
double significance(std::span<const double> a, std::span<const double> b,
                    std::size_t rounds = 10000, std::uint64_t seed = 0);

enum class Regime { in_domain, ccv };
enum class FoldAggregation { pooled, mean_of_folds };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view s);
std::string_view to_string(FoldAggregation a);
FoldAggregation parse_fold_aggregation(std::string_view s);

struct EvalConfig {
  FeatureConfig features = FeatureConfig::eplusp;
  FeatureOptions feature_options;
  TrainConfig train;
  Regime regime = Regime::in_domain;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  FoldAggregation aggregation = FoldAggregation::pooled;
  unsigned jobs = 1;
};

struct FoldDetail {
  std::size_t fold = 0;
  ConfusionCounts counts;
  Metrics metrics;
  std::size_t vocabulary_size = 0;
  bool trained = true;
  bool converged = false;
  int iterations = 0;
};

struct ThreadOutcome {
  std::string thread_id;
  Label truth = Label::not_intervened;
  Label predicted = Label::not_intervened;
  double probability = 0.0;
};

struct CourseResult {
  std::string course_id;
  ConfusionCounts counts;
  Metrics metrics;
  std::size_t n_threads = 0;
  std::vector<FoldDetail> folds;
  std::vector<ThreadOutcome> outcomes;  // input order within the course
  std::size_t vocabulary_size = 0;      // cross-course runs only
  std::size_t held_out_unique_tokens = 0;
  std::size_t leaked_tokens = 0;  // held-out-only tokens found in the vocabulary
  std::optional<double> p_value;
  std::vector<std::string> warnings;
};

struct EvalReport {
  std::map<std::string, std::string> config;
  std::vector<CourseResult> courses;  // ordered by course id
  Metrics macro;
  Metrics weighted_macro;

  /// Recomputes the two aggregate rows from the per-course rows.
  void finalize();
};

/// Recomputes aggregates from per-course rows and compares exactly. Returns
/// an empty string when consistent, otherwise a description.
std::string check_report_consistency(const EvalReport& report);

/// Runs the configured regime over filtered, labeled, prepared threads.
EvalReport evaluate(const std::vector<PreparedThread>& threads, const EvalConfig& cfg);
EvalReport run_in_domain(const std::vector<PreparedThread>& threads,
                         const EvalConfig& cfg);
EvalReport run_loo_ccv(const std::vector<PreparedThread>& threads,
                       const EvalConfig& cfg);

/// Adds per-course p-values comparing `system` with `baseline` on paired
/// per-thread correctness.
void annotate_significance(EvalReport& system, const EvalReport& baseline,
                           std::size_t rounds = 10000, std::uint64_t seed = 0);

std::string report_table(const EvalReport& report);
std::string report_csv(const EvalReport& report);
/// JSON lines: one config record, one per course, then the two aggregates.
std::string report_records(const EvalReport& report);
EvalReport parse_report_records(std::string_view contents);

}  // namespace forum_sentinel
