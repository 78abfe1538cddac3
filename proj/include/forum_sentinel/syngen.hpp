#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forum_sentinel/corpus.hpp"

namespace forum_sentinel {

class GenSpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters of a synthetic multi-course forum corpus.
struct GenSpec {
  std::size_t n_courses = 4;
  std::size_t threads_per_course = 300;
  /// intervened / non-intervened per course; a single value applies to all.
  std::vector<double> intervention_ratios{0.25};
  /// Exact intervened counts per course; overrides the ratios when set.
  std::optional<std::vector<std::size_t>> intervened_counts;
  /// Fraction of content words drawn from a course-unique pool.
  double vocabulary_disjointness = 0.5;
  /// Probability that an intervened thread carries the planted
  /// contingency/comparison connective pattern.
  double discourse_signal_strength = 0.9;
  /// Probability that an intervened thread mentions its course's hot topic
  /// words (the lexical cue a unigram model can pick up).
  double lexical_signal_strength = 0.8;
  /// Extra threads per course that filtering removes (non-content
  /// sub-forums and staff-initiated threads).
  std::size_t extra_filtered_threads = 0;
  std::uint64_t seed = 0;

  /// Throws GenSpecError on out-of-range fields or infeasible counts.
  void validate() const;
  /// Number of intervened threads for a course after filtering.
  std::size_t intervened_for(std::size_t course) const;

  /// JSON object with the field names above as keys; missing keys keep
  /// their defaults.
  static GenSpec from_json(std::string_view text);
  std::string to_json() const;
};

/// Ratio r = intervened / non-intervened over n threads gives
/// round(n * r / (1 + r)) intervened threads.
std::size_t intervened_count_for_ratio(std::size_t n_threads, double ratio);

std::string course_name(std::size_t course);

/// Raw (unfiltered) threads; filter_and_label recovers exactly
/// threads_per_course threads per course with the requested labels.
std::vector<Thread> generate_threads(const GenSpec& spec);

/// The same corpus rendered in the line-delimited corpus format.
std::string generate_corpus(const GenSpec& spec);

}  // namespace forum_sentinel
