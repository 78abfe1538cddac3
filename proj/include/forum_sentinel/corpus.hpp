#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace forum_sentinel {

/// Raised for malformed corpus input. `line()` is 1-based, 0 when unknown.
class CorpusError : public std::runtime_error {
 public:
  CorpusError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

enum class SubForumType {
  errata,
  exam,
  lecture,
  homework,
  general,
  peer_review,
  study_group,
  technical_issues,
};

enum class AuthorRole { student, instructor, teaching_assistant };

enum class Label { not_intervened, intervened };

SubForumType parse_subforum(std::string_view s);
std::string_view to_string(SubForumType s);
AuthorRole parse_role(std::string_view s);
std::string_view to_string(AuthorRole r);
std::string_view to_string(Label l);

/// Instructors and teaching assistants both count as staff.
constexpr bool is_staff(AuthorRole r) { return r != AuthorRole::student; }

/// The four sub-forums kept for modelling.
constexpr bool is_content_subforum(SubForumType s) {
  return s == SubForumType::errata || s == SubForumType::exam ||
         s == SubForumType::lecture || s == SubForumType::homework;
}

/// Microseconds since the Unix epoch, UTC.
struct Timestamp {
  std::int64_t micros = 0;
  auto operator<=>(const Timestamp&) const = default;
};

/// Parses an RFC 3339 date-time ("2015-03-01T12:00:00Z", optional fraction,
/// "Z" or a numeric offset). Throws std::invalid_argument on bad input.
Timestamp parse_rfc3339(std::string_view s);
/// Formats as "YYYY-MM-DDTHH:MM:SS[.ffffff]Z".
std::string format_rfc3339(Timestamp t);

struct Post {
  std::string post_id;
  std::string author_id;
  AuthorRole role = AuthorRole::student;
  Timestamp timestamp;
  std::string text;
  std::optional<std::string> parent_post_id;

  bool is_comment() const { return parent_post_id.has_value(); }
};

struct Thread {
  std::string course_id;
  std::string thread_id;
  SubForumType subforum = SubForumType::general;
  std::vector<Post> posts;  // chronological
  Label label = Label::not_intervened;
};

struct LoadResult {
  std::vector<Thread> threads;
  /// Number of records whose posts arrived out of timestamp order.
  std::size_t resorted_threads = 0;
};

/// Reads a line-delimited JSON corpus file (see docs/corpus-format.md).
LoadResult load_corpus(const std::filesystem::path& path);
/// Same, from an in-memory buffer.
LoadResult parse_corpus(std::string_view contents);

/// Serializes one thread as a corpus record (single line, no newline).
std::string to_record(const Thread& thread);

/// Drops non-content sub-forums and staff-initiated threads, truncates after
/// the first staff post and assigns labels.
std::vector<Thread> filter_and_label(const std::vector<Thread>& raw);

/// Checks the post-filter thread invariants. Returns an empty string when the
/// thread is valid, otherwise a description of the first violation.
std::string check_thread_invariants(const Thread& thread);

struct CourseCounts {
  std::size_t intervened = 0;
  std::size_t non_intervened = 0;

  std::size_t total() const { return intervened + non_intervened; }
  /// intervened / non_intervened; absent when there are no negatives.
  std::optional<double> intervention_ratio() const;
};

struct CorpusStats {
  std::map<std::string, CourseCounts> per_course;

  std::size_t total_intervened() const;
  std::size_t total_non_intervened() const;
  /// Aligned "course intervened non-intervened ratio" table.
  std::string to_table() const;
};

CorpusStats corpus_stats(const std::vector<Thread>& threads);

/// Two-decimal display of a ratio, "-" when absent.
std::string format_ratio(std::optional<double> ratio);

/// Groups threads by course id, preserving input order within each course.
std::map<std::string, std::vector<Thread>> group_by_course(
    const std::vector<Thread>& threads);

}  // namespace forum_sentinel
