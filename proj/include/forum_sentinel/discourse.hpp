#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "forum_sentinel/corpus.hpp"
#include "forum_sentinel/textprep.hpp"

namespace forum_sentinel {

/// Level-1 senses. The ordinal order is used for feature indexing and for
/// breaking ties between equally weighted senses.
enum class Sense { Temporal = 0, Contingency = 1, Comparison = 2, Expansion = 3 };

inline constexpr std::size_t kSenseCount = 4;
inline constexpr std::array<Sense, kSenseCount> kAllSenses{
    Sense::Temporal, Sense::Contingency, Sense::Comparison, Sense::Expansion};

std::string_view to_string(Sense s);
/// Accepts the full names as printed by to_string.
Sense parse_sense(std::string_view s);
constexpr std::size_t index_of(Sense s) { return static_cast<std::size_t>(s); }

class LexiconError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LexiconEntry {
  std::string surface;  // lowercase, words separated by single spaces
  double discourse_prior = 0.0;
  std::array<double, kSenseCount> sense_weights{};

  /// argmax of sense_weights, ties resolved by ordinal order.
  Sense dominant_sense() const;
};

/// Maximum number of tokens in a multiword connective.
inline constexpr std::size_t kMaxConnectiveTokens = 4;

class ConnectiveLexicon {
 public:
  ConnectiveLexicon() = default;
  /// Validates entries; throws LexiconError on bad priors, weights,
  /// duplicate surfaces or surfaces longer than kMaxConnectiveTokens.
  explicit ConnectiveLexicon(std::vector<LexiconEntry> entries);

  /// Tab-separated: surface, prior, four weights. '#' starts a comment line.
  static ConnectiveLexicon load(const std::filesystem::path& path);
  static ConnectiveLexicon parse(std::string_view contents);

  std::size_t size() const { return entries_.size(); }
  const std::vector<LexiconEntry>& entries() const { return entries_; }
  const LexiconEntry* find(std::string_view surface) const;

  /// Copy without the given surface.
  ConnectiveLexicon without(std::string_view surface) const;

 private:
  std::vector<LexiconEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct TaggedConnective {
  std::size_t token_begin = 0;
  std::size_t token_end = 0;  // exclusive
  std::string surface;
  Sense sense = Sense::Expansion;

  bool operator==(const TaggedConnective&) const = default;
};

/// Connectives found in one post, ordered by token position.
using PostDiscourse = std::vector<TaggedConnective>;

struct TaggerOptions {
  double prior_threshold = 0.5;
};

/// A lexicon surface matched in the token stream, before acceptance.
struct ConnectiveCandidate {
  std::size_t token_begin = 0;
  std::size_t token_end = 0;
  const LexiconEntry* entry = nullptr;
};

/// All lexicon matches at every position, sorted by (begin, length).
std::vector<ConnectiveCandidate> find_candidates(
    const std::vector<std::string>& tokens, const ConnectiveLexicon& lexicon);

/// Tags explicit connectives in one post.
///
/// Overlapping lexicon matches are resolved in favour of the longer match,
/// then the leftmost. A surviving match is kept when its prior reaches the
/// threshold, or when it starts a sentence, or when a comma token sits
/// immediately before or after it.
PostDiscourse tag_post(const TokenizedPost& post,
                       const ConnectiveLexicon& lexicon,
                       const TaggerOptions& options = {});

/// Externally produced tags keyed by (course_id, thread_id, post_id).
class TagImport {
 public:
  using Key = std::tuple<std::string, std::string, std::string>;

  /// One record per line: course_id, thread_id, post_id, then zero or more
  /// "begin,end,Sense" fields, all tab-separated.
  static TagImport load(const std::filesystem::path& path);
  static TagImport parse(std::string_view contents);

  void set(Key key, PostDiscourse tags);
  const PostDiscourse* find(const Key& key) const;
  std::size_t size() const { return records_.size(); }

 private:
  std::map<Key, PostDiscourse> records_;
};

/// Tags each post of the thread independently. When `imported` is given the
/// stored tags are returned verbatim (posts without a record get none).
std::vector<PostDiscourse> tag_thread(const Thread& thread,
                                      const std::vector<TokenizedPost>& posts,
                                      const ConnectiveLexicon& lexicon,
                                      const TagImport* imported = nullptr,
                                      const TaggerOptions& options = {});

/// Renders tags for one post as a tag-import record line (no newline).
std::string format_tag_record(const std::string& course_id,
                              const std::string& thread_id,
                              const std::string& post_id,
                              const PostDiscourse& tags);

struct SenseDistribution {
  std::array<std::size_t, kSenseCount> counts{};
  std::size_t total = 0;

  void add(const PostDiscourse& tags);
  /// Percentage per sense, absent when nothing was tagged.
  std::optional<std::array<double, kSenseCount>> percentages() const;
  /// Table with sense names as columns and rounded percentages.
  std::string to_table() const;
};

SenseDistribution sense_distribution(
    const std::vector<std::vector<PostDiscourse>>& tagged_threads);

}  // namespace forum_sentinel
