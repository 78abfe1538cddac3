#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "forum_sentinel/corpus.hpp"
#include "forum_sentinel/discourse.hpp"
#include "forum_sentinel/textprep.hpp"

namespace forum_sentinel {

enum class FeatureConfig { edm15, pdtb, eplusp };

std::string_view to_string(FeatureConfig c);
FeatureConfig parse_feature_config(std::string_view s);

/// Denominator of the absolute sense frequencies.
enum class LengthNormalizer { token, post, sentence };
enum class UnigramMode { counts, binary };

LengthNormalizer parse_length_normalizer(std::string_view s);
UnigramMode parse_unigram_mode(std::string_view s);

class FeatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// Ordered, immutable registry of feature names.
class FeatureSpace {
 public:
  FeatureSpace(std::vector<std::string> names, std::string provenance);

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<std::size_t> find(std::string_view name) const;
  const std::string& provenance() const { return provenance_; }
  /// Hash of the ordered names.
  std::uint64_t hash() const { return hash_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
  std::string provenance_;
  std::uint64_t hash_;
};

using FeatureSpacePtr = std::shared_ptr<const FeatureSpace>;

/// Sparse vector over a FeatureSpace. Entries are sorted by index and only
/// hold nonzero values.
struct FeatureVector {
  FeatureSpacePtr space;
  std::vector<std::pair<std::uint32_t, double>> entries;

  double at(std::size_t index) const;
  double value(std::string_view name) const;
  /// Dense copy, length space->size().
  std::vector<double> dense() const;
  bool operator==(const FeatureVector& o) const {
    return space->hash() == o.space->hash() && entries == o.entries;
  }
};

/// Unigram index built from training threads only; immutable afterwards.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> tokens);  // sorted + deduplicated

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<std::size_t> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  std::uint64_t hash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Affirmation phrases, each stored as a token sequence.
class AffirmationList {
 public:
  explicit AffirmationList(const std::vector<std::string>& phrases);
  static AffirmationList load(const std::filesystem::path& path);

  /// True when any phrase occurs as a contiguous token subsequence.
  bool matches(const std::vector<std::string>& tokens) const;
  std::size_t size() const { return phrases_.size(); }

 private:
  std::vector<std::vector<std::string>> phrases_;
};

/// Shared read-only resources for thread preparation.
struct PrepResources {
  const StopwordList* stopwords = nullptr;
  const ConnectiveLexicon* lexicon = nullptr;   // needed for discourse tags
  const TagImport* imported_tags = nullptr;     // overrides the lexicon tagger
  const AffirmationList* affirmations = nullptr;
  TaggerOptions tagger;
};

/// A thread with its text processed once for every feature block. Only the
/// student posts before the intervention are observable: staff posts are
/// removed from `thread.posts`, while `thread.label` keeps the outcome.
struct PreparedThread {
  Thread thread;
  std::vector<TokenizedPost> posts;
  std::vector<std::vector<std::string>> content_tokens;  // filtered, per post
  std::vector<PostDiscourse> discourse;                   // per post
  bool has_discourse = false;
  bool affirmation = false;

  std::size_t token_count() const;
  std::size_t sentence_count() const;
};

PreparedThread prepare_thread(const Thread& thread, const PrepResources& res);
std::vector<PreparedThread> prepare_threads(const std::vector<Thread>& threads,
                                            const PrepResources& res,
                                            unsigned jobs = 1);

/// Names of the 25 discourse features, in emission order.
const std::vector<std::string>& pdtb_feature_names();
inline constexpr std::size_t kPdtbFeatureCount = 25;

/// The 25 discourse features: total sense count; absolute and relative
/// frequency per sense; within-post adjacent sense-pair proportions.
/// Throws FeatureError when thread_length is 0 but tags exist.
std::array<double, kPdtbFeatureCount> pdtb_features(
    const std::vector<PostDiscourse>& tagging, std::size_t thread_length);

/// Fixed (non-unigram) names of the lexical baseline block, in order.
const std::vector<std::string>& edm15_structural_names();
std::string unigram_feature_name(std::string_view token);

Vocabulary build_vocabulary(const std::vector<PreparedThread>& training);
Vocabulary build_vocabulary(const std::vector<const PreparedThread*>& training);

struct FeatureOptions {
  LengthNormalizer normalizer = LengthNormalizer::token;
  UnigramMode unigrams = UnigramMode::counts;
};

/// Maps prepared threads into one fixed feature space.
class Featurizer {
 public:
  /// Throws FeatureError when the configuration needs a vocabulary and none
  /// is supplied.
  Featurizer(FeatureConfig config, const Vocabulary* vocabulary,
             FeatureOptions options = {});

  const FeatureSpacePtr& space() const { return space_; }
  FeatureConfig config() const { return config_; }
  FeatureVector operator()(const PreparedThread& t) const;

 private:
  void append_edm15(const PreparedThread& t,
                    std::vector<std::pair<std::uint32_t, double>>& out) const;
  void append_pdtb(const PreparedThread& t, std::uint32_t offset,
                   std::vector<std::pair<std::uint32_t, double>>& out) const;

  FeatureConfig config_;
  const Vocabulary* vocabulary_;
  FeatureOptions options_;
  FeatureSpacePtr space_;
};

struct Example {
  FeatureVector features;
  Label label = Label::not_intervened;
  std::string course_id;
  std::string thread_id;
};

struct Dataset {
  FeatureSpacePtr space;
  std::vector<Example> examples;

  std::size_t positives() const;
  std::size_t negatives() const { return examples.size() - positives(); }
};

Dataset vectorize(const std::vector<const PreparedThread*>& threads,
                  const Featurizer& featurizer, unsigned jobs = 1);
Dataset vectorize(const std::vector<PreparedThread>& threads,
                  FeatureConfig config, const Vocabulary* vocabulary,
                  FeatureOptions options = {}, unsigned jobs = 1);

/// Feature dump: header, one "#dim" line per feature name, then one
/// tab-separated record per thread (course_id, thread_id, label, name:value
/// for each nonzero value). Values use 17 significant digits.
void write_feature_dump(std::ostream& os, const Dataset& data,
                        FeatureConfig config);
Dataset read_feature_dump(std::istream& is);

}  // namespace forum_sentinel
