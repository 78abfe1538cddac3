#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace forum_sentinel {

// Placeholder tokens substituted for non-lexical spans. They survive
// tokenization verbatim (uppercase) and are never filtered.
inline constexpr std::string_view kEquToken = "EQU";
inline constexpr std::string_view kUrlToken = "URL";
inline constexpr std::string_view kTimeRefToken = "TIMEREF";

bool is_placeholder(std::string_view token);

struct ReplacementCounts {
  std::size_t equ = 0;
  std::size_t url = 0;
  std::size_t timeref = 0;

  bool operator==(const ReplacementCounts&) const = default;
};

struct ReplacedText {
  std::string text;
  ReplacementCounts counts;
};

/// Replaces URLs, equations and clock times with placeholder tokens.
///
/// Patterns, applied in this order:
///  - equations delimited by a pair of '$' characters (may contain spaces);
///  - whitespace-delimited runs starting with http://, https://, ftp:// or
///    www. (trailing sentence punctuation is left in place);
///  - whitespace-delimited runs holding a digit and at least two of
///    '=', '+', '^', '/', '\' (trailing sentence punctuation left in place);
///  - clock times h:mm, hh:mm, with optional :ss, not adjacent to other digits.
ReplacedText replace_nonlexical(std::string_view text);

struct SentenceRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  bool operator==(const SentenceRange&) const = default;
};

struct TokenizedPost {
  std::vector<std::string> tokens;
  std::vector<SentenceRange> sentences;
  ReplacementCounts replaced_counts;
};

/// Splits already-replaced text into lowercase word and punctuation tokens.
///
/// A word is a run of letters, digits, non-ASCII bytes and inner apostrophes
/// (decimal points between digits stay inside the word). Every other
/// non-space character is its own token, except that runs of '.', '!' and
/// '?' collapse into one token. A sentence ends at a single terminal mark
/// ('.', '!' or '?') followed by whitespace and an uppercase letter, or at
/// the end of text. Collapsed runs such as "!!" or "..." only end a sentence
/// at the end of text.
TokenizedPost tokenize(std::string_view text);

/// replace_nonlexical followed by tokenize, carrying the counts through.
TokenizedPost prepare_text(std::string_view raw_text);

class StopwordList {
 public:
  StopwordList() = default;
  explicit StopwordList(std::vector<std::string> words);

  /// One lowercase word per line; blank lines ignored.
  static StopwordList load(const std::filesystem::path& path);

  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

/// Number of UTF-8 code points in `s`.
std::size_t utf8_length(std::string_view s);

/// Drops stopwords and tokens shorter than three characters; placeholders
/// are always kept. Only the lexical baseline uses this.
std::vector<std::string> content_filter(const std::vector<std::string>& tokens,
                                        const StopwordList& stopwords);

}  // namespace forum_sentinel
