#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "forum_sentinel/corpus.hpp"
#include "forum_sentinel/discourse.hpp"
#include "forum_sentinel/features.hpp"
#include "forum_sentinel/textprep.hpp"

namespace test_support {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(FORUM_SENTINEL_DATA_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("forum-sentinel-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Tab-separated fixture rows, skipping '#' comments.
inline std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

inline const forum_sentinel::ConnectiveLexicon& default_lexicon() {
  static const auto lex = forum_sentinel::ConnectiveLexicon::load(data_path("connectives.tsv"));
  return lex;
}

inline const forum_sentinel::StopwordList& default_stopwords() {
  static const auto sw = forum_sentinel::StopwordList::load(data_path("stopwords.txt"));
  return sw;
}

inline const forum_sentinel::AffirmationList& default_affirmations() {
  static const auto a = forum_sentinel::AffirmationList::load(data_path("affirmations.txt"));
  return a;
}

inline forum_sentinel::PrepResources default_resources() {
  forum_sentinel::PrepResources r;
  r.stopwords = &default_stopwords();
  r.lexicon = &default_lexicon();
  r.affirmations = &default_affirmations();
  return r;
}

inline forum_sentinel::Post make_post(const std::string& id, forum_sentinel::AuthorRole role,
                                      std::int64_t minute, const std::string& text,
                                      std::optional<std::string> parent = std::nullopt) {
  forum_sentinel::Post p;
  p.post_id = id;
  p.author_id = "a-" + id;
  p.role = role;
  p.timestamp = forum_sentinel::Timestamp{(1420416000 + minute * 60) * 1'000'000LL};
  p.text = text;
  p.parent_post_id = std::move(parent);
  return p;
}

}  // namespace test_support
