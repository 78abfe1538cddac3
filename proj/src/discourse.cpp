#include "forum_sentinel/discourse.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace forum_sentinel {

namespace {

constexpr std::array<std::string_view, kSenseCount> kSenseNames{
    "Temporal", "Contingency", "Comparison", "Expansion"};

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos
                                      ? std::string_view::npos
                                      : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::size_t> parse_index(std::string_view s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return v;
}

// Lowercases and collapses internal whitespace to single spaces.
std::string normalize_surface(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error(std::string("cannot open ") + what + " " +
                             path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

}  // namespace

std::string_view to_string(Sense s) { return kSenseNames[index_of(s)]; }

Sense parse_sense(std::string_view s) {
  for (std::size_t i = 0; i < kSenseCount; ++i) {
    if (kSenseNames[i] == s) return kAllSenses[i];
  }
  throw std::invalid_argument("unknown sense '" + std::string(s) + "'");
}

Sense LexiconEntry::dominant_sense() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kSenseCount; ++i) {
    if (sense_weights[i] > sense_weights[best]) best = i;
  }
  return kAllSenses[best];
}

ConnectiveLexicon::ConnectiveLexicon(std::vector<LexiconEntry> entries) {
  for (LexiconEntry& e : entries) {
    e.surface = normalize_surface(e.surface);
    if (e.surface.empty()) throw LexiconError("empty connective surface");
    if (!(e.discourse_prior >= 0.0 && e.discourse_prior <= 1.0)) {
      throw LexiconError("discourse prior of '" + e.surface +
                         "' is outside [0, 1]");
    }
    bool positive = false;
    for (double w : e.sense_weights) {
      if (!std::isfinite(w) || w < 0.0) {
        throw LexiconError("sense weights of '" + e.surface +
                           "' must be finite and nonnegative");
      }
      positive = positive || w > 0.0;
    }
    if (!positive) {
      throw LexiconError("'" + e.surface + "' has no positive sense weight");
    }
    const auto words =
        static_cast<std::size_t>(std::count(e.surface.begin(), e.surface.end(), ' ')) + 1;
    if (words > kMaxConnectiveTokens) {
      throw LexiconError("'" + e.surface + "' exceeds " +
                         std::to_string(kMaxConnectiveTokens) + " tokens");
    }
    if (!index_.emplace(e.surface, entries_.size()).second) {
      throw LexiconError("duplicate connective '" + e.surface + "'");
    }
    entries_.push_back(std::move(e));
  }
}

ConnectiveLexicon ConnectiveLexicon::parse(std::string_view contents) {
  std::vector<LexiconEntry> entries;
  std::size_t line_no = 0;
  for (std::string_view line : split(contents, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2 + kSenseCount) {
      throw LexiconError(line_error(
          line_no, "expected 6 tab-separated fields, got " +
                       std::to_string(fields.size())));
    }
    LexiconEntry e;
    e.surface = std::string(fields[0]);
    const auto prior = parse_double(fields[1]);
    if (!prior) throw LexiconError(line_error(line_no, "bad discourse prior"));
    e.discourse_prior = *prior;
    for (std::size_t i = 0; i < kSenseCount; ++i) {
      const auto w = parse_double(fields[2 + i]);
      if (!w) throw LexiconError(line_error(line_no, "bad sense weight"));
      e.sense_weights[i] = *w;
    }
    try {
      // Validate per line so errors carry the line number.
      ConnectiveLexicon single({e});
    } catch (const LexiconError& err) {
      throw LexiconError(line_error(line_no, err.what()));
    }
    entries.push_back(std::move(e));
  }
  try {
    return ConnectiveLexicon(std::move(entries));
  } catch (const LexiconError& err) {
    throw LexiconError(std::string("lexicon: ") + err.what());
  }
}

ConnectiveLexicon ConnectiveLexicon::load(const std::filesystem::path& path) {
  return parse(read_file(path, "lexicon"));
}

const LexiconEntry* ConnectiveLexicon::find(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

ConnectiveLexicon ConnectiveLexicon::without(std::string_view surface) const {
  std::vector<LexiconEntry> kept;
  for (const LexiconEntry& e : entries_) {
    if (e.surface != surface) kept.push_back(e);
  }
  return ConnectiveLexicon(std::move(kept));
}

std::vector<ConnectiveCandidate> find_candidates(
    const std::vector<std::string>& tokens, const ConnectiveLexicon& lexicon) {
  std::vector<ConnectiveCandidate> out;
  std::string key;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    key.clear();
    for (std::size_t len = 1; len <= kMaxConnectiveTokens && i + len <= tokens.size();
         ++len) {
      if (len > 1) key.push_back(' ');
      key.append(tokens[i + len - 1]);
      if (const LexiconEntry* e = lexicon.find(key)) {
        out.push_back({i, i + len, e});
      }
    }
  }
  return out;
}

PostDiscourse tag_post(const TokenizedPost& post,
                       const ConnectiveLexicon& lexicon,
                       const TaggerOptions& options) {
  std::vector<ConnectiveCandidate> candidates =
      find_candidates(post.tokens, lexicon);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const ConnectiveCandidate& a, const ConnectiveCandidate& b) {
                     const auto la = a.token_end - a.token_begin;
                     const auto lb = b.token_end - b.token_begin;
                     if (la != lb) return la > lb;
                     return a.token_begin < b.token_begin;
                   });

  std::vector<bool> used(post.tokens.size(), false);
  std::vector<ConnectiveCandidate> selected;
  for (const ConnectiveCandidate& c : candidates) {
    if (std::any_of(used.begin() + static_cast<std::ptrdiff_t>(c.token_begin),
                    used.begin() + static_cast<std::ptrdiff_t>(c.token_end),
                    [](bool u) { return u; })) {
      continue;
    }
    std::fill(used.begin() + static_cast<std::ptrdiff_t>(c.token_begin),
              used.begin() + static_cast<std::ptrdiff_t>(c.token_end), true);
    selected.push_back(c);
  }
  std::sort(selected.begin(), selected.end(),
            [](const ConnectiveCandidate& a, const ConnectiveCandidate& b) {
              return a.token_begin < b.token_begin;
            });

  auto sentence_initial = [&](std::size_t begin) {
    return std::any_of(post.sentences.begin(), post.sentences.end(),
                       [&](const SentenceRange& r) { return r.begin == begin; });
  };
  auto comma_adjacent = [&](const ConnectiveCandidate& c) {
    return (c.token_begin > 0 && post.tokens[c.token_begin - 1] == ",") ||
           (c.token_end < post.tokens.size() && post.tokens[c.token_end] == ",");
  };

  PostDiscourse out;
  for (const ConnectiveCandidate& c : selected) {
    const bool accepted = c.entry->discourse_prior >= options.prior_threshold ||
                          sentence_initial(c.token_begin) || comma_adjacent(c);
    if (accepted) {
      out.push_back({c.token_begin, c.token_end, c.entry->surface,
                     c.entry->dominant_sense()});
    }
  }
  return out;
}

TagImport TagImport::parse(std::string_view contents) {
  TagImport imp;
  std::size_t line_no = 0;
  for (std::string_view line : split(contents, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() < 3) {
      throw std::runtime_error(line_error(line_no, "tag record needs course_id, "
                                                   "thread_id and post_id"));
    }
    PostDiscourse tags;
    for (std::size_t i = 3; i < fields.size(); ++i) {
      const auto parts = split(fields[i], ',');
      if (parts.size() != 3) {
        throw std::runtime_error(line_error(line_no, "bad tag triple '" +
                                                         std::string(fields[i]) + "'"));
      }
      const auto begin = parse_index(parts[0]);
      const auto end = parse_index(parts[1]);
      if (!begin || !end || *begin >= *end) {
        throw std::runtime_error(line_error(line_no, "bad token span '" +
                                                         std::string(fields[i]) + "'"));
      }
      if (!tags.empty() && *begin < tags.back().token_end) {
        throw std::runtime_error(
            line_error(line_no, "tag spans overlap or are out of order"));
      }
      TaggedConnective t;
      t.token_begin = *begin;
      t.token_end = *end;
      try {
        t.sense = parse_sense(parts[2]);
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error(line_error(line_no, e.what()));
      }
      tags.push_back(std::move(t));
    }
    Key key{std::string(fields[0]), std::string(fields[1]), std::string(fields[2])};
    if (imp.records_.contains(key)) {
      throw std::runtime_error(line_error(line_no, "duplicate tag record"));
    }
    imp.records_.emplace(std::move(key), std::move(tags));
  }
  return imp;
}

TagImport TagImport::load(const std::filesystem::path& path) {
  return parse(read_file(path, "tag file"));
}

void TagImport::set(Key key, PostDiscourse tags) {
  records_[std::move(key)] = std::move(tags);
}

const PostDiscourse* TagImport::find(const Key& key) const {
  auto it = records_.find(key);
  return it == records_.end() ? nullptr : &it->second;
}

std::vector<PostDiscourse> tag_thread(const Thread& thread,
                                      const std::vector<TokenizedPost>& posts,
                                      const ConnectiveLexicon& lexicon,
                                      const TagImport* imported,
                                      const TaggerOptions& options) {
  if (posts.size() != thread.posts.size()) {
    throw std::invalid_argument("tag_thread: one tokenized post per post required");
  }
  std::vector<PostDiscourse> out;
  out.reserve(posts.size());
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (imported == nullptr) {
      out.push_back(tag_post(posts[i], lexicon, options));
      continue;
    }
    const PostDiscourse* found = imported->find(
        {thread.course_id, thread.thread_id, thread.posts[i].post_id});
    PostDiscourse tags = found ? *found : PostDiscourse{};
    for (TaggedConnective& t : tags) {
      if (t.surface.empty() && t.token_end <= posts[i].tokens.size()) {
        for (std::size_t k = t.token_begin; k < t.token_end; ++k) {
          if (k > t.token_begin) t.surface.push_back(' ');
          t.surface.append(posts[i].tokens[k]);
        }
      }
    }
    out.push_back(std::move(tags));
  }
  return out;
}

std::string format_tag_record(const std::string& course_id,
                              const std::string& thread_id,
                              const std::string& post_id,
                              const PostDiscourse& tags) {
  std::string out = course_id + '\t' + thread_id + '\t' + post_id;
  for (const TaggedConnective& t : tags) {
    out += '\t';
    out += std::to_string(t.token_begin) + ',' + std::to_string(t.token_end) +
           ',' + std::string(to_string(t.sense));
  }
  return out;
}

void SenseDistribution::add(const PostDiscourse& tags) {
  for (const TaggedConnective& t : tags) {
    ++counts[index_of(t.sense)];
    ++total;
  }
}

std::optional<std::array<double, kSenseCount>> SenseDistribution::percentages()
    const {
  if (total == 0) return std::nullopt;
  std::array<double, kSenseCount> pct{};
  for (std::size_t i = 0; i < kSenseCount; ++i) {
    pct[i] = 100.0 * static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return pct;
}

std::string SenseDistribution::to_table() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < kSenseCount; ++i) {
    os << std::setw(12) << kSenseNames[i];
  }
  os << '\n';
  const auto pct = percentages();
  for (std::size_t i = 0; i < kSenseCount; ++i) {
    if (pct) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(0) << (*pct)[i] << '%';
      os << std::setw(12) << cell.str();
    } else {
      os << std::setw(12) << "-";
    }
  }
  os << '\n';
  return os.str();
}

SenseDistribution sense_distribution(
    const std::vector<std::vector<PostDiscourse>>& tagged_threads) {
  SenseDistribution d;
  for (const auto& thread : tagged_threads) {
    for (const PostDiscourse& post : thread) d.add(post);
  }
  return d;
}

}  // namespace forum_sentinel
