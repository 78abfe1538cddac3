#include "forum_sentinel/corpus.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace forum_sentinel {

using json = nlohmann::json;

CorpusError::CorpusError(std::size_t line, const std::string& what)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                              : what),
      line_(line) {}

namespace {

constexpr std::array<std::pair<std::string_view, SubForumType>, 8> kSubForums{{
    {"errata", SubForumType::errata},
    {"exam", SubForumType::exam},
    {"lecture", SubForumType::lecture},
    {"homework", SubForumType::homework},
    {"general", SubForumType::general},
    {"peer_review", SubForumType::peer_review},
    {"study_group", SubForumType::study_group},
    {"technical_issues", SubForumType::technical_issues},
}};

constexpr std::array<std::pair<std::string_view, AuthorRole>, 3> kRoles{{
    {"student", AuthorRole::student},
    {"instructor", AuthorRole::instructor},
    {"teaching_assistant", AuthorRole::teaching_assistant},
}};

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m,
                     unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

unsigned days_in_month(std::int64_t y, unsigned m) {
  static constexpr std::array<unsigned, 12> kDays{31, 28, 31, 30, 31, 30,
                                                  31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : kDays[m - 1];
}

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  unsigned digits(std::size_t n) {
    unsigned v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pos_ >= s_.size() || s_[pos_] < '0' || s_[pos_] > '9') fail();
      v = v * 10 + static_cast<unsigned>(s_[pos_++] - '0');
    }
    return v;
  }
  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) fail();
    ++pos_;
  }
  bool accept(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept_any(std::string_view cs) {
    if (pos_ < s_.size() && cs.find(s_[pos_]) != std::string_view::npos) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  bool done() const { return pos_ == s_.size(); }
  [[noreturn]] void fail() const {
    throw std::invalid_argument("invalid RFC 3339 timestamp: " +
                                std::string(s_));
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw CorpusError(line, std::string("missing field '") + key + "'");
  }
  return *it;
}

std::string require_string(const json& obj, const char* key,
                           std::size_t line) {
  const json& v = require(obj, key, line);
  if (!v.is_string()) {
    throw CorpusError(line, std::string("field '") + key + "' must be a string");
  }
  return v.get<std::string>();
}

Thread parse_record(const json& rec, std::size_t line, bool& resorted) {
  if (!rec.is_object()) throw CorpusError(line, "record must be an object");
  Thread t;
  t.course_id = require_string(rec, "course_id", line);
  t.thread_id = require_string(rec, "thread_id", line);
  const std::string sub = require_string(rec, "subforum", line);
  try {
    t.subforum = parse_subforum(sub);
  } catch (const std::invalid_argument& e) {
    throw CorpusError(line, e.what());
  }
  const json& posts = require(rec, "posts", line);
  if (!posts.is_array()) throw CorpusError(line, "field 'posts' must be an array");
  if (posts.empty()) throw CorpusError(line, "thread has no posts");

  for (const json& p : posts) {
    if (!p.is_object()) throw CorpusError(line, "post must be an object");
    Post post;
    post.post_id = require_string(p, "post_id", line);
    post.author_id = require_string(p, "author_id", line);
    post.text = require_string(p, "text", line);
    try {
      post.role = parse_role(require_string(p, "role", line));
      post.timestamp = parse_rfc3339(require_string(p, "timestamp", line));
    } catch (const std::invalid_argument& e) {
      throw CorpusError(line, e.what());
    }
    if (auto it = p.find("parent_post_id"); it != p.end() && !it->is_null()) {
      if (!it->is_string()) {
        throw CorpusError(line, "field 'parent_post_id' must be a string");
      }
      post.parent_post_id = it->get<std::string>();
    }
    t.posts.push_back(std::move(post));
  }

  std::unordered_set<std::string> ids;
  std::unordered_set<std::string> top_level;
  for (const Post& p : t.posts) {
    if (!ids.insert(p.post_id).second) {
      throw CorpusError(line, "duplicate post_id '" + p.post_id + "'");
    }
    if (!p.is_comment()) top_level.insert(p.post_id);
  }
  for (const Post& p : t.posts) {
    if (p.is_comment() && !top_level.contains(*p.parent_post_id)) {
      throw CorpusError(line, "post '" + p.post_id +
                                  "' references unknown top-level post '" +
                                  *p.parent_post_id + "'");
    }
  }

  auto by_time = [](const Post& a, const Post& b) {
    return a.timestamp < b.timestamp;
  };
  resorted = !std::is_sorted(t.posts.begin(), t.posts.end(), by_time);
  if (resorted) std::stable_sort(t.posts.begin(), t.posts.end(), by_time);
  return t;
}

}  // namespace

SubForumType parse_subforum(std::string_view s) {
  for (const auto& [name, value] : kSubForums) {
    if (name == s) return value;
  }
  throw std::invalid_argument("unknown subforum '" + std::string(s) + "'");
}

std::string_view to_string(SubForumType s) {
  for (const auto& [name, value] : kSubForums) {
    if (value == s) return name;
  }
  return "?";
}

AuthorRole parse_role(std::string_view s) {
  for (const auto& [name, value] : kRoles) {
    if (name == s) return value;
  }
  throw std::invalid_argument("unknown role '" + std::string(s) + "'");
}

std::string_view to_string(AuthorRole r) {
  for (const auto& [name, value] : kRoles) {
    if (value == r) return name;
  }
  return "?";
}

std::string_view to_string(Label l) {
  return l == Label::intervened ? "intervened" : "not_intervened";
}

Timestamp parse_rfc3339(std::string_view s) {
  Cursor c(s);
  const auto year = static_cast<std::int64_t>(c.digits(4));
  c.expect('-');
  const unsigned month = c.digits(2);
  c.expect('-');
  const unsigned day = c.digits(2);
  if (!c.accept_any("Tt ")) c.fail();
  const unsigned hour = c.digits(2);
  c.expect(':');
  const unsigned minute = c.digits(2);
  c.expect(':');
  const unsigned second = c.digits(2);
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month) ||
      hour > 23 || minute > 59 || second > 60) {
    c.fail();
  }
  std::int64_t micros = 0;
  if (c.accept('.')) {
    int n = 0;
    while (c.peek() >= '0' && c.peek() <= '9') {
      const unsigned d = c.digits(1);
      if (n < 6) micros = micros * 10 + d;
      ++n;
    }
    if (n == 0) c.fail();
    for (; n < 6; ++n) micros *= 10;
  }
  std::int64_t offset_minutes = 0;
  if (!c.accept_any("Zz")) {
    int sign = 0;
    if (c.accept('+')) {
      sign = 1;
    } else if (c.accept('-')) {
      sign = -1;
    } else {
      c.fail();
    }
    const unsigned oh = c.digits(2);
    c.expect(':');
    const unsigned om = c.digits(2);
    if (oh > 23 || om > 59) c.fail();
    offset_minutes = sign * static_cast<std::int64_t>(oh * 60 + om);
  }
  if (!c.done()) c.fail();
  const std::int64_t secs = days_from_civil(year, month, day) * 86400 +
                            hour * 3600 + minute * 60 + second -
                            offset_minutes * 60;
  return Timestamp{secs * 1'000'000 + micros};
}

std::string format_rfc3339(Timestamp t) {
  std::int64_t secs = t.micros / 1'000'000;
  std::int64_t frac = t.micros % 1'000'000;
  if (frac < 0) {
    frac += 1'000'000;
    --secs;
  }
  std::int64_t days = secs / 86400;
  std::int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t y = 0;
  unsigned m = 0, d = 0;
  civil_from_days(days, y, m, d);
  char buf[48];
  if (frac == 0) {
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), m, d,
                  static_cast<long long>(rem / 3600),
                  static_cast<long long>(rem / 60 % 60),
                  static_cast<long long>(rem % 60));
  } else {
    std::snprintf(buf, sizeof buf,
                  "%04lld-%02u-%02uT%02lld:%02lld:%02lld.%06lldZ",
                  static_cast<long long>(y), m, d,
                  static_cast<long long>(rem / 3600),
                  static_cast<long long>(rem / 60 % 60),
                  static_cast<long long>(rem % 60),
                  static_cast<long long>(frac));
  }
  return buf;
}

LoadResult parse_corpus(std::string_view contents) {
  LoadResult result;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorpusError(line_no, std::string("malformed record: ") + e.what());
    }
    bool resorted = false;
    Thread t = parse_record(rec, line_no, resorted);
    if (!seen.emplace(t.course_id, t.thread_id).second) {
      throw CorpusError(line_no, "duplicate thread_id '" + t.thread_id +
                                     "' in course '" + t.course_id + "'");
    }
    result.resorted_threads += resorted;
    result.threads.push_back(std::move(t));
  }
  return result;
}

LoadResult load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(0, "cannot open corpus file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

std::string to_record(const Thread& thread) {
  json posts = json::array();
  for (const Post& p : thread.posts) {
    json jp{{"post_id", p.post_id},
            {"author_id", p.author_id},
            {"role", to_string(p.role)},
            {"timestamp", format_rfc3339(p.timestamp)},
            {"text", p.text}};
    if (p.parent_post_id) jp["parent_post_id"] = *p.parent_post_id;
    posts.push_back(std::move(jp));
  }
  json rec{{"course_id", thread.course_id},
           {"thread_id", thread.thread_id},
           {"subforum", to_string(thread.subforum)},
           {"posts", std::move(posts)}};
  return rec.dump();
}

std::vector<Thread> filter_and_label(const std::vector<Thread>& raw) {
  std::vector<Thread> out;
  out.reserve(raw.size());
  for (const Thread& t : raw) {
    if (!is_content_subforum(t.subforum) || t.posts.empty()) continue;
    if (is_staff(t.posts.front().role)) continue;
    Thread kept = t;
    auto staff = std::find_if(kept.posts.begin(), kept.posts.end(),
                              [](const Post& p) { return is_staff(p.role); });
    if (staff == kept.posts.end()) {
      kept.label = Label::not_intervened;
    } else {
      kept.posts.erase(staff + 1, kept.posts.end());
      kept.label = Label::intervened;
    }
    out.push_back(std::move(kept));
  }
  return out;
}

std::string check_thread_invariants(const Thread& t) {
  if (t.posts.empty()) return "thread has no posts";
  if (!is_content_subforum(t.subforum)) return "non-content subforum";
  if (is_staff(t.posts.front().role)) return "first post is by staff";
  for (std::size_t i = 1; i < t.posts.size(); ++i) {
    if (t.posts[i].timestamp < t.posts[i - 1].timestamp) {
      return "posts are not chronological";
    }
  }
  const auto staff_count =
      std::count_if(t.posts.begin(), t.posts.end(),
                    [](const Post& p) { return is_staff(p.role); });
  if (t.label == Label::intervened) {
    if (staff_count != 1 || !is_staff(t.posts.back().role)) {
      return "intervened thread must end at its only staff post";
    }
  } else if (staff_count != 0) {
    return "non-intervened thread contains a staff post";
  }
  return {};
}

std::optional<double> CourseCounts::intervention_ratio() const {
  if (non_intervened == 0) return std::nullopt;
  return static_cast<double>(intervened) / static_cast<double>(non_intervened);
}

std::size_t CorpusStats::total_intervened() const {
  std::size_t n = 0;
  for (const auto& [_, c] : per_course) n += c.intervened;
  return n;
}

std::size_t CorpusStats::total_non_intervened() const {
  std::size_t n = 0;
  for (const auto& [_, c] : per_course) n += c.non_intervened;
  return n;
}

std::string format_ratio(std::optional<double> ratio) {
  if (!ratio) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *ratio);
  return buf;
}

std::string CorpusStats::to_table() const {
  std::size_t width = 6;
  for (const auto& [course, _] : per_course) width = std::max(width, course.size());
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-*s %10s %14s %7s\n",
                static_cast<int>(width), "course", "intervened",
                "non_intervened", "ratio");
  os << buf;
  for (const auto& [course, c] : per_course) {
    std::snprintf(buf, sizeof buf, "%-*s %10zu %14zu %7s\n",
                  static_cast<int>(width), course.c_str(), c.intervened,
                  c.non_intervened, format_ratio(c.intervention_ratio()).c_str());
    os << buf;
  }
  return os.str();
}

CorpusStats corpus_stats(const std::vector<Thread>& threads) {
  CorpusStats stats;
  for (const Thread& t : threads) {
    CourseCounts& c = stats.per_course[t.course_id];
    if (t.label == Label::intervened) {
      ++c.intervened;
    } else {
      ++c.non_intervened;
    }
  }
  return stats;
}

std::map<std::string, std::vector<Thread>> group_by_course(
    const std::vector<Thread>& threads) {
  std::map<std::string, std::vector<Thread>> out;
  for (const Thread& t : threads) out[t.course_id].push_back(t);
  return out;
}

}  // namespace forum_sentinel
