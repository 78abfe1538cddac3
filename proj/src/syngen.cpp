#include "forum_sentinel/syngen.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include <json.hpp>

#include "forum_sentinel/eval.hpp"

namespace forum_sentinel {

using json = nlohmann::json;

namespace {

constexpr std::size_t kContentPoolSize = 400;
constexpr std::size_t kHotPoolSize = 25;
// 2015-01-05T00:00:00Z
constexpr std::int64_t kEpochSeconds = 1420416000;

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

// Pool ids: 0 shared content, 1 shared hot words, 2 + 2c course content,
// 3 + 2c course hot words. Words are four consonant-vowel syllables, a
// bijection of (pool, index), so distinct pools never share a word.
std::string pool_word(std::size_t pool, std::size_t index) {
  const std::size_t syllables = kConsonants.size() * kVowels.size();
  std::size_t n = pool * 100000 + index;
  std::string w;
  for (int i = 0; i < 4; ++i) {
    const std::size_t s = n % syllables;
    n /= syllables;
    w.push_back(kConsonants[s / kVowels.size()]);
    w.push_back(kVowels[s % kVowels.size()]);
  }
  return w;
}

class ThreadWriter {
 public:
  ThreadWriter(const GenSpec& spec, std::size_t course, std::mt19937_64& rng)
      : spec_(spec), course_(course), rng_(rng) {}

  bool chance(double p) {
    // 53-bit uniform in [0, 1).
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return u < p;
  }
  std::size_t pick(std::size_t n) { return uniform_below(rng_, n); }

  std::string content_word() {
    const bool own = chance(spec_.vocabulary_disjointness);
    return pool_word(own ? 2 + 2 * course_ : 0, pick(kContentPoolSize));
  }
  std::string hot_word() {
    const bool own = chance(spec_.vocabulary_disjointness);
    return pool_word(own ? 3 + 2 * course_ : 1, pick(kHotPoolSize));
  }

  std::string words(std::size_t n, bool hot) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) out.push_back(' ');
      out += hot && chance(0.35) ? hot_word() : content_word();
    }
    return out;
  }

  static std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
  }

  std::string content_sentence(bool hot) {
    std::string s;
    switch (pick(3)) {
      case 0:
        s = "I have a question about the " + words(2 + pick(3), hot) + ".";
        break;
      case 1:
        s = capitalize(words(4 + pick(4), hot)) + ".";
        break;
      default:
        s = "The " + words(3 + pick(3), hot) + " is " + words(2, hot) + ".";
        break;
    }
    if (chance(0.08)) s += " See https://example.org/notes/" + std::to_string(pick(1000)) + ".";
    if (chance(0.08)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " At %zu:%02zu in the video.", 1 + pick(12), pick(60));
      s += buf;
    }
    return s;
  }

  // Connectives planted here are all default-lexicon surfaces and all
  // stopwords, so only the discourse features see them.
  std::string signal_sentence(bool hot) {
    auto w = [&](std::size_t n) { return words(n, hot); };
    switch (pick(5)) {
      case 0:
        return "If " + w(3) + ", then " + w(3) + ".";
      case 1:
        return "But " + w(4) + ".";
      case 2:
        return capitalize(w(2)) + " because " + w(3) + ".";
      case 3:
        return capitalize(w(2)) + ", but " + w(3) + ".";
      default:
        return "So " + w(4) + "?";
    }
  }

  std::string neutral_sentence(bool hot) {
    auto w = [&](std::size_t n) { return words(n, hot); };
    switch (pick(6)) {
      case 0:
        return capitalize(w(3)) + ", and " + w(3) + ".";
      case 1:
        return "When " + w(3) + ", " + w(3) + ".";
      case 2:
        return "After " + w(4) + ".";
      case 3:
        return capitalize(w(2)) + " or " + w(3) + ".";
      case 4:
        return "Before " + w(2) + ", " + w(3) + ".";
      default:
        return "Once " + w(3) + ", " + w(4) + ".";
    }
  }

  std::string student_text(bool first, bool signal, bool hot) {
    std::vector<std::string> sentences;
    if (!first && chance(0.2)) sentences.push_back(chance(0.5) ? "Thanks." : "Thank you.");
    const std::size_t n_content = 1 + pick(2);
    const std::size_t n_discourse = first ? 2 : 1;
    for (std::size_t i = 0; i < n_content; ++i) sentences.push_back(content_sentence(hot));
    for (std::size_t i = 0; i < n_discourse; ++i) {
      const bool use_signal = signal ? chance(0.85) : chance(0.15);
      const auto pos = static_cast<std::ptrdiff_t>(pick(sentences.size() + 1));
      sentences.insert(sentences.begin() + pos,
                       use_signal ? signal_sentence(hot) : neutral_sentence(hot));
    }
    std::string text;
    for (const std::string& s : sentences) {
      if (!text.empty()) text.push_back(' ');
      text += s;
    }
    return text;
  }

  Thread thread(std::size_t index, bool intervened, SubForumType forum, bool staff_first) {
    Thread t;
    t.course_id = course_name(course_);
    char id[64];
    std::snprintf(id, sizeof id, "%s-t%05zu", t.course_id.c_str(), index);
    t.thread_id = id;
    t.subforum = forum;

    const bool signal = intervened && chance(spec_.discourse_signal_strength);
    const bool hot = intervened ? chance(spec_.lexical_signal_strength) : chance(0.05);
    std::int64_t clock = kEpochSeconds + static_cast<std::int64_t>(course_) * 90 * 86400 +
                         static_cast<std::int64_t>(index) * 3600;
    std::size_t post_no = 0;
    auto add_post = [&](AuthorRole role, std::string text, std::optional<std::string> parent) {
      Post p;
      char pid[96];
      std::snprintf(pid, sizeof pid, "%s-p%02zu", t.thread_id.c_str(), post_no++);
      p.post_id = pid;
      p.role = role;
      p.author_id = role == AuthorRole::student
                        ? "s" + std::to_string(pick(500))
                        : (role == AuthorRole::instructor ? "staff-1" : "staff-ta");
      clock += 60 * static_cast<std::int64_t>(5 + pick(120));
      p.timestamp = Timestamp{clock * 1'000'000};
      p.text = std::move(text);
      p.parent_post_id = std::move(parent);
      t.posts.push_back(std::move(p));
    };

    if (staff_first) {
      add_post(AuthorRole::instructor, "Welcome. " + content_sentence(false), std::nullopt);
    }
    const std::size_t n_students = 1 + pick(4);
    for (std::size_t i = 0; i < n_students; ++i) {
      std::optional<std::string> parent;
      if (i > 0 && chance(0.4)) parent = t.posts.front().post_id;
      add_post(AuthorRole::student, student_text(i == 0, signal, hot), std::move(parent));
    }
    if (intervened) {
      const AuthorRole role =
          chance(0.7) ? AuthorRole::instructor : AuthorRole::teaching_assistant;
      add_post(role, "Thanks for asking. " + content_sentence(false), std::nullopt);
      if (chance(0.3)) add_post(AuthorRole::student, "Thank you, that helps.", std::nullopt);
    }
    return t;
  }

 private:
  const GenSpec& spec_;
  std::size_t course_;
  std::mt19937_64& rng_;
};

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

std::size_t intervened_count_for_ratio(std::size_t n_threads, double ratio) {
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) {
    throw GenSpecError("intervention ratio must be finite and nonnegative");
  }
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(n_threads) * ratio / (1.0 + ratio)));
}

std::string course_name(std::size_t course) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "course-%02zu", course + 1);
  return buf;
}

void GenSpec::validate() const {
  if (n_courses == 0) throw GenSpecError("n_courses must be positive");
  if (threads_per_course == 0) throw GenSpecError("threads_per_course must be positive");
  if (!is_probability(vocabulary_disjointness)) {
    throw GenSpecError("vocabulary_disjointness must lie in [0, 1]");
  }
  if (!is_probability(discourse_signal_strength)) {
    throw GenSpecError("discourse_signal_strength must lie in [0, 1]");
  }
  if (!is_probability(lexical_signal_strength)) {
    throw GenSpecError("lexical_signal_strength must lie in [0, 1]");
  }
  if (intervened_counts) {
    if (intervened_counts->size() != n_courses) {
      throw GenSpecError("intervened_counts needs one entry per course");
    }
  } else if (intervention_ratios.size() != 1 && intervention_ratios.size() != n_courses) {
    throw GenSpecError("intervention_ratios needs one entry or one per course");
  }
  for (std::size_t c = 0; c < n_courses; ++c) {
    if (intervened_for(c) > threads_per_course) {
      throw GenSpecError("course " + course_name(c) + ": requested " +
                         std::to_string(intervened_for(c)) +
                         " intervened threads but only " +
                         std::to_string(threads_per_course) + " threads");
    }
  }
}

std::size_t GenSpec::intervened_for(std::size_t course) const {
  if (intervened_counts) return intervened_counts->at(course);
  const double r = intervention_ratios.size() == 1 ? intervention_ratios.front()
                                                   : intervention_ratios.at(course);
  return intervened_count_for_ratio(threads_per_course, r);
}

GenSpec GenSpec::from_json(std::string_view text) {
  GenSpec s;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw GenSpecError("spec must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "n_courses") {
        s.n_courses = value.get<std::size_t>();
      } else if (key == "threads_per_course") {
        s.threads_per_course = value.get<std::size_t>();
      } else if (key == "intervention_ratio") {
        s.intervention_ratios = {value.get<double>()};
      } else if (key == "intervention_ratios") {
        s.intervention_ratios = value.get<std::vector<double>>();
      } else if (key == "intervened_counts") {
        s.intervened_counts = value.get<std::vector<std::size_t>>();
      } else if (key == "vocabulary_disjointness") {
        s.vocabulary_disjointness = value.get<double>();
      } else if (key == "discourse_signal_strength") {
        s.discourse_signal_strength = value.get<double>();
      } else if (key == "lexical_signal_strength") {
        s.lexical_signal_strength = value.get<double>();
      } else if (key == "extra_filtered_threads") {
        s.extra_filtered_threads = value.get<std::size_t>();
      } else if (key == "seed") {
        s.seed = value.get<std::uint64_t>();
      } else {
        throw GenSpecError("unknown spec field '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw GenSpecError(std::string("bad generator spec: ") + e.what());
  }
  return s;
}

std::string GenSpec::to_json() const {
  json j{{"n_courses", n_courses},
         {"threads_per_course", threads_per_course},
         {"intervention_ratios", intervention_ratios},
         {"vocabulary_disjointness", vocabulary_disjointness},
         {"discourse_signal_strength", discourse_signal_strength},
         {"lexical_signal_strength", lexical_signal_strength},
         {"extra_filtered_threads", extra_filtered_threads},
         {"seed", seed}};
  if (intervened_counts) j["intervened_counts"] = *intervened_counts;
  return j.dump(2);
}

std::vector<Thread> generate_threads(const GenSpec& spec) {
  spec.validate();
  static constexpr std::array<SubForumType, 4> kForums{
      SubForumType::errata, SubForumType::exam, SubForumType::lecture,
      SubForumType::homework};
  static constexpr std::array<SubForumType, 4> kNoisy{
      SubForumType::general, SubForumType::study_group, SubForumType::peer_review,
      SubForumType::technical_issues};

  std::vector<Thread> out;
  for (std::size_t c = 0; c < spec.n_courses; ++c) {
    std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ULL + c + 1);
    ThreadWriter writer(spec, c, rng);

    std::vector<bool> intervened(spec.threads_per_course, false);
    std::fill_n(intervened.begin(), spec.intervened_for(c), true);
    deterministic_shuffle(intervened, rng);

    const std::size_t total = spec.threads_per_course + spec.extra_filtered_threads;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < total; ++i) {
      // Filtered-out threads are spread evenly through the course.
      const bool extra = spec.extra_filtered_threads > 0 &&
                         (i * spec.extra_filtered_threads) / total !=
                             ((i + 1) * spec.extra_filtered_threads) / total;
      if (extra) {
        const bool staff_first = writer.chance(0.5);
        const SubForumType forum =
            staff_first ? kForums[writer.pick(4)] : kNoisy[writer.pick(4)];
        out.push_back(writer.thread(i, writer.chance(0.3), forum, staff_first));
      } else {
        out.push_back(writer.thread(i, intervened[kept++], kForums[writer.pick(4)], false));
      }
    }
  }
  return out;
}

std::string generate_corpus(const GenSpec& spec) {
  std::string out;
  for (const Thread& t : generate_threads(spec)) {
    out += to_record(t);
    out.push_back('\n');
  }
  return out;
}

}  // namespace forum_sentinel
