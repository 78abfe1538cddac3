#include <doctest.h>

#include "forum_sentinel/corpus.hpp"
#include "forum_sentinel/syngen.hpp"
#include "support.hpp"

using namespace forum_sentinel;
using test_support::make_post;

namespace {

std::string rec(const std::string& course, const std::string& thread,
                const std::string& subforum, const std::string& posts) {
  return R"({"course_id":")" + course + R"(","thread_id":")" + thread +
         R"(","subforum":")" + subforum + R"(","posts":[)" + posts + "]}";
}

std::string post(const std::string& id, const std::string& role, const std::string& ts,
                 const std::string& extra = "") {
  return R"({"post_id":")" + id + R"(","author_id":"u","role":")" + role +
         R"(","timestamp":")" + ts + R"(","text":"hello")" + extra + "}";
}

Thread thread_with(std::vector<AuthorRole> roles, SubForumType forum = SubForumType::lecture) {
  Thread t;
  t.course_id = "c";
  t.thread_id = "t";
  t.subforum = forum;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    t.posts.push_back(make_post("p" + std::to_string(i), roles[i], static_cast<int>(i), "x"));
  }
  return t;
}

std::string render(const std::vector<Thread>& ts) {
  std::string s;
  for (const Thread& t : ts) s += to_record(t) + " " + std::string(to_string(t.label)) + "\n";
  return s;
}

}  // namespace

TEST_CASE("timestamps") {
  CHECK(format_rfc3339(parse_rfc3339("2015-03-01T12:00:00Z")) == "2015-03-01T12:00:00Z");
  CHECK(parse_rfc3339("2015-03-01T13:00:00+01:00") == parse_rfc3339("2015-03-01T12:00:00Z"));
  CHECK(parse_rfc3339("1970-01-01T00:00:01.5Z").micros == 1'500'000);
  CHECK(format_rfc3339(parse_rfc3339("2016-02-29T23:59:59.25Z")) ==
        "2016-02-29T23:59:59.250000Z");
  CHECK_THROWS(parse_rfc3339("2015-13-01T00:00:00Z"));
  CHECK_THROWS(parse_rfc3339("yesterday"));
}

TEST_CASE("load_corpus basics") {
  SUBCASE("empty input") { CHECK(parse_corpus("").threads.empty()); }

  SUBCASE("posts out of order are re-sorted and counted") {
    const auto r = parse_corpus(rec("c", "t", "lecture",
                                    post("b", "student", "2015-01-02T00:00:00Z") + "," +
                                        post("a", "student", "2015-01-01T00:00:00Z")));
    REQUIRE(r.threads.size() == 1);
    CHECK(r.threads[0].posts[0].post_id == "a");
    CHECK(r.threads[0].posts[1].post_id == "b");
    CHECK(r.resorted_threads == 1);
  }

  SUBCASE("unknown subforum names the line") {
    const std::string good = rec("c", "t1", "lecture", post("a", "student", "2015-01-01T00:00:00Z"));
    const std::string bad = rec("c", "t2", "off-topic", post("b", "student", "2015-01-01T00:00:00Z"));
    try {
      parse_corpus(good + "\n" + bad + "\n");
      FAIL("expected an error");
    } catch (const CorpusError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("off-topic") != std::string::npos);
    }
  }

  SUBCASE("duplicate thread within a course") {
    const std::string a = rec("c", "t", "lecture", post("a", "student", "2015-01-01T00:00:00Z"));
    const std::string b = rec("c", "t", "exam", post("b", "student", "2015-01-01T00:00:00Z"));
    CHECK_THROWS_AS(parse_corpus(a + "\n" + b), CorpusError);
    const std::string other = rec("d", "t", "exam", post("b", "student", "2015-01-01T00:00:00Z"));
    CHECK(parse_corpus(a + "\n" + other).threads.size() == 2);
  }

  SUBCASE("malformed json") { CHECK_THROWS_AS(parse_corpus("{not json"), CorpusError); }

  SUBCASE("unknown role") {
    CHECK_THROWS_AS(parse_corpus(rec("c", "t", "lecture",
                                     post("a", "moderator", "2015-01-01T00:00:00Z"))),
                    CorpusError);
  }

  SUBCASE("ties keep input order") {
    const auto r = parse_corpus(rec("c", "t", "lecture",
                                    post("z", "student", "2015-01-01T00:00:00Z") + "," +
                                        post("y", "student", "2015-01-01T00:00:00Z")));
    CHECK(r.threads[0].posts[0].post_id == "z");
    CHECK(r.resorted_threads == 0);
  }

  SUBCASE("comments keep their parent") {
    const auto r = parse_corpus(rec(
        "c", "t", "lecture",
        post("a", "student", "2015-01-01T00:00:00Z") + "," +
            post("b", "student", "2015-01-01T01:00:00Z", R"(,"parent_post_id":"a")")));
    CHECK(r.threads[0].posts[1].is_comment());
    CHECK_FALSE(r.threads[0].posts[0].is_comment());
  }
}

TEST_CASE("record round trip") {
  GenSpec spec;
  spec.n_courses = 2;
  spec.threads_per_course = 20;
  spec.extra_filtered_threads = 5;
  const auto threads = generate_threads(spec);
  std::string text;
  for (const Thread& t : threads) text += to_record(t) + "\n";
  const auto back = parse_corpus(text).threads;
  CHECK(render(back) == render(threads));
}

TEST_CASE("filter_and_label") {
  using R = AuthorRole;
  SUBCASE("non-content sub-forums are dropped") {
    for (auto f : {SubForumType::general, SubForumType::study_group, SubForumType::peer_review,
                   SubForumType::technical_issues}) {
      CHECK(filter_and_label({thread_with({R::student}, f)}).empty());
    }
    for (auto f : {SubForumType::errata, SubForumType::exam, SubForumType::lecture,
                   SubForumType::homework}) {
      CHECK(filter_and_label({thread_with({R::student}, f)}).size() == 1);
    }
  }
  SUBCASE("truncated after first staff post") {
    const auto out =
        filter_and_label({thread_with({R::student, R::student, R::instructor, R::student})});
    REQUIRE(out.size() == 1);
    CHECK(out[0].posts.size() == 3);
    CHECK(out[0].posts.back().role == R::instructor);
    CHECK(out[0].label == Label::intervened);
  }
  SUBCASE("teaching assistants count as staff") {
    const auto out = filter_and_label({thread_with({R::student, R::teaching_assistant, R::instructor})});
    REQUIRE(out.size() == 1);
    CHECK(out[0].posts.size() == 2);
    CHECK(out[0].label == Label::intervened);
  }
  SUBCASE("staff-initiated threads are dropped") {
    CHECK(filter_and_label({thread_with({R::instructor, R::student})}).empty());
    CHECK(filter_and_label({thread_with({R::teaching_assistant})}).empty());
  }
  SUBCASE("student-only threads are negative") {
    const auto out = filter_and_label({thread_with({R::student, R::student})});
    REQUIRE(out.size() == 1);
    CHECK(out[0].label == Label::not_intervened);
  }
}

TEST_CASE("filtering is idempotent and keeps the invariants") {
  GenSpec spec;
  spec.n_courses = 3;
  spec.threads_per_course = 60;
  spec.extra_filtered_threads = 25;
  spec.seed = 11;
  const auto raw = generate_threads(spec);
  const auto once = filter_and_label(raw);
  const auto twice = filter_and_label(once);
  CHECK(render(once) == render(twice));
  for (const Thread& t : once) CHECK(check_thread_invariants(t) == "");

  std::size_t positives = 0;
  for (const Thread& t : once) positives += t.label == Label::intervened;
  const CorpusStats stats = corpus_stats(once);
  CHECK(stats.total_intervened() == positives);
  CHECK(stats.total_intervened() + stats.total_non_intervened() == once.size());
}

TEST_CASE("invariant checker catches violations") {
  using R = AuthorRole;
  Thread t = thread_with({R::student, R::instructor, R::student});
  t.label = Label::intervened;
  CHECK(check_thread_invariants(t) != "");
  Thread u = thread_with({R::student, R::student});
  u.label = Label::intervened;
  CHECK(check_thread_invariants(u) != "");
  Thread v = thread_with({R::student, R::instructor});
  v.label = Label::not_intervened;
  CHECK(check_thread_invariants(v) != "");
  Thread w = thread_with({R::student, R::instructor});
  w.label = Label::intervened;
  CHECK(check_thread_invariants(w) == "");
}

TEST_CASE("corpus stats ratios") {
  CourseCounts classic{164, 527};
  CHECK(format_ratio(classic.intervention_ratio()) == "0.31");
  CourseCounts disaster{81, 2332};
  CHECK(format_ratio(disaster.intervention_ratio()) == "0.03");
  CourseCounts none{0, 10};
  CHECK(format_ratio(none.intervention_ratio()) == "0.00");
  CourseCounts all_pos{3, 0};
  CHECK_FALSE(all_pos.intervention_ratio().has_value());
  CHECK(format_ratio(all_pos.intervention_ratio()) == "-");
  CHECK(*classic.intervention_ratio() == doctest::Approx(164.0 / 527.0).epsilon(1e-15));
}

TEST_CASE("stats table") {
  using R = AuthorRole;
  std::vector<Thread> threads;
  for (int i = 0; i < 3; ++i) {
    Thread t = thread_with({R::student, R::instructor});
    t.course_id = "B";
    t.thread_id = "p" + std::to_string(i);
    threads.push_back(t);
  }
  Thread n = thread_with({R::student});
  n.course_id = "A";
  threads.push_back(n);
  const auto stats = corpus_stats(filter_and_label(threads));
  CHECK(stats.per_course.at("B").intervened == 3);
  CHECK(stats.per_course.at("A").non_intervened == 1);
  const std::string table = stats.to_table();
  CHECK(table.find("A") < table.find("B"));
  CHECK(table.find("-") != std::string::npos);
  CHECK(corpus_stats({}).per_course.empty());
}
