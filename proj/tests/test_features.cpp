#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "forum_sentinel/features.hpp"
#include "forum_sentinel/syngen.hpp"
#include "support.hpp"

using namespace forum_sentinel;
using test_support::make_post;

namespace {

constexpr double kTol = 1e-12;

std::size_t pdtb_index(const std::string& name) {
  const auto& names = pdtb_feature_names();
  const auto it = std::find(names.begin(), names.end(), name);
  REQUIRE(it != names.end());
  return static_cast<std::size_t>(it - names.begin());
}

PostDiscourse seq(std::initializer_list<Sense> senses) {
  PostDiscourse p;
  std::size_t i = 0;
  for (Sense s : senses) {
    p.push_back({i, i + 1, "x", s});
    i += 2;
  }
  return p;
}

std::string lower(Sense s) {
  std::string n(to_string(s));
  for (char& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return n;
}

Thread student_thread(const std::string& id, SubForumType forum,
                      std::vector<std::string> texts) {
  Thread t;
  t.course_id = "c";
  t.thread_id = id;
  t.subforum = forum;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    t.posts.push_back(make_post(id + "-" + std::to_string(i), AuthorRole::student,
                                static_cast<int>(i), texts[i]));
  }
  return t;
}

}  // namespace

TEST_CASE("pdtb feature names") {
  const auto& n = pdtb_feature_names();
  CHECK(n.size() == 25);
  CHECK(std::set<std::string>(n.begin(), n.end()).size() == 25);
  CHECK(n[0] == "pdtb:total_senses");
}

TEST_CASE("pdtb worked example") {
  const auto f = pdtb_features({seq({Sense::Expansion, Sense::Contingency, Sense::Expansion})}, 100);
  CHECK(f.size() == 25);
  std::vector<double> expect(25, 0.0);
  expect[pdtb_index("pdtb:total_senses")] = 3;
  expect[pdtb_index("pdtb:abs:expansion")] = 0.02;
  expect[pdtb_index("pdtb:rel:expansion")] = 2.0 / 3.0;
  expect[pdtb_index("pdtb:abs:contingency")] = 0.01;
  expect[pdtb_index("pdtb:rel:contingency")] = 1.0 / 3.0;
  expect[pdtb_index("pdtb:pair:expansion-contingency")] = 0.5;
  expect[pdtb_index("pdtb:pair:contingency-expansion")] = 0.5;
  for (std::size_t i = 0; i < 25; ++i) {
    CAPTURE(pdtb_feature_names()[i]);
    CHECK(std::abs(f[i] - expect[i]) <= kTol);
  }
}

TEST_CASE("pdtb zero and boundary cases") {
  for (double v : pdtb_features({}, 10)) CHECK(v == 0.0);
  for (double v : pdtb_features({PostDiscourse{}, PostDiscourse{}}, 0)) CHECK(v == 0.0);

  const auto f = pdtb_features({seq({Sense::Temporal}), seq({Sense::Comparison})}, 40);
  CHECK(f[pdtb_index("pdtb:total_senses")] == 2);
  CHECK(f[pdtb_index("pdtb:rel:temporal")] == 0.5);
  CHECK(f[pdtb_index("pdtb:rel:comparison")] == 0.5);
  for (std::size_t i = 9; i < 25; ++i) CHECK(f[i] == 0.0);

  CHECK_THROWS_AS(pdtb_features({seq({Sense::Temporal})}, 0), FeatureError);
}

TEST_CASE("pdtb invariants over random taggings") {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 500; ++round) {
    std::vector<PostDiscourse> tagging;
    const int n_posts = static_cast<int>(rng() % 5);
    std::size_t total = 0, pairs = 0;
    for (int p = 0; p < n_posts; ++p) {
      PostDiscourse post;
      const std::size_t n = rng() % 6;
      for (std::size_t i = 0; i < n; ++i) {
        post.push_back({2 * i, 2 * i + 1, "x", kAllSenses[rng() % 4]});
      }
      total += n;
      pairs += n > 0 ? n - 1 : 0;
      tagging.push_back(std::move(post));
    }
    const std::size_t length = total + rng() % 50 + 1;
    const auto f = pdtb_features(tagging, length);

    double rel = 0, abs = 0, pair_sum = 0;
    for (Sense s : kAllSenses) {
      rel += f[pdtb_index("pdtb:rel:" + lower(s))];
      abs += f[pdtb_index("pdtb:abs:" + lower(s))];
    }
    for (std::size_t i = 9; i < 25; ++i) pair_sum += f[i];
    CHECK(f[0] == static_cast<double>(total));
    if (total > 0) CHECK(std::abs(rel - 1.0) <= kTol);
    if (total == 0) CHECK(rel == 0.0);
    CHECK(std::abs(abs - static_cast<double>(total) / static_cast<double>(length)) <= kTol);
    if (pairs > 0) CHECK(std::abs(pair_sum - 1.0) <= kTol);
    if (pairs == 0) CHECK(pair_sum == 0.0);

    // Appending a post can only add pairs that start inside it.
    if (!tagging.empty()) {
      auto extended = tagging;
      extended.push_back(seq({Sense::Temporal}));
      const auto g = pdtb_features(extended, length + 1);
      for (std::size_t i = 9; i < 25; ++i) {
        CHECK(std::abs(g[i] - f[i]) <= kTol);
      }
    }
  }
}

TEST_CASE("pdtb features ignore the words around connectives") {
  const auto res = test_support::default_resources();
  const Thread a = student_thread("a", SubForumType::exam,
                                  {"But the grader rejects my code. If so, then what?"});
  const Thread b = student_thread("b", SubForumType::exam,
                                  {"But the lecture skips that step. If so, then why?"});
  const auto pa = prepare_thread(a, res);
  const auto pb = prepare_thread(b, res);
  const auto da = vectorize({&pa}, Featurizer(FeatureConfig::pdtb, nullptr));
  const auto db = vectorize({&pb}, Featurizer(FeatureConfig::pdtb, nullptr));
  CHECK(da.examples[0].features.entries == db.examples[0].features.entries);
}

TEST_CASE("edm15 structural features") {
  const auto res = test_support::default_resources();
  Thread t = student_thread("t", SubForumType::lecture, {});
  t.posts = {make_post("p1", AuthorRole::student, 0, "First question. See www.a.org at 1:30"),
             make_post("c1", AuthorRole::student, 1, "A comment.", "p1"),
             make_post("p2", AuthorRole::student, 2, "Second post."),
             make_post("c2", AuthorRole::student, 3, "Another one.", "p1"),
             make_post("c3", AuthorRole::student, 4, "Thanks, got it.", "p2")};
  const auto p = prepare_thread(t, res);
  const Vocabulary vocab({"question", "comment"});
  const Featurizer fz(FeatureConfig::edm15, &vocab);
  const auto v = fz(p);
  CHECK(v.value("n_posts") == 2);
  CHECK(v.value("n_comments") == 3);
  CHECK(v.value("n_posts_plus_comments") == 5);
  CHECK(v.value("avg_comments_per_post") == 1.5);
  CHECK(v.value("forum:errata") == 0);
  CHECK(v.value("forum:exam") == 0);
  CHECK(v.value("forum:lecture") == 1);
  CHECK(v.value("forum:homework") == 0);
  CHECK(v.value("affirmation") == 1);
  CHECK(v.value("n_urls") == 1);
  CHECK(v.value("n_timerefs") == 1);
  CHECK(v.value("n_sentences") == 6);
  CHECK(v.value("uni:question") == 1);
  CHECK(v.value("uni:comment") == 1);
  CHECK_FALSE(fz.space()->find("uni:second").has_value());
  CHECK(fz.space()->size() == edm15_structural_names().size() + 2);
}

TEST_CASE("forum one-hot order") {
  const auto& n = edm15_structural_names();
  CHECK(std::vector<std::string>(n.begin(), n.begin() + 4) ==
        std::vector<std::string>{"forum:errata", "forum:exam", "forum:lecture", "forum:homework"});
}

TEST_CASE("affirmation follows the shipped phrase list") {
  const auto res = test_support::default_resources();
  auto flag = [&](std::vector<std::string> texts) {
    return prepare_thread(student_thread("t", SubForumType::exam, std::move(texts)), res).affirmation;
  };
  CHECK(flag({"Question here.", "thanks"}));
  CHECK(flag({"Question here.", "Thank you so much!"}));
  CHECK(flag({"Question here.", "I agree with you"}));
  CHECK_FALSE(flag({"Thanks in advance for any help."}));
  CHECK_FALSE(flag({"Question here.", "No idea either."}));
}

TEST_CASE("staff posts are not observable") {
  const auto res = test_support::default_resources();
  Thread t = student_thread("t", SubForumType::exam, {"Why does it fail?"});
  t.posts.push_back(make_post("staff", AuthorRole::instructor, 9, "Because, but then thanks."));
  t.label = Label::intervened;
  const auto p = prepare_thread(t, res);
  CHECK(p.thread.posts.size() == 1);
  CHECK(p.thread.label == Label::intervened);
  CHECK(p.discourse.size() == 1);
  CHECK_FALSE(p.affirmation);
}

TEST_CASE("vocabulary") {
  const auto res = test_support::default_resources();
  const auto a = prepare_thread(student_thread("a", SubForumType::exam, {"alpha beta gamma"}), res);
  const auto b = prepare_thread(student_thread("b", SubForumType::exam, {"gamma beta alpha alpha"}), res);
  CHECK(build_vocabulary(std::vector<PreparedThread>{a, b}).size() == 3);

  const auto c = prepare_thread(student_thread("c", SubForumType::exam, {"delta epsilon"}), res);
  const auto ab = build_vocabulary(std::vector<PreparedThread>{a});
  const auto cc = build_vocabulary(std::vector<PreparedThread>{c});
  CHECK(build_vocabulary(std::vector<PreparedThread>{a, c}).size() == ab.size() + cc.size());

  CHECK_THROWS_AS(build_vocabulary(std::vector<PreparedThread>{}), FeatureError);

  const Featurizer fz(FeatureConfig::edm15, &ab);
  const auto v = fz(c);
  for (const auto& [idx, val] : v.entries) {
    CHECK(fz.space()->name(idx).rfind("uni:", 0) != 0);
  }
  CHECK(fz.space()->size() == edm15_structural_names().size() + ab.size());
}

TEST_CASE("configurations") {
  CHECK_THROWS_AS(Featurizer(FeatureConfig::edm15, nullptr), FeatureError);
  CHECK_THROWS_AS(Featurizer(FeatureConfig::eplusp, nullptr), FeatureError);

  GenSpec spec;
  spec.n_courses = 1;
  spec.threads_per_course = 30;
  const auto threads = filter_and_label(generate_threads(spec));
  const auto prepared = prepare_threads(threads, test_support::default_resources(), 2);
  const auto vocab = build_vocabulary(prepared);

  const auto pdtb = vectorize(prepared, FeatureConfig::pdtb, nullptr);
  const auto edm = vectorize(prepared, FeatureConfig::edm15, &vocab);
  const auto both = vectorize(prepared, FeatureConfig::eplusp, &vocab);
  CHECK(pdtb.space->size() == 25);
  CHECK(both.space->size() == edm.space->size() + 25);
  CHECK(pdtb.space->names() == pdtb_feature_names());
  CHECK(pdtb.space->hash() != both.space->hash());

  for (std::size_t i = 0; i < prepared.size(); ++i) {
    // E+P is the concatenation of the two blocks
    const auto joint = both.examples[i].features.dense();
    const auto left = edm.examples[i].features.dense();
    const auto right = pdtb.examples[i].features.dense();
    std::vector<double> cat = left;
    cat.insert(cat.end(), right.begin(), right.end());
    CHECK(joint == cat);
    CHECK(both.examples[i].label == threads[i].label);
  }

  const auto again = vectorize(prepared, FeatureConfig::eplusp, &vocab, {}, 3);
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    CHECK(again.examples[i].features == both.examples[i].features);
  }

  FeatureOptions binary;
  binary.unigrams = UnigramMode::binary;
  const auto bin = vectorize(prepared, FeatureConfig::edm15, &vocab, binary);
  for (const auto& ex : bin.examples) {
    for (const auto& [idx, val] : ex.features.entries) {
      if (bin.space->name(idx).rfind("uni:", 0) == 0) CHECK(val == 1.0);
    }
  }
}

TEST_CASE("length normalizers") {
  const auto res = test_support::default_resources();
  const auto p = prepare_thread(
      student_thread("t", SubForumType::exam, {"But why? It fails.", "If so, fine."}), res);
  const double tokens = static_cast<double>(p.token_count());
  auto abs_comp = [&](LengthNormalizer n) {
    FeatureOptions o;
    o.normalizer = n;
    return Featurizer(FeatureConfig::pdtb, nullptr, o)(p).value("pdtb:abs:comparison");
  };
  CHECK(abs_comp(LengthNormalizer::token) == doctest::Approx(1.0 / tokens));
  CHECK(abs_comp(LengthNormalizer::post) == doctest::Approx(0.5));
  CHECK(abs_comp(LengthNormalizer::sentence) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("feature dump round trip") {
  GenSpec spec;
  spec.n_courses = 2;
  spec.threads_per_course = 15;
  const auto prepared =
      prepare_threads(filter_and_label(generate_threads(spec)), test_support::default_resources());
  const auto vocab = build_vocabulary(prepared);
  const auto data = vectorize(prepared, FeatureConfig::eplusp, &vocab);

  std::ostringstream out;
  write_feature_dump(out, data, FeatureConfig::eplusp);
  std::istringstream in(out.str());
  const Dataset back = read_feature_dump(in);
  CHECK(back.space->names() == data.space->names());
  CHECK(back.space->hash() == data.space->hash());
  REQUIRE(back.examples.size() == data.examples.size());
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    CHECK(back.examples[i].features.entries == data.examples[i].features.entries);
    CHECK(back.examples[i].label == data.examples[i].label);
    CHECK(back.examples[i].thread_id == data.examples[i].thread_id);
  }
  std::ostringstream again;
  write_feature_dump(again, back, FeatureConfig::eplusp);
  CHECK(again.str() == out.str());

  std::istringstream bad("#forum-sentinel-features\t1\n#dim\tx\nc\tt\tintervened\ty:1\n");
  CHECK_THROWS_AS(read_feature_dump(bad), FeatureError);
}
