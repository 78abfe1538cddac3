#include <doctest.h>

#include <random>

#include "forum_sentinel/discourse.hpp"
#include "support.hpp"

using namespace forum_sentinel;
using test_support::default_lexicon;

namespace {

std::vector<std::pair<std::string, Sense>> tags_of(const std::string& text,
                                                   const ConnectiveLexicon& lex = default_lexicon(),
                                                   TaggerOptions opt = {}) {
  std::vector<std::pair<std::string, Sense>> out;
  for (const auto& t : tag_post(prepare_text(text), lex, opt)) out.emplace_back(t.surface, t.sense);
  return out;
}

bool has(const std::vector<std::pair<std::string, Sense>>& tags, const std::string& s, Sense sense) {
  for (const auto& [surface, got] : tags) {
    if (surface == s && got == sense) return true;
  }
  return false;
}

LexiconEntry entry(const std::string& s, double prior, std::array<double, 4> w) {
  LexiconEntry e;
  e.surface = s;
  e.discourse_prior = prior;
  e.sense_weights = w;
  return e;
}

}  // namespace

TEST_CASE("lexicon loading") {
  SUBCASE("three entries") {
    const auto lex = ConnectiveLexicon::parse(
        "# surface\tprior\tT\tC\tC\tE\n"
        "if\t0.9\t0\t1\t0\t0\n"
        "but\t0.9\t0\t0\t1\t0\n"
        "and\t0.3\t0\t0\t0\t1\n");
    CHECK(lex.size() == 3);
    REQUIRE(lex.find("but") != nullptr);
    CHECK(lex.find("but")->dominant_sense() == Sense::Comparison);
    CHECK(lex.find("so") == nullptr);
  }
  SUBCASE("prior out of range") {
    CHECK_THROWS_AS(ConnectiveLexicon::parse("but\t1.3\t0\t0\t1\t0\n"), LexiconError);
    CHECK_THROWS_AS(ConnectiveLexicon::parse("but\t-0.1\t0\t0\t1\t0\n"), LexiconError);
  }
  SUBCASE("duplicate surface") {
    CHECK_THROWS_AS(ConnectiveLexicon::parse("but\t0.9\t0\t0\t1\t0\nbut\t0.8\t0\t0\t1\t0\n"),
                    LexiconError);
  }
  SUBCASE("malformed lines") {
    CHECK_THROWS_AS(ConnectiveLexicon::parse("but\t0.9\t0\t0\t1\n"), LexiconError);
    CHECK_THROWS_AS(ConnectiveLexicon::parse("but\tx\t0\t0\t1\t0\n"), LexiconError);
    CHECK_THROWS_AS(ConnectiveLexicon::parse("but\t0.9\t0\t0\t0\t0\n"), LexiconError);
    CHECK_THROWS_AS(ConnectiveLexicon::parse("a b c d e\t0.9\t0\t0\t1\t0\n"), LexiconError);
  }
  SUBCASE("shipped lexicon") {
    CHECK(default_lexicon().size() >= 90);
    for (const auto& e : default_lexicon().entries()) {
      CHECK(e.discourse_prior >= 0.0);
      CHECK(e.discourse_prior <= 1.0);
    }
  }
}

TEST_CASE("sense ties break by ordinal order") {
  CHECK(entry("x", 1, {0, 1, 1, 0}).dominant_sense() == Sense::Contingency);
  CHECK(entry("x", 1, {0.5, 0, 0, 0.5}).dominant_sense() == Sense::Temporal);
  CHECK(entry("x", 1, {0, 0, 0.2, 0.2}).dominant_sense() == Sense::Comparison);
}

TEST_CASE("forum excerpts tag with the default lexicon") {
  const auto fig1 = tags_of(
      "Now if I need to apply the same progression to a minor scale, then should I use it?");
  CHECK(has(fig1, "now", Sense::Temporal));
  CHECK(has(fig1, "if", Sense::Contingency));
  CHECK(has(fig1, "then", Sense::Contingency));

  const auto but = tags_of("But I am confused ...");
  REQUIRE(but.size() == 1);
  CHECK(has(but, "but", Sense::Comparison));

  const auto fig2 = tags_of(
      "Hi !! I have a question about the 4th bar of the practice solution: the V chord has "
      "three roots. Is that normal or just a mistake? Thank you.");
  REQUIRE(fig2.size() == 1);
  CHECK(has(fig2, "or", Sense::Expansion));

  const auto more = tags_of(
      "Hie guys I m sorry if my question is naive in anyway. So we apply VII major instead?");
  CHECK(has(more, "if", Sense::Contingency));
  CHECK(has(more, "so", Sense::Contingency));
}

TEST_CASE("tagging basics") {
  CHECK(tags_of("The chord has three roots").empty());
  CHECK(tags_of("").empty());

  SUBCASE("longest match wins") {
    const auto t = tag_post(prepare_text("Call me as soon as you can."), default_lexicon());
    REQUIRE(t.size() == 1);
    CHECK(t[0].surface == "as soon as");
    CHECK(t[0].token_begin == 2);
    CHECK(t[0].token_end == 5);
  }

  SUBCASE("cues rescue low-prior surfaces") {
    const auto lex = ConnectiveLexicon::parse("and\t0.3\t0\t0\t0\t1\n");
    CHECK(tags_of("salt and pepper", lex).empty());
    CHECK(tags_of("It rained, and we stayed.", lex).size() == 1);
    CHECK(tags_of("And we stayed.", lex).size() == 1);
    CHECK(tags_of("We stayed. And then left.", lex).size() == 1);
    TaggerOptions loose;
    loose.prior_threshold = 0.3;
    CHECK(tags_of("salt and pepper", lex, loose).size() == 1);
  }

  SUBCASE("leftmost among equal lengths") {
    const auto lex = ConnectiveLexicon::parse(
        "a b\t1\t1\t0\t0\t0\n"
        "b c\t1\t0\t1\t0\t0\n");
    const auto t = tag_post(tokenize("a b c"), lex);
    REQUIRE(t.size() == 1);
    CHECK(t[0].surface == "a b");
  }
}

TEST_CASE("tagging properties over random token streams") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> words{"if", "then", "but", "and", "as", "soon", "so", "on",
                                       "the", "other", "hand", ",", ".", "x", "y", "when",
                                       "at", "same", "time", "or", "now", "because"};
  for (int round = 0; round < 300; ++round) {
    TokenizedPost post;
    const std::size_t n = 1 + rng() % 25;
    for (std::size_t i = 0; i < n; ++i) post.tokens.push_back(words[rng() % words.size()]);
    post.sentences.push_back({0, n});

    const auto tags = tag_post(post, default_lexicon());
    CHECK(tags == tag_post(post, default_lexicon()));
    for (std::size_t i = 0; i < tags.size(); ++i) {
      CHECK(tags[i].token_begin < tags[i].token_end);
      CHECK(tags[i].token_end <= n);
      CHECK(tags[i].token_end - tags[i].token_begin <= kMaxConnectiveTokens);
      if (i > 0) CHECK(tags[i - 1].token_end <= tags[i].token_begin);
      const LexiconEntry* e = default_lexicon().find(tags[i].surface);
      REQUIRE(e != nullptr);
      CHECK(e->dominant_sense() == tags[i].sense);
    }
  }
}

TEST_CASE("restriction property") {
  // A tag that appears only after removing surface s must sit inside a run of
  // mutually overlapping candidates that contained a match of s.
  std::mt19937_64 rng(17);
  const std::vector<std::string> words{"as", "soon", "if", "then", "on", "the", "other", "hand",
                                       "so", "that", "but", ",", "x", "and", "in", "order",
                                       "to", "even", "though", "at", "same", "time"};
  const std::vector<std::string> surfaces{"as", "as soon as", "so", "so that", "on the other hand",
                                          "in order to", "even though", "then", "if then"};
  for (int round = 0; round < 400; ++round) {
    TokenizedPost post;
    const std::size_t n = 1 + rng() % 20;
    for (std::size_t i = 0; i < n; ++i) post.tokens.push_back(words[rng() % words.size()]);
    post.sentences.push_back({0, n});
    const std::string removed = surfaces[rng() % surfaces.size()];
    if (default_lexicon().find(removed) == nullptr) continue;

    const auto cands = find_candidates(post.tokens, default_lexicon());
    // overlap components over token positions
    std::vector<int> comp(n, -1);
    std::vector<bool> comp_has_removed;
    std::size_t i = 0;
    while (i < cands.size()) {
      std::size_t end = cands[i].token_end;
      bool has_removed = false;
      std::size_t j = i;
      while (j < cands.size() && cands[j].token_begin < end) {
        end = std::max(end, cands[j].token_end);
        has_removed = has_removed || cands[j].entry->surface == removed;
        ++j;
      }
      for (std::size_t k = cands[i].token_begin; k < end; ++k) {
        comp[k] = static_cast<int>(comp_has_removed.size());
      }
      comp_has_removed.push_back(has_removed);
      i = j;
    }

    const auto before = tag_post(post, default_lexicon());
    const auto after = tag_post(post, default_lexicon().without(removed));
    for (const auto& t : after) {
      CHECK(t.surface != removed);
      if (std::find(before.begin(), before.end(), t) != before.end()) continue;
      const int c = comp[t.token_begin];
      REQUIRE(c >= 0);
      CHECK(comp[t.token_end - 1] == c);
      CHECK(comp_has_removed[static_cast<std::size_t>(c)]);
    }
  }
}

TEST_CASE("tag_thread") {
  using test_support::make_post;
  Thread t;
  t.course_id = "c";
  t.thread_id = "t";
  t.posts = {make_post("a", AuthorRole::student, 0, "But it fails."),
             make_post("b", AuthorRole::student, 1, "If it works, fine."),
             make_post("c", AuthorRole::student, 2, "Because x.")};
  std::vector<TokenizedPost> posts;
  for (const auto& p : t.posts) posts.push_back(prepare_text(p.text));

  SUBCASE("one list per post") {
    const auto tags = tag_thread(t, posts, default_lexicon());
    REQUIRE(tags.size() == 3);
    for (const auto& p : tags) CHECK(p.size() == 1);
  }
  SUBCASE("empty posts") {
    Thread e = t;
    for (auto& p : e.posts) p.text.clear();
    std::vector<TokenizedPost> empty(3);
    const auto tags = tag_thread(e, empty, default_lexicon());
    REQUIRE(tags.size() == 3);
    for (const auto& p : tags) CHECK(p.empty());
  }
  SUBCASE("imported tags are returned verbatim") {
    const auto imp = TagImport::parse(
        "c\tt\ta\t1,2,Temporal\t2,3,Expansion\n"
        "c\tt\tc\n");
    const auto tags = tag_thread(t, posts, default_lexicon(), &imp);
    REQUIRE(tags.size() == 3);
    REQUIRE(tags[0].size() == 2);
    CHECK(tags[0][0].sense == Sense::Temporal);
    CHECK(tags[0][0].surface == "it");
    CHECK(tags[0][1].sense == Sense::Expansion);
    CHECK(tags[1].empty());
    CHECK(tags[2].empty());
  }
  SUBCASE("export then import reproduces the tagger") {
    const auto tags = tag_thread(t, posts, default_lexicon());
    std::string file;
    for (std::size_t i = 0; i < tags.size(); ++i) {
      file += format_tag_record(t.course_id, t.thread_id, t.posts[i].post_id, tags[i]) + "\n";
    }
    const auto imp = TagImport::parse(file);
    CHECK(tag_thread(t, posts, ConnectiveLexicon{}, &imp) == tags);
  }
}

TEST_CASE("tag import errors") {
  CHECK_THROWS(TagImport::parse("c\tt\n"));
  CHECK_THROWS(TagImport::parse("c\tt\tp\t1,2\n"));
  CHECK_THROWS(TagImport::parse("c\tt\tp\t2,2,Temporal\n"));
  CHECK_THROWS(TagImport::parse("c\tt\tp\t1,3,Temporal\t2,4,Expansion\n"));
  CHECK_THROWS(TagImport::parse("c\tt\tp\t1,2,Causal\n"));
  CHECK_THROWS(TagImport::parse("c\tt\tp\nc\tt\tp\n"));
}

TEST_CASE("sense distribution") {
  SenseDistribution d;
  auto add = [&](Sense s, int n) {
    PostDiscourse p;
    for (int i = 0; i < n; ++i) p.push_back({static_cast<std::size_t>(2 * i),
                                             static_cast<std::size_t>(2 * i + 1), "x", s});
    d.add(p);
  };
  add(Sense::Expansion, 33);
  add(Sense::Contingency, 28);
  add(Sense::Comparison, 20);
  add(Sense::Temporal, 19);
  const auto pct = d.percentages();
  REQUIRE(pct);
  CHECK((*pct)[index_of(Sense::Expansion)] == doctest::Approx(33.0));
  CHECK((*pct)[index_of(Sense::Contingency)] == doctest::Approx(28.0));
  CHECK((*pct)[index_of(Sense::Comparison)] == doctest::Approx(20.0));
  CHECK((*pct)[index_of(Sense::Temporal)] == doctest::Approx(19.0));
  CHECK(d.to_table().find("33%") != std::string::npos);

  SenseDistribution one;
  one.add({{0, 1, "now", Sense::Temporal}});
  CHECK((*one.percentages())[index_of(Sense::Temporal)] == doctest::Approx(100.0));

  SenseDistribution none;
  CHECK_FALSE(none.percentages().has_value());
  CHECK(sense_distribution({}).total == 0);
}
