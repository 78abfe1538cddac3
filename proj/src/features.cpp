#include "forum_sentinel/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "forum_sentinel/parallel.hpp"

namespace forum_sentinel {

namespace {

std::string lower_sense_name(Sense s) {
  std::string n(to_string(s));
  for (char& c : n) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return n;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string_view> split_tabs(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

constexpr std::array<SubForumType, 4> kContentForums{
    SubForumType::errata, SubForumType::exam, SubForumType::lecture,
    SubForumType::homework};

}  // namespace

std::string_view to_string(FeatureConfig c) {
  switch (c) {
    case FeatureConfig::edm15:
      return "edm15";
    case FeatureConfig::pdtb:
      return "pdtb";
    case FeatureConfig::eplusp:
      return "eplusp";
  }
  return "?";
}

FeatureConfig parse_feature_config(std::string_view s) {
  if (s == "edm15") return FeatureConfig::edm15;
  if (s == "pdtb") return FeatureConfig::pdtb;
  if (s == "eplusp") return FeatureConfig::eplusp;
  throw std::invalid_argument("unknown feature config '" + std::string(s) + "'");
}

LengthNormalizer parse_length_normalizer(std::string_view s) {
  if (s == "token") return LengthNormalizer::token;
  if (s == "post") return LengthNormalizer::post;
  if (s == "sentence") return LengthNormalizer::sentence;
  throw std::invalid_argument("unknown length normalizer '" + std::string(s) + "'");
}

UnigramMode parse_unigram_mode(std::string_view s) {
  if (s == "counts") return UnigramMode::counts;
  if (s == "binary") return UnigramMode::binary;
  throw std::invalid_argument("unknown unigram mode '" + std::string(s) + "'");
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

FeatureSpace::FeatureSpace(std::vector<std::string> names, std::string provenance)
    : names_(std::move(names)), provenance_(std::move(provenance)) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], i).second) {
      throw FeatureError("duplicate feature name '" + names_[i] + "'");
    }
    h = fnv1a(names_[i], h);
    h = fnv1a("\n", h);
  }
  hash_ = h;
}

std::optional<std::size_t> FeatureSpace::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double FeatureVector::at(std::size_t index) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), index,
      [](const auto& e, std::size_t i) { return e.first < i; });
  return it != entries.end() && it->first == index ? it->second : 0.0;
}

double FeatureVector::value(std::string_view name) const {
  const auto idx = space->find(name);
  if (!idx) throw FeatureError("unknown feature '" + std::string(name) + "'");
  return at(*idx);
}

std::vector<double> FeatureVector::dense() const {
  std::vector<double> out(space->size(), 0.0);
  for (const auto& [i, v] : entries) out[i] = v;
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  std::sort(tokens_.begin(), tokens_.end());
  tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const std::string& t : tokens_) {
    h = fnv1a(t, h);
    h = fnv1a("\n", h);
  }
  return h;
}

AffirmationList::AffirmationList(const std::vector<std::string>& phrases) {
  for (const std::string& p : phrases) {
    TokenizedPost tp = tokenize(p);
    if (!tp.tokens.empty()) phrases_.push_back(std::move(tp.tokens));
  }
}

AffirmationList AffirmationList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FeatureError("cannot open affirmation list " + path.string());
  std::vector<std::string> phrases;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() != '#') phrases.push_back(line);
  }
  return AffirmationList(phrases);
}

bool AffirmationList::matches(const std::vector<std::string>& tokens) const {
  for (const auto& phrase : phrases_) {
    if (std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end()) !=
        tokens.end()) {
      return true;
    }
  }
  return false;
}

std::size_t PreparedThread::token_count() const {
  std::size_t n = 0;
  for (const TokenizedPost& p : posts) n += p.tokens.size();
  return n;
}

std::size_t PreparedThread::sentence_count() const {
  std::size_t n = 0;
  for (const TokenizedPost& p : posts) n += p.sentences.size();
  return n;
}

PreparedThread prepare_thread(const Thread& thread, const PrepResources& res) {
  if (res.stopwords == nullptr || res.affirmations == nullptr) {
    throw FeatureError("thread preparation needs a stopword and affirmation list");
  }
  PreparedThread p;
  p.thread = thread;
  std::erase_if(p.thread.posts, [](const Post& post) { return is_staff(post.role); });
  p.posts.reserve(p.thread.posts.size());
  for (std::size_t i = 0; i < p.thread.posts.size(); ++i) {
    const Post& post = p.thread.posts[i];
    p.posts.push_back(prepare_text(post.text));
    p.content_tokens.push_back(content_filter(p.posts.back().tokens, *res.stopwords));
    if (i > 0 && post.role == AuthorRole::student &&
        res.affirmations->matches(p.posts.back().tokens)) {
      p.affirmation = true;
    }
  }
  if (res.lexicon != nullptr || res.imported_tags != nullptr) {
    static const ConnectiveLexicon kEmpty;
    p.discourse = tag_thread(p.thread, p.posts, res.lexicon ? *res.lexicon : kEmpty,
                             res.imported_tags, res.tagger);
    p.has_discourse = true;
  }
  return p;
}

std::vector<PreparedThread> prepare_threads(const std::vector<Thread>& threads,
                                            const PrepResources& res,
                                            unsigned jobs) {
  std::vector<PreparedThread> out(threads.size());
  parallel_for(threads.size(), jobs,
               [&](std::size_t i) { out[i] = prepare_thread(threads[i], res); });
  return out;
}

const std::vector<std::string>& pdtb_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    n.push_back("pdtb:total_senses");
    for (Sense s : kAllSenses) {
      n.push_back("pdtb:abs:" + lower_sense_name(s));
      n.push_back("pdtb:rel:" + lower_sense_name(s));
    }
    for (Sense a : kAllSenses) {
      for (Sense b : kAllSenses) {
        n.push_back("pdtb:pair:" + lower_sense_name(a) + "-" + lower_sense_name(b));
      }
    }
    return n;
  }();
  return names;
}

std::array<double, kPdtbFeatureCount> pdtb_features(
    const std::vector<PostDiscourse>& tagging, std::size_t thread_length) {
  std::array<std::size_t, kSenseCount> counts{};
  std::array<std::size_t, kSenseCount * kSenseCount> pairs{};
  std::size_t total = 0;
  std::size_t pair_total = 0;
  for (const PostDiscourse& post : tagging) {
    for (std::size_t i = 0; i < post.size(); ++i) {
      ++counts[index_of(post[i].sense)];
      ++total;
      if (i > 0) {
        ++pairs[index_of(post[i - 1].sense) * kSenseCount + index_of(post[i].sense)];
        ++pair_total;
      }
    }
  }
  if (thread_length == 0 && total > 0) {
    throw FeatureError("thread length is zero but connectives were tagged");
  }

  std::array<double, kPdtbFeatureCount> f{};
  f[0] = static_cast<double>(total);
  for (std::size_t s = 0; s < kSenseCount; ++s) {
    const auto c = static_cast<double>(counts[s]);
    f[1 + 2 * s] = thread_length ? c / static_cast<double>(thread_length) : 0.0;
    f[2 + 2 * s] = total ? c / static_cast<double>(total) : 0.0;
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    f[1 + 2 * kSenseCount + k] =
        pair_total ? static_cast<double>(pairs[k]) / static_cast<double>(pair_total)
                   : 0.0;
  }
  return f;
}

const std::vector<std::string>& edm15_structural_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (SubForumType s : kContentForums) {
      n.push_back("forum:" + std::string(to_string(s)));
    }
    for (const char* name :
         {"affirmation", "n_posts", "n_comments", "n_posts_plus_comments",
          "avg_comments_per_post", "n_sentences", "n_urls", "n_timerefs"}) {
      n.emplace_back(name);
    }
    return n;
  }();
  return names;
}

std::string unigram_feature_name(std::string_view token) {
  return "uni:" + std::string(token);
}

Vocabulary build_vocabulary(const std::vector<const PreparedThread*>& training) {
  if (training.empty()) throw FeatureError("cannot build a vocabulary from no threads");
  std::set<std::string> tokens;
  for (const PreparedThread* t : training) {
    for (const auto& post : t->content_tokens) tokens.insert(post.begin(), post.end());
  }
  return Vocabulary({tokens.begin(), tokens.end()});
}

Vocabulary build_vocabulary(const std::vector<PreparedThread>& training) {
  std::vector<const PreparedThread*> ptrs;
  ptrs.reserve(training.size());
  for (const PreparedThread& t : training) ptrs.push_back(&t);
  return build_vocabulary(ptrs);
}

Featurizer::Featurizer(FeatureConfig config, const Vocabulary* vocabulary,
                       FeatureOptions options)
    : config_(config), vocabulary_(vocabulary), options_(options) {
  std::vector<std::string> names;
  std::string provenance = "config=" + std::string(to_string(config));
  if (config != FeatureConfig::pdtb) {
    if (vocabulary_ == nullptr) {
      throw FeatureError("feature config " + std::string(to_string(config)) +
                         " needs a vocabulary");
    }
    names = edm15_structural_names();
    for (const std::string& t : vocabulary_->tokens()) {
      names.push_back(unigram_feature_name(t));
    }
    provenance += ";vocab=" + hex64(vocabulary_->hash());
  }
  if (config != FeatureConfig::edm15) {
    const auto& p = pdtb_feature_names();
    names.insert(names.end(), p.begin(), p.end());
  }
  space_ = std::make_shared<const FeatureSpace>(std::move(names), std::move(provenance));
}

void Featurizer::append_edm15(const PreparedThread& t,
                              std::vector<std::pair<std::uint32_t, double>>& out) const {
  std::array<double, 12> fixed{};
  for (std::size_t i = 0; i < kContentForums.size(); ++i) {
    fixed[i] = t.thread.subforum == kContentForums[i] ? 1.0 : 0.0;
  }
  std::size_t n_posts = 0, n_comments = 0;
  for (const Post& p : t.thread.posts) {
    if (p.is_comment()) {
      ++n_comments;
    } else {
      ++n_posts;
    }
  }
  ReplacementCounts replaced;
  for (const TokenizedPost& p : t.posts) {
    replaced.url += p.replaced_counts.url;
    replaced.timeref += p.replaced_counts.timeref;
  }
  fixed[4] = t.affirmation ? 1.0 : 0.0;
  fixed[5] = static_cast<double>(n_posts);
  fixed[6] = static_cast<double>(n_comments);
  fixed[7] = static_cast<double>(n_posts + n_comments);
  fixed[8] = n_posts ? static_cast<double>(n_comments) / static_cast<double>(n_posts)
                     : 0.0;
  fixed[9] = static_cast<double>(t.sentence_count());
  fixed[10] = static_cast<double>(replaced.url);
  fixed[11] = static_cast<double>(replaced.timeref);
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (fixed[i] != 0.0) out.emplace_back(static_cast<std::uint32_t>(i), fixed[i]);
  }

  std::map<std::size_t, double> unigrams;
  for (const auto& post : t.content_tokens) {
    for (const std::string& tok : post) {
      if (auto idx = vocabulary_->find(tok)) unigrams[*idx] += 1.0;
    }
  }
  for (const auto& [idx, count] : unigrams) {
    const double v = options_.unigrams == UnigramMode::binary ? 1.0 : count;
    out.emplace_back(static_cast<std::uint32_t>(fixed.size() + idx), v);
  }
}

void Featurizer::append_pdtb(const PreparedThread& t, std::uint32_t offset,
                             std::vector<std::pair<std::uint32_t, double>>& out) const {
  if (!t.has_discourse) {
    throw FeatureError("thread " + t.thread.thread_id +
                       " was prepared without discourse tags");
  }
  std::size_t length = 0;
  switch (options_.normalizer) {
    case LengthNormalizer::token:
      length = t.token_count();
      break;
    case LengthNormalizer::post:
      length = t.posts.size();
      break;
    case LengthNormalizer::sentence:
      length = t.sentence_count();
      break;
  }
  const auto f = pdtb_features(t.discourse, length);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] != 0.0) out.emplace_back(offset + static_cast<std::uint32_t>(i), f[i]);
  }
}

FeatureVector Featurizer::operator()(const PreparedThread& t) const {
  FeatureVector v;
  v.space = space_;
  std::uint32_t offset = 0;
  if (config_ != FeatureConfig::pdtb) {
    append_edm15(t, v.entries);
    offset = static_cast<std::uint32_t>(edm15_structural_names().size() +
                                        vocabulary_->size());
  }
  if (config_ != FeatureConfig::edm15) append_pdtb(t, offset, v.entries);
  for (const auto& [_, value] : v.entries) {
    if (!std::isfinite(value)) throw FeatureError("non-finite feature value");
  }
  return v;
}

std::size_t Dataset::positives() const {
  return static_cast<std::size_t>(
      std::count_if(examples.begin(), examples.end(),
                    [](const Example& e) { return e.label == Label::intervened; }));
}

Dataset vectorize(const std::vector<const PreparedThread*>& threads,
                  const Featurizer& featurizer, unsigned jobs) {
  Dataset data;
  data.space = featurizer.space();
  data.examples.resize(threads.size());
  parallel_for(threads.size(), jobs, [&](std::size_t i) {
    const PreparedThread& t = *threads[i];
    data.examples[i] = {featurizer(t), t.thread.label, t.thread.course_id,
                        t.thread.thread_id};
  });
  return data;
}

Dataset vectorize(const std::vector<PreparedThread>& threads, FeatureConfig config,
                  const Vocabulary* vocabulary, FeatureOptions options,
                  unsigned jobs) {
  const Featurizer featurizer(config, vocabulary, options);
  std::vector<const PreparedThread*> ptrs;
  ptrs.reserve(threads.size());
  for (const PreparedThread& t : threads) ptrs.push_back(&t);
  return vectorize(ptrs, featurizer, jobs);
}

void write_feature_dump(std::ostream& os, const Dataset& data, FeatureConfig config) {
  os << "#forum-sentinel-features\t1\tconfig=" << to_string(config)
     << "\tdims=" << data.space->size() << "\tprovenance="
     << data.space->provenance() << '\n';
  for (const std::string& name : data.space->names()) os << "#dim\t" << name << '\n';
  for (const Example& e : data.examples) {
    os << e.course_id << '\t' << e.thread_id << '\t' << to_string(e.label);
    for (const auto& [idx, value] : e.features.entries) {
      os << '\t' << data.space->name(idx) << ':' << format_g17(value);
    }
    os << '\n';
  }
}

Dataset read_feature_dump(std::istream& is) {
  std::string line;
  std::size_t line_no = 1;
  auto fail = [&](const std::string& what) -> FeatureError {
    return FeatureError("feature dump line " + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(is, line) || line.rfind("#forum-sentinel-features\t1\t", 0) != 0) {
    throw fail("missing feature dump header");
  }
  std::string provenance;
  for (std::string_view field : split_tabs(line)) {
    if (field.rfind("provenance=", 0) == 0) provenance = field.substr(11);
  }
  std::vector<std::string> names;
  Dataset data;
  bool seen_record = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.rfind("#dim\t", 0) == 0) {
      if (seen_record) throw fail("#dim after data records");
      names.push_back(line.substr(5));
      continue;
    }
    if (line.empty()) continue;
    if (!data.space) data.space = std::make_shared<const FeatureSpace>(names, provenance);
    const auto fields = split_tabs(line);
    if (fields.size() < 3) throw fail("record needs course_id, thread_id, label");
    Example e;
    e.course_id = std::string(fields[0]);
    e.thread_id = std::string(fields[1]);
    if (fields[2] == "intervened") {
      e.label = Label::intervened;
    } else if (fields[2] == "not_intervened") {
      e.label = Label::not_intervened;
    } else {
      throw fail("bad label '" + std::string(fields[2]) + "'");
    }
    e.features.space = data.space;
    for (std::size_t i = 3; i < fields.size(); ++i) {
      const std::size_t colon = fields[i].rfind(':');
      if (colon == std::string_view::npos) throw fail("bad name:value pair");
      const auto idx = data.space->find(fields[i].substr(0, colon));
      if (!idx) throw fail("unknown feature '" + std::string(fields[i].substr(0, colon)) + "'");
      std::string_view num = fields[i].substr(colon + 1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
      if (ec != std::errc() || ptr != num.data() + num.size() || !std::isfinite(v)) {
        throw fail("bad feature value '" + std::string(num) + "'");
      }
      e.features.entries.emplace_back(static_cast<std::uint32_t>(*idx), v);
    }
    std::sort(e.features.entries.begin(), e.features.entries.end());
    data.examples.push_back(std::move(e));
    seen_record = true;
  }
  if (!data.space) data.space = std::make_shared<const FeatureSpace>(names, provenance);
  return data;
}

}  // namespace forum_sentinel
