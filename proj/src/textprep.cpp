#include "forum_sentinel/textprep.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace forum_sentinel {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_alnum(char c) {
  return is_digit(c) || is_upper(c) || (c >= 'a' && c <= 'z');
}
bool is_word_byte(char c) {
  return is_alnum(c) || static_cast<unsigned char>(c) >= 0x80;
}
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char a = s[i];
    if (is_upper(a)) a = static_cast<char>(a - 'A' + 'a');
    if (a != prefix[i]) return false;
  }
  return true;
}

// Appends a placeholder, separating it from adjacent word characters.
void emit_placeholder(std::string& out, std::string_view token,
                      std::string_view rest) {
  if (!out.empty() && is_word_byte(out.back())) out.push_back(' ');
  out.append(token);
  if (!rest.empty() && is_word_byte(rest.front())) out.push_back(' ');
}

std::string replace_dollar_spans(std::string_view text, std::size_t& count) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '$') {
      const std::size_t close = text.find('$', i + 1);
      if (close != std::string_view::npos) {
        emit_placeholder(out, kEquToken, text.substr(close + 1));
        ++count;
        i = close + 1;
        continue;
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

bool is_url_run(std::string_view run) {
  return starts_with_ci(run, "http://") || starts_with_ci(run, "https://") ||
         starts_with_ci(run, "ftp://") || starts_with_ci(run, "www.");
}

bool is_equation_run(std::string_view run) {
  int ops = 0;
  bool digit = false;
  for (char c : run) {
    if (c == '=' || c == '+' || c == '^' || c == '/' || c == '\\') ++ops;
    digit = digit || is_digit(c);
  }
  return digit && ops >= 2;
}

std::string replace_runs(std::string_view text, ReplacementCounts& counts) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::string_view run = text.substr(i, j - i);
    std::size_t core_len = run.size();
    while (core_len > 0 &&
           std::string_view(".,;:!?)\"'").find(run[core_len - 1]) !=
               std::string_view::npos) {
      --core_len;
    }
    std::string_view core = run.substr(0, core_len);
    if (!core.empty() && is_url_run(core)) {
      out.append(kUrlToken);
      out.append(run.substr(core_len));
      ++counts.url;
    } else if (!core.empty() && is_equation_run(core)) {
      out.append(kEquToken);
      out.append(run.substr(core_len));
      ++counts.equ;
    } else {
      out.append(run);
    }
    i = j;
  }
  return out;
}

// Length of a clock time starting at `i`, or 0.
std::size_t match_time(std::string_view s, std::size_t i) {
  if (i > 0 && is_digit(s[i - 1])) return 0;
  std::size_t j = i;
  while (j < s.size() && j - i < 2 && is_digit(s[j])) ++j;
  if (j == i || j >= s.size() || s[j] != ':') return 0;
  auto two_digits = [&](std::size_t k) {
    return k + 1 < s.size() && is_digit(s[k]) && is_digit(s[k + 1]) &&
           (k + 2 >= s.size() || !is_digit(s[k + 2]));
  };
  if (!two_digits(j + 1)) return 0;
  std::size_t end = j + 3;
  if (end < s.size() && s[end] == ':' && two_digits(end + 1)) end += 3;
  return end - i;
}

std::string replace_times(std::string_view text, std::size_t& count) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_digit(text[i])) {
      if (std::size_t len = match_time(text, i)) {
        emit_placeholder(out, kTimeRefToken, text.substr(i + len));
        ++count;
        i += len;
        continue;
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

}  // namespace

bool is_placeholder(std::string_view token) {
  return token == kEquToken || token == kUrlToken || token == kTimeRefToken;
}

ReplacedText replace_nonlexical(std::string_view text) {
  ReplacedText r;
  std::string s = replace_dollar_spans(text, r.counts.equ);
  s = replace_runs(s, r.counts);
  r.text = replace_times(s, r.counts.timeref);
  return r;
}

TokenizedPost tokenize(std::string_view text) {
  TokenizedPost out;
  std::size_t sentence_start = 0;
  auto close_sentence = [&] {
    if (out.tokens.size() > sentence_start) {
      out.sentences.push_back({sentence_start, out.tokens.size()});
      sentence_start = out.tokens.size();
    }
  };

  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < text.size()) {
        if (is_word_byte(text[j])) {
          ++j;
        } else if (text[j] == '\'' && j + 1 < text.size() &&
                   is_word_byte(text[j + 1])) {
          ++j;
        } else if (text[j] == '.' && j + 1 < text.size() &&
                   is_digit(text[j - 1]) && is_digit(text[j + 1])) {
          ++j;
        } else {
          break;
        }
      }
      std::string word(text.substr(i, j - i));
      if (!is_placeholder(word)) {
        for (char& ch : word) {
          if (is_upper(ch)) ch = static_cast<char>(ch - 'A' + 'a');
        }
      }
      out.tokens.push_back(std::move(word));
      i = j;
      continue;
    }
    if (is_terminal(c)) {
      std::size_t j = i;
      while (j < text.size() && is_terminal(text[j])) ++j;
      out.tokens.emplace_back(text.substr(i, j - i));
      std::size_t k = j;
      while (k < text.size() && is_space(text[k])) ++k;
      const bool at_end = k == text.size();
      const bool single = j - i == 1;
      if (at_end || (single && k > j && is_upper(text[k]))) close_sentence();
      i = j;
      continue;
    }
    out.tokens.emplace_back(1, c);
    ++i;
  }
  close_sentence();

  for (const std::string& t : out.tokens) {
    if (t == kEquToken) ++out.replaced_counts.equ;
    if (t == kUrlToken) ++out.replaced_counts.url;
    if (t == kTimeRefToken) ++out.replaced_counts.timeref;
  }
  return out;
}

TokenizedPost prepare_text(std::string_view raw_text) {
  return tokenize(replace_nonlexical(raw_text).text);
}

StopwordList::StopwordList(std::vector<std::string> words)
    : words_(std::make_move_iterator(words.begin()),
             std::make_move_iterator(words.end())) {}

StopwordList StopwordList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stopword list " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && is_space(line.back())) line.pop_back();
    if (!line.empty()) words.push_back(line);
  }
  return StopwordList(std::move(words));
}

bool StopwordList::contains(std::string_view word) const {
  return words_.contains(std::string(word));
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

std::vector<std::string> content_filter(const std::vector<std::string>& tokens,
                                        const StopwordList& stopwords) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) {
    if (is_placeholder(t) ||
        (utf8_length(t) >= 3 && !stopwords.contains(t))) {
      out.push_back(t);
    }
  }
  return out;
}

}  // namespace forum_sentinel
