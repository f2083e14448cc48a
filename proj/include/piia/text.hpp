#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace piia {

// A token of a user utterance with its byte span in the source text.  Quoted
// spans ('...' or "...") form a single token that includes the quotes.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool quoted = false;
};

std::vector<Token> tokenize(std::string_view text);

std::string to_lower(std::string_view s);

// Lowercased token with surrounding quotes removed.
std::string normalize_word(std::string_view token);

bool is_number(std::string_view s);

// Splits a schema identifier on underscores and whitespace, lowercased.
std::vector<std::string> split_name_units(std::string_view name);

// Rule-based lemmatizer: plural -s/-es/-ies, past -ed, progressive -ing with
// doubling repair and silent-e restoration, plus a small irregular lexicon.
std::string lemmatize(std::string_view word);

std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

class StopWordList {
 public:
  StopWordList() = default;
  explicit StopWordList(std::unordered_set<std::string> words)
      : words_(std::move(words)) {}

  static const StopWordList& builtin();
  // One word per line; blank lines and '#' comments are skipped.
  static StopWordList load(const std::filesystem::path& path);

  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }
  const std::unordered_set<std::string>& words() const { return words_; }

 private:
  std::unordered_set<std::string> words_;
};

}  // namespace piia
