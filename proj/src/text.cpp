#include "piia/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_map>

#include "piia/error.hpp"

namespace piia {
namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

bool is_consonant_at(std::string_view w, std::size_t i) {
  if (is_vowel(w[i])) return false;
  if (w[i] == 'y') return i == 0 || !is_consonant_at(w, i - 1);
  return true;
}

// Number of vowel-consonant sequences (the Porter "measure").
int measure(std::string_view w) {
  int m = 0;
  bool prev_vowel = false;
  for (std::size_t i = 0; i < w.size(); ++i) {
    bool vowel = !is_consonant_at(w, i);
    if (!vowel && prev_vowel) ++m;
    prev_vowel = vowel;
  }
  return m;
}

bool has_vowel(std::string_view w) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!is_consonant_at(w, i)) return true;
  }
  return false;
}

bool ends_cvc(std::string_view w) {
  std::size_t n = w.size();
  if (n < 3) return false;
  char last = w[n - 1];
  return is_consonant_at(w, n - 3) && !is_consonant_at(w, n - 2) &&
         is_consonant_at(w, n - 1) && last != 'w' && last != 'x' &&
         last != 'y';
}

std::string repair_stem(std::string stem) {
  std::size_t n = stem.size();
  if (n >= 2 && (stem.ends_with("at") || stem.ends_with("bl") ||
                 stem.ends_with("iz"))) {
    return stem + "e";
  }
  if (n >= 2 && stem[n - 1] == stem[n - 2] && is_consonant_at(stem, n - 1) &&
      stem[n - 1] != 'l' && stem[n - 1] != 's' && stem[n - 1] != 'z') {
    stem.pop_back();
    return stem;
  }
  if (measure(stem) == 1 && ends_cvc(stem)) return stem + "e";
  // Two-letter vowel-consonant stems ("ag", "us") lost a silent e.
  if (n == 2 && !is_consonant_at(stem, 0) && is_consonant_at(stem, 1)) {
    return stem + "e";
  }
  return stem;
}

const std::unordered_map<std::string, std::string>& irregular_forms() {
  static const std::unordered_map<std::string, std::string> forms = {
      {"children", "child"}, {"people", "person"}, {"men", "man"},
      {"women", "woman"},    {"mice", "mouse"},    {"feet", "foot"},
      {"teeth", "tooth"},    {"geese", "goose"},   {"is", "be"},
      {"are", "be"},         {"was", "be"},        {"were", "be"},
      {"has", "have"},       {"had", "have"},      {"does", "do"},
      {"did", "do"},         {"born", "bear"},     {"made", "make"},
      {"sold", "sell"},      {"bought", "buy"},    {"taught", "teach"},
      {"led", "lead"},       {"held", "hold"},     {"won", "win"},
      {"paid", "pay"},       {"indices", "index"}, {"data", "data"},
      {"news", "news"},      {"series", "series"}, {"status", "status"},
  };
  return forms;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '\'' || c == '"') {
      bool at_start = i == 0 || !is_word_char(text[i - 1]);
      std::size_t close = text.find(c, i + 1);
      if (at_start && close != std::string_view::npos && close > i + 1) {
        tokens.push_back({std::string(text.substr(i, close + 1 - i)), i,
                          close + 1, true});
        i = close + 1;
        continue;
      }
      ++i;
      continue;
    }
    if (is_word_char(c)) {
      std::size_t start = i;
      while (i < n) {
        if (is_word_char(text[i])) {
          ++i;
        } else if ((text[i] == '.' || text[i] == '-' || text[i] == '\'') &&
                   i + 1 < n && is_word_char(text[i + 1])) {
          i += 2;
        } else {
          break;
        }
      }
      tokens.push_back({std::string(text.substr(start, i - start)), start, i,
                        false});
      continue;
    }
    ++i;  // punctuation is not tokenized
  }
  return tokens;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string normalize_word(std::string_view token) {
  if (token.size() >= 2 && (token.front() == '\'' || token.front() == '"') &&
      token.back() == token.front()) {
    token = token.substr(1, token.size() - 2);
  }
  return to_lower(token);
}

bool is_number(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') {
    if (s.size() == 1) return false;
    i = 1;
  }
  bool digits = false;
  bool dot = false;
  for (; i < s.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(s[i]))) {
      digits = true;
    } else if (s[i] == '.' && !dot) {
      dot = true;
    } else {
      return false;
    }
  }
  return digits;
}

std::vector<std::string> split_name_units(std::string_view name) {
  std::vector<std::string> units;
  std::string cur;
  for (char c : name) {
    if (c == '_' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) units.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) units.push_back(std::move(cur));
  return units;
}

std::string lemmatize(std::string_view word) {
  std::string w = to_lower(word);
  if (auto it = irregular_forms().find(w); it != irregular_forms().end()) {
    return it->second;
  }
  if (w.size() <= 3 || is_number(w)) return w;
  if (w.ends_with("ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (w.ends_with("sses")) return w.substr(0, w.size() - 2);
  if (w.ends_with("xes") || w.ends_with("ches") || w.ends_with("shes") ||
      w.ends_with("zes")) {
    return w.substr(0, w.size() - 2);
  }
  if (w.ends_with("ied") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (w.ends_with("eed")) return w;
  if (w.ends_with("ed")) {
    std::string stem = w.substr(0, w.size() - 2);
    if (has_vowel(stem)) return repair_stem(std::move(stem));
    return w;
  }
  if (w.ends_with("ing")) {
    std::string stem = w.substr(0, w.size() - 3);
    if (stem.size() >= 2 && has_vowel(stem)) return repair_stem(std::move(stem));
    return w;
  }
  if (w.ends_with("s") && !w.ends_with("ss") && !w.ends_with("us") &&
      !w.ends_with("is")) {
    return w.substr(0, w.size() - 1);
  }
  return w;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

const StopWordList& StopWordList::builtin() {
  static const StopWordList list(std::unordered_set<std::string>{
      // articles and determiners
      "a", "an", "the", "all", "each", "every", "any", "some", "both",
      // prepositions
      "of", "in", "on", "at", "to", "for", "from", "by", "with", "about",
      "into", "than", "as", "per", "over", "under", "above", "below", "between",
      "before", "after", "through", "during", "up", "down", "out", "off",
      // comparison and function words
      "more", "most", "less", "fewer", "not", "no", "only", "very", "such",
      "other", "same", "own", "again", "then", "also", "just", "if", "so", "too",
      "here",
      // auxiliaries
      "is", "are", "was", "were", "be", "been", "being", "do", "does", "did",
      "has", "have", "had", "can", "could", "will", "would", "should", "may",
      "might",
      // wh-words
      "what", "which", "who", "whom", "whose", "where", "when", "why", "how",
      // pronouns and conjunctions
      "it", "its", "they", "them", "their", "this", "that", "these", "those",
      "there", "i", "me", "my", "we", "our", "you", "your", "he", "she", "his",
      "her", "and", "or", "but",
      // request verbs
      "find", "show", "list", "give", "return", "tell", "display", "get",
      "please",
      // punctuation
      ",", ".", "?", "!", ";", ":", "(", ")"});
  return list;
}

StopWordList StopWordList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open stop-word file " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto parts = split_whitespace(line);
    if (parts.empty() || parts[0].starts_with('#')) continue;
    words.insert(to_lower(parts[0]));
  }
  if (words.empty()) {
    throw Error(ErrorCode::kConfiguration, "stop-word file " + path.string() + " is empty");
  }
  return StopWordList(std::move(words));
}

bool StopWordList::contains(std::string_view word) const {
  return words_.contains(to_lower(word));
}

}  // namespace piia
