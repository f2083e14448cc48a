// Synthetic GloVe-format embeddings: lexicon groups share a base vector,
// everything else seen in the corpus gets its own random vector.
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "piia/restater.hpp"
#include "piia/schema.hpp"
#include "piia/text.hpp"

namespace {

using Vec = std::vector<double>;

Vec gaussian(std::mt19937_64& rng, int d, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  Vec v(d);
  for (auto& x : v) x = n(rng);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"make_embeddings"};
  std::string lexicon = std::string(PIIA_DATA_DIR) + "/lexicon.txt";
  std::string schemas_path = std::string(PIIA_DATA_DIR) + "/schemas.jsonl";
  std::string examples_path = std::string(PIIA_DATA_DIR) + "/examples.jsonl";
  std::string out_path = std::string(PIIA_DATA_DIR) + "/embeddings.txt";
  int dim = 50;
  double noise = 0.05;
  std::uint64_t seed = 11;
  app.add_option("--lexicon", lexicon);
  app.add_option("--schemas", schemas_path);
  app.add_option("--examples", examples_path);
  app.add_option("-o,--out", out_path);
  app.add_option("-d,--dim", dim);
  app.add_option("--noise", noise);
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  try {
    std::mt19937_64 rng(seed);
    const double base_sigma = 1.0 / std::sqrt(static_cast<double>(dim));
    std::map<std::string, Vec> table;

    std::ifstream lex(lexicon);
    if (!lex) throw std::runtime_error("cannot open " + lexicon);
    std::string line;
    while (std::getline(lex, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto words = piia::split_whitespace(line);
      if (words.empty()) continue;
      Vec base = gaussian(rng, dim, base_sigma);
      for (std::size_t i = 0; i < words.size(); ++i) {
        if (table.count(words[i])) continue;
        Vec v = base;
        if (i > 0) {
          Vec e = gaussian(rng, dim, noise);
          for (int k = 0; k < dim; ++k) v[k] += e[k];
        }
        table[words[i]] = v;
      }
    }

    std::set<std::string> vocab;
    piia::SchemaSet schemas(piia::load_schemas(schemas_path));
    for (const auto& s : schemas.all()) {
      for (const auto& unit : s.name_units()) {
        for (const auto& w : piia::split_name_units(unit)) vocab.insert(w);
      }
    }
    for (const auto& ex : piia::load_examples(examples_path, schemas)) {
      for (const auto& t : piia::tokenize(ex.question)) {
        auto w = piia::normalize_word(t.text);
        for (const auto& part : piia::split_whitespace(w)) vocab.insert(part);
      }
    }
    for (const auto& [rule, frags] : piia::TemplateTable::builtin().rules()) {
      for (const auto& frag : frags) {
        for (const auto& w : piia::split_whitespace(frag)) {
          if (w.front() != '{') vocab.insert(piia::to_lower(w));
        }
      }
    }
    for (int n = 0; n <= 100; ++n) vocab.insert(std::to_string(n));

    // Inflected forms resolve through their lemma at lookup time.
    for (const auto& w : vocab) {
      if (table.count(w)) continue;
      auto lemma = piia::lemmatize(w);
      if (!table.count(lemma)) table[lemma] = gaussian(rng, dim, base_sigma);
    }

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << std::setprecision(6) << std::fixed;
    for (const auto& [w, v] : table) {
      out << w;
      for (double x : v) out << ' ' << x;
      out << '\n';
    }
    std::cerr << "wrote " << table.size() << " vectors of dimension " << dim << " to " << out_path
              << "\n";
  } catch (const std::exception& e) {
    std::cerr << "make_embeddings: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
