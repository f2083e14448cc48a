#include "piia/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "piia/error.hpp"
#include "piia/ir.hpp"
#include "piia/sql.hpp"

namespace piia {

EmbeddingTable::EmbeddingTable(int dimension,
                               std::unordered_map<std::string, Eigen::VectorXd> vectors,
                               UnknownPolicy policy)
    : dim_(dimension), vectors_(std::move(vectors)) {
  if (dim_ <= 0) throw Error(ErrorCode::kConfiguration, "embedding dimension must be positive");
  unknown_ = Eigen::VectorXd::Zero(dim_);
  for (const auto& [word, v] : vectors_) {
    if (v.size() != dim_) {
      throw Error(ErrorCode::kConfiguration, "embedding for '" + word + "' has dimension " +
                                                 std::to_string(v.size()) + ", expected " +
                                                 std::to_string(dim_));
    }
    if (policy == UnknownPolicy::kMean) unknown_ += v;
  }
  if (policy == UnknownPolicy::kMean && !vectors_.empty()) {
    unknown_ /= static_cast<double>(vectors_.size());
  }
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, UnknownPolicy policy) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open embedding file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string(), policy);
}

EmbeddingTable EmbeddingTable::parse(std::string_view text, std::string_view source,
                                     UnknownPolicy policy) {
  std::unordered_map<std::string, Eigen::VectorXd> vectors;
  int dim = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    std::vector<double> values;
    std::string field;
    while (ls >> field) {
      char* end = nullptr;
      double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0') {
        throw Error(ErrorCode::kParse, std::string(source) + ":" + std::to_string(lineno) +
                                           ": bad float '" + field + "'");
      }
      values.push_back(v);
    }
    if (dim == 0) dim = static_cast<int>(values.size());
    if (values.empty() || static_cast<int>(values.size()) != dim) {
      throw Error(ErrorCode::kParse, std::string(source) + ":" + std::to_string(lineno) +
                                         ": expected " + std::to_string(dim) + " values, got " +
                                         std::to_string(values.size()));
    }
    vectors[to_lower(word)] = Eigen::Map<Eigen::VectorXd>(values.data(), dim);
  }
  if (dim == 0) throw Error(ErrorCode::kParse, std::string(source) + ": no embeddings");
  return EmbeddingTable(dim, std::move(vectors), policy);
}

const Eigen::VectorXd* EmbeddingTable::find(std::string_view word) const {
  auto it = vectors_.find(std::string(word));
  return it == vectors_.end() ? nullptr : &it->second;
}

const Eigen::VectorXd* EmbeddingTable::find_word_or_lemma(const std::string& word) const {
  if (const auto* v = find(word)) return v;
  return find(lemmatize(word));
}

Eigen::VectorXd EmbeddingTable::lookup(std::string_view token) const {
  std::string word = normalize_word(token);
  if (const auto* v = find_word_or_lemma(word)) return *v;
  auto units = split_name_units(word);
  if (units.size() > 1) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim_);
    int found = 0;
    for (const auto& u : units) {
      if (const auto* v = find_word_or_lemma(u)) {
        sum += *v;
        ++found;
      }
    }
    if (found) return sum / found;
  }
  return unknown_;
}

Eigen::MatrixXd EmbeddingTable::lookup_all(const std::vector<std::string>& tokens) const {
  Eigen::MatrixXd out(dim_, static_cast<Eigen::Index>(tokens.size()));
  for (std::size_t i = 0; i < tokens.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = lookup(tokens[i]);
  return out;
}

Projection::Projection(std::vector<ProjectionLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw Error(ErrorCode::kConfiguration, "projection needs at least one layer");
  const auto d = layers_.front().weight.rows();
  for (const auto& l : layers_) {
    if (l.weight.rows() != d || l.weight.cols() != d || l.bias.size() != d) {
      throw Error(ErrorCode::kConfiguration, "projection layers must be d x d with a d-vector bias");
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw Error(ErrorCode::kNumeric, "projection has non-finite entries");
    }
  }
}

Projection Projection::identity(int dimension, int depth) {
  if (depth < 1) throw Error(ErrorCode::kConfiguration, "projection depth must be >= 1");
  std::vector<ProjectionLayer> layers;
  for (int i = 0; i < depth; ++i) {
    layers.push_back({Eigen::MatrixXd::Identity(dimension, dimension), Eigen::VectorXd::Zero(dimension)});
  }
  return Projection(std::move(layers));
}

Projection Projection::random(int dimension, int depth, std::uint64_t seed, double noise) {
  Projection p = identity(dimension, depth);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, noise);
  for (auto& l : p.layers_) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] += dist(rng);
  }
  return p;
}

int Projection::dimension() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.rows());
}

Eigen::MatrixXd Projection::apply(const Eigen::MatrixXd& input) const {
  Eigen::MatrixXd h = input;
  for (const auto& l : layers_) {
    h = ((l.weight * h).colwise() + l.bias).array().tanh().matrix();
  }
  return h;
}

std::size_t Projection::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

double& Projection::parameter(std::size_t index) {
  for (auto& l : layers_) {
    auto w = static_cast<std::size_t>(l.weight.size());
    if (index < w) return l.weight.data()[index];
    index -= w;
    auto b = static_cast<std::size_t>(l.bias.size());
    if (index < b) return l.bias.data()[index];
    index -= b;
  }
  throw Error(ErrorCode::kNotFound, "parameter index out of range");
}

void EncoderModel::save(const std::filesystem::path& path) const {
  nlohmann::json doc;
  doc["dimension"] = projection.dimension();
  doc["threshold"] = threshold;
  doc["layers"] = nlohmann::json::array();
  for (const auto& l : projection.layers()) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      std::vector<double> row(l.weight.cols());
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) row[c] = l.weight(r, c);
      rows.push_back(row);
    }
    std::vector<double> bias(l.bias.data(), l.bias.data() + l.bias.size());
    doc["layers"].push_back({{"weight", rows}, {"bias", bias}});
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write model file " + path.string());
  out << doc.dump(1) << "\n";
}

EncoderModel EncoderModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open model file " + path.string());
  EncoderModel model;
  try {
    auto doc = nlohmann::json::parse(in);
    int d = doc.at("dimension").get<int>();
    std::vector<ProjectionLayer> layers;
    for (const auto& jl : doc.at("layers")) {
      ProjectionLayer l{Eigen::MatrixXd(d, d), Eigen::VectorXd(d)};
      const auto& rows = jl.at("weight");
      if (static_cast<int>(rows.size()) != d) throw Error(ErrorCode::kParse, "weight row count != dimension");
      for (int r = 0; r < d; ++r) {
        auto row = rows[r].get<std::vector<double>>();
        if (static_cast<int>(row.size()) != d) throw Error(ErrorCode::kParse, "weight row length != dimension");
        for (int c = 0; c < d; ++c) l.weight(r, c) = row[c];
      }
      auto bias = jl.at("bias").get<std::vector<double>>();
      if (static_cast<int>(bias.size()) != d) throw Error(ErrorCode::kParse, "bias length != dimension");
      for (int c = 0; c < d; ++c) l.bias(c) = bias[c];
      layers.push_back(std::move(l));
    }
    model.projection = Projection(std::move(layers));
    model.threshold = doc.at("threshold").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return model;
}

Eigen::MatrixXd encode(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                       const Projection& projection) {
  if (tokens.empty()) throw Error(ErrorCode::kValidation, "cannot encode an empty utterance");
  if (table.dimension() != projection.dimension()) {
    throw Error(ErrorCode::kConfiguration,
                "embedding dimension " + std::to_string(table.dimension()) +
                    " does not match projection dimension " + std::to_string(projection.dimension()));
  }
  return projection.apply(table.lookup_all(tokens));
}

namespace {

// Columns scaled to unit length; zero columns stay zero.
Eigen::MatrixXd normalized_columns(const Eigen::MatrixXd& m, Eigen::VectorXd& norms) {
  norms = m.colwise().norm().transpose();
  Eigen::MatrixXd out = m;
  for (Eigen::Index i = 0; i < m.cols(); ++i) {
    if (norms(i) > 0.0) {
      out.col(i) /= norms(i);
    } else {
      out.col(i).setZero();
    }
  }
  return out;
}

// Lowest index of the row maximum.
Eigen::Index row_argmax(const Eigen::MatrixXd& a, Eigen::Index n) {
  Eigen::Index best = 0;
  for (Eigen::Index m = 1; m < a.cols(); ++m) {
    if (a(n, m) > a(n, best)) best = m;
  }
  return best;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Eigen::MatrixXd cosine_matrix(const Eigen::MatrixXd& h, const Eigen::MatrixXd& u) {
  if (h.rows() != u.rows()) {
    throw Error(ErrorCode::kConfiguration, "cosine of vectors with different dimensions");
  }
  Eigen::VectorXd hn, un;
  return normalized_columns(h, hn).transpose() * normalized_columns(u, un);
}

double sentence_similarity(const Eigen::MatrixXd& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  return a.rowwise().maxCoeff().sum() / static_cast<double>(a.rows());
}

double loss(const Eigen::MatrixXd& a_pos, const Eigen::MatrixXd& a_neg, double margin,
            double lambda) {
  double hinge = std::max(0.0, margin - sentence_similarity(a_pos) + sentence_similarity(a_neg));
  return hinge + lambda * (a_pos.cwiseAbs().sum() + a_neg.cwiseAbs().sum());
}

bool ContentFilter::keep_question_word(std::string_view token) const {
  if (token.size() >= 2 && (token.front() == '\'' || token.front() == '"')) return true;
  std::string w = normalize_word(token);
  if (w.empty()) return false;
  return !stop_words.contains(w) && !template_words.contains(w);
}

bool ContentFilter::keep_restated(const RestatedToken& token) const {
  if (token.origin == TokenOrigin::kTemplate) return false;
  return !stop_words.contains(normalize_word(token.surface));
}

std::vector<std::string> ContentFilter::question_view(std::string_view question) const {
  std::vector<std::string> all, kept;
  for (const auto& t : tokenize(question)) {
    all.push_back(normalize_word(t.text));
    if (keep_question_word(t.text)) kept.push_back(all.back());
  }
  return kept.empty() ? all : kept;
}

std::vector<std::string> ContentFilter::restatement_view(const RestatedUtterance& restated) const {
  std::vector<std::string> all, kept;
  for (const auto& t : restated.tokens) {
    all.push_back(normalize_word(t.surface));
    if (keep_restated(t)) kept.push_back(all.back());
  }
  return kept.empty() ? all : kept;
}

void TrainConfig::validate() const {
  if (!(margin > 0.0)) throw Error(ErrorCode::kConfiguration, "margin must be > 0");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kConfiguration, "lambda must be >= 0");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kConfiguration, "learning rate must be > 0");
  if (epochs < 0) throw Error(ErrorCode::kConfiguration, "epochs must be >= 0");
  if (random_negatives < 0 || perturbed_negatives < 0) {
    throw Error(ErrorCode::kConfiguration, "negative counts must be >= 0");
  }
  if (depth < 1) throw Error(ErrorCode::kConfiguration, "depth must be >= 1");
}

bool perturb_restatement(const RestatedUtterance& pos, const DatabaseSchema& schema,
                         const std::vector<std::string>& value_pool, std::uint64_t seed,
                         RestatedUtterance& out) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  out = pos;
  std::vector<std::size_t> columns, values;
  for (std::size_t i = 0; i < pos.tokens.size(); ++i) {
    if (pos.tokens[i].origin == TokenOrigin::kColumn) columns.push_back(i);
    if (pos.tokens[i].origin == TokenOrigin::kValue) values.push_back(i);
  }
  auto pick_other = [&](const std::vector<std::string>& pool, const std::string& current,
                        std::string& chosen) {
    std::vector<const std::string*> others;
    for (const auto& p : pool) {
      if (p != current) others.push_back(&p);
    }
    if (others.empty()) return false;
    chosen = *others[std::uniform_int_distribution<std::size_t>(0, others.size() - 1)(rng)];
    return true;
  };
  std::vector<std::string> column_pool;
  for (const auto& c : schema.distinct_columns()) column_pool.push_back(c.name);

  bool column_changed = false;
  for (auto i : columns) {
    std::string repl;
    if (coin(rng) && pick_other(column_pool, pos.tokens[i].surface, repl)) {
      out.tokens[i].surface = repl;
      column_changed = true;
    }
  }
  if (!column_changed && !columns.empty()) {
    auto i = columns[std::uniform_int_distribution<std::size_t>(0, columns.size() - 1)(rng)];
    std::string repl;
    if (pick_other(column_pool, pos.tokens[i].surface, repl)) {
      out.tokens[i].surface = repl;
      column_changed = true;
    }
  }
  bool value_changed = false;
  for (auto i : values) {
    std::string repl;
    if (coin(rng) && pick_other(value_pool, pos.tokens[i].surface, repl)) {
      out.tokens[i].surface = repl;
      value_changed = true;
    }
  }
  if (!column_changed && !value_changed && !values.empty()) {
    auto i = values[std::uniform_int_distribution<std::size_t>(0, values.size() - 1)(rng)];
    std::string repl;
    if (pick_other(value_pool, pos.tokens[i].surface, repl)) {
      out.tokens[i].surface = repl;
      value_changed = true;
    }
  }
  out.text = join(out.surfaces(), " ");
  return (column_changed || value_changed) && out.text != pos.text;
}

std::vector<TrainingTriple> make_triples(const std::vector<Example>& examples,
                                         const SchemaSet& schemas, const TrainConfig& config,
                                         const TemplateTable& templates) {
  config.validate();
  if (config.random_negatives == 0 && config.perturbed_negatives == 0) return {};
  std::vector<RestatedUtterance> restated;
  restated.reserve(examples.size());
  std::map<std::string, std::set<std::string>> pools;
  for (const auto& ex : examples) {
    const auto& schema = schemas.at(ex.db_id);
    restated.push_back(restate(to_ir(parse_sql(ex.gold_sql, schema), schema), schema, templates));
    for (const auto& t : restated.back().tokens) {
      if (t.origin == TokenOrigin::kValue) pools[ex.db_id].insert(t.surface);
    }
  }

  std::vector<TrainingTriple> triples;
  triples.reserve(examples.size() *
                  static_cast<std::size_t>(config.random_negatives + config.perturbed_negatives));
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    const auto& pos = restated[i];
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < examples.size(); ++j) {
      if (j != i && restated[j].text != pos.text) others.push_back(j);
    }
    std::mt19937_64 rng(config.seed * 1000003ULL + i);
    auto random_negative = [&]() {
      if (others.empty()) {
        throw Error(ErrorCode::kValidation,
                    "cannot draw random negatives for example " + std::to_string(i) +
                        ": no other pair with a different restatement");
      }
      auto j = others[std::uniform_int_distribution<std::size_t>(0, others.size() - 1)(rng)];
      return TrainingTriple{ex.question, pos, restated[j], i, false};
    };
    for (int k = 0; k < config.random_negatives; ++k) triples.push_back(random_negative());

    const auto& pool_set = pools[ex.db_id];
    std::vector<std::string> pool(pool_set.begin(), pool_set.end());
    const auto& schema = schemas.at(ex.db_id);
    for (int k = 0; k < config.perturbed_negatives; ++k) {
      RestatedUtterance neg;
      if (perturb_restatement(pos, schema, pool, rng(), neg)) {
        triples.push_back({ex.question, pos, std::move(neg), i, true});
      } else {
        triples.push_back(random_negative());
      }
    }
  }
  return triples;
}

TripleSet::TripleSet(const std::vector<TrainingTriple>& triples, const EmbeddingTable& table,
                     const ContentFilter& filter) {
  entries_.reserve(triples.size());
  for (const auto& t : triples) {
    Entry e{};
    e.x = intern(filter.question_view(t.x), table);
    e.pos = intern(filter.restatement_view(t.pos), table);
    e.neg = intern(filter.restatement_view(t.neg), table);
    entries_.push_back(e);
  }
}

std::size_t TripleSet::intern(const std::vector<std::string>& words, const EmbeddingTable& table) {
  std::string key = join(words, "\x1f");
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  utterances_.push_back(table.lookup_all(words));
  index_.emplace(std::move(key), utterances_.size() - 1);
  return utterances_.size() - 1;
}

TripleScore score_triple(const Eigen::MatrixXd& x, const Eigen::MatrixXd& pos,
                         const Eigen::MatrixXd& neg, const Projection& projection, double margin,
                         double lambda) {
  Eigen::MatrixXd h = projection.apply(x);
  Eigen::MatrixXd a_pos = cosine_matrix(h, projection.apply(pos));
  Eigen::MatrixXd a_neg = cosine_matrix(h, projection.apply(neg));
  return {sentence_similarity(a_pos), sentence_similarity(a_neg), loss(a_pos, a_neg, margin, lambda)};
}

namespace {

struct Forward {
  std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts[l + 1] = layer l output
};

Forward forward(const Eigen::MatrixXd& input, const Projection& projection) {
  Forward f;
  f.acts.push_back(input);
  for (const auto& l : projection.layers()) {
    f.acts.push_back(((l.weight * f.acts.back()).colwise() + l.bias).array().tanh().matrix());
  }
  return f;
}

// Gradients of sum(G .* cos(H, U)) w.r.t. H and U.
void cosine_backward(const Eigen::MatrixXd& h, const Eigen::MatrixXd& u, const Eigen::MatrixXd& a,
                     const Eigen::MatrixXd& g, Eigen::MatrixXd& gh, Eigen::MatrixXd& gu) {
  Eigen::VectorXd hn, un;
  Eigen::MatrixXd hh = normalized_columns(h, hn);
  Eigen::MatrixXd uh = normalized_columns(u, un);
  Eigen::MatrixXd ga = g.cwiseProduct(a);
  Eigen::VectorXd row = ga.rowwise().sum();
  Eigen::VectorXd col = ga.colwise().sum().transpose();
  gh = uh * g.transpose() - hh * row.asDiagonal();
  gu = hh * g - uh * col.asDiagonal();
  for (Eigen::Index i = 0; i < gh.cols(); ++i) gh.col(i) = hn(i) > 0.0 ? Eigen::VectorXd(gh.col(i) / hn(i)) : Eigen::VectorXd::Zero(gh.rows());
  for (Eigen::Index i = 0; i < gu.cols(); ++i) gu.col(i) = un(i) > 0.0 ? Eigen::VectorXd(gu.col(i) / un(i)) : Eigen::VectorXd::Zero(gu.rows());
}

void backward(const Forward& f, Eigen::MatrixXd grad, const Projection& projection,
              LossGradient& out) {
  for (int l = projection.depth() - 1; l >= 0; --l) {
    const auto& y = f.acts[l + 1];
    Eigen::MatrixXd dz = grad.cwiseProduct((1.0 - y.array().square()).matrix());
    out.weight[l] += dz * f.acts[l].transpose();
    out.bias[l] += dz.rowwise().sum();
    if (l > 0) grad = projection.layers()[l].weight.transpose() * dz;
  }
}

}  // namespace

LossGradient loss_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& pos,
                           const Eigen::MatrixXd& neg, const Projection& projection,
                           double margin, double lambda) {
  LossGradient out;
  for (const auto& l : projection.layers()) {
    out.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    out.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  Forward fx = forward(x, projection);
  Forward fp = forward(pos, projection);
  Forward fn = forward(neg, projection);
  const auto& h = fx.acts.back();
  const auto& up = fp.acts.back();
  const auto& un = fn.acts.back();
  Eigen::MatrixXd a_pos = cosine_matrix(h, up);
  Eigen::MatrixXd a_neg = cosine_matrix(h, un);
  out.score = {sentence_similarity(a_pos), sentence_similarity(a_neg), loss(a_pos, a_neg, margin, lambda)};

  Eigen::MatrixXd g_pos = lambda * a_pos.unaryExpr([](double v) { return sign(v); });
  Eigen::MatrixXd g_neg = lambda * a_neg.unaryExpr([](double v) { return sign(v); });
  if (margin - out.score.s_pos + out.score.s_neg > 0.0) {
    const double inv_n = 1.0 / static_cast<double>(a_pos.rows());
    for (Eigen::Index n = 0; n < a_pos.rows(); ++n) {
      g_pos(n, row_argmax(a_pos, n)) -= inv_n;
      g_neg(n, row_argmax(a_neg, n)) += inv_n;
    }
  }
  Eigen::MatrixXd gh1, gup, gh2, gun;
  cosine_backward(h, up, a_pos, g_pos, gh1, gup);
  cosine_backward(h, un, a_neg, g_neg, gh2, gun);
  backward(fx, gh1 + gh2, projection, out);
  backward(fp, gup, projection, out);
  backward(fn, gun, projection, out);
  return out;
}

namespace {

std::vector<double> triple_sums(const TripleSet& set, const Projection& projection, bool parallel) {
  std::vector<double> sums(set.size());
  const auto n = static_cast<long>(set.size());
  auto body = [&](long i) {
    const auto& e = set.entry(static_cast<std::size_t>(i));
    auto s = score_triple(set.utterance(e.x), set.utterance(e.pos), set.utterance(e.neg),
                          projection, 1.0, 0.0);
    sums[static_cast<std::size_t>(i)] = s.s_pos + s.s_neg;
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (long i = 0; i < n; ++i) body(i);
  } else {
    for (long i = 0; i < n; ++i) body(i);
  }
  return sums;
}

double average_half(const std::vector<double>& sums) {
  if (sums.empty()) throw Error(ErrorCode::kValidation, "threshold needs at least one triple");
  double total = 0.0;
  for (double v : sums) total += v;
  return total / (2.0 * static_cast<double>(sums.size()));
}

}  // namespace

double threshold_serial(const TripleSet& set, const Projection& projection) {
  return average_half(triple_sums(set, projection, false));
}

double threshold_parallel(const TripleSet& set, const Projection& projection) {
  return average_half(triple_sums(set, projection, true));
}

TrainResult train(const TripleSet& set, int dimension, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (set.size() == 0) throw Error(ErrorCode::kValidation, "training needs at least one triple");
  TrainResult result;
  Projection proj = Projection::random(dimension, config.depth, config.seed, config.init_noise);
  std::vector<std::size_t> order(set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(config.seed ^ 0x5eedULL);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& e = set.entry(order[k]);
      auto g = loss_gradient(set.utterance(e.x), set.utterance(e.pos), set.utterance(e.neg), proj,
                             config.margin, config.lambda);
      if (!std::isfinite(g.score.loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch + 1 << ", triple " << order[k]
            << " (s_pos=" << g.score.s_pos << ", s_neg=" << g.score.s_neg << ")";
        throw Error(ErrorCode::kNumeric, msg.str());
      }
      total += g.score.loss;
      for (int l = 0; l < proj.depth(); ++l) {
        proj.layers()[l].weight -= config.learning_rate * g.weight[l];
        proj.layers()[l].bias -= config.learning_rate * g.bias[l];
      }
    }
    double mean = total / static_cast<double>(order.size());
    result.epoch_losses.push_back(mean);
    if (on_epoch) on_epoch(epoch + 1, mean);
  }
  result.model.threshold = threshold_parallel(set, proj);
  result.model.projection = std::move(proj);
  return result;
}

TrainResult train(const std::vector<TrainingTriple>& triples, const EmbeddingTable& table,
                  const TrainConfig& config, const ContentFilter& filter) {
  return train(TripleSet(triples, table, filter), table.dimension(), config);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> LocalEncoder::encode_pair(
    const std::vector<std::string>& x, const std::vector<std::string>& restated) const {
  return {encode(x, table_, projection_), encode(restated, table_, projection_)};
}

}  // namespace piia
