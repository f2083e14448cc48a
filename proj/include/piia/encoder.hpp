#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "piia/restater.hpp"
#include "piia/schema.hpp"
#include "piia/text.hpp"

namespace piia {

class EmbeddingTable {
 public:
  enum class UnknownPolicy { kMean, kZero };

  EmbeddingTable() = default;
  EmbeddingTable(int dimension, std::unordered_map<std::string, Eigen::VectorXd> vectors,
                 UnknownPolicy policy = UnknownPolicy::kMean);

  // GloVe layout: word followed by d floats per line.
  static EmbeddingTable load(const std::filesystem::path& path,
                             UnknownPolicy policy = UnknownPolicy::kMean);
  static EmbeddingTable parse(std::string_view text, std::string_view source = "<memory>",
                              UnknownPolicy policy = UnknownPolicy::kMean);

  int dimension() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  const Eigen::VectorXd& unknown() const { return unknown_; }
  const Eigen::VectorXd* find(std::string_view word) const;

  // Normalized word, then its lemma, then the mean of its name units
  // ("pet_age" -> pet, age); the unknown vector otherwise.
  Eigen::VectorXd lookup(std::string_view token) const;
  // d x N matrix of lookups.
  Eigen::MatrixXd lookup_all(const std::vector<std::string>& tokens) const;

 private:
  const Eigen::VectorXd* find_word_or_lemma(const std::string& word) const;

  int dim_ = 0;
  std::unordered_map<std::string, Eigen::VectorXd> vectors_;
  Eigen::VectorXd unknown_;
};

struct ProjectionLayer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

// Stack of tanh(W v + b) layers; depth 1 by default.
class Projection {
 public:
  Projection() = default;
  explicit Projection(std::vector<ProjectionLayer> layers);

  static Projection identity(int dimension, int depth = 1);
  // Identity plus N(0, noise^2) entries, zero bias.
  static Projection random(int dimension, int depth, std::uint64_t seed, double noise);

  int dimension() const;
  int depth() const { return static_cast<int>(layers_.size()); }
  const std::vector<ProjectionLayer>& layers() const { return layers_; }
  std::vector<ProjectionLayer>& layers() { return layers_; }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& input) const;
  std::size_t parameter_count() const;
  // Flat view over all weights then biases, layer by layer.
  double& parameter(std::size_t index);

 private:
  std::vector<ProjectionLayer> layers_;
};

struct EncoderModel {
  Projection projection;
  double threshold = 0.0;

  void save(const std::filesystem::path& path) const;
  static EncoderModel load(const std::filesystem::path& path);
};

// H (d x N): column i = projection(lookup(token_i)).
Eigen::MatrixXd encode(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                       const Projection& projection);

// A_nm = cos(h_n, u_m); 0 when either vector has zero norm.
Eigen::MatrixXd cosine_matrix(const Eigen::MatrixXd& h, const Eigen::MatrixXd& u);

// s = (1/N) sum_n max_m A_nm.
double sentence_similarity(const Eigen::MatrixXd& a);

double loss(const Eigen::MatrixXd& a_pos, const Eigen::MatrixXd& a_neg, double margin,
            double lambda);

// Token views matched by the aligner and used for training: question words
// that are neither stop words nor template words, and restatement tokens that
// are not template-origin or stop words.
struct ContentFilter {
  StopWordList stop_words = StopWordList::builtin();
  std::set<std::string> template_words = template_vocabulary(TemplateTable::builtin());

  bool keep_question_word(std::string_view token) const;
  bool keep_restated(const RestatedToken& token) const;
  std::vector<std::string> question_view(std::string_view question) const;
  std::vector<std::string> restatement_view(const RestatedUtterance& restated) const;
};

struct TrainConfig {
  double margin = 1.0;
  double lambda = 0.5;
  double learning_rate = 0.01;
  int epochs = 20;
  int random_negatives = 50;
  int perturbed_negatives = 50;
  std::uint64_t seed = 7;
  int depth = 1;
  double init_noise = 0.01;

  void validate() const;
};

struct TrainingTriple {
  std::string x;
  RestatedUtterance pos;
  RestatedUtterance neg;
  std::size_t example = 0;
  bool perturbed = false;
};

std::vector<TrainingTriple> make_triples(const std::vector<Example>& examples,
                                         const SchemaSet& schemas, const TrainConfig& config,
                                         const TemplateTable& templates = TemplateTable::builtin());

// Replaces column leaves (p = 0.5 each, at least one) and value leaves
// (p = 0.5 each) of a restatement.  Returns false when nothing could change.
bool perturb_restatement(const RestatedUtterance& pos, const DatabaseSchema& schema,
                         const std::vector<std::string>& value_pool, std::uint64_t seed,
                         RestatedUtterance& out);

// Embedding lookups of the three content views, deduplicated so every
// distinct utterance is resolved once.
class TripleSet {
 public:
  TripleSet(const std::vector<TrainingTriple>& triples, const EmbeddingTable& table,
            const ContentFilter& filter = ContentFilter{});

  struct Entry {
    std::size_t x, pos, neg;
  };
  std::size_t size() const { return entries_.size(); }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  const Eigen::MatrixXd& utterance(std::size_t i) const { return utterances_[i]; }

 private:
  std::size_t intern(const std::vector<std::string>& words, const EmbeddingTable& table);

  std::vector<Eigen::MatrixXd> utterances_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Entry> entries_;
};

struct TripleScore {
  double s_pos = 0.0;
  double s_neg = 0.0;
  double loss = 0.0;
};

TripleScore score_triple(const Eigen::MatrixXd& x, const Eigen::MatrixXd& pos,
                         const Eigen::MatrixXd& neg, const Projection& projection, double margin,
                         double lambda);

// Analytic gradient of the loss; layout follows Projection::parameter.
struct LossGradient {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
  TripleScore score;
};

LossGradient loss_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& pos,
                           const Eigen::MatrixXd& neg, const Projection& projection,
                           double margin, double lambda);

// p = (1 / 2|X|) sum (s_pos + s_neg).  The parallel version scores triples
// concurrently and sums in index order, so both return identical values.
double threshold_serial(const TripleSet& set, const Projection& projection);
double threshold_parallel(const TripleSet& set, const Projection& projection);

struct TrainResult {
  EncoderModel model;
  std::vector<double> epoch_losses;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

TrainResult train(const TripleSet& set, int dimension, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});
TrainResult train(const std::vector<TrainingTriple>& triples, const EmbeddingTable& table,
                  const TrainConfig& config, const ContentFilter& filter = ContentFilter{});

// Drop-in contextual encoders produce both matrices from the two token lists.
class PairEncoder {
 public:
  virtual ~PairEncoder() = default;
  virtual std::pair<Eigen::MatrixXd, Eigen::MatrixXd> encode_pair(
      const std::vector<std::string>& x, const std::vector<std::string>& restated) const = 0;
};

class LocalEncoder : public PairEncoder {
 public:
  LocalEncoder(const EmbeddingTable& table, const Projection& projection)
      : table_(table), projection_(projection) {}
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> encode_pair(
      const std::vector<std::string>& x, const std::vector<std::string>& restated) const override;

 private:
  const EmbeddingTable& table_;
  const Projection& projection_;
};

}  // namespace piia
