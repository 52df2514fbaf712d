#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "newsent/corpus.hpp"

namespace newsent {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TrainConfig {
    int dim = 100;
    int window = 10;
    int min_count = 10;
    int epochs = 300;
    int negative = 5;
    double initial_lr = 0.025;
    std::uint64_t seed = 1;
    int workers = 1;  // > 1 trains lock-free and gives up run-to-run determinism

    /// Throws ConfigError naming the first offending field.
    void validate() const;
};

/// Words ordered by descending frequency, ties by byte order, so indices are reproducible.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::pair<std::string, std::uint64_t>> entries);

    [[nodiscard]] std::size_t size() const { return words_.size(); }
    [[nodiscard]] bool empty() const { return words_.empty(); }
    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view word) const;
    [[nodiscard]] const std::string& word(std::size_t index) const { return words_[index]; }
    [[nodiscard]] std::uint64_t frequency(std::size_t index) const { return counts_[index]; }
    [[nodiscard]] std::uint64_t total_count() const { return total_; }

private:
    std::vector<std::string> words_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, std::size_t> index_;
    std::uint64_t total_ = 0;
};

Vocabulary build_vocab(const Corpus& corpus, int min_count);

struct EmbeddingModel {
    Vocabulary vocab;
    RowMatrix input;   // V x dim, target-word vectors; used for similarity queries
    RowMatrix output;  // V x dim, context vectors

    [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(input.cols()); }
    /// Throws LookupError for out-of-vocabulary words.
    [[nodiscard]] std::span<const double> vector_of(std::string_view word) const;
};

/// One positive (target, context) pair together with its noise words.
struct SkipGramSample {
    std::size_t target = 0;
    std::size_t context = 0;
    std::vector<std::size_t> negatives;
};

/// Negative-sampling loss: -log s(u_c.v_t) - sum_n log s(-u_n.v_t).
double sample_loss(const EmbeddingModel& model, const SkipGramSample& sample);

struct EmbeddingGradient {
    RowMatrix input;
    RowMatrix output;
};

/// Summed loss over `samples` and its exact gradient with respect to every parameter.
double loss_and_gradient(const EmbeddingModel& model, std::span<const SkipGramSample> samples,
                         EmbeddingGradient& grad);

struct TrainStats {
    double initial_loss = 0.0;  // mean over the monitoring sample
    double final_loss = 0.0;
    std::uint64_t pairs_processed = 0;
    std::vector<double> epoch_loss;
};

struct TrainedModel {
    EmbeddingModel model;
    TrainStats stats;
};

/// Skip-gram with negative sampling (noise ~ unigram^0.75), dynamic window, linear
/// learning-rate decay to initial_lr/100. Throws TrainingError on an empty vocabulary,
/// a corpus without any (target, context) pair, or a non-finite loss.
TrainedModel train_skipgram(const Corpus& corpus, const TrainConfig& config);

/// Cosine of the angle between u and v. Throws DomainError on size mismatch or a zero vector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct Neighbor {
    std::string word;
    std::size_t index = 0;
    double similarity = 0.0;
};

/// The k words closest to `word` (itself excluded), descending similarity, ties by
/// ascending vocabulary index. Zero-norm candidate rows score 0.
std::vector<Neighbor> top_k_similar(const EmbeddingModel& model, std::string_view word, std::size_t k);

/// Projection of the mean-centred rows onto the two leading principal axes. Each axis is
/// signed so that its largest-magnitude loading is positive.
Eigen::MatrixX2d pca_project(const Eigen::MatrixXd& vectors);

/// Writes "V dim" then "word v1 ... vdim" for the input vectors, context vectors to
/// `<path>.context`, and TrainConfig plus vocabulary counts to `<path>.json`.
void save_model(const EmbeddingModel& model, const TrainConfig& config,
                const std::filesystem::path& path);

struct LoadedModel {
    EmbeddingModel model;
    TrainConfig config;
};

LoadedModel load_model(const std::filesystem::path& path);

}  // namespace newsent
