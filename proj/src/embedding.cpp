#include "newsent/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "newsent/errors.hpp"
#include "newsent/series.hpp"

namespace newsent {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// d(loss)/d(score) for one logistic term; label 1 for the observed context, 0 for noise.
double score_gradient(double score, double label) { return sigmoid(score) - label; }

double term_loss(double score, double label) { return label > 0.5 ? softplus(-score) : softplus(score); }

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

private:
    std::mt19937_64 engine_;
};

class NoiseSampler {
public:
    explicit NoiseSampler(const Vocabulary& vocab) : cumulative_(vocab.size()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            acc += std::pow(static_cast<double>(vocab.frequency(i)), 0.75);
            cumulative_[i] = acc;
        }
    }

    std::size_t draw(Rng& rng) const {
        const double x = rng.uniform() * cumulative_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
    }

private:
    std::vector<double> cumulative_;
};

// Raw parameter access; the shared variant goes through relaxed atomics so concurrent
// workers race benignly instead of invoking undefined behaviour.
template <bool Shared>
struct Access {
    static double load(double& x) {
        if constexpr (Shared) return std::atomic_ref<double>(x).load(std::memory_order_relaxed);
        else return x;
    }
    static void store(double& x, double v) {
        if constexpr (Shared) std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
        else x = v;
    }
};

template <bool Shared>
void sgd_pair(double* input, double* output, std::size_t dim, std::size_t target, std::size_t context,
              std::span<const std::size_t> negatives, double lr, std::vector<double>& v_grad) {
    using A = Access<Shared>;
    double* v = input + target * dim;
    std::fill(v_grad.begin(), v_grad.end(), 0.0);
    auto update = [&](std::size_t word, double label) {
        double* u = output + word * dim;
        double score = 0.0;
        for (std::size_t d = 0; d < dim; ++d) score += A::load(v[d]) * A::load(u[d]);
        const double g = score_gradient(score, label);
        for (std::size_t d = 0; d < dim; ++d) {
            const double ud = A::load(u[d]);
            v_grad[d] += g * ud;
            A::store(u[d], ud - lr * g * A::load(v[d]));
        }
    };
    update(context, 1.0);
    for (auto n : negatives) {
        if (n == context) continue;
        update(n, 0.0);
    }
    for (std::size_t d = 0; d < dim; ++d) A::store(v[d], A::load(v[d]) - lr * v_grad[d]);
}

using Sentence = std::vector<std::uint32_t>;

std::vector<Sentence> index_corpus(const Corpus& corpus, const Vocabulary& vocab) {
    std::vector<Sentence> out;
    out.reserve(corpus.records.size());
    for (const auto& rec : corpus.records) {
        Sentence s;
        for (const auto& t : rec.tokens) {
            if (auto idx = vocab.index_of(t)) s.push_back(static_cast<std::uint32_t>(*idx));
        }
        if (!s.empty()) out.push_back(std::move(s));
    }
    return out;
}

std::vector<SkipGramSample> monitoring_sample(const std::vector<Sentence>& sentences, const TrainConfig& cfg,
                                              const NoiseSampler& noise, std::size_t count) {
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (sentences[i].size() >= 2) usable.push_back(i);
    }
    if (usable.empty()) return {};
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<SkipGramSample> out;
    out.reserve(count);
    while (out.size() < count) {
        const auto& s = sentences[usable[rng.below(usable.size())]];
        const auto pos = rng.below(s.size());
        const auto reach = 1 + rng.below(static_cast<std::size_t>(cfg.window));
        const auto lo = pos >= reach ? pos - reach : 0;
        const auto hi = std::min(s.size() - 1, pos + reach);
        auto ctx = lo + rng.below(hi - lo);
        if (ctx >= pos) ++ctx;
        SkipGramSample sample{s[pos], s[ctx], {}};
        for (int k = 0; k < cfg.negative; ++k) sample.negatives.push_back(noise.draw(rng));
        out.push_back(std::move(sample));
    }
    return out;
}

double mean_loss(const EmbeddingModel& model, std::span<const SkipGramSample> samples) {
    double total = 0.0;
    for (const auto& s : samples) total += sample_loss(model, s);
    return samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
}

struct EpochState {
    const std::vector<Sentence>* sentences;
    const NoiseSampler* noise;
    const TrainConfig* cfg;
    double* input;
    double* output;
    std::size_t dim;
    std::atomic<std::uint64_t>* processed;
    std::atomic<std::uint64_t>* pairs;
    std::uint64_t total_work;
};

template <bool Shared>
void run_shard(const EpochState& st, std::size_t shard, std::size_t shards, Rng& rng) {
    const auto& cfg = *st.cfg;
    std::vector<double> v_grad(st.dim);
    std::vector<std::size_t> negatives(static_cast<std::size_t>(cfg.negative));
    std::uint64_t local_pairs = 0;
    for (std::size_t si = shard; si < st.sentences->size(); si += shards) {
        const auto& s = (*st.sentences)[si];
        for (std::size_t pos = 0; pos < s.size(); ++pos) {
            const double progress =
                static_cast<double>(st.processed->load(std::memory_order_relaxed)) / static_cast<double>(st.total_work);
            const double lr = cfg.initial_lr * std::max(0.01, 1.0 - 0.99 * progress);
            const auto reach = 1 + rng.below(static_cast<std::size_t>(cfg.window));
            const auto lo = pos >= reach ? pos - reach : 0;
            const auto hi = std::min(s.size() - 1, pos + reach);
            for (std::size_t c = lo; c <= hi; ++c) {
                if (c == pos) continue;
                for (auto& n : negatives) n = st.noise->draw(rng);
                sgd_pair<Shared>(st.input, st.output, st.dim, s[pos], s[c], negatives, lr, v_grad);
                ++local_pairs;
            }
            st.processed->fetch_add(1, std::memory_order_relaxed);
        }
    }
    st.pairs->fetch_add(local_pairs, std::memory_order_relaxed);
}

void write_matrix(std::ostream& out, const Vocabulary& vocab, const RowMatrix& m) {
    out << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << vocab.word(static_cast<std::size_t>(i));
        for (Eigen::Index d = 0; d < m.cols(); ++d) out << ' ' << format_number(m(i, d));
        out << '\n';
    }
}

RowMatrix read_matrix(const std::filesystem::path& path, std::vector<std::string>& words) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read model '{}'", path.string()));
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(fmt::format("{}: empty model file", path.string()));
    std::istringstream header(line);
    long rows = -1, cols = -1;
    if (!(header >> rows >> cols) || rows < 0 || cols < 1) {
        throw ConfigError(fmt::format("{}: bad header, expected 'V dim'", path.string()));
    }
    RowMatrix m(rows, cols);
    words.clear();
    for (long i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw ConfigError(fmt::format("{}: truncated at row {}", path.string(), i));
        std::istringstream row(line);
        std::string word;
        row >> word;
        words.push_back(word);
        for (long d = 0; d < cols; ++d) {
            std::string tok;
            if (!(row >> tok)) throw ConfigError(fmt::format("{}: row {} too short", path.string(), i + 2));
            m(i, d) = parse_number(tok);
        }
    }
    return m;
}

}  // namespace

void TrainConfig::validate() const {
    if (dim < 1) throw ConfigError("embedding.dim must be >= 1");
    if (window < 1) throw ConfigError("embedding.window must be >= 1");
    if (min_count < 1) throw ConfigError("embedding.min_count must be >= 1");
    if (epochs < 1) throw ConfigError("embedding.epochs must be >= 1");
    if (negative < 0) throw ConfigError("embedding.negative must be >= 0");
    if (!(initial_lr > 0.0)) throw ConfigError("embedding.initial_lr must be > 0");
    if (workers < 1) throw ConfigError("embedding.workers must be >= 1");
}

Vocabulary::Vocabulary(std::vector<std::pair<std::string, std::uint64_t>> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    words_.reserve(entries.size());
    counts_.reserve(entries.size());
    for (auto& [w, c] : entries) {
        index_.emplace(w, words_.size());
        words_.push_back(std::move(w));
        counts_.push_back(c);
        total_ += c;
    }
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Vocabulary build_vocab(const Corpus& corpus, int min_count) {
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& rec : corpus.records) {
        for (const auto& t : rec.tokens) ++counts[t];
    }
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [w, c] : counts) {
        if (c >= static_cast<std::uint64_t>(min_count)) kept.emplace_back(w, c);
    }
    return Vocabulary(std::move(kept));
}

std::span<const double> EmbeddingModel::vector_of(std::string_view word) const {
    auto idx = vocab.index_of(word);
    if (!idx) throw LookupError(fmt::format("word '{}' is not in the vocabulary", word));
    return {input.data() + *idx * dim(), dim()};
}

double sample_loss(const EmbeddingModel& model, const SkipGramSample& sample) {
    const auto v = model.input.row(static_cast<Eigen::Index>(sample.target));
    double loss = term_loss(v.dot(model.output.row(static_cast<Eigen::Index>(sample.context))), 1.0);
    for (auto n : sample.negatives) {
        if (n == sample.context) continue;
        loss += term_loss(v.dot(model.output.row(static_cast<Eigen::Index>(n))), 0.0);
    }
    return loss;
}

double loss_and_gradient(const EmbeddingModel& model, std::span<const SkipGramSample> samples,
                         EmbeddingGradient& grad) {
    grad.input = RowMatrix::Zero(model.input.rows(), model.input.cols());
    grad.output = RowMatrix::Zero(model.output.rows(), model.output.cols());
    double loss = 0.0;
    for (const auto& s : samples) {
        const auto t = static_cast<Eigen::Index>(s.target);
        auto term = [&](std::size_t word, double label) {
            const auto w = static_cast<Eigen::Index>(word);
            const double score = model.input.row(t).dot(model.output.row(w));
            const double g = score_gradient(score, label);
            loss += term_loss(score, label);
            grad.input.row(t) += g * model.output.row(w);
            grad.output.row(w) += g * model.input.row(t);
        };
        term(s.context, 1.0);
        for (auto n : s.negatives) {
            if (n == s.context) continue;
            term(n, 0.0);
        }
    }
    return loss;
}

TrainedModel train_skipgram(const Corpus& corpus, const TrainConfig& config) {
    config.validate();
    TrainedModel result;
    auto& model = result.model;
    model.vocab = build_vocab(corpus, config.min_count);
    if (model.vocab.empty()) throw TrainingError("empty vocabulary after min_count filtering");

    const auto sentences = index_corpus(corpus, model.vocab);
    const NoiseSampler noise(model.vocab);
    const auto monitor = monitoring_sample(sentences, config, noise, 1024);
    if (monitor.empty()) throw TrainingError("corpus has no (target, context) pair");

    const auto V = static_cast<Eigen::Index>(model.vocab.size());
    const auto dim = static_cast<std::size_t>(config.dim);
    model.input.resize(V, config.dim);
    model.output = RowMatrix::Zero(V, config.dim);
    Rng init_rng(config.seed);
    for (Eigen::Index i = 0; i < V; ++i) {
        for (Eigen::Index d = 0; d < config.dim; ++d) {
            model.input(i, d) = (init_rng.uniform() - 0.5) / static_cast<double>(config.dim);
        }
    }

    std::uint64_t tokens = 0;
    for (const auto& s : sentences) tokens += s.size();
    std::atomic<std::uint64_t> processed{0};
    std::atomic<std::uint64_t> pairs{0};
    EpochState st{&sentences, &noise,       &config, model.input.data(), model.output.data(), dim,
                  &processed, &pairs, tokens * static_cast<std::uint64_t>(config.epochs)};

    result.stats.initial_loss = mean_loss(model, monitor);
    const auto workers = static_cast<std::size_t>(config.workers);
    std::vector<Rng> rngs;
    for (std::size_t w = 0; w < workers; ++w) rngs.emplace_back(config.seed + 0x632be59bd9b4e019ULL * (w + 1));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (workers == 1) {
            run_shard<false>(st, 0, 1, rngs[0]);
        } else {
            std::vector<std::thread> threads;
            for (std::size_t w = 0; w < workers; ++w) {
                threads.emplace_back([&, w] { run_shard<true>(st, w, workers, rngs[w]); });
            }
            for (auto& t : threads) t.join();
        }
        const double loss = mean_loss(model, monitor);
        if (!std::isfinite(loss)) throw TrainingError(fmt::format("non-finite loss in epoch {}", epoch + 1));
        result.stats.epoch_loss.push_back(loss);
    }
    result.stats.final_loss = result.stats.epoch_loss.back();
    result.stats.pairs_processed = pairs.load();
    return result;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw DomainError("cosine_similarity: vectors differ in length");
    double dot = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) throw DomainError("cosine_similarity: zero-norm vector");
    return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

std::vector<Neighbor> top_k_similar(const EmbeddingModel& model, std::string_view word, std::size_t k) {
    auto q = model.vocab.index_of(word);
    if (!q) throw LookupError(fmt::format("word '{}' is not in the vocabulary", word));
    if (k == 0) throw DomainError("top_k_similar: k must be >= 1");
    const auto dim = model.dim();
    const std::span<const double> query(model.input.data() + *q * dim, dim);

    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(model.vocab.size());
    for (std::size_t i = 0; i < model.vocab.size(); ++i) {
        if (i == *q) continue;
        const std::span<const double> row(model.input.data() + i * dim, dim);
        const bool zero = std::all_of(row.begin(), row.end(), [](double x) { return x == 0.0; });
        scored.emplace_back(zero ? 0.0 : cosine_similarity(query, row), i);
    }
    const auto take = std::min(k, scored.size());
    auto better = [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);
    std::vector<Neighbor> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.push_back({model.vocab.word(scored[i].second), scored[i].second, scored[i].first});
    }
    return out;
}

Eigen::MatrixX2d pca_project(const Eigen::MatrixXd& vectors) {
    if (vectors.rows() < 2) throw DomainError("pca_project: need at least 2 rows");
    if (vectors.cols() < 2) throw DomainError("pca_project: need at least 2 columns");
    const Eigen::MatrixXd centered = vectors.rowwise() - vectors.colwise().mean();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(vectors.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw EstimationError("pca_project: eigendecomposition failed");
    // Eigen orders eigenvalues ascending.
    const auto n = cov.cols();
    Eigen::MatrixX2d axes(n, 2);
    for (int c = 0; c < 2; ++c) {
        Eigen::VectorXd axis = solver.eigenvectors().col(n - 1 - c);
        Eigen::Index arg = 0;
        axis.cwiseAbs().maxCoeff(&arg);
        if (axis(arg) < 0) axis = -axis;
        axes.col(c) = axis;
    }
    return centered * axes;
}

void save_model(const EmbeddingModel& model, const TrainConfig& config, const std::filesystem::path& path) {
    auto write = [&](const std::filesystem::path& p, const RowMatrix& m) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw IoError(fmt::format("cannot write '{}'", p.string()));
        write_matrix(out, model.vocab, m);
    };
    write(path, model.input);
    write(std::filesystem::path(path.string() + ".context"), model.output);

    nlohmann::ordered_json side;
    side["dim"] = config.dim;
    side["window"] = config.window;
    side["min_count"] = config.min_count;
    side["epochs"] = config.epochs;
    side["negative"] = config.negative;
    side["initial_lr"] = config.initial_lr;
    side["seed"] = config.seed;
    side["workers"] = config.workers;
    std::vector<std::uint64_t> counts;
    for (std::size_t i = 0; i < model.vocab.size(); ++i) counts.push_back(model.vocab.frequency(i));
    side["vocab_counts"] = counts;
    std::ofstream out(path.string() + ".json", std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}.json'", path.string()));
    out << side.dump(2) << '\n';
}

LoadedModel load_model(const std::filesystem::path& path) {
    LoadedModel loaded;
    std::vector<std::string> words;
    RowMatrix input = read_matrix(path, words);

    std::ifstream side_in(path.string() + ".json");
    if (!side_in) throw IoError(fmt::format("cannot read '{}.json'", path.string()));
    auto side = nlohmann::json::parse(side_in, nullptr, false);
    if (side.is_discarded()) throw ConfigError(fmt::format("{}.json: malformed JSON", path.string()));
    auto& cfg = loaded.config;
    cfg.dim = side.value("dim", cfg.dim);
    cfg.window = side.value("window", cfg.window);
    cfg.min_count = side.value("min_count", cfg.min_count);
    cfg.epochs = side.value("epochs", cfg.epochs);
    cfg.negative = side.value("negative", cfg.negative);
    cfg.initial_lr = side.value("initial_lr", cfg.initial_lr);
    cfg.seed = side.value("seed", cfg.seed);
    cfg.workers = side.value("workers", cfg.workers);
    auto counts = side.value("vocab_counts", std::vector<std::uint64_t>{});
    if (counts.size() != words.size()) {
        throw ConfigError(fmt::format("{}.json: vocab_counts length does not match the model", path.string()));
    }
    std::vector<std::pair<std::string, std::uint64_t>> entries;
    for (std::size_t i = 0; i < words.size(); ++i) entries.emplace_back(words[i], counts[i]);
    loaded.model.vocab = Vocabulary(std::move(entries));
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (loaded.model.vocab.word(i) != words[i]) {
            throw ConfigError(fmt::format("{}: rows are not in vocabulary order", path.string()));
        }
    }
    loaded.model.input = std::move(input);

    const std::filesystem::path ctx(path.string() + ".context");
    if (std::filesystem::exists(ctx)) {
        std::vector<std::string> ctx_words;
        loaded.model.output = read_matrix(ctx, ctx_words);
        if (ctx_words != words) throw ConfigError(fmt::format("{}: word list mismatch", ctx.string()));
    } else {
        loaded.model.output = RowMatrix::Zero(loaded.model.input.rows(), loaded.model.input.cols());
    }
    return loaded;
}

}  // namespace newsent
