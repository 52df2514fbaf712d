#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <unordered_map>

#include "newsent/embedding.hpp"
#include "newsent/errors.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace newsent;

namespace {

Corpus from_sentences(const std::vector<std::vector<std::string>>& sentences) {
    Corpus c;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        NewsRecord r;
        r.id = std::to_string(i);
        r.date = Date{std::chrono::year{2020}, std::chrono::month{1}, std::chrono::day{1}};
        r.tokens = sentences[i];
        c.records.push_back(r);
    }
    return c;
}

EmbeddingModel random_model(std::size_t v, std::size_t dim, std::uint64_t seed) {
    std::vector<std::pair<std::string, std::uint64_t>> entries;
    for (std::size_t i = 0; i < v; ++i) entries.emplace_back("w" + std::to_string(i), 100 - i);
    EmbeddingModel m{Vocabulary(entries), RowMatrix(v, dim), RowMatrix(v, dim)};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    for (Eigen::Index i = 0; i < m.input.size(); ++i) m.input.data()[i] = z(rng);
    for (Eigen::Index i = 0; i < m.output.size(); ++i) m.output.data()[i] = z(rng);
    return m;
}

double naive_cosine(const std::vector<double>& u, const std::vector<double>& v) {
    double d = 0, a = 0, b = 0;
    for (std::size_t i = 0; i < u.size(); ++i) d += u[i] * v[i];
    for (double x : u) a += x * x;
    for (double x : v) b += x * x;
    return d / std::sqrt(a * b);
}

}  // namespace

TEST_CASE("min_count threshold") {
    std::vector<std::vector<std::string>> s;
    for (int i = 0; i < 12; ++i) s.push_back({"a"});
    for (int i = 0; i < 9; ++i) s.push_back({"b"});
    const auto v = build_vocab(from_sentences(s), 10);
    CHECK(v.size() == 1);
    CHECK(v.index_of("a") == 0);
    CHECK_FALSE(v.index_of("b"));
    CHECK(build_vocab(Corpus{}, 1).empty());
}

TEST_CASE("vocabulary frequencies match a hash count") {
    const auto words = synth::make_vocab();
    const auto c = synth::corpus(words, 1000, 40, 3);
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& r : c.records)
        for (const auto& t : r.tokens) ++counts[t];
    const auto v = build_vocab(c, 1);
    REQUIRE(v.size() == counts.size());
    for (const auto& [w, n] : counts) {
        const auto i = v.index_of(w);
        REQUIRE(i);
        CHECK(v.frequency(*i) == n);
    }
    for (std::size_t i = 1; i < v.size(); ++i) {
        const bool ordered = v.frequency(i - 1) > v.frequency(i) ||
                             (v.frequency(i - 1) == v.frequency(i) && v.word(i - 1) < v.word(i));
        CHECK(ordered);
    }
}

TEST_CASE("training lowers the loss of the only pair") {
    std::vector<std::vector<std::string>> s(50, {"a", "b"});
    TrainConfig cfg;
    cfg.dim = 4;
    cfg.window = 1;
    cfg.min_count = 1;
    cfg.epochs = 5;
    cfg.negative = 1;
    const auto trained = train_skipgram(from_sentences(s), cfg);
    const auto a = *trained.model.vocab.index_of("a"), b = *trained.model.vocab.index_of("b");
    // Output vectors start at zero, so the untrained positive-pair loss is log 2.
    CHECK(sample_loss(trained.model, {a, b, {}}) < std::log(2.0));
    CHECK(trained.stats.final_loss < trained.stats.initial_loss);
}

TEST_CASE("topic clusters separate") {
    const std::vector<std::string> sky{"sun", "moon", "star"}, deal{"buy", "sell", "trade"};
    std::mt19937_64 rng(2);
    std::vector<std::vector<std::string>> s;
    for (int i = 0; i < 200; ++i) {
        const auto& topic = i % 2 ? sky : deal;
        std::vector<std::string> sent;
        for (int k = 0; k < 6; ++k) sent.push_back(topic[rng() % 3]);
        s.push_back(sent);
    }
    TrainConfig cfg;
    cfg.dim = 8;
    cfg.window = 2;
    cfg.min_count = 1;
    cfg.epochs = 200;
    cfg.negative = 3;
    cfg.seed = 4;
    const auto m = train_skipgram(from_sentences(s), cfg).model;
    double intra = 0, inter = 0;
    int ni = 0, nx = 0;
    for (const auto* group : {&sky, &deal})
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = i + 1; j < 3; ++j, ++ni)
                intra += cosine_similarity(m.vector_of((*group)[i]), m.vector_of((*group)[j]));
    for (const auto& a : sky)
        for (const auto& b : deal) {
            inter += cosine_similarity(m.vector_of(a), m.vector_of(b));
            ++nx;
        }
    CHECK(intra / ni > inter / nx);
}

TEST_CASE("analytic gradient matches central differences") {
    auto model = random_model(8, 6, 17);
    model.input *= 0.5;
    model.output *= 0.5;
    std::vector<SkipGramSample> samples{{0, 1, {2, 3, 1}}, {4, 5, {6, 7, 0}}, {2, 0, {5, 5, 3}}, {7, 7, {1, 2, 4}}};
    EmbeddingGradient g;
    loss_and_gradient(model, samples, g);
    auto total = [&](const EmbeddingModel& m) {
        double s = 0;
        for (const auto& x : samples) s += sample_loss(m, x);
        return s;
    };
    const double h = 1e-5;
    double worst = 0;
    for (auto* which : {&model.input, &model.output}) {
        const RowMatrix& analytic = which == &model.input ? g.input : g.output;
        for (Eigen::Index i = 0; i < which->size(); ++i) {
            const double keep = which->data()[i];
            which->data()[i] = keep + h;
            const double up = total(model);
            which->data()[i] = keep - h;
            const double down = total(model);
            which->data()[i] = keep;
            const double numeric = (up - down) / (2 * h);
            const double a = analytic.data()[i];
            worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6}));
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("cosine similarity basics") {
    const std::vector<double> v{0.3, -1.2, 2.0};
    CHECK(cosine_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
    CHECK_THROWS_AS(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}), DomainError);
    CHECK_THROWS_AS(cosine_similarity(std::vector<double>{1}, std::vector<double>{1, 0}), DomainError);
}

TEST_CASE("cosine similarity against a naive oracle and under scaling") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> alpha(0.01, 100.0);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> u(10), v(10);
        for (auto& x : u) x = z(rng);
        for (auto& x : v) x = z(rng);
        const double c = cosine_similarity(u, v);
        CHECK(std::abs(c - naive_cosine(u, v)) < 1e-12);
        auto scaled = u;
        const double a = alpha(rng);
        for (auto& x : scaled) x *= a;
        CHECK(std::abs(cosine_similarity(scaled, v) - c) < 1e-12);
    }
}

TEST_CASE("top_k: scale-invariant neighbour and exhaustive k") {
    EmbeddingModel m{Vocabulary({{"w1", 3}, {"w2", 2}, {"w3", 1}}), RowMatrix(3, 2), RowMatrix::Zero(3, 2)};
    m.input << 1.0, 2.0, 3.0, 6.0, -2.0, 1.0;
    const auto one = top_k_similar(m, "w1", 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].word == "w2");
    CHECK(one[0].similarity == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(top_k_similar(m, "w1", 2).size() == 2);
    CHECK(top_k_similar(m, "w1", 50).size() == 2);
    CHECK_THROWS_AS(top_k_similar(m, "nope", 1), LookupError);
}

TEST_CASE("top_k equals a brute-force ranking") {
    const auto m = random_model(400, 12, 99);
    const auto query = m.vocab.word(7);
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < m.vocab.size(); ++i) {
        if (i == 7) continue;
        std::vector<double> a(m.input.row(7).data(), m.input.row(7).data() + 12);
        std::vector<double> b(m.input.row(static_cast<Eigen::Index>(i)).data(), m.input.row(static_cast<Eigen::Index>(i)).data() + 12);
        all.emplace_back(cosine_similarity(a, b), i);
    }
    std::sort(all.begin(), all.end(), [](auto x, auto y) { return x.first != y.first ? x.first > y.first : x.second < y.second; });
    for (std::size_t k : {1u, 25u, 399u}) {
        const auto got = top_k_similar(m, query, k);
        REQUIRE(got.size() == k);
        for (std::size_t i = 0; i < k; ++i) CHECK(got[i].index == all[i].second);
    }
}

TEST_CASE("pca recovers axis-aligned data up to sign") {
    Eigen::MatrixXd x(4, 2);
    x << 2, 0, -2, 0, 0, 1, 0, -1;  // covariance proportional to diag(4, 1)
    const auto p = pca_project(x);
    for (Eigen::Index i = 0; i < 4; ++i) {
        CHECK(std::abs(std::abs(p(i, 0)) - std::abs(x(i, 0))) < 1e-12);
        CHECK(std::abs(std::abs(p(i, 1)) - std::abs(x(i, 1))) < 1e-12);
    }
}

TEST_CASE("pca of identical rows is zero") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(5, 3) * 2.5;
    CHECK(pca_project(x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pca variances equal the top covariance eigenvalues") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> z;
    Eigen::MatrixXd x(50, 10);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = z(rng) * (1 + i % 10);
    const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd cov = c.transpose() * c / 49.0;
    oracle::Matrix a(10, std::vector<double>(10));
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) a[i][j] = cov(i, j);
    const auto ev = oracle::jacobi_eigenvalues(a);
    const auto p = pca_project(x);
    for (int k = 0; k < 2; ++k) {
        const double var = p.col(k).squaredNorm() / 49.0;
        CHECK(std::abs(var - ev[static_cast<std::size_t>(k)]) < 1e-8);
    }
    // Shifting every row leaves the projection unchanged up to sign.
    Eigen::MatrixXd shifted = x.rowwise() + Eigen::RowVectorXd::LinSpaced(10, -3, 7);
    const auto q = pca_project(shifted);
    for (int k = 0; k < 2; ++k) {
        const double s = p.col(k).dot(q.col(k)) >= 0 ? 1.0 : -1.0;
        CHECK((p.col(k) - s * q.col(k)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("single-worker training is reproducible") {
    const auto words = synth::make_vocab(10, 10, 8, 60);
    const auto c = synth::corpus(words, 300, 12, 5);
    TrainConfig cfg;
    cfg.dim = 10;
    cfg.window = 3;
    cfg.min_count = 2;
    cfg.epochs = 3;
    const auto a = train_skipgram(c, cfg), b = train_skipgram(c, cfg);
    REQUIRE(a.model.vocab.size() == b.model.vocab.size());
    for (std::size_t i = 0; i < a.model.vocab.size(); ++i) CHECK(a.model.vocab.word(i) == b.model.vocab.word(i));
    CHECK(a.model.input == b.model.input);
    CHECK(a.model.output == b.model.output);
    const auto ra = top_k_similar(a.model, "crisis", 10), rb = top_k_similar(b.model, "crisis", 10);
    for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].index == rb[i].index);

    cfg.workers = 3;
    const auto h = train_skipgram(c, cfg);
    CHECK(h.model.input.allFinite());
    CHECK(std::isfinite(h.stats.final_loss));
}

TEST_CASE("training errors") {
    TrainConfig cfg;
    cfg.min_count = 5;
    CHECK_THROWS_AS(train_skipgram(from_sentences({{"a", "b"}}), cfg), TrainingError);
    cfg.min_count = 1;
    CHECK_THROWS_AS(train_skipgram(from_sentences({{"a"}, {"b"}}), cfg), TrainingError);
    cfg.dim = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("model files round trip exactly") {
    const auto m = random_model(5, 3, 4);
    TrainConfig cfg;
    cfg.dim = 3;
    cfg.seed = 42;
    const auto path = std::filesystem::temp_directory_path() / "newsent_model_roundtrip.txt";
    save_model(m, cfg, path);
    const auto back = load_model(path);
    CHECK(back.model.input == m.input);
    CHECK(back.model.output == m.output);
    CHECK(back.config.seed == 42);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(back.model.vocab.word(i) == m.vocab.word(i));
        CHECK(back.model.vocab.frequency(i) == m.vocab.frequency(i));
    }
    for (const auto* ext : {"", ".context", ".json"}) std::filesystem::remove(path.string() + ext);
}
