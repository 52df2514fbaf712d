#pragma once
// Synthetic news corpora and market series for tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "newsent/calendar.hpp"
#include "newsent/corpus.hpp"
#include "newsent/lexicon.hpp"
#include "newsent/series.hpp"

namespace synth {

struct Vocab {
    std::vector<std::string> positive, negative, crisis, neutral;
};

inline Vocab make_vocab(std::size_t pos = 30, std::size_t neg = 30, std::size_t crisis = 20, std::size_t neutral = 400) {
    Vocab v;
    for (std::size_t i = 0; i < pos; ++i) v.positive.push_back("up" + std::to_string(i));
    for (std::size_t i = 0; i < neg; ++i) v.negative.push_back("down" + std::to_string(i));
    v.crisis.push_back("crisis");
    for (std::size_t i = 1; i < crisis; ++i) v.crisis.push_back("shock" + std::to_string(i));
    for (std::size_t i = 0; i < neutral; ++i) v.neutral.push_back("w" + std::to_string(i));
    return v;
}

// Titles spread evenly over `months` months; crisis-heavy titles follow a slow cycle.
inline newsent::Corpus corpus(const Vocab& v, std::size_t titles, int months, std::uint64_t seed,
                              newsent::Month start = newsent::Month{std::chrono::year{2005}, std::chrono::month{1}}) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto pick = [&](const std::vector<std::string>& words) -> const std::string& {
        // Zipf-like: low indices are more frequent.
        const double r = u(rng);
        const auto i = static_cast<std::size_t>(std::floor(std::pow(r, 2.0) * static_cast<double>(words.size())));
        return words[std::min(i, words.size() - 1)];
    };
    newsent::Corpus c;
    for (std::size_t i = 0; i < titles; ++i) {
        const int k = static_cast<int>(i * static_cast<std::size_t>(months) / titles);
        const double stress = 0.5 + 0.4 * std::sin(2.0 * M_PI * k / 30.0);
        newsent::NewsRecord r;
        r.id = "t" + std::to_string(i);
        const auto m = newsent::add_months(start, k);
        r.date = newsent::Date{m.year(), m.month(), std::chrono::day{static_cast<unsigned>(1 + rng() % 28)}};
        const double x = u(rng);
        const std::size_t len = 5 + rng() % 8;
        if (x < 0.3 * stress) {
            r.tokens.push_back("crisis");
            while (r.tokens.size() < 3) r.tokens.push_back(pick(v.crisis));
            r.tokens.push_back(pick(v.negative));
        } else if (x < 0.3 * stress + 0.3) {
            r.tokens.push_back(pick(v.positive));
            if (u(rng) < 0.5) r.tokens.push_back(pick(v.positive));
        } else if (x < 0.3 * stress + 0.55) {
            r.tokens.push_back(pick(v.negative));
        }
        while (r.tokens.size() < len) r.tokens.push_back(pick(v.neutral));
        std::shuffle(r.tokens.begin(), r.tokens.end(), rng);
        for (std::size_t t = 0; t < r.tokens.size(); ++t) r.raw_title += (t ? " " : "") + r.tokens[t];
        c.records.push_back(std::move(r));
    }
    return c;
}

// Base lexicon: most positives and negatives, plus a couple of crisis words so that
// expansion has overlaps to exclude.
inline std::string lexicon_text(const Vocab& v) {
    std::string out;
    for (std::size_t i = 0; i < v.positive.size(); ++i)
        if (i % 5 != 4) out += v.positive[i] + "\t1\n";
    for (std::size_t i = 0; i < v.negative.size(); ++i)
        if (i % 5 != 4) out += v.negative[i] + "\t-1\n";
    for (std::size_t i = 1; i < v.crisis.size(); i += 6) out += v.crisis[i] + "\t-2\n";
    out += v.neutral[0] + "\t0\n";
    return out;
}

inline newsent::MonthlySeries market(int months, std::uint64_t seed,
                                     newsent::Month start = newsent::Month{std::chrono::year{2005}, std::chrono::month{1}}) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 5.0);
    newsent::MonthlySeries s{start, {}};
    double level = 200.0;
    for (int k = 0; k < months; ++k) {
        level += z(rng) - 3.0 * std::sin(2.0 * M_PI * k / 30.0);
        s.values.push_back(level);
    }
    return s;
}

}  // namespace synth
