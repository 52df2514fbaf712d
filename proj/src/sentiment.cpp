#include "newsent/sentiment.hpp"

#include "newsent/errors.hpp"

namespace newsent {

TitleScore score_title(std::span<const std::string> tokens, const SentimentLexicon& lexicon) {
    TitleScore s;
    for (const auto& t : tokens) {
        if (lexicon.is_positive(t)) ++s.positive;
        else if (lexicon.is_negative(t)) ++s.negative;
    }
    s.score = s.positive - s.negative;
    return s;
}

MatchTotals corpus_match_totals(const Corpus& corpus, const SentimentLexicon& lexicon, std::string label) {
    MatchTotals totals;
    totals.label = std::move(label);
    for (const auto& rec : corpus.records) {
        const auto s = score_title(rec.tokens, lexicon);
        totals.total_positive += s.positive;
        totals.total_negative += s.negative;
    }
    totals.total_score = totals.total_positive - totals.total_negative;
    return totals;
}

MonthlyIndex monthly_index(const Corpus& corpus, const SentimentLexicon& lexicon) {
    if (corpus.records.empty()) throw DomainError("monthly_index: empty corpus");
    Month first = month_of(corpus.records.front().date);
    Month last = first;
    for (const auto& rec : corpus.records) {
        const auto m = month_of(rec.date);
        if (m < first) first = m;
        if (m > last) last = m;
    }
    const auto n = static_cast<std::size_t>(months_between(first, last) + 1);
    std::vector<std::int64_t> sums(n, 0);
    std::vector<bool> seen(n, false);
    for (const auto& rec : corpus.records) {
        const auto j = static_cast<std::size_t>(months_between(first, month_of(rec.date)));
        sums[j] += score_title(rec.tokens, lexicon).score;
        seen[j] = true;
    }
    MonthlyIndex out;
    out.series.start = first;
    out.series.values.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.series.values.push_back(static_cast<double>(sums[j]));
        if (!seen[j]) out.zero_filled.push_back(add_months(first, static_cast<int>(j)));
    }
    return out;
}

}  // namespace newsent
