#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "newsent/corpus.hpp"
#include "newsent/lexicon.hpp"
#include "newsent/series.hpp"

namespace newsent {

/// Per-title count score: every positive token instance +1, every negative instance -1.
struct TitleScore {
    std::string record_id;
    std::int64_t positive = 0;
    std::int64_t negative = 0;
    std::int64_t score = 0;  // positive - negative
};

TitleScore score_title(std::span<const std::string> tokens, const SentimentLexicon& lexicon);

struct MatchTotals {
    std::int64_t total_positive = 0;
    std::int64_t total_negative = 0;
    std::int64_t total_score = 0;
    std::string label;
};

MatchTotals corpus_match_totals(const Corpus& corpus, const SentimentLexicon& lexicon, std::string label = {});

struct MonthlyIndex {
    MonthlySeries series;
    std::vector<Month> zero_filled;  // months with no articles
};

/// Sum of title scores per calendar month, first to last corpus month inclusive.
/// Throws DomainError on an empty corpus.
MonthlyIndex monthly_index(const Corpus& corpus, const SentimentLexicon& lexicon);

}  // namespace newsent
