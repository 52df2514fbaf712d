#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "newsent/calendar.hpp"

namespace newsent {

using StopWords = std::unordered_set<std::string>;

struct NewsRecord {
    std::string id;
    Date date;
    std::string raw_title;
    std::vector<std::string> tokens;
};

struct Corpus {
    std::vector<NewsRecord> records;  // sorted by date, stable w.r.t. input order
    StopWords stopwords;
};

/// One regex substitution. Patterns use the ECMAScript dialect and operate on bytes,
/// so multi-byte UTF-8 text passes through untouched unless a rule names it.
struct CleaningRule {
    std::string pattern;
    std::string replace;
    std::regex compiled;
};

class CleaningRules {
public:
    CleaningRules() = default;

    /// Throws ConfigError when a pattern does not compile.
    void add(std::string pattern, std::string replace);

    /// Bracketed source tags, punctuation, digit-only tokens, then whitespace normalisation.
    static CleaningRules defaults();

    /// JSON array of {"pattern": ..., "replace": ...}.
    static CleaningRules from_json_file(const std::filesystem::path& path);
    static CleaningRules from_json_text(std::string_view text);

    [[nodiscard]] std::span<const CleaningRule> rules() const { return rules_; }

private:
    std::vector<CleaningRule> rules_;
};

std::string clean_title(std::string_view text, const CleaningRules& rules);

/// Whitespace segmentation of an already-cleaned title, dropping stop-words.
std::vector<std::string> tokenize(std::string_view text, const StopWords& stopwords);

/// One token per line; blank lines ignored.
StopWords load_stopwords(const std::filesystem::path& path);

struct Rejection {
    std::size_t line = 0;  // 1-based
    std::string reason;
};

struct IngestOptions {
    CleaningRules rules = CleaningRules::defaults();
    StopWords stopwords;
    std::optional<Date> date_from;  // inclusive
    std::optional<Date> date_to;    // inclusive
};

struct IngestResult {
    Corpus corpus;
    std::vector<Rejection> rejections;
    std::size_t lines_read = 0;  // non-blank lines
};

/// Reads JSON Lines. Bad lines are reported and skipped; only an unreadable file throws (IoError).
IngestResult ingest_jsonl(const std::filesystem::path& path, const IngestOptions& options);
IngestResult ingest_jsonl(std::istream& in, const IngestOptions& options);

/// Writes records including their tokens, so a later ingest skips tokenization.
void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);

struct TokenStats {
    std::size_t titles = 0;
    std::size_t total_tokens = 0;
    std::size_t unique_tokens = 0;
    std::size_t max_length = 0;
    double mean_length = 0.0;
};

TokenStats token_stats(const Corpus& corpus);

}  // namespace newsent
