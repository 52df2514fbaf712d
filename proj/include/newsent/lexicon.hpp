#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "newsent/embedding.hpp"

namespace newsent {

enum class Polarity { Positive, Negative, Neutral };
enum class Provenance { Base, Expanded };

std::string_view to_string(Provenance p);

/// One lexicon line as read, kept so the lexicon can be written back verbatim.
struct LexiconEntry {
    std::string word;
    std::string polarity_text;  // as it appeared in the file: "-1", "NEG", ...
    Polarity polarity = Polarity::Neutral;
    Provenance provenance = Provenance::Base;
};

class SentimentLexicon {
public:
    [[nodiscard]] bool is_positive(const std::string& word) const { return positives_.contains(word); }
    [[nodiscard]] bool is_negative(const std::string& word) const { return negatives_.contains(word); }
    [[nodiscard]] const std::unordered_set<std::string>& positives() const { return positives_; }
    [[nodiscard]] const std::unordered_set<std::string>& negatives() const { return negatives_; }
    [[nodiscard]] std::optional<Provenance> provenance(const std::string& word) const;
    [[nodiscard]] const std::vector<LexiconEntry>& entries() const { return entries_; }
    [[nodiscard]] const std::vector<std::string>& warnings() const { return warnings_; }

    /// Appends an entry. Neutral and multi-word entries are kept for output but never
    /// matched; the latter produce a warning.
    void add(LexiconEntry entry);

private:
    std::unordered_set<std::string> positives_;
    std::unordered_set<std::string> negatives_;
    std::unordered_map<std::string, Provenance> provenance_;
    std::vector<LexiconEntry> entries_;
    std::vector<std::string> warnings_;
};

/// TSV "word<TAB>polarity[<TAB>provenance]"; polarity is an integer in [-2, 2] or one of
/// POS / NEG / NEUT. Throws ConfigError for malformed lines and for words listed as both
/// positive and negative.
SentimentLexicon load_lexicon(const std::filesystem::path& path);
SentimentLexicon parse_lexicon(std::istream& in, std::string_view source);

/// Same TSV with the provenance column always present.
void save_lexicon(const SentimentLexicon& lexicon, const std::filesystem::path& path);
void save_lexicon(const SentimentLexicon& lexicon, std::ostream& out);

struct ExpandedWord {
    std::string word;
    double similarity = 0.0;
};

struct ExpansionReport {
    std::string seed;
    std::size_t requested_n = 0;
    std::size_t candidates_examined = 0;
    std::size_t overlaps_excluded = 0;
    std::size_t overlaps_with_negatives = 0;
    std::size_t overlaps_with_positives = 0;
    std::size_t added = 0;
    bool clamped = false;               // requested_n exceeded V - 1
    std::size_t vocabulary_size = 0;
    double examined_share_of_vocabulary = 0.0;
    std::vector<ExpandedWord> added_words;  // descending similarity
};

struct Expansion {
    SentimentLexicon lexicon;
    ExpansionReport report;
};

/// Adds the top-n cosine neighbours of `seed` to the negative side, skipping words the
/// base already lists with either polarity. n = 0 returns the base unchanged without
/// consulting the model.
Expansion expand_negative(const EmbeddingModel& model, std::string_view seed, std::size_t n,
                          const SentimentLexicon& base);

nlohmann::ordered_json to_json(const ExpansionReport& report);

}  // namespace newsent
