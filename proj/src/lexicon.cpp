#include "newsent/lexicon.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "newsent/errors.hpp"

namespace newsent {
namespace {

std::optional<Polarity> parse_polarity(std::string_view text) {
    if (text == "POS") return Polarity::Positive;
    if (text == "NEG") return Polarity::Negative;
    if (text == "NEUT") return Polarity::Neutral;
    int v = 0;
    const char* begin = text.data();
    if (!text.empty() && text.front() == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || v < -2 || v > 2) return std::nullopt;
    if (v > 0) return Polarity::Positive;
    if (v < 0) return Polarity::Negative;
    return Polarity::Neutral;
}

bool has_whitespace(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

}  // namespace

std::string_view to_string(Provenance p) { return p == Provenance::Base ? "base" : "expanded"; }

std::optional<Provenance> SentimentLexicon::provenance(const std::string& word) const {
    auto it = provenance_.find(word);
    if (it == provenance_.end()) return std::nullopt;
    return it->second;
}

void SentimentLexicon::add(LexiconEntry entry) {
    if (entry.polarity != Polarity::Neutral) {
        if (has_whitespace(entry.word)) {
            warnings_.push_back(fmt::format("multi-word entry '{}' ignored for matching", entry.word));
        } else {
            auto& set = entry.polarity == Polarity::Positive ? positives_ : negatives_;
            set.insert(entry.word);
            provenance_.try_emplace(entry.word, entry.provenance);
        }
    }
    entries_.push_back(std::move(entry));
}

SentimentLexicon parse_lexicon(std::istream& in, std::string_view source) {
    SentimentLexicon lex;
    std::map<std::string, Polarity> seen;
    std::vector<std::string> conflicts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string_view> cols;
        std::string_view rest(line);
        while (true) {
            auto tab = rest.find('\t');
            cols.push_back(rest.substr(0, tab));
            if (tab == std::string_view::npos) break;
            rest.remove_prefix(tab + 1);
        }
        if (cols.size() < 2 || cols.size() > 3 || cols[0].empty()) {
            throw ConfigError(fmt::format("{}:{}: expected 'word<TAB>polarity'", source, line_no));
        }
        auto polarity = parse_polarity(cols[1]);
        if (!polarity) {
            throw ConfigError(fmt::format("{}:{}: bad polarity '{}'", source, line_no, cols[1]));
        }
        Provenance prov = Provenance::Base;
        if (cols.size() == 3) {
            if (cols[2] == "expanded") prov = Provenance::Expanded;
            else if (cols[2] != "base") {
                throw ConfigError(fmt::format("{}:{}: bad provenance '{}'", source, line_no, cols[2]));
            }
        }
        if (prov == Provenance::Expanded && *polarity != Polarity::Negative) {
            throw ConfigError(fmt::format("{}:{}: expanded entries must be negative", source, line_no));
        }
        std::string word(cols[0]);
        if (*polarity != Polarity::Neutral) {
            auto [it, inserted] = seen.emplace(word, *polarity);
            if (!inserted && it->second != *polarity) conflicts.push_back(word);
        }
        lex.add({std::move(word), std::string(cols[1]), *polarity, prov});
    }
    if (!conflicts.empty()) {
        std::sort(conflicts.begin(), conflicts.end());
        conflicts.erase(std::unique(conflicts.begin(), conflicts.end()), conflicts.end());
        throw ConfigError(fmt::format("{}: words with conflicting polarity: {}", source, fmt::join(conflicts, ", ")));
    }
    return lex;
}

SentimentLexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read lexicon '{}'", path.string()));
    return parse_lexicon(in, path.string());
}

void save_lexicon(const SentimentLexicon& lexicon, std::ostream& out) {
    for (const auto& e : lexicon.entries()) {
        out << e.word << '\t' << e.polarity_text << '\t' << to_string(e.provenance) << '\n';
    }
}

void save_lexicon(const SentimentLexicon& lexicon, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    save_lexicon(lexicon, out);
}

Expansion expand_negative(const EmbeddingModel& model, std::string_view seed, std::size_t n,
                          const SentimentLexicon& base) {
    Expansion result{base, {}};
    auto& report = result.report;
    report.seed = std::string(seed);
    report.requested_n = n;
    report.vocabulary_size = model.vocab.size();
    if (n == 0) return result;

    if (!model.vocab.index_of(seed)) {
        throw LookupError(fmt::format("seed word '{}' is not in the vocabulary", seed));
    }
    const std::size_t available = model.vocab.size() - 1;
    std::size_t take = n;
    if (take > available) {
        take = available;
        report.clamped = true;
    }
    report.candidates_examined = take;
    report.examined_share_of_vocabulary =
        model.vocab.empty() ? 0.0 : static_cast<double>(take) / static_cast<double>(model.vocab.size());
    if (take == 0) return result;

    for (auto& nb : top_k_similar(model, seed, take)) {
        const bool neg = base.is_negative(nb.word);
        const bool pos = base.is_positive(nb.word);
        if (neg || pos) {
            ++report.overlaps_excluded;
            report.overlaps_with_negatives += neg;
            report.overlaps_with_positives += pos;
            continue;
        }
        result.lexicon.add({nb.word, "-1", Polarity::Negative, Provenance::Expanded});
        report.added_words.push_back({std::move(nb.word), nb.similarity});
    }
    report.added = report.added_words.size();
    return result;
}

nlohmann::ordered_json to_json(const ExpansionReport& report) {
    nlohmann::ordered_json j;
    j["seed"] = report.seed;
    j["requested_n"] = report.requested_n;
    j["candidates_examined"] = report.candidates_examined;
    j["overlaps_excluded"] = report.overlaps_excluded;
    j["overlaps_with_negatives"] = report.overlaps_with_negatives;
    j["overlaps_with_positives"] = report.overlaps_with_positives;
    j["added"] = report.added;
    j["clamped"] = report.clamped;
    j["vocabulary_size"] = report.vocabulary_size;
    j["examined_share_of_vocabulary"] = report.examined_share_of_vocabulary;
    auto words = nlohmann::ordered_json::array();
    for (const auto& w : report.added_words) words.push_back({{"word", w.word}, {"similarity", w.similarity}});
    j["added_words"] = std::move(words);
    return j;
}

}  // namespace newsent
