#include "newsent/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "newsent/errors.hpp"

namespace newsent {
namespace {

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool has_ascii_space(std::string_view s) { return std::any_of(s.begin(), s.end(), is_ascii_space); }

std::vector<std::string> filter_tokens(std::vector<std::string> tokens, const StopWords& stopwords) {
    std::erase_if(tokens, [&](const std::string& t) { return t.empty() || stopwords.contains(t); });
    return tokens;
}

}  // namespace

void CleaningRules::add(std::string pattern, std::string replace) {
    std::regex compiled;
    try {
        compiled = std::regex(pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
        throw ConfigError(fmt::format("invalid cleaning pattern '{}': {}", pattern, e.what()));
    }
    rules_.push_back({std::move(pattern), std::move(replace), std::move(compiled)});
}

CleaningRules CleaningRules::defaults() {
    CleaningRules r;
    r.add(R"(\[[^\]]*\]|\([^)]*\))", " ");
    r.add(R"([[:punct:]])", " ");
    r.add(R"((^|\s)[0-9]+(?=\s|$))", "$1");
    r.add(R"([ \t\r\n\f\v]{2,}|[\t\r\n\f\v])", " ");
    r.add(R"(^ +| +$)", "");
    return r;
}

CleaningRules CleaningRules::from_json_text(std::string_view text) {
    auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        throw ConfigError("cleaning rules must be a JSON array of {pattern, replace}");
    }
    CleaningRules r;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        if (!item.is_object() || !item.contains("pattern") || !item["pattern"].is_string()) {
            throw ConfigError(fmt::format("cleaning rule {} lacks a string 'pattern'", i));
        }
        std::string replace;
        if (item.contains("replace")) {
            if (!item["replace"].is_string()) {
                throw ConfigError(fmt::format("cleaning rule {} has a non-string 'replace'", i));
            }
            replace = item["replace"].get<std::string>();
        }
        r.add(item["pattern"].get<std::string>(), std::move(replace));
    }
    return r;
}

CleaningRules CleaningRules::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read cleaning rules '{}'", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string clean_title(std::string_view text, const CleaningRules& rules) {
    std::string out(text);
    for (const auto& rule : rules.rules()) {
        out = std::regex_replace(out, rule.compiled, rule.replace);
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text, const StopWords& stopwords) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_ascii_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_ascii_space(text[j])) ++j;
        if (j > i) {
            std::string tok(text.substr(i, j - i));
            if (!stopwords.contains(tok)) tokens.push_back(std::move(tok));
        }
        i = j;
    }
    return tokens;
}

StopWords load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read stop-words '{}'", path.string()));
    StopWords words;
    std::string line;
    while (std::getline(in, line)) {
        auto toks = tokenize(line, {});
        for (auto& t : toks) words.insert(std::move(t));
    }
    return words;
}

IngestResult ingest_jsonl(std::istream& in, const IngestOptions& options) {
    IngestResult result;
    result.corpus.stopwords = options.stopwords;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (std::all_of(line.begin(), line.end(), is_ascii_space)) continue;
        ++result.lines_read;

        auto reject = [&](std::string reason) {
            result.rejections.push_back({line_no, std::move(reason)});
        };

        auto obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded()) {
            reject("malformed JSON");
            continue;
        }
        if (!obj.is_object()) {
            reject("line is not a JSON object");
            continue;
        }
        if (!obj.contains("date") || !obj["date"].is_string()) {
            reject("missing \"date\"");
            continue;
        }
        auto date = parse_date(obj["date"].get<std::string>());
        if (!date) {
            reject("unparseable date");
            continue;
        }
        if ((options.date_from && *date < *options.date_from) ||
            (options.date_to && *date > *options.date_to)) {
            reject("date outside corpus range");
            continue;
        }

        NewsRecord rec;
        rec.date = *date;
        if (obj.contains("id")) {
            if (!obj["id"].is_string()) {
                reject("\"id\" is not a string");
                continue;
            }
            rec.id = obj["id"].get<std::string>();
        } else {
            rec.id = fmt::format("line-{}", line_no);
        }
        if (seen_ids.contains(rec.id)) {
            reject(fmt::format("duplicate id '{}'", rec.id));
            continue;
        }

        const bool has_title = obj.contains("title") && obj["title"].is_string();
        if (obj.contains("tokens")) {
            const auto& toks = obj["tokens"];
            if (!toks.is_array() ||
                !std::all_of(toks.begin(), toks.end(), [](const auto& t) { return t.is_string(); })) {
                reject("\"tokens\" is not an array of strings");
                continue;
            }
            std::vector<std::string> tokens;
            tokens.reserve(toks.size());
            for (const auto& t : toks) tokens.push_back(t.get<std::string>());
            if (std::any_of(tokens.begin(), tokens.end(),
                            [](const std::string& t) { return has_ascii_space(t); })) {
                reject("token contains whitespace");
                continue;
            }
            rec.tokens = filter_tokens(std::move(tokens), options.stopwords);
            if (has_title) {
                rec.raw_title = obj["title"].get<std::string>();
            } else {
                for (std::size_t i = 0; i < toks.size(); ++i) {
                    if (i) rec.raw_title += ' ';
                    rec.raw_title += toks[i].get<std::string>();
                }
            }
        } else if (has_title) {
            rec.raw_title = obj["title"].get<std::string>();
            rec.tokens = tokenize(clean_title(rec.raw_title, options.rules), options.stopwords);
        } else {
            reject("neither \"title\" nor \"tokens\" present");
            continue;
        }
        seen_ids.insert(rec.id);
        result.corpus.records.push_back(std::move(rec));
    }
    if (in.bad()) throw IoError("read error while ingesting corpus");

    std::stable_sort(result.corpus.records.begin(), result.corpus.records.end(),
                     [](const NewsRecord& a, const NewsRecord& b) { return a.date < b.date; });
    return result;
}

IngestResult ingest_jsonl(const std::filesystem::path& path, const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read corpus '{}'", path.string()));
    return ingest_jsonl(in, options);
}

void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    for (const auto& rec : corpus.records) {
        nlohmann::ordered_json obj;
        obj["id"] = rec.id;
        obj["date"] = format_date(rec.date);
        obj["title"] = rec.raw_title;
        obj["tokens"] = rec.tokens;
        out << obj.dump() << '\n';
    }
    if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

TokenStats token_stats(const Corpus& corpus) {
    TokenStats s;
    s.titles = corpus.records.size();
    std::unordered_set<std::string_view> unique;
    for (const auto& rec : corpus.records) {
        s.total_tokens += rec.tokens.size();
        s.max_length = std::max(s.max_length, rec.tokens.size());
        for (const auto& t : rec.tokens) unique.insert(t);
    }
    s.unique_tokens = unique.size();
    s.mean_length = s.titles ? static_cast<double>(s.total_tokens) / static_cast<double>(s.titles) : 0.0;
    return s;
}

}  // namespace newsent
