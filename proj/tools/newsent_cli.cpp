// newsent: news-title sentiment pipeline driver.
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "newsent/pipeline.hpp"

namespace {

using nlohmann::json;
namespace pl = newsent::pipeline;

enum class Kind { String, Integer, Number, IntList, StringList };

struct Flag {
    const char* name;
    const char* key;  // section.field
    Kind kind;
    const char* help;
};

const Flag kFlags[] = {
    {"--out", "paths.output_dir", Kind::String, "output directory (run directories are created below it)"},
    {"--seed", "embedding.seed", Kind::Integer, "random seed"},
    {"--workers", "embedding.workers", Kind::Integer, "training threads; 1 keeps runs reproducible"},
    {"--corpus", "paths.corpus", Kind::String, "JSONL news corpus"},
    {"--lexicon", "paths.lexicon", Kind::String, "base lexicon TSV"},
    {"--stopwords", "paths.stopwords", Kind::String, "stop-word list, one per line"},
    {"--cleaning-rules", "paths.cleaning_rules", Kind::String, "JSON list of regex cleaning rules"},
    {"--market", "paths.market", Kind::String, "market series CSV (month,value)"},
    {"--var-input", "paths.var_input", Kind::String, "wide CSV used directly by the var stage"},
    {"--date-from", "corpus.date_from", Kind::String, "first date kept, YYYY-MM-DD"},
    {"--date-to", "corpus.date_to", Kind::String, "last date kept, YYYY-MM-DD"},
    {"--dim", "embedding.dim", Kind::Integer, "embedding dimension"},
    {"--window", "embedding.window", Kind::Integer, "context window"},
    {"--min-count", "embedding.min_count", Kind::Integer, "minimum word frequency"},
    {"--epochs", "embedding.epochs", Kind::Integer, "training epochs"},
    {"--negative", "embedding.negative", Kind::Integer, "noise words per pair"},
    {"--lr", "embedding.initial_lr", Kind::Number, "initial learning rate"},
    {"--seed-word", "expansion.seed_word", Kind::String, "word whose neighbours extend the negative list"},
    {"--n-values", "expansion.n_values", Kind::IntList, "comma-separated expansion sizes"},
    {"--lambda", "tsprep.lambda", Kind::Number, "HP smoothing parameter"},
    {"--ma-periods", "tsprep.ma_periods", Kind::IntList, "comma-separated moving-average windows"},
    {"--order", "tsprep.order", Kind::StringList, "comma-separated preparation steps"},
    {"--market-name", "econ.market_name", Kind::String, "name of the market series"},
    {"--i-max", "econ.i_max", Kind::Integer, "largest lead in the OLS grid"},
    {"--var-series", "econ.var_series", Kind::StringList, "comma-separated VAR variables"},
    {"--var-lag", "econ.var_lag", Kind::Integer, "VAR lag order"},
    {"--max-lag", "econ.max_lag", Kind::Integer, "largest lag considered by the information criteria"},
    {"--horizons", "econ.irf_horizons", Kind::Integer, "impulse-response horizons"},
    {"--cholesky-order", "econ.cholesky_order", Kind::StringList, "comma-separated Cholesky ordering"},
    {"--bootstrap-draws", "econ.irf_bootstrap_draws", Kind::Integer, "IRF bootstrap replications (0 = off)"},
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Typed value for a flag; throws std::invalid_argument on malformed numbers.
json typed_value(Kind kind, const std::string& text) {
    switch (kind) {
        case Kind::String: return text;
        case Kind::Integer: return std::stoll(text);
        case Kind::Number: return std::stod(text);
        case Kind::IntList: {
            json arr = json::array();
            for (const auto& s : split(text, ',')) arr.push_back(std::stoll(s));
            return arr;
        }
        case Kind::StringList: {
            json arr = json::array();
            for (const auto& s : split(text, ',')) arr.push_back(s);
            return arr;
        }
    }
    return text;
}

void set_path(json& doc, const std::string& key, json value) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
        doc[key] = std::move(value);
        return;
    }
    doc[key.substr(0, dot)][key.substr(dot + 1)] = std::move(value);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"News-title sentiment pipeline"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file");
    std::map<std::string, std::string> flag_values;
    for (const auto& f : kFlags) app.add_option(f.name, flag_values[f.name], f.help);
    std::vector<std::string> sets;
    app.add_option("--set", sets, "override any config key: section.key=JSON value");

    const std::pair<const char*, const char*> commands[] = {
        {"ingest", "clean and tokenize the corpus"},
        {"train", "train skip-gram embeddings"},
        {"expand", "build expanded lexicons"},
        {"score", "count matches and build monthly indices"},
        {"prep", "filter, normalize and smooth the series"},
        {"ols", "run the lead-lag regression grid"},
        {"var", "fit the VAR, lag criteria, Granger tests and IRFs"},
        {"all", "run every stage in order"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    json doc = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "config error: cannot read " << config_path << '\n';
            return 2;
        }
        doc = json::parse(in, nullptr, false);
        if (doc.is_discarded()) {
            std::cerr << "config error: " << config_path << " is not valid JSON\n";
            return 2;
        }
    }

    std::vector<std::string> errors;
    for (const auto& f : kFlags) {
        if (app.count(f.name) == 0) continue;
        try {
            set_path(doc, f.key, typed_value(f.kind, flag_values[f.name]));
        } catch (const std::exception&) {
            errors.push_back(std::string(f.key) + ": bad value '" + flag_values[f.name] + "' from " + f.name);
        }
    }
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            errors.push_back("--set " + s + ": expected key=value");
            continue;
        }
        const auto text = s.substr(eq + 1);
        json value = json::parse(text, nullptr, false);
        if (value.is_discarded()) value = text;
        set_path(doc, s.substr(0, eq), std::move(value));
    }

    auto config = pl::config_from_json(doc, errors);
    if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "config error: " << e << '\n';
        return 2;
    }

    const auto stages = pl::stages_for(app.get_subcommands().front()->get_name());
    const auto outcome = pl::run(stages, config, std::cerr);
    if (outcome.exit_code == 0) std::cout << outcome.run_dir.string() << '\n';
    return outcome.exit_code;
}
