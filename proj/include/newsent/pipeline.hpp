#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "newsent/embedding.hpp"

namespace newsent::pipeline {

struct Paths {
    std::string corpus;
    std::string lexicon;
    std::string stopwords;
    std::string cleaning_rules;
    std::string market;
    std::string var_input;  // optional wide CSV that replaces prepared series in the var stage
    std::string output_dir = "out";
};

struct CorpusOptions {
    std::string date_from;  // YYYY-MM-DD, inclusive, optional
    std::string date_to;
};

struct ExpansionOptions {
    std::string seed_word = "\xec\x9c\x84\xea\xb8\xb0";  // "위기" (crisis)
    std::vector<std::size_t> n_values{0, 100, 500, 1000};
    std::size_t pca_words = 1000;
};

struct PrepOptions {
    double lambda = 14400.0;
    std::optional<double> market_lambda;  // defaults to lambda
    std::vector<int> ma_periods{1, 3, 12};
    std::vector<std::string> order{"hp", "minmax", "ma"};
    int market_ma_period = 12;
    int adf_max_lags = 12;
};

struct EconOptions {
    std::string market_name = "KOSPI200";
    int i_max = 8;
    std::vector<std::size_t> ols_sentiments{0, 1000};
    std::vector<std::string> var_series{"KOSPI200", "SENT0", "SENT1000"};
    int var_ma_period = 12;
    int var_lag = 4;
    int max_lag = 12;
    int irf_horizons = 24;
    std::vector<std::string> cholesky_order;  // empty: var_series order
    int irf_bootstrap_draws = 0;              // 0 disables bands
    double irf_band_level = 0.95;
};

struct PipelineConfig {
    Paths paths;
    CorpusOptions corpus;
    TrainConfig embedding;
    ExpansionOptions expansion;
    PrepOptions tsprep;
    EconOptions econ;
};

enum class Stage { Ingest, Train, Expand, Score, Prep, Ols, Var };

std::string_view stage_name(Stage stage);
/// Subcommand to stages: one stage, or every stage for "all". Empty for unknown names.
std::vector<Stage> stages_for(std::string_view subcommand);

/// Reads a config document; unknown keys and wrongly typed values are appended to
/// `errors` as "section.key: message". Missing keys keep their defaults.
PipelineConfig config_from_json(const nlohmann::json& doc, std::vector<std::string>& errors);
nlohmann::ordered_json to_json(const PipelineConfig& config);

/// Field-level problems for running `stages`; empty when the config is usable.
std::vector<std::string> validate(const PipelineConfig& config, std::span<const Stage> stages);

/// SHA-256 of the canonical config with paths.output_dir left out.
std::string config_hash(const PipelineConfig& config);
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// <output_dir>/run-<first 16 hex digits of config_hash>.
std::filesystem::path run_directory(const PipelineConfig& config);

struct RunOutcome {
    int exit_code = 0;  // 0 ok, 2 invalid config, 3 stage failure
    std::filesystem::path run_dir;
    std::string failed_stage;
    std::string message;
};

/// Validates, then runs the stages in order. A failing stage leaves its partial output
/// under <run_dir>/quarantine/<stage> and stops the run.
RunOutcome run(std::span<const Stage> stages, const PipelineConfig& config, std::ostream& log);

}  // namespace newsent::pipeline
