#include "newsent/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "newsent/corpus.hpp"
#include "newsent/econ.hpp"
#include "newsent/errors.hpp"
#include "newsent/lexicon.hpp"
#include "newsent/sentiment.hpp"
#include "newsent/series.hpp"
#include "newsent/tsprep.hpp"

namespace newsent::pipeline {
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// config parsing

class SectionReader {
public:
    SectionReader(const json& doc, std::string section, std::vector<std::string>& errors)
        : section_(std::move(section)), errors_(errors) {
        if (!doc.contains(section_)) return;
        const auto& s = doc.at(section_);
        if (!s.is_object()) {
            errors_.push_back(fmt::format("{}: must be an object", section_));
            return;
        }
        obj_ = &s;
    }

    ~SectionReader() {
        if (!obj_) return;
        for (const auto& [key, _] : obj_->items()) {
            if (!known_.contains(key)) errors_.push_back(fmt::format("{}.{}: unknown key", section_, key));
        }
    }

    void string(const char* key, std::string& out) {
        read(key, [&](const json& v) {
            if (!v.is_string()) return fail(key, "must be a string");
            out = v.get<std::string>();
        });
    }

    void integer(const char* key, int& out) {
        read(key, [&](const json& v) {
            if (!v.is_number_integer()) return fail(key, "must be an integer");
            out = v.get<int>();
        });
    }

    void unsigned_integer(const char* key, std::uint64_t& out) {
        read(key, [&](const json& v) {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 0) return fail(key, "must be a non-negative integer");
            out = v.get<std::uint64_t>();
        });
    }

    void size(const char* key, std::size_t& out) {
        std::uint64_t v = out;
        unsigned_integer(key, v);
        out = static_cast<std::size_t>(v);
    }

    void number(const char* key, double& out) {
        read(key, [&](const json& v) {
            if (!v.is_number()) return fail(key, "must be a number");
            out = v.get<double>();
        });
    }

    void optional_number(const char* key, std::optional<double>& out) {
        read(key, [&](const json& v) {
            if (v.is_null()) {
                out.reset();
                return;
            }
            if (!v.is_number()) return fail(key, "must be a number or null");
            out = v.get<double>();
        });
    }

    void sizes(const char* key, std::vector<std::size_t>& out) {
        read(key, [&](const json& v) {
            if (!v.is_array()) return fail(key, "must be an array of non-negative integers");
            std::vector<std::size_t> vals;
            for (const auto& x : v) {
                if (!x.is_number_integer() || x.get<std::int64_t>() < 0) {
                    return fail(key, "values must be non-negative integers");
                }
                vals.push_back(x.get<std::size_t>());
            }
            out = std::move(vals);
        });
    }

    void integers(const char* key, std::vector<int>& out) {
        read(key, [&](const json& v) {
            if (!v.is_array()) return fail(key, "must be an array of integers");
            std::vector<int> vals;
            for (const auto& x : v) {
                if (!x.is_number_integer()) return fail(key, "values must be integers");
                vals.push_back(x.get<int>());
            }
            out = std::move(vals);
        });
    }

    void strings(const char* key, std::vector<std::string>& out) {
        read(key, [&](const json& v) {
            if (!v.is_array()) return fail(key, "must be an array of strings");
            std::vector<std::string> vals;
            for (const auto& x : v) {
                if (!x.is_string()) return fail(key, "values must be strings");
                vals.push_back(x.get<std::string>());
            }
            out = std::move(vals);
        });
    }

private:
    template <class F>
    void read(const char* key, F&& f) {
        known_.insert(key);
        if (obj_ && obj_->contains(key)) f(obj_->at(key));
    }

    void fail(const char* key, std::string_view msg) { errors_.push_back(fmt::format("{}.{}: {}", section_, key, msg)); }

    std::string section_;
    std::vector<std::string>& errors_;
    const json* obj_ = nullptr;
    std::set<std::string> known_;
};

std::string sentiment_name(std::size_t n) { return fmt::format("SENT{}", n); }

std::optional<std::size_t> parse_sentiment_name(std::string_view name) {
    if (name.size() <= 4 || name.substr(0, 4) != "SENT") return std::nullopt;
    std::size_t n = 0;
    for (char c : name.substr(4)) {
        if (c < '0' || c > '9') return std::nullopt;
        n = n * 10 + static_cast<std::size_t>(c - '0');
    }
    return n;
}

// ---------------------------------------------------------------------------
// stage plumbing

class StageFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string_view stage_dir(Stage s) {
    switch (s) {
        case Stage::Ingest: return "corpus";
        case Stage::Train: return "embedding";
        case Stage::Expand: return "lexicon";
        case Stage::Score: return "score";
        case Stage::Prep: return "prep";
        case Stage::Ols: return "ols";
        case Stage::Var: return "var";
    }
    return "?";
}

struct StageContext {
    const PipelineConfig& cfg;
    fs::path run_dir;
    fs::path staging;
    std::ostream& log;
    std::map<std::string, std::string> inputs;  // input path -> sha256

    fs::path artifact(Stage producer, std::string_view name) const {
        auto p = run_dir / stage_dir(producer) / name;
        if (!fs::exists(p)) {
            throw StageFailure(fmt::format("missing artifact '{}/{}'; run the '{}' stage first", stage_dir(producer),
                                           name, stage_name(producer)));
        }
        return p;
    }

    fs::path output(std::string_view name) const { return staging / name; }

    fs::path input(const std::string& path) {
        inputs[path] = sha256_file(path);
        return path;
    }
};

void write_json(const fs::path& path, const ordered_json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << doc.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << text;
}

std::string fixed2(double v) { return fmt::format("{:.2f}", v); }

ordered_json series_meta(const MonthlySeries& s) {
    ordered_json j;
    j["start"] = format_month(s.start);
    j["end"] = s.empty() ? "" : format_month(s.last_month());
    j["n"] = s.size();
    return j;
}

Corpus load_tokenized(const StageContext& ctx) {
    IngestOptions opts;
    auto result = ingest_jsonl(ctx.artifact(Stage::Ingest, "tokenized.jsonl"), opts);
    if (!result.rejections.empty()) throw StageFailure("tokenized corpus store is corrupt");
    return std::move(result.corpus);
}

// ---------------------------------------------------------------------------
// stages

void stage_ingest(StageContext& ctx) {
    const auto& cfg = ctx.cfg;
    IngestOptions opts;
    if (!cfg.paths.cleaning_rules.empty()) opts.rules = CleaningRules::from_json_file(ctx.input(cfg.paths.cleaning_rules));
    if (!cfg.paths.stopwords.empty()) opts.stopwords = load_stopwords(ctx.input(cfg.paths.stopwords));
    if (!cfg.corpus.date_from.empty()) opts.date_from = parse_date(cfg.corpus.date_from);
    if (!cfg.corpus.date_to.empty()) opts.date_to = parse_date(cfg.corpus.date_to);
    auto result = ingest_jsonl(ctx.input(cfg.paths.corpus), opts);
    save_corpus_jsonl(result.corpus, ctx.output("tokenized.jsonl"));

    auto rejections = ordered_json::array();
    for (const auto& r : result.rejections) rejections.push_back({{"line", r.line}, {"reason", r.reason}});
    write_json(ctx.output("rejections.json"), rejections);

    const auto stats = token_stats(result.corpus);
    ordered_json s;
    s["lines_read"] = result.lines_read;
    s["records"] = result.corpus.records.size();
    s["rejected"] = result.rejections.size();
    s["total_tokens"] = stats.total_tokens;
    s["unique_tokens"] = stats.unique_tokens;
    s["mean_title_length"] = stats.mean_length;
    s["max_title_length"] = stats.max_length;
    if (!result.corpus.records.empty()) {
        s["first_date"] = format_date(result.corpus.records.front().date);
        s["last_date"] = format_date(result.corpus.records.back().date);
    }
    write_json(ctx.output("stats.json"), s);
    ctx.log << fmt::format("[ingest] {} records, {} rejected, {} unique tokens\n", result.corpus.records.size(),
                           result.rejections.size(), stats.unique_tokens);
}

void stage_train(StageContext& ctx) {
    const auto corpus = load_tokenized(ctx);
    auto trained = train_skipgram(corpus, ctx.cfg.embedding);
    save_model(trained.model, ctx.cfg.embedding, ctx.output("model.txt"));
    ordered_json s;
    s["vocabulary_size"] = trained.model.vocab.size();
    s["retained_tokens"] = trained.model.vocab.total_count();
    s["pairs_processed"] = trained.stats.pairs_processed;
    s["initial_loss"] = trained.stats.initial_loss;
    s["final_loss"] = trained.stats.final_loss;
    s["epoch_loss"] = trained.stats.epoch_loss;
    write_json(ctx.output("train_stats.json"), s);
    ctx.log << fmt::format("[train] V={} dim={} loss {:.4f} -> {:.4f}\n", trained.model.vocab.size(),
                           trained.model.dim(), trained.stats.initial_loss, trained.stats.final_loss);
}

void stage_expand(StageContext& ctx) {
    const auto& cfg = ctx.cfg;
    const auto base = load_lexicon(ctx.input(cfg.paths.lexicon));
    for (const auto& w : base.warnings()) ctx.log << "[expand] warning: " << w << '\n';

    const std::size_t max_n = *std::max_element(cfg.expansion.n_values.begin(), cfg.expansion.n_values.end());
    std::optional<LoadedModel> loaded;
    if (max_n > 0) loaded = load_model(ctx.artifact(Stage::Train, "model.txt"));

    for (auto n : cfg.expansion.n_values) {
        Expansion ex = n == 0 ? Expansion{base, {}} : expand_negative(loaded->model, cfg.expansion.seed_word, n, base);
        if (n == 0) {
            ex.report.seed = cfg.expansion.seed_word;
            if (loaded) ex.report.vocabulary_size = loaded->model.vocab.size();
        }
        save_lexicon(ex.lexicon, ctx.output(fmt::format("lexicon_N{}.tsv", n)));
        auto report = to_json(ex.report);
        report["negatives_before"] = base.negatives().size();
        report["negatives_after"] = ex.lexicon.negatives().size();
        report["positives"] = ex.lexicon.positives().size();
        report["base_warnings"] = base.warnings();
        write_json(ctx.output(fmt::format("expansion_N{}.json", n)), report);
        ctx.log << fmt::format("[expand] N={}: added {}, overlaps {}\n", n, ex.report.added, ex.report.overlaps_excluded);
    }

    if (loaded && cfg.expansion.pca_words > 0) {
        const auto& model = loaded->model;
        const auto take = std::min({max_n, cfg.expansion.pca_words, model.vocab.size() - 1});
        const auto neighbors = top_k_similar(model, cfg.expansion.seed_word, std::max<std::size_t>(take, 1));
        std::vector<std::size_t> rows{*model.vocab.index_of(cfg.expansion.seed_word)};
        for (const auto& nb : neighbors) rows.push_back(nb.index);
        if (rows.size() >= 2 && model.dim() >= 2) {
            Eigen::MatrixXd vecs(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(model.dim()));
            for (std::size_t i = 0; i < rows.size(); ++i) vecs.row(static_cast<Eigen::Index>(i)) = model.input.row(static_cast<Eigen::Index>(rows[i]));
            const auto proj = pca_project(vecs);
            auto sorted_n = cfg.expansion.n_values;
            std::sort(sorted_n.begin(), sorted_n.end());
            std::ostringstream out;
            out << "word,rank,similarity,group,pc1,pc2\n";
            for (std::size_t i = 0; i < rows.size(); ++i) {
                std::string group = "seed";
                double sim = 1.0;
                if (i > 0) {
                    sim = neighbors[i - 1].similarity;
                    auto it = std::find_if(sorted_n.begin(), sorted_n.end(), [&](std::size_t n) { return n >= i; });
                    group = it == sorted_n.end() ? "other" : fmt::format("N={}", *it);
                }
                out << model.vocab.word(rows[i]) << ',' << i << ',' << format_number(sim) << ',' << group << ','
                    << format_number(proj(static_cast<Eigen::Index>(i), 0)) << ','
                    << format_number(proj(static_cast<Eigen::Index>(i), 1)) << '\n';
            }
            write_text(ctx.output("pca.csv"), out.str());
        }
    }
}

void stage_score(StageContext& ctx) {
    const auto& cfg = ctx.cfg;
    const auto corpus = load_tokenized(ctx);
    auto totals_json = ordered_json::array();
    std::ostringstream table;
    table << "threshold,positive,negative,sum\n";
    for (auto n : cfg.expansion.n_values) {
        const auto lex = load_lexicon(ctx.artifact(Stage::Expand, fmt::format("lexicon_N{}.tsv", n)));
        const auto label = fmt::format("N={}", n);
        const auto totals = corpus_match_totals(corpus, lex, label);
        const auto index = monthly_index(corpus, lex);
        totals_json.push_back({{"threshold", label},
                               {"positive", totals.total_positive},
                               {"negative", totals.total_negative},
                               {"sum", totals.total_score}});
        table << label << ',' << totals.total_positive << ',' << totals.total_negative << ',' << totals.total_score << '\n';

        const auto name = sentiment_name(n);
        write_series_csv(index.series, ctx.output(fmt::format("monthly_{}.csv", name)));
        ordered_json meta = series_meta(index.series);
        auto zero = ordered_json::array();
        for (auto m : index.zero_filled) zero.push_back(format_month(m));
        meta["zero_filled_months"] = zero;
        meta["zero_fill_applied"] = !index.zero_filled.empty();
        write_json(ctx.output(fmt::format("monthly_{}.json", name)), meta);
        ctx.log << fmt::format("[score] {}: P={} N={} SC={}\n", label, totals.total_positive, totals.total_negative,
                               totals.total_score);
    }
    write_json(ctx.output("match_totals.json"), totals_json);
    write_text(ctx.output("table1.csv"), table.str());
}

PrepChain chain_for(const PipelineConfig& cfg, double lambda, int period) {
    PrepChain chain;
    chain.steps.clear();
    for (const auto& s : cfg.tsprep.order) chain.steps.push_back(parse_prep_step(s));
    chain.lambda = lambda;
    chain.period = period;
    return chain;
}

std::string prepared_name(std::string_view series, int period) { return fmt::format("{}_ma{}", series, period); }

void stage_prep(StageContext& ctx) {
    const auto& cfg = ctx.cfg;
    struct Raw {
        std::string name;
        MonthlySeries series;
        double lambda;
        std::set<int> periods;
    };
    std::vector<Raw> raws;
    {
        Raw market{cfg.econ.market_name, read_series_csv(ctx.input(cfg.paths.market)),
                   cfg.tsprep.market_lambda.value_or(cfg.tsprep.lambda), {cfg.tsprep.market_ma_period, cfg.econ.var_ma_period}};
        raws.push_back(std::move(market));
    }
    for (auto n : cfg.expansion.n_values) {
        const auto name = sentiment_name(n);
        Raw r{name, read_series_csv(ctx.artifact(Stage::Score, fmt::format("monthly_{}.csv", name))), cfg.tsprep.lambda,
              {cfg.econ.var_ma_period}};
        r.periods.insert(cfg.tsprep.ma_periods.begin(), cfg.tsprep.ma_periods.end());
        raws.push_back(std::move(r));
    }

    auto adf = ordered_json::array();
    std::vector<MonthlySeries> normalized;
    for (const auto& raw : raws) {
        for (int period : raw.periods) {
            const auto prepared = prepare_series(raw.series, chain_for(cfg, raw.lambda, period));
            const auto name = prepared_name(raw.name, period);
            write_series_csv(prepared.series, ctx.output(name + ".csv"));
            ordered_json meta;
            meta["series"] = raw.name;
            meta["source"] = series_meta(raw.series);
            meta["chain"] = prepared.chain;
            meta["trimmed_each_side"] = prepared.trimmed_each_side;
            meta["output"] = series_meta(prepared.series);
            write_json(ctx.output(name + ".json"), meta);
            if (period == cfg.econ.var_ma_period) normalized.push_back(prepared.series);

            ordered_json a;
            a["series"] = name;
            const int max_lags = std::min(cfg.tsprep.adf_max_lags, static_cast<int>(prepared.series.size()) - 10);
            if (max_lags < 0) {
                a["skipped"] = "series too short";
            } else {
                const auto r = adf_test(prepared.series, max_lags);
                a["statistic"] = r.statistic;
                a["lags_used"] = r.lags_used;
                a["nobs"] = r.nobs;
                a["approx_p"] = r.approx_p;
                a["critical_value_5pct"] = r.critical_value_5pct;
                a["reject_unit_root_at_5pct"] = r.reject_unit_root_at_5pct;
            }
            adf.push_back(std::move(a));
        }
    }
    write_json(ctx.output("adf.json"), adf);

    std::vector<MonthlySeries> raw_series;
    for (const auto& r : raws) raw_series.push_back(r.series);
    std::ostringstream desc;
    desc << "series,variant,start,end,n,mean,median,maximum,minimum,std_dev,skewness,kurtosis,degenerate\n";
    auto emit = [&](const std::vector<MonthlySeries>& group, std::string_view variant) {
        const auto aligned = align_common(group);
        for (std::size_t i = 0; i < aligned.size(); ++i) {
            const auto s = describe(aligned[i]);
            desc << raws[i].name << ',' << variant << ',' << format_month(aligned[i].start) << ','
                 << format_month(aligned[i].last_month()) << ',' << s.n << ',' << format_number(s.mean) << ','
                 << format_number(s.median) << ',' << format_number(s.maximum) << ',' << format_number(s.minimum)
                 << ',' << format_number(s.std_dev) << ',' << format_number(s.skewness) << ','
                 << format_number(s.kurtosis) << ',' << (s.degenerate ? "true" : "false") << '\n';
        }
    };
    emit(raw_series, "raw");
    emit(normalized, fmt::format("prepared_ma{}", cfg.econ.var_ma_period));
    write_text(ctx.output("describe.csv"), desc.str());
    ctx.log << fmt::format("[prep] {} series prepared\n", adf.size());
}

void stage_ols(StageContext& ctx) {
    const auto& cfg = ctx.cfg;
    const auto y_raw = read_series_csv(
        ctx.artifact(Stage::Prep, prepared_name(cfg.econ.market_name, cfg.tsprep.market_ma_period) + ".csv"));

    struct Column {
        std::string label;
        std::vector<PathCell> cells;
    };
    std::vector<Column> columns;
    std::ostringstream longform;
    longform << "ma_period,sentiment,lag,alpha,beta,gamma,se_gamma,p_gamma,r_squared,n_used,error\n";
    auto doc = ordered_json::array();
    for (int period : cfg.tsprep.ma_periods) {
        for (auto n : cfg.econ.ols_sentiments) {
            const auto sname = sentiment_name(n);
            const auto x_raw = read_series_csv(ctx.artifact(Stage::Prep, prepared_name(sname, period) + ".csv"));
            const auto aligned = align_common({y_raw, x_raw});
            Column col{fmt::format("MA{}_{}", period, sname), coefficient_path(aligned[0], aligned[1], cfg.econ.i_max)};
            for (const auto& cell : col.cells) {
                ordered_json j;
                j["ma_period"] = period;
                j["sentiment"] = sname;
                j["lag"] = cell.lag;
                longform << period << ',' << sname << ',' << cell.lag << ',';
                if (cell.result) {
                    const auto& r = *cell.result;
                    longform << format_number(r.alpha) << ',' << format_number(r.beta) << ',' << format_number(r.gamma)
                             << ',' << format_number(r.se_gamma) << ',' << format_number(r.p_gamma) << ','
                             << format_number(r.r_squared) << ',' << r.n_used << ",\n";
                    j["alpha"] = r.alpha;
                    j["beta"] = r.beta;
                    j["gamma"] = r.gamma;
                    j["se_alpha"] = r.se_alpha;
                    j["se_beta"] = r.se_beta;
                    j["se_gamma"] = r.se_gamma;
                    j["p_alpha"] = r.p_alpha;
                    j["p_beta"] = r.p_beta;
                    j["p_gamma"] = r.p_gamma;
                    j["r_squared"] = r.r_squared;
                    j["n_used"] = r.n_used;
                    j["first_month"] = format_month(r.first_month);
                } else {
                    longform << ",,,,,,," << '"' << cell.error << "\"\n";
                    j["error"] = cell.error;
                }
                doc.push_back(std::move(j));
            }
            columns.push_back(std::move(col));
        }
    }
    std::ostringstream wide;
    wide << "lag";
    for (const auto& c : columns) wide << ',' << c.label;
    wide << '\n';
    for (int lag = 0; lag <= cfg.econ.i_max; ++lag) {
        wide << lag;
        for (const auto& c : columns) {
            const auto& cell = c.cells[static_cast<std::size_t>(lag)];
            wide << ',' << (cell.result ? fmt::format("{} ({})", fixed2(cell.result->gamma), fixed2(cell.result->p_gamma)) : "NA");
        }
        wide << '\n';
    }
    write_text(ctx.output("table_e1.csv"), wide.str());
    write_text(ctx.output("ols_long.csv"), longform.str());
    write_json(ctx.output("ols.json"), doc);
    ctx.log << fmt::format("[ols] {} coefficient paths\n", columns.size());
}

MultiSeries var_data(StageContext& ctx) {
    const auto& cfg = ctx.cfg;
    if (!cfg.paths.var_input.empty()) {
        auto wide = read_multi_csv(ctx.input(cfg.paths.var_input));
        if (cfg.econ.var_series.empty()) return wide;
        MultiSeries picked;
        picked.start = wide.start;
        picked.names = cfg.econ.var_series;
        picked.values.resize(wide.values.rows(), static_cast<Eigen::Index>(picked.names.size()));
        for (std::size_t j = 0; j < picked.names.size(); ++j) {
            auto it = std::find(wide.names.begin(), wide.names.end(), picked.names[j]);
            if (it == wide.names.end()) {
                throw StageFailure(fmt::format("var input lacks column '{}'", picked.names[j]));
            }
            picked.values.col(static_cast<Eigen::Index>(j)) = wide.values.col(it - wide.names.begin());
        }
        return picked;
    }
    std::vector<MonthlySeries> series;
    for (const auto& name : cfg.econ.var_series) {
        series.push_back(read_series_csv(ctx.artifact(Stage::Prep, prepared_name(name, cfg.econ.var_ma_period) + ".csv")));
    }
    return combine(align_common(series), cfg.econ.var_series);
}

void stage_var(StageContext& ctx) {
    const auto& cfg = ctx.cfg;
    const auto data = var_data(ctx);
    ordered_json doc;
    doc["variables"] = data.names;
    doc["sample"] = {{"start", format_month(data.start)}, {"observations", data.rows()}};

    const auto sel = select_lag(data, cfg.econ.max_lag);
    {
        std::ostringstream h1;
        h1 << "lag,log_det,aic,bic,hq,selected_by\n";
        auto rows = ordered_json::array();
        for (const auto& r : sel.rows) {
            std::vector<std::string> by;
            if (r.lag == sel.aic_lag) by.emplace_back("AIC");
            if (r.lag == sel.bic_lag) by.emplace_back("BIC");
            if (r.lag == sel.hq_lag) by.emplace_back("HQ");
            std::string joined;
            for (const auto& b : by) joined += (joined.empty() ? "" : " ") + b;
            h1 << r.lag << ',' << format_number(r.log_det) << ',' << format_number(r.aic) << ','
               << format_number(r.bic) << ',' << format_number(r.hq) << ',' << joined << '\n';
            rows.push_back({{"lag", r.lag}, {"log_det", r.log_det}, {"params", r.params}, {"aic", r.aic}, {"bic", r.bic}, {"hq", r.hq}});
        }
        write_text(ctx.output("table_h1.csv"), h1.str());
        doc["lag_selection"] = {{"t_effective", sel.t_effective}, {"rows", rows},
                                {"aic_lag", sel.aic_lag}, {"bic_lag", sel.bic_lag}, {"hq_lag", sel.hq_lag}};
    }

    const auto model = fit_var(data, cfg.econ.var_lag);
    {
        const auto m = model.m();
        std::ostringstream g1;
        g1 << "regressor";
        for (const auto& n : model.names) g1 << ',' << n << "_coef," << n << "_se," << n << "_t";
        g1 << '\n';
        std::vector<std::size_t> order;
        for (std::size_t v = 0; v < m; ++v)
            for (int lag = 1; lag <= model.p; ++lag) order.push_back(model.regressor_row(v, lag));
        order.push_back(0);
        for (auto row : order) {
            g1 << model.regressor_name(row);
            for (std::size_t eq = 0; eq < m; ++eq) {
                const auto r = static_cast<Eigen::Index>(row), e = static_cast<Eigen::Index>(eq);
                g1 << ',' << format_number(model.coef(r, e)) << ',' << format_number(model.std_errors(r, e)) << ','
                   << format_number(model.t_stats(r, e));
            }
            g1 << '\n';
        }
        g1 << "R-squared";
        for (std::size_t eq = 0; eq < m; ++eq) g1 << ',' << format_number(model.r_squared(static_cast<Eigen::Index>(eq))) << ",,";
        g1 << "\nAdj. R-squared";
        for (std::size_t eq = 0; eq < m; ++eq) g1 << ',' << format_number(model.adj_r_squared(static_cast<Eigen::Index>(eq))) << ",,";
        g1 << '\n';
        write_text(ctx.output("table_g1.csv"), g1.str());

        auto eqs = ordered_json::array();
        for (std::size_t eq = 0; eq < m; ++eq) {
            ordered_json e;
            e["dependent"] = model.names[eq];
            auto coefs = ordered_json::array();
            for (std::size_t row = 0; row < model.regressors(); ++row) {
                const auto r = static_cast<Eigen::Index>(row), c = static_cast<Eigen::Index>(eq);
                coefs.push_back({{"regressor", model.regressor_name(row)}, {"coef", model.coef(r, c)},
                                 {"se", model.std_errors(r, c)}, {"t", model.t_stats(r, c)}});
            }
            e["coefficients"] = coefs;
            e["r_squared"] = model.r_squared(static_cast<Eigen::Index>(eq));
            e["adj_r_squared"] = model.adj_r_squared(static_cast<Eigen::Index>(eq));
            eqs.push_back(std::move(e));
        }
        auto cov = ordered_json::array();
        for (Eigen::Index i = 0; i < model.residual_cov.rows(); ++i) {
            std::vector<double> row(model.residual_cov.cols());
            for (Eigen::Index j = 0; j < model.residual_cov.cols(); ++j) row[static_cast<std::size_t>(j)] = model.residual_cov(i, j);
            cov.push_back(row);
        }
        doc["var"] = {{"p", model.p}, {"t_effective", model.t_effective},
                      {"sample_start", format_month(model.sample_start)}, {"equations", eqs}, {"residual_cov", cov}};
    }

    const auto granger = granger_wald(model);
    {
        std::ostringstream d1;
        d1 << "dependent,excluded,chi_sq,df,p_value\n";
        auto eqs = ordered_json::array();
        for (const auto& eq : granger.equations) {
            auto tests = ordered_json::array();
            for (const auto& t : eq.tests) {
                d1 << eq.dependent << ',' << t.excluded << ',' << (t.ok ? format_number(t.chi_sq) : "NA") << ','
                   << t.df << ',' << (t.ok ? format_number(t.p_value) : "NA") << '\n';
                ordered_json tj{{"excluded", t.excluded}, {"df", t.df}};
                if (t.ok) {
                    tj["chi_sq"] = t.chi_sq;
                    tj["p_value"] = t.p_value;
                } else {
                    tj["error"] = t.error;
                }
                tests.push_back(std::move(tj));
            }
            eqs.push_back({{"dependent", eq.dependent}, {"tests", tests}});
        }
        write_text(ctx.output("table_d1.csv"), d1.str());
        doc["granger"] = eqs;
    }

    const auto ordering = cfg.econ.cholesky_order.empty() ? model.names : cfg.econ.cholesky_order;
    const auto ordered = reorder(model, ordering);
    const auto irf = irf_cholesky(ordered, cfg.econ.irf_horizons);
    {
        std::ostringstream out;
        out << "horizon,response_var,shock_var,value\n";
        for (int h = 0; h <= irf.horizons; ++h) {
            const auto& r = irf.responses[static_cast<std::size_t>(h)];
            for (std::size_t i = 0; i < irf.ordering.size(); ++i)
                for (std::size_t j = 0; j < irf.ordering.size(); ++j)
                    out << h << ',' << irf.ordering[i] << ',' << irf.ordering[j] << ','
                        << format_number(r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
        }
        write_text(ctx.output("irf.csv"), out.str());
        doc["irf"] = {{"horizons", irf.horizons}, {"ordering", irf.ordering}, {"stable", irf.stable},
                      {"spectral_radius", irf.spectral_radius}, {"warnings", irf.warnings}};
        for (const auto& w : irf.warnings) ctx.log << "[var] warning: " << w << '\n';
    }
    if (cfg.econ.irf_bootstrap_draws > 0) {
        // The sample in the Cholesky ordering.
        Eigen::MatrixXd sample(data.values.rows(), data.values.cols());
        for (std::size_t j = 0; j < ordering.size(); ++j) {
            auto it = std::find(data.names.begin(), data.names.end(), ordering[j]);
            sample.col(static_cast<Eigen::Index>(j)) = data.values.col(it - data.names.begin());
        }
        const auto bands = irf_bootstrap_bands(sample, ordered, cfg.econ.irf_horizons, cfg.econ.irf_bootstrap_draws,
                                               cfg.embedding.seed, cfg.econ.irf_band_level);
        std::ostringstream out;
        out << "horizon,response_var,shock_var,lower,upper\n";
        for (int h = 0; h <= irf.horizons; ++h)
            for (std::size_t i = 0; i < ordering.size(); ++i)
                for (std::size_t j = 0; j < ordering.size(); ++j) {
                    const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
                    out << h << ',' << ordering[i] << ',' << ordering[j] << ','
                        << format_number(bands.lower[static_cast<std::size_t>(h)](a, b)) << ','
                        << format_number(bands.upper[static_cast<std::size_t>(h)](a, b)) << '\n';
                }
        write_text(ctx.output("irf_bands.csv"), out.str());
        doc["irf"]["bootstrap"] = {{"draws", bands.draws}, {"level", bands.level}};
    }
    write_json(ctx.output("var.json"), doc);
    ctx.log << fmt::format("[var] VAR({}) on {} observations; BIC lag {}\n", model.p, model.t_effective, sel.bic_lag);
}

void run_stage(Stage stage, StageContext& ctx) {
    switch (stage) {
        case Stage::Ingest: return stage_ingest(ctx);
        case Stage::Train: return stage_train(ctx);
        case Stage::Expand: return stage_expand(ctx);
        case Stage::Score: return stage_score(ctx);
        case Stage::Prep: return stage_prep(ctx);
        case Stage::Ols: return stage_ols(ctx);
        case Stage::Var: return stage_var(ctx);
    }
}

void update_manifest(const fs::path& run_dir, const PipelineConfig& cfg, Stage stage,
                     const std::map<std::string, std::string>& inputs) {
    const auto path = run_dir / "manifest.json";
    json manifest = json::object();
    if (fs::exists(path)) {
        std::ifstream in(path);
        manifest = json::parse(in, nullptr, false);
        if (manifest.is_discarded() || !manifest.is_object()) manifest = json::object();
    }
    manifest["config_hash"] = config_hash(cfg);
    manifest["config"] = json::parse(to_json(cfg).dump());
    for (const auto& [p, h] : inputs) manifest["inputs"][p] = h;
    auto artifacts = json::array();
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(run_dir / stage_dir(stage))) {
        if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        artifacts.push_back({{"path", fs::relative(f, run_dir).generic_string()}, {"sha256", sha256_file(f)}});
    }
    manifest["artifacts"][std::string(stage_name(stage))] = artifacts;
    std::ofstream out(path, std::ios::binary);
    out << manifest.dump(2) << '\n';
}

}  // namespace

std::string_view stage_name(Stage stage) {
    switch (stage) {
        case Stage::Ingest: return "ingest";
        case Stage::Train: return "train";
        case Stage::Expand: return "expand";
        case Stage::Score: return "score";
        case Stage::Prep: return "prep";
        case Stage::Ols: return "ols";
        case Stage::Var: return "var";
    }
    return "?";
}

std::vector<Stage> stages_for(std::string_view subcommand) {
    static constexpr Stage all[] = {Stage::Ingest, Stage::Train, Stage::Expand, Stage::Score,
                                    Stage::Prep,   Stage::Ols,   Stage::Var};
    if (subcommand == "all") return {std::begin(all), std::end(all)};
    for (auto s : all) {
        if (stage_name(s) == subcommand) return {s};
    }
    return {};
}

PipelineConfig config_from_json(const json& doc, std::vector<std::string>& errors) {
    PipelineConfig cfg;
    if (!doc.is_object()) {
        errors.emplace_back("config: top level must be a JSON object");
        return cfg;
    }
    static const std::set<std::string> sections{"paths", "corpus", "embedding", "expansion", "tsprep", "econ"};
    for (const auto& [key, _] : doc.items()) {
        if (!sections.contains(key)) errors.push_back(fmt::format("{}: unknown section", key));
    }
    {
        SectionReader r(doc, "paths", errors);
        r.string("corpus", cfg.paths.corpus);
        r.string("lexicon", cfg.paths.lexicon);
        r.string("stopwords", cfg.paths.stopwords);
        r.string("cleaning_rules", cfg.paths.cleaning_rules);
        r.string("market", cfg.paths.market);
        r.string("var_input", cfg.paths.var_input);
        r.string("output_dir", cfg.paths.output_dir);
    }
    {
        SectionReader r(doc, "corpus", errors);
        r.string("date_from", cfg.corpus.date_from);
        r.string("date_to", cfg.corpus.date_to);
    }
    {
        SectionReader r(doc, "embedding", errors);
        auto& e = cfg.embedding;
        r.integer("dim", e.dim);
        r.integer("window", e.window);
        r.integer("min_count", e.min_count);
        r.integer("epochs", e.epochs);
        r.integer("negative", e.negative);
        r.number("initial_lr", e.initial_lr);
        r.unsigned_integer("seed", e.seed);
        r.integer("workers", e.workers);
    }
    {
        SectionReader r(doc, "expansion", errors);
        r.string("seed_word", cfg.expansion.seed_word);
        r.sizes("n_values", cfg.expansion.n_values);
        r.size("pca_words", cfg.expansion.pca_words);
    }
    {
        SectionReader r(doc, "tsprep", errors);
        r.number("lambda", cfg.tsprep.lambda);
        r.optional_number("market_lambda", cfg.tsprep.market_lambda);
        r.integers("ma_periods", cfg.tsprep.ma_periods);
        r.strings("order", cfg.tsprep.order);
        r.integer("market_ma_period", cfg.tsprep.market_ma_period);
        r.integer("adf_max_lags", cfg.tsprep.adf_max_lags);
    }
    {
        SectionReader r(doc, "econ", errors);
        auto& e = cfg.econ;
        r.string("market_name", e.market_name);
        r.integer("i_max", e.i_max);
        r.sizes("ols_sentiments", e.ols_sentiments);
        r.strings("var_series", e.var_series);
        r.integer("var_ma_period", e.var_ma_period);
        r.integer("var_lag", e.var_lag);
        r.integer("max_lag", e.max_lag);
        r.integer("irf_horizons", e.irf_horizons);
        r.strings("cholesky_order", e.cholesky_order);
        r.integer("irf_bootstrap_draws", e.irf_bootstrap_draws);
        r.number("irf_band_level", e.irf_band_level);
    }
    return cfg;
}

ordered_json to_json(const PipelineConfig& cfg) {
    ordered_json j;
    j["paths"] = {{"corpus", cfg.paths.corpus},
                  {"lexicon", cfg.paths.lexicon},
                  {"stopwords", cfg.paths.stopwords},
                  {"cleaning_rules", cfg.paths.cleaning_rules},
                  {"market", cfg.paths.market},
                  {"var_input", cfg.paths.var_input},
                  {"output_dir", cfg.paths.output_dir}};
    j["corpus"] = {{"date_from", cfg.corpus.date_from}, {"date_to", cfg.corpus.date_to}};
    const auto& e = cfg.embedding;
    j["embedding"] = {{"dim", e.dim},           {"window", e.window},
                      {"min_count", e.min_count}, {"epochs", e.epochs},
                      {"negative", e.negative},   {"initial_lr", e.initial_lr},
                      {"seed", e.seed},           {"workers", e.workers}};
    j["expansion"] = {{"seed_word", cfg.expansion.seed_word},
                      {"n_values", cfg.expansion.n_values},
                      {"pca_words", cfg.expansion.pca_words}};
    j["tsprep"] = {{"lambda", cfg.tsprep.lambda},
                   {"market_lambda", cfg.tsprep.market_lambda ? ordered_json(*cfg.tsprep.market_lambda) : ordered_json()},
                   {"ma_periods", cfg.tsprep.ma_periods},
                   {"order", cfg.tsprep.order},
                   {"market_ma_period", cfg.tsprep.market_ma_period},
                   {"adf_max_lags", cfg.tsprep.adf_max_lags}};
    const auto& c = cfg.econ;
    j["econ"] = {{"market_name", c.market_name},
                 {"i_max", c.i_max},
                 {"ols_sentiments", c.ols_sentiments},
                 {"var_series", c.var_series},
                 {"var_ma_period", c.var_ma_period},
                 {"var_lag", c.var_lag},
                 {"max_lag", c.max_lag},
                 {"irf_horizons", c.irf_horizons},
                 {"cholesky_order", c.cholesky_order},
                 {"irf_bootstrap_draws", c.irf_bootstrap_draws},
                 {"irf_band_level", c.irf_band_level}};
    return j;
}

std::vector<std::string> validate(const PipelineConfig& cfg, std::span<const Stage> stages) {
    std::vector<std::string> errors;
    auto runs = [&](Stage s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
    auto need_file = [&](const char* key, const std::string& path, bool required) {
        if (path.empty()) {
            if (required) errors.push_back(fmt::format("paths.{}: required", key));
            return;
        }
        if (!fs::is_regular_file(path)) errors.push_back(fmt::format("paths.{}: file does not exist: {}", key, path));
    };
    need_file("corpus", cfg.paths.corpus, runs(Stage::Ingest));
    need_file("lexicon", cfg.paths.lexicon, runs(Stage::Expand));
    need_file("stopwords", cfg.paths.stopwords, false);
    need_file("cleaning_rules", cfg.paths.cleaning_rules, false);
    need_file("market", cfg.paths.market, runs(Stage::Prep));
    need_file("var_input", cfg.paths.var_input, false);
    if (cfg.paths.output_dir.empty()) errors.emplace_back("paths.output_dir: required");

    if (!cfg.corpus.date_from.empty() && !parse_date(cfg.corpus.date_from))
        errors.emplace_back("corpus.date_from: expected YYYY-MM-DD");
    if (!cfg.corpus.date_to.empty() && !parse_date(cfg.corpus.date_to))
        errors.emplace_back("corpus.date_to: expected YYYY-MM-DD");

    try {
        cfg.embedding.validate();
    } catch (const ConfigError& e) {
        errors.emplace_back(e.what());
    }

    const auto& n_values = cfg.expansion.n_values;
    if (n_values.empty()) errors.emplace_back("expansion.n_values: at least one value required");
    if (std::set<std::size_t>(n_values.begin(), n_values.end()).size() != n_values.size())
        errors.emplace_back("expansion.n_values: duplicate values");
    if (std::any_of(n_values.begin(), n_values.end(), [](std::size_t n) { return n > 0; }) &&
        cfg.expansion.seed_word.empty())
        errors.emplace_back("expansion.seed_word: required when any n > 0");
    auto has_n = [&](std::size_t n) { return std::find(n_values.begin(), n_values.end(), n) != n_values.end(); };

    if (!(cfg.tsprep.lambda >= 0.0)) errors.emplace_back("tsprep.lambda: must be >= 0");
    if (cfg.tsprep.market_lambda && !(*cfg.tsprep.market_lambda >= 0.0))
        errors.emplace_back("tsprep.market_lambda: must be >= 0");
    if (cfg.tsprep.ma_periods.empty()) errors.emplace_back("tsprep.ma_periods: at least one period required");
    for (int p : cfg.tsprep.ma_periods)
        if (p < 1) errors.push_back(fmt::format("tsprep.ma_periods: period {} must be >= 1", p));
    if (cfg.tsprep.market_ma_period < 1) errors.emplace_back("tsprep.market_ma_period: must be >= 1");
    if (cfg.tsprep.adf_max_lags < 0) errors.emplace_back("tsprep.adf_max_lags: must be >= 0");
    {
        std::set<std::string> seen;
        for (const auto& s : cfg.tsprep.order) {
            try {
                parse_prep_step(s);
            } catch (const ConfigError& e) {
                errors.push_back(fmt::format("tsprep.order: {}", e.what()));
            }
            if (!seen.insert(s).second) errors.push_back(fmt::format("tsprep.order: step '{}' repeated", s));
        }
    }

    const auto& c = cfg.econ;
    if (c.market_name.empty()) errors.emplace_back("econ.market_name: required");
    if (parse_sentiment_name(c.market_name)) errors.emplace_back("econ.market_name: must not look like SENT<n>");
    if (c.i_max < 0) errors.emplace_back("econ.i_max: must be >= 0");
    for (auto n : c.ols_sentiments)
        if (!has_n(n)) errors.push_back(fmt::format("econ.ols_sentiments: {} is not in expansion.n_values", n));
    if (c.var_ma_period < 1) errors.emplace_back("econ.var_ma_period: must be >= 1");
    if (c.var_lag < 1) errors.emplace_back("econ.var_lag: must be >= 1");
    if (c.max_lag < 0) errors.emplace_back("econ.max_lag: must be >= 0");
    if (c.irf_horizons < 0) errors.emplace_back("econ.irf_horizons: must be >= 0");
    if (c.irf_bootstrap_draws < 0) errors.emplace_back("econ.irf_bootstrap_draws: must be >= 0");
    if (!(c.irf_band_level > 0.0 && c.irf_band_level < 1.0)) errors.emplace_back("econ.irf_band_level: must lie in (0, 1)");
    if (cfg.paths.var_input.empty()) {
        if (c.var_series.empty()) errors.emplace_back("econ.var_series: at least one series required");
        for (const auto& s : c.var_series) {
            if (s == c.market_name) continue;
            auto n = parse_sentiment_name(s);
            if (!n) errors.push_back(fmt::format("econ.var_series: '{}' is neither the market nor SENT<n>", s));
            else if (!has_n(*n)) errors.push_back(fmt::format("econ.var_series: {} needs n={} in expansion.n_values", s, *n));
        }
    }
    if (std::set<std::string>(c.var_series.begin(), c.var_series.end()).size() != c.var_series.size())
        errors.emplace_back("econ.var_series: duplicate names");
    if (!c.cholesky_order.empty()) {
        auto a = c.cholesky_order, b = c.var_series;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) errors.emplace_back("econ.cholesky_order: must be a permutation of econ.var_series");
    }
    return errors;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

std::string config_hash(const PipelineConfig& config) {
    auto copy = config;
    copy.paths.output_dir.clear();
    return sha256_hex(to_json(copy).dump());
}

fs::path run_directory(const PipelineConfig& config) {
    return fs::path(config.paths.output_dir) / ("run-" + config_hash(config).substr(0, 16));
}

RunOutcome run(std::span<const Stage> stages, const PipelineConfig& config, std::ostream& log) {
    RunOutcome outcome;
    const auto problems = validate(config, stages);
    if (!problems.empty()) {
        outcome.exit_code = 2;
        for (const auto& p : problems) {
            log << "config error: " << p << '\n';
            outcome.message += p + "\n";
        }
        return outcome;
    }
    outcome.run_dir = run_directory(config);
    fs::create_directories(outcome.run_dir);
    log << "run directory: " << outcome.run_dir.string() << '\n';

    for (auto stage : stages) {
        StageContext ctx{config, outcome.run_dir, outcome.run_dir / ".staging" / stage_dir(stage), log, {}};
        fs::remove_all(ctx.staging);
        fs::create_directories(ctx.staging);
        try {
            run_stage(stage, ctx);
        } catch (const std::exception& e) {
            const auto quarantine = outcome.run_dir / "quarantine" / stage_dir(stage);
            fs::remove_all(quarantine);
            fs::create_directories(quarantine.parent_path());
            fs::rename(ctx.staging, quarantine);
            write_text(quarantine / "error.txt", std::string(e.what()) + "\n");
            outcome.exit_code = 3;
            outcome.failed_stage = std::string(stage_name(stage));
            outcome.message = e.what();
            log << fmt::format("stage '{}' failed: {}\n", stage_name(stage), e.what());
            return outcome;
        }
        const auto final_dir = outcome.run_dir / stage_dir(stage);
        fs::remove_all(final_dir);
        fs::rename(ctx.staging, final_dir);
        fs::remove_all(outcome.run_dir / "quarantine" / stage_dir(stage));
        update_manifest(outcome.run_dir, config, stage, ctx.inputs);
    }
    fs::remove_all(outcome.run_dir / ".staging");
    return outcome;
}

}  // namespace newsent::pipeline
