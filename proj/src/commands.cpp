#include "qsug/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "qsug/centroid.hpp"
#include "qsug/error.hpp"
#include "qsug/eval.hpp"
#include "qsug/store.hpp"

namespace fs = std::filesystem;

namespace qsug {

namespace {

std::string slurp(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::io(std::string("cannot open ") + what + ": " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error::io("read failed for " + path);
    return content;
}

void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error::io("cannot write " + path);
    out.write(content.data(), std::streamsize(content.size()));
    out.flush();
    if (!out) throw Error::io("write failed for " + path);
}

// Prefixes errors with the pipeline stage they came from.
template <class F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(name) + ": " + e.what());
    }
}

void print_stat(std::ostream& out, const char* label, const char* key, std::uint64_t value) {
    out << "  " << std::left << std::setw(22) << label << value << "\n";
    out << "stat\t" << key << '\t' << value << '\n';
}

void print_list_text(std::ostream& out, const SuggestionList& list) {
    out << "query: " << list.source_query << "\n";
    out << "class: " << kind_name(list.query_class.kind)
        << (list.query_class.long_tail ? " (long tail)" : "") << "\n";
    out << "via:   " << route_name(list.route) << "\n";
    if (!list.similar.empty()) {
        out << "similar queries:\n";
        for (std::size_t i = 0; i < list.similar.size(); ++i) {
            out << "  " << std::right << std::setw(2) << i + 1 << "  " << std::left
                << std::setw(40) << list.similar[i].query_key
                << format_score(list.similar[i].similarity) << "\n";
        }
    }
    if (list.items.empty()) {
        out << "no suggestions (" << empty_reason(list) << ")\n";
        return;
    }
    out << "suggestions:\n";
    for (std::size_t i = 0; i < list.items.size(); ++i) {
        out << "  " << std::right << std::setw(2) << i + 1 << "  " << std::left << std::setw(40)
            << list.items[i].query_key << format_score(list.items[i].score) << "\n";
    }
}

} // namespace

NormalizeRules rules_from_options(const std::vector<std::string>& stopword_files,
                                  const std::string& segmenter) {
    NormalizeRules rules;
    for (const auto& path : stopword_files) {
        auto words = load_stopword_file(path);
        rules.stopwords.insert(words.begin(), words.end());
    }
    rules.segmenter = make_segmenter(segmenter);
    return rules;
}

void cmd_ingest(const IngestOptions& opts, std::ostream& out, std::ostream& err) {
    NormalizeRules rules = rules_from_options(opts.stopword_files, opts.segmenter);

    std::ifstream in(opts.log_path, std::ios::binary);
    if (!in) throw Error::io("cannot open log file: " + opts.log_path);
    LogParser parser(in, opts.format);
    AggregateResult agg = aggregate_pairs(parser, rules, opts.policy);
    if (in.bad()) throw Error::io("read failed for " + opts.log_path);

    {
        std::ofstream pairs_out(opts.pairs_path, std::ios::binary | std::ios::trunc);
        if (!pairs_out) throw Error::io("cannot write " + opts.pairs_path);
        write_pairs(pairs_out, agg.pairs);
        pairs_out.flush();
        if (!pairs_out) throw Error::io("write failed for " + opts.pairs_path);
    }

    DatasetStats stats = compute_stats(agg);
    out << "ingested " << opts.log_path << "\n";
    print_stat(out, "records", "total_records", stats.total_records);
    print_stat(out, "clicked records", "clicked_records", agg.clicked_records);
    print_stat(out, "malformed skipped", "malformed_lines", agg.malformed_lines);
    print_stat(out, "dropped empty", "dropped_records", agg.dropped_records);
    print_stat(out, "unique pairs", "unique_pairs", stats.unique_pairs);
    print_stat(out, "clicked pairs", "clicked_unique_pairs", stats.clicked_unique_pairs);
    print_stat(out, "unique queries", "unique_queries", stats.unique_queries);
    print_stat(out, "long-tail queries", "long_tail_queries", stats.long_tail_queries);
    print_stat(out, "click-absent queries", "click_absent_queries", stats.click_absent_queries);
    out << "wrote " << opts.pairs_path << "\n";
    if (agg.malformed_lines > 0 && opts.policy == MalformedPolicy::skip) {
        err << "warning: skipped " << agg.malformed_lines << " malformed lines\n";
    }
}

void cmd_build(const BuildOptions& opts, std::ostream& out, std::ostream& err) {
    std::string pairs_bytes = slurp(opts.pairs_path, "pairs file");
    std::istringstream pairs_in(pairs_bytes);
    std::vector<QueryDocPair> pairs = stage("read_pairs", [&] { return read_pairs(pairs_in); });
    if (pairs.empty()) throw Error::data("read_pairs: " + opts.pairs_path + " holds no pairs");

    Engine engine;
    engine.rules = rules_from_options(opts.stopword_files, opts.segmenter);
    engine.default_m = opts.m;
    engine.default_k = opts.k;
    engine.totals = click_totals(pairs);
    engine.graph = stage("build_graph", [&] { return ClickGraph::build(pairs); });

    TrainStats train_stats;
    engine.model = stage("train_cbow", [&] {
        return train_cbow<float>(training_corpus(pairs), opts.cbow, &train_stats);
    });
    engine.index =
        stage("centroid_index", [&] { return build_centroid_index(engine.model, engine.graph); });

    std::vector<std::string> keys;
    keys.reserve(engine.totals.size());
    for (const auto& [key, total] : engine.totals) keys.push_back(key);
    SuggestionTable table = stage("precompute_suggestions", [&] {
        return precompute_suggestions(engine, keys, std::size_t(opts.m), std::size_t(opts.k));
    });

    ArtifactManifest manifest = stage("save_engine", [&] {
        return save_engine(engine, table, opts.artifact_dir, digest_hex(pairs_bytes));
    });

    out << "built " << opts.artifact_dir << "\n";
    print_stat(out, "graph queries", "graph_queries", engine.graph.query_count());
    print_stat(out, "graph documents", "graph_docs", engine.graph.doc_count());
    print_stat(out, "vocabulary", "vocab_size", engine.model.vocab.size());
    print_stat(out, "centroids", "centroids", engine.index.entries.size());
    print_stat(out, "table entries", "table_entries", table.size());
    if (!train_stats.epoch_mean_loss.empty()) {
        out << "  " << std::left << std::setw(22) << "final epoch loss"
            << format_score(train_stats.epoch_mean_loss.back()) << "\n";
    }
    if (engine.index.skipped_no_coverage > 0) {
        err << "warning: " << engine.index.skipped_no_coverage
            << " graph queries had no in-vocabulary tokens\n";
    }
}

void cmd_suggest(const SuggestOptions& opts, std::ostream& out, std::ostream&) {
    if (opts.format != "text" && opts.format != "records") {
        throw Error::data("unknown output format \"" + opts.format + "\" (use text or records)");
    }
    LoadedEngine loaded = load_engine(opts.artifact_dir);
    loaded.engine.enrich_long_tail = opts.enrich_long_tail;
    std::size_t k = opts.k > 0 ? std::size_t(opts.k) : std::size_t(loaded.engine.default_k);
    std::size_t m = opts.m > 0 ? std::size_t(opts.m) : std::size_t(loaded.engine.default_m);
    SuggestionList list = suggest(loaded.engine, opts.query, m, k);
    if (opts.format == "records") {
        out << render_records(list);
    } else {
        print_list_text(out, list);
    }
}

void cmd_eval_sample(const EvalSampleOptions& opts, std::ostream& out, std::ostream& err) {
    LoadedEngine loaded = load_engine(opts.artifact_dir);
    EvalSample sample = sample_eval_queries(loaded.engine, opts.n_per_class, opts.seed);
    if (sample.shortfall) {
        err << "warning: requested " << opts.n_per_class << " per class but only "
            << sample.existing_available << " existing / " << sample.absent_available
            << " absent queries exist\n";
    }

    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec || !fs::is_directory(opts.out_dir)) {
        throw Error::io("cannot create output directory " + opts.out_dir);
    }

    auto existing = worksheet_from_table(sample.existing, loaded.table);
    auto absent = worksheet_from_table(sample.absent, loaded.table);
    std::string existing_path = (fs::path(opts.out_dir) / "worksheet_existing.tsv").string();
    std::string absent_path = (fs::path(opts.out_dir) / "worksheet_absent.tsv").string();
    write_text_file(existing_path, render_worksheet(existing, opts.seed));
    write_text_file(absent_path, render_worksheet(absent, opts.seed + 1));

    out << "sampled " << sample.existing.size() << " existing, " << sample.absent.size()
        << " absent queries (seed " << opts.seed << ")\n";
    out << "wrote " << existing_path << " (" << existing.size() << " queries with suggestions)\n";
    out << "wrote " << absent_path << " (" << absent.size() << " queries with suggestions)\n";
}

void cmd_eval_score(const EvalScoreOptions& opts, std::ostream& out, std::ostream&) {
    QueryKind kind;
    if (opts.query_class == "existing") {
        kind = QueryKind::click_existing;
    } else if (opts.query_class == "absent") {
        kind = QueryKind::click_absent;
    } else {
        throw Error::data("unknown query class \"" + opts.query_class +
                          "\" (use existing or absent)");
    }
    auto records = load_annotation_file(opts.annotations_path);
    EvalSummary summary = aggregate_annotations(records, kind);
    out << "class:       " << kind_name(summary.kind) << "\n";
    out << "queries:     " << summary.n_queries << "\n";
    out << "records:     " << summary.n_records << "\n";
    out << "mean score:  " << format_score(summary.mean_score) << "\n";
    out << "correlation: " << summary.correlation_pct << "%\n";
    out << "eval\t" << kind_name(summary.kind) << '\t' << summary.n_queries << '\t'
        << summary.n_records << '\t' << format_score(summary.mean_score) << '\t'
        << summary.correlation_pct << '\n';
}

int run_cli_command(const std::function<void()>& fn, std::ostream& err) {
    try {
        fn();
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.kind() == Error::Kind::data ? 2 : 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace qsug
