#include <CLI11.hpp>
#include <iostream>

#include "qsug/commands.hpp"
#include "qsug/error.hpp"
#include "qsug/service.hpp"

namespace {

// The parse-time validator below guarantees any port suffix is numeric.
void parse_bind(const std::string& bind, qsug::ServeConfig& cfg) {
    std::size_t colon = bind.rfind(':');
    if (colon == std::string::npos) {
        cfg.bind = bind;
        return;
    }
    cfg.bind = bind.substr(0, colon);
    cfg.port = std::stoi(bind.substr(colon + 1));
}

std::string check_bind(const std::string& s) {
    std::size_t colon = s.rfind(':');
    if (colon == std::string::npos) return {};
    std::string port = s.substr(colon + 1);
    if (port.empty() || port.size() > 5 ||
        port.find_first_not_of("0123456789") != std::string::npos) {
        return "expected host:port";
    }
    return {};
}

void add_stopword_flags(CLI::App* cmd, std::vector<std::string>& files, std::string& segmenter) {
    cmd->add_option("--stopwords", files, "Stop-word file (repeatable, '#' comments)")
        ->envname("QSUG_STOPWORDS");
    cmd->add_option("--segmenter", segmenter, "CJK segmenter name")
        ->default_val("unigram")
        ->envname("QSUG_SEGMENTER");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Query suggestion engine: click-graph mining plus an embedding "
                 "bridge for queries without click history"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    qsug::IngestOptions ingest;
    std::string ingest_policy = "skip";
    CLI::App* cmd_ingest = app.add_subcommand("ingest", "Normalize a click log into pairs.tsv");
    cmd_ingest->add_option("--log", ingest.log_path, "Raw click log (TSV)")
        ->required()
        ->envname("QSUG_LOG");
    cmd_ingest->add_option("--pairs", ingest.pairs_path, "Output pairs file")
        ->required()
        ->envname("QSUG_PAIRS");
    cmd_ingest->add_option("--malformed", ingest_policy, "Malformed-line policy")
        ->check(CLI::IsMember({"skip", "abort"}))
        ->default_val("skip");
    add_stopword_flags(cmd_ingest, ingest.stopword_files, ingest.segmenter);

    qsug::BuildOptions build;
    std::string cbow_config_path;
    CLI::App* cmd_build = app.add_subcommand("build", "Build artifacts from pairs.tsv");
    cmd_build->add_option("--pairs", build.pairs_path, "Pairs file from ingest")
        ->required()
        ->envname("QSUG_PAIRS");
    cmd_build->add_option("--artifacts", build.artifact_dir, "Artifact output directory")
        ->required()
        ->envname("QSUG_ARTIFACTS");
    cmd_build->add_option("--k", build.k, "Suggestions per query")->default_val(10);
    cmd_build->add_option("--m", build.m, "Similar queries per bridge lookup")->default_val(5);
    cmd_build->add_option("--dim", build.cbow.dim, "Embedding dimensions")->default_val(100);
    cmd_build->add_option("--window", build.cbow.window, "Max context radius")->default_val(5);
    cmd_build->add_option("--negatives", build.cbow.negatives, "Negative samples per position")
        ->default_val(5);
    cmd_build->add_option("--epochs", build.cbow.epochs, "Training epochs")->default_val(5);
    cmd_build->add_option("--seed", build.cbow.seed, "Training seed")
        ->default_val(1)
        ->envname("QSUG_SEED");
    cmd_build->add_option("--min-count", build.cbow.min_count, "Minimum token frequency")
        ->default_val(2);
    cmd_build->add_option("--learning-rate", build.cbow.learning_rate, "Initial learning rate")
        ->default_val(0.025);
    cmd_build->add_option("--subsample", build.cbow.subsample,
                          "Frequent-token subsampling threshold (0 disables)")
        ->default_val(0.0);
    cmd_build->add_option("--workers", build.cbow.workers,
                          "Training threads (>1 forfeits bit reproducibility)")
        ->default_val(1);
    cmd_build->add_option("--cbow-config", cbow_config_path,
                          "key=value file overriding training parameters");
    add_stopword_flags(cmd_build, build.stopword_files, build.segmenter);

    qsug::SuggestOptions sug;
    CLI::App* cmd_suggest = app.add_subcommand("suggest", "Query a built artifact directory");
    cmd_suggest->add_option("--artifacts", sug.artifact_dir, "Artifact directory")
        ->required()
        ->envname("QSUG_ARTIFACTS");
    cmd_suggest->add_option("query", sug.query, "Query text")->required();
    cmd_suggest->add_option("--k", sug.k, "Suggestions to return (0 = artifact default)")
        ->default_val(0);
    cmd_suggest->add_option("--m", sug.m, "Similar queries to bridge over (0 = artifact default)")
        ->default_val(0);
    cmd_suggest->add_option("--format", sug.format, "Output format")
        ->check(CLI::IsMember({"text", "records"}))
        ->default_val("text")
        ->envname("QSUG_FORMAT");
    cmd_suggest->add_flag("--enrich-long-tail", sug.enrich_long_tail,
                          "Also bridge long-tail queries that have click history");

    qsug::ServeConfig serve;
    std::string bind = "127.0.0.1:8080";
    CLI::App* cmd_serve = app.add_subcommand("serve", "Serve suggestions over HTTP");
    cmd_serve->add_option("--artifacts", serve.artifact_dir, "Artifact directory")
        ->required()
        ->envname("QSUG_ARTIFACTS");
    cmd_serve->add_option("--bind", bind, "host:port to listen on")
        ->default_val("127.0.0.1:8080")
        ->check(check_bind)
        ->envname("QSUG_BIND");
    cmd_serve->add_option("--k", serve.default_k, "Default suggestions per request")
        ->default_val(0);
    cmd_serve->add_option("--m", serve.default_m, "Default similar queries per request")
        ->default_val(0);
    cmd_serve->add_flag("--log-requests", serve.log_requests, "Log requests to stderr");

    qsug::EvalSampleOptions esample;
    CLI::App* cmd_esample =
        app.add_subcommand("eval-sample", "Sample queries and write annotation worksheets");
    cmd_esample->add_option("--artifacts", esample.artifact_dir, "Artifact directory")
        ->required()
        ->envname("QSUG_ARTIFACTS");
    cmd_esample->add_option("--out", esample.out_dir, "Worksheet output directory")->required();
    cmd_esample->add_option("--n", esample.n_per_class, "Queries per class")->default_val(100);
    cmd_esample->add_option("--seed", esample.seed, "Sampling seed")
        ->default_val(1)
        ->envname("QSUG_SEED");

    qsug::EvalScoreOptions escore;
    CLI::App* cmd_escore =
        app.add_subcommand("eval-score", "Aggregate a filled annotation worksheet");
    cmd_escore->add_option("--annotations", escore.annotations_path, "Filled annotation file")
        ->required();
    cmd_escore->add_option("--class", escore.query_class, "Query class the file covers")
        ->check(CLI::IsMember({"existing", "absent"}))
        ->default_val("existing");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1; // usage errors -> 1, --help -> 0
    }

    ingest.policy = ingest_policy == "abort" ? qsug::MalformedPolicy::abort
                                             : qsug::MalformedPolicy::skip;

    return qsug::run_cli_command(
        [&] {
            if (cmd_ingest->parsed()) {
                qsug::cmd_ingest(ingest, std::cout, std::cerr);
            } else if (cmd_build->parsed()) {
                if (!cbow_config_path.empty()) {
                    qsug::apply_cbow_config_file(build.cbow, cbow_config_path);
                }
                qsug::cmd_build(build, std::cout, std::cerr);
            } else if (cmd_suggest->parsed()) {
                qsug::cmd_suggest(sug, std::cout, std::cerr);
            } else if (cmd_serve->parsed()) {
                parse_bind(bind, serve);
                qsug::run_server(serve);
            } else if (cmd_esample->parsed()) {
                qsug::cmd_eval_sample(esample, std::cout, std::cerr);
            } else if (cmd_escore->parsed()) {
                qsug::cmd_eval_score(escore, std::cout, std::cerr);
            }
        },
        std::cerr);
}
