#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qsug/cbow.hpp"
#include "qsug/log.hpp"

namespace qsug {

// Command implementations behind the CLI. They write their reports to the
// given streams and signal failure through Error; run_cli_command maps that
// to the process exit code (data -> 2, io -> 3).

struct IngestOptions {
    std::string log_path;
    std::string pairs_path;
    LogFormat format;
    MalformedPolicy policy = MalformedPolicy::skip;
    std::vector<std::string> stopword_files;
    std::string segmenter = "unigram";
};

void cmd_ingest(const IngestOptions& opts, std::ostream& out, std::ostream& err);

struct BuildOptions {
    std::string pairs_path;
    std::string artifact_dir;
    CbowConfig cbow;
    int m = 5;
    int k = 10;
    std::vector<std::string> stopword_files;
    std::string segmenter = "unigram";
};

void cmd_build(const BuildOptions& opts, std::ostream& out, std::ostream& err);

struct SuggestOptions {
    std::string artifact_dir;
    std::string query;
    int k = 0; // 0 -> artifact default
    int m = 0;
    std::string format = "text"; // text | records
    bool enrich_long_tail = false;
};

void cmd_suggest(const SuggestOptions& opts, std::ostream& out, std::ostream& err);

struct EvalSampleOptions {
    std::string artifact_dir;
    std::string out_dir;
    std::size_t n_per_class = 100;
    std::uint64_t seed = 1;
};

void cmd_eval_sample(const EvalSampleOptions& opts, std::ostream& out, std::ostream& err);

struct EvalScoreOptions {
    std::string annotations_path;
    std::string query_class = "existing"; // existing | absent
};

void cmd_eval_score(const EvalScoreOptions& opts, std::ostream& out, std::ostream& err);

NormalizeRules rules_from_options(const std::vector<std::string>& stopword_files,
                                  const std::string& segmenter);

int run_cli_command(const std::function<void()>& fn, std::ostream& err);

} // namespace qsug
