#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qsug/engine.hpp"
#include "qsug/store.hpp"

namespace qsug {

// Annotation files are UTF-8 TSV: query<TAB>suggestion<TAB>annotator_id<TAB>score,
// one judgment per line, '#' starts a comment. Scores are integers 1..5.

struct AnnotationRecord {
    std::string query;
    std::string suggestion;
    std::string annotator_id;
    int score = 0;
};

std::vector<AnnotationRecord> parse_annotations(std::string_view content);
std::vector<AnnotationRecord> load_annotation_file(const std::string& path);

struct EvalSummary {
    QueryKind kind = QueryKind::click_existing;
    std::size_t n_queries = 0; // distinct query strings
    std::size_t n_records = 0;
    double mean_score = 0;
    int correlation_pct = 0; // floor(mean / 5 * 100), computed in integers
};

// Flat average over every record; the caller passes the records belonging to
// one query class. Empty input or an out-of-range score is an error.
EvalSummary aggregate_annotations(const std::vector<AnnotationRecord>& records, QueryKind kind);

struct EvalSample {
    std::vector<std::string> existing;
    std::vector<std::string> absent;
    std::size_t existing_available = 0;
    std::size_t absent_available = 0;
    bool shortfall = false; // a class had fewer queries than requested
};

// Seeded uniform sample without replacement from each query class of the
// engine's observed queries. A class smaller than n is returned whole.
EvalSample sample_eval_queries(const Engine& engine, std::size_t n_per_class, std::uint64_t seed);

struct WorksheetQuery {
    std::string query;
    std::vector<std::string> suggestions;
};

// Top suggestions per sampled query, pulled from a precomputed table.
// Queries with no table entry or no items are skipped.
std::vector<WorksheetQuery> worksheet_from_table(const std::vector<std::string>& queries,
                                                 const SuggestionTable& table,
                                                 std::size_t top = 5);

// Blank annotation file: instruction header, then one row per (query,
// suggestion) with empty annotator and score columns. Suggestion order is
// shuffled per query so the ranking cannot be read off the sheet; a fixed
// seed gives identical bytes.
std::string render_worksheet(const std::vector<WorksheetQuery>& queries, std::uint64_t shuffle_seed);

} // namespace qsug
