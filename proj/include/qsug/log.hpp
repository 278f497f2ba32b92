#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsug/text.hpp"

namespace qsug {

struct RawLogRecord {
    std::string query_text;
    std::string doc_title;
    bool clicked = false;
};

// Column layout of a delimiter-separated click log.
struct LogFormat {
    char delimiter = '\t';
    int query_col = 0;
    int title_col = 1;
    int clicked_col = 2;
};

enum class MalformedPolicy { skip, abort };

// Streaming line parser. Malformed lines come back as items with ok=false
// so the caller picks skip-vs-abort.
class LogParser {
public:
    struct Item {
        std::size_t line_no = 0;
        bool ok = false;
        RawLogRecord record;
        std::string error;
    };

    explicit LogParser(std::istream& in, LogFormat format = {});

    std::optional<Item> next();

private:
    std::istream& in_;
    LogFormat format_;
    std::size_t line_no_ = 0;
};

struct QueryDocPair {
    std::string query_key;
    std::string doc_key;
    std::uint64_t click_count = 0;
};

struct AggregateResult {
    std::vector<QueryDocPair> pairs; // sorted by (query_key, doc_key)
    std::uint64_t total_records = 0;
    std::uint64_t clicked_records = 0;
    std::uint64_t dropped_records = 0; // query or title normalized to nothing
    std::uint64_t dropped_clicked = 0;
    std::uint64_t malformed_lines = 0;
};

// Deduplicates (query, title) pairs under canonical token keys, accumulating
// click counts. Non-clicked pairs are kept with count 0.
AggregateResult aggregate_pairs(LogParser& parser, const NormalizeRules& rules,
                                MalformedPolicy policy = MalformedPolicy::skip);
AggregateResult aggregate_pairs(const std::vector<RawLogRecord>& records,
                                const NormalizeRules& rules);

// Token sequences for embedding training: every unique query, then every
// unique document title, each exactly once, in sorted key order.
std::vector<std::vector<std::string>> training_corpus(const std::vector<QueryDocPair>& pairs);

// Total clicks per query key over all of its pairs (zero entries included).
std::map<std::string, std::uint64_t> click_totals(const std::vector<QueryDocPair>& pairs);

struct LongTailRule {
    std::size_t min_words_exclusive = 3;  // long tail needs more words than this
    std::uint64_t max_clicks_exclusive = 5; // and fewer clicks than this
};

struct DatasetStats {
    std::uint64_t total_records = 0;
    std::uint64_t unique_pairs = 0;
    std::uint64_t clicked_unique_pairs = 0;
    std::uint64_t unique_queries = 0;
    std::uint64_t long_tail_queries = 0;
    std::uint64_t click_absent_queries = 0;
};

DatasetStats compute_stats(const AggregateResult& agg, LongTailRule rule = {});

std::size_t key_token_count(std::string_view key);
std::vector<std::string> split_key(std::string_view key);

// pairs.tsv: query_key<TAB>doc_key<TAB>click_count, one pair per line.
void write_pairs(std::ostream& out, const std::vector<QueryDocPair>& pairs);
std::vector<QueryDocPair> read_pairs(std::istream& in);

} // namespace qsug
