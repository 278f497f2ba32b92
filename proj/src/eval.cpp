#include "qsug/eval.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <set>

#include "qsug/cbow.hpp"
#include "qsug/error.hpp"

namespace qsug {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

// Seeded partial Fisher-Yates: the first n slots of a copy of `pool`.
std::vector<std::string> sample_without_replacement(std::vector<std::string> pool, std::size_t n,
                                                    std::mt19937_64& rng) {
    n = std::min(n, pool.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = i + std::size_t(uniform_below(rng, std::uint64_t(pool.size() - i)));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    return pool;
}

} // namespace

std::vector<AnnotationRecord> parse_annotations(std::string_view content) {
    std::vector<AnnotationRecord> records;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= content.size()) {
        std::size_t nl = content.find('\n', start);
        std::string_view line = nl == std::string_view::npos
                                    ? content.substr(start)
                                    : content.substr(start, nl - start);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty() && line[0] != '#') {
            std::string where = "annotation line " + std::to_string(line_no);
            auto f = split_tabs(line);
            if (f.size() != 4) {
                throw Error::data(where + ": expected query<TAB>suggestion<TAB>annotator<TAB>score");
            }
            if (f[0].empty() || f[1].empty() || f[2].empty()) {
                throw Error::data(where + ": empty field");
            }
            int score = 0;
            auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), score);
            if (ec != std::errc() || ptr != f[3].data() + f[3].size() || score < 1 || score > 5) {
                throw Error::data(where + ": score must be an integer 1..5, got \"" +
                                  std::string(f[3]) + "\"");
            }
            records.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2]), score});
        }
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return records;
}

std::vector<AnnotationRecord> load_annotation_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::io("cannot open annotation file: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error::io("read failed for " + path);
    return parse_annotations(content);
}

EvalSummary aggregate_annotations(const std::vector<AnnotationRecord>& records, QueryKind kind) {
    if (records.empty()) throw Error::data("no annotation records to aggregate");
    EvalSummary summary;
    summary.kind = kind;
    summary.n_records = records.size();

    std::set<std::string> queries;
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.score < 1 || r.score > 5) {
            throw Error::data("record " + std::to_string(i + 1) + " (query \"" + r.query +
                              "\"): score " + std::to_string(r.score) + " out of range 1..5");
        }
        queries.insert(r.query);
        sum += std::uint64_t(r.score);
    }
    summary.n_queries = queries.size();
    summary.mean_score = double(sum) / double(records.size());
    // floor(mean/5*100) without float rounding: mean/5*100 = 20*sum/n.
    summary.correlation_pct = int((20 * sum) / records.size());
    return summary;
}

EvalSample sample_eval_queries(const Engine& engine, std::size_t n_per_class, std::uint64_t seed) {
    std::vector<std::string> existing_pool;
    std::vector<std::string> absent_pool;
    for (const auto& [key, total] : engine.totals) {
        QueryClass cls = classify(split_key(key), engine.graph, engine.totals);
        (cls.kind == QueryKind::click_existing ? existing_pool : absent_pool).push_back(key);
    }

    EvalSample sample;
    sample.existing_available = existing_pool.size();
    sample.absent_available = absent_pool.size();
    sample.shortfall = existing_pool.size() < n_per_class || absent_pool.size() < n_per_class;

    std::mt19937_64 rng(seed);
    sample.existing = sample_without_replacement(std::move(existing_pool), n_per_class, rng);
    sample.absent = sample_without_replacement(std::move(absent_pool), n_per_class, rng);
    return sample;
}

std::vector<WorksheetQuery> worksheet_from_table(const std::vector<std::string>& queries,
                                                 const SuggestionTable& table, std::size_t top) {
    std::vector<WorksheetQuery> out;
    for (const auto& q : queries) {
        auto it = table.find(q);
        if (it == table.end() || it->second.items.empty()) continue;
        WorksheetQuery wq;
        wq.query = q;
        std::size_t n = std::min(top, it->second.items.size());
        for (std::size_t i = 0; i < n; ++i) wq.suggestions.push_back(it->second.items[i].query_key);
        out.push_back(std::move(wq));
    }
    return out;
}

std::string render_worksheet(const std::vector<WorksheetQuery>& queries,
                             std::uint64_t shuffle_seed) {
    std::string out =
        "# Suggestion annotation sheet\n"
        "# Fill the last two columns of every row: your annotator id, then a\n"
        "# score from 1 to 5 for how closely the suggested query relates to the\n"
        "# original query. 5 means the two are about the same need; 1 means\n"
        "# unrelated. Judge each suggestion against the others listed for the\n"
        "# same query, and feel free to give several of them the same score.\n"
        "# The rows for a query appear in random order, so position carries no\n"
        "# information about the system's ranking. If a query is not in a\n"
        "# language you read, an online translator is fine.\n"
        "#\n"
        "# query\tsuggestion\tannotator_id\tscore\n";
    std::mt19937_64 rng(shuffle_seed);
    for (const auto& wq : queries) {
        std::vector<std::string> shuffled = wq.suggestions;
        for (std::size_t i = shuffled.size(); i > 1; --i) {
            std::size_t j = std::size_t(uniform_below(rng, std::uint64_t(i)));
            std::swap(shuffled[i - 1], shuffled[j]);
        }
        for (const auto& s : shuffled) {
            out += wq.query;
            out += '\t';
            out += s;
            out += "\t\t\n";
        }
    }
    return out;
}

} // namespace qsug
