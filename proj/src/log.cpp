#include "qsug/log.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "qsug/error.hpp"

namespace qsug {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

} // namespace

LogParser::LogParser(std::istream& in, LogFormat format) : in_(in), format_(format) {}

std::optional<LogParser::Item> LogParser::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        Item item;
        item.line_no = line_no_;

        auto fields = split_fields(line, format_.delimiter);
        int needed = std::max({format_.query_col, format_.title_col, format_.clicked_col}) + 1;
        if (static_cast<int>(fields.size()) < needed) {
            item.error = "expected at least " + std::to_string(needed) + " fields, got " +
                         std::to_string(fields.size());
            return item;
        }
        std::string query = trim(fields[format_.query_col]);
        std::string title = trim(fields[format_.title_col]);
        std::string clicked = trim(fields[format_.clicked_col]);
        if (query.empty()) {
            item.error = "empty query field";
            return item;
        }
        if (title.empty()) {
            item.error = "empty title field";
            return item;
        }
        if (clicked != "0" && clicked != "1") {
            item.error = "clicked flag must be 0 or 1, got \"" + clicked + "\"";
            return item;
        }
        item.ok = true;
        item.record = RawLogRecord{std::move(query), std::move(title), clicked == "1"};
        return item;
    }
    return std::nullopt;
}

namespace {

struct PairAccumulator {
    // composite key "query\tdoc" -> (clicks, seen)
    std::unordered_map<std::string, std::uint64_t> counts;
    AggregateResult result;
    std::unordered_map<std::string, std::vector<std::string>> key_cache;

    void add(const RawLogRecord& rec, const NormalizeRules& rules) {
        ++result.total_records;
        if (rec.clicked) ++result.clicked_records;
        std::string qkey = canonical_key(normalize(rec.query_text, rules).tokens);
        std::string dkey = canonical_key(normalize(rec.doc_title, rules).tokens);
        if (qkey.empty() || dkey.empty()) {
            ++result.dropped_records;
            if (rec.clicked) ++result.dropped_clicked;
            return;
        }
        std::string composite = qkey + '\t' + dkey;
        auto [it, inserted] = counts.try_emplace(std::move(composite), 0);
        if (rec.clicked) it->second += 1;
    }

    AggregateResult finish() {
        result.pairs.reserve(counts.size());
        for (auto& [composite, clicks] : counts) {
            auto tab = composite.find('\t');
            result.pairs.push_back(
                QueryDocPair{composite.substr(0, tab), composite.substr(tab + 1), clicks});
        }
        std::sort(result.pairs.begin(), result.pairs.end(),
                  [](const QueryDocPair& a, const QueryDocPair& b) {
                      if (a.query_key != b.query_key) return a.query_key < b.query_key;
                      return a.doc_key < b.doc_key;
                  });
        return std::move(result);
    }
};

} // namespace

AggregateResult aggregate_pairs(LogParser& parser, const NormalizeRules& rules,
                                MalformedPolicy policy) {
    PairAccumulator acc;
    while (auto item = parser.next()) {
        if (!item->ok) {
            if (policy == MalformedPolicy::abort) {
                throw Error::data("malformed log line " + std::to_string(item->line_no) + ": " +
                                  item->error);
            }
            ++acc.result.malformed_lines;
            continue;
        }
        acc.add(item->record, rules);
    }
    return acc.finish();
}

AggregateResult aggregate_pairs(const std::vector<RawLogRecord>& records,
                                const NormalizeRules& rules) {
    PairAccumulator acc;
    for (const auto& rec : records) acc.add(rec, rules);
    return acc.finish();
}

std::vector<std::vector<std::string>> training_corpus(const std::vector<QueryDocPair>& pairs) {
    std::vector<std::string> queries, docs;
    queries.reserve(pairs.size());
    docs.reserve(pairs.size());
    for (const auto& p : pairs) {
        queries.push_back(p.query_key);
        docs.push_back(p.doc_key);
    }
    auto dedupe = [](std::vector<std::string>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    dedupe(queries);
    dedupe(docs);

    std::vector<std::vector<std::string>> corpus;
    corpus.reserve(queries.size() + docs.size());
    for (const auto& key : queries) corpus.push_back(split_key(key));
    for (const auto& key : docs) corpus.push_back(split_key(key));
    return corpus;
}

std::map<std::string, std::uint64_t> click_totals(const std::vector<QueryDocPair>& pairs) {
    std::map<std::string, std::uint64_t> totals;
    for (const auto& p : pairs) totals[p.query_key] += p.click_count;
    return totals;
}

std::size_t key_token_count(std::string_view key) {
    if (key.empty()) return 0;
    return static_cast<std::size_t>(std::count(key.begin(), key.end(), ' ')) + 1;
}

std::vector<std::string> split_key(std::string_view key) {
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start <= key.size() && !key.empty()) {
        std::size_t pos = key.find(' ', start);
        if (pos == std::string_view::npos) {
            tokens.emplace_back(key.substr(start));
            break;
        }
        tokens.emplace_back(key.substr(start, pos - start));
        start = pos + 1;
    }
    return tokens;
}

DatasetStats compute_stats(const AggregateResult& agg, LongTailRule rule) {
    DatasetStats stats;
    stats.total_records = agg.total_records;
    stats.unique_pairs = agg.pairs.size();
    for (const auto& p : agg.pairs) {
        if (p.click_count > 0) ++stats.clicked_unique_pairs;
    }
    auto totals = click_totals(agg.pairs);
    stats.unique_queries = totals.size();
    for (const auto& [key, clicks] : totals) {
        if (clicks == 0) ++stats.click_absent_queries;
        if (key_token_count(key) > rule.min_words_exclusive && clicks < rule.max_clicks_exclusive) {
            ++stats.long_tail_queries;
        }
    }
    return stats;
}

void write_pairs(std::ostream& out, const std::vector<QueryDocPair>& pairs) {
    for (const auto& p : pairs) {
        out << p.query_key << '\t' << p.doc_key << '\t' << p.click_count << '\n';
    }
}

std::vector<QueryDocPair> read_pairs(std::istream& in) {
    std::vector<QueryDocPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_fields(line, '\t');
        if (fields.size() != 3) {
            throw Error::data("pairs file line " + std::to_string(line_no) +
                              ": expected 3 fields, got " + std::to_string(fields.size()));
        }
        QueryDocPair p;
        p.query_key = fields[0];
        p.doc_key = fields[1];
        try {
            p.click_count = std::stoull(fields[2]);
        } catch (const std::exception&) {
            throw Error::data("pairs file line " + std::to_string(line_no) +
                              ": bad click count \"" + fields[2] + "\"");
        }
        if (p.query_key.empty() || p.doc_key.empty()) {
            throw Error::data("pairs file line " + std::to_string(line_no) + ": empty key");
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

} // namespace qsug
