#include "qsug/engine.hpp"

#include <algorithm>
#include <unordered_map>

#include "qsug/error.hpp"

namespace qsug {

namespace {

std::uint64_t total_clicks(const std::map<std::string, std::uint64_t>& totals,
                           const std::string& key) {
    auto it = totals.find(key);
    return it == totals.end() ? 0 : it->second;
}

void sort_items(std::vector<SuggestionItem>& items) {
    std::sort(items.begin(), items.end(), [](const SuggestionItem& a, const SuggestionItem& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.query_key < b.query_key;
    });
}

// Similarity-weighted aggregation over the bridge queries, visiting them in
// rank order so the floating-point sums are reproducible.
std::vector<SuggestionItem> bridge_candidates(const ClickGraph& graph,
                                              const std::vector<Neighbor>& similar,
                                              const std::string& exclude_key, std::size_t k) {
    std::unordered_map<std::string, double> scores;
    std::vector<std::string> order; // first-reached order, for stable accumulation
    for (const Neighbor& s : similar) {
        for (const Candidate& c : graph.connected_queries(s.query_key)) {
            if (c.query_key == exclude_key) continue;
            auto [it, inserted] = scores.try_emplace(c.query_key, 0.0);
            if (inserted) order.push_back(c.query_key);
            it->second += s.similarity * static_cast<double>(c.score);
        }
    }
    std::vector<SuggestionItem> items;
    items.reserve(order.size());
    for (const auto& key : order) items.push_back(SuggestionItem{key, scores.at(key)});
    sort_items(items);
    if (items.size() > k) items.resize(k);
    return items;
}

} // namespace

QueryClass classify(const std::vector<std::string>& tokens, const ClickGraph& graph,
                    const std::map<std::string, std::uint64_t>& totals, LongTailRule rule) {
    if (tokens.empty()) throw Error::data("query normalizes to no tokens, cannot classify");
    std::string key = canonical_key(tokens);
    QueryClass qc;
    qc.kind = graph.has_query(key) ? QueryKind::click_existing : QueryKind::click_absent;
    qc.long_tail = tokens.size() > rule.min_words_exclusive &&
                   total_clicks(totals, key) < rule.max_clicks_exclusive;
    return qc;
}

SuggestionList suggest_existing(const ClickGraph& graph,
                                const std::map<std::string, std::uint64_t>& totals,
                                std::string_view query_key, std::size_t k) {
    std::string key(query_key);
    if (!graph.has_query(key)) {
        throw Error::data("query is not a graph vertex, use the click-absent path: \"" + key +
                          "\"");
    }
    SuggestionList list;
    list.source_query = key;
    list.query_class = classify(split_key(key), graph, totals);
    list.route = SuggestionRoute::graph_direct;
    for (const Candidate& c : top_k(graph.connected_queries(key), k)) {
        list.items.push_back(SuggestionItem{c.query_key, static_cast<double>(c.score)});
    }
    return list;
}

SuggestionList suggest_absent(const ClickGraph& graph, const EmbeddingModel& model,
                              const CentroidIndex& index,
                              const std::vector<std::string>& tokens, std::size_t m,
                              std::size_t k) {
    if (tokens.empty()) throw Error::data("query normalizes to no tokens, cannot suggest");
    std::string key = canonical_key(tokens);
    if (graph.has_query(key)) {
        throw Error::data("query is a graph vertex, use the click-existing path: \"" + key +
                          "\"");
    }

    SuggestionList list;
    list.source_query = key;
    list.query_class.kind = QueryKind::click_absent;
    list.query_class.long_tail = tokens.size() > LongTailRule{}.min_words_exclusive;
    list.route = SuggestionRoute::embedding_bridge;

    QueryCentroid probe;
    try {
        probe = query_centroid(model, tokens, key);
    } catch (const Error&) {
        list.coverage_warning = true;
        return list;
    }

    list.similar = nearest_graph_queries(index, probe, m);
    list.items = bridge_candidates(graph, list.similar, key, k);
    return list;
}

SuggestionList suggest(const Engine& engine, std::string_view query_text, std::size_t m,
                       std::size_t k) {
    auto norm = normalize(query_text, engine.rules);
    QueryClass qc = classify(norm.tokens, engine.graph, engine.totals);

    if (qc.kind == QueryKind::click_absent) {
        return suggest_absent(engine.graph, engine.model, engine.index, norm.tokens, m, k);
    }

    std::string key = canonical_key(norm.tokens);
    SuggestionList list = suggest_existing(engine.graph, engine.totals, key, k);
    if (engine.enrich_long_tail && qc.long_tail) {
        // Extension beyond the default pipeline: append embedding-bridge
        // candidates after the graph items. Scores are not comparable across
        // the two routes, so the bridge items keep their own scale.
        try {
            QueryCentroid probe = query_centroid(engine.model, norm.tokens, key);
            list.similar = nearest_graph_queries(engine.index, probe, m);
            auto extra = bridge_candidates(engine.graph, list.similar, key, k);
            for (auto& item : extra) {
                bool present =
                    std::any_of(list.items.begin(), list.items.end(),
                                [&](const SuggestionItem& i) { return i.query_key == item.query_key; });
                if (!present) list.items.push_back(std::move(item));
            }
        } catch (const Error&) {
            list.coverage_warning = true;
        }
    }
    return list;
}

SuggestionList suggest(const Engine& engine, std::string_view query_text) {
    return suggest(engine, query_text, static_cast<std::size_t>(engine.default_m),
                   static_cast<std::size_t>(engine.default_k));
}

} // namespace qsug
