#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qsug/centroid.hpp"
#include "qsug/cbow.hpp"
#include "qsug/graph.hpp"
#include "qsug/log.hpp"
#include "qsug/text.hpp"

namespace qsug {

enum class QueryKind { click_existing, click_absent };

struct QueryClass {
    QueryKind kind = QueryKind::click_absent;
    bool long_tail = false;
};

enum class SuggestionRoute { graph_direct, embedding_bridge };

struct SuggestionItem {
    std::string query_key;
    double score = 0;
};

struct SuggestionList {
    std::string source_query; // canonical key
    QueryClass query_class;
    SuggestionRoute route = SuggestionRoute::graph_direct;
    std::vector<SuggestionItem> items;
    std::vector<Neighbor> similar; // bridge queries used on the embedding path
    bool coverage_warning = false; // every probe token was out of vocabulary
};

// Everything a live suggester needs; immutable once assembled.
struct Engine {
    NormalizeRules rules;
    ClickGraph graph;
    EmbeddingModel model;
    CentroidIndex index;
    std::map<std::string, std::uint64_t> totals; // clicks per observed query, zeros included
    int default_m = 5;
    int default_k = 10;
    bool enrich_long_tail = false;
};

QueryClass classify(const std::vector<std::string>& tokens, const ClickGraph& graph,
                    const std::map<std::string, std::uint64_t>& totals, LongTailRule rule = {});

// Graph route for a query that is a vertex of the click graph.
SuggestionList suggest_existing(const ClickGraph& graph,
                                const std::map<std::string, std::uint64_t>& totals,
                                std::string_view query_key, std::size_t k);

// Embedding-bridge route for a query outside the graph: rank the m nearest
// in-graph queries by centroid cosine, harvest their co-click neighbors, and
// score each candidate by the similarity-weighted sum of co-click scores.
SuggestionList suggest_absent(const ClickGraph& graph, const EmbeddingModel& model,
                              const CentroidIndex& index,
                              const std::vector<std::string>& tokens, std::size_t m,
                              std::size_t k);

// Normalize, classify, route. Empty normalization is an error.
SuggestionList suggest(const Engine& engine, std::string_view query_text, std::size_t m,
                       std::size_t k);
SuggestionList suggest(const Engine& engine, std::string_view query_text);

} // namespace qsug
