#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qsug/log.hpp"

namespace qsug {

struct Candidate {
    std::string query_key;
    std::uint64_t score = 0;
};

// Immutable weighted bipartite query-document graph built from clicked pairs.
// Vertex indices follow sorted key order, adjacency lists are sorted by
// neighbor index, so construction is deterministic for a given pair set.
class ClickGraph {
public:
    struct Edge {
        std::int32_t vertex; // doc index in query adjacency, query index in doc adjacency
        std::uint64_t weight;
    };

    ClickGraph() = default;

    // Pairs with click_count 0 are skipped; a duplicated (query, doc) key is
    // a construction error.
    static ClickGraph build(const std::vector<QueryDocPair>& pairs);

    std::size_t query_count() const { return query_keys_.size(); }
    std::size_t doc_count() const { return doc_keys_.size(); }
    bool empty() const { return query_keys_.empty(); }

    const std::vector<std::string>& query_keys() const { return query_keys_; }
    const std::vector<std::string>& doc_keys() const { return doc_keys_; }

    bool has_query(std::string_view key) const;
    std::int32_t query_index(std::string_view key) const; // -1 when absent

    const std::vector<Edge>& query_edges(std::int32_t q) const { return query_adj_[q]; }
    const std::vector<Edge>& doc_edges(std::int32_t d) const { return doc_adj_[d]; }

    // Co-click similarity: sum over shared documents of the edge-weight product.
    std::uint64_t coclick_score(std::string_view qa, std::string_view qb) const;

    // Every query sharing at least one document with q, scored by
    // coclick_score, sorted score-descending with lexicographic tie-break.
    std::vector<Candidate> connected_queries(std::string_view q) const;
    std::vector<Candidate> connected_queries(std::int32_t q) const;

private:
    std::int32_t require_query(std::string_view key) const;

    std::vector<std::string> query_keys_;
    std::vector<std::string> doc_keys_;
    std::unordered_map<std::string, std::int32_t> query_index_;
    std::unordered_map<std::string, std::int32_t> doc_index_;
    std::vector<std::vector<Edge>> query_adj_;
    std::vector<std::vector<Edge>> doc_adj_;
};

// First min(k, size) entries of a ranked candidate list.
std::vector<Candidate> top_k(std::vector<Candidate> candidates, std::size_t k);

} // namespace qsug
