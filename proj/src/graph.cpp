#include "qsug/graph.hpp"

#include <algorithm>
#include <set>

#include "qsug/error.hpp"

namespace qsug {

ClickGraph ClickGraph::build(const std::vector<QueryDocPair>& pairs) {
    ClickGraph g;

    std::set<std::pair<std::string_view, std::string_view>> seen;
    for (const auto& p : pairs) {
        if (!seen.emplace(p.query_key, p.doc_key).second) {
            throw Error::data("duplicate query-document pair: \"" + p.query_key + "\" / \"" +
                              p.doc_key + "\"");
        }
    }

    std::set<std::string> qkeys, dkeys;
    for (const auto& p : pairs) {
        if (p.click_count == 0) continue;
        qkeys.insert(p.query_key);
        dkeys.insert(p.doc_key);
    }
    g.query_keys_.assign(qkeys.begin(), qkeys.end());
    g.doc_keys_.assign(dkeys.begin(), dkeys.end());
    for (std::size_t i = 0; i < g.query_keys_.size(); ++i) {
        g.query_index_[g.query_keys_[i]] = static_cast<std::int32_t>(i);
    }
    for (std::size_t i = 0; i < g.doc_keys_.size(); ++i) {
        g.doc_index_[g.doc_keys_[i]] = static_cast<std::int32_t>(i);
    }

    g.query_adj_.resize(g.query_keys_.size());
    g.doc_adj_.resize(g.doc_keys_.size());
    for (const auto& p : pairs) {
        if (p.click_count == 0) continue;
        std::int32_t q = g.query_index_.at(p.query_key);
        std::int32_t d = g.doc_index_.at(p.doc_key);
        g.query_adj_[q].push_back(Edge{d, p.click_count});
        g.doc_adj_[d].push_back(Edge{q, p.click_count});
    }
    auto by_vertex = [](const Edge& a, const Edge& b) { return a.vertex < b.vertex; };
    for (auto& adj : g.query_adj_) std::sort(adj.begin(), adj.end(), by_vertex);
    for (auto& adj : g.doc_adj_) std::sort(adj.begin(), adj.end(), by_vertex);
    return g;
}

bool ClickGraph::has_query(std::string_view key) const {
    return query_index_.find(std::string(key)) != query_index_.end();
}

std::int32_t ClickGraph::query_index(std::string_view key) const {
    auto it = query_index_.find(std::string(key));
    return it == query_index_.end() ? -1 : it->second;
}

std::int32_t ClickGraph::require_query(std::string_view key) const {
    std::int32_t idx = query_index(key);
    if (idx < 0) throw Error::data("query not in click graph: \"" + std::string(key) + "\"");
    return idx;
}

std::uint64_t ClickGraph::coclick_score(std::string_view qa, std::string_view qb) const {
    std::int32_t a = require_query(qa);
    std::int32_t b = require_query(qb);
    if (a == b) throw Error::data("coclick score needs two distinct queries: \"" +
                                  std::string(qa) + "\"");

    // Merge over the sorted adjacency lists.
    const auto& ea = query_adj_[a];
    const auto& eb = query_adj_[b];
    std::uint64_t score = 0;
    std::size_t i = 0, j = 0;
    while (i < ea.size() && j < eb.size()) {
        if (ea[i].vertex < eb[j].vertex) {
            ++i;
        } else if (eb[j].vertex < ea[i].vertex) {
            ++j;
        } else {
            score += ea[i].weight * eb[j].weight;
            ++i;
            ++j;
        }
    }
    return score;
}

std::vector<Candidate> ClickGraph::connected_queries(std::string_view q) const {
    return connected_queries(require_query(q));
}

std::vector<Candidate> ClickGraph::connected_queries(std::int32_t q) const {
    std::unordered_map<std::int32_t, std::uint64_t> scores;
    for (const Edge& qd : query_adj_[q]) {
        for (const Edge& dq : doc_adj_[qd.vertex]) {
            if (dq.vertex == q) continue;
            scores[dq.vertex] += qd.weight * dq.weight;
        }
    }
    std::vector<Candidate> out;
    out.reserve(scores.size());
    for (const auto& [idx, score] : scores) {
        out.push_back(Candidate{query_keys_[idx], score});
    }
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.query_key < b.query_key;
    });
    return out;
}

std::vector<Candidate> top_k(std::vector<Candidate> candidates, std::size_t k) {
    if (k == 0) throw Error::data("k must be positive");
    if (candidates.size() > k) candidates.resize(k);
    return candidates;
}

} // namespace qsug
