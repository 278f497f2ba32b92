#pragma once

#include <Eigen/Core>
#include <string>
#include <string_view>
#include <vector>

#include "qsug/cbow.hpp"
#include "qsug/graph.hpp"

namespace qsug {

enum class CentroidVariant { mean, sum };

// Query-level vector: mean (or sum) of the in-vocabulary token embeddings,
// accumulated in double precision. Cosine rankings are identical between the
// two variants, only the scale differs.
struct QueryCentroid {
    std::string query_key;
    Eigen::VectorXd vec;
    std::uint32_t covered_tokens = 0;
};

template <class Scalar>
QueryCentroid query_centroid(const CbowModelT<Scalar>& model,
                             const std::vector<std::string>& tokens, std::string query_key,
                             CentroidVariant variant = CentroidVariant::mean) {
    QueryCentroid c;
    c.query_key = std::move(query_key);
    c.vec = Eigen::VectorXd::Zero(model.dim());
    for (const auto& tok : tokens) {
        std::int32_t idx = model.vocab.lookup(tok);
        if (idx < 0) continue;
        c.vec += model.input.row(idx).transpose().template cast<double>();
        ++c.covered_tokens;
    }
    if (c.covered_tokens == 0) {
        throw Error::data("no in-vocabulary tokens for query: \"" + c.query_key + "\"");
    }
    if (variant == CentroidVariant::mean) c.vec /= double(c.covered_tokens);
    return c;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct Neighbor {
    std::string query_key;
    double similarity = 0;
};

// Centroids of every click-graph query the model covers, sorted by key.
struct CentroidIndex {
    std::vector<QueryCentroid> entries;
    std::uint64_t skipped_no_coverage = 0;

    bool empty() const { return entries.empty(); }
    const QueryCentroid* find(std::string_view key) const;
};

template <class Scalar>
CentroidIndex build_centroid_index(const CbowModelT<Scalar>& model, const ClickGraph& graph,
                                   CentroidVariant variant = CentroidVariant::mean) {
    CentroidIndex index;
    index.entries.reserve(graph.query_count());
    for (const auto& key : graph.query_keys()) {
        auto tokens = split_key(key);
        try {
            index.entries.push_back(query_centroid(model, tokens, key, variant));
        } catch (const Error&) {
            ++index.skipped_no_coverage;
        }
    }
    return index;
}

// Exact full scan, top-m by cosine similarity; the probe's own key is skipped.
std::vector<Neighbor> nearest_graph_queries(const CentroidIndex& index, const QueryCentroid& probe,
                                            std::size_t m);

} // namespace qsug
