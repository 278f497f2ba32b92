#include "qsug/centroid.hpp"

#include <algorithm>

namespace qsug {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        throw Error::data("cosine: vector lengths differ (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
    }
    double na = a.norm();
    double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw Error::data("cosine: zero-norm vector");
    return a.dot(b) / (na * nb);
}

const QueryCentroid* CentroidIndex::find(std::string_view key) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), key,
                               [](const QueryCentroid& c, std::string_view k) {
                                   return std::string_view(c.query_key) < k;
                               });
    if (it != entries.end() && it->query_key == key) return &*it;
    return nullptr;
}

std::vector<Neighbor> nearest_graph_queries(const CentroidIndex& index, const QueryCentroid& probe,
                                            std::size_t m) {
    if (index.empty()) throw Error::data("centroid index is empty");
    std::vector<Neighbor> out;
    out.reserve(index.entries.size());
    for (const auto& entry : index.entries) {
        if (entry.query_key == probe.query_key) continue;
        out.push_back(Neighbor{entry.query_key, cosine(entry.vec, probe.vec)});
    }
    std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.query_key < b.query_key;
    });
    if (out.size() > m) out.resize(m);
    return out;
}

} // namespace qsug
