#pragma once

// Shared fixtures and independent reference implementations ("oracles") for
// the unit and acceptance suites. The references here are deliberately naive:
// brute-force loops over maps, no adjacency structures, so they share no code
// with the library paths they check.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qsug/centroid.hpp"
#include "qsug/engine.hpp"
#include "qsug/graph.hpp"
#include "qsug/log.hpp"

namespace qsug::testing {

// ---------------------------------------------------------------- fixtures

inline std::string token_name(const char* prefix, std::size_t i) {
    return std::string(prefix) + std::to_string(i);
}

// Random bipartite clicked-pair set: up to max_q queries, max_d docs,
// integer weights in [1, 9], each (q, d) edge present with probability p.
inline std::vector<QueryDocPair> random_pairs(std::mt19937_64& rng, std::size_t max_q,
                                              std::size_t max_d, double p = 0.2) {
    std::size_t nq = 1 + rng() % max_q;
    std::size_t nd = 1 + rng() % max_d;
    std::vector<QueryDocPair> pairs;
    for (std::size_t q = 0; q < nq; ++q) {
        for (std::size_t d = 0; d < nd; ++d) {
            if (double(rng() >> 11) * 0x1.0p-53 < p) {
                pairs.push_back({token_name("q", q), token_name("d", d), 1 + rng() % 9});
            }
        }
    }
    return pairs;
}

// Model whose rows are set directly, bypassing training.
inline EmbeddingModel manual_model(const std::vector<std::string>& tokens,
                                   const std::vector<std::vector<float>>& rows) {
    EmbeddingModel model;
    model.vocab.tokens = tokens;
    model.vocab.counts.assign(tokens.size(), 1);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        model.vocab.index.emplace(tokens[i], std::int32_t(i));
    }
    Eigen::Index dim = Eigen::Index(rows.empty() ? 0 : rows[0].size());
    model.input.resize(Eigen::Index(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) model.input(Eigen::Index(i), j) = rows[i][j];
    }
    model.output = EmbeddingMatrix<float>::Zero(model.input.rows(), dim);
    return model;
}

inline EmbeddingModel random_model(std::mt19937_64& rng, const std::vector<std::string>& tokens,
                                   int dim) {
    std::vector<std::vector<float>> rows(tokens.size(), std::vector<float>(std::size_t(dim)));
    for (auto& row : rows) {
        for (auto& v : row) v = float(double(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0);
    }
    return manual_model(tokens, rows);
}

// Engine over a random graph whose vertex keys are single tokens covered by a
// random embedding model, so every graph query has a centroid.
inline Engine random_engine(std::mt19937_64& rng, std::size_t max_q, std::size_t max_d,
                            int dim = 6) {
    Engine engine;
    std::vector<QueryDocPair> pairs = random_pairs(rng, max_q, max_d);
    engine.graph = ClickGraph::build(pairs);
    engine.totals = click_totals(pairs);

    std::vector<std::string> tokens;
    for (const auto& key : engine.graph.query_keys()) tokens.push_back(key);
    tokens.push_back("novel0");
    tokens.push_back("novel1");
    engine.model = random_model(rng, tokens, dim);
    engine.index = build_centroid_index(engine.model, engine.graph);
    return engine;
}

// ----------------------------------------------------------------- oracles

// Full double loop over every doc key either query clicked.
inline std::uint64_t brute_coclick(const std::vector<QueryDocPair>& pairs, const std::string& qa,
                                   const std::string& qb) {
    std::map<std::string, std::uint64_t> a;
    std::map<std::string, std::uint64_t> b;
    for (const auto& p : pairs) {
        if (p.click_count == 0) continue;
        if (p.query_key == qa) a[p.doc_key] += p.click_count;
        if (p.query_key == qb) b[p.doc_key] += p.click_count;
    }
    std::uint64_t sum = 0;
    for (const auto& [doc, wa] : a) {
        auto it = b.find(doc);
        if (it != b.end()) sum += wa * it->second;
    }
    return sum;
}

inline void rank_candidates(std::vector<Candidate>& cands) {
    std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.query_key < y.query_key;
    });
}

// All-pairs scoring against every other clicked query, then sort.
inline std::vector<Candidate> brute_connected(const std::vector<QueryDocPair>& pairs,
                                              const std::string& q) {
    std::set<std::string> queries;
    for (const auto& p : pairs) {
        if (p.click_count > 0) queries.insert(p.query_key);
    }
    std::vector<Candidate> cands;
    for (const auto& other : queries) {
        if (other == q) continue;
        std::uint64_t w = brute_coclick(pairs, q, other);
        if (w > 0) cands.push_back({other, w});
    }
    rank_candidates(cands);
    return cands;
}

struct NaiveNeighbor {
    std::string key;
    double sim = 0;
};

inline double naive_cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double dot = 0;
    double na = 0;
    double nb = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline std::vector<NaiveNeighbor> naive_nearest(const CentroidIndex& index,
                                                const Eigen::VectorXd& probe,
                                                const std::string& probe_key, std::size_t m) {
    std::vector<NaiveNeighbor> all;
    for (const auto& entry : index.entries) {
        if (entry.query_key == probe_key) continue;
        all.push_back({entry.query_key, naive_cosine(entry.vec, probe)});
    }
    std::sort(all.begin(), all.end(), [](const NaiveNeighbor& x, const NaiveNeighbor& y) {
        if (x.sim != y.sim) return x.sim > y.sim;
        return x.key < y.key;
    });
    if (all.size() > m) all.resize(m);
    return all;
}

// Bridge aggregation done the slow way: for every graph query, sum
// sim(s) * W(s, c) over the ranked similar queries (same accumulation order
// as the engine, so equal inputs give bit-equal sums).
inline std::vector<SuggestionItem> naive_bridge(const std::vector<QueryDocPair>& pairs,
                                                const std::vector<NaiveNeighbor>& similar,
                                                const std::string& probe_key, std::size_t k) {
    std::set<std::string> queries;
    for (const auto& p : pairs) {
        if (p.click_count > 0) queries.insert(p.query_key);
    }
    std::vector<SuggestionItem> items;
    for (const auto& c : queries) {
        if (c == probe_key) continue;
        double score = 0;
        bool reached = false;
        for (const auto& s : similar) {
            if (s.key == c) continue;
            std::uint64_t w = brute_coclick(pairs, s.key, c);
            if (w > 0) {
                score += s.sim * double(w);
                reached = true;
            }
        }
        if (reached) items.push_back({c, score});
    }
    std::sort(items.begin(), items.end(), [](const SuggestionItem& x, const SuggestionItem& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.query_key < y.query_key;
    });
    if (items.size() > k) items.resize(k);
    return items;
}

// ------------------------------------------------------------- filesystem

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::string tmpl = (std::filesystem::temp_directory_path() / (tag + ".XXXXXX")).string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        if (mkdtemp(buf.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
        path_ = buf.data();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const {
        return (std::filesystem::path(path_) / name).string();
    }

private:
    std::string path_;
};

} // namespace qsug::testing
