#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "qsug/error.hpp"

namespace qsug {

struct CbowConfig {
    int dim = 100;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double learning_rate = 0.025;
    double learning_rate_floor = 1e-4;
    int min_count = 2;
    std::uint64_t seed = 1;
    double subsample = 0.0; // word2vec-style frequency subsampling threshold, 0 disables
    int workers = 1;

    void validate() const {
        if (dim < 1) throw Error::data("cbow: dim must be >= 1");
        if (window < 1) throw Error::data("cbow: window must be >= 1");
        if (negatives < 0) throw Error::data("cbow: negatives must be >= 0");
        if (epochs < 1) throw Error::data("cbow: epochs must be >= 1");
        if (learning_rate <= 0) throw Error::data("cbow: learning rate must be positive");
        if (learning_rate_floor <= 0) throw Error::data("cbow: learning rate floor must be positive");
        if (min_count < 1) throw Error::data("cbow: min_count must be >= 1");
        if (workers < 1) throw Error::data("cbow: workers must be >= 1");
    }
};

struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
        return std::hash<std::string_view>{}(s);
    }
};

struct Vocabulary {
    std::vector<std::string> tokens; // index order: count descending, token ascending
    std::vector<std::uint64_t> counts;
    std::unordered_map<std::string, std::int32_t, StringHash, std::equal_to<>> index;

    std::size_t size() const { return tokens.size(); }

    std::int32_t lookup(std::string_view token) const {
        auto it = index.find(token);
        return it == index.end() ? -1 : it->second;
    }
};

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus, int min_count);

template <class Scalar>
using EmbeddingMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
struct CbowModelT {
    Vocabulary vocab;
    EmbeddingMatrix<Scalar> input;  // |vocab| x dim, the word embeddings
    EmbeddingMatrix<Scalar> output; // |vocab| x dim, negative-sampling output weights

    Eigen::Index dim() const { return input.cols(); }
};

using EmbeddingModel = CbowModelT<float>;

template <class Scalar>
std::optional<Eigen::RowVectorX<Scalar>> word_vector(const CbowModelT<Scalar>& model,
                                                     std::string_view token) {
    std::int32_t idx = model.vocab.lookup(token);
    if (idx < 0) return std::nullopt;
    return Eigen::RowVectorX<Scalar>(model.input.row(idx));
}

template <class Scalar>
Scalar sigmoid(Scalar x) {
    if (x >= Scalar(0)) {
        Scalar e = std::exp(-x);
        return Scalar(1) / (Scalar(1) + e);
    }
    Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
}

template <class Scalar>
Scalar softplus(Scalar x) {
    if (x > Scalar(30)) return x;
    return std::log1p(std::exp(x));
}

// One training position: predict target from the mean of the context rows,
// contrasting against the drawn negative samples.
struct CbowExample {
    std::vector<std::int32_t> context;
    std::int32_t target = 0;
    std::vector<std::int32_t> negatives;
};

template <class Scalar>
Scalar cbow_example_loss(const CbowModelT<Scalar>& model, const CbowExample& ex) {
    Eigen::RowVectorX<Scalar> h = Eigen::RowVectorX<Scalar>::Zero(model.dim());
    for (std::int32_t c : ex.context) h += model.input.row(c);
    h /= Scalar(ex.context.size());

    Scalar loss = softplus<Scalar>(-h.dot(model.output.row(ex.target)));
    for (std::int32_t n : ex.negatives) {
        loss += softplus<Scalar>(h.dot(model.output.row(n)));
    }
    return loss;
}

template <class Scalar>
struct CbowGradients {
    Scalar loss = 0;
    Eigen::RowVectorX<Scalar> d_context; // shared gradient for every context input row
    std::vector<std::pair<std::int32_t, Eigen::RowVectorX<Scalar>>> d_output;
};

template <class Scalar>
CbowGradients<Scalar> cbow_example_gradients(const CbowModelT<Scalar>& model,
                                             const CbowExample& ex) {
    const Eigen::Index dim = model.dim();
    Eigen::RowVectorX<Scalar> h = Eigen::RowVectorX<Scalar>::Zero(dim);
    for (std::int32_t c : ex.context) h += model.input.row(c);
    h /= Scalar(ex.context.size());

    CbowGradients<Scalar> g;
    g.d_output.reserve(ex.negatives.size() + 1);
    Eigen::RowVectorX<Scalar> d_h = Eigen::RowVectorX<Scalar>::Zero(dim);

    auto touch = [&](std::int32_t idx, Scalar label) {
        Scalar s = h.dot(model.output.row(idx));
        Scalar sig = sigmoid(s);
        g.loss += label > Scalar(0.5) ? softplus<Scalar>(-s) : softplus<Scalar>(s);
        Scalar err = sig - label; // dLoss/ds
        g.d_output.emplace_back(idx, err * h);
        d_h += err * model.output.row(idx);
    };

    touch(ex.target, Scalar(1));
    for (std::int32_t n : ex.negatives) touch(n, Scalar(0));

    g.d_context = d_h / Scalar(ex.context.size());
    return g;
}

// Accumulates the example gradients into dense |vocab| x dim matrices;
// shares the math with the training step so the finite-difference oracle
// checks what training actually applies.
template <class Scalar>
Scalar cbow_accumulate_dense(const CbowModelT<Scalar>& model, const CbowExample& ex,
                             EmbeddingMatrix<Scalar>& d_input, EmbeddingMatrix<Scalar>& d_output) {
    CbowGradients<Scalar> g = cbow_example_gradients(model, ex);
    for (std::int32_t c : ex.context) d_input.row(c) += g.d_context;
    for (const auto& [idx, row] : g.d_output) d_output.row(idx) += row;
    return g.loss;
}

template <class Scalar>
void cbow_apply(CbowModelT<Scalar>& model, const CbowGradients<Scalar>& g,
                const CbowExample& ex, Scalar lr) {
    for (const auto& [idx, row] : g.d_output) model.output.row(idx) -= lr * row;
    for (std::int32_t c : ex.context) model.input.row(c) -= lr * g.d_context;
}

// Deterministic draws on top of the (fully specified) mt19937_64 stream.
inline double unit_real(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53; // [0, 1)
}

inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>(unit_real(rng) * static_cast<double>(n));
}

// Draws vocabulary indices from the unigram distribution raised to 3/4.
class NegativeSampler {
public:
    explicit NegativeSampler(const std::vector<std::uint64_t>& counts, double power = 0.75) {
        cumulative_.reserve(counts.size());
        double total = 0;
        for (std::uint64_t c : counts) {
            total += std::pow(static_cast<double>(c), power);
            cumulative_.push_back(total);
        }
    }

    std::int32_t sample(std::mt19937_64& rng) const {
        double u = unit_real(rng) * cumulative_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) --it;
        return static_cast<std::int32_t>(it - cumulative_.begin());
    }

private:
    std::vector<double> cumulative_;
};

struct TrainStats {
    std::vector<double> epoch_mean_loss;
    std::uint64_t positions = 0; // positions that produced an update
};

namespace detail {

template <class Scalar>
class CbowTrainer {
public:
    CbowTrainer(CbowModelT<Scalar>& model, const CbowConfig& cfg,
                const std::vector<std::vector<std::int32_t>>& sequences,
                std::uint64_t total_tokens)
        : model_(model), cfg_(cfg), sequences_(sequences),
          sampler_(model.vocab.counts),
          total_positions_(static_cast<double>(total_tokens) *
                           static_cast<double>(cfg.epochs)) {
        epoch_loss_.assign(cfg.epochs, 0.0);
        epoch_updates_.assign(cfg.epochs, 0);
        if (cfg_.subsample > 0) {
            double corpus_tokens = 0;
            for (std::uint64_t c : model.vocab.counts) corpus_tokens += double(c);
            keep_prob_.resize(model.vocab.size());
            for (std::size_t i = 0; i < model.vocab.size(); ++i) {
                double f = double(model.vocab.counts[i]) / corpus_tokens;
                double p = (std::sqrt(f / cfg_.subsample) + 1.0) * (cfg_.subsample / f);
                keep_prob_[i] = std::min(p, 1.0);
            }
        }
    }

    void run() {
        if (cfg_.workers == 1) {
            worker(0);
        } else {
            std::vector<std::thread> threads;
            threads.reserve(cfg_.workers);
            for (int w = 0; w < cfg_.workers; ++w) {
                threads.emplace_back([this, w] { worker(w); });
            }
            for (auto& t : threads) t.join();
        }
    }

    TrainStats stats() const {
        TrainStats s;
        s.epoch_mean_loss.resize(cfg_.epochs);
        for (int e = 0; e < cfg_.epochs; ++e) {
            s.epoch_mean_loss[e] =
                epoch_updates_[e] ? epoch_loss_[e] / double(epoch_updates_[e]) : 0.0;
            s.positions += epoch_updates_[e];
        }
        return s;
    }

private:
    void worker(int id) {
        std::mt19937_64 rng(cfg_.seed + 0x9E3779B97F4A7C15ull * std::uint64_t(id));
        std::vector<std::int32_t> filtered;
        CbowExample ex;
        std::vector<double> my_loss(cfg_.epochs, 0.0);
        std::vector<std::uint64_t> my_updates(cfg_.epochs, 0);

        for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
            for (std::size_t s = std::size_t(id); s < sequences_.size();
                 s += std::size_t(cfg_.workers)) {
                const std::vector<std::int32_t>* seq = &sequences_[s];
                if (cfg_.subsample > 0) {
                    filtered.clear();
                    for (std::int32_t tok : *seq) {
                        if (unit_real(rng) < keep_prob_[std::size_t(tok)]) filtered.push_back(tok);
                    }
                    seq = &filtered;
                }
                const auto& toks = *seq;
                for (std::size_t pos = 0; pos < toks.size(); ++pos) {
                    std::uint64_t t = processed_.fetch_add(1, std::memory_order_relaxed);
                    Scalar lr = Scalar(std::max(
                        cfg_.learning_rate_floor,
                        cfg_.learning_rate * (1.0 - double(t) / total_positions_)));

                    int radius = 1 + int(uniform_below(rng, std::uint64_t(cfg_.window)));
                    ex.context.clear();
                    std::size_t lo = pos >= std::size_t(radius) ? pos - std::size_t(radius) : 0;
                    std::size_t hi = std::min(toks.size() - 1, pos + std::size_t(radius));
                    for (std::size_t j = lo; j <= hi; ++j) {
                        if (j != pos) ex.context.push_back(toks[j]);
                    }
                    if (ex.context.empty()) continue;

                    ex.target = toks[pos];
                    ex.negatives.clear();
                    for (int n = 0; n < cfg_.negatives; ++n) {
                        std::int32_t neg = sampler_.sample(rng);
                        for (int tries = 0; neg == ex.target && tries < 100; ++tries) {
                            neg = sampler_.sample(rng);
                        }
                        if (neg != ex.target) ex.negatives.push_back(neg);
                    }

                    CbowGradients<Scalar> g = cbow_example_gradients(model_, ex);
                    cbow_apply(model_, g, ex, lr);
                    my_loss[epoch] += double(g.loss);
                    ++my_updates[epoch];
                }
            }
        }

        std::lock_guard<std::mutex> lock(stats_mutex_);
        for (int e = 0; e < cfg_.epochs; ++e) {
            epoch_loss_[e] += my_loss[e];
            epoch_updates_[e] += my_updates[e];
        }
    }

    CbowModelT<Scalar>& model_;
    const CbowConfig& cfg_;
    const std::vector<std::vector<std::int32_t>>& sequences_;
    NegativeSampler sampler_;
    double total_positions_;
    std::vector<double> keep_prob_;
    std::atomic<std::uint64_t> processed_{0};
    std::mutex stats_mutex_;
    std::vector<double> epoch_loss_;
    std::vector<std::uint64_t> epoch_updates_;
};

} // namespace detail

std::vector<std::vector<std::int32_t>> encode_corpus(
    const std::vector<std::vector<std::string>>& corpus, const Vocabulary& vocab);

// CBOW with negative sampling. Single-worker runs are bit-reproducible for a
// fixed seed; multi-worker runs update the shared matrices without
// synchronization and waive determinism.
template <class Scalar>
CbowModelT<Scalar> train_cbow(const std::vector<std::vector<std::string>>& corpus,
                              const CbowConfig& cfg, TrainStats* stats = nullptr) {
    cfg.validate();
    CbowModelT<Scalar> model;
    model.vocab = build_vocabulary(corpus, cfg.min_count);
    if (model.vocab.size() == 0) {
        throw Error::data("cbow: no token survives the min_count cutoff");
    }

    auto sequences = encode_corpus(corpus, model.vocab);
    std::uint64_t total_tokens = 0;
    for (const auto& s : sequences) total_tokens += s.size();

    const auto rows = static_cast<Eigen::Index>(model.vocab.size());
    model.input.resize(rows, cfg.dim);
    model.output = EmbeddingMatrix<Scalar>::Zero(rows, cfg.dim);
    std::mt19937_64 rng(cfg.seed);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cfg.dim; ++j) {
            model.input(i, j) = Scalar((unit_real(rng) - 0.5) / double(cfg.dim));
        }
    }

    detail::CbowTrainer<Scalar> trainer(model, cfg, sequences, total_tokens);
    trainer.run();
    if (stats) *stats = trainer.stats();
    return model;
}

// key=value config file, '#' comments; unknown keys are an error.
void apply_cbow_config_file(CbowConfig& cfg, const std::string& path);

} // namespace qsug
