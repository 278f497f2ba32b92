#include "qsug/cbow.hpp"

#include <fstream>
#include <sstream>

namespace qsug {

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus, int min_count) {
    if (min_count < 1) throw Error::data("cbow: min_count must be >= 1");
    std::unordered_map<std::string, std::uint64_t, StringHash, std::equal_to<>> counts;
    for (const auto& seq : corpus) {
        for (const auto& tok : seq) ++counts[tok];
    }

    std::vector<std::pair<std::string, std::uint64_t>> kept;
    kept.reserve(counts.size());
    for (auto& [tok, count] : counts) {
        if (count >= static_cast<std::uint64_t>(min_count)) kept.emplace_back(tok, count);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.tokens.reserve(kept.size());
    vocab.counts.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        vocab.tokens.push_back(kept[i].first);
        vocab.counts.push_back(kept[i].second);
        vocab.index[kept[i].first] = static_cast<std::int32_t>(i);
    }
    return vocab;
}

std::vector<std::vector<std::int32_t>> encode_corpus(
    const std::vector<std::vector<std::string>>& corpus, const Vocabulary& vocab) {
    std::vector<std::vector<std::int32_t>> sequences;
    sequences.reserve(corpus.size());
    for (const auto& seq : corpus) {
        std::vector<std::int32_t> ids;
        ids.reserve(seq.size());
        for (const auto& tok : seq) {
            std::int32_t idx = vocab.lookup(tok);
            if (idx >= 0) ids.push_back(idx);
        }
        if (!ids.empty()) sequences.push_back(std::move(ids));
    }
    return sequences;
}

void apply_cbow_config_file(CbowConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error::io("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string trimmed;
        for (char c : line) {
            if (c != ' ' && c != '\t' && c != '\r') trimmed.push_back(c);
        }
        if (trimmed.empty()) continue;
        auto eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw Error::data(path + ":" + std::to_string(line_no) + ": expected key=value");
        }
        std::string key = trimmed.substr(0, eq);
        std::string value = trimmed.substr(eq + 1);
        try {
            if (key == "dim") cfg.dim = std::stoi(value);
            else if (key == "window") cfg.window = std::stoi(value);
            else if (key == "negatives") cfg.negatives = std::stoi(value);
            else if (key == "epochs") cfg.epochs = std::stoi(value);
            else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
            else if (key == "learning_rate_floor") cfg.learning_rate_floor = std::stod(value);
            else if (key == "min_count") cfg.min_count = std::stoi(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "subsample") cfg.subsample = std::stod(value);
            else if (key == "workers") cfg.workers = std::stoi(value);
            else throw Error::data(path + ":" + std::to_string(line_no) + ": unknown key \"" + key + "\"");
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw Error::data(path + ":" + std::to_string(line_no) + ": bad value for \"" + key + "\"");
        }
    }
}

} // namespace qsug
