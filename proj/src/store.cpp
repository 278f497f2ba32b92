#include "qsug/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "qsug/error.hpp"

namespace fs = std::filesystem;

namespace qsug {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

std::string digest_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::string format_score(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double round_score(double v) { return std::strtod(format_score(v).c_str(), nullptr); }

const char* route_name(SuggestionRoute route) {
    return route == SuggestionRoute::graph_direct ? "graph" : "bridge";
}

const char* kind_name(QueryKind kind) {
    return kind == QueryKind::click_existing ? "existing" : "absent";
}

namespace {

constexpr char kVectorsMagic[8] = {'Q', 'S', 'U', 'G', 'V', 'E', 'C', '1'};
constexpr char kCentroidsMagic[8] = {'Q', 'S', 'U', 'G', 'C', 'E', 'N', '1'};

void append_u32(std::string& out, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

void append_u64(std::string& out, std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    out.append(b, 8);
}

void append_raw(std::string& out, const void* data, std::size_t n) {
    out.append(static_cast<const char*>(data), n);
}

// Cursor over a binary blob; every read is bounds-checked against the file name.
struct BinReader {
    std::string_view data;
    std::size_t pos = 0;
    std::string file;

    void need(std::size_t n) const {
        if (pos + n > data.size()) throw Error::data(file + " is truncated");
    }
    void magic(const char (&m)[8]) {
        need(8);
        if (std::memcmp(data.data() + pos, m, 8) != 0) {
            throw Error::data(file + " has an unexpected header");
        }
        pos += 8;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, data.data() + pos, 4);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v;
        std::memcpy(&v, data.data() + pos, 8);
        pos += 8;
        return v;
    }
    void raw(void* out, std::size_t n) {
        need(n);
        std::memcpy(out, data.data() + pos, n);
        pos += n;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(data.substr(pos, n));
        pos += n;
        return s;
    }
    void done() const {
        if (pos != data.size()) throw Error::data(file + " has trailing bytes");
    }
};

std::string read_file(const fs::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::io(std::string("cannot open ") + what + ": " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error::io(std::string("read failed for ") + path.string());
    return content;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error::io("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error::io("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error::io("cannot rename " + tmp.string() + ": " + ec.message());
}

// Advisory exclusive lock on <dir>/lock, released on destruction.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) {
        fs::path p = dir / "lock";
        fd_ = ::open(p.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
        if (fd_ < 0) throw Error::io("cannot open lock file " + p.string());
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            fd_ = -1;
            throw Error::io("artifact directory is locked by another writer: " + dir.string());
        }
    }
    ~DirLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    int fd_ = -1;
};

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::uint64_t parse_u64_field(std::string_view s, const std::string& where) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error::data(where + ": bad integer \"" + std::string(s) + "\"");
    }
    return v;
}

double parse_double_field(std::string_view s, const std::string& where) {
    std::string tmp(s);
    char* end = nullptr;
    double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size() || tmp.empty()) {
        throw Error::data(where + ": bad number \"" + tmp + "\"");
    }
    return v;
}

// Walks non-empty lines of a TSV blob, tracking line numbers for errors.
template <class Fn>
void for_lines(std::string_view content, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= content.size()) {
        std::size_t nl = content.find('\n', start);
        std::string_view line = nl == std::string_view::npos
                                    ? content.substr(start)
                                    : content.substr(start, nl - start);
        ++line_no;
        if (!line.empty()) fn(line_no, line);
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
}

std::string serialize_graph(const ClickGraph& graph) {
    std::string out;
    for (std::size_t q = 0; q < graph.query_count(); ++q) {
        std::uint64_t total = 0;
        for (const auto& e : graph.query_edges(static_cast<std::int32_t>(q))) total += e.weight;
        out += "Q\t";
        out += graph.query_keys()[q];
        out += '\t';
        out += std::to_string(total);
        out += '\n';
    }
    for (std::size_t q = 0; q < graph.query_count(); ++q) {
        for (const auto& e : graph.query_edges(static_cast<std::int32_t>(q))) {
            out += "E\t";
            out += graph.query_keys()[q];
            out += '\t';
            out += graph.doc_keys()[e.vertex];
            out += '\t';
            out += std::to_string(e.weight);
            out += '\n';
        }
    }
    return out;
}

ClickGraph parse_graph(std::string_view content) {
    std::vector<QueryDocPair> pairs;
    std::size_t vertex_lines = 0;
    for_lines(content, [&](std::size_t line_no, std::string_view line) {
        auto f = split_tabs(line);
        std::string where = "graph.tsv line " + std::to_string(line_no);
        if (f[0] == "Q") {
            if (f.size() != 3) throw Error::data(where + ": expected 3 fields");
            ++vertex_lines;
            return;
        }
        if (f[0] == "E") {
            if (f.size() != 4) throw Error::data(where + ": expected 4 fields");
            pairs.push_back({std::string(f[1]), std::string(f[2]), parse_u64_field(f[3], where)});
            return;
        }
        throw Error::data(where + ": unknown record type \"" + std::string(f[0]) + "\"");
    });
    ClickGraph graph = ClickGraph::build(pairs);
    if (graph.query_count() != vertex_lines) {
        throw Error::data("graph.tsv is inconsistent: " + std::to_string(vertex_lines) +
                          " vertex lines but " + std::to_string(graph.query_count()) +
                          " queries in the edge set");
    }
    return graph;
}

std::string serialize_queries(const std::map<std::string, std::uint64_t>& totals) {
    std::string out;
    for (const auto& [key, total] : totals) {
        out += key;
        out += '\t';
        out += std::to_string(total);
        out += '\n';
    }
    return out;
}

std::map<std::string, std::uint64_t> parse_queries(std::string_view content) {
    std::map<std::string, std::uint64_t> totals;
    for_lines(content, [&](std::size_t line_no, std::string_view line) {
        auto f = split_tabs(line);
        std::string where = "queries.tsv line " + std::to_string(line_no);
        if (f.size() != 2 || f[0].empty()) throw Error::data(where + ": expected key<TAB>count");
        if (!totals.emplace(std::string(f[0]), parse_u64_field(f[1], where)).second) {
            throw Error::data(where + ": duplicate query \"" + std::string(f[0]) + "\"");
        }
    });
    return totals;
}

std::string serialize_stopwords(const std::unordered_set<std::string>& words) {
    std::vector<std::string> sorted(words.begin(), words.end());
    std::sort(sorted.begin(), sorted.end());
    std::string out;
    for (const auto& w : sorted) {
        out += w;
        out += '\n';
    }
    return out;
}

std::string serialize_vocab(const Vocabulary& vocab) {
    std::string out;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        out += vocab.tokens[i];
        out += '\t';
        out += std::to_string(vocab.counts[i]);
        out += '\n';
    }
    return out;
}

Vocabulary parse_vocab(std::string_view content) {
    Vocabulary vocab;
    for_lines(content, [&](std::size_t line_no, std::string_view line) {
        auto f = split_tabs(line);
        std::string where = "vocab.tsv line " + std::to_string(line_no);
        if (f.size() != 2 || f[0].empty()) throw Error::data(where + ": expected token<TAB>count");
        vocab.tokens.emplace_back(f[0]);
        vocab.counts.push_back(parse_u64_field(f[1], where));
    });
    for (std::size_t i = 0; i < vocab.tokens.size(); ++i) {
        if (!vocab.index.emplace(vocab.tokens[i], static_cast<std::int32_t>(i)).second) {
            throw Error::data("vocab.tsv: duplicate token \"" + vocab.tokens[i] + "\"");
        }
    }
    return vocab;
}

std::string serialize_vectors(const EmbeddingModel& model) {
    std::string out;
    append_raw(out, kVectorsMagic, 8);
    append_u32(out, static_cast<std::uint32_t>(model.input.rows()));
    append_u32(out, static_cast<std::uint32_t>(model.input.cols()));
    append_raw(out, model.input.data(), sizeof(float) * model.input.size());
    append_raw(out, model.output.data(), sizeof(float) * model.output.size());
    return out;
}

void parse_vectors(std::string_view content, EmbeddingModel& model) {
    BinReader r{content, 0, "vectors.bin"};
    r.magic(kVectorsMagic);
    std::uint32_t rows = r.u32();
    std::uint32_t cols = r.u32();
    if (rows != model.vocab.size()) {
        throw Error::data("vectors.bin row count " + std::to_string(rows) +
                          " does not match vocabulary size " + std::to_string(model.vocab.size()));
    }
    model.input.resize(rows, cols);
    model.output.resize(rows, cols);
    r.raw(model.input.data(), sizeof(float) * model.input.size());
    r.raw(model.output.data(), sizeof(float) * model.output.size());
    r.done();
}

std::string serialize_centroids(const CentroidIndex& index) {
    std::string out;
    append_raw(out, kCentroidsMagic, 8);
    std::uint32_t dim =
        index.entries.empty() ? 0 : static_cast<std::uint32_t>(index.entries[0].vec.size());
    append_u32(out, static_cast<std::uint32_t>(index.entries.size()));
    append_u32(out, dim);
    append_u64(out, index.skipped_no_coverage);
    for (const auto& entry : index.entries) {
        append_u32(out, static_cast<std::uint32_t>(entry.query_key.size()));
        out += entry.query_key;
        append_u32(out, entry.covered_tokens);
        append_raw(out, entry.vec.data(), sizeof(double) * entry.vec.size());
    }
    return out;
}

CentroidIndex parse_centroids(std::string_view content) {
    BinReader r{content, 0, "centroids.bin"};
    r.magic(kCentroidsMagic);
    std::uint32_t n = r.u32();
    std::uint32_t dim = r.u32();
    CentroidIndex index;
    index.skipped_no_coverage = r.u64();
    index.entries.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        QueryCentroid c;
        std::uint32_t keylen = r.u32();
        c.query_key = r.str(keylen);
        c.covered_tokens = r.u32();
        c.vec.resize(dim);
        r.raw(c.vec.data(), sizeof(double) * dim);
        index.entries.push_back(std::move(c));
    }
    r.done();
    for (std::size_t i = 1; i < index.entries.size(); ++i) {
        if (!(index.entries[i - 1].query_key < index.entries[i].query_key)) {
            throw Error::data("centroids.bin entries are not sorted by key");
        }
    }
    return index;
}

std::string serialize_table(const SuggestionTable& table) {
    std::string out;
    auto row = [&](const std::string& key, const char* kind, std::size_t rank,
                   std::string_view suggested, std::string_view score) {
        out += key;
        out += '\t';
        out += kind;
        out += '\t';
        out += std::to_string(rank);
        out += '\t';
        out += suggested;
        out += '\t';
        out += score;
        out += '\n';
    };
    for (const auto& [key, entry] : table) {
        const char* kind = route_name(entry.route);
        for (std::size_t i = 0; i < entry.similar.size(); ++i) {
            row(key, "similar", i + 1, entry.similar[i].query_key,
                format_score(entry.similar[i].similarity));
        }
        for (std::size_t i = 0; i < entry.items.size(); ++i) {
            row(key, kind, i + 1, entry.items[i].query_key, format_score(entry.items[i].score));
        }
        if (entry.items.empty()) row(key, kind, 0, "-", entry.reason);
    }
    return out;
}

SuggestionTable parse_table(std::string_view content) {
    SuggestionTable table;
    for_lines(content, [&](std::size_t line_no, std::string_view line) {
        auto f = split_tabs(line);
        std::string where = "suggestions.tsv line " + std::to_string(line_no);
        if (f.size() != 5 || f[0].empty()) {
            throw Error::data(where + ": expected 5 tab-separated fields");
        }
        TableEntry& entry = table[std::string(f[0])];
        std::uint64_t rank = parse_u64_field(f[2], where);
        if (f[1] == "similar") {
            entry.route = SuggestionRoute::embedding_bridge;
            if (rank != entry.similar.size() + 1) throw Error::data(where + ": rank out of order");
            entry.similar.push_back({std::string(f[3]), parse_double_field(f[4], where)});
            return;
        }
        if (f[1] == "graph") {
            entry.route = SuggestionRoute::graph_direct;
        } else if (f[1] == "bridge") {
            entry.route = SuggestionRoute::embedding_bridge;
        } else {
            throw Error::data(where + ": unknown kind \"" + std::string(f[1]) + "\"");
        }
        if (rank == 0) {
            if (!entry.items.empty()) throw Error::data(where + ": empty marker after items");
            entry.reason = std::string(f[4]);
            return;
        }
        if (rank != entry.items.size() + 1) throw Error::data(where + ": rank out of order");
        entry.items.push_back({std::string(f[3]), parse_double_field(f[4], where)});
    });
    return table;
}

std::string iso_utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::ordered_json manifest_to_json(const ArtifactManifest& m) {
    nlohmann::ordered_json j;
    j["format_version"] = m.format_version;
    j["created_at"] = m.created_at;
    j["source_log_digest"] = m.source_log_digest;
    j["segmenter"] = m.segmenter;
    j["default_m"] = m.default_m;
    j["default_k"] = m.default_k;
    j["files"] = m.file_digests;
    return j;
}

ArtifactManifest manifest_from_json(const std::string& content) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::exception& e) {
        throw Error::data(std::string("manifest is not valid JSON: ") + e.what());
    }
    ArtifactManifest m;
    try {
        m.format_version = j.at("format_version").get<int>();
        m.created_at = j.at("created_at").get<std::string>();
        m.source_log_digest = j.at("source_log_digest").get<std::string>();
        m.segmenter = j.at("segmenter").get<std::string>();
        m.default_m = j.at("default_m").get<int>();
        m.default_k = j.at("default_k").get<int>();
        m.file_digests = j.at("files").get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error::data(std::string("manifest is missing a required field: ") + e.what());
    }
    return m;
}

} // namespace

std::string empty_reason(const SuggestionList& list) {
    if (!list.items.empty()) return {};
    return list.coverage_warning ? "no_coverage" : "no_candidates";
}

SuggestionTable precompute_suggestions(const Engine& engine,
                                       const std::vector<std::string>& query_keys, std::size_t m,
                                       std::size_t k) {
    SuggestionTable table;
    for (const auto& key : query_keys) {
        auto tokens = split_key(key);
        QueryClass cls = classify(tokens, engine.graph, engine.totals);
        TableEntry entry;
        try {
            SuggestionList list =
                cls.kind == QueryKind::click_existing
                    ? suggest_existing(engine.graph, engine.totals, key, k)
                    : suggest_absent(engine.graph, engine.model, engine.index, tokens, m, k);
            entry.route = list.route;
            entry.reason = empty_reason(list);
            entry.similar = std::move(list.similar);
            entry.items = std::move(list.items);
        } catch (const Error& err) {
            // a single bad query (say, an empty centroid index) must not sink
            // the whole build; it just gets an empty entry
            if (err.kind() != Error::Kind::data) throw;
            entry.route = cls.kind == QueryKind::click_existing
                              ? SuggestionRoute::graph_direct
                              : SuggestionRoute::embedding_bridge;
            entry.reason = "error";
        }
        table.emplace(key, std::move(entry));
    }
    return table;
}

std::string render_records(const SuggestionList& list) {
    std::string out = "meta\t" + list.source_query + '\t' + kind_name(list.query_class.kind) +
                      '\t' + (list.query_class.long_tail ? "1" : "0") + '\t' +
                      route_name(list.route) + '\t' + (list.coverage_warning ? "1" : "0") + '\n';
    for (std::size_t i = 0; i < list.similar.size(); ++i) {
        out += "similar\t" + std::to_string(i + 1) + '\t' + list.similar[i].query_key + '\t' +
               format_score(list.similar[i].similarity) + '\n';
    }
    const char* kind = route_name(list.route);
    for (std::size_t i = 0; i < list.items.size(); ++i) {
        out += std::string(kind) + '\t' + std::to_string(i + 1) + '\t' + list.items[i].query_key +
               '\t' + format_score(list.items[i].score) + '\n';
    }
    if (list.items.empty()) {
        out += std::string(kind) + "\t0\t-\t" + empty_reason(list) + '\n';
    }
    return out;
}

SuggestionList list_from_entry(const std::string& key, const TableEntry& entry,
                               const Engine& engine) {
    SuggestionList list;
    list.source_query = key;
    list.query_class = classify(split_key(key), engine.graph, engine.totals);
    list.route = entry.route;
    list.items = entry.items;
    list.similar = entry.similar;
    list.coverage_warning = entry.reason == "no_coverage";
    return list;
}

ArtifactManifest save_engine(const Engine& engine, const SuggestionTable& table,
                             const std::string& directory,
                             const std::string& source_log_digest) {
    fs::path dir(directory);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error::io("cannot create artifact directory " + dir.string());
    }
    DirLock lock(dir);

    std::map<std::string, std::string> files;
    files["graph.tsv"] = serialize_graph(engine.graph);
    files["queries.tsv"] = serialize_queries(engine.totals);
    files["stopwords.tsv"] = serialize_stopwords(engine.rules.stopwords);
    files["vocab.tsv"] = serialize_vocab(engine.model.vocab);
    files["vectors.bin"] = serialize_vectors(engine.model);
    files["centroids.bin"] = serialize_centroids(engine.index);
    files["suggestions.tsv"] = serialize_table(table);

    ArtifactManifest manifest;
    manifest.created_at = iso_utc_now();
    manifest.source_log_digest = source_log_digest;
    manifest.segmenter =
        engine.rules.segmenter ? engine.rules.segmenter->name() : std::string("unigram");
    manifest.default_m = engine.default_m;
    manifest.default_k = engine.default_k;
    for (const auto& [name, content] : files) {
        manifest.file_digests[name] = digest_hex(content);
    }

    for (const auto& [name, content] : files) {
        write_file_atomic(dir / name, content);
    }
    write_file_atomic(dir / "manifest", manifest_to_json(manifest).dump(2) + "\n");
    return manifest;
}

LoadedEngine load_engine(const std::string& directory) {
    fs::path dir(directory);
    fs::path manifest_path = dir / "manifest";
    if (!fs::exists(manifest_path)) {
        throw Error::io("no artifact manifest at " + manifest_path.string());
    }
    std::string manifest_bytes = read_file(manifest_path, "manifest");

    LoadedEngine loaded;
    loaded.manifest = manifest_from_json(manifest_bytes);
    loaded.manifest_digest = digest_hex(manifest_bytes);
    if (loaded.manifest.format_version != kArtifactFormatVersion) {
        throw Error::data("artifact format version " +
                          std::to_string(loaded.manifest.format_version) +
                          " is not supported (expected " +
                          std::to_string(kArtifactFormatVersion) + ")");
    }

    std::map<std::string, std::string> files;
    for (const auto& [name, expected] : loaded.manifest.file_digests) {
        fs::path p = dir / name;
        if (!fs::exists(p)) throw Error::io("artifact file is missing: " + p.string());
        std::string content = read_file(p, name.c_str());
        std::string actual = digest_hex(content);
        if (actual != expected) {
            throw Error::data("digest mismatch for " + name + ": manifest says " + expected +
                              ", file hashes to " + actual);
        }
        files.emplace(name, std::move(content));
    }
    auto need = [&](const char* name) -> const std::string& {
        auto it = files.find(name);
        if (it == files.end()) {
            throw Error::data(std::string("manifest lists no digest for ") + name);
        }
        return it->second;
    };

    Engine& engine = loaded.engine;
    engine.rules.stopwords = parse_stopwords(need("stopwords.tsv"));
    engine.rules.segmenter = make_segmenter(loaded.manifest.segmenter);
    engine.graph = parse_graph(need("graph.tsv"));
    engine.totals = parse_queries(need("queries.tsv"));
    engine.model.vocab = parse_vocab(need("vocab.tsv"));
    parse_vectors(need("vectors.bin"), engine.model);
    engine.index = parse_centroids(need("centroids.bin"));
    engine.default_m = loaded.manifest.default_m;
    engine.default_k = loaded.manifest.default_k;
    loaded.table = parse_table(need("suggestions.tsv"));
    return loaded;
}

} // namespace qsug
