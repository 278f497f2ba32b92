#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qsug/engine.hpp"

namespace qsug {

// Artifact directory layout:
//   manifest         JSON: version, timestamps, per-file digests
//   graph.tsv        Q vertex lines, then E edge lines
//   queries.tsv      every observed query with its total click count
//   stopwords.tsv    stop-word set the engine normalizes with
//   vocab.tsv        token + frequency, in vocabulary index order
//   vectors.bin      input + output embedding matrices, float32 LE
//   centroids.bin    per-query centroid vectors, float64 LE
//   suggestions.tsv  precomputed suggestion table
// Writes go to a temp file first and are renamed into place; a lock file
// keeps out concurrent writers.

constexpr int kArtifactFormatVersion = 1;

struct ArtifactManifest {
    int format_version = kArtifactFormatVersion;
    std::string created_at;
    std::string source_log_digest;
    std::map<std::string, std::string> file_digests;
    std::string segmenter = "unigram";
    int default_m = 5;
    int default_k = 10;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::string digest_hex(std::string_view bytes);
std::string format_score(double v); // canonical 6-significant-digit form
double round_score(double v);       // nearest double to the canonical form

const char* route_name(SuggestionRoute route);
const char* kind_name(QueryKind kind);

struct TableEntry {
    SuggestionRoute route = SuggestionRoute::graph_direct;
    std::vector<Neighbor> similar;
    std::vector<SuggestionItem> items;
    std::string reason; // set when items is empty: no_coverage | no_candidates | error
};

using SuggestionTable = std::map<std::string, TableEntry>;

// Reason code for an empty item list.
std::string empty_reason(const SuggestionList& list);

// GraphDirect lists for click-existing queries; similar + bridge lists for
// click-absent ones. Per-query failures become empty entries with a reason.
SuggestionTable precompute_suggestions(const Engine& engine,
                                       const std::vector<std::string>& query_keys, std::size_t m,
                                       std::size_t k);

// Machine-readable rendering of one suggestion list:
//   meta<TAB>key<TAB>class<TAB>long_tail<TAB>route<TAB>coverage_warning
//   similar<TAB>rank<TAB>key<TAB>similarity        (bridge route only)
//   graph|bridge<TAB>rank<TAB>key<TAB>score
//   graph|bridge<TAB>0<TAB>-<TAB>reason            (when no items)
std::string render_records(const SuggestionList& list);

// The same list reconstructed from a precomputed table entry, for
// cache-consistency checks and table-backed serving.
SuggestionList list_from_entry(const std::string& key, const TableEntry& entry,
                               const Engine& engine);

ArtifactManifest save_engine(const Engine& engine, const SuggestionTable& table,
                             const std::string& directory,
                             const std::string& source_log_digest);

struct LoadedEngine {
    Engine engine;
    SuggestionTable table;
    ArtifactManifest manifest;
    std::string manifest_digest; // digest of the manifest file itself
};

// Verifies per-file digests and the format version before reconstructing
// the immutable engine state.
LoadedEngine load_engine(const std::string& directory);

} // namespace qsug
