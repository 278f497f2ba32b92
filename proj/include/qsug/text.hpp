#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace qsug {

// UTF-8 <-> code point helpers. Invalid byte sequences decode to U+FFFD
// one byte at a time, so normalization never throws on dirty log lines.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view cps);
void utf8_append(std::string& out, char32_t cp);

char32_t fold_case(char32_t cp); // ASCII + Latin-1 lowering, identity elsewhere
bool is_space_cp(char32_t cp);
bool is_cjk_cp(char32_t cp);
bool is_punct_cp(char32_t cp); // default punctuation set, see text.cpp for the block table

// Splits one contiguous run of CJK code points into tokens.
class CjkSegmenter {
public:
    virtual ~CjkSegmenter() = default;
    virtual void segment(std::u32string_view run, std::vector<std::string>& out) const = 0;
    virtual std::string name() const = 0;
};

// Default segmenter: every CJK code point becomes its own token.
class UnigramSegmenter final : public CjkSegmenter {
public:
    void segment(std::u32string_view run, std::vector<std::string>& out) const override;
    std::string name() const override { return "unigram"; }
};

std::shared_ptr<const CjkSegmenter> make_segmenter(const std::string& name);

struct NormalizeRules {
    std::unordered_set<std::string> stopwords;
    std::unordered_set<char32_t> extra_punctuation;
    std::shared_ptr<const CjkSegmenter> segmenter = std::make_shared<UnigramSegmenter>();

    bool is_punct(char32_t cp) const {
        return is_punct_cp(cp) || extra_punctuation.count(cp) > 0;
    }
};

struct NormalizedText {
    std::string original;
    std::vector<std::string> tokens;
};

// Lowercases, strips punctuation and stop words, splits Latin runs on
// whitespace and hands contiguous CJK runs to the segmenter. A text that
// normalizes to nothing yields an empty token list.
NormalizedText normalize(std::string_view text, const NormalizeRules& rules);

// Canonical query/document identity: normalized tokens joined by single spaces.
std::string canonical_key(const std::vector<std::string>& tokens);

// One token per line, '#' starts a comment, entries are case-folded.
std::unordered_set<std::string> load_stopword_file(const std::string& path);
std::unordered_set<std::string> parse_stopwords(std::string_view content);

} // namespace qsug
