#include "qsug/text.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "qsug/error.hpp"

namespace qsug {

std::u32string utf8_decode(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    const auto byte = [&](std::size_t j) { return static_cast<unsigned char>(text[j]); };
    while (i < text.size()) {
        unsigned char b0 = byte(i);
        char32_t cp = 0xFFFD;
        std::size_t len = 1;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0 && i + 1 < text.size() && (byte(i + 1) & 0xC0) == 0x80) {
            cp = (char32_t(b0 & 0x1F) << 6) | (byte(i + 1) & 0x3F);
            len = 2;
            if (cp < 0x80) cp = 0xFFFD; // overlong
        } else if ((b0 & 0xF0) == 0xE0 && i + 2 < text.size() && (byte(i + 1) & 0xC0) == 0x80 &&
                   (byte(i + 2) & 0xC0) == 0x80) {
            cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(byte(i + 1) & 0x3F) << 6) |
                 (byte(i + 2) & 0x3F);
            len = 3;
            if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
        } else if ((b0 & 0xF8) == 0xF0 && i + 3 < text.size() && (byte(i + 1) & 0xC0) == 0x80 &&
                   (byte(i + 2) & 0xC0) == 0x80 && (byte(i + 3) & 0xC0) == 0x80) {
            cp = (char32_t(b0 & 0x07) << 18) | (char32_t(byte(i + 1) & 0x3F) << 12) |
                 (char32_t(byte(i + 2) & 0x3F) << 6) | (byte(i + 3) & 0x3F);
            len = 4;
            if (cp < 0x10000 || cp > 0x10FFFF) cp = 0xFFFD;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

void utf8_append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string utf8_encode(std::u32string_view cps) {
    std::string out;
    out.reserve(cps.size() * 3);
    for (char32_t cp : cps) utf8_append(out, cp);
    return out;
}

char32_t fold_case(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
    // Latin-1 uppercase block, minus the multiplication sign.
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    return cp;
}

bool is_space_cp(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200B;
    }
}

namespace {

struct CpRange {
    char32_t lo, hi;
};

// CJK scripts: Han (incl. extensions and compatibility), kana, bopomofo, hangul.
constexpr std::array<CpRange, 13> kCjkRanges{{
    {0x1100, 0x11FF},   // hangul jamo
    {0x3041, 0x309F},   // hiragana
    {0x30A0, 0x30FF},   // katakana
    {0x3100, 0x312F},   // bopomofo
    {0x3130, 0x318F},   // hangul compatibility jamo
    {0x31F0, 0x31FF},   // katakana phonetic extensions
    {0x3400, 0x4DBF},   // CJK extension A
    {0x4E00, 0x9FFF},   // CJK unified ideographs
    {0xAC00, 0xD7A3},   // hangul syllables
    {0xF900, 0xFAFF},   // CJK compatibility ideographs
    {0x20000, 0x2FA1F}, // CJK extensions B..F + compatibility supplement
    {0x30000, 0x3134F}, // CJK extension G
    {0xFF66, 0xFF9D},   // halfwidth katakana
}};

// Category P* for the blocks that occur in bilingual search logs:
// Basic Latin, Latin-1, General Punctuation, CJK Symbols and Punctuation,
// and the full/halfwidth forms block.
constexpr std::array<CpRange, 27> kPunctRanges{{
    {0x21, 0x23},     // ! " #
    {0x25, 0x2A},     // % & ' ( ) *
    {0x2C, 0x2F},     // , - . /
    {0x3A, 0x3B},     // : ;
    {0x3F, 0x40},     // ? @
    {0x5B, 0x5D},     // [ \ ]
    {0x5F, 0x5F},     // _
    {0x7B, 0x7B},     // {
    {0x7D, 0x7D},     // }
    {0xA1, 0xA1},     // inverted exclamation
    {0xA7, 0xA7},     // section sign
    {0xAB, 0xAB},     // left guillemet
    {0xB6, 0xB7},     // pilcrow, middle dot
    {0xBB, 0xBB},     // right guillemet
    {0xBF, 0xBF},     // inverted question mark
    {0x2010, 0x2027}, // dashes, curly quotes, daggers, bullet, ellipsis
    {0x2030, 0x205E}, // permille .. punctuation of the general block
    {0x3001, 0x3003}, // ideographic comma, full stop, ditto
    {0x3008, 0x3011}, // CJK angle/corner/lenticular brackets
    {0x3014, 0x301F}, // CJK tortoise shell brackets, wave dash, CJK quotes
    {0x3030, 0x3030}, // wavy dash
    {0x303D, 0x303D}, // part alternation mark
    {0xFF01, 0xFF03}, // fullwidth ! " #
    {0xFF05, 0xFF0A}, // fullwidth % .. *
    {0xFF0C, 0xFF0F}, // fullwidth , - . /
    {0xFF1A, 0xFF1B}, // fullwidth : ;
    {0xFF1F, 0xFF20}, // fullwidth ? @
}};

// Ranges above FF20 kept separate so the table stays sorted.
constexpr std::array<CpRange, 4> kPunctRangesHigh{{
    {0xFF3B, 0xFF3D}, // fullwidth [ \ ]
    {0xFF3F, 0xFF3F}, // fullwidth _
    {0xFF5B, 0xFF5B}, // fullwidth {
    {0xFF5D, 0xFF65}, // fullwidth }, CJK halfwidth punctuation
}};

template <std::size_t N>
bool in_ranges(const std::array<CpRange, N>& ranges, char32_t cp) {
    auto it = std::upper_bound(ranges.begin(), ranges.end(), cp,
                               [](char32_t v, const CpRange& r) { return v < r.lo; });
    return it != ranges.begin() && cp <= std::prev(it)->hi;
}

} // namespace

bool is_cjk_cp(char32_t cp) { return in_ranges(kCjkRanges, cp); }

bool is_punct_cp(char32_t cp) {
    return in_ranges(kPunctRanges, cp) || in_ranges(kPunctRangesHigh, cp);
}

void UnigramSegmenter::segment(std::u32string_view run, std::vector<std::string>& out) const {
    for (char32_t cp : run) {
        std::string tok;
        utf8_append(tok, cp);
        out.push_back(std::move(tok));
    }
}

std::shared_ptr<const CjkSegmenter> make_segmenter(const std::string& name) {
    if (name == "unigram") return std::make_shared<UnigramSegmenter>();
    throw Error::data("unknown segmenter: " + name);
}

NormalizedText normalize(std::string_view text, const NormalizeRules& rules) {
    NormalizedText result;
    result.original.assign(text.begin(), text.end());

    std::u32string cps = utf8_decode(text);
    std::vector<std::string> tokens;
    std::string latin;
    std::u32string cjk;

    auto flush_latin = [&] {
        if (!latin.empty()) {
            tokens.push_back(std::move(latin));
            latin.clear();
        }
    };
    auto flush_cjk = [&] {
        if (!cjk.empty()) {
            rules.segmenter->segment(cjk, tokens);
            cjk.clear();
        }
    };

    for (char32_t cp : cps) {
        if (is_space_cp(cp) || rules.is_punct(cp)) {
            flush_latin();
            flush_cjk();
        } else if (is_cjk_cp(cp)) {
            flush_latin();
            cjk.push_back(cp);
        } else {
            flush_cjk();
            utf8_append(latin, fold_case(cp));
        }
    }
    flush_latin();
    flush_cjk();

    for (auto& tok : tokens) {
        if (!tok.empty() && rules.stopwords.count(tok) == 0) {
            result.tokens.push_back(std::move(tok));
        }
    }
    return result;
}

std::string canonical_key(const std::vector<std::string>& tokens) {
    std::string key;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) key.push_back(' ');
        key += tokens[i];
    }
    return key;
}

std::unordered_set<std::string> parse_stopwords(std::string_view content) {
    std::unordered_set<std::string> out;
    std::istringstream in{std::string(content)};
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::u32string cps = utf8_decode(line);
        std::u32string word;
        for (char32_t cp : cps) {
            if (!is_space_cp(cp)) word.push_back(fold_case(cp));
        }
        if (!word.empty()) out.insert(utf8_encode(word));
    }
    return out;
}

std::unordered_set<std::string> load_stopword_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::io("cannot open stop-word file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_stopwords(buf.str());
}

} // namespace qsug
