#include "hon/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace hon {

namespace {

// Returns {codepoint, length}; length 0 signals a malformed sequence.
std::pair<char32_t, std::size_t> decode_one(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return {b0, 1};
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return {0, 0};
    }
    if (i + len > s.size()) return {0, 0};
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return {0, 0};
        cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong forms, surrogates and out-of-range values.
    static constexpr char32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return {0, 0};
    return {cp, len};
}

}  // namespace

std::optional<std::vector<char32_t>> decode_utf8(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        auto [cp, len] = decode_one(text, i);
        if (len == 0) return std::nullopt;
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode_utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return out;
}

std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    for (char32_t cp : cps) out += encode_utf8(cp);
    return out;
}

std::optional<std::size_t> codepoint_count(std::string_view text) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < text.size(); ++n) {
        auto [cp, len] = decode_one(text, i);
        if (len == 0) return std::nullopt;
        i += len;
    }
    return n;
}

std::string truncate_codepoints(std::string_view text, std::size_t max_codepoints) {
    std::size_t i = 0;
    for (std::size_t n = 0; i < text.size() && n < max_codepoints; ++n) {
        auto [cp, len] = decode_one(text, i);
        i += len == 0 ? 1 : len;
    }
    return std::string(text.substr(0, i));
}

Charset::Charset(std::vector<CodepointRange> ranges) : ranges_(std::move(ranges)) {
    std::sort(ranges_.begin(), ranges_.end(),
              [](const CodepointRange& a, const CodepointRange& b) { return a.lo < b.lo; });
}

std::vector<CodepointRange> Charset::latin_ranges() {
    return {
        {0x20, 0x7E},    // Basic Latin, printable
        {0xC0, 0xD6},    // Latin-1 Supplement letters (skips U+00D7 and U+00F7)
        {0xD8, 0xF6},
        {0xF8, 0xFF},
        {0x100, 0x17F},  // Latin Extended-A
    };
}

std::vector<CodepointRange> Charset::default_emoji_ranges() {
    return {
        {0x200D, 0x200D},    // zero width joiner inside emoji sequences
        {0x2600, 0x26FF},    // misc symbols
        {0x2700, 0x27BF},    // dingbats
        {0xFE0F, 0xFE0F},    // emoji presentation selector
        {0x1F1E6, 0x1F1FF},  // regional indicators
        {0x1F300, 0x1F5FF},  // pictographs
        {0x1F600, 0x1F64F},  // emoticons
        {0x1F680, 0x1F6FF},  // transport and map
        {0x1F900, 0x1F9FF},  // supplemental pictographs
        {0x1FA70, 0x1FAFF},  // extended-A pictographs
    };
}

Charset Charset::latin_and_emoji() {
    auto ranges = latin_ranges();
    auto emoji = default_emoji_ranges();
    ranges.insert(ranges.end(), emoji.begin(), emoji.end());
    return Charset(std::move(ranges));
}

std::vector<CodepointRange> Charset::parse_ranges(std::string_view text) {
    std::vector<CodepointRange> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    auto parse_hex = [&](std::string_view s) -> char32_t {
        std::uint32_t v = 0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v, 16);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || v > 0x10FFFF)
            throw std::invalid_argument("bad codepoint '" + std::string(s) + "' on line " +
                                        std::to_string(lineno));
        return static_cast<char32_t>(v);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto dots = line.find("..");
        CodepointRange r{};
        if (dots == std::string::npos) {
            r.lo = r.hi = parse_hex(line);
        } else {
            r.lo = parse_hex(trim(line.substr(0, dots)));
            r.hi = parse_hex(trim(line.substr(dots + 2)));
        }
        if (r.hi < r.lo)
            throw std::invalid_argument("inverted range on line " + std::to_string(lineno));
        out.push_back(r);
    }
    return out;
}

bool Charset::contains(char32_t cp) const {
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), cp,
                               [](char32_t v, const CodepointRange& r) { return v < r.lo; });
    // Ranges may overlap, so scan back over every range starting at or before cp.
    while (it != ranges_.begin()) {
        --it;
        if (cp <= it->hi) return true;
    }
    return false;
}

bool Charset::accepts(std::string_view text) const {
    auto cps = decode_utf8(text);
    if (!cps) return false;
    return std::all_of(cps->begin(), cps->end(), [this](char32_t cp) { return contains(cp); });
}

std::string Charset::filter(std::string_view text) const {
    std::string out;
    for (std::size_t i = 0; i < text.size();) {
        auto [cp, len] = decode_one(text, i);
        if (len == 0) {
            ++i;
            continue;
        }
        if (contains(cp)) out.append(text.substr(i, len));
        i += len;
    }
    return out;
}

std::string to_lower_ascii(std::string_view text) {
    std::string out(text);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

std::string trim(std::string_view text) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    std::size_t b = 0, e = text.size();
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    return std::string(text.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += c;
    }
    return out;
}

std::string single_line(std::string_view text) {
    std::string out(text);
    for (char& c : out)
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    return out;
}

bool is_zero_width(char32_t cp) {
    switch (cp) {
    case 0x00AD:  // soft hyphen
    case 0x200B:
    case 0x200C:
    case 0x200D:
    case 0x2060:
    case 0xFEFF:
        return true;
    default:
        return false;
    }
}

}  // namespace hon
