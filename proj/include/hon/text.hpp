#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hon {

// Minimal UTF-8 helpers. Invalid sequences decode to nullopt so callers can
// treat malformed input as a charset violation instead of guessing.
std::optional<std::vector<char32_t>> decode_utf8(std::string_view text);
std::string encode_utf8(char32_t cp);
std::string encode_utf8(const std::vector<char32_t>& cps);

// Number of codepoints, or nullopt for malformed UTF-8.
std::optional<std::size_t> codepoint_count(std::string_view text);

// Longest prefix holding at most `max_codepoints` codepoints. Never splits a
// multi-byte sequence; malformed bytes count as one codepoint each.
std::string truncate_codepoints(std::string_view text, std::size_t max_codepoints);

struct CodepointRange {
    char32_t lo;
    char32_t hi;
};

// Whitelist of inclusive codepoint ranges.
class Charset {
public:
    Charset() = default;
    explicit Charset(std::vector<CodepointRange> ranges);

    // Basic Latin printable, Latin-1 Supplement letters, Latin Extended-A and
    // the built-in emoji blocks.
    static Charset latin_and_emoji();
    static std::vector<CodepointRange> latin_ranges();
    static std::vector<CodepointRange> default_emoji_ranges();
    // One range per line: "1F300..1F5FF" or a single "200D"; '#' starts a comment.
    static std::vector<CodepointRange> parse_ranges(std::string_view text);

    bool contains(char32_t cp) const;
    bool accepts(std::string_view text) const;
    // Drops every codepoint outside the whitelist (and malformed bytes).
    std::string filter(std::string_view text) const;

    bool empty() const { return ranges_.empty(); }
    const std::vector<CodepointRange>& ranges() const { return ranges_; }

private:
    std::vector<CodepointRange> ranges_;
};

std::string to_lower_ascii(std::string_view text);
std::string trim(std::string_view text);
// Collapses runs of ASCII whitespace into one space and trims the ends.
std::string collapse_whitespace(std::string_view text);
// Replaces CR/LF/TAB with spaces so the value fits on one line.
std::string single_line(std::string_view text);
bool is_zero_width(char32_t cp);

}  // namespace hon
