#pragma once
// UTF-8 helpers. All character offsets in this codebase are Unicode scalar
// value (code point) offsets, never byte offsets. Invalid bytes are treated
// as one code point each so that malformed input never aborts a pipeline.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace entmark::utf8 {

// Byte length of the code point starting at s[pos] (1..4; 1 for invalid bytes).
inline size_t seq_len(std::string_view s, size_t pos) {
    unsigned char b = static_cast<unsigned char>(s[pos]);
    size_t n = 1;
    if ((b & 0xE0) == 0xC0)
        n = 2;
    else if ((b & 0xF0) == 0xE0)
        n = 3;
    else if ((b & 0xF8) == 0xF0)
        n = 4;
    if (pos + n > s.size()) return 1;
    for (size_t i = 1; i < n; ++i) {
        if ((static_cast<unsigned char>(s[pos + i]) & 0xC0) != 0x80) return 1;
    }
    return n;
}

inline size_t cp_count(std::string_view s) {
    size_t pos = 0, n = 0;
    while (pos < s.size()) {
        pos += seq_len(s, pos);
        ++n;
    }
    return n;
}

// Byte offset of code point `cp_index`, clamped to s.size().
inline size_t byte_of_cp(std::string_view s, size_t cp_index) {
    size_t pos = 0, n = 0;
    while (pos < s.size() && n < cp_index) {
        pos += seq_len(s, pos);
        ++n;
    }
    return pos;
}

inline std::string_view cp_slice(std::string_view s, size_t cp_start, size_t cp_end) {
    if (cp_end <= cp_start) return std::string_view{};
    size_t b0 = byte_of_cp(s, cp_start);
    size_t b1 = byte_of_cp(s, cp_end);
    return s.substr(b0, b1 - b0);
}

inline std::vector<char32_t> decode(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    size_t pos = 0;
    while (pos < s.size()) {
        size_t n = seq_len(s, pos);
        unsigned char b = static_cast<unsigned char>(s[pos]);
        char32_t cp;
        if (n == 1) {
            cp = b;
        } else {
            cp = b & (0x7F >> n);
            for (size_t i = 1; i < n; ++i)
                cp = (cp << 6) | (static_cast<unsigned char>(s[pos + i]) & 0x3F);
        }
        out.push_back(cp);
        pos += n;
    }
    return out;
}

// ASCII-only lower casing; multi-byte sequences pass through untouched.
inline std::string ascii_fold(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

} // namespace entmark::utf8
