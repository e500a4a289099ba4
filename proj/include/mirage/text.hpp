#pragma once
// Small string utilities: the normalization used for entity identity,
// whitespace handling, and a byte-level tokenizer for overlap scoring.

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace mirage {

// Lowercases ASCII letters and collapses whitespace runs to single spaces,
// trimming both ends. Bytes >= 0x80 pass through untouched, so multi-byte
// UTF-8 sequences survive unchanged.
inline std::string norm_key(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (c < 0x80 && std::isspace(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

// Tokens are maximal runs of alphanumeric ASCII or bytes >= 0x80, taken from
// the normalized form of the input. Punctuation separates tokens.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::string normed = norm_key(text);
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : normed) {
        bool word_byte = c >= 0x80 || std::isalnum(c);
        if (word_byte) {
            cur.push_back(static_cast<char>(c));
        } else if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

}  // namespace mirage
