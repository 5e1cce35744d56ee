#pragma once

// String helpers shared by the readers and writers. Not part of the public API.

#include <string>
#include <string_view>
#include <vector>

#include <boost/tokenizer.hpp>

namespace symco::text {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Splits one CSV record, honouring double-quoted fields.
inline std::vector<std::string> split_csv(const std::string& line) {
    using Sep = boost::escaped_list_separator<char>;
    boost::tokenizer<Sep> tok(line, Sep('\\', ',', '"'));
    std::vector<std::string> out;
    for (const auto& field : tok) out.emplace_back(trim(field));
    return out;
}

inline std::string quote_csv(std::string_view field) {
    if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace symco::text
