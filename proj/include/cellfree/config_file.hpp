#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cellfree::config {

// Minimal TOML-compatible key-value format: [section] headers, dotted keys,
// numbers, booleans, quoted strings and (nested) arrays, '#' comments. Keys
// are flattened to "section.key".
struct Value {
    enum class Kind { integer, real, boolean, string, array };

    Kind kind = Kind::real;
    std::int64_t i = 0;
    double d = 0.0;
    bool b = false;
    std::string s;
    std::vector<Value> arr;

    double as_double() const;
    std::int64_t as_int() const;
    std::uint64_t as_uint() const;
    bool as_bool() const;
    const std::string& as_string() const;
    const std::vector<Value>& as_array() const;

    static Value of(double x);
    static Value of(std::int64_t x);
    static Value of(bool x);
    static Value of(std::string x);
    static Value of(std::vector<Value> x);
};

using Table = std::map<std::string, Value>;

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

Table parse(std::string_view text);
Table parse_file(const std::string& path);

// Single value in the same syntax ("3.5e9", "[1, 2]", "\"ring\"", "true").
// A token that parses as nothing else is taken as a bare string.
Value parse_value_lenient(std::string_view text);

// Stable, reloadable rendering (keys sorted, full precision numbers).
std::string serialize(const Table& table);

}  // namespace cellfree::config
