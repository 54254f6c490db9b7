#include "cellfree/config_file.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cellfree::config {

namespace {

struct Cursor {
    std::string_view text;
    std::size_t pos = 0;
    int line = 1;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    char take() {
        const char c = text[pos++];
        if (c == '\n') ++line;
        return c;
    }
    void skip_ws_inline() {
        while (!done() && (peek() == ' ' || peek() == '\t')) ++pos;
    }
    void skip_ws_and_comments() {
        while (!done()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                take();
            } else if (c == '#') {
                while (!done() && peek() != '\n') ++pos;
            } else {
                break;
            }
        }
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("config parse error at line " + std::to_string(line) + ": " + msg);
    }
};

bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

std::string parse_key(Cursor& cur) {
    std::string key;
    while (!cur.done() && is_bare_key_char(cur.peek())) key.push_back(cur.take());
    if (key.empty()) cur.fail("expected a key");
    return key;
}

std::string parse_quoted(Cursor& cur) {
    cur.take();  // opening quote
    std::string out;
    while (true) {
        if (cur.done()) cur.fail("unterminated string");
        const char c = cur.take();
        if (c == '"') break;
        if (c == '\\') {
            if (cur.done()) cur.fail("unterminated escape");
            const char e = cur.take();
            switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default: cur.fail("unsupported escape sequence");
            }
        } else {
            out.push_back(c);
        }
    }
    return out;
}

Value parse_scalar_token(Cursor& cur, const std::string& token) {
    if (token == "true") return Value::of(true);
    if (token == "false") return Value::of(false);

    std::int64_t iv = 0;
    auto ir = std::from_chars(token.data(), token.data() + token.size(), iv);
    if (ir.ec == std::errc() && ir.ptr == token.data() + token.size()) return Value::of(iv);

    double dv = 0.0;
    auto dr = std::from_chars(token.data(), token.data() + token.size(), dv);
    if (dr.ec == std::errc() && dr.ptr == token.data() + token.size()) return Value::of(dv);

    cur.fail("cannot parse value '" + token + "'");
}

Value parse_rhs(Cursor& cur) {
    cur.skip_ws_inline();
    if (cur.done()) cur.fail("missing value");
    const char c = cur.peek();
    if (c == '"') return Value::of(parse_quoted(cur));
    if (c == '[') {
        cur.take();
        std::vector<Value> items;
        while (true) {
            cur.skip_ws_and_comments();
            if (cur.done()) cur.fail("unterminated array");
            if (cur.peek() == ']') {
                cur.take();
                break;
            }
            items.push_back(parse_rhs(cur));
            cur.skip_ws_and_comments();
            if (!cur.done() && cur.peek() == ',') cur.take();
        }
        return Value::of(std::move(items));
    }
    std::string token;
    while (!cur.done()) {
        const char ch = cur.peek();
        if (ch == ',' || ch == ']' || ch == '#' || ch == '\n' || ch == '\r' || ch == ' ' ||
            ch == '\t')
            break;
        token.push_back(cur.take());
    }
    if (token.empty()) cur.fail("missing value");
    return parse_scalar_token(cur, token);
}

void render_value(std::ostringstream& os, const Value& v) {
    switch (v.kind) {
        case Value::Kind::integer: os << v.i; break;
        case Value::Kind::real: {
            char buf[64];
            auto r = std::to_chars(buf, buf + sizeof(buf), v.d, std::chars_format::general);
            os.write(buf, r.ptr - buf);
            // keep reload type stable: a real must not read back as integer
            const std::string_view written(buf, static_cast<std::size_t>(r.ptr - buf));
            if (written.find('.') == std::string_view::npos &&
                written.find('e') == std::string_view::npos &&
                written.find("inf") == std::string_view::npos &&
                written.find("nan") == std::string_view::npos)
                os << ".0";
            break;
        }
        case Value::Kind::boolean: os << (v.b ? "true" : "false"); break;
        case Value::Kind::string: os << '"' << v.s << '"'; break;
        case Value::Kind::array: {
            os << '[';
            for (std::size_t i = 0; i < v.arr.size(); ++i) {
                if (i) os << ", ";
                render_value(os, v.arr[i]);
            }
            os << ']';
            break;
        }
    }
}

}  // namespace

double Value::as_double() const {
    if (kind == Kind::real) return d;
    if (kind == Kind::integer) return static_cast<double>(i);
    throw ParseError("expected a number");
}

std::int64_t Value::as_int() const {
    if (kind == Kind::integer) return i;
    if (kind == Kind::real && d == std::floor(d)) return static_cast<std::int64_t>(d);
    throw ParseError("expected an integer");
}

std::uint64_t Value::as_uint() const {
    const std::int64_t v = as_int();
    if (v < 0) throw ParseError("expected a nonnegative integer");
    return static_cast<std::uint64_t>(v);
}

bool Value::as_bool() const {
    if (kind == Kind::boolean) return b;
    throw ParseError("expected true or false");
}

const std::string& Value::as_string() const {
    if (kind == Kind::string) return s;
    throw ParseError("expected a string");
}

const std::vector<Value>& Value::as_array() const {
    if (kind == Kind::array) return arr;
    throw ParseError("expected an array");
}

Value Value::of(double x) {
    Value v;
    v.kind = Kind::real;
    v.d = x;
    return v;
}
Value Value::of(std::int64_t x) {
    Value v;
    v.kind = Kind::integer;
    v.i = x;
    return v;
}
Value Value::of(bool x) {
    Value v;
    v.kind = Kind::boolean;
    v.b = x;
    return v;
}
Value Value::of(std::string x) {
    Value v;
    v.kind = Kind::string;
    v.s = std::move(x);
    return v;
}
Value Value::of(std::vector<Value> x) {
    Value v;
    v.kind = Kind::array;
    v.arr = std::move(x);
    return v;
}

Table parse(std::string_view text) {
    Table table;
    Cursor cur{text};
    std::string section;
    while (true) {
        cur.skip_ws_and_comments();
        if (cur.done()) break;
        if (cur.peek() == '[') {
            cur.take();
            cur.skip_ws_inline();
            section = parse_key(cur);
            cur.skip_ws_inline();
            if (cur.done() || cur.peek() != ']') cur.fail("expected ']' after section name");
            cur.take();
            continue;
        }
        const std::string key = parse_key(cur);
        cur.skip_ws_inline();
        if (cur.done() || cur.peek() != '=') cur.fail("expected '=' after key '" + key + "'");
        cur.take();
        Value value = parse_rhs(cur);
        cur.skip_ws_inline();
        if (!cur.done() && cur.peek() != '\n' && cur.peek() != '\r' && cur.peek() != '#')
            cur.fail("trailing characters after value for key '" + key + "'");
        const std::string full = section.empty() ? key : section + "." + key;
        table[full] = std::move(value);
    }
    return table;
}

Table parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

Value parse_value_lenient(std::string_view text) {
    Cursor cur{text};
    cur.skip_ws_inline();
    try {
        Value v = parse_rhs(cur);
        cur.skip_ws_inline();
        if (!cur.done()) return Value::of(std::string(text));
        return v;
    } catch (const ParseError&) {
        return Value::of(std::string(text));
    }
}

std::string serialize(const Table& table) {
    std::ostringstream os;
    // bare keys first so a later section header cannot capture them on reload
    for (const auto& [key, value] : table) {
        if (key.find('.') != std::string::npos) continue;
        os << key << " = ";
        render_value(os, value);
        os << '\n';
    }
    std::string open_section;
    bool first = true;
    for (const auto& [key, value] : table) {
        const auto dot = key.rfind('.');
        if (dot == std::string::npos) continue;
        const std::string section = key.substr(0, dot);
        if (section != open_section || first) {
            if (!os.str().empty()) os << '\n';
            os << '[' << section << "]\n";
            open_section = section;
            first = false;
        }
        os << key.substr(dot + 1) << " = ";
        render_value(os, value);
        os << '\n';
    }
    return os.str();
}

}  // namespace cellfree::config
