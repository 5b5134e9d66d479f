#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rankfuse/format.hpp"

// Minimal JSON value tree with a deterministic dump: object members keep
// insertion order and doubles render at 17 significant digits, so identical
// runs emit byte-identical artifacts. Parsing is not handled here (the
// vendored nlohmann library reads inputs; this writer owns the outputs).

namespace rankfuse {

class JsonValue {
public:
    using Array = std::vector<JsonValue>;
    using Object = std::vector<std::pair<std::string, JsonValue>>;

    JsonValue() : value_(nullptr) {}
    JsonValue(std::nullptr_t) : value_(nullptr) {}
    JsonValue(bool b) : value_(b) {}
    JsonValue(double d) : value_(d) {}
    JsonValue(int i) : value_(static_cast<std::int64_t>(i)) {}
    JsonValue(std::int64_t i) : value_(i) {}
    JsonValue(std::uint64_t u) : value_(u) {}
    JsonValue(const char* s) : value_(std::string(s)) {}
    JsonValue(std::string s) : value_(std::move(s)) {}
    JsonValue(Array a) : value_(std::move(a)) {}
    JsonValue(Object o) : value_(std::move(o)) {}

    static JsonValue object() { return JsonValue(Object{}); }
    static JsonValue array() { return JsonValue(Array{}); }

    JsonValue& add(std::string key, JsonValue v) {
        std::get<Object>(value_).emplace_back(std::move(key), std::move(v));
        return *this;
    }

    JsonValue& push(JsonValue v) {
        std::get<Array>(value_).push_back(std::move(v));
        return *this;
    }

    std::string dump(int indent = 2) const {
        std::string out;
        write(out, indent, 0);
        out.push_back('\n');
        return out;
    }

private:
    std::variant<std::nullptr_t, bool, std::int64_t, std::uint64_t, double, std::string, Array, Object> value_;

    static void write_escaped(std::string& out, const std::string& s) {
        out.push_back('"');
        for (unsigned char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\r': out += "\\r"; break;
                case '\t': out += "\\t"; break;
                default:
                    if (c < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        out += buf;
                    } else {
                        out.push_back(static_cast<char>(c));
                    }
            }
        }
        out.push_back('"');
    }

    void write(std::string& out, int indent, int depth) const {
        const std::string pad(static_cast<std::size_t>(indent) * depth, ' ');
        const std::string pad_in(static_cast<std::size_t>(indent) * (depth + 1), ' ');
        switch (value_.index()) {
            case 0: out += "null"; break;
            case 1: out += std::get<bool>(value_) ? "true" : "false"; break;
            case 2: out += std::to_string(std::get<std::int64_t>(value_)); break;
            case 3: out += std::to_string(std::get<std::uint64_t>(value_)); break;
            case 4: out += format_double(std::get<double>(value_)); break;
            case 5: write_escaped(out, std::get<std::string>(value_)); break;
            case 6: {
                const auto& arr = std::get<Array>(value_);
                if (arr.empty()) { out += "[]"; break; }
                out += "[\n";
                for (std::size_t i = 0; i < arr.size(); ++i) {
                    out += pad_in;
                    arr[i].write(out, indent, depth + 1);
                    if (i + 1 < arr.size()) out.push_back(',');
                    out.push_back('\n');
                }
                out += pad + "]";
                break;
            }
            case 7: {
                const auto& obj = std::get<Object>(value_);
                if (obj.empty()) { out += "{}"; break; }
                out += "{\n";
                for (std::size_t i = 0; i < obj.size(); ++i) {
                    out += pad_in;
                    write_escaped(out, obj[i].first);
                    out += ": ";
                    obj[i].second.write(out, indent, depth + 1);
                    if (i + 1 < obj.size()) out.push_back(',');
                    out.push_back('\n');
                }
                out += pad + "}";
                break;
            }
        }
    }
};

}  // namespace rankfuse
