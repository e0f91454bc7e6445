#pragma once

// Report emission: JSON and CSV with 17 significant digits and stable field
// order, plus an aligned text summary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace snsm::cli {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Ordered JSON value.  Non-finite numbers are written as null.
class Json {
public:
    using Array = std::vector<Json>;
    using Object = std::vector<std::pair<std::string, Json>>;

    Json() = default;
    Json(std::nullptr_t) {}
    Json(bool b) : v_(b) {}
    Json(double d) : v_(d) {}
    Json(int i) : v_(std::int64_t(i)) {}
    Json(long i) : v_(std::int64_t(i)) {}
    Json(long long i) : v_(std::int64_t(i)) {}
    Json(unsigned long i) : v_(std::uint64_t(i)) {}
    Json(unsigned long long i) : v_(std::uint64_t(i)) {}
    Json(const char* s) : v_(std::string(s)) {}
    Json(std::string s) : v_(std::move(s)) {}

    static Json object() {
        Json j;
        j.v_ = Object{};
        return j;
    }
    static Json array() {
        Json j;
        j.v_ = Array{};
        return j;
    }
    static Json array(const std::vector<double>& xs) {
        Json j = array();
        for (double x : xs) j.push(x);
        return j;
    }

    /// Appends a member; keys keep insertion order.
    Json& set(std::string key, Json value) {
        if (!std::holds_alternative<Object>(v_)) v_ = Object{};
        std::get<Object>(v_).emplace_back(std::move(key), std::move(value));
        return *this;
    }
    Json& push(Json value) {
        if (!std::holds_alternative<Array>(v_)) v_ = Array{};
        std::get<Array>(v_).push_back(std::move(value));
        return *this;
    }

    std::string dump() const {
        std::string out;
        write(out, 0);
        out += "\n";
        return out;
    }

private:
    static void escape(std::string& out, const std::string& s) {
        out += '"';
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", c);
                        out += buf;
                    } else {
                        out += c;
                    }
            }
        }
        out += '"';
    }

    void write(std::string& out, int indent) const {
        const std::string pad(std::size_t(indent + 2), ' '), close(std::size_t(indent), ' ');
        if (std::holds_alternative<std::monostate>(v_)) out += "null";
        else if (auto b = std::get_if<bool>(&v_)) out += *b ? "true" : "false";
        else if (auto d = std::get_if<double>(&v_)) out += std::isfinite(*d) ? fmt17(*d) : "null";
        else if (auto i = std::get_if<std::int64_t>(&v_)) out += std::to_string(*i);
        else if (auto u = std::get_if<std::uint64_t>(&v_)) out += std::to_string(*u);
        else if (auto s = std::get_if<std::string>(&v_)) escape(out, *s);
        else if (auto a = std::get_if<Array>(&v_)) {
            if (a->empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t k = 0; k < a->size(); ++k) {
                out += pad;
                (*a)[k].write(out, indent + 2);
                out += k + 1 < a->size() ? ",\n" : "\n";
            }
            out += close + "]";
        } else if (auto o = std::get_if<Object>(&v_)) {
            if (o->empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            for (std::size_t k = 0; k < o->size(); ++k) {
                out += pad;
                escape(out, (*o)[k].first);
                out += ": ";
                (*o)[k].second.write(out, indent + 2);
                out += k + 1 < o->size() ? ",\n" : "\n";
            }
            out += close + "}";
        }
    }

    std::variant<std::monostate, bool, double, std::int64_t, std::uint64_t, std::string, Array, Object> v_;
};

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    class Row {
    public:
        explicit Row(std::vector<std::string>& cells) : cells_(cells) {}
        Row& operator<<(double v) {
            cells_.push_back(fmt17(v));
            return *this;
        }
        Row& operator<<(int v) {
            cells_.push_back(std::to_string(v));
            return *this;
        }
        Row& operator<<(long v) {
            cells_.push_back(std::to_string(v));
            return *this;
        }
        Row& operator<<(long long v) {
            cells_.push_back(std::to_string(v));
            return *this;
        }
        Row& operator<<(std::size_t v) {
            cells_.push_back(std::to_string(v));
            return *this;
        }
        Row& operator<<(bool v) {
            cells_.push_back(v ? "true" : "false");
            return *this;
        }
        Row& operator<<(const std::string& v) {
            cells_.push_back(v);
            return *this;
        }
        Row& operator<<(const char* v) {
            cells_.push_back(v);
            return *this;
        }

    private:
        std::vector<std::string>& cells_;
    };

    Row row() {
        rows_.emplace_back();
        return Row(rows_.back());
    }

    const std::vector<std::string>& header() const noexcept { return header_; }
    std::size_t size() const noexcept { return rows_.size(); }

    std::string str() const {
        for (const auto& r : rows_)
            if (r.size() != header_.size()) throw std::logic_error("CSV row width differs from the header");
        std::string out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t k = 0; k < cells.size(); ++k) out += (k ? "," : "") + cells[k];
            out += "\n";
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Two-column aligned text.
class TextSummary {
public:
    void add(std::string label, std::string value) { lines_.emplace_back(std::move(label), std::move(value)); }
    void add(std::string label, double value) { add(std::move(label), fmt17(value)); }
    std::string str() const {
        std::size_t w = 0;
        for (const auto& [l, v] : lines_) w = std::max(w, l.size());
        std::string out;
        for (const auto& [l, v] : lines_) out += l + std::string(w - l.size() + 2, ' ') + v + "\n";
        return out;
    }

private:
    std::vector<std::pair<std::string, std::string>> lines_;
};

/// One named report; each part becomes its own file.
struct Report {
    std::string name;
    std::optional<Json> json;
    std::vector<std::pair<std::string, CsvTable>> tables;  // file stem, table
    std::optional<TextSummary> text;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
    if (!f) throw std::runtime_error("cannot write " + path.string());
}

/// Writes every report under `dir` and returns the file names in write order.
inline std::vector<std::string> emit_reports(const std::vector<Report>& reports, const std::filesystem::path& dir) {
    std::vector<std::string> files;
    if (reports.empty()) return files;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
    for (const auto& r : reports) {
        if (r.json) {
            write_file(dir / (r.name + ".json"), r.json->dump());
            files.push_back(r.name + ".json");
        }
        for (const auto& [stem, table] : r.tables) {
            write_file(dir / (stem + ".csv"), table.str());
            files.push_back(stem + ".csv");
        }
        if (r.text) {
            write_file(dir / (r.name + ".txt"), r.text->str());
            files.push_back(r.name + ".txt");
        }
    }
    return files;
}

inline constexpr const char* artifact_version = "1.0.0";

struct RunManifest {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string subcommand;
    std::string version = artifact_version;
    double wall_clock_seconds = 0.0;
    std::vector<std::string> files;

    /// The wall-clock field is last, on its own line.
    Json to_json() const {
        Json j = Json::object();
        j.set("config_hash", config_hash);
        j.set("seed", seed);
        j.set("subcommand", subcommand);
        j.set("version", version);
        Json f = Json::array();
        for (const auto& s : files) f.push(s);
        j.set("files", f);
        j.set("wall_clock_seconds", wall_clock_seconds);
        return j;
    }
};

}  // namespace snsm::cli
