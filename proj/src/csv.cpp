#include "superdiff/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sdiff {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& name, std::size_t line, const std::string& what) {
    throw CsvError(name + ": row " + std::to_string(line) + ": " + what);
}

void parse_stamp(const std::string& body, CsvTable& t) {
    std::istringstream in(body);
    std::string tok;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
        if (key == "config_hash") {
            t.stamp.config_hash = value;
            t.has_stamp = true;
        } else if (key == "seed") {
            t.stamp.seed = std::strtoull(value.c_str(), nullptr, 10);
        } else {
            t.stamp.extra[key] = value;
        }
    }
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw CsvError("missing column '" + name + "'");
}

std::vector<double> CsvTable::values(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_text(const CsvTable& t) {
    std::ostringstream out;
    out << "# config_hash=" << t.stamp.config_hash << " seed=" << t.stamp.seed;
    for (const auto& [k, v] : t.stamp.extra) out << ' ' << k << '=' << v;
    out << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& r : t.rows) {
        if (r.size() != t.columns.size()) throw CsvError("row width does not match the header");
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_number(r[i]);
        out << '\n';
    }
    return out.str();
}

void write_csv(const std::string& path, const CsvTable& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CsvError("cannot open '" + path + "' for writing");
    out << csv_text(t);
    if (!out) throw CsvError("failed writing '" + path + "'");
}

CsvTable parse_csv(const std::string& text, const std::string& name, const std::vector<std::string>& expected) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line[0] == '#') {
            if (!header) parse_stamp(line.substr(1), t);
            continue;
        }
        const auto cells = split(line, ',');
        if (!header) {
            for (const auto& c : cells) t.columns.push_back(trim(c));
            if (!expected.empty() && t.columns != expected) {
                std::string want;
                for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
                fail(name, lineno, "header does not match the declared columns (" + want + ")");
            }
            header = true;
            continue;
        }
        if (cells.size() != t.columns.size())
            fail(name, lineno, "expected " + std::to_string(t.columns.size()) + " fields, found " + std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string c = trim(cells[i]);
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (c.empty() || end == c.c_str() || *end != '\0')
                fail(name, lineno, "non-numeric value '" + c + "' in column '" + t.columns[i] + "'");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (!header) fail(name, lineno == 0 ? 1 : lineno, "missing header line");
    return t;
}

CsvTable read_csv(const std::string& path, const std::vector<std::string>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), path, expected);
}

}  // namespace sdiff
