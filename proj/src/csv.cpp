#include "deorbit/csv.hpp"

#include <charconv>
#include <limits>
#include <stdexcept>
#include <system_error>

namespace deorbit::io {

std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string num(std::int64_t v) { return std::to_string(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }

double parse_double(const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || first == last) {
        throw std::invalid_argument("not a number: '" + text + "'");
    }
    return v;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()), path_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row(header);
}

void CsvWriter::comment(const std::string& text) { out_ << "# " << text << '\n'; }

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) {
        throw std::logic_error(path_.string() + ": row has " + std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(columns_));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

void CsvWriter::close() {
    out_.close();
    if (!out_) throw std::runtime_error("failed writing " + path_.string());
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    CsvTable t;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            t.comments.push_back(trim(line.substr(1)));
            continue;
        }
        auto cells = split(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
        } else {
            if (cells.size() != t.header.size()) {
                throw std::runtime_error(path.string() + ": ragged row " + std::to_string(t.rows.size() + 1));
            }
            t.rows.push_back(std::move(cells));
        }
    }
    if (t.header.empty()) throw std::runtime_error(path.string() + ": missing header");
    return t;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw std::out_of_range("no column '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
    return parse_double(rows.at(row).at(column(name)));
}

const std::string& CsvTable::text(std::size_t row, const std::string& name) const {
    return rows.at(row).at(column(name));
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c].empty() ? std::numeric_limits<double>::quiet_NaN() : parse_double(r[c]));
    return out;
}

std::string CsvTable::meta(const std::string& key) const {
    for (const auto& c : comments) {
        const auto eq = c.find('=');
        if (eq != std::string::npos && trim(c.substr(0, eq)) == key) return trim(c.substr(eq + 1));
    }
    throw std::out_of_range("no '" + key + "' summary line");
}

}  // namespace deorbit::io
