#pragma once

// Minimal CSV writer/reader for the scenario outputs. Lines starting with
// '#' are comments; fields never contain commas or quotes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace deorbit::io {

/// Shortest decimal text that parses back to the same double.
std::string num(double v);
std::string num(std::int64_t v);
std::string num(std::uint64_t v);
inline std::string num(int v) { return num(static_cast<std::int64_t>(v)); }

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    void comment(const std::string& text);
    void row(const std::vector<std::string>& cells);
    void close();

private:
    std::ofstream out_;
    std::size_t columns_;
    std::filesystem::path path_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;

    std::size_t column(const std::string& name) const;
    double number(std::size_t row, const std::string& name) const;
    const std::string& text(std::size_t row, const std::string& name) const;
    std::vector<double> numbers(const std::string& name) const;
    /// Value of a "# key = value" comment line.
    std::string meta(const std::string& key) const;
};

CsvTable read_csv(const std::filesystem::path& path);

double parse_double(const std::string& text);

}  // namespace deorbit::io
