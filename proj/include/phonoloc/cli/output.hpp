#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "phonoloc/cli/config.hpp"

namespace phonoloc::cli {

/// Shortest decimal text that reads back to the same double.
std::string format_number(double x);

struct Column {
    std::string name;
    std::string unit;  // recorded in the manifest; "" for dimensionless
};

class CsvTable {
public:
    explicit CsvTable(std::vector<Column> columns) : columns_(std::move(columns)) {}

    void row(const std::vector<std::string>& cells);
    const std::vector<Column>& columns() const { return columns_; }
    std::string render() const;

private:
    std::vector<Column> columns_;
    std::vector<std::string> lines_;
};

std::string sha256_hex(const std::string& bytes);

/// Result files of one run, held in memory until commit() writes them and
/// the manifest in one go.
class OutputSet {
public:
    void add_csv(const std::string& name, const CsvTable& table);
    void add_json(const std::string& name, const Json& doc);

    /// Creates `dir`, writes every file through a temporary plus rename, then
    /// writes manifest.json listing each file with its sha256. `manifest`
    /// supplies the run metadata; the "outputs" entry is filled in here.
    void commit(const std::filesystem::path& dir, Json manifest) const;

    std::vector<std::string> names() const;

private:
    struct File {
        std::string name;
        std::string content;
        Json columns;
    };
    std::vector<File> files_;
};

void write_atomically(const std::filesystem::path& path, const std::string& content);

}  // namespace phonoloc::cli
