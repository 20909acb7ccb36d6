#include "phonoloc/cli/output.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <system_error>

#include <openssl/evp.h>

namespace phonoloc::cli {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void CsvTable::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw std::logic_error("CSV row width does not match the header");
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    lines_.push_back(std::move(line));
}

std::string CsvTable::render() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i) out += ',';
        out += columns_[i].name;
    }
    out += '\n';
    for (const auto& l : lines_) {
        out += l;
        out += '\n';
    }
    return out;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write to " + tmp + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move " + tmp + " into place");
    }
}

void OutputSet::add_csv(const std::string& name, const CsvTable& table) {
    Json cols = Json::object();
    for (const auto& c : table.columns()) cols[c.name] = c.unit;
    files_.push_back({name, table.render(), cols});
}

void OutputSet::add_json(const std::string& name, const Json& doc) {
    files_.push_back({name, doc.dump(2) + "\n", nullptr});
}

std::vector<std::string> OutputSet::names() const {
    std::vector<std::string> out;
    for (const auto& f : files_) out.push_back(f.name);
    return out;
}

void OutputSet::commit(const std::filesystem::path& dir, Json manifest) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

    Json outputs = Json::array();
    for (const auto& f : files_) {
        write_atomically(dir / f.name, f.content);
        Json entry = {{"file", f.name}, {"bytes", f.content.size()}, {"sha256", sha256_hex(f.content)}};
        if (!f.columns.is_null()) entry["columns"] = f.columns;
        outputs.push_back(entry);
    }
    manifest["outputs"] = outputs;
    write_atomically(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace phonoloc::cli
