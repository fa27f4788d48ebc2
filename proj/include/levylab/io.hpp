#pragma once

// Output plumbing: full-precision CSV emission with a self-describing header
// (config hash + root seed), and the FNV-1a digest used as the config hash.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace levylab {

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::string& config_hash, std::uint64_t root_seed,
              const std::vector<std::string>& columns)
        : out_(path), n_cols_(columns.size()) {
        if (!out_) throw std::runtime_error("CsvWriter: cannot open '" + path + "'");
        out_ << "# config_hash=" << config_hash << " root_seed=" << root_seed << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i) {
            out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
        }
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != n_cols_) throw std::runtime_error("CsvWriter: wrong cell count");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
        }
    }

  private:
    std::ofstream out_;
    std::size_t n_cols_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_file: cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace levylab
