#pragma once

// Report formatting: 12-significant-digit floats, CSV assembly, file output.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "lrd/errors.hpp"

namespace lrd {

inline std::string format_g12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Round a double through its 12-significant-digit decimal form, so emitted
// JSON numbers survive a parse round-trip bit-exactly.
inline double round_g12(double v) {
    return std::stod(format_g12(v));
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_string() const {
        std::string out;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out += ',';
            out += header[i];
        }
        out += '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += ',';
                out += row[i];
            }
            out += '\n';
        }
        return out;
    }
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("write_text_file: cannot open " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw io_error("write_text_file: write failed for " + path);
}

}  // namespace lrd
