#pragma once

// Field snapshot format (flat little-endian float64 per tensor component
// plus a JSON sidecar header) and deterministic CSV output.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lagfix/errors.hpp"
#include "lagfix/grid.hpp"

namespace lagfix {

static_assert(std::endian::native == std::endian::little,
              "snapshot format is little-endian; big-endian hosts are not supported");

// one file per tensor component: <base>.c<idx>.f64 (row-major doubles) and
// <base>.c<idx>.json (d, n, L, rank, component index, time)
inline void write_field_snapshot(const Field& f, const std::filesystem::path& dir, const std::string& base,
                                 double time) {
    std::filesystem::create_directories(dir);
    for (int c = 0; c < f.ncomp(); ++c) {
        const std::string stem = base + ".c" + std::to_string(c);
        {
            std::ofstream out(dir / (stem + ".f64"), std::ios::binary);
            if (!out) throw std::runtime_error("write_field_snapshot: cannot open " + stem + ".f64");
            out.write(reinterpret_cast<const char*>(f.comp(c).data()),
                      static_cast<std::streamsize>(f.comp(c).size() * sizeof(double)));
        }
        nlohmann::json hdr;
        hdr["version"] = 1;
        hdr["d"] = f.grid().d;
        hdr["n"] = f.grid().n;
        hdr["L"] = f.grid().L;
        hdr["rank"] = f.rank();
        hdr["symmetric"] = f.symmetric();
        hdr["component"] = c;
        hdr["time"] = time;
        std::ofstream out(dir / (stem + ".json"));
        out << hdr.dump(2) << "\n";
    }
}

inline Field read_field_snapshot(const std::filesystem::path& dir, const std::string& base,
                                 double* time_out = nullptr) {
    const std::filesystem::path hdr0 = dir / (base + ".c0.json");
    std::ifstream in(hdr0);
    if (!in) throw std::runtime_error("read_field_snapshot: missing " + hdr0.string());
    nlohmann::json hdr = nlohmann::json::parse(in);
    GridSpec g(hdr.at("d").get<int>(), hdr.at("n").get<int>(), hdr.at("L").get<double>());
    Field f(g, hdr.at("rank").get<int>(), hdr.value("symmetric", false));
    if (time_out) *time_out = hdr.value("time", 0.0);
    for (int c = 0; c < f.ncomp(); ++c) {
        const std::string stem = base + ".c" + std::to_string(c);
        std::ifstream data(dir / (stem + ".f64"), std::ios::binary);
        if (!data) throw std::runtime_error("read_field_snapshot: missing " + stem + ".f64");
        data.read(reinterpret_cast<char*>(f.comp(c).data()),
                  static_cast<std::streamsize>(f.comp(c).size() * sizeof(double)));
        if (data.gcount() != static_cast<std::streamsize>(f.comp(c).size() * sizeof(double)))
            throw std::runtime_error("read_field_snapshot: truncated " + stem + ".f64");
    }
    return f;
}

// fixed %.17g formatting so identical runs produce bit-identical files
inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) {
        std::filesystem::create_directories(path.parent_path());
        out_.open(path);
        if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

}  // namespace lagfix
