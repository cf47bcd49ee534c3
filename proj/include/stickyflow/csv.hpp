#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stickyflow/brownian.hpp"
#include "stickyflow/sticky.hpp"

namespace stickyflow {

// Shortest-exact decimal formatting ("%.17g" round-trips doubles), so CSV
// output is bitwise reproducible for identical (config, seed).
inline std::string csv_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
      out_ << (i ? "," : "") << header[i];
    out_ << "\n";
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i)
      out_ << (i ? "," : "") << csv_num(values[i]);
    out_ << "\n";
  }

  void row_tagged(const std::string& tag, const std::vector<double>& values) {
    out_ << tag;
    for (double v : values) out_ << "," << csv_num(v);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

inline void write_path_csv(const BrownianPath& path, const std::string& file) {
  CsvWriter w(file, {"t", "W"});
  for (std::size_t i = 0; i < path.values.size(); ++i)
    w.row({path.grid.time(i), path.values[i]});
}

inline void write_sticky_csv(const StickyPath& path, const std::string& file) {
  CsvWriter w(file, {"t", "X", "at_zero", "W"});
  for (std::size_t i = 0; i < path.x.size(); ++i) {
    const double wv =
        path.driver && i < path.driver->values.size() ? path.driver->values[i] : 0.0;
    w.row({path.grid.time(i), path.x[i], static_cast<double>(path.at_zero[i]), wv});
  }
}

}  // namespace stickyflow
