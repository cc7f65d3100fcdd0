#pragma once

#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stopsim/arrivals.hpp"

namespace stopsim::report {

// Shortest decimal that scans back to the same double.
inline std::string fmt_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_double_sig(double v, int sig) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", sig, v);
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// CSV with the resolved configuration echoed on a leading comment line, so
// a result file identifies the run that produced it.
inline void write_csv(std::ostream& os, const Table& table, const nlohmann::json& config) {
  os << "# config " << config.dump() << "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    os << table.header[i] << (i + 1 < table.header.size() ? "," : "");
  }
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << row[i] << (i + 1 < row.size() ? "," : "");
    }
    os << "\n";
  }
}

// debugging dump of one arrival sequence
inline void write_sequence_csv(std::ostream& os, const arrivals::ArrivalSequence& seq) {
  os << "time,value\n";
  for (const auto& e : seq.entries) {
    os << fmt_double(e.time) << "," << fmt_double(e.value) << "\n";
  }
}

inline void write_json(std::ostream& os, const Table& table, const nlohmann::json& config) {
  nlohmann::json out;
  out["config"] = config;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json r;
    for (std::size_t i = 0; i < row.size() && i < table.header.size(); ++i) {
      char* end = nullptr;
      const double v = std::strtod(row[i].c_str(), &end);
      if (end && *end == '\0' && end != row[i].c_str()) r[table.header[i]] = v;
      else r[table.header[i]] = row[i];
    }
    rows.push_back(std::move(r));
  }
  out["rows"] = std::move(rows);
  os << out.dump(2) << "\n";
}

}  // namespace stopsim::report
