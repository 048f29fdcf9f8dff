#include "adamra/smat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace adamra::bench {
namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::string& column, std::size_t row) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("smat csv row " + std::to_string(row) + ": bad " + column +
                                " value '" + s + "'");
  }
  return v;
}

std::vector<double> normalized_column(const std::vector<double>& xs, const char* name) {
  try {
    return minmax_norm(xs);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument(std::string("smat: column '") + name +
                                "' is constant, min-max scaling is undefined");
  }
}

}  // namespace

std::vector<double> minmax_norm(const std::vector<double>& xs) {
  if (xs.size() < 2) throw std::invalid_argument("minmax_norm: need at least 2 values");
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  const double min = *lo;
  const double range = *hi - min;
  if (!(range > 0.0)) throw std::invalid_argument("minmax_norm: constant list");
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back((x - min) / range);
  return out;
}

std::vector<SmatScore> smat(const std::vector<SmatRecord>& records) {
  if (records.size() < 2) throw std::invalid_argument("smat: need at least 2 records");
  std::vector<double> speed, mem, acc;
  for (const auto& r : records) {
    if (!(r.speed > 0.0) || !(r.mem_mb > 0.0) || !(r.acc > 0.0)) {
      throw std::invalid_argument("smat: record '" + r.model + "' has a non-positive value");
    }
    speed.push_back(r.speed);
    mem.push_back(r.mem_mb);
    acc.push_back(r.acc);
  }
  const auto s = normalized_column(speed, "speed");
  const auto m = normalized_column(mem, "mem_mb");
  const auto a = normalized_column(acc, "acc");
  std::vector<SmatScore> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back({records[i], s[i], m[i], a[i], s[i] + (1.0 - m[i]) + a[i]});
  }
  return out;
}

std::vector<SmatRecord> read_smat_csv(std::istream& in) {
  std::string line;
  while (std::getline(in, line) && trim(line).empty()) {
  }
  if (trim(line).empty()) throw std::invalid_argument("smat csv: missing header");
  const auto header = split_csv(line);
  auto column = [&header](std::initializer_list<const char*> names) -> std::size_t {
    for (const char* name : names) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
    }
    throw std::invalid_argument(std::string("smat csv: missing column '") + *names.begin() + "'");
  };
  const std::size_t c_model = column({"model"});
  const std::size_t c_speed = column({"speed"});
  const std::size_t c_mem = column({"mem_mb", "mem"});
  const std::size_t c_acc = column({"acc"});

  std::vector<SmatRecord> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("smat csv row " + std::to_string(row) + ": expected " +
                                  std::to_string(header.size()) + " fields");
    }
    out.push_back({cells[c_model], parse_number(cells[c_speed], "speed", row),
                   parse_number(cells[c_mem], "mem_mb", row),
                   parse_number(cells[c_acc], "acc", row)});
  }
  return out;
}

std::vector<SmatRecord> read_smat_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_smat_csv(in);
}

void write_smat_csv(std::ostream& out, const std::vector<SmatScore>& scores) {
  out << "model,speed,mem_mb,acc,s_norm,m_norm,acc_norm,smat\n";
  for (const auto& s : scores) {
    out << s.record.model << ',' << fmt6(s.record.speed) << ',' << fmt6(s.record.mem_mb) << ','
        << fmt6(s.record.acc) << ',' << fmt6(s.s_norm) << ',' << fmt6(s.m_norm) << ','
        << fmt6(s.acc_norm) << ',' << fmt6(s.smat) << '\n';
  }
}

}  // namespace adamra::bench
