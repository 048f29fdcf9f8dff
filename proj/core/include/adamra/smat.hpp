#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace adamra::bench {

struct SmatRecord {
  std::string model;
  double speed = 0.0;   // examples per second
  double mem_mb = 0.0;  // peak memory
  double acc = 0.0;
};

struct SmatScore {
  SmatRecord record;
  double s_norm = 0.0;
  double m_norm = 0.0;
  double acc_norm = 0.0;
  double smat = 0.0;
};

// (x - min) / (max - min). Throws std::invalid_argument for fewer than two
// values or a constant list.
std::vector<double> minmax_norm(const std::vector<double>& xs);

// speed_norm + (1 - mem_norm) + acc_norm per record, in input order. A
// constant column is rejected with its name in the message.
std::vector<SmatScore> smat(const std::vector<SmatRecord>& records);

// Reads `model,speed,mem_mb,acc` (header required; the memory column may
// also be called `mem`). Extra columns are ignored.
std::vector<SmatRecord> read_smat_csv(std::istream& in);
std::vector<SmatRecord> read_smat_csv(const std::filesystem::path& path);

// `model,speed,mem_mb,acc,s_norm,m_norm,acc_norm,smat`.
void write_smat_csv(std::ostream& out, const std::vector<SmatScore>& scores);

}  // namespace adamra::bench
