#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "adamra/adamra.hpp"
#include "adamra/config.hpp"

namespace adamra {

// Flat `dotted.key = value` text; `#` starts a comment. Later assignments
// override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(std::string key, std::string value);
  // Accepts "key=value"; throws ConfigError otherwise.
  void set_assignment(std::string_view assignment);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;

  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

bool parse_switch(std::string_view text);  // on/off, true/false, 1/0

// Reads `adamra.*` keys over the defaults in `base`. Unknown `adamra.*` keys
// are rejected.
AdamraConfig adamra_config_from(const KeyValueConfig& kv, AdamraConfig base = {},
                                 const std::string& prefix = "adamra.");
std::string to_config_text(const AdamraConfig& cfg, const std::string& prefix = "adamra.");

// Binary parameter file: "AMRA" magic, u32 version, u32 d, u32 H, u32 S,
// H × (i64 num, i64 den) rates, then every block's doubles row-major in
// declaration order. Little-endian.
inline constexpr std::uint32_t kParamFormatVersion = 1;

void write_params(std::ostream& out, const AdamraConfig& cfg, const AdamraParams& p);
void write_params(const std::filesystem::path& path, const AdamraConfig& cfg,
                  const AdamraParams& p);

struct LoadedParams {
  AdamraConfig cfg;  // d, heads, subheads and rates from the header
  AdamraParams params;
};
LoadedParams read_params(std::istream& in);
LoadedParams read_params(const std::filesystem::path& path);

}  // namespace adamra
