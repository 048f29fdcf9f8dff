#include "adamra/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace adamra {
namespace {

static_assert(std::endian::native == std::endian::little,
              "parameter files are written in native little-endian order");

constexpr std::array<char, 4> kMagic = {'A', 'M', 'R', 'A'};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) throw ConfigError(key + ": expected a count, got '" + text + "'");
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("parameter file truncated");
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv.set(std::move(key), trim(std::string_view(body).substr(eq + 1)));
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void KeyValueConfig::set(std::string key, std::string value) {
  values_[std::move(key)] = std::move(value);
}

void KeyValueConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& KeyValueConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

bool parse_switch(std::string_view text) {
  if (text == "on" || text == "true" || text == "1" || text == "yes") return true;
  if (text == "off" || text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("expected on/off, got '" + std::string(text) + "'");
}

AdamraConfig adamra_config_from(const KeyValueConfig& kv, AdamraConfig cfg,
                                const std::string& prefix) {
  bool rates_set = false;
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind(prefix, 0) != 0) continue;
    const std::string field = key.substr(prefix.size());
    if (field == "d") {
      cfg.d = parse_count(key, value);
    } else if (field == "heads") {
      cfg.heads = parse_count(key, value);
    } else if (field == "subheads") {
      cfg.subheads = parse_count(key, value);
    } else if (field == "c") {
      cfg.rates = parse_rates(value);
      rates_set = true;
    } else if (field == "phi") {
      cfg.phi = parse_feature_map(value);
    } else if (field == "eps") {
      cfg.eps = parse_real(key, value);
    } else if (field == "routing") {
      cfg.routing = parse_routing(value);
    } else if (field == "gate_scaling") {
      cfg.gate_scaling = parse_switch(value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (!rates_set && kv.contains(prefix + "heads") && cfg.rates.size() != cfg.heads) {
    throw ConfigError(prefix + "heads changed without " + prefix + "c");
  }
  cfg.validate();
  return cfg;
}

std::string to_config_text(const AdamraConfig& cfg, const std::string& prefix) {
  std::ostringstream os;
  os << prefix << "d = " << cfg.d << '\n'
     << prefix << "heads = " << cfg.heads << '\n'
     << prefix << "subheads = " << cfg.subheads << '\n'
     << prefix << "c = " << cfg.rates_string() << '\n'
     << prefix << "phi = " << to_string(cfg.phi) << '\n'
     << prefix << "eps = " << cfg.eps << '\n'
     << prefix << "routing = " << to_string(cfg.routing) << '\n'
     << prefix << "gate_scaling = " << (cfg.gate_scaling ? "on" : "off") << '\n';
  return os.str();
}

void write_params(std::ostream& out, const AdamraConfig& cfg, const AdamraParams& p) {
  cfg.validate();
  p.check(cfg);
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kParamFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.d));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.heads));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.subheads));
  for (const auto& c : cfg.rates) {
    put<std::int64_t>(out, c.num);
    put<std::int64_t>(out, c.den);
  }
  p.for_each_block([&out](const std::string&, const Matrix& m) {
    const auto v = m.values();
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  });
  if (!out) throw std::runtime_error("failed writing parameter file");
}

void write_params(const std::filesystem::path& path, const AdamraConfig& cfg,
                  const AdamraParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_params(out, cfg, p);
}

LoadedParams read_params(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("not an AdaMRA parameter file");
  const auto version = take<std::uint32_t>(in);
  if (version != kParamFormatVersion) {
    throw std::runtime_error("unsupported parameter file version " + std::to_string(version));
  }
  LoadedParams loaded;
  AdamraConfig& cfg = loaded.cfg;
  cfg.d = take<std::uint32_t>(in);
  cfg.heads = take<std::uint32_t>(in);
  cfg.subheads = take<std::uint32_t>(in);
  if (cfg.heads > 4096) throw std::runtime_error("implausible head count in parameter file");
  cfg.rates.clear();
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const auto num = take<std::int64_t>(in);
    const auto den = take<std::int64_t>(in);
    cfg.rates.push_back(Rational::make(num, den));
  }
  cfg.validate();
  loaded.params = AdamraParams::zeros(cfg);
  loaded.params.for_each_block([&in](const std::string& name, Matrix& m) {
    auto v = m.values();
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in) throw std::runtime_error("parameter file truncated in block " + name);
  });
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("trailing bytes after parameter blocks");
  }
  return loaded;
}

LoadedParams read_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_params(in);
}

}  // namespace adamra
