#pragma once

// Benchmark configuration: a strict JSON schema with every key optional but
// none unknown. Files are parsed by a small scanner that remembers the line
// of every key so that schema violations point at the offending line, e.g.
//
//   config.json:14: we.walker_per_bin: unknown key
//   config.json:9: propagator.dt: expected a number > 0

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wesbench/bench/formats.hpp"
#include "wesbench/metrics.hpp"
#include "wesbench/potentials.hpp"
#include "wesbench/propagate.hpp"
#include "wesbench/tica.hpp"
#include "wesbench/we.hpp"

namespace wesbench {

// --- JSON with line provenance -------------------------------------------

namespace detail {

struct LocatedJson {
  ordered_json root;
  // JSON-pointer-style path ("/we/walkers_per_bin") -> 1-based line of the
  // key (or of the value, for the root).
  std::map<std::string, int> lines;
  std::string file;
};

inline std::string pointer_escape(const std::string& key) {
  std::string out;
  for (const char c : key) {
    if (c == '~')
      out += "~0";
    else if (c == '/')
      out += "~1";
    else
      out += c;
  }
  return out;
}

class LocatedParser {
public:
  LocatedParser(const std::string& text, std::string file)
      : text_(text), file_(std::move(file)) {}

  LocatedJson run() {
    LocatedJson doc;
    doc.file = file_;
    skip_ws();
    doc.lines[""] = line_;
    doc.root = parse_value("", doc);
    skip_ws();
    if (pos_ != text_.size())
      fail("trailing content after JSON value");
    return doc;
  }

private:
  ordered_json parse_value(const std::string& path, LocatedJson& doc) {
    skip_ws();
    if (pos_ >= text_.size())
      fail("unexpected end of input");
    const char c = text_[pos_];
    switch (c) {
    case '{':
      return parse_object(path, doc);
    case '[':
      return parse_array(path, doc);
    case '"':
      return ordered_json(parse_string());
    case 't':
      expect_word("true");
      return ordered_json(true);
    case 'f':
      expect_word("false");
      return ordered_json(false);
    case 'n':
      expect_word("null");
      return ordered_json(nullptr);
    default:
      if (c == '-' || (c >= '0' && c <= '9'))
        return parse_number();
      fail(std::string("unexpected character '") + c + "'");
    }
  }

  ordered_json parse_object(const std::string& path, LocatedJson& doc) {
    ++pos_; // '{'
    ordered_json obj = ordered_json::object();
    skip_ws();
    if (peek() == '}') {
      ++pos_;
      return obj;
    }
    while (true) {
      skip_ws();
      if (peek() != '"')
        fail("expected a quoted key");
      const int key_line = line_;
      const std::string key = parse_string();
      const std::string child = path + "/" + pointer_escape(key);
      if (obj.contains(key))
        fail("duplicate key \"" + key + "\"", key_line);
      doc.lines[child] = key_line;
      skip_ws();
      if (peek() != ':')
        fail("expected ':' after key");
      ++pos_;
      obj[key] = parse_value(child, doc);
      skip_ws();
      const char c = peek();
      if (c == ',') {
        ++pos_;
        continue;
      }
      if (c == '}') {
        ++pos_;
        return obj;
      }
      fail("expected ',' or '}' in object");
    }
  }

  ordered_json parse_array(const std::string& path, LocatedJson& doc) {
    ++pos_; // '['
    ordered_json arr = ordered_json::array();
    skip_ws();
    if (peek() == ']') {
      ++pos_;
      return arr;
    }
    std::size_t index = 0;
    while (true) {
      skip_ws();
      const std::string child = path + "/" + std::to_string(index);
      doc.lines[child] = line_;
      arr.push_back(parse_value(child, doc));
      ++index;
      skip_ws();
      const char c = peek();
      if (c == ',') {
        ++pos_;
        continue;
      }
      if (c == ']') {
        ++pos_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  std::string parse_string() {
    ++pos_; // opening quote
    std::string out;
    while (true) {
      if (pos_ >= text_.size())
        fail("unterminated string");
      const char c = text_[pos_++];
      if (c == '"')
        return out;
      if (c == '\n')
        fail("raw newline in string");
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos_ >= text_.size())
        fail("unterminated escape");
      const char e = text_[pos_++];
      switch (e) {
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      case '/': out += '/'; break;
      case 'b': out += '\b'; break;
      case 'f': out += '\f'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case 't': out += '\t'; break;
      case 'u': {
        std::uint32_t cp = parse_hex4();
        if (cp >= 0xD800 && cp <= 0xDBFF) { // high surrogate
          if (pos_ + 1 >= text_.size() || text_[pos_] != '\\' ||
              text_[pos_ + 1] != 'u')
            fail("unpaired surrogate escape");
          pos_ += 2;
          const std::uint32_t low = parse_hex4();
          if (low < 0xDC00 || low > 0xDFFF)
            fail("invalid low surrogate");
          cp = 0x10000 + ((cp - 0xD800) << 10) + (low - 0xDC00);
        } else if (cp >= 0xDC00 && cp <= 0xDFFF) {
          fail("unpaired surrogate escape");
        }
        append_utf8(out, cp);
        break;
      }
      default:
        fail(std::string("invalid escape '\\") + e + "'");
      }
    }
  }

  std::uint32_t parse_hex4() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      if (pos_ >= text_.size())
        fail("unterminated \\u escape");
      const char c = text_[pos_++];
      v <<= 4;
      if (c >= '0' && c <= '9')
        v |= static_cast<std::uint32_t>(c - '0');
      else if (c >= 'a' && c <= 'f')
        v |= static_cast<std::uint32_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F')
        v |= static_cast<std::uint32_t>(c - 'A' + 10);
      else
        fail("invalid hex digit in \\u escape");
    }
    return v;
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  ordered_json parse_number() {
    const std::size_t begin = pos_;
    if (peek() == '-')
      ++pos_;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9')
      ++pos_;
    bool integral = true;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      integral = false;
      ++pos_;
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9')
        ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      integral = false;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-'))
        ++pos_;
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9')
        ++pos_;
    }
    const std::string token = text_.substr(begin, pos_ - begin);
    try {
      if (integral) {
        if (token[0] == '-')
          return ordered_json(static_cast<std::int64_t>(std::stoll(token)));
        return ordered_json(static_cast<std::uint64_t>(std::stoull(token)));
      }
      return ordered_json(std::stod(token));
    } catch (const std::exception&) {
      fail("number \"" + token + "\" out of range");
    }
  }

  void expect_word(const char* word) {
    for (const char* p = word; *p; ++p) {
      if (pos_ >= text_.size() || text_[pos_] != *p)
        fail(std::string("invalid token (expected \"") + word + "\")");
      ++pos_;
    }
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(const std::string& msg) const { fail(msg, line_); }
  [[noreturn]] void fail(const std::string& msg, int line) const {
    throw ConfigError(file_ + ":" + std::to_string(line) + ": " + msg);
  }

  const std::string& text_;
  std::string file_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

inline LocatedJson parse_located(const std::filesystem::path& path) {
  const std::string text = slurp(path);
  return LocatedParser(text, path.filename().string()).run();
}

/// Typed, line-anchored access to one object of a LocatedJson document.
class Section {
public:
  Section(const LocatedJson& doc, const ordered_json* node, std::string path,
          std::string label)
      : doc_(doc), node_(node), path_(std::move(path)),
        label_(std::move(label)) {}

  bool present() const { return node_ != nullptr; }
  bool has(const char* key) const {
    return node_ && node_->contains(key);
  }

  /// Rejects keys outside the allowed set, pointing at the key's line.
  void allow_only(std::initializer_list<const char*> allowed) const {
    if (!node_)
      return;
    for (const auto& item : node_->items()) {
      bool ok = false;
      for (const char* a : allowed)
        if (item.key() == a) {
          ok = true;
          break;
        }
      if (!ok)
        fail(item.key(), "unknown key");
    }
  }

  Section object(const char* key) const {
    if (!has(key))
      return Section(doc_, nullptr, path_ + "/" + pointer_escape(key),
                     join(key));
    const ordered_json& child = (*node_)[key];
    if (!child.is_object())
      fail(key, "expected an object");
    return Section(doc_, &child, path_ + "/" + pointer_escape(key), join(key));
  }

  double number(const char* key, double def) const {
    if (!has(key))
      return def;
    const ordered_json& v = (*node_)[key];
    if (!v.is_number())
      fail(key, "expected a number");
    return v.get<double>();
  }

  double positive_number(const char* key, double def) const {
    const double v = number(key, def);
    if (!(v > 0.0) || !std::isfinite(v))
      fail(key, "expected a number > 0");
    return v;
  }

  double nonneg_number(const char* key, double def) const {
    const double v = number(key, def);
    if (!(v >= 0.0) || !std::isfinite(v))
      fail(key, "expected a number >= 0");
    return v;
  }

  int integer(const char* key, int def) const {
    if (!has(key))
      return def;
    const ordered_json& v = (*node_)[key];
    if (!v.is_number_integer())
      fail(key, "expected an integer");
    const std::int64_t raw = v.get<std::int64_t>();
    if (raw < INT32_MIN || raw > INT32_MAX)
      fail(key, "integer out of range");
    return static_cast<int>(raw);
  }

  int positive_integer(const char* key, int def) const {
    const int v = integer(key, def);
    if (v <= 0)
      fail(key, "expected an integer > 0");
    return v;
  }

  int nonneg_integer(const char* key, int def) const {
    const int v = integer(key, def);
    if (v < 0)
      fail(key, "expected an integer >= 0");
    return v;
  }

  std::uint64_t u64(const char* key, std::uint64_t def) const {
    if (!has(key))
      return def;
    const ordered_json& v = (*node_)[key];
    if (v.is_number_unsigned())
      return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    fail(key, "expected a non-negative integer");
  }

  bool boolean(const char* key, bool def) const {
    if (!has(key))
      return def;
    const ordered_json& v = (*node_)[key];
    if (!v.is_boolean())
      fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string str(const char* key, std::string def) const {
    if (!has(key))
      return def;
    const ordered_json& v = (*node_)[key];
    if (!v.is_string())
      fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> number_array(const char* key) const {
    std::vector<double> out;
    if (!has(key))
      return out;
    const ordered_json& v = (*node_)[key];
    if (!v.is_array())
      fail(key, "expected an array of numbers");
    for (const auto& x : v) {
      if (!x.is_number())
        fail(key, "expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<std::pair<int, int>> pair_array(const char* key) const {
    std::vector<std::pair<int, int>> out;
    if (!has(key))
      return out;
    const ordered_json& v = (*node_)[key];
    if (!v.is_array())
      fail(key, "expected an array of [i, j] pairs");
    for (const auto& p : v) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() ||
          !p[1].is_number_integer())
        fail(key, "expected an array of [i, j] pairs");
      out.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const std::string child = path_ + "/" + pointer_escape(key);
    auto it = doc_.lines.find(child);
    if (it == doc_.lines.end())
      it = doc_.lines.find(path_);
    const int line = it == doc_.lines.end() ? 1 : it->second;
    throw ConfigError(doc_.file + ":" + std::to_string(line) + ": " +
                      join(key) + ": " + msg);
  }

  [[noreturn]] void fail_here(const std::string& msg) const {
    auto it = doc_.lines.find(path_);
    const int line = it == doc_.lines.end() ? 1 : it->second;
    throw ConfigError(doc_.file + ":" + std::to_string(line) + ": " +
                      (label_.empty() ? msg : label_ + ": " + msg));
  }

private:
  std::string join(const std::string& key) const {
    return label_.empty() ? key : label_ + "." + key;
  }

  const LocatedJson& doc_;
  const ordered_json* node_;
  std::string path_;
  std::string label_;
};

} // namespace detail

// --- The benchmark configuration -----------------------------------------

struct ReferenceConfig {
  int n_starts = 4;
  int segments_each = 250;
};

struct TicaConfig {
  int lag = 10;
  int n_components = 4;
  FeatureSpec features; // kind defaults by system dimensionality
};

struct WeSettings {
  int walkers_per_bin = 3;
  int max_iterations = 200;
  int bins_per_dim = 7;
  int pcoord_dims = 2;
  bool bottleneck_bins = true;
  double coverage_target = 0.0; // 0 disables early stopping
  int coverage_check_interval = 10;
};

struct MsmSettings {
  int grid_n = 80;
  int lag = 1;
};

struct MacrostateSettings {
  int n_clusters = 100;
  int n_macrostates = 5;
};

struct MetricSettings {
  int coverage_grid = 100;
  int histogram_bins = 100;
  double kl_epsilon = 1e-12;
  WeightSource weighting_mode = WeightSource::WE_WEIGHTED;
};

struct BenchmarkConfig {
  PotentialSpec system;
  std::vector<double> start; // flattened start coordinates (empty = default)
  PropagatorConfig propagator;
  ReferenceConfig reference;
  TicaConfig tica;
  WeSettings we;
  MsmSettings msm;
  MacrostateSettings macrostates;
  MetricSettings metrics;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
};

inline Conformation start_conformation(const BenchmarkConfig& cfg) {
  if (cfg.start.empty())
    return default_start(cfg.system);
  check_size(cfg.system, cfg.start.size());
  Conformation c;
  c.dims = cfg.system.dims();
  c.positions.reserve(cfg.start.size());
  for (const double x : cfg.start)
    c.positions.push_back(static_cast<float>(x));
  return c;
}

inline WeightSource weight_source_from_string(const std::string& s,
                                              const detail::Section& where,
                                              const char* key) {
  if (s == "we_weighted")
    return WeightSource::WE_WEIGHTED;
  if (s == "msm_reweighted")
    return WeightSource::MSM_REWEIGHTED;
  if (s == "raw_unweighted")
    return WeightSource::RAW_UNWEIGHTED;
  where.fail(key, "expected one of \"we_weighted\", \"msm_reweighted\", "
                  "\"raw_unweighted\"");
}

namespace detail {

inline PotentialKind potential_kind_from_string(const std::string& s,
                                                const Section& where,
                                                const char* key) {
  if (s == "double_well_2d")
    return PotentialKind::DOUBLE_WELL_2D;
  if (s == "mueller_brown_2d")
    return PotentialKind::MUELLER_BROWN_2D;
  if (s == "cg_chain_3d")
    return PotentialKind::CG_CHAIN_3D;
  where.fail(key, "expected one of \"double_well_2d\", \"mueller_brown_2d\", "
                  "\"cg_chain_3d\"");
}

inline void load_system(const Section& sec, BenchmarkConfig& cfg) {
  sec.allow_only({"kind", "temperature", "start", "double_well", "chain"});
  if (!sec.has("kind"))
    sec.fail_here("missing required key \"kind\"");
  cfg.system.kind =
      potential_kind_from_string(sec.str("kind", ""), sec, "kind");
  cfg.system.temperature =
      sec.positive_number("temperature", cfg.system.temperature);
  cfg.start = sec.number_array("start");

  const Section dw = sec.object("double_well");
  dw.allow_only({"a", "b"});
  if (dw.present() && cfg.system.kind != PotentialKind::DOUBLE_WELL_2D)
    sec.fail("double_well", "parameters for a different system kind");
  cfg.system.double_well.a = dw.positive_number("a", cfg.system.double_well.a);
  cfg.system.double_well.b = dw.positive_number("b", cfg.system.double_well.b);

  const Section chain = sec.object("chain");
  chain.allow_only({"n_beads", "bond_k", "bond_r0", "angle_k", "angle_theta0",
                    "dihedral_k", "excluded_epsilon", "excluded_sigma"});
  if (chain.present() && cfg.system.kind != PotentialKind::CG_CHAIN_3D)
    sec.fail("chain", "parameters for a different system kind");
  ChainParams& cp = cfg.system.chain;
  cp.n_beads = chain.positive_integer("n_beads", cp.n_beads);
  cp.bond_k = chain.positive_number("bond_k", cp.bond_k);
  cp.bond_r0 = chain.positive_number("bond_r0", cp.bond_r0);
  cp.angle_k = chain.positive_number("angle_k", cp.angle_k);
  cp.angle_theta0 = chain.positive_number("angle_theta0", cp.angle_theta0);
  cp.dihedral_k = chain.positive_number("dihedral_k", cp.dihedral_k);
  cp.excluded_epsilon =
      chain.positive_number("excluded_epsilon", cp.excluded_epsilon);
  cp.excluded_sigma =
      chain.positive_number("excluded_sigma", cp.excluded_sigma);
}

inline void load_propagator(const Section& sec, BenchmarkConfig& cfg) {
  sec.allow_only(
      {"steps_per_segment", "save_interval", "dt", "friction", "kT"});
  PropagatorConfig& p = cfg.propagator;
  p.steps_per_segment =
      sec.positive_integer("steps_per_segment", p.steps_per_segment);
  p.save_interval = sec.positive_integer("save_interval", p.save_interval);
  p.dt = sec.positive_number("dt", p.dt);
  p.friction = sec.positive_number("friction", p.friction);
  // The noise temperature follows the system temperature unless pinned.
  p.kT = sec.nonneg_number("kT", cfg.system.temperature);
  if (p.steps_per_segment % p.save_interval != 0)
    sec.fail_here("steps_per_segment must be a multiple of save_interval");
}

inline void load_tica(const Section& sec, BenchmarkConfig& cfg) {
  sec.allow_only({"lag", "n_components", "featurization", "pair_list"});
  cfg.tica.lag = sec.positive_integer("lag", cfg.tica.lag);
  cfg.tica.n_components =
      sec.positive_integer("n_components", cfg.tica.n_components);
  if (sec.has("featurization")) {
    const std::string s = sec.str("featurization", "");
    if (s == "raw_coords_2d")
      cfg.tica.features.kind = FeatureKind::RAW_COORDS_2D;
    else if (s == "pairwise_distances")
      cfg.tica.features.kind = FeatureKind::PAIRWISE_DISTANCES;
    else
      sec.fail("featurization", "expected \"raw_coords_2d\" or "
                                "\"pairwise_distances\"");
  } else {
    cfg.tica.features.kind = cfg.system.dims() == 2
                                 ? FeatureKind::RAW_COORDS_2D
                                 : FeatureKind::PAIRWISE_DISTANCES;
  }
  cfg.tica.features.pair_list = sec.pair_array("pair_list");
  for (const auto& p : cfg.tica.features.pair_list)
    if (p.first < 0 || p.second < 0 || p.first == p.second ||
        p.first >= cfg.system.n_particles() ||
        p.second >= cfg.system.n_particles())
      sec.fail("pair_list", "pair indices must be distinct particle indices");
}

inline void load_we(const Section& sec, BenchmarkConfig& cfg) {
  sec.allow_only({"walkers_per_bin", "max_iterations", "bins_per_dim",
                  "pcoord_dims", "bottleneck_bins", "coverage_target",
                  "coverage_check_interval"});
  WeSettings& w = cfg.we;
  w.walkers_per_bin = sec.positive_integer("walkers_per_bin", w.walkers_per_bin);
  w.max_iterations = sec.nonneg_integer("max_iterations", w.max_iterations);
  w.bins_per_dim = sec.positive_integer("bins_per_dim", w.bins_per_dim);
  w.pcoord_dims = sec.positive_integer("pcoord_dims", w.pcoord_dims);
  w.bottleneck_bins = sec.boolean("bottleneck_bins", w.bottleneck_bins);
  w.coverage_target = sec.nonneg_number("coverage_target", w.coverage_target);
  if (w.coverage_target > 100.0)
    sec.fail("coverage_target", "expected a percentage in [0, 100]");
  w.coverage_check_interval =
      sec.positive_integer("coverage_check_interval", w.coverage_check_interval);
  if (w.pcoord_dims > cfg.tica.n_components)
    sec.fail_here("pcoord_dims cannot exceed tica.n_components");
}

inline void load_reference(const Section& sec, BenchmarkConfig& cfg) {
  sec.allow_only({"n_starts", "segments_each"});
  cfg.reference.n_starts =
      sec.positive_integer("n_starts", cfg.reference.n_starts);
  cfg.reference.segments_each =
      sec.positive_integer("segments_each", cfg.reference.segments_each);
}

inline void load_msm(const Section& sec, BenchmarkConfig& cfg) {
  sec.allow_only({"grid_n", "lag"});
  cfg.msm.grid_n = sec.positive_integer("grid_n", cfg.msm.grid_n);
  cfg.msm.lag = sec.positive_integer("lag", cfg.msm.lag);
}

inline void load_macrostates(const Section& sec, BenchmarkConfig& cfg) {
  sec.allow_only({"n_clusters", "n_macrostates"});
  cfg.macrostates.n_clusters =
      sec.positive_integer("n_clusters", cfg.macrostates.n_clusters);
  cfg.macrostates.n_macrostates =
      sec.positive_integer("n_macrostates", cfg.macrostates.n_macrostates);
  if (cfg.macrostates.n_macrostates > cfg.macrostates.n_clusters)
    sec.fail_here("n_macrostates cannot exceed n_clusters");
}

inline void load_metrics(const Section& sec, BenchmarkConfig& cfg) {
  sec.allow_only(
      {"coverage_grid", "histogram_bins", "kl_epsilon", "weighting_mode"});
  MetricSettings& m = cfg.metrics;
  m.coverage_grid = sec.positive_integer("coverage_grid", m.coverage_grid);
  m.histogram_bins = sec.positive_integer("histogram_bins", m.histogram_bins);
  m.kl_epsilon = sec.positive_number("kl_epsilon", m.kl_epsilon);
  if (sec.has("weighting_mode"))
    m.weighting_mode = weight_source_from_string(
        sec.str("weighting_mode", ""), sec, "weighting_mode");
}

} // namespace detail

/// Loads and validates a config file; any violation raises ConfigError with
/// a file:line anchor.
inline BenchmarkConfig load_config(const std::filesystem::path& path) {
  const detail::LocatedJson doc = detail::parse_located(path);
  if (!doc.root.is_object())
    throw ConfigError(doc.file + ":1: top-level value must be an object");
  const detail::Section top(doc, &doc.root, "", "");
  top.allow_only({"system", "propagator", "reference", "tica", "we", "msm",
                  "macrostates", "metrics", "seed", "output_dir"});
  BenchmarkConfig cfg;
  const detail::Section system = top.object("system");
  if (!system.present())
    top.fail_here("missing required section \"system\"");
  detail::load_system(system, cfg);
  detail::load_propagator(top.object("propagator"), cfg);
  detail::load_tica(top.object("tica"), cfg);
  detail::load_we(top.object("we"), cfg);
  detail::load_reference(top.object("reference"), cfg);
  detail::load_msm(top.object("msm"), cfg);
  detail::load_macrostates(top.object("macrostates"), cfg);
  detail::load_metrics(top.object("metrics"), cfg);
  cfg.seed = top.u64("seed", cfg.seed);
  cfg.output_dir = top.str("output_dir", cfg.output_dir);
  cfg.propagator.potential = cfg.system;
  cfg.propagator.seed_base = cfg.seed;
  validate(cfg.system);
  validate(cfg.propagator);
  if (!cfg.start.empty())
    start_conformation(cfg); // shape check
  return cfg;
}

/// Hash over every setting that shapes WE trajectories — everything except
/// max_iterations, the benchmark-stage sections, and output paths — plus the
/// TICA model file bytes. Used to decide whether a checkpoint may resume.
inline std::string we_config_hash(const BenchmarkConfig& cfg,
                                  const std::string& tica_model_bytes) {
  ordered_json j;
  j["kind"] = to_string(cfg.system.kind);
  j["temperature"] = cfg.system.temperature;
  j["double_well"] = {cfg.system.double_well.a, cfg.system.double_well.b};
  j["chain"] = {cfg.system.chain.n_beads,        cfg.system.chain.bond_k,
                cfg.system.chain.bond_r0,        cfg.system.chain.angle_k,
                cfg.system.chain.angle_theta0,   cfg.system.chain.dihedral_k,
                cfg.system.chain.excluded_epsilon,
                cfg.system.chain.excluded_sigma};
  j["start"] = cfg.start;
  j["propagator"] = {cfg.propagator.steps_per_segment,
                     cfg.propagator.save_interval, cfg.propagator.dt,
                     cfg.propagator.friction, cfg.propagator.kT};
  j["we"] = {cfg.we.walkers_per_bin, cfg.we.bins_per_dim, cfg.we.pcoord_dims,
             cfg.we.bottleneck_bins, cfg.we.coverage_target,
             cfg.we.coverage_check_interval};
  j["seed"] = cfg.seed;
  const std::string canon = j.dump();
  std::uint64_t h = 1469598103934665603ull; // FNV-1a
  for (const char c : canon)
    h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
  for (const char c : tica_model_bytes)
    h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

} // namespace wesbench
