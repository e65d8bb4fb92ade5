#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace stylobf {

// Effective settings for one CLI run. Sources, highest precedence first:
// command-line flags, the --config file, built-in defaults.
struct RunConfig {
  std::string corpus;
  std::string bundle;
  std::string out;
  std::vector<std::size_t> lengths{1, 2, 3, 4};  // V
  std::size_t vocab_cap = 100;                   // L_vocab
  std::size_t top_features = 20;                 // L_obf
  double c = 1.4;
  int ig_steps = 64;
  std::string rank_mode = "signed";
  std::uint64_t seed = 7;
  std::string generator = "fallback";
  int workers = 1;
  double max_changed_fraction = 0.6;
  std::size_t context_window = 64;
  std::array<double, 3> fractions{0.4, 0.4, 0.2};
  int epochs = 50;
  std::vector<std::size_t> hidden{512};
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t lexicon_per_tag = 64;

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {
        "corpus",  "bundle",     "out",    "V",           "L_vocab",       "L_obf",      "c",
        "ig_steps", "rank_mode", "seed",   "generator",   "workers",       "max_changed_fraction",
        "context_window", "fractions", "epochs", "hidden", "learning_rate", "batch_size", "lexicon_per_tag"};
    return k;
  }

  void set(const std::string& key, const std::string& value) {
    try {
      if (key == "corpus") corpus = value;
      else if (key == "bundle") bundle = value;
      else if (key == "out") out = value;
      else if (key == "V") lengths = parse_list<std::size_t>(value);
      else if (key == "L_vocab") vocab_cap = std::stoul(value);
      else if (key == "L_obf") top_features = std::stoul(value);
      else if (key == "c") c = std::stod(value);
      else if (key == "ig_steps") ig_steps = std::stoi(value);
      else if (key == "rank_mode") rank_mode = value;
      else if (key == "seed") seed = std::stoull(value);
      else if (key == "generator") generator = value;
      else if (key == "workers") workers = std::stoi(value);
      else if (key == "max_changed_fraction") max_changed_fraction = std::stod(value);
      else if (key == "context_window") context_window = std::stoul(value);
      else if (key == "fractions") {
        const auto f = parse_list<double>(value);
        if (f.size() != 3) throw Error(ErrorCode::kInvalidArgument, "fractions needs three values");
        fractions = {f[0], f[1], f[2]};
      }
      else if (key == "epochs") epochs = std::stoi(value);
      else if (key == "hidden") hidden = parse_list<std::size_t>(value);
      else if (key == "learning_rate") learning_rate = std::stod(value);
      else if (key == "batch_size") batch_size = std::stoul(value);
      else if (key == "lexicon_per_tag") lexicon_per_tag = std::stoul(value);
      else throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "bad value for '" + key + "': " + value);
    }
  }

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw Error(ErrorCode::kInvalidArgument, field + ": " + why);
    };
    if (lengths.empty()) fail("V", "must be non-empty");
    for (auto l : lengths) {
      if (l < 1 || l > 8) fail("V", "lengths must be in [1, 8]");
    }
    if (vocab_cap < 1) fail("L_vocab", "must be >= 1");
    if (top_features < 1) fail("L_obf", "must be >= 1");
    if (!(c > 0.0 && c <= 10.0)) fail("c", "must be in (0, 10]");
    if (ig_steps < 1 || ig_steps > 4096) fail("ig_steps", "must be in [1, 4096]");
    if (rank_mode != "signed" && rank_mode != "absolute") fail("rank_mode", "must be signed or absolute");
    if (generator != "fallback" && generator != "identity" && !generator.starts_with("remote:")) {
      fail("generator", "must be fallback, identity or remote:<url>");
    }
    if (workers < 1 || workers > 256) fail("workers", "must be in [1, 256]");
    if (!(max_changed_fraction > 0.0 && max_changed_fraction <= 1.0)) fail("max_changed_fraction", "must be in (0, 1]");
    double sum = 0.0;
    for (double f : fractions) {
      if (!(f > 0.0)) fail("fractions", "each fraction must be > 0");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail("fractions", "must sum to 1 (got " + std::to_string(sum) + ")");
    if (epochs < 1) fail("epochs", "must be >= 1");
    if (!(learning_rate > 0.0)) fail("learning_rate", "must be > 0");
    if (batch_size < 1) fail("batch_size", "must be >= 1");
    if (lexicon_per_tag < 1) fail("lexicon_per_tag", "must be >= 1");
  }

  nlohmann::json to_json() const {
    return {{"V", lengths},          {"L_vocab", vocab_cap},  {"L_obf", top_features},
            {"c", c},                {"ig_steps", ig_steps},   {"rank_mode", rank_mode},
            {"seed", seed},          {"generator", generator}, {"workers", workers},
            {"max_changed_fraction", max_changed_fraction},    {"context_window", context_window},
            {"fractions", fractions}, {"epochs", epochs},      {"hidden", hidden},
            {"learning_rate", learning_rate},                  {"batch_size", batch_size},
            {"lexicon_per_tag", lexicon_per_tag}};
  }

 private:
  template <typename T>
  static std::vector<T> parse_list(const std::string& s) {
    std::vector<T> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t[");
      const auto e = item.find_last_not_of(" \t]");
      if (b == std::string::npos) continue;
      item = item.substr(b, e - b + 1);
      if constexpr (std::is_floating_point_v<T>) {
        out.push_back(static_cast<T>(std::stod(item)));
      } else {
        out.push_back(static_cast<T>(std::stoull(item)));
      }
    }
    return out;
  }
};

// Flat "key = value" lines; '#' starts a comment; values may be double-quoted.
inline std::map<std::string, std::string> parse_config_text(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw MalformedRecord(line_no, "expected key = value");
    auto trim = [](std::string s) {
      const auto x = s.find_first_not_of(" \t\r");
      const auto y = s.find_last_not_of(" \t\r");
      s = x == std::string::npos ? "" : s.substr(x, y - x + 1);
      if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
      return s;
    };
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path);
  for (const auto& [k, v] : parse_config_text(in)) cfg.set(k, v);
}

}  // namespace stylobf
