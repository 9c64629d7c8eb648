#include "fdt/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "fdt/io.hpp"

namespace fdt {

RoiMethod parse_roi_method(const std::string& s) {
  if (s == "align") return RoiMethod::Align;
  if (s == "pool") return RoiMethod::Pool;
  throw ConfigError("unknown RoI method '" + s + "' (expected align or pool)");
}

std::string to_string(RoiMethod m) { return m == RoiMethod::Align ? "align" : "pool"; }

NetworkSpec RunConfig::network_spec(int branches) const {
  NetworkSpec spec = NetworkSpec::make(variant, branches);
  spec.roi_method = roi;
  spec.head_init_std = track.head_init_std;
  return spec;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double to_double(const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("expected a number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("expected an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& v) {
  const long long x = to_integer(v);
  if (x < -2147483647LL || x > 2147483647LL) throw ConfigError("integer out of range: " + v);
  return static_cast<int>(x);
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto dbl = [&t](const std::string& key, auto member) {
      t[key] = [member](RunConfig& c, const std::string& v) { member(c) = to_double(v); };
    };
    auto integer = [&t](const std::string& key, auto member) {
      t[key] = [member](RunConfig& c, const std::string& v) { member(c) = to_int(v); };
    };

    // Tracking.
    dbl("track.m", [](RunConfig& c) -> double& { return c.track.score_threshold; });
    dbl("track.l", [](RunConfig& c) -> double& { return c.track.loss_threshold; });
    integer("track.max_update_iters", [](RunConfig& c) -> int& { return c.track.max_update_iters; });
    integer("track.first_frame_max_iters", [](RunConfig& c) -> int& { return c.track.first_frame_max_iters; });
    dbl("track.lr_first", [](RunConfig& c) -> double& { return c.track.lr_first; });
    dbl("track.lr_online", [](RunConfig& c) -> double& { return c.track.lr_online; });
    dbl("track.weight_decay", [](RunConfig& c) -> double& { return c.track.weight_decay; });
    dbl("track.momentum", [](RunConfig& c) -> double& { return c.track.momentum; });
    t["track.policy"] = [](RunConfig& c, const std::string& v) {
      try {
        c.track.policy = parse_policy(v);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    };
    integer("track.candidates", [](RunConfig& c) -> int& { return c.track.candidates; });
    dbl("track.candidate_trans", [](RunConfig& c) -> double& { return c.track.candidate_jitter.trans_factor; });
    dbl("track.candidate_scale_std", [](RunConfig& c) -> double& { return c.track.candidate_jitter.scale_std; });
    integer("track.first_positives", [](RunConfig& c) -> int& { return c.track.first_positives; });
    integer("track.first_negatives", [](RunConfig& c) -> int& { return c.track.first_negatives; });
    integer("track.online_positives", [](RunConfig& c) -> int& { return c.track.online_positives; });
    integer("track.online_negatives", [](RunConfig& c) -> int& { return c.track.online_negatives; });
    t["track.buffer_capacity"] = [](RunConfig& c, const std::string& v) {
      const int n = to_int(v);
      if (n < 1) throw ConfigError("track.buffer_capacity must be >= 1");
      c.track.buffer_capacity = static_cast<std::size_t>(n);
    };
    integer("track.batch_positives", [](RunConfig& c) -> int& { return c.track.batch_positives; });
    integer("track.negative_pool", [](RunConfig& c) -> int& { return c.track.negative_pool; });
    integer("track.hard_negatives", [](RunConfig& c) -> int& { return c.track.hard_negatives; });
    t["track.bbox_regression"] = [](RunConfig& c, const std::string& v) { c.track.bbox_regression = to_bool(v); };
    dbl("track.regression_lambda", [](RunConfig& c) -> double& { return c.track.regression.ridge_lambda; });
    integer("track.regression_samples", [](RunConfig& c) -> int& { return c.track.regression_samples; });
    dbl("track.head_init_std", [](RunConfig& c) -> double& { return c.track.head_init_std; });
    dbl("track.t1", [](RunConfig& c) -> double& { return c.track.sampler.t1; });
    dbl("track.t2", [](RunConfig& c) -> double& { return c.track.sampler.t2; });

    // Offline training.
    integer("train.iterations", [](RunConfig& c) -> int& { return c.train.iterations; });
    dbl("train.lr", [](RunConfig& c) -> double& { return c.train.sgd.lr; });
    dbl("train.weight_decay", [](RunConfig& c) -> double& { return c.train.sgd.weight_decay; });
    dbl("train.momentum", [](RunConfig& c) -> double& { return c.train.sgd.momentum; });
    integer("train.batch_positives", [](RunConfig& c) -> int& { return c.train.batch_positives; });
    integer("train.batch_negatives", [](RunConfig& c) -> int& { return c.train.batch_negatives; });
    t["train.train_trunk"] = [](RunConfig& c, const std::string& v) { c.train.train_trunk = to_bool(v); };
    dbl("train.t1", [](RunConfig& c) -> double& { return c.train.sampler.t1; });
    dbl("train.t2", [](RunConfig& c) -> double& { return c.train.sampler.t2; });

    // Shared by training and tracking.
    t["working_resolution"] = [](RunConfig& c, const std::string& v) {
      c.track.preprocess.working_resolution = c.train.preprocess.working_resolution = to_int(v);
    };
    t["roi_offset"] = [](RunConfig& c, const std::string& v) { c.track.roi_offset = c.train.roi_offset = to_double(v); };
    t["seed"] = [](RunConfig& c, const std::string& v) {
      const long long s = to_integer(v);
      if (s < 0) throw ConfigError("seed must be >= 0");
      c.track.seed = c.train.seed = static_cast<std::uint64_t>(s);
    };

    // Network.
    t["net.variant"] = [](RunConfig& c, const std::string& v) {
      if (v == "notrain") {
        c.variant = Variant::Default;
        c.notrain = true;
        return;
      }
      try {
        c.variant = parse_variant(v);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    };
    t["net.roi"] = [](RunConfig& c, const std::string& v) { c.roi = parse_roi_method(v); };
    t["net.notrain"] = [](RunConfig& c, const std::string& v) { c.notrain = to_bool(v); };
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string> run_config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

RunConfig parse_run_config(std::istream& in, RunConfig base, const std::string& source) {
  std::set<std::string> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(where() + "expected 'key = value'");
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where() + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where() + "duplicate key '" + key + "'");
    try {
      it->second(base, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where() + key + ": " + e.what());
    }
  }
  try {
    base.track.validate();
    base.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open config " + path.string());
  return parse_run_config(in, std::move(base), path.string());
}

}  // namespace fdt
