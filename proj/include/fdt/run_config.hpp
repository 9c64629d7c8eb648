#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdt/network.hpp"
#include "fdt/tracking.hpp"
#include "fdt/training.hpp"

namespace fdt {

/// Invalid configuration text or value; maps to the usage exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a command can be configured with. `notrain` replaces the FC
/// trunk of a loaded network with freshly initialized layers.
struct RunConfig {
  TrackConfig track;
  TrainConfig train;
  Variant variant = Variant::Default;
  RoiMethod roi = RoiMethod::Align;
  bool notrain = false;

  NetworkSpec network_spec(int branches) const;
};

/// Applies "key = value" lines on top of `base`. '#' starts a comment.
/// Unknown keys, duplicate keys and malformed values throw ConfigError
/// naming the line.
RunConfig parse_run_config(std::istream& in, RunConfig base = {}, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Every recognised key, sorted.
std::vector<std::string> run_config_keys();

RoiMethod parse_roi_method(const std::string& s);
std::string to_string(RoiMethod m);

}  // namespace fdt
