#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rldp/ldp.hpp"
#include "rldp/testfn.hpp"

namespace rldp::cli {

struct SimulateSettings {
  double eps = 0.5;
  int n_steps = 1000;
  std::uint64_t trajectory = 0;
};

struct TestFnSettings {
  double eps = 0.1;
  double rho = 0.1;
  int n_samples = 4096;
  std::optional<double> force_B, force_C;
};

struct RunConfig {
  explicit RunConfig(ExperimentConfig e) : exp(std::move(e)) {}

  ExperimentConfig exp;
  SimulateSettings simulate;
  TestFnSettings testfn;
  std::optional<ReferencePath> rate_path;
  bool cap_check = true;
  std::vector<double> cap_levels{0.05, 1.0};
  double cap_tolerance = 0.1;
  bool goodness = true;
  std::string output_dir = "out";
  std::string source;  // raw config text, hashed into the manifest
};

// Parse errors carry line/column of the offending byte; field errors name the JSON path.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t h);

}  // namespace rldp::cli
