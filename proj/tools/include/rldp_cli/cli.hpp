#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rldp::cli {

enum ExitCode { kOk = 0, kError = 1, kInconclusive = 2, kInconsistent = 3 };

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

const std::vector<std::string>& subcommands();

// Runs one subcommand; all failures are reported on `err` and mapped to an exit code.
int run(const std::string& subcommand, const Options& opts, std::ostream& log, std::ostream& err);

int main(int argc, char** argv);

}  // namespace rldp::cli
