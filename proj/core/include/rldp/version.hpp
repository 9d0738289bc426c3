#pragma once

#include <string>
#include <utility>
#include <vector>

namespace rldp {

std::string version();
// name -> version for rldp and the numerical libraries it was built against
std::vector<std::pair<std::string, std::string>> library_versions();

}  // namespace rldp
