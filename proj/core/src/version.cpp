#include "rldp/version.hpp"

#include <Eigen/Core>
#include <ceres/version.h>

namespace rldp {

std::string version() { return RLDP_VERSION_STRING; }

std::vector<std::pair<std::string, std::string>> library_versions() {
  return {
      {"rldp", RLDP_VERSION_STRING},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"ceres", CERES_VERSION_STRING},
  };
}

}  // namespace rldp
