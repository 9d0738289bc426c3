#pragma once

#include <nlohmann/json.hpp>

#include "rldp/ldp.hpp"
#include "rldp/testfn.hpp"

namespace rldp::cli {

using ojson = nlohmann::ordered_json;

// Non-finite values serialize as the strings "inf", "-inf" or "nan".
ojson num(double x);

ojson to_json(const McEstimate& e);
ojson to_json(const LogRate& r);
ojson to_json(const RateResult& r);
ojson to_json(const WeakStabilityReport& w);
ojson to_json(const LdpReport& r);
ojson to_json(const CapReport& r);
ojson to_json(const GoodnessReport& r);
ojson to_json(const TestFnReport& r);
ojson to_json(const ComplementarityReport& r);

}  // namespace rldp::cli
