#pragma once

#include <json.hpp>

#include "opf/dispatch.hpp"
#include "opf/powerflow.hpp"
#include "opf/relaxation.hpp"
#include "opf/swc.hpp"
#include "opf/validate.hpp"

namespace opf::report {

using json = nlohmann::ordered_json;

/// FNV-1a content hash, hex-encoded; used for the reproducibility envelope.
std::uint64_t fnv1a(const std::string& bytes);
std::string hash_hex(const std::string& bytes);

json to_json(const ComplexVoltageState& st);
json to_json(const LimitReport& rep);
json to_json(const Network& net, const PowerFlowSolution& sol);
json to_json(const DispatchResult& r);
json to_json(const Network& net, const DcOpfResult& r);
json to_json(const RelaxedOpfSolution& r);
json to_json(const ControlDecision& d);
json to_json(const Network& net, const SwcSolution& s);
json to_json(const RiskReport& r);

/// Round-trips a decision through its JSON report form.
ControlDecision decision_from_json(const json& j);

}  // namespace opf::report
