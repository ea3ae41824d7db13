#pragma once

// nlohmann::json conversions for the experiment types. Kept out of the
// domain headers so only translation units that persist data pull in the
// JSON library.

#include "json.hpp"

#include "behavcal/experiments.hpp"

namespace behavcal {

void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

void to_json(nlohmann::json& j, const ParsedResponse& r);
void from_json(const nlohmann::json& j, ParsedResponse& r);

void to_json(nlohmann::json& j, const AdversarialScenario& a);
void from_json(const nlohmann::json& j, AdversarialScenario& a);

}  // namespace behavcal
