#pragma once

// JSON configuration shared by all commands. Every section is optional;
// missing keys keep their defaults. `to_json` writes the complete effective
// configuration, which reproduces a run when fed back through --config.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "behavcal/abm.hpp"
#include "behavcal/llm.hpp"
#include "behavcal/pipeline.hpp"
#include "behavcal/synthdata.hpp"
#include "behavcal/validator.hpp"

namespace behavcal {

struct GenDataConfig {
  std::size_t assets = 100;
  std::size_t reference_paths = 200;
  std::size_t discriminator_paths = 200;
  std::size_t scenarios = 100;  // per bias
  PricePathConfig price;
  EarningsConfig earnings;
};

struct AdversarialConfig {
  std::string catalog;  // empty: built-in catalog
  std::size_t repeats = 5;
  std::vector<ProfileKind> profiles{kAllProfiles.begin(), kAllProfiles.end()};
};

struct ValidateConfig {
  std::string benchmarks;  // empty: built-in registry
  std::string ranges;      // optional reference range table
  double delta = 0.0;
};

struct AppConfig {
  std::uint64_t seed = 1;
  Backend backend = Backend::synthetic;
  RunPlan run;
  std::string templates;  // directory overriding the default templates
  LlmEndpointConfig llm;
  GenDataConfig gen_data;
  MarketConfig abm;
  std::vector<PowerSpec> power{PowerSpec::disposition(), PowerSpec::herding(), PowerSpec::overconfidence()};
  AdversarialConfig adversarial;
  ValidateConfig validate;

  // Parses and validates; throws InvalidArgument with the offending key.
  static AppConfig from_json_text(std::string_view text);
  static AppConfig load(const std::filesystem::path& file);
  // Canonical JSON (sorted keys, compact).
  std::string to_json_text() const;
  // Propagates `seed` into run/abm, loads templates.
  void finalize();
};

}  // namespace behavcal
