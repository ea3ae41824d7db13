#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

inline std::filesystem::path golden_dir() { return BEHAVCAL_GOLDEN_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct AdversarialCase {
  std::string scenario;
  std::string answer;
  bool pass = false;
};

// Minimal CSV reader for the golden case table (quoted fields allowed).
inline std::vector<AdversarialCase> adversarial_cases() {
  std::ifstream in(golden_dir() / "adversarial_cases.csv");
  std::vector<AdversarialCase> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f(1);
    bool quoted = false;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      else if (c == ',' && !quoted) f.emplace_back();
      else f.back() += c;
    }
    out.push_back({f.at(0), f.at(1), f.at(2) == "pass"});
  }
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("behavcal-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
