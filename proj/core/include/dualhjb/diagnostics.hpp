#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

namespace dualhjb {

struct CheckEntry {
  std::string name;
  bool passed = true;
  std::string detail;
};

/// Ordered list of named pass/fail checks. Validators never throw on a failed
/// check; they record it here with the first offending sample in `detail`.
class DiagnosticsReport {
 public:
  void add(std::string name, bool passed, std::string detail = {}) {
    checks_.push_back({std::move(name), passed, std::move(detail)});
  }

  bool passed() const {
    return std::all_of(checks_.begin(), checks_.end(),
                       [](const CheckEntry& c) { return c.passed; });
  }

  const CheckEntry* find(const std::string& name) const {
    for (const auto& c : checks_) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  const std::vector<CheckEntry>& checks() const { return checks_; }

  void merge(const DiagnosticsReport& other, const std::string& prefix = {}) {
    for (const auto& c : other.checks_) add(prefix + c.name, c.passed, c.detail);
  }

 private:
  std::vector<CheckEntry> checks_;
};

}  // namespace dualhjb
