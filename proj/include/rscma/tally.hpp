#pragma once

#include <string>
#include <utility>
#include <vector>

namespace rscma {

// Constraint counts grouped by family name.
struct ConstraintTally {
  std::vector<std::pair<std::string, long>> families;

  long total() const {
    long t = 0;
    for (const auto& f : families) t += f.second;
    return t;
  }
  long count(const std::string& family) const {
    for (const auto& f : families)
      if (f.first == family) return f.second;
    return 0;
  }
  void add(const std::string& family, long n = 1) {
    for (auto& f : families)
      if (f.first == family) {
        f.second += n;
        return;
      }
    families.emplace_back(family, n);
  }
};

}  // namespace rscma
