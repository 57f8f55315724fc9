#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rscma/topology.hpp"
#include "rscma/variables.hpp"

namespace rscma {

class InfeasibleMapError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Subcarrier-to-codebook incidence q_{n,c}. Fixed input data, never optimized.
class CodebookMap {
 public:
  CodebookMap() = default;
  // columns[c] lists the subcarriers of codebook c.
  CodebookMap(int subcarriers, std::vector<std::vector<int>> columns);

  int subcarriers() const { return subcarriers_; }
  int codebooks() const { return static_cast<int>(columns_.size()); }
  bool at(int n, int c) const { return q_[static_cast<std::size_t>(n) * codebooks() + c] != 0; }
  const std::vector<int>& support(int c) const { return columns_[c]; }
  std::vector<int> row_sums() const;

  bool operator==(const CodebookMap&) const = default;

 private:
  int subcarriers_ = 0;
  std::vector<std::vector<int>> columns_;
  std::vector<unsigned char> q_;
};

// Distinct U-subsets chosen lexicographically, then rebalanced by greedy swaps
// until row sums differ by at most one.
CodebookMap build_codebook_map(int subcarriers, int codebooks, int degree);

// Identity map (C = N, U = 1) used by the OFDMA benchmark.
CodebookMap ofdma_map(int subcarriers);

// Map for a scenario after the access scheme has been applied.
CodebookMap codebook_map_for(const NetworkConfig& config);

// Σ_{b,k,c} ρ_{b,c,k} q_{n,c}.
int reuse_count(const Assignment& rho, const CodebookMap& q, int n);

// 0/1 matrix, one subcarrier per line.
std::string to_string(const CodebookMap& q);

}  // namespace rscma
