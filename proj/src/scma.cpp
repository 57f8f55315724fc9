#include "rscma/scma.hpp"

#include <algorithm>
#include <sstream>

namespace rscma {

CodebookMap::CodebookMap(int subcarriers, std::vector<std::vector<int>> columns)
    : subcarriers_(subcarriers), columns_(std::move(columns)) {
  q_.assign(static_cast<std::size_t>(subcarriers_) * columns_.size(), 0);
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    auto& col = columns_[c];
    std::sort(col.begin(), col.end());
    if (std::adjacent_find(col.begin(), col.end()) != col.end())
      throw std::invalid_argument("codebook column lists a subcarrier twice");
    for (int n : col) {
      if (n < 0 || n >= subcarriers_) throw std::invalid_argument("codebook subcarrier out of range");
      q_[static_cast<std::size_t>(n) * columns_.size() + c] = 1;
    }
  }
}

std::vector<int> CodebookMap::row_sums() const {
  std::vector<int> sums(static_cast<std::size_t>(subcarriers_), 0);
  for (const auto& col : columns_)
    for (int n : col) ++sums[n];
  return sums;
}

namespace {

double choose(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// All U-subsets of {0..N-1} in lexicographic order.
std::vector<std::vector<int>> all_subsets(int n, int u) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(u));
  for (int i = 0; i < u; ++i) cur[i] = i;
  while (true) {
    out.push_back(cur);
    int i = u - 1;
    while (i >= 0 && cur[i] == n - u + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < u; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

}  // namespace

CodebookMap build_codebook_map(int subcarriers, int codebooks, int degree) {
  if (degree < 1 || degree >= subcarriers)
    throw InfeasibleMapError("codebook map requires 1 <= U < N");
  if (codebooks < 1) throw InfeasibleMapError("codebook map requires C >= 1");
  const double capacity = choose(subcarriers, degree);
  if (codebooks > capacity)
    throw InfeasibleMapError("infeasible map: C exceeds choose(N, U) distinct supports");
  if (capacity > static_cast<double>(1 << 20))
    throw InfeasibleMapError("codebook map too large to enumerate");

  const auto subsets = all_subsets(subcarriers, degree);
  std::vector<char> used(subsets.size(), 0);
  std::vector<std::size_t> chosen(static_cast<std::size_t>(codebooks));
  std::vector<int> rows(static_cast<std::size_t>(subcarriers), 0);
  for (int c = 0; c < codebooks; ++c) {
    chosen[c] = static_cast<std::size_t>(c);
    used[c] = 1;
    for (int n : subsets[c]) ++rows[n];
  }

  auto spread = [&] {
    const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end());
    return *hi - *lo;
  };
  // First-improvement swaps on the sum of squared row loads. Whenever the spread
  // is >= 2 an improving swap exists, so this terminates balanced.
  while (spread() > 1) {
    bool improved = false;
    for (int c = 0; c < codebooks && !improved; ++c) {
      const auto& from = subsets[chosen[c]];
      for (std::size_t t = 0; t < subsets.size() && !improved; ++t) {
        if (used[t]) continue;
        const auto& to = subsets[t];
        long delta = 0;
        for (int n : to)
          if (!std::binary_search(from.begin(), from.end(), n)) delta += 2L * rows[n] + 1;
        for (int n : from)
          if (!std::binary_search(to.begin(), to.end(), n)) delta += -2L * rows[n] + 1;
        if (delta < 0) {
          for (int n : from) --rows[n];
          for (int n : to) ++rows[n];
          used[chosen[c]] = 0;
          used[t] = 1;
          chosen[c] = t;
          improved = true;
        }
      }
    }
    if (!improved) break;
  }

  std::vector<std::vector<int>> columns;
  for (std::size_t idx : chosen) columns.push_back(subsets[idx]);
  CodebookMap map(subcarriers, std::move(columns));
  if (codebooks > 1) {
    for (int n = 0; n < subcarriers; ++n)
      if (map.row_sums()[n] == codebooks)
        throw InfeasibleMapError("infeasible map: subcarrier " + std::to_string(n) +
                                 " belongs to every codebook");
  }
  return map;
}

CodebookMap ofdma_map(int subcarriers) {
  std::vector<std::vector<int>> columns;
  for (int n = 0; n < subcarriers; ++n) columns.push_back({n});
  return CodebookMap(subcarriers, std::move(columns));
}

CodebookMap codebook_map_for(const NetworkConfig& config) {
  const NetworkConfig c = effective_config(config);
  if (c.access == AccessScheme::kOfdma) return ofdma_map(c.num_subcarriers);
  return build_codebook_map(c.num_subcarriers, c.num_codebooks, c.codeword_degree);
}

int reuse_count(const Assignment& rho, const CodebookMap& q, int n) {
  const Dims& d = rho.dims();
  int count = 0;
  for (int b = 0; b < d.rrh; ++b)
    for (int c = 0; c < d.codebooks; ++c) {
      if (!q.at(n, c)) continue;
      for (int k = 0; k < d.users; ++k) count += rho.at(b, c, k) ? 1 : 0;
    }
  return count;
}

std::string to_string(const CodebookMap& q) {
  std::ostringstream os;
  for (int n = 0; n < q.subcarriers(); ++n) {
    for (int c = 0; c < q.codebooks(); ++c) os << (c ? " " : "") << (q.at(n, c) ? 1 : 0);
    os << '\n';
  }
  return os.str();
}

}  // namespace rscma
