#pragma once

#include <complex>
#include <compare>
#include <cstddef>

namespace rscma {

using cplx = std::complex<double>;

// Shape of one scenario instance. Beam-indexed tensors use (b, n, k); link-indexed
// tensors use (b, c, k). All indices are zero based; RRH 0 is the high-power RRH.
struct Dims {
  int rrh = 0;
  int subcarriers = 0;
  int users = 0;
  int codebooks = 0;
  int antennas = 0;

  std::size_t beam_index(int b, int n, int k) const {
    return (static_cast<std::size_t>(b) * subcarriers + n) * users + k;
  }
  std::size_t link_index(int b, int c, int k) const {
    return (static_cast<std::size_t>(b) * codebooks + c) * users + k;
  }
  std::size_t num_beams() const {
    return static_cast<std::size_t>(rrh) * subcarriers * users;
  }
  std::size_t num_links() const {
    return static_cast<std::size_t>(rrh) * codebooks * users;
  }

  bool operator==(const Dims&) const = default;
};

struct Link {
  int b = 0;
  int c = 0;
  int k = 0;

  auto operator<=>(const Link&) const = default;
};

}  // namespace rscma
