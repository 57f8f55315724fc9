#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rscma/layout.hpp"

namespace rscma {

// Complex beam vectors w_{b,n,k}, length M_T each.
class BeamformerSet {
 public:
  BeamformerSet() = default;
  explicit BeamformerSet(Dims dims);

  const Dims& dims() const { return dims_; }
  std::span<const cplx> w(int b, int n, int k) const;
  std::span<cplx> w(int b, int n, int k);
  double norm2(int b, int n, int k) const;

  // Frobenius norm over every entry.
  double norm() const;
  const std::vector<cplx>& data() const { return w_; }

  bool operator==(const BeamformerSet&) const = default;

 private:
  Dims dims_;
  std::vector<cplx> w_;
};

double distance(const BeamformerSet& a, const BeamformerSet& b);

// Binary scheduling indicators ρ_{b,c,k}.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(Dims dims);

  const Dims& dims() const { return dims_; }
  bool at(int b, int c, int k) const { return bits_[dims_.link_index(b, c, k)] != 0; }
  void set(int b, int c, int k, bool on) { bits_[dims_.link_index(b, c, k)] = on ? 1 : 0; }
  bool at(std::size_t flat) const { return bits_[flat] != 0; }
  void set(std::size_t flat, bool on) { bits_[flat] = on ? 1 : 0; }

  // Scheduled links in (b, c, k) order.
  std::vector<Link> links() const;
  std::size_t count() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool operator==(const Assignment&) const = default;

 private:
  Dims dims_;
  std::vector<std::uint8_t> bits_;
};

// Sparse triple-list form: [[b, c, k], ...].
nlohmann::json to_json(const Assignment& rho);
Assignment assignment_from_json(const nlohmann::json& j, Dims dims);

}  // namespace rscma
