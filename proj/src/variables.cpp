#include "rscma/variables.hpp"

#include <cmath>
#include <stdexcept>

namespace rscma {

BeamformerSet::BeamformerSet(Dims dims)
    : dims_(dims), w_(dims.num_beams() * static_cast<std::size_t>(dims.antennas)) {}

std::span<const cplx> BeamformerSet::w(int b, int n, int k) const {
  const std::size_t m = static_cast<std::size_t>(dims_.antennas);
  return {w_.data() + dims_.beam_index(b, n, k) * m, m};
}

std::span<cplx> BeamformerSet::w(int b, int n, int k) {
  const std::size_t m = static_cast<std::size_t>(dims_.antennas);
  return {w_.data() + dims_.beam_index(b, n, k) * m, m};
}

double BeamformerSet::norm2(int b, int n, int k) const {
  double s = 0.0;
  for (const cplx& v : w(b, n, k)) s += std::norm(v);
  return s;
}

double BeamformerSet::norm() const {
  double s = 0.0;
  for (const cplx& v : w_) s += std::norm(v);
  return std::sqrt(s);
}

double distance(const BeamformerSet& a, const BeamformerSet& b) {
  if (a.data().size() != b.data().size()) throw std::invalid_argument("beamformer shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) s += std::norm(a.data()[i] - b.data()[i]);
  return std::sqrt(s);
}

Assignment::Assignment(Dims dims) : dims_(dims), bits_(dims.num_links(), 0) {}

std::vector<Link> Assignment::links() const {
  std::vector<Link> out;
  for (int b = 0; b < dims_.rrh; ++b)
    for (int c = 0; c < dims_.codebooks; ++c)
      for (int k = 0; k < dims_.users; ++k)
        if (at(b, c, k)) out.push_back({b, c, k});
  return out;
}

std::size_t Assignment::count() const {
  std::size_t n = 0;
  for (auto v : bits_) n += v;
  return n;
}

nlohmann::json to_json(const Assignment& rho) {
  nlohmann::json j = nlohmann::json::array();
  for (const Link& l : rho.links()) j.push_back({l.b, l.c, l.k});
  return j;
}

Assignment assignment_from_json(const nlohmann::json& j, Dims dims) {
  Assignment rho(dims);
  for (const auto& t : j) {
    const int b = t.at(0), c = t.at(1), k = t.at(2);
    if (b < 0 || b >= dims.rrh || c < 0 || c >= dims.codebooks || k < 0 || k >= dims.users)
      throw std::invalid_argument("assignment triple out of range");
    rho.set(b, c, k, true);
  }
  return rho;
}

}  // namespace rscma
