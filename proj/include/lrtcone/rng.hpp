#ifndef LRTCONE_RNG_HPP_
#define LRTCONE_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace lrtcone {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/*
 * Seed of the child stream keyed by (parent, tag, index). Streams are
 * addressed by key rather than drawn sequentially, so results never depend on
 * the order in which jobs execute.
 */
inline std::uint64_t child_seed(std::uint64_t parent, std::string_view tag,
                                std::uint64_t index) {
  std::uint64_t h = splitmix64(parent);
  h = splitmix64(h ^ fnv1a(tag));
  return splitmix64(h ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng child_rng(std::uint64_t parent, std::string_view tag,
                     std::uint64_t index) {
  return Rng(child_seed(parent, tag, index));
}

inline Eigen::VectorXd standard_normal_vector(Eigen::Index n, Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    z[i] = normal(rng);
  }
  return z;
}

} // namespace lrtcone

#endif /* LRTCONE_RNG_HPP_ */
