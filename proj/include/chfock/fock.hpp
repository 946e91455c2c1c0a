#ifndef CHFOCK_FOCK_HPP
#define CHFOCK_FOCK_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace chfock {

enum class Species { plus, minus };

/// Occupations of the particle (plus) and anti-particle (minus) modes.
struct FockState {
  std::vector<int> occ_plus;
  std::vector<int> occ_minus;

  int n_plus() const { return std::accumulate(occ_plus.begin(), occ_plus.end(), 0); }
  int n_minus() const { return std::accumulate(occ_minus.begin(), occ_minus.end(), 0); }
  int total() const { return n_plus() + n_minus(); }
  int charge_index() const { return n_plus() - n_minus(); }

  std::vector<int>& occ(Species s) { return s == Species::plus ? occ_plus : occ_minus; }
  const std::vector<int>& occ(Species s) const {
    return s == Species::plus ? occ_plus : occ_minus;
  }

  friend bool operator==(const FockState&, const FockState&) = default;
};

/// Ordering used by the basis: (total, occ_plus, occ_minus), each lexicographic.
inline bool basis_order(const FockState& a, const FockState& b) {
  const int ta = a.total(), tb = b.total();
  if (ta != tb) return ta < tb;
  if (a.occ_plus != b.occ_plus) return a.occ_plus < b.occ_plus;
  return a.occ_minus < b.occ_minus;
}

class BasisTooLarge : public std::runtime_error {
 public:
  BasisTooLarge(std::size_t dim, std::size_t cap)
      : std::runtime_error("Fock basis dimension " + std::to_string(dim) +
                           " exceeds the configured cap " + std::to_string(cap)),
        dim_(dim) {}
  std::size_t dimension() const { return dim_; }

 private:
  std::size_t dim_;
};

inline constexpr std::size_t default_dimension_cap = 200000;

/// C(n, k) in 64-bit, saturating at SIZE_MAX.
inline std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > SIZE_MAX) return SIZE_MAX;
  }
  return static_cast<std::size_t>(r);
}

/// sum_{n+n' <= N_max} C(n+M-1, M-1) C(n'+M-1, M-1)
inline std::size_t truncated_dimension(std::size_t modes, int n_max) {
  unsigned __int128 total = 0;
  for (int n = 0; n <= n_max; ++n)
    for (int np = 0; n + np <= n_max; ++np) {
      total += static_cast<unsigned __int128>(binomial(n + modes - 1, modes - 1)) *
               binomial(np + modes - 1, modes - 1);
      if (total > SIZE_MAX) return SIZE_MAX;
    }
  return static_cast<std::size_t>(total);
}

/// Two-species occupation-number basis with n_plus + n_minus <= N_max.
class FockBasis {
 public:
  FockBasis(std::size_t modes, int n_max, std::size_t dimension_cap = default_dimension_cap)
      : modes_(modes), n_max_(n_max) {
    if (modes < 1) throw std::invalid_argument("Fock basis: need at least one mode");
    if (n_max < 0) throw std::invalid_argument("Fock basis: N_max must be >= 0");
    const std::size_t dim = truncated_dimension(modes, n_max);
    if (dim > dimension_cap) throw BasisTooLarge(dim, dimension_cap);

    states_.reserve(dim);
    std::vector<int> plus(modes, 0);
    for (int n = 0; n <= n_max; ++n) {
      std::vector<std::vector<int>> plus_configs = compositions(n);
      for (int np = 0; n + np <= n_max; ++np) {
        std::vector<std::vector<int>> minus_configs = compositions(np);
        for (const auto& p : plus_configs)
          for (const auto& m : minus_configs) states_.push_back({p, m});
      }
    }
    std::sort(states_.begin(), states_.end(), basis_order);

    for (std::size_t i = 0; i < states_.size(); ++i) {
      index_.emplace(key(states_[i]), i);
      sectors_[states_[i].charge_index()].push_back(i);
    }
  }

  std::size_t dim() const { return states_.size(); }
  std::size_t modes() const { return modes_; }
  int n_max() const { return n_max_; }

  const FockState& state(std::size_t i) const { return states_[i]; }
  const std::vector<FockState>& states() const { return states_; }

  /// Position of `s`, or dim() if it lies outside the truncation.
  std::size_t index_of(const FockState& s) const {
    auto it = index_.find(key(s));
    return it == index_.end() ? dim() : it->second;
  }
  bool contains(const FockState& s) const { return index_of(s) != dim(); }

  /// charge index z -> ascending state indices
  const std::map<int, std::vector<std::size_t>>& sectors() const { return sectors_; }

 private:
  // All occupation vectors over modes_ summing to n, in lexicographic order.
  std::vector<std::vector<int>> compositions(int n) const {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(modes_, 0);
    fill(cur, 0, n, out);
    return out;
  }

  void fill(std::vector<int>& cur, std::size_t pos, int left,
            std::vector<std::vector<int>>& out) const {
    if (pos + 1 == modes_) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[pos] = v;
      fill(cur, pos + 1, left - v, out);
    }
  }

  std::vector<int> key(const FockState& s) const {
    std::vector<int> k(s.occ_plus);
    k.insert(k.end(), s.occ_minus.begin(), s.occ_minus.end());
    return k;
  }

  std::size_t modes_;
  int n_max_;
  std::vector<FockState> states_;
  std::map<std::vector<int>, std::size_t> index_;
  std::map<int, std::vector<std::size_t>> sectors_;
};

inline FockBasis enumerate_basis(std::size_t modes, int n_max,
                                 std::size_t dimension_cap = default_dimension_cap) {
  return FockBasis(modes, n_max, dimension_cap);
}

inline const std::map<int, std::vector<std::size_t>>& charge_sectors(const FockBasis& basis) {
  return basis.sectors();
}

/// 1 on states with total <= N_max - margin, 0 elsewhere.
inline std::vector<std::uint8_t> interior_projector(const FockBasis& basis, int margin) {
  if (margin < 0 || margin > basis.n_max())
    throw std::invalid_argument("interior_projector: margin must lie in [0, N_max]");
  std::vector<std::uint8_t> mask(basis.dim());
  for (std::size_t i = 0; i < basis.dim(); ++i)
    mask[i] = basis.state(i).total() <= basis.n_max() - margin ? 1 : 0;
  return mask;
}

/// Indices selected by interior_projector. Empty when margin > N_max.
inline std::vector<std::size_t> interior_indices(const FockBasis& basis, int margin) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < basis.dim(); ++i)
    if (basis.state(i).total() <= basis.n_max() - margin) out.push_back(i);
  return out;
}

}  // namespace chfock

#endif  // CHFOCK_FOCK_HPP
