#pragma once

#include "wmsv/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <unordered_map>
#include <vector>

namespace wmsv {

/// Nonincreasing tuple (k_1 >= ... >= k_d >= 0), padded with zeros to d entries.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<int> parts) : parts_(std::move(parts)) {
    WMSV_REQUIRE(!parts_.empty(), Errc::DomainError, "partition needs at least one slot");
    for (std::size_t j = 0; j < parts_.size(); ++j) {
      WMSV_REQUIRE(parts_[j] >= 0, Errc::DomainError, "negative part");
      WMSV_REQUIRE(j == 0 || parts_[j] <= parts_[j - 1], Errc::DomainError,
                   "parts must be nonincreasing");
      weight_ += parts_[j];
    }
  }

  int size() const { return static_cast<int>(parts_.size()); }
  int weight() const { return weight_; }
  int operator[](int j) const { return parts_[j]; }
  const std::vector<int>& parts() const { return parts_; }

  /// Lexicographic order: compares the first index at which the parts differ.
  friend auto operator<=>(const Partition& a, const Partition& b) { return a.parts_ <=> b.parts_; }
  friend bool operator==(const Partition& a, const Partition& b) = default;

 private:
  std::vector<int> parts_;
  int weight_ = 0;
};

/// All partitions of k into at most d parts, in descending lexicographic order.
inline std::vector<Partition> partitions_of(int k, int d) {
  WMSV_REQUIRE(k >= 0 && d >= 1, Errc::DomainError, "partitions_of needs k >= 0, d >= 1");
  std::vector<Partition> out;
  std::vector<int> parts(d, 0);
  auto rec = [&](auto&& self, int slot, int remaining, int max_part) -> void {
    if (slot == d) {
      if (remaining == 0) out.emplace_back(parts);
      return;
    }
    const int slots_left = d - slot;
    const int lo = (remaining + slots_left - 1) / slots_left;
    for (int p = std::min(remaining, max_part); p >= lo; --p) {
      parts[slot] = p;
      self(self, slot + 1, remaining - p, p);
    }
    parts[slot] = 0;
  };
  if (k == 0) {
    out.emplace_back(parts);
    return out;
  }
  rec(rec, 0, k, k);
  return out;
}

/// Pochhammer symbol (a)_k for complex a.
inline cd rising(cd a, int k) {
  cd out = 1.0;
  for (int i = 0; i < k; ++i) out *= a + static_cast<double>(i);
  return out;
}

/// Generalized hypergeometric coefficient (b)_iota = prod_j (b - (j-1)/2)_{k_j}.
inline cd hyp_coeff(cd b, const Partition& iota) {
  const int d = iota.size();
  if (b.imag() == 0.0) {
    const double twice = 2.0 * b.real();
    const bool lattice = twice == std::round(twice);
    WMSV_REQUIRE(!(lattice && b.real() <= 0.5 * (d - 1)), Errc::ForbiddenParameter,
                 "b lies on the excluded integer/half-integer lattice");
  }
  cd out = 1.0;
  for (int j = 0; j < d; ++j) out *= rising(b - 0.5 * j, iota[j]);
  return out;
}

/// log (b)_iota for real b > (d-1)/2 (all factors positive).
inline double log_hyp_coeff(double b, const Partition& iota) {
  double out = 0.0;
  for (int j = 0; j < iota.size(); ++j) {
    const double a = b - 0.5 * j;
    out += std::lgamma(a + iota[j]) - std::lgamma(a);
  }
  return out;
}

namespace detail {
// log (b)_{iota_hat(k)} for k = 0..k_max, via the smallest-partition walk.
inline std::vector<double> smallest_coeff_logs(double b, int d, int k_max) {
  WMSV_REQUIRE(b > 0.5 * (d - 1), Errc::DomainError, "need b > (d-1)/2");
  std::vector<double> out(k_max + 1, 0.0);
  std::vector<int> parts(d, 0);
  for (int k = 0; k < k_max; ++k) {
    int j = 0;
    // First index j where the parts stop being equal to the leading block.
    while (j + 1 < d && parts[j + 1] == parts[0]) ++j;
    const int target = (j + 1 == d) ? 0 : j + 1;
    out[k + 1] = out[k] + std::log(b + parts[target] - 0.5 * target);
    ++parts[target];
  }
  return out;
}
}  // namespace detail

/// (b)_{iota_hat(k)} for k = 1..k_max where iota_hat(k) is the smallest partition of k.
inline std::vector<double> smallest_coeff_seq(double b, int d, int k_max) {
  WMSV_REQUIRE(b > 0.5 * (d - 1), Errc::DomainError, "need b > (d-1)/2");
  std::vector<double> out;
  out.reserve(k_max);
  std::vector<int> parts(d, 0);
  double value = 1.0;
  for (int k = 0; k < k_max; ++k) {
    int j = 0;
    while (j + 1 < d && parts[j + 1] == parts[0]) ++j;
    const int target = (j + 1 == d) ? 0 : j + 1;
    value *= b + parts[target] - 0.5 * target;
    ++parts[target];
    out.push_back(value);
  }
  return out;
}

/// Smallest (lexicographic minimum) partition of k into at most d parts.
inline Partition smallest_partition(int k, int d) {
  std::vector<int> parts(d, k / d);
  for (int j = 0; j < k % d; ++j) ++parts[j];
  return Partition(parts);
}

/// Zonal polynomial coefficients in the monomial symmetric function basis,
/// C_kappa = sum_lambda c[kappa][lambda] M_lambda, for all weights <= max_weight.
class ZonalTable {
 public:
  ZonalTable(int d, int max_weight) : d_(d) {
    WMSV_REQUIRE(d >= 1 && d <= kMaxDim + 1, Errc::DomainError, "unsupported dimension");
    WMSV_REQUIRE(max_weight >= 0, Errc::DomainError, "negative weight");
    for (int k = 0; k <= max_weight; ++k) blocks_.push_back(build_block(k));
  }

  int dim() const { return d_; }
  int max_weight() const { return static_cast<int>(blocks_.size()) - 1; }

  const std::vector<Partition>& partitions(int k) const { return block(k).parts; }

  double coeff(int k, int kappa, int lambda) const {
    const Block& b = block(k);
    return b.coeff[static_cast<std::size_t>(kappa) * b.parts.size() + lambda];
  }

  int index_of(const Partition& p) const {
    const Block& b = block(p.weight());
    auto it = b.index.find(key(p.parts()));
    WMSV_REQUIRE(it != b.index.end(), Errc::DomainError, "partition has too many parts");
    return it->second;
  }

  /// Distinct permutations of lambda's parts (flattened, d entries each).
  const std::vector<std::uint8_t>& exponents(int k, int lambda) const {
    return block(k).perms[lambda];
  }

  /// C_iota(alpha_1..alpha_d).
  cd zonal(const Partition& iota, std::span<const cd> alpha) const {
    WMSV_REQUIRE(static_cast<int>(alpha.size()) == d_, Errc::DomainError, "wrong eigenvalue count");
    const int k = iota.weight();
    const int kappa = index_of(iota);
    const auto powers = power_table(alpha, k);
    cd out = 0.0;
    const int n = static_cast<int>(block(k).parts.size());
    for (int l = kappa; l < n; ++l) {
      const double c = coeff(k, kappa, l);
      if (c != 0.0) out += c * monomial(k, l, powers);
    }
    return out;
  }

  /// pw[i * (k_max + 1) + p] = alpha_i^p.
  void fill_power_table(std::span<const cd> alpha, int k_max, std::vector<cd>& pw) const {
    pw.resize(static_cast<std::size_t>(d_) * (k_max + 1));
    for (int i = 0; i < d_; ++i) {
      cd v = 1.0;
      for (int p = 0; p <= k_max; ++p) {
        pw[i * (k_max + 1) + p] = v;
        v *= alpha[i];
      }
    }
  }

  std::vector<cd> power_table(std::span<const cd> alpha, int k_max) const {
    std::vector<cd> pw;
    fill_power_table(alpha, k_max, pw);
    return pw;
  }

  /// Monomial symmetric function M_lambda evaluated from a power table built
  /// with stride (k_max + 1) where k_max = pw.size() / d - 1.
  cd monomial(int k, int lambda, std::span<const cd> pw) const {
    const std::size_t stride = pw.size() / d_;
    const auto& ex = exponents(k, lambda);
    cd out = 0.0;
    for (std::size_t s = 0; s < ex.size(); s += d_) {
      cd term = pw[ex[s]];
      for (int i = 1; i < d_; ++i) term *= pw[i * stride + ex[s + i]];
      out += term;
    }
    return out;
  }

 private:
  struct Block {
    std::vector<Partition> parts;
    std::vector<double> coeff;
    std::vector<std::vector<std::uint8_t>> perms;
    std::unordered_map<std::uint64_t, int> index;
  };

  const Block& block(int k) const {
    WMSV_REQUIRE(k >= 0 && k <= max_weight(), Errc::WeightExceedsTable,
                 "weight " + std::to_string(k) + " exceeds table weight " +
                     std::to_string(max_weight()));
    return blocks_[k];
  }

  static std::uint64_t key(const std::vector<int>& parts) {
    std::uint64_t h = 0;
    for (int p : parts) h = h * 1024u + static_cast<std::uint64_t>(p);
    return h;
  }

  static double rho(const std::vector<int>& parts) {
    double r = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) r += parts[i] * (parts[i] - static_cast<double>(i + 1));
    return r;
  }

  // log C_kappa(I_d) from the closed form for zonal polynomials at the identity.
  double log_zonal_at_identity(const std::vector<int>& kappa, int k) const {
    int p = 0;
    while (p < d_ && kappa[p] > 0) ++p;
    double out = 2.0 * k * std::numbers::ln2 + std::lgamma(k + 1.0);
    for (int j = 0; j < p; ++j) {
      const double a = 0.5 * d_ - 0.5 * j;
      out += std::lgamma(a + kappa[j]) - std::lgamma(a);
    }
    for (int i = 0; i < p; ++i) {
      for (int j = i + 1; j < p; ++j) out += std::log(2.0 * (kappa[i] - kappa[j]) - i + j);
      out -= std::lgamma(2.0 * kappa[i] + p - i);
    }
    return out;
  }

  Block build_block(int k) const {
    Block b;
    b.parts = partitions_of(k, d_);
    const int n = static_cast<int>(b.parts.size());
    for (int i = 0; i < n; ++i) b.index.emplace(key(b.parts[i].parts()), i);

    b.perms.resize(n);
    for (int i = 0; i < n; ++i) {
      std::vector<int> e = b.parts[i].parts();
      std::sort(e.begin(), e.end());
      do {
        for (int v : e) b.perms[i].push_back(static_cast<std::uint8_t>(v));
      } while (std::next_permutation(e.begin(), e.end()));
    }

    // Moves lambda -> mu = (.., l_i + t, .., l_j - t, ..) sorted; independent of kappa.
    struct Move {
      int mu;
      double weight;
    };
    std::vector<std::vector<Move>> moves(n);
    std::vector<double> rhos(n);
    for (int l = 0; l < n; ++l) {
      const auto& lam = b.parts[l].parts();
      rhos[l] = rho(lam);
      for (int i = 0; i < d_; ++i) {
        for (int j = i + 1; j < d_; ++j) {
          for (int t = 1; t <= lam[j]; ++t) {
            std::vector<int> mu = lam;
            mu[i] += t;
            mu[j] -= t;
            std::sort(mu.begin(), mu.end(), std::greater<>());
            const int idx = b.index.at(key(mu));
            moves[l].push_back({idx, static_cast<double>((lam[i] + t) - (lam[j] - t))});
          }
        }
      }
    }

    b.coeff.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int a = 0; a < n; ++a) {
      double* row = &b.coeff[static_cast<std::size_t>(a) * n];
      row[a] = 1.0;
      for (int l = a + 1; l < n; ++l) {
        double num = 0.0;
        for (const Move& m : moves[l]) num += m.weight * row[m.mu];
        if (num != 0.0) {
          const double gap = rhos[a] - rhos[l];
          WMSV_REQUIRE(gap != 0.0, Errc::DomainError, "degenerate zonal recurrence");
          row[l] = num / gap;
        }
      }
      double at_ones = 0.0;
      for (int l = a; l < n; ++l) {
        at_ones += row[l] * static_cast<double>(b.perms[l].size() / d_);
      }
      const double scale = std::exp(log_zonal_at_identity(b.parts[a].parts(), k)) / at_ones;
      for (int l = a; l < n; ++l) row[l] *= scale;
    }
    return b;
  }

  int d_;
  std::vector<Block> blocks_;
};

/// Default table weight per dimension. The series cap is 200; for d >= 3 the
/// table size (quadratic in the partition count) sets a lower limit.
inline int default_zonal_weight(int d) {
  switch (d) {
    case 1:
    case 2: return 200;
    case 3: return 40;
    case 4: return 24;
    default: return 18;
  }
}

/// Process-wide zonal tables, built once per dimension.
inline std::shared_ptr<const ZonalTable> zonal_table(int d) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const ZonalTable>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[d];
  if (!slot) slot = std::make_shared<const ZonalTable>(d, default_zonal_weight(d));
  return slot;
}

/// C_iota(alpha) using the shared table for d = alpha.size().
inline cd zonal(const Partition& iota, std::span<const cd> alpha) {
  return zonal_table(static_cast<int>(alpha.size()))->zonal(iota, alpha);
}

struct Hyp0F1Value {
  cd value;
  int order;     // truncation weight m
  double bound;  // remainder bound at m
};

/// Matrix-argument 0F1(b; .) for a fixed real b, evaluated from eigenvalues.
/// Truncation picks the smallest m >= d-1 whose remainder bound
/// s^{m+1} e^s / ((m+1)! (b)_{iota_hat(m+1)}), s = sum |alpha_i|, is <= eps.
class Hyp0F1 {
 public:
  static constexpr int kMaxOrder = 200;

  Hyp0F1(double b, int d, std::shared_ptr<const ZonalTable> table = nullptr)
      : b_(b), d_(d), table_(table ? std::move(table) : zonal_table(d)) {
    WMSV_REQUIRE(b > 0.5 * (d - 1), Errc::DomainError, "need b > (d-1)/2");
    WMSV_REQUIRE(table_->dim() == d, Errc::DomainError, "table dimension mismatch");
    max_order_ = std::min(kMaxOrder, table_->max_weight());
    log_hat_ = detail::smallest_coeff_logs(b, d, kMaxOrder + 1);
    weights_.resize(max_order_ + 1);
    for (int k = 0; k <= max_order_; ++k) {
      const auto& parts = table_->partitions(k);
      const int n = static_cast<int>(parts.size());
      std::vector<double> log_scale(n);
      for (int a = 0; a < n; ++a) log_scale[a] = -std::lgamma(k + 1.0) - log_hyp_coeff(b, parts[a]);
      weights_[k].assign(n, 0.0);
      for (int l = 0; l < n; ++l) {
        double w = 0.0;
        for (int a = 0; a <= l; ++a) {
          const double c = table_->coeff(k, a, l);
          if (c != 0.0) w += c * std::exp(log_scale[a]);
        }
        weights_[k][l] = w;
      }
    }
    // Flattened series: one entry per monomial term, ordered by weight.
    term_end_.assign(max_order_ + 1, 0);
    for (int k = 0; k <= max_order_; ++k) {
      const int n = static_cast<int>(weights_[k].size());
      for (int l = 0; k > 0 && l < n; ++l) {
        if (weights_[k][l] == 0.0) continue;
        const auto& ex = table_->exponents(k, l);
        for (std::size_t s = 0; s < ex.size(); s += d_) {
          Term t;
          t.coef = weights_[k][l];
          for (int i = 0; i < d_ && i < kMaxDim; ++i) t.exp[i] = ex[s + i];
          terms_.push_back(t);
        }
      }
      term_end_[k] = terms_.size();
    }
    // d = 2: M_(p,q) = (a1 a2)^q (a1^(p-q) + a2^(p-q)), with the p = q case counted once.
    // Row q holds the weights of (q + j, q) for j = 0, 1, ...
    if (d_ == 2) {
      pair_rows_.resize(max_order_ / 2 + 1);
      for (int q = 0; q <= max_order_ / 2; ++q) pair_rows_[q].assign(max_order_ - 2 * q + 1, 0.0);
      for (int k = 1; k <= max_order_; ++k) {
        for (std::size_t l = 0; l < weights_[k].size(); ++l) {
          const auto& parts = table_->partitions(k)[l].parts();
          const int p = parts.empty() ? 0 : parts[0];
          const int q = parts.size() > 1 ? parts[1] : 0;
          pair_rows_[q][p - q] = weights_[k][l];
        }
      }
      pair_rows_[0][0] = 1.0;
    }
    bound_offset_.resize(kMaxOrder + 1);
    for (int m = 0; m <= kMaxOrder; ++m) bound_offset_[m] = -std::lgamma(m + 2.0) - log_hat_[m + 1];
  }

  double b() const { return b_; }
  int dim() const { return d_; }
  int max_order() const { return max_order_; }

  /// log of the remainder bound at truncation weight m.
  double log_bound(double s, int m) const {
    if (s == 0.0) return -std::numeric_limits<double>::infinity();
    return (m + 1) * std::log(s) + s + bound_offset_[m];
  }

  double bound(double s, int m) const { return std::exp(log_bound(s, m)); }

  int truncation_order(double s, double eps) const {
    WMSV_REQUIRE(eps > 0.0, Errc::DomainError, "eps must be positive");
    if (s == 0.0) return std::max(d_ - 1, 0);
    thread_local double cached_eps = 0.0, cached_log = 0.0;
    if (eps != cached_eps) {
      cached_eps = eps;
      cached_log = std::log(eps);
    }
    const double log_eps = cached_log;
    const double log_s = std::log(s);
    for (int m = std::max(d_ - 1, 0); m <= kMaxOrder; ++m) {
      if ((m + 1) * log_s + s + bound_offset_[m] <= log_eps) {
        WMSV_REQUIRE(m <= max_order_, Errc::TruncationUnreachable,
                     "truncation order " + std::to_string(m) + " exceeds table weight");
        return m;
      }
    }
    throw Error(Errc::TruncationUnreachable,
                "remainder bound not reached below order 200 (s = " + std::to_string(s) + ")");
  }

  /// Truncated series sum_{k <= m} sum_{|iota| = k} C_iota(alpha) / ((b)_iota k!).
  cd truncated(std::span<const cd> alpha, int m) const {
    WMSV_REQUIRE(static_cast<int>(alpha.size()) == d_, Errc::DomainError, "wrong eigenvalue count");
    WMSV_REQUIRE(m <= max_order_, Errc::WeightExceedsTable, "order exceeds table weight");
    if (d_ == 2) return truncated_pair(alpha[0], alpha[1], m);
    // Real arithmetic on split powers keeps the inner loop free of the
    // NaN-recovery path of std::complex multiplication.
    const int stride = m + 1;
    thread_local std::vector<double> re, im;
    re.resize(static_cast<std::size_t>(d_) * stride);
    im.resize(re.size());
    for (int i = 0; i < d_; ++i) {
      double pr = 1.0, pi = 0.0;
      const double ar = alpha[i].real(), ai = alpha[i].imag();
      for (int p = 0; p < stride; ++p) {
        re[i * stride + p] = pr;
        im[i * stride + p] = pi;
        const double nr = pr * ar - pi * ai;
        pi = pr * ai + pi * ar;
        pr = nr;
      }
    }
    double sr = 1.0, si = 0.0;
    const std::size_t end = term_end_[m];
    for (std::size_t t = 0; t < end; ++t) {
      const Term& term = terms_[t];
      double tr = re[term.exp[0]], ti = im[term.exp[0]];
      for (int i = 1; i < d_; ++i) {
        const double br = re[i * stride + term.exp[i]], bi = im[i * stride + term.exp[i]];
        const double nr = tr * br - ti * bi;
        ti = tr * bi + ti * br;
        tr = nr;
      }
      sr += term.coef * tr;
      si += term.coef * ti;
    }
    return {sr, si};
  }

  Hyp0F1Value operator()(std::span<const cd> alpha, double eps) const {
    double s = 0.0;
    for (cd a : alpha) s += std::sqrt(std::norm(a));
    const int m = truncation_order(s, eps);
    return {truncated(alpha, m), m, bound(s, m)};
  }

 private:
  cd truncated_pair(cd a1, cd a2, int m) const {
    // Power sums p_j = a1^j + a2^j (p_0 = 1), then Horner in e = a1 a2 over the rows.
    double pr[kMaxOrder + 1], pi[kMaxOrder + 1];
    pr[0] = 1.0;
    pi[0] = 0.0;
    double xr = a1.real(), xi = a1.imag(), yr = a2.real(), yi = a2.imag();
    const double ur = xr, ui = xi, vr = yr, vi = yi;
    for (int j = 1; j <= m; ++j) {
      pr[j] = xr + yr;
      pi[j] = xi + yi;
      const double nx = xr * ur - xi * ui, ny = yr * vr - yi * vi;
      xi = xr * ui + xi * ur;
      yi = yr * vi + yi * vr;
      xr = nx;
      yr = ny;
    }
    const double dr = ur * vr - ui * vi, di = ur * vi + ui * vr;
    double sr = 0.0, si = 0.0;
    for (int q = m / 2; q >= 0; --q) {
      const double* c = pair_rows_[q].data();
      double tr = 0.0, ti = 0.0;
      for (int j = 0; j <= m - 2 * q; ++j) {
        tr += c[j] * pr[j];
        ti += c[j] * pi[j];
      }
      const double nr = sr * dr - si * di + tr;
      si = sr * di + si * dr + ti;
      sr = nr;
    }
    return {sr, si};
  }

  double b_;
  int d_;
  std::shared_ptr<const ZonalTable> table_;
  int max_order_ = 0;
  std::vector<double> log_hat_;
  std::vector<std::vector<double>> weights_;
  struct Term {
    double coef;
    std::uint8_t exp[kMaxDim + 1];
  };
  std::vector<Term> terms_;
  std::vector<std::size_t> term_end_;
  std::vector<std::vector<double>> pair_rows_;
  std::vector<double> bound_offset_;
};

/// One-shot 0F1(b; alpha) with remainder at most eps.
inline cd hyp0f1(double b, std::span<const cd> alpha, double eps) {
  return Hyp0F1(b, static_cast<int>(alpha.size()))(alpha, eps).value;
}

// ---------------------------------------------------------------------------
// Gamma functions

/// log Gamma(z) for complex z (Lanczos, g = 7).
inline cd lgamma_complex(cd z) {
  static constexpr std::array<double, 9> p = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  constexpr double pi = std::numbers::pi;
  if (z.real() < 0.5) {
    return std::log(pi / std::sin(pi * z)) - lgamma_complex(1.0 - z);
  }
  z -= 1.0;
  cd x = p[0];
  for (int i = 1; i < 9; ++i) x += p[i] / (z + static_cast<double>(i));
  const cd t = z + 7.5;
  return 0.5 * std::log(2.0 * pi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

/// Multivariate gamma Gamma_d(a) = pi^{d(d-1)/4} prod_j Gamma(a - (j-1)/2).
inline cd mv_gamma(cd a, int d) {
  WMSV_REQUIRE(d >= 1, Errc::DomainError, "d must be positive");
  WMSV_REQUIRE(a.real() > 0.5 * (d - 1), Errc::DomainError, "need Re(a) > (d-1)/2");
  if (a.imag() == 0.0) {
    double out = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
    for (int j = 0; j < d; ++j) out += std::lgamma(a.real() - 0.5 * j);
    return std::exp(out);
  }
  cd out = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
  for (int j = 0; j < d; ++j) out += lgamma_complex(a - 0.5 * j);
  return std::exp(out);
}

/// log Gamma_d(a) for real a.
inline double log_mv_gamma(double a, int d) {
  WMSV_REQUIRE(a > 0.5 * (d - 1), Errc::DomainError, "need a > (d-1)/2");
  double out = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
  for (int j = 0; j < d; ++j) out += std::lgamma(a - 0.5 * j);
  return out;
}

// ---------------------------------------------------------------------------
// Modified Bessel function of the first kind

namespace detail {

// e^{-Re w} S(w) for Re w >= 0 where I_nu(w) = (w/2)^nu S(w) and S is entire, even.
inline cd bessel_entire_scaled(double nu, cd w) {
  const double aw = std::abs(w);
  if (aw <= 17.0) {
    const cd q = 0.25 * w * w;
    cd term = 1.0 / std::tgamma(nu + 1.0);
    cd sum = term;
    for (int k = 1; k < 500; ++k) {
      term *= q / (k * (nu + k));
      sum += term;
      if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    return sum * std::exp(-w.real());
  }
  // Hankel expansion with both exponentials, valid uniformly for Re w >= 0.
  const double mu4 = 4.0 * nu * nu;
  cd s_plus = 1.0, s_minus = 1.0;
  cd a = 1.0;
  double last = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    a *= (mu4 - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k) / w;
    const double mag = std::abs(a);
    if (mag > last) break;
    s_minus += (k % 2 ? -1.0 : 1.0) * a;
    s_plus += a;
    last = mag;
    if (mag < 1e-17) break;
  }
  const cd root = std::sqrt(2.0 * std::numbers::pi * w);
  const double sign = w.imag() >= 0.0 ? 1.0 : -1.0;
  const cd phase = std::exp(cd(0.0, sign * nu * std::numbers::pi));
  const cd scaled_i = (std::exp(cd(0.0, w.imag())) * s_minus +
                       cd(0.0, sign) * phase * std::exp(-w - w.real()) * s_plus) / root;
  return scaled_i * std::pow(0.5 * w, -nu);
}

}  // namespace detail

/// Entire part S(z) of I_nu(z) = (z/2)^nu S(z), scaled by e^{-|Re z|}.
inline cd bessel_i_entire_scaled(double nu, cd z) {
  WMSV_REQUIRE(nu > -1.0, Errc::DomainError, "need nu > -1");
  return detail::bessel_entire_scaled(nu, z.real() >= 0.0 ? z : -z);
}

/// e^{-|Re z|} I_nu(z), principal branch.
inline cd bessel_i_scaled(double nu, cd z) {
  WMSV_REQUIRE(nu > -1.0, Errc::DomainError, "need nu > -1");
  if (z == cd(0.0)) return nu == 0.0 ? cd(1.0) : cd(0.0);
  return std::pow(0.5 * z, nu) * bessel_i_entire_scaled(nu, z);
}

/// I_nu(z), principal branch, |z| <= 200.
inline cd bessel_i(double nu, cd z) {
  WMSV_REQUIRE(nu > -1.0, Errc::DomainError, "need nu > -1");
  WMSV_REQUIRE(std::abs(z) <= 200.0, Errc::DomainError, "|z| > 200: use bessel_i_scaled");
  return bessel_i_scaled(nu, z) * std::exp(std::abs(z.real()));
}

}  // namespace wmsv
