#pragma once

#include "wmsv/model.hpp"
#include "wmsv/ode.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace wmsv {

/// (psi, phi, Psi, V) at t = 0 for one transform argument u.
struct RiccatiSolution {
  cd u = 0.0;
  CMat psi;
  cd phi = 0.0;
  CMat Psi;
  CMat V;
  cd detV = 0.0;
  cd log_detV = 0.0;  // log|det V| + i * continuous argument
};

namespace detail {

using RiccatiState = Eigen::Matrix<cd, Eigen::Dynamic, 1, 0, 3 * kMaxDim * kMaxDim + 1, 1>;

template <class Block>
inline void symmetrize_block(Block&& m) {
  const CMat avg = 0.5 * (m + m.transpose());
  m = avg;
}

// Right-hand side in time-to-maturity tau = T - t, starting from
// psi = 0, phi = 0, Psi = I, V = 0:
//   psi'  = -2 psi S psi + A psi + psi A' - u(u+1)/2 I,   A = H' - u R Sigma
//   phi'  = delta tr[psi S] + u r
//   Psi'  = (A - 2 psi S) Psi
//   V'    = Psi' S Psi
class RiccatiRhs {
 public:
  RiccatiRhs(const ModelParams& p, cd u, bool conditional)
      : d_(p.d), delta_(p.delta), r_(p.r), u_(u), conditional_(conditional) {
    S_ = p.gram().cast<cd>();
    A_ = p.H.transpose().cast<cd>() - u * (p.R * p.Sigma).cast<cd>();
  }

  RiccatiState operator()(double, const RiccatiState& y) const {
    const int n = d_ * d_;
    RiccatiState out(y.size());
    const Eigen::Map<const CMat> psi_map(y.data(), d_, d_);
    const CMat psi = psi_map;
    const CMat psiS = psi * S_;
    CMat dpsi = -2.0 * psiS * psi + A_ * psi + psi * A_.transpose();
    dpsi.diagonal().array() -= 0.5 * u_ * (u_ + 1.0);
    Eigen::Map<CMat>(out.data(), d_, d_) = dpsi;
    if (conditional_) {
      const CMat Psi = Eigen::Map<const CMat>(y.data() + n, d_, d_);
      const CMat dPsi = (A_ - 2.0 * psiS) * Psi;
      const CMat dV = Psi.transpose() * S_ * Psi;
      Eigen::Map<CMat>(out.data() + n, d_, d_) = dPsi;
      Eigen::Map<CMat>(out.data() + 2 * n, d_, d_) = dV;
    }
    out[y.size() - 1] = delta_ * psiS.trace() + u_ * r_;
    return out;
  }

 private:
  int d_;
  double delta_, r_;
  cd u_;
  bool conditional_;
  CMat S_, A_;
};

inline OdeOptions riccati_options(double tol) {
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  return opt;
}

}  // namespace detail

/// Full conditional system at u. The argument of det V is continued along
/// tau from tau = 0, where det V(tau) / tau^d -> det(S) > 0.
inline RiccatiSolution solve_conditional(const ModelParams& p, cd u, double tol = 1e-10) {
  WMSV_REQUIRE(tol > 0.0, Errc::DomainError, "tolerance must be positive");
  const int d = p.d, n = d * d;
  detail::RiccatiState y = detail::RiccatiState::Zero(3 * n + 1);
  Eigen::Map<CMat>(y.data() + n, d, d).setIdentity();

  ArgTracker arg;
  arg.push(cd(p.gram().determinant(), 0.0));
  auto on_accept = [&](double tau, detail::RiccatiState& s) {
    detail::symmetrize_block(Eigen::Map<CMat>(s.data(), d, d));
    detail::symmetrize_block(Eigen::Map<CMat>(s.data() + 2 * n, d, d));
    const CMat V = Eigen::Map<const CMat>(s.data() + 2 * n, d, d);
    arg.push(V.determinant() / std::pow(tau, d));
  };
  y = integrate_dp45(detail::RiccatiRhs(p, u, true), y, 0.0, p.T, detail::riccati_options(tol),
                     on_accept);

  RiccatiSolution out;
  out.u = u;
  out.psi = Eigen::Map<const CMat>(y.data(), d, d);
  out.Psi = Eigen::Map<const CMat>(y.data() + n, d, d);
  out.V = Eigen::Map<const CMat>(y.data() + 2 * n, d, d);
  out.phi = y[3 * n];
  out.detV = out.V.determinant();
  WMSV_REQUIRE(std::abs(out.detV) > 0.0, Errc::SingularV, "det V vanished");
  const double continuous_arg = arg.push(out.detV / std::pow(p.T, d));
  out.log_detV = cd(std::log(std::abs(out.detV)), continuous_arg);
  return out;
}

struct UnconditionalSolution {
  CMat psi;
  cd phi;
};

/// The (psi, phi) subsystem only.
inline UnconditionalSolution solve_unconditional(const ModelParams& p, cd u, double tol = 1e-10) {
  const int d = p.d, n = d * d;
  detail::RiccatiState y = detail::RiccatiState::Zero(n + 1);
  auto on_accept = [&](double, detail::RiccatiState& s) {
    detail::symmetrize_block(Eigen::Map<CMat>(s.data(), d, d));
  };
  y = integrate_dp45(detail::RiccatiRhs(p, u, false), y, 0.0, p.T, detail::riccati_options(tol),
                     on_accept);
  return {Eigen::Map<const CMat>(y.data(), d, d), y[n]};
}

/// Solutions at u = -i * lambda_k.
inline std::vector<RiccatiSolution> solve_on_frequencies(const ModelParams& p,
                                                         std::span<const double> lambdas,
                                                         double tol = 1e-10) {
  std::vector<RiccatiSolution> out;
  out.reserve(lambdas.size());
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    try {
      out.push_back(solve_conditional(p, cd(0.0, -lambdas[k]), tol));
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " (frequency index " + std::to_string(k) + ")");
    }
  }
  return out;
}

/// Solutions at u = -i n h for n = 0..N.
struct TransformGrid {
  double h = 0.0;
  int N = 0;
  std::vector<RiccatiSolution> solutions;
};

inline TransformGrid build_grid(const ModelParams& p, double h, int N, double tol = 1e-10) {
  WMSV_REQUIRE(h > 0.0 && N >= 1, Errc::DomainError, "need h > 0 and N >= 1");
  std::vector<double> lambdas(N + 1);
  for (int n = 0; n <= N; ++n) lambdas[n] = n * h;
  return {h, N, solve_on_frequencies(p, lambdas, tol)};
}

/// E[exp(-u Y_T)] = exp(-phi - tr[psi x] - u y).
inline cd laplace_yT(cd u, const ModelParams& p, double tol = 1e-10) {
  try {
    const auto s = solve_unconditional(p, u, tol);
    return std::exp(-s.phi - (s.psi * p.x.cast<cd>()).trace() - u * p.y);
  } catch (const Error& e) {
    if (e.code() == Errc::StepSizeUnderflow) throw Error(Errc::TransformNonexistent, e.what());
    throw;
  }
}

}  // namespace wmsv
