#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace wmsv {

// Volatility-factor dimension is small (the model is used with d <= 5), so
// matrices carry inline storage bounded by kMaxDim and never touch the heap.
inline constexpr int kMaxDim = 5;

using cd = std::complex<double>;

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using CMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using CVec = Eigen::Matrix<cd, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

using ComplexMatrix = CMat;

enum class Errc {
  NonSymmetric,
  IndefiniteInput,
  NoConvergence,
  ZeroCrossing,
  GridTooCoarse,
  ForbiddenParameter,
  WeightExceedsTable,
  TruncationUnreachable,
  DomainError,
  StepSizeUnderflow,
  NotInteger,
  InvalidLaw,
  IllConditioned,
  HypergeometricOverflow,
  SingularV,
  NonPositiveVariance,
  OutOfRange,
  NoBracket,
  BesselOverflow,
  TransformNonexistent,
  DampingInvalid,
  InvalidParams,
  ConfigInvalid,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::NonSymmetric: return "NonSymmetric";
    case Errc::IndefiniteInput: return "IndefiniteInput";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::ZeroCrossing: return "ZeroCrossing";
    case Errc::GridTooCoarse: return "GridTooCoarse";
    case Errc::ForbiddenParameter: return "ForbiddenParameter";
    case Errc::WeightExceedsTable: return "WeightExceedsTable";
    case Errc::TruncationUnreachable: return "TruncationUnreachable";
    case Errc::DomainError: return "DomainError";
    case Errc::StepSizeUnderflow: return "StepSizeUnderflow";
    case Errc::NotInteger: return "NotInteger";
    case Errc::InvalidLaw: return "InvalidLaw";
    case Errc::IllConditioned: return "IllConditioned";
    case Errc::HypergeometricOverflow: return "HypergeometricOverflow";
    case Errc::SingularV: return "SingularV";
    case Errc::NonPositiveVariance: return "NonPositiveVariance";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NoBracket: return "NoBracket";
    case Errc::BesselOverflow: return "BesselOverflow";
    case Errc::TransformNonexistent: return "TransformNonexistent";
    case Errc::DampingInvalid: return "DampingInvalid";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

#define WMSV_REQUIRE(cond, code, msg)      \
  do {                                     \
    if (!(cond)) throw ::wmsv::Error((code), (msg)); \
  } while (0)

}  // namespace wmsv
