#pragma once

#include <cmath>
#include <string>

#include "locallearn/error.hpp"

namespace locallearn {

enum class TransferKind { linear, logistic01, tanh11, threshold01, threshold11 };

inline std::string to_string(TransferKind k) {
  switch (k) {
    case TransferKind::linear: return "linear";
    case TransferKind::logistic01: return "logistic01";
    case TransferKind::tanh11: return "tanh11";
    case TransferKind::threshold01: return "threshold01";
    case TransferKind::threshold11: return "threshold11";
  }
  return "linear";
}

inline TransferKind transfer_from_string(const std::string& s) {
  if (s == "linear") return TransferKind::linear;
  if (s == "logistic01" || s == "logistic" || s == "sigmoid") return TransferKind::logistic01;
  if (s == "tanh11" || s == "tanh") return TransferKind::tanh11;
  if (s == "threshold01") return TransferKind::threshold01;
  if (s == "threshold11" || s == "threshold") return TransferKind::threshold11;
  throw Error("unknown transfer function '" + s + "'");
}

inline double logistic(double s) { return 1.0 / (1.0 + std::exp(-s)); }

/// Threshold kinds map the tie S == 0 to the upper value.
struct TransferFunction {
  TransferKind kind = TransferKind::linear;
  double slope = 1.0;

  double operator()(double s) const {
    const double x = slope * s;
    switch (kind) {
      case TransferKind::linear: return x;
      case TransferKind::logistic01: return logistic(x);
      case TransferKind::tanh11: return std::tanh(x);
      case TransferKind::threshold01: return x >= 0 ? 1.0 : 0.0;
      case TransferKind::threshold11: return x >= 0 ? 1.0 : -1.0;
    }
    return x;
  }

  double derivative(double s) const {
    switch (kind) {
      case TransferKind::linear: return slope;
      case TransferKind::logistic01: {
        const double y = logistic(slope * s);
        return slope * y * (1 - y);
      }
      case TransferKind::tanh11: {
        const double y = std::tanh(slope * s);
        return slope * (1 - y * y);
      }
      default: throw Error("non-differentiable; use PALR/PWLR or steep-sigmoid surrogate");
    }
  }

  bool differentiable() const { return kind != TransferKind::threshold01 && kind != TransferKind::threshold11; }
  bool threshold() const { return !differentiable(); }
};

inline TransferFunction linear_transfer() { return {TransferKind::linear, 1.0}; }
inline TransferFunction logistic_transfer(double slope = 1.0) { return {TransferKind::logistic01, slope}; }
inline TransferFunction tanh_transfer(double slope = 1.0) { return {TransferKind::tanh11, slope}; }
inline TransferFunction threshold_transfer() { return {TransferKind::threshold11, 1.0}; }

}  // namespace locallearn
