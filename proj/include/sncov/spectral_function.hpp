#pragma once

#include <cmath>
#include <complex>
#include <string>

#include "sncov/errors.hpp"

namespace sncov {

// Test functions supported by the linear spectral statistics: log(x) and x^k.
class SpectralFunction {
 public:
  enum class Kind { Log, Power };

  static SpectralFunction log() { return SpectralFunction(Kind::Log, 0); }

  static SpectralFunction power(int k) {
    if (k < 1 || k > 50) throw DomainError("power exponent must be in [1, 50], got " + std::to_string(k));
    return SpectralFunction(Kind::Power, k);
  }

  // Accepts "log" or "power:k".
  static SpectralFunction parse(const std::string& text) {
    if (text == "log") return log();
    const std::string prefix = "power:";
    if (text.rfind(prefix, 0) == 0) {
      std::size_t used = 0;
      int k = 0;
      try {
        k = std::stoi(text.substr(prefix.size()), &used);
      } catch (const std::exception&) {
        throw DomainError("bad spectral function '" + text + "'");
      }
      if (used != text.size() - prefix.size()) throw DomainError("bad spectral function '" + text + "'");
      return power(k);
    }
    throw DomainError("unknown spectral function '" + text + "' (expected log or power:k)");
  }

  Kind kind() const { return kind_; }
  int exponent() const { return k_; }
  bool is_log() const { return kind_ == Kind::Log; }

  std::string name() const { return is_log() ? std::string("log") : "power:" + std::to_string(k_); }

  double operator()(double x) const { return is_log() ? std::log(x) : std::pow(x, k_); }

  std::complex<double> operator()(std::complex<double> z) const {
    if (is_log()) return std::log(z);
    std::complex<double> r(1.0, 0.0);
    for (int i = 0; i < k_; ++i) r *= z;
    return r;
  }

  friend bool operator==(const SpectralFunction&, const SpectralFunction&) = default;

 private:
  SpectralFunction(Kind kind, int k) : kind_(kind), k_(k) {}

  Kind kind_;
  int k_;
};

}  // namespace sncov
