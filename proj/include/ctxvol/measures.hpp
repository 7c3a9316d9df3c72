#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "error.hpp"

namespace ctxvol {

/// 2x2 table of context units for a term pair (a, b).
struct ContingencyCounts {
  double k11 = 0; // units with a and b
  double k12 = 0; // a without b
  double k21 = 0; // b without a
  double k22 = 0; // neither

  double total() const { return k11 + k12 + k21 + k22; }

  /// From joint count, the two marginal unit counts and the unit total.
  static ContingencyCounts from_marginals(double joint, double count_a, double count_b, double units) {
    return {joint, count_a - joint, count_b - joint, units - count_a - count_b + joint};
  }
};

enum class Measure { llr, dice, mi, poisson };

inline std::string to_string(Measure m) {
  switch (m) {
  case Measure::llr: return "llr";
  case Measure::dice: return "dice";
  case Measure::mi: return "mi";
  case Measure::poisson: return "poisson";
  }
  return "?";
}

inline Measure parse_measure(std::string_view s) {
  if (s == "llr") return Measure::llr;
  if (s == "dice") return Measure::dice;
  if (s == "mi") return Measure::mi;
  if (s == "poisson") return Measure::poisson;
  throw ConfigError("unknown significance measure '" + std::string(s) + "' (llr|dice|mi|poisson)");
}

namespace detail {
// (1 + d) ln(1 + d) - d, which is >= 0; a series near 0 avoids cancellation
inline double llr_phi(double d) {
  if (std::abs(d) < 0.125) {
    double s = 0;
    for (int n = 24; n >= 2; --n) s = s * d + ((n % 2 ? -1.0 : 1.0) / (n * (n - 1.0)));
    return s * d * d;
  }
  if (d == -1.0) return 1.0;
  return (1.0 + d) * std::log1p(d) - d;
}

// k ln(k / E) - k + E with E = row * col / N; the four of these sum to G^2 / 2.
// k N - row col is exact for integral counts below 2^26.
inline double llr_cell(double k, double n, double row, double col) {
  const double rc = row * col;
  if (!(rc > 0)) return 0.0;
  return rc / n * llr_phi((k * n - rc) / rc);
}
} // namespace detail

/// Two-way log-likelihood ratio G^2 = 2 sum k ln(k N / (row col)).
inline double llr_score(const ContingencyCounts &c) {
  const double n = c.total();
  if (!(n > 0)) throw Error("llr_score: empty contingency table");
  const double r1 = c.k11 + c.k12, r2 = c.k21 + c.k22;
  const double c1 = c.k11 + c.k21, c2 = c.k12 + c.k22;
  using detail::llr_cell;
  // grouped so that swapping a and b (k12 <-> k21) gives a bit-identical sum
  return 2.0 * ((llr_cell(c.k11, n, r1, c1) + llr_cell(c.k22, n, r2, c2)) +
                (llr_cell(c.k12, n, r1, c2) + llr_cell(c.k21, n, r2, c1)));
}

inline double dice_score(const ContingencyCounts &c) {
  const double denom = (c.k11 + c.k12) + (c.k11 + c.k21);
  return denom > 0 ? 2.0 * c.k11 / denom : 0.0;
}

/// Pointwise mutual information (natural log). Requires k11 > 0.
inline double mi_score(const ContingencyCounts &c) {
  return std::log(c.k11 * c.total() / ((c.k11 + c.k12) * (c.k11 + c.k21)));
}

/// Poisson significance k11 (ln k11 - ln lambda - 1) / ln N with
/// lambda = (k11 + k12)(k11 + k21) / N. Requires k11 > 0.
inline double poisson_score(const ContingencyCounts &c) {
  const double n = c.total();
  const double lambda = (c.k11 + c.k12) * (c.k11 + c.k21) / n;
  return c.k11 * (std::log(c.k11) - std::log(lambda) - 1.0) / std::log(n);
}

/// Weight of a pair under `m`, or nullopt when the pair is not significant:
/// k11 = 0, a non-positive score, or (for LLR) fewer joint units than expected
/// under independence.
inline std::optional<double> significance(Measure m, const ContingencyCounts &c) {
  if (!(c.k11 > 0)) return std::nullopt;
  const double n = c.total();
  double w = 0;
  switch (m) {
  case Measure::llr:
    if (c.k11 * n <= (c.k11 + c.k12) * (c.k11 + c.k21)) return std::nullopt;
    w = llr_score(c);
    break;
  case Measure::dice: w = dice_score(c); break;
  case Measure::mi: w = mi_score(c); break;
  case Measure::poisson:
    if (!(n > 1)) return std::nullopt;
    w = poisson_score(c);
    break;
  }
  if (!(w > 0) || !std::isfinite(w)) return std::nullopt;
  return w;
}

} // namespace ctxvol
