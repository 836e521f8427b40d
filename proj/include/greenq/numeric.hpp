#pragma once

#include <cmath>
#include <utility>

#include <boost/math/tools/roots.hpp>

namespace greenq::numeric {

// Root of a function that changes sign on [lo, hi]. The bracket shrinks until
// its width is at most `tol`; the midpoint of the final bracket is returned.
template <typename F>
double bisect(F&& fn, double lo, double hi, double tol) {
  auto done = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  auto [a, b] = boost::math::tools::bisect(std::forward<F>(fn), lo, hi, done);
  return 0.5 * (a + b);
}

struct Minimum {
  double x;
  double value;
};

// Golden-section search for the minimum of a unimodal function on [lo, hi].
template <typename F>
Minimum golden_section(F&& fn, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = fn(c), fd = fn(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fn(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, fn(x)};
}

}  // namespace greenq::numeric
