#pragma once

// Random small well-typed function bodies, as source text.

#include <random>
#include <string>

namespace testsupport {

class ExprGen {
public:
  explicit ExprGen(std::uint64_t seed) : rng_(seed) {}

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  std::string long_expr(int d) {
    if (d <= 0 || pick(5) == 0) {
      switch (pick(3)) {
      case 0:
        return "x";
      case 1:
        return "y";
      default:
        return std::to_string(pick(10));
      }
    }
    switch (pick(11)) {
    case 0:
      return "(+i " + long_expr(d - 1) + " " + long_expr(d - 1) + ")";
    case 1:
      return "(-i " + long_expr(d - 1) + " " + long_expr(d - 1) + ")";
    case 2:
      return "(*i " + long_expr(d - 1) + " " + long_expr(d - 1) + ")";
    case 3:
      return "(negi " + long_expr(d - 1) + ")";
    case 4:
      return "(if (<i " + long_expr(d - 1) + " " + long_expr(d - 1) + ") " + long_expr(d - 1) +
             " " + long_expr(d - 1) + ")";
    case 5:
      return "(let ((:long z " + long_expr(d - 1) + ")) (+i z " + long_expr(d - 1) + "))";
    case 6:
      return "(progn " + value_expr(d - 1) + " " + long_expr(d - 1) + ")";
    case 7:
      return "(cond ((<i " + long_expr(d - 1) + " 3) " + long_expr(d - 1) + ") (:else " +
             long_expr(d - 1) + "))";
    case 8:
      return "(get_int " + value_expr(d - 1) + ")";
    case 9:
      return "(maxi " + long_expr(d - 1) + " " + long_expr(d - 1) + ")";
    default:
      return "(absi " + long_expr(d - 1) + ")";
    }
  }

  std::string value_expr(int d) {
    if (d <= 0 || pick(5) == 0)
      return pick(2) ? "v" : "()";
    switch (pick(8)) {
    case 0:
      return "(box_long " + long_expr(d - 1) + ")";
    case 1:
      return "(tuple " + value_expr(d - 1) + " " + value_expr(d - 1) + ")";
    case 2:
      return "(list " + value_expr(d - 1) + " " + value_expr(d - 1) + ")";
    case 3:
      return "(and " + value_expr(d - 1) + " " + value_expr(d - 1) + ")";
    case 4:
      return "(or " + value_expr(d - 1) + " " + value_expr(d - 1) + " " + value_expr(d - 1) + ")";
    case 5:
      return "(if " + value_expr(d - 1) + " " + value_expr(d - 1) + " " + value_expr(d - 1) + ")";
    case 6:
      return "(let ((w " + value_expr(d - 1) + ")) (tuple w " + value_expr(d - 1) + "))";
    default:
      return "(vf " + value_expr(d - 1) + " " + long_expr(d - 1) + ")";
    }
  }

  /// A module whose function `probe` returns a random expression.
  std::string module(int depth) {
    bool as_long = pick(2) == 0;
    std::string body = as_long ? long_expr(depth) : value_expr(depth);
    return "(defun vf (v :long n) v)\n"
           "(defun probe (v :long x y)\n  " +
           body + ")\n";
  }

private:
  std::mt19937_64 rng_;
};

} // namespace testsupport
