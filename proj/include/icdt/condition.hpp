#pragma once

#include <cstdint>
#include <string>

#include "icdt/dataset.hpp"

namespace icdt {

// One antecedent atom: an equality on a categorical feature or a half-open
// interval bound on a numeric one. LE is inclusive, GT strict, matching the
// binary split convention (left = "<= threshold").
struct Condition {
  enum class Op { Eq, Le, Gt };

  int feature = -1;
  Op op = Op::Eq;
  std::uint32_t symbol = 0;  // Op::Eq
  double bound = 0.0;        // Op::Le / Op::Gt

  static Condition eq(int feature, std::uint32_t symbol) {
    Condition c;
    c.feature = feature;
    c.op = Op::Eq;
    c.symbol = symbol;
    return c;
  }
  static Condition le(int feature, double bound) {
    Condition c;
    c.feature = feature;
    c.op = Op::Le;
    c.bound = bound;
    return c;
  }
  static Condition gt(int feature, double bound) {
    Condition c;
    c.feature = feature;
    c.op = Op::Gt;
    c.bound = bound;
    return c;
  }

  bool holds(const Dataset& d, std::uint32_t row) const {
    double v = d.value(row, static_cast<std::size_t>(feature));
    switch (op) {
      case Op::Eq:
        return static_cast<std::uint32_t>(v) == symbol;
      case Op::Le:
        return v <= bound;
      case Op::Gt:
        return v > bound;
    }
    return false;
  }

  bool operator==(const Condition& other) const {
    if (feature != other.feature || op != other.op) return false;
    return op == Op::Eq ? symbol == other.symbol : bound == other.bound;
  }
};

// Renders "x7==recommend", "x0>32.5" or "x0<=14.5" using schema names.
std::string to_string(const Condition& c, const Schema& schema);

}  // namespace icdt
