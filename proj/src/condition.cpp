#include "icdt/condition.hpp"

#include <charconv>

namespace icdt {

namespace {

std::string number_text(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

std::string to_string(const Condition& c, const Schema& schema) {
  const Feature& f = schema.features[static_cast<std::size_t>(c.feature)];
  switch (c.op) {
    case Condition::Op::Eq:
      return f.name + "==" + f.symbols[c.symbol];
    case Condition::Op::Le:
      return f.name + "<=" + number_text(c.bound);
    case Condition::Op::Gt:
      return f.name + ">" + number_text(c.bound);
  }
  return "";
}

}  // namespace icdt
