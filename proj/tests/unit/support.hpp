#pragma once

#include <string>
#include <vector>

#include "qhs/expr.hpp"
#include "qhs/nonsmooth.hpp"

namespace test {

inline qhs::Vector vec(std::initializer_list<double> xs) {
  qhs::Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

// Function from an expression with one block per coordinate.
inline qhs::ScalarFn fn(const std::string& text, int arity, bool regular = false) {
  qhs::Expr e = qhs::Expr::parse(text, arity);
  return qhs::ScalarFn(std::vector<int>(static_cast<std::size_t>(arity), 1),
                       [e](const qhs::Vector& x) {
                         return e(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
                       },
                       regular);
}

}  // namespace test
