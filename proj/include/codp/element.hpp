#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace codp {

/// A point of some poset: a non-negative real (with +inf standing for the top
/// element), a label of a finite poset, or a tuple for product posets.
///
/// Elements carry no reference to their poset; membership is checked by the
/// poset operations that consume them.
class Element {
 public:
  using Tuple = std::vector<Element>;

  Element() : value_(0.0) {}

  static Element scalar(double v) { return Element(Value(v == 0.0 ? 0.0 : v)); }
  static Element top() { return Element(Value(std::numeric_limits<double>::infinity())); }
  static Element label(std::string s) { return Element(Value(std::move(s))); }
  static Element tuple(Tuple items) { return Element(Value(std::move(items))); }
  static Element unit() { return tuple({}); }

  bool is_scalar() const { return value_.index() == 0; }
  bool is_label() const { return value_.index() == 1; }
  bool is_tuple() const { return value_.index() == 2; }
  bool is_top() const { return is_scalar() && std::get<0>(value_) == std::numeric_limits<double>::infinity(); }

  double as_scalar() const { return std::get<0>(value_); }
  const std::string& as_label() const { return std::get<1>(value_); }
  const Tuple& items() const { return std::get<2>(value_); }
  const Element& operator[](std::size_t i) const { return items().at(i); }
  std::size_t arity() const { return is_tuple() ? items().size() : 1; }

  friend bool operator==(const Element& a, const Element& b) { return a.value_ == b.value_; }
  friend bool operator!=(const Element& a, const Element& b) { return !(a == b); }

  /// Canonical total order used for sorting antichains. Unrelated to any poset order.
  friend bool operator<(const Element& a, const Element& b);

  std::size_t hash() const;
  std::string to_string() const;

 private:
  using Value = std::variant<double, std::string, Tuple>;
  explicit Element(Value v) : value_(std::move(v)) {}
  Value value_;
};

std::ostream& operator<<(std::ostream& os, const Element& e);

inline Element scalar(double v) { return Element::scalar(v); }
inline Element label(std::string s) { return Element::label(std::move(s)); }

inline Element tuple(std::initializer_list<Element> xs) { return Element::tuple(Element::Tuple(xs)); }

}  // namespace codp

template <>
struct std::hash<codp::Element> {
  std::size_t operator()(const codp::Element& e) const noexcept { return e.hash(); }
};
