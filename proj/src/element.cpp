#include "codp/element.hpp"

#include <charconv>
#include <ostream>
#include <sstream>

namespace codp {

bool operator<(const Element& a, const Element& b) {
  if (a.value_.index() != b.value_.index()) return a.value_.index() < b.value_.index();
  switch (a.value_.index()) {
    case 0:
      return a.as_scalar() < b.as_scalar();
    case 1:
      return a.as_label() < b.as_label();
    default: {
      const auto& x = a.items();
      const auto& y = b.items();
      for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (x[i] < y[i]) return true;
        if (y[i] < x[i]) return false;
      }
      return x.size() < y.size();
    }
  }
}

std::size_t Element::hash() const {
  auto mix = [](std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  };
  switch (value_.index()) {
    case 0:
      return mix(1, std::hash<double>{}(as_scalar()));
    case 1:
      return mix(2, std::hash<std::string>{}(as_label()));
    default: {
      std::size_t h = 3;
      for (const auto& e : items()) h = mix(h, e.hash());
      return h;
    }
  }
}

std::string Element::to_string() const {
  std::ostringstream os;
  os << *this;
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Element& e) {
  if (e.is_top()) return os << "top";
  if (e.is_scalar()) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, e.as_scalar());
    return os.write(buf, res.ptr - buf);
  }
  if (e.is_label()) return os << e.as_label();
  os << '(';
  for (std::size_t i = 0; i < e.items().size(); ++i) {
    if (i) os << ", ";
    os << e.items()[i];
  }
  return os << ')';
}

}  // namespace codp
