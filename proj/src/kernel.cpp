#include "codp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace codp {

ParamSpace ParamSpace::finite(std::vector<std::string> labels) {
  if (labels.empty()) throw DomainError("finite parameter space needs at least one label");
  ParamSpace s;
  s.kind_ = Kind::finite;
  s.labels_ = std::move(labels);
  for (std::size_t i = 0; i < s.labels_.size(); ++i)
    for (std::size_t j = i + 1; j < s.labels_.size(); ++j)
      if (s.labels_[i] == s.labels_[j]) throw DomainError("duplicate parameter label '" + s.labels_[i] + "'");
  return s;
}

ParamSpace ParamSpace::box(std::vector<std::string> names, std::vector<std::pair<double, double>> bounds) {
  if (names.size() != bounds.size()) throw DomainError("box: one bound per coordinate");
  for (const auto& [lo, hi] : bounds)
    if (!(lo <= hi)) throw DomainError("box: empty interval");
  ParamSpace s;
  s.kind_ = Kind::box;
  s.names_ = std::move(names);
  s.bounds_ = std::move(bounds);
  return s;
}

ParamSpace ParamSpace::product(ParamSpace a, ParamSpace b) {
  ParamSpace s;
  s.kind_ = Kind::product;
  s.factors_ = {std::move(a), std::move(b)};
  return s;
}

bool ParamSpace::contains(const Element& x) const {
  switch (kind_) {
    case Kind::finite:
      return x.is_label() && std::find(labels_.begin(), labels_.end(), x.as_label()) != labels_.end();
    case Kind::box:
      if (!x.is_tuple() || x.arity() != bounds_.size()) return false;
      for (std::size_t i = 0; i < bounds_.size(); ++i) {
        const Element& v = x[i];
        if (!v.is_scalar() || v.is_top()) return false;
        if (v.as_scalar() < bounds_[i].first || v.as_scalar() > bounds_[i].second) return false;
      }
      return true;
    case Kind::product:
      return x.is_tuple() && x.arity() == 2 && left().contains(x[0]) && right().contains(x[1]);
  }
  return false;
}

bool ParamSpace::is_finite() const {
  switch (kind_) {
    case Kind::finite:
      return true;
    case Kind::box:
      return false;
    case Kind::product:
      return left().is_finite() && right().is_finite();
  }
  return false;
}

std::vector<Element> ParamSpace::points() const {
  if (!is_finite()) throw UnsupportedError("parameter space " + to_string() + " is not finite");
  std::vector<Element> out;
  if (kind_ == Kind::finite) {
    for (const auto& l : labels_) out.push_back(label(l));
    return out;
  }
  for (const auto& a : left().points())
    for (const auto& b : right().points()) out.push_back(tuple({a, b}));
  return out;
}

std::size_t ParamSpace::index_of(const Element& x) const {
  require_param(*this, x);
  if (kind_ == Kind::finite)
    return static_cast<std::size_t>(std::find(labels_.begin(), labels_.end(), x.as_label()) - labels_.begin());
  if (kind_ == Kind::product) return left().index_of(x[0]) * right().points().size() + right().index_of(x[1]);
  throw UnsupportedError("parameter space " + to_string() + " is not finite");
}

std::string ParamSpace::to_string() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::finite:
      os << '{';
      for (std::size_t i = 0; i < labels_.size(); ++i) os << (i ? ", " : "") << labels_[i];
      os << '}';
      break;
    case Kind::box:
      os << "box(";
      for (std::size_t i = 0; i < names_.size(); ++i)
        os << (i ? ", " : "") << names_[i] << " in [" << bounds_[i].first << ", " << bounds_[i].second << ']';
      os << ')';
      break;
    case Kind::product:
      os << '(' << left().to_string() << " x " << right().to_string() << ')';
      break;
  }
  return os.str();
}

bool operator==(const ParamSpace& a, const ParamSpace& b) {
  return a.kind_ == b.kind_ && a.labels_ == b.labels_ && a.names_ == b.names_ && a.bounds_ == b.bounds_ &&
         a.factors_ == b.factors_;
}

void require_param(const ParamSpace& s, const Element& x) {
  if (!s.contains(x)) throw DomainError(x.to_string() + " is not a point of " + s.to_string());
}

namespace {

void check_stochastic(const Eigen::MatrixXd& m) {
  if ((m.array() < 0).any()) throw DomainError("kernel table has negative entries");
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (std::abs(m.row(i).sum() - 1.0) > 1e-9) throw DomainError("kernel table rows must sum to 1");
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

DesignProblem placeholder(const DPSpace& s) {
  return DesignProblem(s.fun, s.res, [res = s.res](const Element&) { return QueryResult(res); });
}

DPSpace lifted_space(BinaryOp op, const DPSpace& a, const DPSpace& b) {
  DesignProblem d = apply(op, placeholder(a), placeholder(b));
  return {d.fun_poset(), d.res_poset()};
}

DPSpace traced_space(const DPSpace& a) {
  DesignProblem d = trace(placeholder(a));
  return {d.fun_poset(), d.res_poset()};
}

}  // namespace

ParamKernel delta_kernel(ParamSpace domain, ParamSpace codomain, std::function<Element(const Element&)> fn) {
  ParamKernel k{domain, codomain, nullptr, std::nullopt};
  if (domain.is_finite() && codomain.is_finite()) {
    auto pts = domain.points();
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pts.size()),
                                              static_cast<Eigen::Index>(codomain.points().size()));
    for (std::size_t i = 0; i < pts.size(); ++i)
      t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(codomain.index_of(fn(pts[i])))) = 1.0;
    k.pmf = std::move(t);
  }
  k.sample = [fn = std::move(fn), codomain = std::move(codomain)](const Element& m, std::uint64_t) {
    Element out = fn(m);
    require_param(codomain, out);
    return out;
  };
  return k;
}

ParamKernel finite_kernel(ParamSpace domain, ParamSpace codomain, Eigen::MatrixXd pmf) {
  const auto rows = static_cast<Eigen::Index>(domain.points().size());
  const auto outcomes = codomain.points();
  if (pmf.rows() != rows || pmf.cols() != static_cast<Eigen::Index>(outcomes.size()))
    throw DomainError("kernel table shape does not match its spaces");
  check_stochastic(pmf);
  auto sample = [domain, outcomes, pmf](const Element& m, std::uint64_t seed) {
    const auto row = static_cast<Eigen::Index>(domain.index_of(m));
    std::mt19937_64 rng(seed);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0;
    Eigen::Index last = 0;
    for (Eigen::Index j = 0; j < pmf.cols(); ++j) {
      if (pmf(row, j) <= 0) continue;
      last = j;
      acc += pmf(row, j);
      if (u < acc) return outcomes[static_cast<std::size_t>(j)];
    }
    return outcomes[static_cast<std::size_t>(last)];
  };
  return ParamKernel{std::move(domain), std::move(codomain), std::move(sample), std::move(pmf)};
}

ParamKernel identity_kernel(const ParamSpace& s) {
  return delta_kernel(s, s, [](const Element& m) { return m; });
}

ParamKernel kernel_product(const ParamKernel& a, const ParamKernel& b) {
  ParamKernel k{ParamSpace::product(a.domain, b.domain), ParamSpace::product(a.codomain, b.codomain),
                [as = a.sample, bs = b.sample](const Element& m, std::uint64_t seed) {
                  return tuple({as(m[0], derive_seed(seed, 1)), bs(m[1], derive_seed(seed, 2))});
                },
                std::nullopt};
  if (a.pmf && b.pmf) k.pmf = kron(*a.pmf, *b.pmf);
  return k;
}

ParamKernel kernel_compose(const ParamKernel& g, const ParamKernel& f) {
  if (f.codomain != g.domain)
    throw DomainError("kernel_compose: " + f.codomain.to_string() + " does not match " + g.domain.to_string());
  ParamKernel k{f.domain, g.codomain,
                [fs = f.sample, gs = g.sample](const Element& m, std::uint64_t seed) {
                  return gs(fs(m, derive_seed(seed, 1)), derive_seed(seed, 2));
                },
                std::nullopt};
  if (f.pmf && g.pmf) k.pmf = (*f.pmf) * (*g.pmf);
  return k;
}

ParameterizedDP constant_family(const DesignProblem& dp, ParamSpace domain) {
  return {std::move(domain), {dp.fun_poset(), dp.res_poset()}, [dp](const Element&) { return dp; }};
}

ParameterizedDP param_lift(BinaryOp op, const ParameterizedDP& a, const ParameterizedDP& b) {
  return {ParamSpace::product(a.domain, b.domain), lifted_space(op, a.codomain, b.codomain),
          [op, ab = a.builder, bb = b.builder](const Element& m) { return apply(op, ab(m[0]), bb(m[1])); }};
}

ParameterizedDP param_trace(const ParameterizedDP& a, TraceOptions opts) {
  return {a.domain, traced_space(a.codomain),
          [opts, ab = a.builder](const Element& m) { return trace(ab(m), opts); }};
}

ParameterizedDP reparam(const ParameterizedDP& a, ParamSpace domain, std::function<Element(const Element&)> r) {
  return {std::move(domain), a.codomain, [a, r = std::move(r)](const Element& m) { return a.build(r(m)); }};
}

DPKernel as_kernel(const ParameterizedDP& a) {
  return {a.domain, a.codomain, [b = a.builder](const Element& m, std::uint64_t) { return b(m); }, std::nullopt};
}

DPKernel reparam_kernel(const DPKernel& a, const ParamKernel& r) {
  if (r.codomain != a.domain)
    throw DomainError("reparam_kernel: " + r.codomain.to_string() + " does not match " + a.domain.to_string());
  return {r.domain, a.codomain,
          [as = a.sample, rs = r.sample](const Element& m, std::uint64_t seed) {
            return as(rs(m, derive_seed(seed, 1)), derive_seed(seed, 2));
          },
          std::nullopt};
}

DPKernel kernel_lift(BinaryOp op, const DPKernel& a, const DPKernel& b) {
  return {ParamSpace::product(a.domain, b.domain), lifted_space(op, a.codomain, b.codomain),
          [op, as = a.sample, bs = b.sample](const Element& m, std::uint64_t seed) {
            return apply(op, as(m[0], derive_seed(seed, 1)), bs(m[1], derive_seed(seed, 2)));
          },
          std::nullopt};
}

DPKernel kernel_trace(const DPKernel& a, TraceOptions opts) {
  return {a.domain, traced_space(a.codomain),
          [opts, as = a.sample](const Element& m, std::uint64_t seed) { return trace(as(m, seed), opts); },
          std::nullopt};
}

DPSampler condition(const DPKernel& a, const Element& m) {
  require_param(a.domain, m);
  return {a.codomain.fun, a.codomain.res, [s = a.sample, m](std::uint64_t seed) { return s(m, seed); }};
}

Estimate success_probability(const DPKernel& a, const Element& d, const Element& f, const Element& r,
                             std::size_t n, std::uint64_t root_seed) {
  return success_probability(condition(a, d), f, r, n, root_seed);
}

}  // namespace codp
