#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "codp/sampling.hpp"

namespace codp {

/// Where parameters live: a finite labelled set (values are labels), a real
/// box (values are tuples of scalars, one per dimension), or a product
/// (values are pairs).
class ParamSpace {
 public:
  enum class Kind { finite, box, product };

  static ParamSpace finite(std::vector<std::string> labels);
  static ParamSpace box(std::vector<std::string> names, std::vector<std::pair<double, double>> bounds);
  static ParamSpace product(ParamSpace a, ParamSpace b);

  Kind kind() const { return kind_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::pair<double, double>>& bounds() const { return bounds_; }
  const ParamSpace& left() const { return factors_.at(0); }
  const ParamSpace& right() const { return factors_.at(1); }

  bool contains(const Element& x) const;
  bool is_finite() const;
  /// Enumeration order of a finite space; products enumerate left-major.
  std::vector<Element> points() const;
  /// Position of x in points().
  std::size_t index_of(const Element& x) const;
  std::string to_string() const;

  friend bool operator==(const ParamSpace& a, const ParamSpace& b);
  friend bool operator!=(const ParamSpace& a, const ParamSpace& b) { return !(a == b); }

 private:
  Kind kind_ = Kind::finite;
  std::vector<std::string> labels_;
  std::vector<std::string> names_;
  std::vector<std::pair<double, double>> bounds_;
  std::vector<ParamSpace> factors_;
};

void require_param(const ParamSpace& s, const Element& x);

/// The space of design problems F -> R.
struct DPSpace {
  Poset fun;
  Poset res;
  friend bool operator==(const DPSpace& a, const DPSpace& b) { return a.fun == b.fun && a.res == b.res; }
};

template <class Out>
struct KernelTraits;
template <>
struct KernelTraits<Element> {
  using Codomain = ParamSpace;
};
template <>
struct KernelTraits<DesignProblem> {
  using Codomain = DPSpace;
};

/// A conditional distribution: for each parameter value, a seeded sampler of
/// Out. Kernels between finite spaces may carry their probability table
/// (rows follow domain.points(), columns codomain.points()).
template <class Out>
struct MarkovKernel {
  using Codomain = typename KernelTraits<Out>::Codomain;

  ParamSpace domain;
  Codomain codomain;
  std::function<Out(const Element&, std::uint64_t)> sample;
  std::optional<Eigen::MatrixXd> pmf;

  Out draw(const Element& m, std::uint64_t seed) const {
    require_param(domain, m);
    return sample(m, seed);
  }
};

using ParamKernel = MarkovKernel<Element>;
using DPKernel = MarkovKernel<DesignProblem>;

/// Delta kernel of a deterministic map between parameter spaces.
ParamKernel delta_kernel(ParamSpace domain, ParamSpace codomain, std::function<Element(const Element&)> fn);
/// Kernel between finite spaces given by its row-stochastic table.
ParamKernel finite_kernel(ParamSpace domain, ParamSpace codomain, Eigen::MatrixXd pmf);
ParamKernel identity_kernel(const ParamSpace& s);

/// Independent draws from both kernels (seeds split 1/2); tables multiply.
ParamKernel kernel_product(const ParamKernel& a, const ParamKernel& b);
/// Draw from f, then from g at the drawn value (seeds split 1/2); tables multiply as f * g.
ParamKernel kernel_compose(const ParamKernel& g, const ParamKernel& f);

/// A design problem parameterized by a point of `domain`.
struct ParameterizedDP {
  ParamSpace domain;
  DPSpace codomain;
  std::function<DesignProblem(const Element&)> builder;

  DesignProblem build(const Element& m) const {
    require_param(domain, m);
    return builder(m);
  }
};

ParameterizedDP constant_family(const DesignProblem& dp, ParamSpace domain);
/// Element-wise lift over A x B.
ParameterizedDP param_lift(BinaryOp op, const ParameterizedDP& a, const ParameterizedDP& b);
ParameterizedDP param_trace(const ParameterizedDP& a, TraceOptions opts = {});
/// build_B(m) = a.build(r(m)); r maps `domain` into a.domain.
ParameterizedDP reparam(const ParameterizedDP& a, ParamSpace domain, std::function<Element(const Element&)> r);

/// Deterministic family viewed as a kernel (every draw is the same DP).
DPKernel as_kernel(const ParameterizedDP& a);
/// Samples the parameter from r (seed split 1), then a DP from a (seed split 2).
DPKernel reparam_kernel(const DPKernel& a, const ParamKernel& r);
/// draw((m_A, m_B), seed) = op(a.draw(m_A, seed_1), b.draw(m_B, seed_2)).
DPKernel kernel_lift(BinaryOp op, const DPKernel& a, const DPKernel& b);
DPKernel kernel_trace(const DPKernel& a, TraceOptions opts = {});

/// The distribution of DPs at a fixed parameter value.
DPSampler condition(const DPKernel& a, const Element& m);

/// Probability that (f, r) is feasible for a DP drawn from a at parameter d.
Estimate success_probability(const DPKernel& a, const Element& d, const Element& f, const Element& r,
                             std::size_t n, std::uint64_t root_seed);

}  // namespace codp
