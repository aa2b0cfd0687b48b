#include "codp/uav.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>
#include <random>
#include <json.hpp>

#include "codp/sampling.hpp"

namespace codp::embedded {
extern const std::string uav_diagram;
extern const std::string uav_components;
}  // namespace codp::embedded

namespace codp::uav {

using dsl::ComponentContext;
using dsl::ParamValue;
using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Poset real(const char* unit) { return Poset::nonneg_real(unit); }

// Monotone arithmetic on [0, inf]: 0 * inf is 0 (nothing of an unbounded quantity).
double mul(double a, double b) { return a == 0 || b == 0 ? 0.0 : a * b; }

Element tup(std::initializer_list<double> xs) {
  Element::Tuple t;
  for (double x : xs) t.push_back(scalar(x));
  return Element::tuple(std::move(t));
}

double at(const Element& f, std::size_t i) { return f[i].as_scalar(); }

// Actuator law shared by actuation_dp and the diagram node.
std::optional<double> actuator_power(const ActuatorSpec& a, double velocity, double lift) {
  if (velocity > a.max_velocity) return std::nullopt;
  return a.p0 + mul(a.p1, mul(lift, lift));
}

struct BatteryCost {
  double mass, cost;
};

BatteryCost battery_cost(const BatteryTech& t, double capacity, double cycles) {
  const double packs = std::max(1.0, std::ceil(cycles / t.cycles));
  return {mul(capacity, 1000.0 / t.energy_density), mul(mul(capacity, t.cost_per_wh()), packs)};
}

const std::vector<std::string> kBatteryFields = {"energy_density", "wh_per_dollar", "cycles"};

ParamSpace nonneg_box(const std::vector<std::string>& names) {
  return ParamSpace::box(names, std::vector<std::pair<double, double>>(names.size(), {0.0, kInf}));
}

ParamRecord battery_record(const BatteryTech& t) {
  return {kBatteryFields, {t.energy_density, t.wh_per_dollar, t.cycles}};
}

ParamRecord actuator_record(const std::vector<ActuatorSpec>& as) {
  ParamRecord r;
  for (const auto& a : as)
    for (const auto& [f, v] : std::initializer_list<std::pair<const char*, double>>{
             {"mass", a.mass}, {"cost", a.cost}, {"max_velocity", a.max_velocity}, {"p0", a.p0}, {"p1", a.p1}}) {
      r.names.push_back(a.name + "." + f);
      r.values.push_back(v);
    }
  return r;
}

Element record_value(const ParamRecord& r) {
  Element::Tuple t;
  for (double v : r.values) t.push_back(scalar(v));
  return Element::tuple(std::move(t));
}

GaussianCalibration calibration_from(const dsl::Call& c) {
  GaussianCalibration cal;
  for (const auto& [k, v] : c.args) {
    if (v.kind != dsl::Value::Kind::number) throw DomainError(c.component + ": '" + k + "' must be a number");
    if (k == "spread")
      cal.spread = v.number;
    else if (k == "z")
      cal.z = v.number;
    else
      throw DomainError(c.component + ": unknown argument '" + k + "'");
  }
  if (cal.spread < 0 || !(cal.z > 0)) throw DomainError(c.component + ": need spread >= 0 and z > 0");
  return cal;
}

const ParamValue* find_box(const dsl::ParamValues& ps, const std::string& field) {
  for (const auto& [name, v] : ps)
    if (v.has_field(field)) return &v;
  return nullptr;
}

std::string shortest(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

}  // namespace

// ---------------------------------------------------------------------------
// Catalogue

const BatteryTech& Catalogue::battery(const std::string& name) const {
  for (const auto& b : batteries)
    if (b.name == name) return b;
  throw DomainError("unknown battery technology '" + name + "'");
}

std::vector<std::string> Catalogue::battery_names() const {
  std::vector<std::string> out;
  for (const auto& b : batteries) out.push_back(b.name);
  return out;
}

void validate(const ActuatorSpec& a) {
  for (double v : {a.mass, a.cost, a.max_velocity, a.p0, a.p1})
    if (!(v >= 0) || std::isinf(v)) throw DomainError("actuator '" + a.name + "': parameters must be finite and >= 0");
}

void validate(const BatteryTech& t) {
  for (double v : {t.energy_density, t.wh_per_dollar, t.cycles})
    if (!(v > 0) || std::isinf(v)) throw DomainError("battery '" + t.name + "': parameters must be finite and > 0");
}

Catalogue parse_catalogue(const std::string& text) {
  Catalogue c;
  try {
    json j = json::parse(text);
    for (const auto& a : j.at("actuators")) {
      ActuatorSpec s{a.at("name").get<std::string>(), a.at("mass").get<double>(),      a.at("cost").get<double>(),
                     a.at("max_velocity").get<double>(), a.at("p0").get<double>(), a.at("p1").get<double>()};
      validate(s);
      c.actuators.push_back(s);
    }
    for (const auto& b : j.at("batteries")) {
      BatteryTech t{b.at("name").get<std::string>(), b.at("energy_density").get<double>(),
                    b.at("wh_per_dollar").get<double>(), b.at("cycles").get<double>()};
      validate(t);
      c.batteries.push_back(t);
    }
  } catch (const json::exception& e) {
    throw DomainError(std::string("component table: ") + e.what());
  }
  if (c.actuators.empty() || c.batteries.empty()) throw DomainError("component table: need actuators and batteries");
  return c;
}

const Catalogue& default_catalogue() {
  static const Catalogue c = parse_catalogue(embedded::uav_components);
  return c;
}

// ---------------------------------------------------------------------------
// Components

DesignProblem task_dp(const TaskProfile& p) {
  if (!(p.num_missions >= 0 && p.distance >= 0 && p.frequency >= 0)) throw DomainError("task profile must be >= 0");
  Element need = tup({p.num_missions, p.distance, p.frequency});
  return from_monotone_map(
      Poset::product({}), Poset::product({real("count"), real("m"), real("1/s")}),
      [need](const Element&) { return std::optional<Element>(need); }, "task", false);
}

DesignProblem task_management_dp() {
  return from_monotone_map(
      Poset::product({real("count"), real("m"), real("1/s")}), Poset::product({real("count"), real("s"), real("m/s")}),
      [](const Element& f) -> std::optional<Element> {
        const double n = at(f, 0), d = at(f, 1), freq = at(f, 2);
        if (d == 0) return tup({n, 0.0, 0.0});
        const double v = mul(d, freq);
        if (v == 0) return std::nullopt;
        return tup({n, std::isinf(v) ? 0.0 : d / v, v});
      },
      "task_management", false);
}

DesignProblem perception_dp(double c0, double c1) {
  if (!(c0 >= 0 && c1 >= 0)) throw DomainError("perception constants must be >= 0");
  return from_monotone_map(
      real("m/s"), real("W"),
      [c0, c1](const Element& v) { return std::optional<Element>(scalar(c0 + mul(c1, v.as_scalar()))); }, "perception",
      false);
}

DesignProblem actuation_dp(const ActuatorSpec& a) {
  validate(a);
  return from_monotone_map(
      Poset::product({real("m/s"), real("N")}), Poset::product({real("W"), real("g"), real("USD")}),
      [a](const Element& f) -> std::optional<Element> {
        auto p = actuator_power(a, at(f, 0), at(f, 1));
        if (!p) return std::nullopt;
        return tup({*p, a.mass, a.cost});
      },
      a.name, false);
}

DesignProblem battery_dp(const BatteryTech& t) {
  validate(t);
  return from_monotone_map(
      Poset::product({real("Wh"), real("count")}), Poset::product({real("g"), real("USD")}),
      [t](const Element& f) {
        auto c = battery_cost(t, at(f, 0), at(f, 1));
        return std::optional<Element>(tup({c.mass, c.cost}));
      },
      t.name, false);
}

DesignProblem actuation_node_dp(const ActuatorSpec& a, double g) {
  validate(a);
  return from_monotone_map(
      Poset::product({real("m/s"), real("g"), real("g"), real("USD")}),
      Poset::product({real("W"), real("g"), real("USD")}),
      [a, g](const Element& f) -> std::optional<Element> {
        const double payload = at(f, 1), bm = at(f, 2), bc = at(f, 3);
        const double lift = mul(g, payload + a.mass + bm) / 1000.0;
        auto p = actuator_power(a, at(f, 0), lift);
        if (!p) return std::nullopt;
        return tup({*p, a.mass + bm, a.cost + bc});
      },
      a.name, false);
}

DesignProblem battery_node_dp(const BatteryTech& t) {
  validate(t);
  return from_monotone_map(
      Poset::product({real("W"), real("W"), real("s"), real("count")}), Poset::product({real("g"), real("USD")}),
      [t](const Element& f) {
        const double capacity = mul(at(f, 0) + at(f, 1), at(f, 2)) / 3600.0;
        auto c = battery_cost(t, capacity, at(f, 3));
        return std::optional<Element>(tup({c.mass, c.cost}));
      },
      t.name, false);
}

// ---------------------------------------------------------------------------
// Kernels

ParamKernel gaussian_param_kernel(ParamSpace domain, std::function<ParamRecord(const Element&)> base,
                                  std::vector<std::string> uncertain, GaussianCalibration cal) {
  if (cal.spread < 0 || !(cal.z > 0)) throw DomainError("gaussian kernel: need spread >= 0 and z > 0");
  std::vector<Element> pts = domain.is_finite() ? domain.points() : std::vector<Element>{};
  if (pts.empty()) throw DomainError("gaussian kernel: domain must be finite");
  const ParamRecord first = base(pts[0]);
  std::vector<std::size_t> idx;
  for (const auto& u : uncertain) {
    auto it = std::find(first.names.begin(), first.names.end(), u);
    if (it == first.names.end()) throw DomainError("gaussian kernel: unknown field '" + u + "'");
    idx.push_back(static_cast<std::size_t>(it - first.names.begin()));
  }
  for (const auto& m : pts) {
    ParamRecord r = base(m);
    if (r.names != first.names) throw DomainError("gaussian kernel: records must share field names");
    for (std::size_t i : idx)
      if (!(r.values[i] > 0))
        throw DomainError("gaussian kernel: uncertain field '" + r.names[i] + "' needs a positive mean");
  }
  ParamSpace codomain = nonneg_box(first.names);
  return {std::move(domain), codomain,
          [base, idx, cal](const Element& m, std::uint64_t seed) {
            ParamRecord r = base(m);
            if (cal.spread > 0) {
              std::mt19937_64 rng(seed);
              for (std::size_t i : idx) {
                std::normal_distribution<double> nd(r.values[i], cal.sigma(r.values[i]));
                r.values[i] = std::max(0.0, nd(rng));
              }
            }
            return record_value(r);
          },
          std::nullopt};
}

ParamKernel battery_param_kernel(const Catalogue& c, GaussianCalibration cal) {
  return gaussian_param_kernel(
      ParamSpace::finite(c.battery_names()),
      [c](const Element& m) { return battery_record(c.battery(m.as_label())); }, {"energy_density", "wh_per_dollar"},
      cal);
}

ParamKernel actuator_param_kernel(const Catalogue& c, GaussianCalibration cal) {
  std::vector<std::string> uncertain;
  for (const auto& a : c.actuators)
    for (const char* f : {"max_velocity", "p0", "p1"}) uncertain.push_back(a.name + "." + f);
  auto acts = c.actuators;
  return gaussian_param_kernel(
      ParamSpace::finite({"nominal"}), [acts](const Element&) { return actuator_record(acts); }, uncertain, cal);
}

BatteryTech battery_from(const ParamValue& v, std::string name) {
  BatteryTech t{std::move(name), v.field("energy_density"), v.field("wh_per_dollar"), v.field("cycles")};
  return t;
}

std::vector<ActuatorSpec> actuators_from(const ParamValue& v, const Catalogue& c) {
  std::vector<ActuatorSpec> out;
  for (const auto& a : c.actuators) {
    const std::string p = a.name + ".";
    out.push_back({a.name, v.field(p + "mass"), v.field(p + "cost"), v.field(p + "max_velocity"), v.field(p + "p0"),
                   v.field(p + "p1")});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Registry and diagram

const std::string& uav_diagram_text() { return embedded::uav_diagram; }

dsl::Registry uav_registry(const Catalogue& c) {
  dsl::Registry r = dsl::builtin_registry();
  r.add_component("uav.task", [](const ComponentContext& ctx) {
    return task_dp({ctx.number("missions"), ctx.number("distance"), ctx.number("frequency")});
  });
  r.add_component("uav.task_management", [](const ComponentContext&) { return task_management_dp(); });
  r.add_component("uav.perception", [](const ComponentContext& ctx) {
    return perception_dp(ctx.number_or("c0", 5.0), ctx.number_or("c1", 2.0));
  });
  r.add_component("uav.actuation", [c](const ComponentContext& ctx) {
    std::vector<ActuatorSpec> acts = c.actuators;
    if (const ParamValue* v = find_box(ctx.params, c.actuators.front().name + ".p1")) acts = actuators_from(*v, c);
    const double g = ctx.number_or("g", kGravity);
    std::optional<DesignProblem> acc;
    for (const auto& a : acts) {
      DesignProblem d = actuation_node_dp(a, g);
      acc = acc ? union_of(*acc, d) : d;
    }
    return *acc;
  });
  r.add_component("uav.battery", [c](const ComponentContext& ctx) {
    if (const ParamValue* v = find_box(ctx.params, "energy_density")) return battery_node_dp(battery_from(*v, "battery"));
    return battery_node_dp(c.battery(ctx.text("tech")));
  });
  r.add_kernel("uav.battery_kernel", [c](const dsl::Call& call) {
    return dsl::KernelSpec{battery_param_kernel(c, calibration_from(call)),
                           [c](const Element& m) { return record_value(battery_record(c.battery(m.as_label()))); }};
  });
  r.add_kernel("uav.actuator_kernel", [c](const dsl::Call& call) {
    return dsl::KernelSpec{actuator_param_kernel(c, calibration_from(call)),
                           [c](const Element&) { return record_value(actuator_record(c.actuators)); }};
  });
  return r;
}

dsl::Diagram uav_diagram(const Catalogue& c) {
  if (&c == &default_catalogue()) {
    static const dsl::Diagram d = dsl::check(dsl::parse(uav_diagram_text()), uav_registry(c));
    return d;
  }
  return dsl::check(dsl::parse(uav_diagram_text()), uav_registry(c));
}

DesignProblem compose_uav(const TaskProfile& profile, const BatteryTech& battery,
                          const std::vector<ActuatorSpec>& actuators) {
  if (actuators.empty()) throw DomainError("compose_uav: no actuators");
  const dsl::Diagram& d = uav_diagram();
  std::map<std::string, DesignProblem> overrides = {{"task", task_dp(profile)},
                                                    {"battery", battery_node_dp(battery)}};
  std::optional<DesignProblem> acc;
  for (const auto& a : actuators) {
    overrides.insert_or_assign("actuation", actuation_node_dp(a));
    DesignProblem branch = d.instantiate({}, overrides).renamed(a.name);
    acc = acc ? union_of(*acc, branch) : branch;
  }
  return *acc;
}

DesignProblem compose_uav_front(const TaskProfile& profile, const std::vector<BatteryTech>& batteries,
                                const std::vector<ActuatorSpec>& actuators) {
  if (batteries.empty()) throw DomainError("compose_uav_front: no battery technologies");
  std::optional<DesignProblem> acc;
  for (const auto& b : batteries) {
    DesignProblem d = compose_uav(profile, b, actuators).renamed(b.name);
    acc = acc ? union_of(*acc, d) : d;
  }
  return *acc;
}

DPKernel uav_kernel(const Catalogue& c, UavKernelOptions opts) {
  ParamKernel batt = battery_param_kernel(c, opts.calibration);
  ParamKernel act = actuator_param_kernel(c, opts.calibration);
  const ParamSpace box = nonneg_box(kBatteryFields);
  const ParamSpace abox = act.codomain;
  if (opts.profile && !(opts.profile->domain.is_finite() && opts.profile->domain.points().size() == 1))
    throw DomainError("uav_kernel: the profile kernel needs a one-point domain");
  DPSpace space{Poset::nonneg_real("g"), Poset::product({Poset::nonneg_real("g"), Poset::nonneg_real("USD")})};
  return {batt.domain, space,
          [c, batt, act, box, abox, opts](const Element& tech, std::uint64_t seed) {
            const std::vector<ActuatorSpec> acts =
                actuators_from(ParamValue{abox, act.draw(act.domain.points()[0], derive_seed(seed, 1))}, c);
            const BatteryTech b =
                battery_from(ParamValue{box, batt.draw(tech, derive_seed(seed, 2))}, tech.as_label());
            TaskProfile profile = opts.fixed_profile;
            if (opts.profile) {
              Element p = opts.profile->draw(opts.profile->domain.points()[0], derive_seed(seed, 3));
              profile = {p[0].as_scalar(), p[1].as_scalar(), p[2].as_scalar()};
            }
            return compose_uav(profile, b, acts);
          },
          std::nullopt};
}

// ---------------------------------------------------------------------------
// Experiments

UAVQueryRecord read_record(const QueryResult& q, std::string tech, double payload, std::uint64_t seed) {
  UAVQueryRecord rec{std::move(tech), payload, seed, false, 0, 0, {}};
  const Element* best = nullptr;
  for (const auto& e : q.minimal_resources) {
    // cheapest, then lightest
    if (!best || e[1] < (*best)[1] || (e[1] == (*best)[1] && e[0] < (*best)[0])) best = &e;
  }
  if (!best) return rec;
  rec.feasible = true;
  rec.self_weight = (*best)[0].as_scalar();
  rec.min_cost = (*best)[1].as_scalar();
  if (auto it = q.witnesses.find(*best); it != q.witnesses.end() && !it->second.empty() && !it->second[0].empty())
    rec.actuator = it->second[0].back();
  return rec;
}

double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) return std::nan("");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

CostSummary summarize(const std::vector<UAVQueryRecord>& records, std::string tech, double payload,
                      std::uint64_t root_seed) {
  CostSummary s;
  s.tech = std::move(tech);
  s.payload = payload;
  s.n = records.size();
  s.root_seed = root_seed;
  std::vector<double> costs;
  for (const auto& r : records)
    if (r.feasible) costs.push_back(r.min_cost);
  s.feasible = costs.size();
  s.infeasible_fraction = s.n ? static_cast<double>(s.n - s.feasible) / static_cast<double>(s.n) : 0.0;
  if (costs.empty()) {
    s.mean = s.q05 = s.q50 = s.q95 = std::nan("");
    return s;
  }
  double sum = 0;
  for (double x : costs) sum += x;  // fixed order: draws are stored by index
  s.mean = sum / static_cast<double>(costs.size());
  s.q05 = quantile(costs, 0.05);
  s.q50 = quantile(costs, 0.50);
  s.q95 = quantile(costs, 0.95);
  return s;
}

std::vector<CostDistribution> payload_sweep(const DPKernel& kernel, const std::string& tech,
                                            const std::vector<double>& payloads, std::size_t n,
                                            std::uint64_t root_seed) {
  if (payloads.empty()) throw DomainError("payload_sweep: empty payload grid");
  if (n == 0) throw DomainError("payload_sweep: n must be at least 1");
  const Element t = label(tech);
  require_param(kernel.domain, t);
  for (double p : payloads)
    if (!(p >= 0) || std::isinf(p)) throw DomainError("payload must be finite and >= 0");
  std::vector<std::vector<UAVQueryRecord>> table(payloads.size(), std::vector<UAVQueryRecord>(n));
  parallel_for(n, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(root_seed, i);
    DesignProblem dp = kernel.draw(t, seed);
    for (std::size_t k = 0; k < payloads.size(); ++k)
      table[k][i] = read_record(dp.evaluate(scalar(payloads[k])), tech, payloads[k], seed);
  });
  std::vector<CostDistribution> out;
  for (std::size_t k = 0; k < payloads.size(); ++k) {
    CostSummary s = summarize(table[k], tech, payloads[k], root_seed);
    out.push_back({std::move(table[k]), std::move(s)});
  }
  return out;
}

CostDistribution cost_distribution(const DPKernel& kernel, const std::string& tech, double payload, std::size_t n,
                                   std::uint64_t root_seed) {
  return std::move(payload_sweep(kernel, tech, {payload}, n, root_seed).front());
}

std::vector<FrontPoint> deterministic_front(const std::vector<double>& payloads, const std::vector<std::string>& techs,
                                            const TaskProfile& profile, const Catalogue& c) {
  std::vector<BatteryTech> bs;
  if (techs.empty())
    bs = c.batteries;
  else
    for (const auto& t : techs) bs.push_back(c.battery(t));
  DesignProblem dp = compose_uav_front(profile, bs, c.actuators);
  std::vector<FrontPoint> out(payloads.size());
  parallel_for(payloads.size(), [&](std::size_t k) {
    QueryResult q = dp.evaluate(scalar(payloads[k]));
    UAVQueryRecord r = read_record(q, "", payloads[k], 0);
    FrontPoint& p = out[k];
    p.payload = payloads[k];
    p.feasible = r.feasible;
    p.min_cost = r.min_cost;
    p.self_weight = r.self_weight;
    if (r.feasible) {
      const Element* best = nullptr;
      for (const auto& e : q.minimal_resources)
        if (e[1].as_scalar() == r.min_cost && e[0].as_scalar() == r.self_weight) best = &e;
      if (auto it = q.witnesses.find(*best); it != q.witnesses.end() && !it->second.empty()) {
        const auto& w = it->second.front();
        if (w.size() >= 2) {
          p.tech = w[0];
          p.actuator = w[1];
        }
      }
    }
  });
  return out;
}

std::vector<double> payload_grid(double start, double stop, double step) {
  if (!(step > 0) || !(stop >= start) || !(start >= 0)) throw DomainError("payload grid needs 0 <= start <= stop, step > 0");
  std::vector<double> out;
  for (std::size_t i = 0;; ++i) {
    const double x = start + static_cast<double>(i) * step;
    if (x > stop + step * 1e-6) break;
    out.push_back(std::min(x, stop));
  }
  return out;
}

std::string records_csv(std::vector<UAVQueryRecord> records) {
  std::sort(records.begin(), records.end(), [](const UAVQueryRecord& a, const UAVQueryRecord& b) {
    return std::tie(a.tech, a.payload, a.seed) < std::tie(b.tech, b.payload, b.seed);
  });
  std::string out = "tech,payload_g,seed,feasible,min_cost_usd,self_weight_g\n";
  for (const auto& r : records) {
    out += r.tech + "," + shortest(r.payload) + "," + std::to_string(r.seed) + "," + (r.feasible ? "true" : "false") +
           ",";
    if (r.feasible) out += shortest(r.min_cost) + "," + shortest(r.self_weight);
    else out += ",";
    out += "\n";
  }
  return out;
}

}  // namespace codp::uav
