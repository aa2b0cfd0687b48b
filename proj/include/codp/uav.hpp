#pragma once

// Delivery-UAV case study: component models, the composed mass loop, Gaussian
// parameter kernels and the Monte Carlo experiments built on them.
//
// Units: mass in g, cost in USD, power in W, energy in Wh, velocity in m/s,
// time in s, lift in N.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "codp/design_problem.hpp"
#include "codp/dsl/diagram.hpp"
#include "codp/kernel.hpp"

namespace codp::uav {

inline constexpr double kGravity = 9.81;

struct TaskProfile {
  double num_missions = 1000;
  double distance = 1200;     // m per mission
  double frequency = 0.0025;  // missions per second
};

struct ActuatorSpec {
  std::string name;
  double mass = 0;          // g
  double cost = 0;          // USD
  double max_velocity = 0;  // m/s
  double p0 = 0;            // W
  double p1 = 0;            // W / N^2
};

struct BatteryTech {
  std::string name;
  double energy_density = 0;  // Wh/kg
  double wh_per_dollar = 0;   // as tabulated; the price is its inverse
  double cycles = 0;          // missions before replacement

  double cost_per_wh() const { return 1.0 / wh_per_dollar; }
};

struct Catalogue {
  std::vector<ActuatorSpec> actuators;
  std::vector<BatteryTech> batteries;

  const BatteryTech& battery(const std::string& name) const;  // DomainError if unknown
  std::vector<std::string> battery_names() const;
};

/// The shipped actuator and battery tables (data/uav_components.json).
const Catalogue& default_catalogue();
/// Parses the component-table JSON format. Throws DomainError on bad input.
Catalogue parse_catalogue(const std::string& json_text);
void validate(const ActuatorSpec& a);
void validate(const BatteryTech& t);

// -- component design problems ------------------------------------------------

/// Provides nothing; requires the given task profile (missions, distance, frequency).
DesignProblem task_dp(const TaskProfile& profile);

/// (missions, distance, frequency) -> (missions, endurance, velocity) with
/// velocity = distance * frequency and endurance = distance / velocity.
/// A positive distance at zero frequency is infeasible.
DesignProblem task_management_dp();

/// velocity -> power >= c0 + c1 * velocity.
DesignProblem perception_dp(double c0 = 5.0, double c1 = 2.0);

/// (velocity, lift) -> (power, mass, cost); infeasible above the speed limit.
DesignProblem actuation_dp(const ActuatorSpec& a);

/// (capacity Wh, mission cycles) -> (mass g, total cost USD), buying
/// max(1, ceil(cycles / tech.cycles)) packs.
DesignProblem battery_dp(const BatteryTech& t);

/// Diagram-level actuation node for one actuator:
/// (velocity, payload, battery mass, battery cost) -> (power, self weight, lifetime cost),
/// lift = g * (payload + actuator mass + battery mass) / 1000.
DesignProblem actuation_node_dp(const ActuatorSpec& a, double g = kGravity);

/// Diagram-level battery node: (perception power, actuation power, endurance,
/// missions) -> (mass, cost), capacity = total power * endurance / 3600.
DesignProblem battery_node_dp(const BatteryTech& t);

// -- the composed system ----------------------------------------------------------

/// Text of the shipped diagram (data/uav.codp).
const std::string& uav_diagram_text();

/// Builtins plus the uav.* components and kernels, bound to a catalogue.
dsl::Registry uav_registry(const Catalogue& catalogue);

/// The type-checked diagram for a catalogue.
dsl::Diagram uav_diagram(const Catalogue& catalogue = default_catalogue());

/// Payload (g) -> (self weight g, lifetime cost USD) for a fixed battery
/// technology, choosing freely among the actuators. The mass loop is closed
/// per actuator and the choice taken outside it; diverging loops count as
/// infeasible. Witnesses name the actuator.
DesignProblem compose_uav(const TaskProfile& profile, const BatteryTech& battery,
                          const std::vector<ActuatorSpec>& actuators);

/// Free choice over the given technologies as well; witnesses are [tech, actuator].
DesignProblem compose_uav_front(const TaskProfile& profile, const std::vector<BatteryTech>& batteries,
                                const std::vector<ActuatorSpec>& actuators);

// -- uncertainty ------------------------------------------------------------------

/// Gaussian with sigma = spread * mean / z, so that mean +/- spread*mean is the
/// central interval of probability 2*Phi(z) - 1 (0.9 for z = 1.6449).
struct GaussianCalibration {
  double spread = 0.05;
  double z = 1.6449;

  double sigma(double mean) const { return spread * mean / z; }
};

/// A named record of real parameters.
struct ParamRecord {
  std::vector<std::string> names;
  std::vector<double> values;
};

/// For each domain point, the fields listed in `uncertain` are drawn
/// independently from a Gaussian around `base(m)` and clamped at 0; every
/// other field is passed through. Values are tuples in `names` order.
/// Throws DomainError when an uncertain field has a non-positive base value.
ParamKernel gaussian_param_kernel(ParamSpace domain, std::function<ParamRecord(const Element&)> base,
                                  std::vector<std::string> uncertain, GaussianCalibration cal = {});

/// Battery parameters over T_B: energy density and price uncertain, cycles fixed.
ParamKernel battery_param_kernel(const Catalogue& c, GaussianCalibration cal = {});
/// All actuators' speed limits and power laws uncertain; mass and cost fixed.
/// Fields are "<actuator>.<field>".
ParamKernel actuator_param_kernel(const Catalogue& c, GaussianCalibration cal = {});

BatteryTech battery_from(const dsl::ParamValue& v, std::string name = {});
std::vector<ActuatorSpec> actuators_from(const dsl::ParamValue& v, const Catalogue& c);

struct UavKernelOptions {
  GaussianCalibration calibration{};
  /// Draws a task profile as (missions, distance, frequency); fixed profile when empty.
  std::optional<ParamKernel> profile{};
  TaskProfile fixed_profile{};
};

/// a_UAV : T_B -> DP(payload, (self weight, lifetime cost)). Actuator
/// parameters, battery parameters and the profile are drawn independently
/// (seed indices 1, 2, 3); the actuator is then chosen after the draw, the
/// technology before it.
DPKernel uav_kernel(const Catalogue& c = default_catalogue(), UavKernelOptions opts = {});

// -- experiments ------------------------------------------------------------------

struct UAVQueryRecord {
  std::string tech;
  double payload = 0;
  std::uint64_t seed = 0;  // per-draw seed
  bool feasible = false;
  double min_cost = 0;     // USD, cheapest point of the front
  double self_weight = 0;  // g, at that point
  std::string actuator;    // witness of the cheapest point
};

struct CostSummary {
  std::string tech;
  double payload = 0;
  std::size_t n = 0;
  std::size_t feasible = 0;
  double infeasible_fraction = 0;
  // over feasible draws; NaN when there are none
  double mean = 0;
  double q05 = 0;
  double q50 = 0;
  double q95 = 0;
  std::uint64_t root_seed = 0;
};

struct CostDistribution {
  std::vector<UAVQueryRecord> records;  // ordered by draw index
  CostSummary summary;
};

/// Reads the cheapest feasible point of one query result.
UAVQueryRecord read_record(const QueryResult& q, std::string tech, double payload, std::uint64_t seed);

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> xs, double p);

CostSummary summarize(const std::vector<UAVQueryRecord>& records, std::string tech, double payload,
                      std::uint64_t root_seed);

/// n draws at seeds derive_seed(root_seed, i), i = 0..n-1, evaluated in parallel.
CostDistribution cost_distribution(const DPKernel& kernel, const std::string& tech, double payload, std::size_t n,
                                   std::uint64_t root_seed);

/// One distribution per payload, reusing the same draws for every payload.
std::vector<CostDistribution> payload_sweep(const DPKernel& kernel, const std::string& tech,
                                            const std::vector<double>& payloads, std::size_t n,
                                            std::uint64_t root_seed);

/// Deterministic free-choice front over technologies and actuators.
struct FrontPoint {
  double payload = 0;
  bool feasible = false;
  double min_cost = 0;
  double self_weight = 0;
  std::string tech;
  std::string actuator;
};
std::vector<FrontPoint> deterministic_front(const std::vector<double>& payloads,
                                            const std::vector<std::string>& techs = {},
                                            const TaskProfile& profile = {},
                                            const Catalogue& c = default_catalogue());

/// start, start+step, ... up to and including stop (within step/1e6).
std::vector<double> payload_grid(double start, double stop, double step);

/// CSV with columns tech,payload_g,seed,feasible,min_cost_usd,self_weight_g,
/// rows sorted by (tech, payload, seed).
std::string records_csv(std::vector<UAVQueryRecord> records);

}  // namespace codp::uav
