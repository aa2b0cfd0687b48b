// codp: check, solve and sample .codp diagrams; run the delivery-UAV study.
//
// Exit codes: 0 ok, 1 syntax error, 2 type error, 64 usage error or missing
// input, 70 internal failure, 73 cannot write output.

#include <CLI11.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "codp/dsl/diagram.hpp"
#include "codp/io/json.hpp"
#include "codp/io/svg.hpp"
#include "codp/kernel.hpp"
#include "codp/uav.hpp"

namespace fs = std::filesystem;
using namespace codp;
using io::Json;

namespace {

enum Exit { kOk = 0, kSyntax = 1, kType = 2, kUsage = 64, kSoftware = 70, kCantCreate = 73 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Output sink: files under --out, or stdout when no directory was given.
struct Sink {
  std::string dir;
  std::vector<std::string> formats;

  bool wants(const std::string& f) const { return std::find(formats.begin(), formats.end(), f) != formats.end(); }

  void validate(const std::vector<std::string>& allowed, const std::string& fallback) {
    if (formats.empty()) formats = dir.empty() ? std::vector<std::string>{fallback} : allowed;
    for (const auto& f : formats)
      if (std::find(allowed.begin(), allowed.end(), f) == allowed.end())
        throw UsageError("format '" + f + "' is not available here");
    if (dir.empty() && formats.size() != 1) throw UsageError("writing to stdout takes exactly one --format");
  }

  void emit(const std::string& format, const std::string& filename, const std::string& text) const {
    if (!wants(format)) return;
    if (dir.empty()) {
      std::cout << text;
      return;
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path p = fs::path(dir) / filename;
    std::ofstream out(p, std::ios::binary);
    if (!out || !(out << text)) throw OutputError("cannot write '" + p.string() + "'");
    std::cerr << "wrote " << p.string() << "\n";
  }
};

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

dsl::Value parse_value(const std::string& s) {
  if (s == "top") return dsl::Value::top();
  double x = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec == std::errc() && end == s.data() + s.size()) return dsl::Value::num(x);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return dsl::Value::str(s.substr(1, s.size() - 2));
  return dsl::Value::ident(s);
}

// "node.port=value"
std::pair<dsl::PortRef, dsl::Value> parse_assignment(const std::string& s) {
  const auto eq = s.find('=');
  const auto dot = s.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw UsageError("expected node.port=value, got '" + s + "'");
  return {{s.substr(0, dot), s.substr(dot + 1, eq - dot - 1)}, parse_value(s.substr(eq + 1))};
}

dsl::Diagram load_diagram(const std::string& path) {
  return dsl::check(dsl::parse(read_file(path)), uav::uav_registry(uav::default_catalogue()));
}

// Domain point from --param box=label flags; nullopt means "free choice".
std::optional<Element> domain_point(const dsl::Diagram& d, const std::vector<std::string>& params, bool required) {
  std::map<std::string, Element> at;
  for (const auto& p : params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw UsageError("expected box=label, got '" + p + "'");
    const std::string box = p.substr(0, eq);
    const auto& boxes = d.domain_boxes();
    if (std::find(boxes.begin(), boxes.end(), box) == boxes.end())
      throw UsageError("'" + box + "' is not a parameter box with a choice");
    at[box] = label(p.substr(eq + 1));
  }
  if (d.domain_boxes().empty()) return d.domain().points().front();
  if (at.empty() && !required) return std::nullopt;
  try {
    return d.domain_point(at);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_grid(const std::string& g) {
  auto parts = split(g, ':');
  if (parts.size() != 3) throw UsageError("--grid takes start:stop:step");
  std::array<double, 3> v{};
  for (int i = 0; i < 3; ++i) {
    auto [end, ec] = std::from_chars(parts[i].data(), parts[i].data() + parts[i].size(), v[i]);
    if (ec != std::errc() || end != parts[i].data() + parts[i].size()) throw UsageError("bad number in --grid");
  }
  try {
    return uav::payload_grid(v[0], v[1], v[2]);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

// -- subcommands ------------------------------------------------------------------

int cmd_check(const std::string& path) {
  dsl::Diagram d = load_diagram(path);
  std::cout << path << ": ok, " << d.nodes().size() << " nodes, " << d.ast().edges.size() << " edges, "
            << d.ast().loops.size() << " loops, " << d.ast().params.size() << " parameter boxes\n";
  std::cout << "  functionality: " << d.fun_poset().to_string() << "\n";
  std::cout << "  resources:     " << d.res_poset().to_string() << "\n";
  std::cout << "  composition:   " << d.expr().to_string() << "\n";
  return kOk;
}

int cmd_format(const std::string& path, bool in_place) {
  const std::string text = dsl::format(dsl::parse(read_file(path)));
  if (!in_place) {
    std::cout << text;
    return kOk;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw OutputError("cannot write '" + path + "'");
  return kOk;
}

int cmd_export(const std::string& path, const std::string& out) {
  Sink sink{out.empty() ? "" : out, {"json"}};
  sink.emit("json", "ast.json", dump(io::ast_to_json(dsl::parse(read_file(path)))));
  return kOk;
}

struct SolveOpts {
  std::string path;
  std::vector<std::string> at, params;
  Sink sink;
};

int cmd_solve(SolveOpts o) {
  o.sink.validate({"json", "csv"}, "json");
  dsl::Diagram d = load_diagram(o.path);
  std::vector<dsl::QueryDecl> extra;
  for (const auto& a : o.at) {
    auto [port, value] = parse_assignment(a);
    extra.push_back({port, value, 0});
  }
  Element f = [&] {
    try {
      return d.query_point(extra);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }();
  std::optional<Element> m = domain_point(d, o.params, false);
  DesignProblem dp = m ? d.instantiate(d.nominal_values(*m)) : d.free_choice();
  QueryResult q = dp.evaluate(f);
  o.sink.emit("json", "solve.json", dump(io::solve_to_json(d, f, q)));
  o.sink.emit("csv", "solve.csv", io::solve_to_csv(d, q));
  return kOk;
}

struct SampleOpts {
  std::string path;
  std::vector<std::string> at, params, budget;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  Sink sink;
};

int cmd_sample(SampleOpts o) {
  o.sink.validate({"json"}, "json");
  dsl::Diagram d = load_diagram(o.path);
  std::vector<dsl::QueryDecl> extra;
  for (const auto& a : o.at) {
    auto [port, value] = parse_assignment(a);
    extra.push_back({port, value, 0});
  }
  Element f = [&] {
    try {
      return d.query_point(extra);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }();
  // budgets default to top on real ports
  std::map<dsl::PortRef, dsl::Value> given;
  for (const auto& b : o.budget) {
    auto [port, value] = parse_assignment(b);
    given[port] = value;
  }
  std::vector<Element> rs;
  for (const auto& p : d.external_resources()) {
    const Poset& P = d.port_poset(p);
    auto it = given.find(p);
    if (it == given.end()) {
      if (P.kind() != Poset::Kind::nonneg_real) throw UsageError("--budget needed for " + p.to_string());
      rs.push_back(Element::top());
      continue;
    }
    try {
      rs.push_back(dsl::to_element(P, it->second));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    given.erase(it);
  }
  if (!given.empty()) throw UsageError(given.begin()->first.to_string() + " is not an external resource");
  Element r = rs.size() == 1 ? rs[0] : Element::tuple(rs);
  Element m = *domain_point(d, o.params, true);
  Estimate e = success_probability(d.kernel(), m, f, r, o.n, o.seed);
  Json j = {{"query", io::port_values(d.external_functionalities(), f)},
            {"budget", io::port_values(d.external_resources(), r)},
            {"parameters", io::to_json(m)},
            {"estimate", io::to_json(e)}};
  o.sink.emit("json", "sample.json", dump(j));
  return kOk;
}

// -- uav --------------------------------------------------------------------------

struct UavOpts {
  std::string techs;
  double payload = 500;
  std::string grid = "0:2000:50";
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double spread = 0.05;
  int bins = 30;
  std::string catalogue;
  uav::TaskProfile profile;
  Sink sink;
};

uav::Catalogue catalogue(const UavOpts& o) {
  if (o.catalogue.empty()) return uav::default_catalogue();
  try {
    return uav::parse_catalogue(read_file(o.catalogue));
  } catch (const DomainError& e) {
    throw UsageError(o.catalogue + ": " + e.what());
  }
}

std::vector<std::string> tech_list(const UavOpts& o, const uav::Catalogue& c, bool single) {
  std::vector<std::string> ts = o.techs.empty() ? c.battery_names() : split(o.techs, ',');
  if (single && ts.size() != 1) throw UsageError("--tech takes exactly one technology here");
  for (const auto& t : ts) {
    try {
      c.battery(t);
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
  }
  return ts;
}

DPKernel kernel_for(const UavOpts& o, const uav::Catalogue& c) {
  uav::UavKernelOptions k;
  k.calibration.spread = o.spread;
  k.fixed_profile = o.profile;
  return uav::uav_kernel(c, k);
}

int cmd_uav_front(UavOpts o) {
  o.sink.validate({"csv", "json", "svg"}, "csv");
  const uav::Catalogue c = catalogue(o);
  const auto techs = tech_list(o, c, false);
  auto front = uav::deterministic_front(parse_grid(o.grid), techs, o.profile, c);
  Json j = Json::array();
  for (const auto& p : front) j.push_back(io::to_json(p));
  o.sink.emit("csv", "front.csv", io::front_csv(front));
  o.sink.emit("json", "front.json", dump(j));
  if (o.sink.wants("svg")) {
    io::Figure fig{"Minimal lifetime cost over payload", "payload [g]", "lifetime cost [USD]", {}, {}, {}};
    io::Series line{"", {}, {}, false};
    std::map<std::string, io::Series> by_tech;
    for (const auto& p : front) {
      if (!p.feasible) continue;
      line.x.push_back(p.payload);
      line.y.push_back(p.min_cost);
      auto& s = by_tech.try_emplace(p.tech, io::Series{p.tech, {}, {}, true}).first->second;
      s.x.push_back(p.payload);
      s.y.push_back(p.min_cost);
    }
    fig.series.push_back(line);
    for (auto& [t, s] : by_tech) fig.series.push_back(std::move(s));
    o.sink.emit("svg", "front.svg", io::render_svg(fig));
  }
  return kOk;
}

std::string histogram_csv(const std::vector<io::Bar>& bars) {
  std::string out = "bin_lo_usd,bin_hi_usd,count\n";
  for (const auto& b : bars) out += io::number(b.lo) + "," + io::number(b.hi) + "," + io::number(b.height) + "\n";
  return out;
}

std::vector<io::Bar> histogram(const std::vector<uav::UAVQueryRecord>& rs, int bins) {
  std::vector<double> xs;
  for (const auto& r : rs)
    if (r.feasible) xs.push_back(r.min_cost);
  if (xs.empty()) return {};
  const double lo = *std::min_element(xs.begin(), xs.end());
  const double hi = *std::max_element(xs.begin(), xs.end());
  const double w = hi > lo ? (hi - lo) / bins : 1.0;
  std::vector<io::Bar> out(static_cast<std::size_t>(bins));
  for (int i = 0; i < bins; ++i) out[i] = {lo + i * w, lo + (i + 1) * w, 0};
  for (double x : xs) {
    auto k = static_cast<std::size_t>(std::min<double>(bins - 1, std::floor((x - lo) / w)));
    out[k].height += 1;
  }
  return out;
}

int cmd_uav_distribution(UavOpts o) {
  o.sink.validate({"csv", "json", "svg"}, "json");
  const uav::Catalogue c = catalogue(o);
  const std::string tech = tech_list(o, c, true).front();
  if (!(o.payload >= 0) || std::isinf(o.payload)) throw UsageError("--payload must be finite and >= 0");
  uav::CostDistribution dist = uav::cost_distribution(kernel_for(o, c), tech, o.payload, o.n, o.seed);
  auto bars = histogram(dist.records, o.bins);
  o.sink.emit("csv", "distribution.csv", uav::records_csv(dist.records));
  if (!o.sink.dir.empty()) o.sink.emit("csv", "histogram.csv", histogram_csv(bars));
  o.sink.emit("json", "summary.json", dump(io::to_json(dist.summary)));
  if (o.sink.wants("svg")) {
    io::Figure fig{"Lifetime cost, " + tech + " at " + io::number(o.payload) + " g (n = " + std::to_string(o.n) + ")",
                   "lifetime cost [USD]", "draws", {}, {}, bars};
    o.sink.emit("svg", "histogram.svg", io::render_svg(fig));
  }
  return kOk;
}

int cmd_uav_sweep(UavOpts o) {
  o.sink.validate({"csv", "json", "svg"}, "json");
  const uav::Catalogue c = catalogue(o);
  const auto techs = tech_list(o, c, false);
  const auto grid = parse_grid(o.grid);
  const DPKernel k = kernel_for(o, c);
  std::vector<uav::UAVQueryRecord> rows;
  Json summaries = Json::array();
  io::Figure fig{"Lifetime cost quantiles (5/50/95%) over payload", "payload [g]", "lifetime cost [USD]", {}, {}, {}};
  for (const auto& t : techs) {
    io::Band band{t, {}, {}, {}, {}};
    for (const auto& d : uav::payload_sweep(k, t, grid, o.n, o.seed)) {
      rows.insert(rows.end(), d.records.begin(), d.records.end());
      summaries.push_back(io::to_json(d.summary));
      band.x.push_back(d.summary.payload);
      band.lo.push_back(d.summary.q05);
      band.mid.push_back(d.summary.q50);
      band.hi.push_back(d.summary.q95);
    }
    fig.bands.push_back(std::move(band));
  }
  o.sink.emit("csv", "sweep.csv", uav::records_csv(rows));
  o.sink.emit("json", "summary.json", dump(summaries));
  if (o.sink.wants("svg")) o.sink.emit("svg", "sweep.svg", io::render_svg(fig));
  return kOk;
}

void add_output(CLI::App* app, Sink& sink) {
  app->add_option("--out", sink.dir, "Output directory (default: stdout)");
  app->add_option("--format", sink.formats, "Output formats, comma separated")->delimiter(',');
}

void add_uav_common(CLI::App* app, UavOpts& o) {
  app->add_option("--catalogue", o.catalogue, "Component table JSON (default: shipped tables)");
  app->add_option("--missions", o.profile.num_missions, "Number of missions")->check(CLI::NonNegativeNumber);
  app->add_option("--distance", o.profile.distance, "Distance per mission [m]")->check(CLI::NonNegativeNumber);
  app->add_option("--frequency", o.profile.frequency, "Mission frequency [1/s]")->check(CLI::NonNegativeNumber);
  add_output(app, o.sink);
}

void add_sampling(CLI::App* app, std::size_t& n, std::uint64_t& seed) {
  app->add_option("--n", n, "Number of draws")->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
  app->add_option("--seed", seed, "Root seed (required)")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monotone co-design under uncertainty: diagrams, queries and the delivery-UAV study"};
  app.require_subcommand(1);

  std::string path, out;
  bool in_place = false;
  auto* check = app.add_subcommand("check", "Parse and type-check a diagram");
  check->add_option("file", path, "Diagram (.codp)")->required();

  auto* fmt = app.add_subcommand("format", "Print a diagram in canonical form");
  fmt->add_option("file", path, "Diagram (.codp)")->required();
  fmt->add_flag("--in-place", in_place, "Rewrite the file");

  auto* exp = app.add_subcommand("export", "Export the parsed AST as JSON");
  exp->add_option("file", path, "Diagram (.codp)")->required();
  exp->add_option("--out", out, "Output directory (default: stdout)");

  SolveOpts solve;
  auto* sol = app.add_subcommand("solve", "Minimal resources for a functionality");
  sol->add_option("file", path, "Diagram (.codp)")->required();
  sol->add_option("--at", solve.at, "Functionality value node.port=value (overrides query statements)");
  sol->add_option("--param", solve.params, "Parameter choice box=label (default: free choice)");
  add_output(sol, solve.sink);

  SampleOpts sample;
  auto* smp = app.add_subcommand("sample", "Success probability under the diagram's parameter kernels");
  smp->add_option("file", path, "Diagram (.codp)")->required();
  smp->add_option("--at", sample.at, "Functionality value node.port=value");
  smp->add_option("--budget", sample.budget, "Resource budget node.port=value (real ports default to top)");
  smp->add_option("--param", sample.params, "Parameter choice box=label");
  add_sampling(smp, sample.n, sample.seed);
  add_output(smp, sample.sink);

  UavOpts uo;
  auto* uav_cmd = app.add_subcommand("uav", "Delivery-UAV case study");
  uav_cmd->require_subcommand(1);
  auto* front = uav_cmd->add_subcommand("front", "Deterministic payload / minimal cost front");
  front->add_option("--tech", uo.techs, "Battery technologies, comma separated (default: all)");
  front->add_option("--grid", uo.grid, "Payload grid start:stop:step in g");
  add_uav_common(front, uo);

  auto* dist = uav_cmd->add_subcommand("distribution", "Monte Carlo cost distribution at one payload");
  dist->add_option("--tech", uo.techs, "Battery technology")->required();
  dist->add_option("--payload", uo.payload, "Payload [g]")->required();
  dist->add_option("--spread", uo.spread, "Relative half-width of the 90% interval")->check(CLI::NonNegativeNumber);
  dist->add_option("--bins", uo.bins, "Histogram bins")->check(CLI::Range(1, 10000));
  add_sampling(dist, uo.n, uo.seed);
  add_uav_common(dist, uo);

  auto* sweep = uav_cmd->add_subcommand("sweep", "Monte Carlo cost quantiles over a payload grid");
  sweep->add_option("--tech", uo.techs, "Battery technologies, comma separated (default: all)");
  sweep->add_option("--grid", uo.grid, "Payload grid start:stop:step in g");
  sweep->add_option("--spread", uo.spread, "Relative half-width of the 90% interval")->check(CLI::NonNegativeNumber);
  add_sampling(sweep, uo.n, uo.seed);
  add_uav_common(sweep, uo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*check) return cmd_check(path);
    if (*fmt) return cmd_format(path, in_place);
    if (*exp) return cmd_export(path, out);
    if (*sol) {
      solve.path = path;
      return cmd_solve(std::move(solve));
    }
    if (*smp) {
      sample.path = path;
      return cmd_sample(std::move(sample));
    }
    if (*front) return cmd_uav_front(std::move(uo));
    if (*dist) return cmd_uav_distribution(std::move(uo));
    if (*sweep) return cmd_uav_sweep(std::move(uo));
  } catch (const dsl::SyntaxError& e) {
    std::cerr << path << ":" << e.what() << "\n";
    return kSyntax;
  } catch (const dsl::TypeCheckError& e) {
    std::cerr << path << ":" << e.what() << "\n";
    return kType;
  } catch (const UsageError& e) {
    std::cerr << "codp: " << e.what() << "\n";
    return kUsage;
  } catch (const OutputError& e) {
    std::cerr << "codp: " << e.what() << "\n";
    return kCantCreate;
  } catch (const std::exception& e) {
    std::cerr << "codp: " << e.what() << "\n";
    return kSoftware;
  }
  return kUsage;
}
