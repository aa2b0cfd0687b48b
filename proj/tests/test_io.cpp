#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "codp/io/json.hpp"
#include "codp/io/svg.hpp"

using namespace codp;
using namespace codp::io;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE_MESSAGE(in, "cannot open " << p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("AST JSON round trip on every diagram file") {
  std::vector<fs::path> files = {fs::path(CODP_DATA_DIR) / "uav.codp"};
  for (const auto& dir : {fs::path(CODP_FIXTURE_DIR), fs::path(CODP_FIXTURE_DIR) / "golden"})
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".codp") files.push_back(e.path());
  REQUIRE(files.size() >= 7);
  for (const auto& p : files) {
    CAPTURE(p);
    dsl::DiagramAST ast = dsl::parse(slurp(p));
    Json j = ast_to_json(ast);
    CHECK(ast_from_json(Json::parse(j.dump())) == ast);
    CHECK(ast_to_json(ast).dump() == j.dump());
  }
  CHECK_THROWS_AS(ast_from_json(Json::parse("{\"format\": \"other\"}")), DomainError);
  CHECK_THROWS_AS(ast_from_json(Json::parse("{\"format\": \"codp-ast\"}")), DomainError);
}

TEST_CASE("element JSON") {
  Poset p = Poset::product({Poset::nonneg_real("g"), Poset::discrete({"lo", "hi"}, {{"lo", "hi"}})});
  for (const Element& e : {tuple({scalar(1.5), label("hi")}), tuple({Element::top(), label("lo")})}) {
    Json j = to_json(e);
    CHECK(element_from_json(p, Json::parse(j.dump())) == e);
  }
  CHECK(to_json(Element::top()) == "top");
  CHECK_THROWS_AS(element_from_json(p, Json::parse("[1]")), DomainError);
  CHECK_THROWS_AS(element_from_json(p, Json::parse("[\"x\", \"lo\"]")), DomainError);
}

TEST_CASE("poset and antichain JSON") {
  const Poset chain = Poset::discrete({"lo", "mid", "hi"}, {{"lo", "mid"}, {"mid", "hi"}});
  const Poset p = Poset::product({Poset::nonneg_real("g"), Poset::opposite(chain)});
  const Json j = to_json(p);
  CHECK(j["kind"] == "product");
  CHECK(j["components"][0] == Json{{"kind", "real"}, {"units", "g"}});
  // the closure is written out: lo < mid, lo < hi, mid < hi
  CHECK(j["components"][1]["inner"]["order"].size() == 3);
  CHECK(poset_from_json(j) == p);
  CHECK(poset_from_json(Json::parse(j.dump())) == p);
  CHECK_THROWS_AS(poset_from_json(Json{{"kind", "lattice"}}), DomainError);
  CHECK_THROWS_AS(poset_from_json(Json{{"kind", "discrete"}}), DomainError);

  const Json pts = Json::parse(R"([[3, "hi"], [5, "hi"], [3, "lo"], ["top", "mid"]])");
  const Antichain a = antichain_from_json(p, pts);
  CHECK(a.size() == 1);  // (3, hi) is below the rest in R x chain^op
  CHECK(to_json(a) == Json::parse(R"([[3, "hi"]])"));
  CHECK_THROWS_AS(antichain_from_json(p, Json::parse(R"([[3, "nowhere"]])")), DomainError);
}

TEST_CASE("solve results are keyed by port") {
  dsl::Diagram d = dsl::check(dsl::parse(slurp(fs::path(CODP_FIXTURE_DIR) / "scaled.codp")), dsl::builtin_registry());
  DesignProblem dp = d.instantiate(d.nominal_values(d.domain().points()[0]));
  QueryResult q = dp.evaluate(d.query_point());
  Json j = solve_to_json(d, d.query_point(), q);
  CHECK(j["feasible"] == true);
  CHECK(j["query"]["load.speed"] == 3.0);
  REQUIRE(j["resources"].size() == 1);
  CHECK(j["resources"][0]["values"].size() == d.external_resources().size());
  const std::string csv = solve_to_csv(d, q);
  CHECK(csv.find("witness\n") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

  QueryResult none(d.res_poset());
  CHECK(solve_to_json(d, d.query_point(), none)["feasible"] == false);
}

TEST_CASE("summaries and numbers") {
  uav::CostSummary s;
  s.tech = "LiPo";
  s.mean = s.q05 = s.q50 = s.q95 = std::nan("");
  Json j = to_json(s);
  CHECK(j["mean_cost_usd"].is_null());
  CHECK(number(0.1) == "0.1");
  CHECK(number(1e300 * 1e10) == "inf");
  CHECK(number(1200) == "1200");
}

TEST_CASE("svg output is deterministic and well formed") {
  Figure fig{"t <&>", "x", "y", {{"band", {0, 1, 2}, {1, 2, 3}, {2, 3, 4}, {3, 4, 5}}},
             {{"s", {0, 1, 2}, {1, std::nan(""), 3}, false}}, {{0, 1, 4}}};
  const std::string a = render_svg(fig);
  CHECK(a == render_svg(fig));
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("t &lt;&amp;&gt;") != std::string::npos);
  CHECK(a.find("nan") == std::string::npos);
  CHECK(render_svg(Figure{}).find("</svg>") != std::string::npos);
}
