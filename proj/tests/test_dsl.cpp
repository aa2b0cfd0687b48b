#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "codp/dsl/diagram.hpp"
#include "support/diagram_oracle.hpp"

using namespace codp;
using namespace codp::dsl;
using namespace codp::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE_MESSAGE(in, "cannot open " << p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<fs::path> codp_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".codp") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

const fs::path kFixtures = CODP_FIXTURE_DIR;
const char* kFinite[] = {"chain.codp", "disconnected.codp", "diamond_loop.codp", "fanout.codp"};

Diagram load(const std::string& name) { return check(parse(slurp(kFixtures / name)), builtin_registry()); }

}  // namespace

TEST_CASE("two-node series text parses to one edge") {
  auto ast = parse(
      "node a(x: real \"g\") -> (y: real \"g\") = identity()\n"
      "node b(x: real \"g\") -> (y: real \"g\") = scale(factor=2)\n"
      "edge a.y -> b.x\n");
  REQUIRE(ast.nodes.size() == 2);
  REQUIRE(ast.edges.size() == 1);
  CHECK(ast.edges[0].from == PortRef{"a", "y"});
  CHECK(ast.edges[0].to == PortRef{"b", "x"});
  CHECK(ast.nodes[1].binding.call.arg("factor")->number == 2);
}

TEST_CASE("syntax errors carry a location") {
  try {
    parse("node a(x: real \"g\") -> (y: real \"g\") = identity()\nedge a -> b.x\n");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 8);
  }
}

TEST_CASE("round trip and idempotence on every fixture") {
  std::vector<fs::path> files = codp_files(kFixtures);
  files.push_back(fs::path(CODP_DATA_DIR) / "uav.codp");
  for (const auto& dir : {kFixtures / "golden"})
    for (const auto& p : codp_files(dir)) files.push_back(p);
  REQUIRE(files.size() >= 6);
  for (const auto& p : files) {
    CAPTURE(p);
    DiagramAST ast = parse(slurp(p));
    std::string text = format(ast);
    CHECK(parse(text) == ast);
    CHECK(format(parse(text)) == text);
  }
}

TEST_CASE("canonical order does not depend on statement order") {
  const std::string text = slurp(kFixtures / "golden" / "shuffled.codp");
  CHECK(format(parse(text)) == slurp(kFixtures / "golden" / "shuffled.formatted"));

  // reversing the statement lines changes nothing after formatting
  std::vector<std::string> lines;
  std::istringstream in(slurp(kFixtures / "chain.codp"));
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  std::string reversed;
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) reversed += *it + "\n";
  CHECK(format(parse(reversed)) == format(parse(slurp(kFixtures / "chain.codp"))));
}

TEST_CASE("elaboration shapes") {
  CHECK(load("chain.codp").expr().to_string() == "series(series(sensor, link), supply)");
  CHECK(load("disconnected.codp").expr().to_string() == "parallel(a, b)");
  std::string diamond = load("diamond_loop.codp").expr().to_string();
  CHECK(diamond.rfind("trace(", 0) == 0);
  CHECK(diamond.find("parallel(b, c)") != std::string::npos);
}

TEST_CASE("external ports follow node and declaration order") {
  Diagram d = load("fanout.codp");
  std::vector<PortRef> fun = {{"head", "x"}, {"p2", "extra"}};
  std::vector<PortRef> res = {{"head", "aux"}, {"p1", "cost"}, {"p2", "cost"}};
  CHECK(d.external_functionalities() == fun);
  CHECK(d.external_resources() == res);
  CHECK(d.query_point() == tuple({label("mid"), label("none")}));
}

TEST_CASE("elaboration soundness on the finite fixtures") {
  for (const char* name : kFinite) {
    CAPTURE(name);
    Diagram d = load(name);
    DesignProblem dp = d.instantiate(d.nominal_values(d.domain().points()[0]));
    DiagramOracle o = diagram_oracle(d);
    CHECK(!o.generators.empty());
    CHECK(diagram_mismatches(d, dp) == 0);
  }
}

TEST_CASE("elaboration soundness on random diagrams") {
  Rng rng(91);
  int nontrivial = 0;
  for (int trial = 0; trial < 240; ++trial) {
    const int shape = trial % kDiagramTemplates;
    DiagramAST ast = random_diagram(rng, shape);
    CAPTURE(format(ast));
    Diagram d = check(parse(format(ast)), builtin_registry());
    DesignProblem dp = d.instantiate(d.nominal_values(d.domain().points()[0]));
    CHECK(diagram_mismatches(d, dp) == 0);
    if (!diagram_oracle(d).generators.empty()) ++nontrivial;
  }
  CHECK(nontrivial > 60);
}

TEST_CASE("real-valued loop fixture") {
  Diagram d = load("scaled.codp");
  DesignProblem dp = d.instantiate(d.nominal_values(d.domain().points()[0]));
  QueryResult q = dp.evaluate(d.query_point());
  // 11 W fits the small pack; its 40 g halves to 20 g through the frame, within the 100 g it carries
  REQUIRE(q.minimal_resources.size() == 1);
  CHECK(q.minimal_resources.elements()[0] == scalar(10));
  REQUIRE(q.witnesses.count(scalar(10)));
  auto w = q.witnesses.at(scalar(10)).front();
  CHECK(std::find(w.begin(), w.end(), "pack:small") != w.end());

  // above 20 W only the large pack remains
  QueryDecl faster{{"load", "speed"}, Value::num(10), 0};
  CHECK(dp.query(d.query_point({faster})).elements() == std::vector<Element>{scalar(25)});
  QueryDecl too_fast{{"load", "speed"}, Value::num(40), 0};
  CHECK(dp.query(d.query_point({too_fast})).empty());
}

TEST_CASE("malformed fixtures are rejected by the right stage") {
  auto files = codp_files(kFixtures / "malformed");
  REQUIRE(files.size() >= 8);
  for (const auto& p : files) {
    CAPTURE(p);
    const std::string stem = p.stem().string();
    const std::string text = slurp(p);
    if (stem.rfind("syntax_", 0) == 0) {
      CHECK_THROWS_AS(parse(text), SyntaxError);
    } else {
      REQUIRE(stem.rfind("type_", 0) == 0);
      DiagramAST ast = parse(text);
      CHECK_THROWS_AS(check(ast, builtin_registry()), TypeCheckError);
    }
  }
}

TEST_CASE("type errors name the offending line") {
  try {
    check(parse(slurp(kFixtures / "malformed" / "type_unit_mismatch.codp")), builtin_registry());
    FAIL("expected a type error");
  } catch (const TypeCheckError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("real[kg]") != std::string::npos);
  }
}

TEST_CASE("loop carriers need a least element") {
  const std::string text =
      "poset Flat = discrete {p, q}\n"
      "node a(x: real \"g\", l: Flat) -> (y: real \"g\", l: Flat) = mdpi\n"
      "impl a.i: (1, p) -> (1, p)\n"
      "loop a.l -> a.l\n";
  CHECK_THROWS_AS(check(parse(text), builtin_registry()), TypeCheckError);
}

TEST_CASE("builtin components") {
  Registry r = builtin_registry();
  auto solve1 = [&](const std::string& text, double x) {
    Diagram d = check(parse(text), r);
    return d.instantiate(d.nominal_values(d.domain().points()[0])).query(scalar(x));
  };
  CHECK(solve1("node a(x: real \"W\") -> (y: real \"W\") = affine(offset=5, gain=2)\n", 3).elements() ==
        std::vector<Element>{scalar(11)});
  CHECK(solve1("node a(x: real \"W\") -> (y: real \"W\") = scale(factor=0.5)\n", 3).elements() ==
        std::vector<Element>{scalar(1.5)});
  CHECK(solve1("node a(x: real \"W\") -> (y: real \"W\") = constant(value=7)\n", 3).elements() ==
        std::vector<Element>{scalar(7)});
  Diagram s = check(parse("node s(a: real \"W\", b: real \"W\") -> (t: real \"W\") = sum()\n"), r);
  CHECK(s.instantiate(s.nominal_values(s.domain().points()[0])).query(tuple({scalar(1), scalar(2.5)})).elements() ==
        std::vector<Element>{scalar(3.5)});
  CHECK_THROWS_AS(check(parse("node a(x: real \"W\") -> (y: real \"g\") = identity()\n"), r), TypeCheckError);
}

TEST_CASE("union bindings prefix witnesses with the branch label") {
  const std::string text =
      "node a(x: real \"W\") -> (y: real \"W\") = union cheap: affine(offset=5, gain=3),\n"
      "    lean: affine(offset=8, gain=1)\n";
  Diagram d = check(parse(text), builtin_registry());
  DesignProblem dp = d.instantiate(d.nominal_values(d.domain().points()[0]));
  CHECK(dp.query(scalar(1)).elements() == std::vector<Element>{scalar(8)});
  CHECK(dp.query(scalar(2)).elements() == std::vector<Element>{scalar(10)});
  QueryResult q = dp.evaluate(scalar(1));
  CHECK(q.witnesses.at(scalar(8)).front().front().rfind("cheap", 0) == 0);
}
