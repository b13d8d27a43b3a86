#include "kropina/dsl.hpp"
#include "kropina/geodesic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace kropina;
using namespace kropina::testing;

namespace {

double eval_text(const std::string& text, std::map<std::string, double> b = {}) {
  return evaluate(*parse_expression(text), b);
}

ParseError parse_failure(const std::string& text, const ParseContext& ctx = {}) {
  try {
    parse_expression(text, ctx);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "expected a parse error for " << text;
  return ParseError(ParseErrorKind::unexpected_token, 0, "");
}

SpaceDocument cylinder_doc(const std::string& wx, const std::string& wy) {
  SpaceDocument doc;
  doc.dim = 2;
  doc.metric = {{"1", "0"}, {"0", "1"}};
  doc.wind = {wx, wy};
  doc.topology = {CoordinateTag::with_period(2 * kPi), CoordinateTag::unbounded()};
  doc.strong = true;
  return doc;
}

}  // namespace

TEST(Parse, SpecExamples) {
  EXPECT_EQ(eval_text("x1^2 + 2*x2", {{"x1", 1}, {"x2", 2}}), 5.0);
  for (double x : {-3.0, 0.1, 1.0, 2.5, 100.0}) {
    EXPECT_NEAR(eval_text("sin(x1)^2 + cos(x1)^2", {{"x1", x}}), 1.0, 1e-15);
  }
  const ParseError e = parse_failure("2*(x1");
  EXPECT_EQ(e.kind(), ParseErrorKind::unbalanced_parenthesis);
  EXPECT_EQ(e.offset(), 5u);
}

TEST(Parse, Precedence) {
  EXPECT_EQ(eval_text("2^3^2"), 512.0);
  EXPECT_EQ(eval_text("-2^2"), -4.0);
  EXPECT_EQ(eval_text("2^-1"), 0.5);
  EXPECT_EQ(eval_text("1 - 2 - 3"), -4.0);
  EXPECT_EQ(eval_text("8 / 4 / 2"), 1.0);
  EXPECT_EQ(eval_text("1 + 2 * 3"), 7.0);
  EXPECT_EQ(eval_text("(1 + 2) * 3"), 9.0);
  EXPECT_EQ(eval_text("-x1 * 3", {{"x1", 2}}), -6.0);
  EXPECT_EQ(eval_text("1.5e2 + .5"), 150.5);
  EXPECT_NEAR(eval_text("pi"), kPi, 0.0);
}

TEST(Parse, ErrorKindsAndOffsets) {
  EXPECT_EQ(parse_failure("x1 + )").kind(), ParseErrorKind::unexpected_token);
  const ParseError extra = parse_failure("x1)");
  EXPECT_EQ(extra.kind(), ParseErrorKind::unbalanced_parenthesis);
  EXPECT_EQ(extra.offset(), 2u);
  const ParseError fn = parse_failure("1 + tan(x1)");
  EXPECT_EQ(fn.kind(), ParseErrorKind::unknown_function);
  EXPECT_EQ(fn.offset(), 4u);
  const ParseError v = parse_failure("x1 + x3", ParseContext{2, {}});
  EXPECT_EQ(v.kind(), ParseErrorKind::unknown_variable);
  EXPECT_EQ(v.offset(), 5u);
  EXPECT_EQ(parse_failure("y + 1", ParseContext{2, {}}).kind(), ParseErrorKind::unknown_variable);
  EXPECT_EQ(parse_failure("1 $ 2").offset(), 2u);
  EXPECT_EQ(parse_failure("").kind(), ParseErrorKind::unexpected_token);
  EXPECT_EQ(parse_failure("2 3").kind(), ParseErrorKind::unexpected_token);
  EXPECT_NO_THROW(parse_expression("A * x2", ParseContext{2, {"A"}}));
}

TEST(Evaluate, SpecExamples) {
  EXPECT_EQ(evaluate(*lit(3.5), {}), 3.5);
  EXPECT_THROW(eval_text("sqrt(x1)", {{"x1", -1}}), DomainError);
  EXPECT_EQ(eval_text("exp(0)"), 1.0);
}

TEST(Evaluate, DomainErrors) {
  EXPECT_THROW(eval_text("log(0)"), DomainError);
  EXPECT_THROW(eval_text("log(-2)"), DomainError);
  EXPECT_THROW(eval_text("(-2)^0.5"), DomainError);
  EXPECT_EQ(eval_text("(-2)^3"), -8.0);
  EXPECT_THROW(eval_text("1/0"), DomainError);
  EXPECT_THROW(eval_text("exp(1000)"), DomainError);
  EXPECT_EQ(eval_text("sqrt(0)"), 0.0);
}

TEST(Evaluate, UnboundVariable) { EXPECT_THROW(eval_text("x1 + 1"), ValidationError); }

TEST(Evaluate, PureAndBitIdentical) {
  const ExprPtr e = parse_expression("sin(x1)*exp(x2)/(1 + x1^2) - sqrt(x2)");
  const std::map<std::string, double> b{{"x1", 0.7}, {"x2", 1.3}};
  const double a = evaluate(*e, b);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(evaluate(*e, b), a);
}

TEST(PrettyPrint, ParsePrintParseIsIdempotent) {
  const char* samples[] = {"x1^2 + 2*x2", "-x1^2", "2^3^2", "sin(x1)^2 + cos(x1)^2", "-(-(x1))",
                           "1/(1 + x1*x1 + x2*x2)^2", "0.1 + 1e-20 * x2", "exp(-x1) - log(2 + x2) / 3",
                           "((x1))", "x1 - (x2 - 1)"};
  for (const char* s : samples) {
    const ExprPtr a = parse_expression(s);
    const std::string printed = to_string(*a);
    const ExprPtr b = parse_expression(printed);
    EXPECT_TRUE(same_tree(*a, *b)) << s << " -> " << printed;
    EXPECT_EQ(to_string(*b), printed);
  }
}

TEST(PrettyPrint, NegativeLiteralsRoundTrip) {
  const ExprPtr e = binary('*', lit(-2.5), var("x1"));
  EXPECT_TRUE(same_tree(*e, *parse_expression(to_string(*e))));
}

TEST(CompiledExpr, AgreesWithTreeEvaluation) {
  std::mt19937_64 rng(1);
  const ExprPtr e = parse_expression("A*sin(x1)*exp(x2)/(1 + x1^2) - sqrt(x2 + 2) + pi", {2, {"A"}});
  const CompiledExpr c(*e, 2, {{"A", 1.5}});
  for (int i = 0; i < 50; ++i) {
    const Vec x = random_vec(rng, 2, -1, 1);
    EXPECT_EQ(c(x), evaluate(*e, {{"x1", x[0]}, {"x2", x[1]}, {"A", 1.5}}));
  }
  const CompiledExpr bad(*parse_expression("log(x1)"), 1, {});
  EXPECT_THROW(bad(vec({-1})), DomainError);
}

TEST(SpaceDocument, ParsesJsonKeys) {
  const SpaceDocument doc = parse_space_document(read_text_file(KROPINA_SPACES_DIR "/flat_cylinder.json"));
  EXPECT_EQ(doc.dim, 2);
  EXPECT_EQ(doc.wind[0], "A");
  EXPECT_EQ(doc.constants.at("B"), 0.8);
  EXPECT_TRUE(doc.topology[0].periodic);
  EXPECT_FALSE(doc.topology[1].periodic);
  EXPECT_TRUE(doc.strong);
  const SpaceDocument again = parse_space_document(dump_space_document(doc));
  EXPECT_EQ(again.metric, doc.metric);
  EXPECT_EQ(again.constants, doc.constants);
}

TEST(SpaceDocument, RejectsMalformedDocuments) {
  EXPECT_THROW(parse_space_document("{"), ValidationError);
  EXPECT_THROW(parse_space_document(R"({"dim": 0, "metric": [], "wind": []})"), ValidationError);
  EXPECT_THROW(parse_space_document(R"({"dim": 1, "metric": [["1"]], "wind": ["1"], "extra": 1})"),
               ValidationError);
  EXPECT_THROW(parse_space_document(R"({"dim": 2, "metric": [["1","0"]], "wind": ["1","0"]})"), ValidationError);
  EXPECT_THROW(parse_space_document(R"({"dim": 1, "metric": [["1"]], "wind": ["1"], "topology": ["loop"]})"),
               ValidationError);
  EXPECT_THROW(parse_space_document(R"({"dim": 1, "metric": [["1"]], "wind": ["1"], "constants": {"x1": 2}})"),
               ValidationError);
}

TEST(LoadSpace, FlatCylinderAccepted) {
  LoadReport report;
  const SpaceDefinition s = load_space(cylinder_doc("0.6", "0.8"), &report);
  EXPECT_EQ(report.probes, 25);
  EXPECT_LT(report.diagnostics.unit_deviation, 1e-12);
  EXPECT_LT(report.diagnostics.killing_residual, 1e-9);
  EXPECT_TRUE(s.identifies_periods());
}

TEST(LoadSpace, NonUnitWindRejected) {
  try {
    load_space(cylinder_doc("1", "1"));
    FAIL() << "expected rejection";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("unit_deviation 0.414"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("probe point"), std::string::npos);
  }
}

TEST(LoadSpace, RotatingWindRejectedWhenStrong) {
  SpaceDocument doc = cylinder_doc("cos(x2)", "sin(x2)");
  doc.topology = {CoordinateTag::unbounded(), CoordinateTag::unbounded()};
  try {
    load_space(doc);
    FAIL() << "expected rejection";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("killing_residual"), std::string::npos) << e.what();
  }
  doc.strong = false;
  EXPECT_NO_THROW(load_space(doc));
}

TEST(LoadSpace, AsymmetricMetricRejected) {
  SpaceDocument doc = cylinder_doc("1", "0");
  doc.metric = {{"1", "0.1*x1"}, {"0", "1"}};
  EXPECT_THROW(load_space(doc), ValidationError);
  doc.metric = {{"1", "x1*0.1"}, {"0.1*x1", "1"}};
  EXPECT_THROW(load_space(doc), ValidationError);  // symmetric, but |W| != 1 in this metric
}

TEST(LoadSpace, AcceptedDocumentsRecheckBelowThresholds) {
  for (const char* f : {"flat_cylinder.json", "euclidean_plane.json", "flat_torus.json", "hopf_s3.json"}) {
    const SpaceDocument doc = parse_space_document(read_text_file(std::string(KROPINA_SPACES_DIR "/") + f));
    const SpaceDefinition s = load_space(doc);
    const FieldDiagnostics d = field_diagnostics(s.nav.h, s.nav.wind, s.probe_points(64));
    EXPECT_LE(d.unit_deviation, kTolLoadUnit) << f;
    EXPECT_LE(d.killing_residual, kTolLoadKilling) << f;
  }
}

TEST(LoadSpace, LoadedCylinderGeodesicMatchesClosedForm) {
  const SpaceDefinition s = load_space(cylinder_doc("0.6", "0.8"));
  const Vec y = vec({0.6 + 0.8, 0.8 - 0.6});
  const PathSample path = kropina_geodesic(s, Tangent(ChartPoint(vec({0, 0})), y), 2.0, 256);
  EXPECT_LT((path.points.back() - 2.0 * y).norm(), 1e-9);
}

TEST(Convert, AlphaBetaToNavigationSymbolic) {
  const AlphaBetaDocument ab = parse_alpha_beta_document(read_text_file(KROPINA_SPACES_DIR "/cylinder_ab.json"));
  const SpaceDocument nav = alpha_beta_to_navigation(ab);
  const SpaceDefinition s = load_space(nav);
  const Vec x = vec({0.4, -0.2});
  EXPECT_NEAR((s.nav.h.at(x) - Mat::Identity(2, 2)).norm(), 0.0, 1e-14);
  EXPECT_NEAR((s.nav.wind.at(x) - vec({0.6, 0.8})).norm(), 0.0, 1e-14);
}

TEST(Convert, GeneralMetricRoundTrip) {
  AlphaBetaDocument ab;
  ab.dim = 2;
  ab.a = {{"2 + x2^2", "0.5*x1"}, {"0.5*x1", "3"}};
  ab.b = {"1 + 0.2*x1", "0.3*x2 - 0.1"};
  ab.topology = {CoordinateTag::unbounded(), CoordinateTag::unbounded()};
  const AlphaBetaData direct = load_alpha_beta(ab);
  const SpaceDocument nav_doc = alpha_beta_to_navigation(ab);
  const SpaceDefinition nav = load_space(nav_doc);
  const NavigationData numeric = to_navigation(direct, nav.probe_points(9));
  const AlphaBetaData back = load_alpha_beta(navigation_to_alpha_beta(nav_doc, "0.3*x1 - 0.2"));
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const Vec x = random_vec(rng, 2, -1, 1);
    EXPECT_LT((nav.nav.h.at(x) - numeric.h.at(x)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((nav.nav.wind.at(x) - numeric.wind.at(x)).cwiseAbs().maxCoeff(), 1e-12);
    const Vec y = random_vec(rng, 2, -1, 1);
    const KropinaValue f1 = kropina_value(direct, x, y), f2 = kropina_value(nav.nav, x, y);
    ASSERT_EQ(f1.admissible(), f2.admissible());
    if (f1.admissible()) EXPECT_NEAR(*f1.value, *f2.value, 1e-10 * *f1.value);
    const KropinaValue f3 = kropina_value(back, x, y);
    if (f1.admissible()) EXPECT_NEAR(*f1.value, *f3.value, 1e-10 * *f1.value);
  }
}
