#pragma once

// Expression language for metric and wind components, JSON space documents,
// and validated loading into a SpaceDefinition.

#include "kropina/errors.hpp"
#include "kropina/space.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace kropina {

enum class ParseErrorKind { unexpected_token, unbalanced_parenthesis, unknown_function, unknown_variable };

const char* to_string(ParseErrorKind kind);

class ParseError : public ValidationError {
 public:
  ParseError(ParseErrorKind kind, size_t offset, const std::string& detail);

  ParseErrorKind kind() const { return kind_; }
  /// Byte offset into the parsed text.
  size_t offset() const { return offset_; }

 private:
  ParseErrorKind kind_;
  size_t offset_;
};

/// log/sqrt outside their domain, negative base with a fractional exponent, or
/// any operation producing a non-finite value.
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { literal, variable, unary, binary };

  Kind kind = Kind::literal;
  double value = 0.0;
  /// Variable name, or function name for unary nodes ("neg", "sin", ...).
  std::string name;
  /// One of + - * / ^ for binary nodes.
  char op = 0;
  ExprPtr left;
  ExprPtr right;
};

/// Structural equality (literals compared bitwise).
bool same_tree(const Expr& a, const Expr& b);

// Builders. lit() of a negative value yields neg(lit(|v|)) so that every tree
// prints to text that parses back to the same tree.
ExprPtr lit(double v);
ExprPtr var(const std::string& name);
ExprPtr call(const std::string& fn, ExprPtr arg);
ExprPtr binary(char op, ExprPtr l, ExprPtr r);

struct ParseContext {
  /// Variables x1..x{dim} are accepted; a negative dim accepts any xk.
  int dim = -1;
  std::set<std::string> constants;
};

ExprPtr parse_expression(const std::string& text, const ParseContext& context = {});

/// Fully parenthesized text form.
std::string to_string(const Expr& e);

/// `pi` is predefined unless bound. Throws ValidationError for an unbound variable.
double evaluate(const Expr& e, const std::map<std::string, double>& bindings);

/// Stack program over slots x1..xn with constants folded in. Immutable, so
/// concurrent calls are safe.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expr& e, int dim, const std::map<std::string, double>& constants);

  double operator()(const Vec& x) const;

 private:
  struct Instr {
    enum class Op { push, load, neg, sin, cos, exp, log, sqrt, add, sub, mul, div, pow } op;
    double value = 0.0;
    int slot = 0;
  };
  std::vector<Instr> program_;
  int depth_ = 0;
};

struct SpaceDocument {
  int dim = 0;
  std::vector<std::vector<std::string>> metric;
  std::vector<std::string> wind;
  std::map<std::string, double> constants;
  std::vector<CoordinateTag> topology;
  bool strong = false;
  std::string chart_name;
  /// Optional chart bounds; paths leaving them are truncated.
  std::optional<ChartBox> chart_box;
};

/// An alpha-beta document: keys `dim`, `a`, `b`, `constants`, `topology`, `chart_name`.
struct AlphaBetaDocument {
  int dim = 0;
  std::vector<std::vector<std::string>> a;
  std::vector<std::string> b;
  std::map<std::string, double> constants;
  std::vector<CoordinateTag> topology;
  std::string chart_name;
  /// Present on documents produced from navigation data (the free function kappa).
  std::string kappa;
};

SpaceDocument parse_space_document(const std::string& json_text);
AlphaBetaDocument parse_alpha_beta_document(const std::string& json_text);
std::string read_text_file(const std::string& path);
std::string dump_space_document(const SpaceDocument& doc);
std::string dump_alpha_beta_document(const AlphaBetaDocument& doc);

struct LoadReport {
  FieldDiagnostics diagnostics;
  int probes = 0;
  /// Probe with the largest unit deviation / Killing residual.
  Vec worst_unit_point;
  Vec worst_killing_point;
};

inline constexpr double kTolLoadUnit = 1e-6;
inline constexpr double kTolLoadKilling = 1e-5;

/// Compiles the document and validates it on 5^min(dim,3) probe points.
/// Throws ValidationError naming the offending probe point and residual.
SpaceDefinition load_space(const SpaceDocument& doc, LoadReport* report = nullptr);

/// Alpha-beta data backed by compiled expressions; kappa = log(4 / b^2).
AlphaBetaData load_alpha_beta(const AlphaBetaDocument& doc);

/// Symbolic conversions: h = (4 / b^2) a, W^i = ½ a^{ij} b_j, and back with
/// a = e^-kappa h, b_i = 2 e^-kappa h_ij W^j.
SpaceDocument alpha_beta_to_navigation(const AlphaBetaDocument& doc);
AlphaBetaDocument navigation_to_alpha_beta(const SpaceDocument& doc, const std::string& kappa);

}  // namespace kropina
