#include "kropina/dsl.hpp"

#include <json.hpp>

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace kropina {

using json = nlohmann::ordered_json;

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::unexpected_token: return "UnexpectedToken";
    case ParseErrorKind::unbalanced_parenthesis: return "UnbalancedParenthesis";
    case ParseErrorKind::unknown_function: return "UnknownFunction";
    case ParseErrorKind::unknown_variable: return "UnknownVariable";
  }
  return "?";
}

ParseError::ParseError(ParseErrorKind kind, size_t offset, const std::string& detail)
    : ValidationError(std::string(to_string(kind)) + " at offset " + std::to_string(offset) + ": " + detail),
      kind_(kind),
      offset_(offset) {}

// ---------------------------------------------------------------------------
// Trees

bool same_tree(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::literal:
      return std::memcmp(&a.value, &b.value, sizeof(double)) == 0;
    case Expr::Kind::variable:
      return a.name == b.name;
    case Expr::Kind::unary:
      return a.name == b.name && same_tree(*a.left, *b.left);
    case Expr::Kind::binary:
      return a.op == b.op && same_tree(*a.left, *b.left) && same_tree(*a.right, *b.right);
  }
  return false;
}

ExprPtr lit(double v) {
  if (std::signbit(v)) return call("neg", lit(-v));
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::literal;
  e->value = v;
  return e;
}

ExprPtr var(const std::string& name) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::variable;
  e->name = name;
  return e;
}

ExprPtr call(const std::string& fn, ExprPtr arg) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::unary;
  e->name = fn;
  e->left = std::move(arg);
  return e;
}

ExprPtr binary(char op, ExprPtr l, ExprPtr r) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::binary;
  e->op = op;
  e->left = std::move(l);
  e->right = std::move(r);
  return e;
}

namespace {

bool is_function(const std::string& s) {
  return s == "sin" || s == "cos" || s == "exp" || s == "log" || s == "sqrt";
}

// Index k of a name of the form xk (k >= 1), or 0.
int coordinate_index(const std::string& s) {
  if (s.size() < 2 || s[0] != 'x' || s[1] == '0') return 0;
  int k = 0;
  for (size_t i = 1; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i])) || k > 100000) return 0;
    k = 10 * k + (s[i] - '0');
  }
  return k;
}

// ---------------------------------------------------------------------------
// Lexer and recursive-descent parser

struct Token {
  enum class Type { number, ident, op, lparen, rparen, end } type;
  std::string text;
  double number = 0.0;
  size_t offset = 0;
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
          i = j;
          while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        }
      }
      const std::string text = s.substr(start, i - start);
      char* end = nullptr;
      const double v = std::strtod(text.c_str(), &end);
      if (end != text.c_str() + text.size() || !std::isfinite(v)) {
        throw ParseError(ParseErrorKind::unexpected_token, start, "malformed number '" + text + "'");
      }
      out.push_back({Token::Type::number, text, v, start});
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Token::Type::ident, s.substr(start, i - start), 0.0, start});
    } else if (c == '(') {
      out.push_back({Token::Type::lparen, "(", 0.0, i++});
    } else if (c == ')') {
      out.push_back({Token::Type::rparen, ")", 0.0, i++});
    } else if (std::strchr("+-*/^", c)) {
      out.push_back({Token::Type::op, std::string(1, c), 0.0, i++});
    } else {
      throw ParseError(ParseErrorKind::unexpected_token, start, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Token::Type::end, "", 0.0, s.size()});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, const ParseContext& ctx) : t_(std::move(tokens)), ctx_(ctx) {}

  ExprPtr parse() {
    ExprPtr e = expr();
    const Token& tok = peek();
    if (tok.type == Token::Type::rparen) {
      throw ParseError(ParseErrorKind::unbalanced_parenthesis, tok.offset, "unmatched ')'");
    }
    if (tok.type != Token::Type::end) unexpected(tok);
    return e;
  }

 private:
  const Token& peek() const { return t_[pos_]; }
  const Token& next() { return t_[pos_++]; }
  bool at_op(char c) const { return peek().type == Token::Type::op && peek().text[0] == c; }

  [[noreturn]] static void unexpected(const Token& tok) {
    throw ParseError(ParseErrorKind::unexpected_token, tok.offset,
                     tok.type == Token::Type::end ? "unexpected end of input" : "unexpected '" + tok.text + "'");
  }

  ExprPtr expr() {
    ExprPtr e = term();
    while (at_op('+') || at_op('-')) {
      const char op = next().text[0];
      e = binary(op, e, term());
    }
    return e;
  }

  ExprPtr term() {
    ExprPtr e = unary();
    while (at_op('*') || at_op('/')) {
      const char op = next().text[0];
      e = binary(op, e, unary());
    }
    return e;
  }

  ExprPtr unary() {
    if (at_op('-')) {
      next();
      return call("neg", unary());
    }
    return power();
  }

  ExprPtr power() {
    ExprPtr base = primary();
    if (at_op('^')) {
      next();
      return binary('^', base, unary());
    }
    return base;
  }

  ExprPtr primary() {
    const Token tok = next();
    switch (tok.type) {
      case Token::Type::number: {
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::literal;
        e->value = tok.number;
        return e;
      }
      case Token::Type::lparen: {
        ExprPtr e = expr();
        close(tok);
        return e;
      }
      case Token::Type::ident: {
        if (peek().type == Token::Type::lparen) {
          if (!is_function(tok.text)) {
            throw ParseError(ParseErrorKind::unknown_function, tok.offset, "unknown function '" + tok.text + "'");
          }
          const Token open = next();
          ExprPtr arg = expr();
          close(open);
          return call(tok.text, arg);
        }
        check_variable(tok);
        return var(tok.text);
      }
      default:
        unexpected(tok);
    }
  }

  void close(const Token& open) {
    const Token& tok = peek();
    if (tok.type == Token::Type::rparen) {
      next();
      return;
    }
    if (tok.type == Token::Type::end) {
      throw ParseError(ParseErrorKind::unbalanced_parenthesis, tok.offset,
                       "'(' at offset " + std::to_string(open.offset) + " is never closed");
    }
    unexpected(tok);
  }

  void check_variable(const Token& tok) const {
    const int k = coordinate_index(tok.text);
    if (k > 0 && (ctx_.dim < 0 || k <= ctx_.dim)) return;
    if (tok.text == "pi" || ctx_.constants.count(tok.text)) return;
    throw ParseError(ParseErrorKind::unknown_variable, tok.offset, "unknown variable '" + tok.text + "'");
  }

  std::vector<Token> t_;
  const ParseContext& ctx_;
  size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " produced a non-finite value");
  return v;
}

double apply_unary(const std::string& fn, double x) {
  if (fn == "neg") return -x;
  if (fn == "sin") return std::sin(x);
  if (fn == "cos") return std::cos(x);
  if (fn == "exp") return checked(std::exp(x), "exp");
  if (fn == "log") {
    if (!(x > 0.0)) throw DomainError("log of a non-positive value");
    return std::log(x);
  }
  if (fn == "sqrt") {
    if (x < 0.0) throw DomainError("sqrt of a negative value");
    return std::sqrt(x);
  }
  throw ValidationError("unknown function '" + fn + "'");
}

double apply_binary(char op, double a, double b) {
  switch (op) {
    case '+': return checked(a + b, "addition");
    case '-': return checked(a - b, "subtraction");
    case '*': return checked(a * b, "multiplication");
    case '/': return checked(a / b, "division");
    case '^':
      if (a < 0.0 && std::trunc(b) != b) throw DomainError("negative base with a non-integer exponent");
      return checked(std::pow(a, b), "power");
  }
  throw ValidationError(std::string("unknown operator '") + op + "'");
}

}  // namespace

ExprPtr parse_expression(const std::string& text, const ParseContext& context) {
  return Parser(tokenize(text), context).parse();
}

std::string to_string(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::literal: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", e.value);
      return buf;
    }
    case Expr::Kind::variable:
      return e.name;
    case Expr::Kind::unary:
      return (e.name == "neg" ? std::string("-") : e.name) + "(" + to_string(*e.left) + ")";
    case Expr::Kind::binary:
      return "(" + to_string(*e.left) + " " + e.op + " " + to_string(*e.right) + ")";
  }
  return "";
}

double evaluate(const Expr& e, const std::map<std::string, double>& bindings) {
  switch (e.kind) {
    case Expr::Kind::literal:
      return e.value;
    case Expr::Kind::variable: {
      if (auto it = bindings.find(e.name); it != bindings.end()) return it->second;
      if (e.name == "pi") return std::numbers::pi;
      throw ValidationError("unbound variable '" + e.name + "'");
    }
    case Expr::Kind::unary:
      return apply_unary(e.name, evaluate(*e.left, bindings));
    case Expr::Kind::binary:
      return apply_binary(e.op, evaluate(*e.left, bindings), evaluate(*e.right, bindings));
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Compiled form

CompiledExpr::CompiledExpr(const Expr& root, int dim, const std::map<std::string, double>& constants) {
  int height = 0;
  auto emit = [&](Instr ins, int change) {
    program_.push_back(ins);
    height += change;
    depth_ = std::max(depth_, height);
  };
  auto walk = [&](auto&& self, const Expr& e) -> void {
    switch (e.kind) {
      case Expr::Kind::literal:
        emit({Instr::Op::push, e.value, 0}, 1);
        return;
      case Expr::Kind::variable: {
        const int k = coordinate_index(e.name);
        if (k > 0 && k <= dim) {
          emit({Instr::Op::load, 0.0, k - 1}, 1);
        } else if (auto it = constants.find(e.name); it != constants.end()) {
          emit({Instr::Op::push, it->second, 0}, 1);
        } else if (e.name == "pi") {
          emit({Instr::Op::push, std::numbers::pi, 0}, 1);
        } else {
          throw ValidationError("unbound variable '" + e.name + "'");
        }
        return;
      }
      case Expr::Kind::unary: {
        self(self, *e.left);
        static const std::map<std::string, Instr::Op> ops{
            {"neg", Instr::Op::neg}, {"sin", Instr::Op::sin}, {"cos", Instr::Op::cos},
            {"exp", Instr::Op::exp}, {"log", Instr::Op::log}, {"sqrt", Instr::Op::sqrt}};
        const auto it = ops.find(e.name);
        if (it == ops.end()) throw ValidationError("unknown function '" + e.name + "'");
        emit({it->second, 0.0, 0}, 0);
        return;
      }
      case Expr::Kind::binary: {
        self(self, *e.left);
        self(self, *e.right);
        Instr::Op op = Instr::Op::add;
        switch (e.op) {
          case '+': op = Instr::Op::add; break;
          case '-': op = Instr::Op::sub; break;
          case '*': op = Instr::Op::mul; break;
          case '/': op = Instr::Op::div; break;
          case '^': op = Instr::Op::pow; break;
          default: throw ValidationError(std::string("unknown operator '") + e.op + "'");
        }
        emit({op, 0.0, 0}, -1);
        return;
      }
    }
  };
  walk(walk, root);
}

double CompiledExpr::operator()(const Vec& x) const {
  constexpr int kInline = 64;
  std::array<double, kInline> inline_stack{};
  std::vector<double> heap;
  double* st = inline_stack.data();
  if (depth_ > kInline) {
    heap.resize(static_cast<size_t>(depth_));
    st = heap.data();
  }
  int top = 0;
  for (const Instr& ins : program_) {
    switch (ins.op) {
      case Instr::Op::push: st[top++] = ins.value; break;
      case Instr::Op::load: st[top++] = x[ins.slot]; break;
      case Instr::Op::neg: st[top - 1] = -st[top - 1]; break;
      case Instr::Op::sin: st[top - 1] = std::sin(st[top - 1]); break;
      case Instr::Op::cos: st[top - 1] = std::cos(st[top - 1]); break;
      case Instr::Op::exp: st[top - 1] = apply_unary("exp", st[top - 1]); break;
      case Instr::Op::log: st[top - 1] = apply_unary("log", st[top - 1]); break;
      case Instr::Op::sqrt: st[top - 1] = apply_unary("sqrt", st[top - 1]); break;
      case Instr::Op::add: --top; st[top - 1] = apply_binary('+', st[top - 1], st[top]); break;
      case Instr::Op::sub: --top; st[top - 1] = apply_binary('-', st[top - 1], st[top]); break;
      case Instr::Op::mul: --top; st[top - 1] = apply_binary('*', st[top - 1], st[top]); break;
      case Instr::Op::div: --top; st[top - 1] = apply_binary('/', st[top - 1], st[top]); break;
      case Instr::Op::pow: --top; st[top - 1] = apply_binary('^', st[top - 1], st[top]); break;
    }
  }
  return st[0];
}

// ---------------------------------------------------------------------------
// Documents

namespace {

std::string expr_text(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  throw ValidationError(where + ": expected an expression string");
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what());
  }
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ValidationError("space document must be a JSON object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw ValidationError("unknown key '" + item.key() + "' in space document");
  }
}

int read_dim(const json& j) {
  if (!j.contains("dim") || !j["dim"].is_number_integer() || j["dim"].get<int>() <= 0) {
    throw ValidationError("'dim' must be a positive integer");
  }
  return j["dim"].get<int>();
}

std::map<std::string, double> read_constants(const json& j) {
  std::map<std::string, double> out;
  if (!j.contains("constants")) return out;
  if (!j["constants"].is_object()) throw ValidationError("'constants' must be an object");
  for (const auto& item : j["constants"].items()) {
    const std::string& name = item.key();
    const bool ident = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_') &&
                       std::all_of(name.begin(), name.end(), [](char c) {
                         return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                       });
    if (!ident || coordinate_index(name) > 0 || is_function(name) || name == "pi") {
      throw ValidationError("invalid constant name '" + name + "'");
    }
    if (!item.value().is_number()) throw ValidationError("constant '" + name + "' must be a number");
    out[name] = item.value().get<double>();
  }
  return out;
}

std::vector<std::vector<std::string>> read_grid(const json& j, const char* key, int dim) {
  if (!j.contains(key) || !j[key].is_array() || static_cast<int>(j[key].size()) != dim) {
    throw ValidationError(std::string("'") + key + "' must be a " + std::to_string(dim) + "x" +
                          std::to_string(dim) + " array");
  }
  std::vector<std::vector<std::string>> out;
  for (int i = 0; i < dim; ++i) {
    const json& row = j[key][static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != dim) {
      throw ValidationError(std::string("'") + key + "' row " + std::to_string(i) + " must have " +
                            std::to_string(dim) + " entries");
    }
    std::vector<std::string> r;
    for (int k = 0; k < dim; ++k) {
      r.push_back(expr_text(row[static_cast<size_t>(k)], std::string(key) + "[" + std::to_string(i) + "]"));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> read_list(const json& j, const char* key, int dim) {
  if (!j.contains(key) || !j[key].is_array() || static_cast<int>(j[key].size()) != dim) {
    throw ValidationError(std::string("'") + key + "' must be an array of " + std::to_string(dim) + " expressions");
  }
  std::vector<std::string> out;
  for (int i = 0; i < dim; ++i) out.push_back(expr_text(j[key][static_cast<size_t>(i)], key));
  return out;
}

std::vector<CoordinateTag> read_topology(const json& j, int dim, const std::map<std::string, double>& constants) {
  std::vector<CoordinateTag> out(static_cast<size_t>(dim), CoordinateTag::unbounded());
  if (!j.contains("topology")) return out;
  const json& t = j["topology"];
  if (!t.is_array() || static_cast<int>(t.size()) != dim) {
    throw ValidationError("'topology' must list one tag per coordinate");
  }
  for (int i = 0; i < dim; ++i) {
    const json& tag = t[static_cast<size_t>(i)];
    if (tag.is_string() && tag.get<std::string>() == "unbounded") continue;
    if (tag.is_object() && tag.size() == 1 && tag.contains("periodic")) {
      double period = 0.0;
      if (tag["periodic"].is_number()) {
        period = tag["periodic"].get<double>();
      } else if (tag["periodic"].is_string()) {
        std::set<std::string> names;
        for (const auto& [k, v] : constants) names.insert(k);
        period = evaluate(*parse_expression(tag["periodic"].get<std::string>(), {0, names}), constants);
      }
      if (!(period > 0.0) || !std::isfinite(period)) throw ValidationError("periods must be positive");
      out[static_cast<size_t>(i)] = CoordinateTag::with_period(period);
      continue;
    }
    throw ValidationError("topology tags are \"unbounded\" or {\"periodic\": period}");
  }
  return out;
}

json topology_json(const std::vector<CoordinateTag>& topology) {
  json t = json::array();
  for (const CoordinateTag& tag : topology) {
    if (tag.periodic) {
      t.push_back({{"periodic", tag.period}});
    } else {
      t.push_back("unbounded");
    }
  }
  return t;
}

ParseContext context_of(int dim, const std::map<std::string, double>& constants) {
  ParseContext ctx;
  ctx.dim = dim;
  for (const auto& [k, v] : constants) ctx.constants.insert(k);
  return ctx;
}

std::string vec_text(const Vec& x) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.6g", i ? ", " : "", x[i]);
    s += buf;
  }
  return s + ")";
}

std::string num_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

SpaceDocument parse_space_document(const std::string& json_text) {
  const json j = parse_json(json_text);
  reject_unknown_keys(j, {"dim", "metric", "wind", "constants", "topology", "strong", "chart_name", "chart_box"});
  SpaceDocument doc;
  doc.dim = read_dim(j);
  doc.constants = read_constants(j);
  doc.metric = read_grid(j, "metric", doc.dim);
  doc.wind = read_list(j, "wind", doc.dim);
  doc.topology = read_topology(j, doc.dim, doc.constants);
  if (j.contains("strong")) {
    if (!j["strong"].is_boolean()) throw ValidationError("'strong' must be a boolean");
    doc.strong = j["strong"].get<bool>();
  }
  if (j.contains("chart_name")) {
    if (!j["chart_name"].is_string()) throw ValidationError("'chart_name' must be a string");
    doc.chart_name = j["chart_name"].get<std::string>();
  }
  if (j.contains("chart_box")) {
    const json& b = j["chart_box"];
    if (!b.is_object() || !b.contains("lo") || !b.contains("hi") || b["lo"].size() != static_cast<size_t>(doc.dim) ||
        b["hi"].size() != static_cast<size_t>(doc.dim)) {
      throw ValidationError("'chart_box' must be {\"lo\": [...], \"hi\": [...]} with dim entries each");
    }
    ChartBox box{Vec(doc.dim), Vec(doc.dim)};
    for (int i = 0; i < doc.dim; ++i) {
      box.lo[i] = b["lo"][static_cast<size_t>(i)].get<double>();
      box.hi[i] = b["hi"][static_cast<size_t>(i)].get<double>();
      if (!(box.lo[i] < box.hi[i])) throw ValidationError("'chart_box' needs lo < hi in every coordinate");
    }
    doc.chart_box = box;
  }
  return doc;
}

AlphaBetaDocument parse_alpha_beta_document(const std::string& json_text) {
  const json j = parse_json(json_text);
  reject_unknown_keys(j, {"dim", "a", "b", "constants", "topology", "chart_name", "kappa"});
  AlphaBetaDocument doc;
  doc.dim = read_dim(j);
  doc.constants = read_constants(j);
  doc.a = read_grid(j, "a", doc.dim);
  doc.b = read_list(j, "b", doc.dim);
  doc.topology = read_topology(j, doc.dim, doc.constants);
  if (j.contains("chart_name")) doc.chart_name = j["chart_name"].get<std::string>();
  if (j.contains("kappa")) doc.kappa = expr_text(j["kappa"], "kappa");
  return doc;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump_space_document(const SpaceDocument& doc) {
  json j;
  j["dim"] = doc.dim;
  j["metric"] = doc.metric;
  j["wind"] = doc.wind;
  j["constants"] = json::object();
  for (const auto& [k, v] : doc.constants) j["constants"][k] = v;
  j["topology"] = topology_json(doc.topology);
  j["strong"] = doc.strong;
  j["chart_name"] = doc.chart_name;
  if (doc.chart_box) {
    j["chart_box"] = {{"lo", std::vector<double>(doc.chart_box->lo.data(), doc.chart_box->lo.data() + doc.dim)},
                      {"hi", std::vector<double>(doc.chart_box->hi.data(), doc.chart_box->hi.data() + doc.dim)}};
  }
  return j.dump(2) + "\n";
}

std::string dump_alpha_beta_document(const AlphaBetaDocument& doc) {
  json j;
  j["dim"] = doc.dim;
  j["a"] = doc.a;
  j["b"] = doc.b;
  if (!doc.kappa.empty()) j["kappa"] = doc.kappa;
  j["constants"] = json::object();
  for (const auto& [k, v] : doc.constants) j["constants"][k] = v;
  j["topology"] = topology_json(doc.topology);
  j["chart_name"] = doc.chart_name;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Loading

namespace {

std::vector<std::vector<CompiledExpr>> compile_grid(const std::vector<std::vector<std::string>>& grid, int dim,
                                                    const std::map<std::string, double>& constants,
                                                    std::vector<std::vector<ExprPtr>>* trees = nullptr) {
  const ParseContext ctx = context_of(dim, constants);
  std::vector<std::vector<CompiledExpr>> out(static_cast<size_t>(dim));
  if (trees) trees->assign(static_cast<size_t>(dim), {});
  for (int i = 0; i < dim; ++i) {
    for (int k = 0; k < dim; ++k) {
      ExprPtr e = parse_expression(grid[static_cast<size_t>(i)][static_cast<size_t>(k)], ctx);
      out[static_cast<size_t>(i)].emplace_back(*e, dim, constants);
      if (trees) (*trees)[static_cast<size_t>(i)].push_back(e);
    }
  }
  return out;
}

std::vector<CompiledExpr> compile_list(const std::vector<std::string>& list, int dim,
                                       const std::map<std::string, double>& constants) {
  const ParseContext ctx = context_of(dim, constants);
  std::vector<CompiledExpr> out;
  for (const std::string& s : list) out.emplace_back(*parse_expression(s, ctx), dim, constants);
  return out;
}

// Upper triangle mirrored, so evaluation is exactly symmetric.
MetricField compiled_metric(std::vector<std::vector<CompiledExpr>> grid, int dim) {
  return MetricField(dim, [grid = std::move(grid), dim](const Vec& x) {
    Mat m(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int k = i; k < dim; ++k) {
        m(i, k) = m(k, i) = grid[static_cast<size_t>(i)][static_cast<size_t>(k)](x);
      }
    }
    return m;
  });
}

Vec eval_list(const std::vector<CompiledExpr>& list, const Vec& x) {
  Vec out(static_cast<Eigen::Index>(list.size()));
  for (size_t i = 0; i < list.size(); ++i) out[static_cast<Eigen::Index>(i)] = list[i](x);
  return out;
}

std::vector<ChartPoint> document_probes(int dim, const std::vector<CoordinateTag>& topology,
                                        const std::optional<ChartBox>& box) {
  int count = 1;
  for (int i = 0; i < std::min(dim, 3); ++i) count *= 5;
  Vec lo = Vec::Constant(dim, -1.0), hi = Vec::Constant(dim, 1.0);
  for (int i = 0; i < dim; ++i) {
    if (topology[static_cast<size_t>(i)].periodic) {
      lo[i] = 0.0;
      hi[i] = topology[static_cast<size_t>(i)].period;
    }
    if (box) {
      lo[i] = std::max(lo[i], box->lo[i]);
      hi[i] = std::min(hi[i], box->hi[i]);
      if (!(lo[i] < hi[i])) {
        lo[i] = box->lo[i];
        hi[i] = box->hi[i];
      }
    }
  }
  return halton_grid(lo, hi, count);
}

void check_symmetric(const std::vector<std::vector<ExprPtr>>& trees,
                     const std::vector<std::vector<CompiledExpr>>& grid, const std::vector<ChartPoint>& probes,
                     const char* what) {
  const size_t n = trees.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = i + 1; k < n; ++k) {
      if (same_tree(*trees[i][k], *trees[k][i])) continue;
      for (const ChartPoint& p : probes) {
        const double a = grid[i][k](p.coords()), b = grid[k][i](p.coords());
        if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) {
          throw ValidationError(std::string(what) + " is not symmetric: entries (" + std::to_string(i + 1) + "," +
                                std::to_string(k + 1) + ") and (" + std::to_string(k + 1) + "," +
                                std::to_string(i + 1) + ") differ at " + vec_text(p.coords()));
        }
      }
    }
  }
}

}  // namespace

SpaceDefinition load_space(const SpaceDocument& doc, LoadReport* report) {
  const int n = doc.dim;
  if (static_cast<int>(doc.topology.size()) != n) throw ValidationError("topology length does not match dim");
  std::vector<std::vector<ExprPtr>> trees;
  auto grid = compile_grid(doc.metric, n, doc.constants, &trees);
  const auto wind = compile_list(doc.wind, n, doc.constants);
  const std::vector<ChartPoint> probes = document_probes(n, doc.topology, doc.chart_box);
  try {
    check_symmetric(trees, grid, probes, "metric");
  } catch (const DomainError& e) {
    throw ValidationError(std::string("metric cannot be evaluated on the probe grid: ") + e.what());
  }

  SpaceDefinition s;
  s.name = doc.chart_name.empty() ? "document" : doc.chart_name;
  s.nav = NavigationData{compiled_metric(std::move(grid), n),
                         VectorField(n, [wind](const Vec& x) { return eval_list(wind, x); })};
  s.intrinsic_dim = n;
  s.topology = doc.topology;
  s.chart_box = doc.chart_box;

  LoadReport local;
  local.probes = static_cast<int>(probes.size());
  double worst_killing = -1.0, worst_unit = -1.0;
  for (const ChartPoint& p : probes) {
    FieldDiagnostics d;
    try {
      d = field_diagnostics(s.nav.h, s.nav.wind, {p});
      if (!doc.strong) d.killing_residual = 0.0;
    } catch (const NumericalError& e) {
      throw ValidationError("space cannot be evaluated at probe point " + vec_text(p.coords()) + ": " + e.what());
    }
    if (d.unit_deviation > worst_unit) {
      worst_unit = d.unit_deviation;
      local.worst_unit_point = p.coords();
    }
    if (d.killing_residual > worst_killing) {
      worst_killing = d.killing_residual;
      local.worst_killing_point = p.coords();
    }
    local.diagnostics.unit_deviation = std::max(local.diagnostics.unit_deviation, d.unit_deviation);
    local.diagnostics.killing_residual = std::max(local.diagnostics.killing_residual, d.killing_residual);
    local.diagnostics.parallel_residual = std::max(local.diagnostics.parallel_residual, d.parallel_residual);
    local.diagnostics.closedness_residual = std::max(local.diagnostics.closedness_residual, d.closedness_residual);
  }
  if (report) *report = local;
  if (local.diagnostics.unit_deviation > kTolLoadUnit) {
    throw ValidationError("wind is not unit: unit_deviation " + num_text(local.diagnostics.unit_deviation) +
                          " at probe point " + vec_text(local.worst_unit_point));
  }
  if (doc.strong && local.diagnostics.killing_residual > kTolLoadKilling) {
    throw ValidationError("wind is not Killing: killing_residual " + num_text(local.diagnostics.killing_residual) +
                          " at probe point " + vec_text(local.worst_killing_point));
  }
  return s;
}

AlphaBetaData load_alpha_beta(const AlphaBetaDocument& doc) {
  const int n = doc.dim;
  std::vector<std::vector<ExprPtr>> trees;
  auto grid = compile_grid(doc.a, n, doc.constants, &trees);
  const auto b = compile_list(doc.b, n, doc.constants);
  std::vector<CoordinateTag> topology = doc.topology;
  if (topology.empty()) topology.assign(static_cast<size_t>(n), CoordinateTag::unbounded());
  check_symmetric(trees, grid, document_probes(n, topology, std::nullopt), "a");
  AlphaBetaData ab;
  ab.a = compiled_metric(std::move(grid), n);
  ab.b = CovectorField(n, [b](const Vec& x) { return eval_list(b, x); });
  const MetricField a = ab.a;
  const CovectorField bf = ab.b;
  ab.kappa = [a, bf](const Vec& x) {
    const Vec bx = bf.at(x);
    const double b2 = bx.dot(a.inverse_at(x) * bx);
    if (!(b2 > 0.0)) throw NumericalError("b vanishes; kappa is undefined");
    return std::log(4.0 / b2);
  };
  return ab;
}

// ---------------------------------------------------------------------------
// Symbolic conversion

namespace {

bool is_lit(const ExprPtr& e, double v) { return e->kind == Expr::Kind::literal && e->value == v; }

ExprPtr s_add(ExprPtr a, ExprPtr b) {
  if (is_lit(a, 0.0)) return b;
  if (is_lit(b, 0.0)) return a;
  return binary('+', a, b);
}

ExprPtr s_sub(ExprPtr a, ExprPtr b) {
  if (is_lit(b, 0.0)) return a;
  if (is_lit(a, 0.0)) return call("neg", b);
  return binary('-', a, b);
}

ExprPtr s_mul(ExprPtr a, ExprPtr b) {
  if (is_lit(a, 0.0) || is_lit(b, 0.0)) return lit(0.0);
  if (is_lit(a, 1.0)) return b;
  if (is_lit(b, 1.0)) return a;
  return binary('*', a, b);
}

ExprPtr s_div(ExprPtr a, ExprPtr b) {
  if (is_lit(a, 0.0)) return lit(0.0);
  if (is_lit(b, 1.0)) return a;
  return binary('/', a, b);
}

using Grid = std::vector<std::vector<ExprPtr>>;

Grid minor_of(const Grid& m, size_t row, size_t col) {
  Grid out;
  for (size_t i = 0; i < m.size(); ++i) {
    if (i == row) continue;
    std::vector<ExprPtr> r;
    for (size_t k = 0; k < m.size(); ++k) {
      if (k != col) r.push_back(m[i][k]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

// Laplace expansion along the first row.
ExprPtr determinant(const Grid& m) {
  if (m.size() == 1) return m[0][0];
  ExprPtr det = lit(0.0);
  for (size_t k = 0; k < m.size(); ++k) {
    ExprPtr term = s_mul(m[0][k], determinant(minor_of(m, 0, k)));
    det = (k % 2 == 0) ? s_add(det, term) : s_sub(det, term);
  }
  return det;
}

// adj(m)(i, k) = (-1)^{i+k} det(minor(k, i)).
Grid adjugate(const Grid& m) {
  const size_t n = m.size();
  if (n == 1) return {{lit(1.0)}};
  Grid out(n, std::vector<ExprPtr>(n));
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = 0; k < n; ++k) {
      ExprPtr d = determinant(minor_of(m, k, i));
      out[i][k] = ((i + k) % 2 == 0) ? d : call("neg", d);
    }
  }
  return out;
}

Grid parse_grid(const std::vector<std::vector<std::string>>& g, const ParseContext& ctx) {
  Grid out;
  for (const auto& row : g) {
    std::vector<ExprPtr> r;
    for (const std::string& s : row) r.push_back(parse_expression(s, ctx));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

SpaceDocument alpha_beta_to_navigation(const AlphaBetaDocument& doc) {
  const int n = doc.dim;
  const ParseContext ctx = context_of(n, doc.constants);
  const Grid a = parse_grid(doc.a, ctx);
  std::vector<ExprPtr> b;
  for (const std::string& s : doc.b) b.push_back(parse_expression(s, ctx));
  const ExprPtr det = determinant(a);
  const Grid adj = adjugate(a);
  // adj b, and b . adj b = det * b^2.
  std::vector<ExprPtr> adj_b;
  ExprPtr b_adj_b = lit(0.0);
  for (int i = 0; i < n; ++i) {
    ExprPtr s = lit(0.0);
    for (int k = 0; k < n; ++k) s = s_add(s, s_mul(adj[static_cast<size_t>(i)][static_cast<size_t>(k)], b[static_cast<size_t>(k)]));
    adj_b.push_back(s);
    b_adj_b = s_add(b_adj_b, s_mul(b[static_cast<size_t>(i)], s));
  }
  // 4 / b^2 = 4 det / (b . adj b)
  const ExprPtr scale = s_div(s_mul(lit(4.0), det), b_adj_b);
  SpaceDocument out;
  out.dim = n;
  out.constants = doc.constants;
  out.topology = doc.topology.empty() ? std::vector<CoordinateTag>(static_cast<size_t>(n)) : doc.topology;
  out.chart_name = doc.chart_name;
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> row;
    for (int k = 0; k < n; ++k) row.push_back(to_string(*s_mul(scale, a[static_cast<size_t>(i)][static_cast<size_t>(k)])));
    out.metric.push_back(std::move(row));
    out.wind.push_back(to_string(*s_div(s_mul(lit(0.5), adj_b[static_cast<size_t>(i)]), det)));
  }
  return out;
}

AlphaBetaDocument navigation_to_alpha_beta(const SpaceDocument& doc, const std::string& kappa) {
  const int n = doc.dim;
  const ParseContext ctx = context_of(n, doc.constants);
  const Grid h = parse_grid(doc.metric, ctx);
  std::vector<ExprPtr> w;
  for (const std::string& s : doc.wind) w.push_back(parse_expression(s, ctx));
  const ExprPtr k = parse_expression(kappa, ctx);
  const ExprPtr factor = is_lit(k, 0.0) ? lit(1.0) : call("exp", call("neg", k));
  AlphaBetaDocument out;
  out.dim = n;
  out.constants = doc.constants;
  out.topology = doc.topology;
  out.chart_name = doc.chart_name;
  out.kappa = to_string(*k);
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> row;
    ExprPtr hw = lit(0.0);
    for (int j = 0; j < n; ++j) {
      row.push_back(to_string(*s_mul(factor, h[static_cast<size_t>(i)][static_cast<size_t>(j)])));
      hw = s_add(hw, s_mul(h[static_cast<size_t>(i)][static_cast<size_t>(j)], w[static_cast<size_t>(j)]));
    }
    out.a.push_back(std::move(row));
    out.b.push_back(to_string(*s_mul(s_mul(lit(2.0), factor), hw)));
  }
  return out;
}

}  // namespace kropina
