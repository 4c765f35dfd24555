#include "shine/scenario/condition.hpp"

#include "shine/scenario/spec.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <iterator>

namespace shine {

std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::eq: return "==";
    case CmpOp::ne: return "!=";
    case CmpOp::lt: return "<";
    case CmpOp::le: return "<=";
    case CmpOp::gt: return ">";
    case CmpOp::ge: return ">=";
  }
  return "?";
}

ConditionExpr ConditionExpr::compare(Operand lhs, CmpOp op, Operand rhs) {
  ConditionExpr e;
  e.kind = Kind::compare;
  e.cmp = Comparison{std::move(lhs), op, std::move(rhs)};
  return e;
}

ConditionExpr ConditionExpr::all_of(std::vector<ConditionExpr> terms) {
  if (terms.size() == 1) return std::move(terms.front());
  ConditionExpr e;
  e.kind = Kind::all;
  e.children = std::move(terms);
  return e;
}

ConditionExpr ConditionExpr::any_of(std::vector<ConditionExpr> terms) {
  if (terms.size() == 1) return std::move(terms.front());
  ConditionExpr e;
  e.kind = Kind::any;
  e.children = std::move(terms);
  return e;
}

ConditionExpr ConditionExpr::negation(ConditionExpr term) {
  ConditionExpr e;
  e.kind = Kind::negate;
  e.children.push_back(std::move(term));
  return e;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

enum class Tok { ident, number, string, lparen, rparen, cmp, kw_and, kw_or, kw_not, end };

struct Token {
  Tok type = Tok::end;
  std::size_t offset = 0;
  std::string text;
  double number = 0;
  CmpOp op = CmpOp::eq;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.offset = pos_;
      if (pos_ >= text_.size()) {
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (c == '(') {
        t.type = Tok::lparen;
        ++pos_;
      } else if (c == ')') {
        t.type = Tok::rparen;
        ++pos_;
      } else if (c == '"' || c == '\'') {
        t.type = Tok::string;
        t.text = read_string(c);
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 ((c == '-' || c == '.') && pos_ + 1 < text_.size() &&
                  (std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
                   text_[pos_ + 1] == '.'))) {
        t.type = Tok::number;
        t.number = read_number();
      } else if (ident_start(c)) {
        t.text = read_path();
        std::string kw = lower(t.text);
        if (kw == "and") {
          t.type = Tok::kw_and;
        } else if (kw == "or") {
          t.type = Tok::kw_or;
        } else if (kw == "not") {
          t.type = Tok::kw_not;
        } else {
          t.type = Tok::ident;
        }
      } else if (match("&&")) {
        t.type = Tok::kw_and;
      } else if (match("||")) {
        t.type = Tok::kw_or;
      } else if (match("==")) {
        t.type = Tok::cmp;
        t.op = CmpOp::eq;
      } else if (match("!=")) {
        t.type = Tok::cmp;
        t.op = CmpOp::ne;
      } else if (match("<=")) {
        t.type = Tok::cmp;
        t.op = CmpOp::le;
      } else if (match(">=")) {
        t.type = Tok::cmp;
        t.op = CmpOp::ge;
      } else if (match("<")) {
        t.type = Tok::cmp;
        t.op = CmpOp::lt;
      } else if (match(">")) {
        t.type = Tok::cmp;
        t.op = CmpOp::gt;
      } else if (match("!")) {
        t.type = Tok::kw_not;
      } else {
        throw ConditionSyntaxError(pos_, std::string("unexpected character '") + c + "'");
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool match(std::string_view s) {
    if (text_.substr(pos_, s.size()) != s) return false;
    pos_ += s.size();
    return true;
  }

  std::string read_string(char quote) {
    std::size_t start = pos_++;
    std::string out;
    while (pos_ < text_.size()) {
      char c = text_[pos_++];
      if (c == quote) return out;
      if (c == '\\') {
        if (pos_ >= text_.size()) break;
        out.push_back(text_[pos_++]);
      } else {
        out.push_back(c);
      }
    }
    throw ConditionSyntaxError(start, "unterminated string literal");
  }

  double read_number() {
    std::size_t start = pos_;
    if (text_[pos_] == '-') ++pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
            text_[pos_] == 'e' || text_[pos_] == 'E' ||
            ((text_[pos_] == '+' || text_[pos_] == '-') &&
             (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E')))) {
      ++pos_;
    }
    double v = 0;
    const char* first = text_.data() + start;
    const char* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) throw ConditionSyntaxError(start, "malformed number");
    return v;
  }

  std::string read_path() {
    std::size_t start = pos_;
    for (;;) {
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
      if (pos_ + 1 < text_.size() && text_[pos_] == '.' && ident_start(text_[pos_ + 1])) {
        ++pos_;
        continue;
      }
      break;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split_path(const std::string& s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    auto dot = s.find('.', start);
    parts.push_back(s.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return parts;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ConditionExpr parse() {
    if (peek().type == Tok::end) throw ConditionSyntaxError(0, "empty condition");
    auto e = parse_or();
    if (peek().type != Tok::end) throw ConditionSyntaxError(peek().offset, "unexpected trailing input");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  ConditionExpr parse_or() {
    std::vector<ConditionExpr> terms;
    terms.push_back(parse_and());
    while (peek().type == Tok::kw_or) {
      ++pos_;
      terms.push_back(parse_and());
    }
    return ConditionExpr::any_of(std::move(terms));
  }

  ConditionExpr parse_and() {
    std::vector<ConditionExpr> terms;
    terms.push_back(parse_unary());
    while (peek().type == Tok::kw_and) {
      ++pos_;
      terms.push_back(parse_unary());
    }
    return ConditionExpr::all_of(std::move(terms));
  }

  ConditionExpr parse_unary() {
    if (peek().type == Tok::kw_not) {
      ++pos_;
      return ConditionExpr::negation(parse_unary());
    }
    if (peek().type == Tok::lparen) {
      ++pos_;
      auto inner = parse_or();
      if (peek().type != Tok::rparen) throw ConditionSyntaxError(peek().offset, "expected ')'");
      ++pos_;
      return inner;
    }
    Operand lhs = parse_operand();
    if (peek().type != Tok::cmp) {
      throw ConditionSyntaxError(peek().offset, "expected comparison operator");
    }
    CmpOp op = next().op;
    Operand rhs = parse_operand();
    return ConditionExpr::compare(std::move(lhs), op, std::move(rhs));
  }

  Operand parse_operand() {
    const Token& t = next();
    switch (t.type) {
      case Tok::number: return Literal{t.number};
      case Tok::string: return Literal{t.text};
      case Tok::ident: {
        std::string kw = lower(t.text);
        if (kw == "true" || kw == "on") return Literal{true};
        if (kw == "false" || kw == "off") return Literal{false};
        auto parts = split_path(t.text);
        if (parts.size() == 3 && parts[0] == "device") return DeviceRef{parts[1], parts[2]};
        if (parts.size() == 2 && parts[0] == "context") return ContextRef{parts[1]};
        throw ConditionSyntaxError(
            t.offset, "unknown operand '" + t.text + "' (expected device.<id>.<property> or context.<name>)");
      }
      case Tok::end: throw ConditionSyntaxError(t.offset, "unexpected end of condition");
      default: throw ConditionSyntaxError(t.offset, "expected operand");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string operand_text(const Operand& o) {
  if (const auto* d = std::get_if<DeviceRef>(&o)) return "device." + d->device + "." + d->property;
  if (const auto* c = std::get_if<ContextRef>(&o)) return "context." + c->name;
  const auto& lit = std::get<Literal>(o);
  if (const auto* s = std::get_if<std::string>(&lit)) return quote(*s);
  return format_literal(lit);
}

void print(const ConditionExpr& e, std::string& out) {
  using K = ConditionExpr::Kind;
  switch (e.kind) {
    case K::compare:
      out += operand_text(e.cmp.lhs);
      out += ' ';
      out += to_string(e.cmp.op);
      out += ' ';
      out += operand_text(e.cmp.rhs);
      return;
    case K::negate: {
      out += "NOT ";
      const auto& child = e.children.front();
      bool paren = child.kind == K::all || child.kind == K::any;
      if (paren) out += '(';
      print(child, out);
      if (paren) out += ')';
      return;
    }
    case K::all:
    case K::any: {
      const char* sep = e.kind == K::all ? " AND " : " OR ";
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) out += sep;
        const auto& child = e.children[i];
        bool paren = child.kind == K::all || child.kind == K::any;
        if (paren) out += '(';
        print(child, out);
        if (paren) out += ')';
      }
      return;
    }
  }
}

}  // namespace

ConditionExpr parse_condition(std::string_view text) {
  return Parser(Lexer(text).run()).parse();
}

std::string to_string(const ConditionExpr& expr) {
  std::string out;
  print(expr, out);
  return out;
}

// ---------------------------------------------------------------------------
// Checking and evaluation

namespace {

std::string describe(const Operand& o) { return operand_text(o); }

struct Resolver {
  const ScenarioSpec& spec;
  std::vector<std::size_t>& devices_read;
  std::vector<std::size_t>& context_read;

  struct Result {
    ResolvedOperand operand;
    const PropertySpec* property = nullptr;
  };

  Result resolve(const Operand& o) const {
    Result r;
    if (const auto* d = std::get_if<DeviceRef>(&o)) {
      auto it = std::find_if(spec.devices.begin(), spec.devices.end(),
                             [&](const DeviceSpec& dev) { return dev.id == d->device; });
      if (it == spec.devices.end()) throw ConditionTypeError("unknown device '" + d->device + "'");
      auto pit = std::find_if(it->properties.begin(), it->properties.end(),
                              [&](const PropertySpec& p) { return p.name == d->property; });
      if (pit == it->properties.end()) {
        throw ConditionTypeError("device '" + d->device + "' has no property '" + d->property + "'");
      }
      r.operand.source = ResolvedOperand::Source::device;
      r.operand.index = static_cast<std::size_t>(std::distance(spec.devices.begin(), it));
      r.operand.property = static_cast<std::size_t>(std::distance(it->properties.begin(), pit));
      r.operand.kind = pit->literal_kind();
      r.property = &*pit;
      devices_read.push_back(r.operand.index);
    } else if (const auto* c = std::get_if<ContextRef>(&o)) {
      auto it = spec.contextDefaults.find(c->name);
      if (it == spec.contextDefaults.end()) {
        throw ConditionTypeError("unknown context variable '" + c->name + "'");
      }
      r.operand.source = ResolvedOperand::Source::context;
      r.operand.index = static_cast<std::size_t>(std::distance(spec.contextDefaults.begin(), it));
      r.operand.kind = kind_of(it->second);
      context_read.push_back(r.operand.index);
    } else {
      r.operand.source = ResolvedOperand::Source::literal;
      r.operand.literal = std::get<Literal>(o);
      r.operand.kind = kind_of(r.operand.literal);
    }
    return r;
  }
};

void check_enum_literal(const Resolver::Result& ref, const Resolver::Result& other) {
  if (!ref.property || ref.property->kind != PropertyKind::enumeration) return;
  if (other.operand.source != ResolvedOperand::Source::literal) return;
  const auto& v = std::get<std::string>(other.operand.literal);
  const auto& values = ref.property->values;
  if (std::find(values.begin(), values.end(), v) == values.end()) {
    throw ConditionTypeError("\"" + v + "\" is not a value of enumeration property '" +
                             ref.property->name + "'");
  }
}

bool compare_values(const Literal& a, CmpOp op, const Literal& b) {
  switch (op) {
    case CmpOp::eq: return a == b;
    case CmpOp::ne: return a != b;
    default: break;
  }
  double x = std::get<double>(a);
  double y = std::get<double>(b);
  switch (op) {
    case CmpOp::lt: return x < y;
    case CmpOp::le: return x <= y;
    case CmpOp::gt: return x > y;
    case CmpOp::ge: return x >= y;
    default: return false;
  }
}

}  // namespace

CheckedCondition compile_condition(const ConditionExpr& expr, const ScenarioSpec& spec) {
  CheckedCondition out;
  Resolver resolver{spec, out.devices_read_, out.context_read_};

  // Iterative flattening keeps node indices stable: children are appended
  // after their parent and patched in place.
  struct Pending {
    const ConditionExpr* expr;
    std::size_t slot;
  };
  std::vector<Pending> work{{&expr, 0}};
  out.nodes_.emplace_back();
  while (!work.empty()) {
    auto [e, slot] = work.back();
    work.pop_back();
    CheckedCondition::Node node;
    node.kind = e->kind;
    if (e->kind == ConditionExpr::Kind::compare) {
      auto lhs = resolver.resolve(e->cmp.lhs);
      auto rhs = resolver.resolve(e->cmp.rhs);
      bool ordered = e->cmp.op != CmpOp::eq && e->cmp.op != CmpOp::ne;
      if (ordered) {
        if (lhs.operand.kind != LiteralKind::number || rhs.operand.kind != LiteralKind::number) {
          throw ConditionTypeError("ordered comparison '" + std::string(to_string(e->cmp.op)) +
                                   "' needs numeric operands: " + describe(e->cmp.lhs) + " is " +
                                   std::string(to_string(lhs.operand.kind)) + ", " +
                                   describe(e->cmp.rhs) + " is " +
                                   std::string(to_string(rhs.operand.kind)));
        }
      } else if (lhs.operand.kind != rhs.operand.kind) {
        throw ConditionTypeError("cannot compare " + describe(e->cmp.lhs) + " (" +
                                 std::string(to_string(lhs.operand.kind)) + ") with " +
                                 describe(e->cmp.rhs) + " (" +
                                 std::string(to_string(rhs.operand.kind)) + ")");
      } else {
        check_enum_literal(lhs, rhs);
        check_enum_literal(rhs, lhs);
      }
      node.cmp = CheckedComparison{std::move(lhs.operand), e->cmp.op, std::move(rhs.operand)};
    } else {
      std::size_t arity = e->children.size();
      bool bad = e->kind == ConditionExpr::Kind::negate ? arity != 1 : arity < 2;
      if (bad) throw ConditionTypeError("malformed expression node");
      for (const auto& child : e->children) {
        node.children.push_back(out.nodes_.size());
        out.nodes_.emplace_back();
        work.push_back({&child, node.children.back()});
      }
    }
    out.nodes_[slot] = std::move(node);
  }

  auto dedupe = [](std::vector<std::size_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedupe(out.devices_read_);
  dedupe(out.context_read_);
  return out;
}

bool CheckedCondition::evaluate(const ValueTable& values) const {
  if (nodes_.empty()) return false;
  return eval_node(0, values);
}

bool CheckedCondition::eval_node(std::size_t index, const ValueTable& values) const {
  const Node& n = nodes_[index];
  switch (n.kind) {
    case ConditionExpr::Kind::compare:
      return compare_values(n.cmp.lhs.value(values), n.cmp.op, n.cmp.rhs.value(values));
    case ConditionExpr::Kind::negate:
      return !eval_node(n.children.front(), values);
    case ConditionExpr::Kind::all:
      return std::all_of(n.children.begin(), n.children.end(),
                         [&](std::size_t c) { return eval_node(c, values); });
    case ConditionExpr::Kind::any:
      return std::any_of(n.children.begin(), n.children.end(),
                         [&](std::size_t c) { return eval_node(c, values); });
  }
  return false;
}

}  // namespace shine
