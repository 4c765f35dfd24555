#pragma once

#include "shine/value.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace shine {

struct ScenarioSpec;

struct DeviceRef {
  std::string device;
  std::string property;
  bool operator==(const DeviceRef&) const = default;
};

struct ContextRef {
  std::string name;
  bool operator==(const ContextRef&) const = default;
};

using Operand = std::variant<DeviceRef, ContextRef, Literal>;

enum class CmpOp { eq, ne, lt, le, gt, ge };

std::string_view to_string(CmpOp op);

struct Comparison {
  Operand lhs;
  CmpOp op = CmpOp::eq;
  Operand rhs;
  bool operator==(const Comparison&) const = default;
};

/// Boolean expression tree. `all`/`any` hold two or more children, `negate`
/// exactly one, `compare` none.
struct ConditionExpr {
  enum class Kind { compare, all, any, negate };
  Kind kind = Kind::compare;
  Comparison cmp;
  std::vector<ConditionExpr> children;

  bool operator==(const ConditionExpr&) const = default;

  static ConditionExpr compare(Operand lhs, CmpOp op, Operand rhs);
  static ConditionExpr all_of(std::vector<ConditionExpr> terms);
  static ConditionExpr any_of(std::vector<ConditionExpr> terms);
  static ConditionExpr negation(ConditionExpr term);
};

class ConditionSyntaxError : public std::runtime_error {
 public:
  ConditionSyntaxError(std::size_t offset, const std::string& msg)
      : std::runtime_error(msg + " at column " + std::to_string(offset + 1)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Grammar:
///   expr    := and { (OR | "||") and }
///   and     := unary { (AND | "&&") unary }
///   unary   := (NOT | "!") unary | "(" expr ")" | operand cmp operand
///   operand := device.<id>.<prop> | context.<name> | number | "string"
///              | true | false | on | off
/// Keywords are case-insensitive; on/off are boolean aliases.
ConditionExpr parse_condition(std::string_view text);

/// Canonical text form; parse_condition(to_string(e)) == e.
std::string to_string(const ConditionExpr& expr);

// ---------------------------------------------------------------------------
// Checked form

/// Live values addressed by compiled indices: devices in document order,
/// properties in declaration order, context variables in name order.
struct ValueTable {
  std::vector<std::vector<Literal>> devices;
  std::vector<Literal> context;
  bool operator==(const ValueTable&) const = default;
};

struct ResolvedOperand {
  enum class Source { device, context, literal };
  Source source = Source::literal;
  std::size_t index = 0;      // device index or context index
  std::size_t property = 0;   // device only
  Literal literal;            // literal only
  LiteralKind kind = LiteralKind::boolean;

  const Literal& value(const ValueTable& values) const {
    switch (source) {
      case Source::device: return values.devices[index][property];
      case Source::context: return values.context[index];
      case Source::literal: break;
    }
    return literal;
  }
};

struct CheckedComparison {
  ResolvedOperand lhs;
  CmpOp op = CmpOp::eq;
  ResolvedOperand rhs;
};

class CheckedCondition {
 public:
  CheckedCondition() = default;

  bool evaluate(const ValueTable& values) const;

  /// Device indices this condition reads.
  const std::vector<std::size_t>& devices_read() const { return devices_read_; }
  const std::vector<std::size_t>& context_read() const { return context_read_; }

 private:
  friend CheckedCondition compile_condition(const ConditionExpr&, const ScenarioSpec&);
  struct Node {
    ConditionExpr::Kind kind = ConditionExpr::Kind::compare;
    CheckedComparison cmp;
    std::vector<std::size_t> children;
  };
  bool eval_node(std::size_t node, const ValueTable& values) const;

  std::vector<Node> nodes_;  // root is nodes_.front()
  std::vector<std::size_t> devices_read_;
  std::vector<std::size_t> context_read_;
};

class ConditionTypeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resolves every reference against `spec` and kind-checks comparisons:
/// ordered comparisons need numeric operands, equality needs equal kinds,
/// and a string literal compared with an enumeration must be one of its values.
CheckedCondition compile_condition(const ConditionExpr& expr, const ScenarioSpec& spec);

}  // namespace shine
