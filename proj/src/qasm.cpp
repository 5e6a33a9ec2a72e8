#include "qasmtx/qasm.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <vector>

#include "qasmtx/gate_set.hpp"
#include "qasmtx/gates.hpp"

namespace qasmtx {

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::Syntax: return "Syntax";
    case ParseErrorKind::UnknownGate: return "UnknownGate";
    case ParseErrorKind::ArityMismatch: return "ArityMismatch";
    case ParseErrorKind::IndexOutOfRange: return "IndexOutOfRange";
  }
  return "Unknown";
}

ParseError::ParseError(ParseErrorKind kind, int line, int column, const std::string& message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " +
                         std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      line_(line),
      column_(column),
      message_(message) {}

namespace {

enum class Tok { Ident, Number, String, Symbol, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space_and_comments();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::Ident;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          t.text += advance();
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        t.kind = Tok::Number;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
          t.text += advance();
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
          t.text += advance();
          if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) t.text += advance();
          while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
            t.text += advance();
        }
      } else if (c == '"') {
        t.kind = Tok::String;
        advance();
        while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\n') t.text += advance();
        if (pos_ >= src_.size() || src_[pos_] != '"')
          throw ParseError(ParseErrorKind::Syntax, t.line, t.column, "unterminated string");
        advance();
      } else if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
        t.kind = Tok::Symbol;
        t.text = "->";
        advance();
        advance();
      } else if (std::string_view(";,()[]*/-+").find(c) != std::string_view::npos) {
        t.kind = Tok::Symbol;
        t.text = advance();
      } else {
        throw ParseError(ParseErrorKind::Syntax, t.line, t.column,
                         "unexpected character '" + std::string(1, c) + "'");
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        return;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Circuit run() {
    if (peek_ident("OPENQASM")) {
      next();
      const Token& v = expect(Tok::Number, "version number");
      if (v.text != "2.0") fail(v, "only OPENQASM 2.0 is supported");
      expect_symbol(";");
    }
    if (peek_ident("include")) {
      next();
      const Token& f = expect(Tok::String, "include file name");
      if (f.text != "qelib1.inc") fail(f, "only qelib1.inc may be included");
      expect_symbol(";");
    }
    while (cur().kind != Tok::End) statement();
    if (!have_qreg_) fail(cur(), "missing qreg declaration");
    return circuit_;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const Token& t, const std::string& msg,
                         ParseErrorKind kind = ParseErrorKind::Syntax) const {
    throw ParseError(kind, t.line, t.column, msg);
  }

  bool peek_ident(std::string_view s) const { return cur().kind == Tok::Ident && cur().text == s; }
  bool peek_symbol(std::string_view s) const {
    return cur().kind == Tok::Symbol && cur().text == s;
  }

  const Token& expect(Tok kind, const std::string& what) {
    if (cur().kind != kind) fail(cur(), "expected " + what);
    return next();
  }

  void expect_symbol(std::string_view s) {
    if (!peek_symbol(s)) fail(cur(), "expected '" + std::string(s) + "'");
    next();
  }

  int integer() {
    const Token& t = expect(Tok::Number, "integer");
    int value = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || p != t.text.data() + t.text.size() || value < 0)
      fail(t, "expected non-negative integer");
    return value;
  }

  double number() {
    const Token& t = expect(Tok::Number, "number");
    double value = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || p != t.text.data() + t.text.size()) fail(t, "malformed number");
    return value;
  }

  // [-] (num | pi) [* (num | pi)] [/ num], with at most one pi.
  double angle() {
    const Token& start = cur();
    double sign = 1.0;
    if (peek_symbol("-")) {
      next();
      sign = -1.0;
    } else if (peek_symbol("+")) {
      next();
    }
    int pis = 0;
    auto factor = [&]() -> double {
      if (peek_ident("pi")) {
        next();
        ++pis;
        return std::numbers::pi;
      }
      if (cur().kind == Tok::Number) return number();
      fail(cur(), "expected number or pi in angle expression");
    };
    double value = factor();
    if (peek_symbol("*")) {
      next();
      value *= factor();
    }
    if (peek_symbol("/")) {
      next();
      const double d = number();
      if (d == 0.0) fail(start, "division by zero in angle expression");
      value /= d;
    }
    if (pis > 1) fail(start, "angle expression uses pi more than once");
    if (!peek_symbol(",") && !peek_symbol(")")) fail(cur(), "unsupported angle expression");
    return sign * value;
  }

  void register_decl(bool quantum) {
    const Token& kw = next();
    const Token& name = expect(Tok::Ident, "register name");
    const char* want = quantum ? "q" : "c";
    if (name.text != want)
      fail(name, std::string("register must be named '") + want + "'");
    expect_symbol("[");
    const Token& size_tok = cur();
    const int size = integer();
    expect_symbol("]");
    expect_symbol(";");
    if (quantum) {
      if (have_qreg_) fail(kw, "only one quantum register is supported");
      if (size < 1) fail(size_tok, "qreg size must be at least 1");
      have_qreg_ = true;
      circuit_.num_qubits = size;
    } else {
      if (have_creg_) fail(kw, "only one classical register is supported");
      have_creg_ = true;
      circuit_.num_clbits = size;
    }
  }

  int qubit_arg() {
    const Token& name = expect(Tok::Ident, "qubit operand");
    if (name.text != "q") fail(name, "unknown quantum register '" + name.text + "'");
    expect_symbol("[");
    const Token& idx_tok = cur();
    const int idx = integer();
    expect_symbol("]");
    if (!have_qreg_) fail(name, "qubit used before qreg declaration");
    if (idx >= circuit_.num_qubits)
      fail(idx_tok, "qubit index " + std::to_string(idx) + " out of range",
           ParseErrorKind::IndexOutOfRange);
    return idx;
  }

  void statement() {
    const Token& head = cur();
    if (head.kind != Tok::Ident) fail(head, "expected statement");
    if (head.text == "qreg") return register_decl(true);
    if (head.text == "creg") return register_decl(false);
    if (head.text == "OPENQASM" || head.text == "include")
      fail(head, "header statements must precede the program body");
    if (head.text == "measure") return measure();
    gate();
  }

  void measure() {
    next();
    GateApplication op;
    op.name = "measure";
    op.qubits.push_back(qubit_arg());
    expect_symbol("->");
    const Token& name = expect(Tok::Ident, "classical operand");
    if (name.text != "c") fail(name, "unknown classical register '" + name.text + "'");
    expect_symbol("[");
    const Token& idx_tok = cur();
    const int idx = integer();
    expect_symbol("]");
    expect_symbol(";");
    if (!have_creg_) fail(name, "measure without creg declaration");
    if (idx >= circuit_.num_clbits)
      fail(idx_tok, "classical index " + std::to_string(idx) + " out of range",
           ParseErrorKind::IndexOutOfRange);
    op.clbit = idx;
    seen_measure_ = true;
    circuit_.ops.push_back(std::move(op));
  }

  void gate() {
    const Token& head = next();
    const GateDef* def = find_gate(head.text);
    if (def == nullptr) fail(head, "unknown gate '" + head.text + "'", ParseErrorKind::UnknownGate);
    GateApplication op;
    op.name = head.text;
    if (peek_symbol("(")) {
      next();
      if (!peek_symbol(")")) {
        op.params.push_back(angle());
        while (peek_symbol(",")) {
          next();
          op.params.push_back(angle());
        }
      }
      expect_symbol(")");
    }
    if (static_cast<int>(op.params.size()) != def->param_count)
      fail(head, "gate '" + op.name + "' takes " + std::to_string(def->param_count) + " parameter(s)",
           ParseErrorKind::ArityMismatch);
    op.qubits.push_back(qubit_arg());
    while (peek_symbol(",")) {
      next();
      op.qubits.push_back(qubit_arg());
    }
    if (static_cast<int>(op.qubits.size()) != def->arity)
      fail(head, "gate '" + op.name + "' acts on " + std::to_string(def->arity) + " qubit(s)",
           ParseErrorKind::ArityMismatch);
    if (op.qubits.size() == 2 && op.qubits[0] == op.qubits[1])
      fail(head, "two-qubit gate repeats a qubit");
    expect_symbol(";");
    if (seen_measure_) fail(head, "gates may not follow measurements");
    circuit_.ops.push_back(std::move(op));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Circuit circuit_;
  bool have_qreg_ = false;
  bool have_creg_ = false;
  bool seen_measure_ = false;
};

std::string emit_impl(const Circuit& c, const GateSetConfig* dialect) {
  validate(c);
  std::string out = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n";
  out += "qreg q[" + std::to_string(c.num_qubits) + "];\n";
  if (c.num_clbits > 0) out += "creg c[" + std::to_string(c.num_clbits) + "];\n";
  for (const auto& op : c.ops) {
    if (op.is_measure()) {
      out += "measure q[" + std::to_string(op.qubits[0]) + "] -> c[" + std::to_string(op.clbit) +
             "];\n";
      continue;
    }
    const GateDef* def = find_gate(op.name);
    if (def == nullptr) throw std::invalid_argument("unknown gate '" + op.name + "'");
    if (dialect != nullptr && !dialect->contains(op.name))
      throw std::invalid_argument("gate '" + op.name + "' is not in dialect '" + dialect->name + "'");
    if (static_cast<int>(op.params.size()) != def->param_count ||
        static_cast<int>(op.qubits.size()) != def->arity)
      throw std::invalid_argument("gate '" + op.name + "' has the wrong arity");
    out += op.name;
    if (!op.params.empty()) {
      out += '(';
      for (std::size_t i = 0; i < op.params.size(); ++i) {
        if (i) out += ',';
        out += format_angle(op.params[i]);
      }
      out += ')';
    }
    out += ' ';
    for (std::size_t i = 0; i < op.qubits.size(); ++i) {
      if (i) out += ',';
      out += "q[" + std::to_string(op.qubits[i]) + "]";
    }
    out += ";\n";
  }
  return out;
}

}  // namespace

Circuit parse(std::string_view source) {
  Parser p(Lexer(source).run());
  return p.run();
}

std::string format_angle(double radians) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", radians);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string emit(const Circuit& c, const GateSetConfig& dialect) { return emit_impl(c, &dialect); }

std::string emit(const Circuit& c) { return emit_impl(c, nullptr); }

}  // namespace qasmtx
