#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "qasmtx/circuit.hpp"

namespace qasmtx {

struct GateSetConfig;

enum class ParseErrorKind { Syntax, UnknownGate, ArityMismatch, IndexOutOfRange };

std::string_view to_string(ParseErrorKind kind);

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, int line, int column, const std::string& message);

  ParseErrorKind kind() const noexcept { return kind_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ParseErrorKind kind_;
  int line_;
  int column_;
  std::string message_;
};

/// Parses the QASM 2.0 subset: optional `OPENQASM 2.0;` and
/// `include "qelib1.inc";`, exactly one `qreg q[n];`, an optional
/// `creg c[n];`, gate statements over the catalog, and trailing
/// `measure q[i] -> c[j];` statements. Throws ParseError at the first
/// offending token.
Circuit parse(std::string_view source);

/// Canonical text: fixed header, one statement per line, angles in radians
/// with six decimals. Throws std::invalid_argument when an op is outside
/// `dialect`.
std::string emit(const Circuit& c, const GateSetConfig& dialect);

/// Same layout with any catalog gate allowed.
std::string emit(const Circuit& c);

std::string format_angle(double radians);

}  // namespace qasmtx
