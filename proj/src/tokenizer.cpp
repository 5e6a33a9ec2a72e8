#include "qasmtx/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "json.hpp"

#include "qasmtx/gates.hpp"
#include "qasmtx/qasm.hpp"

namespace qasmtx {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const char* const kStructural[] = {"OPENQASM", "2.0", "include", "qelib1.inc", "qreg",
                                   "creg",     "measure", "->", ";"};

}  // namespace

double AngleBinner::normalize(double theta) const {
  if (!std::isfinite(theta)) throw std::invalid_argument("angle is not finite");
  const double scale = std::pow(10.0, rounding);
  double r = std::round(theta * scale) / scale;
  r = std::fmod(r, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

int AngleBinner::bin(double theta) const {
  const double r = normalize(theta);
  const int i = static_cast<int>(std::floor(r / kTwoPi * bins));
  return std::min(i, bins - 1);
}

double AngleBinner::unbin(int i) const {
  if (i < 0 || i >= bins) throw std::out_of_range("angle bin " + std::to_string(i) + " out of range");
  return static_cast<double>(i) / bins * kTwoPi;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Vocabulary::Vocabulary(VocabularyOptions options) : options_(options) {
  if (options.angle_bins < 2) throw std::invalid_argument("angle_bins must be at least 2");
  if (options.max_qubits < 1) throw std::invalid_argument("max_qubits must be at least 1");
  binner_.bins = options.angle_bins;
  tokens_ = {"<PAD>", "<BOS>", "<EOS>", "<PARAM_START>", "<PARAM_END>"};
  for (const char* s : kStructural) tokens_.emplace_back(s);
  for (const auto& g : gate_catalog()) tokens_.push_back(g.name);
  for (int q = 0; q < options.max_qubits; ++q) tokens_.push_back("q" + std::to_string(q));
  for (int q = 0; q < options.max_qubits; ++q) tokens_.push_back("c" + std::to_string(q));
  for (int n = 1; n <= options.max_qubits; ++n) tokens_.push_back("n" + std::to_string(n));
  first_param_ = static_cast<int>(tokens_.size());
  for (int i = 0; i < options.angle_bins; ++i) tokens_.push_back("PARAM_" + std::to_string(i));
  for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<int>(i));
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  VocabularyOptions opt;
  opt.angle_bins = 0;
  opt.max_qubits = 0;
  for (const auto& t : tokens) {
    if (t.rfind("PARAM_", 0) == 0) ++opt.angle_bins;
    if (t.size() > 1 && t[0] == 'q' && std::isdigit(static_cast<unsigned char>(t[1])))
      ++opt.max_qubits;
  }
  Vocabulary v(opt);
  if (v.tokens_ != tokens) throw std::invalid_argument("token list does not match a known vocabulary layout");
  return v;
}

Vocabulary Vocabulary::from_json(std::string_view json_text) {
  const auto j = nlohmann::json::parse(json_text);
  return from_tokens(j.get<std::vector<std::string>>());
}

std::string Vocabulary::to_json() const { return nlohmann::json(tokens_).dump(); }

std::string Vocabulary::hash() const { return fnv1a_hex(to_json()); }

std::optional<int> Vocabulary::find(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id(std::string_view token) const {
  if (auto i = find(token)) return *i;
  throw std::out_of_range("token '" + std::string(token) + "' not in vocabulary");
}

int Vocabulary::param(int bin) const {
  if (bin < 0 || bin >= options_.angle_bins) throw std::out_of_range("angle bin out of range");
  return first_param_ + bin;
}

int Vocabulary::param_bin(int id) const {
  if (id < first_param_ || id >= first_param_ + options_.angle_bins) return -1;
  return id - first_param_;
}

int header_token_count(const Circuit& c) {
  // <BOS> OPENQASM 2.0 ; include qelib1.inc ; qreg nN ; [creg nM ;] <EOS>
  return 11 + (c.num_clbits > 0 ? 3 : 0);
}

TokenSequence encode(const Circuit& c, const Vocabulary& v) {
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    throw EncodeError(e.what());
  }
  auto need = [&](std::string_view tok) {
    if (auto i = v.find(tok)) return *i;
    throw EncodeError("token '" + std::string(tok) + "' is not representable in the vocabulary");
  };
  if (c.num_qubits > v.max_qubits() || c.num_clbits > v.max_qubits())
    throw EncodeError("register larger than the vocabulary's qubit capacity");

  TokenSequence out;
  auto& ids = out.ids;
  ids.reserve(header_token_count(c) + 7 * c.ops.size());
  const int semi = need(";");
  ids.push_back(v.bos());
  ids.insert(ids.end(), {need("OPENQASM"), need("2.0"), semi, need("include"), need("qelib1.inc"),
                         semi, need("qreg"), need("n" + std::to_string(c.num_qubits)), semi});
  if (c.num_clbits > 0)
    ids.insert(ids.end(), {need("creg"), need("n" + std::to_string(c.num_clbits)), semi});
  for (const auto& op : c.ops) {
    if (op.is_measure()) {
      ids.insert(ids.end(), {need("measure"), need("q" + std::to_string(op.qubits[0])), need("->"),
                             need("c" + std::to_string(op.clbit)), semi});
      continue;
    }
    ids.push_back(need(op.name));
    for (double p : op.params) {
      ids.push_back(v.param_start());
      ids.push_back(v.param(v.binner().bin(p)));
      ids.push_back(v.param_end());
    }
    for (int q : op.qubits) ids.push_back(need("q" + std::to_string(q)));
    ids.push_back(semi);
  }
  ids.push_back(v.eos());
  out.source_hash = fnv1a_hex(emit(c));
  return out;
}

namespace {

class Decoder {
 public:
  Decoder(const std::vector<int>& ids, const Vocabulary& v) : ids_(ids), v_(v) {}

  Circuit run() {
    expect_id(v_.bos(), "<BOS>");
    expect("OPENQASM");
    expect("2.0");
    expect(";");
    expect("include");
    expect("qelib1.inc");
    expect(";");
    expect("qreg");
    c_.num_qubits = size_token();
    expect(";");
    if (is("creg")) {
      ++pos_;
      c_.num_clbits = size_token();
      expect(";");
    }
    bool measured = false;
    while (true) {
      if (pos_ >= ids_.size()) fail("sequence ends without <EOS>");
      const int id = ids_[pos_];
      if (id == v_.eos()) {
        ++pos_;
        break;
      }
      if (is("measure")) {
        measured = true;
        measure();
        continue;
      }
      if (measured) fail("gate after measurement");
      gate();
    }
    for (; pos_ < ids_.size(); ++pos_)
      if (ids_[pos_] != v_.pad()) fail("tokens after <EOS>");
    return c_;
  }

 private:
  [[noreturn]] void fail(const std::string& reason) const { throw DecodeError(pos_, reason); }

  int current() const {
    if (pos_ >= ids_.size()) fail("sequence ends without <EOS>");
    const int id = ids_[pos_];
    if (id < 0 || id >= v_.size()) fail("id " + std::to_string(id) + " outside the vocabulary");
    return id;
  }

  bool is(std::string_view tok) const {
    return pos_ < ids_.size() && ids_[pos_] >= 0 && ids_[pos_] < v_.size() &&
           v_.token(ids_[pos_]) == tok;
  }

  void expect_id(int id, std::string_view what) {
    if (current() != id) fail("expected " + std::string(what));
    ++pos_;
  }

  void expect(std::string_view tok) {
    if (v_.token(current()) != tok) fail("expected '" + std::string(tok) + "'");
    ++pos_;
  }

  // Parses a prefixed index token such as q3, c1 or n2.
  int indexed(char prefix, std::string_view what) {
    const std::string& t = v_.token(current());
    if (t.size() < 2 || t[0] != prefix || !std::isdigit(static_cast<unsigned char>(t[1])))
      fail("expected " + std::string(what));
    ++pos_;
    return std::stoi(t.substr(1));
  }

  int size_token() { return indexed('n', "register size"); }

  int qubit() {
    const int q = indexed('q', "qubit operand");
    if (q >= c_.num_qubits) {
      --pos_;
      fail("qubit operand outside the register");
    }
    return q;
  }

  void measure() {
    ++pos_;
    GateApplication op;
    op.name = "measure";
    op.qubits.push_back(qubit());
    expect("->");
    const int cb = indexed('c', "classical operand");
    if (cb >= c_.num_clbits) {
      --pos_;
      fail("classical operand outside the register");
    }
    op.clbit = cb;
    expect(";");
    c_.ops.push_back(std::move(op));
  }

  void gate() {
    const GateDef* def = find_gate(v_.token(current()));
    if (def == nullptr) fail("expected gate or <EOS>");
    ++pos_;
    GateApplication op;
    op.name = def->name;
    for (int k = 0; k < def->param_count; ++k) {
      expect_id(v_.param_start(), "<PARAM_START>");
      const int bin = v_.param_bin(current());
      if (bin < 0) fail("expected PARAM_i inside parameter triple");
      ++pos_;
      expect_id(v_.param_end(), "<PARAM_END>");
      op.params.push_back(v_.binner().unbin(bin));
    }
    for (int k = 0; k < def->arity; ++k) op.qubits.push_back(qubit());
    if (op.qubits.size() == 2 && op.qubits[0] == op.qubits[1]) {
      --pos_;
      fail("two-qubit gate repeats a qubit");
    }
    expect(";");
    c_.ops.push_back(std::move(op));
  }

  const std::vector<int>& ids_;
  const Vocabulary& v_;
  std::size_t pos_ = 0;
  Circuit c_;
};

}  // namespace

Circuit decode(const std::vector<int>& ids, const Vocabulary& v) {
  Circuit c = Decoder(ids, v).run();
  if (c.num_qubits > v.max_qubits() || c.num_clbits > v.max_qubits())
    throw DecodeError(0, "register larger than the vocabulary allows");
  return c;
}

std::string meta_code(const std::vector<int>& ids, const Vocabulary& v) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += (ids[i] >= 0 && ids[i] < v.size()) ? v.token(ids[i]) : "<UNK:" + std::to_string(ids[i]) + ">";
  }
  return out;
}

}  // namespace qasmtx
