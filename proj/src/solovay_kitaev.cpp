#include "qasmtx/solovay_kitaev.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "qasmtx/gates.hpp"
#include "qasmtx/tokenizer.hpp"

namespace qasmtx {

Su2 to_su2(const Eigen::Matrix2cd& u) {
  const Complex det = u.determinant();
  const Eigen::Matrix2cd s = u / std::sqrt(det);
  Su2 q(0.5 * (s(0, 0) + s(1, 1)).real(), -0.5 * (s(1, 0) + s(0, 1)).imag(),
        0.5 * (s(1, 0) - s(0, 1)).real(), 0.5 * (s(1, 1) - s(0, 0)).imag());
  q.normalize();
  return q;
}

Eigen::Matrix2cd to_matrix(const Su2& q) {
  Eigen::Matrix2cd m;
  m << Complex(q.w(), -q.z()), Complex(-q.y(), -q.x()), Complex(q.y(), -q.x()), Complex(q.w(), q.z());
  return m;
}

double projective_distance(const Su2& a, const Su2& b) {
  const double c = std::min(1.0, std::abs(a.coeffs().dot(b.coeffs())));
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * c));
}

double projective_distance(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  return projective_distance(to_su2(a), to_su2(b));
}

namespace {

constexpr char kMagic[4] = {'Q', 'S', 'K', 'N'};
constexpr std::uint32_t kVersion = 1;

struct QuatKey {
  std::int64_t c[4];
  bool operator==(const QuatKey& o) const { return std::equal(c, c + 4, o.c); }
};

struct QuatKeyHash {
  std::size_t operator()(const QuatKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto v : k.c) h = (h ^ static_cast<std::uint64_t>(v)) * 0x100000001b3ULL;
    return static_cast<std::size_t>(h);
  }
};

QuatKey quantize(Su2 q) {
  Eigen::Vector4d v(q.w(), q.x(), q.y(), q.z());
  for (int i = 0; i < 4; ++i) {
    if (std::abs(v[i]) < 1e-9) continue;
    if (v[i] < 0) v = -v;
    break;
  }
  QuatKey k;
  for (int i = 0; i < 4; ++i) k.c[i] = std::llround(v[i] * 1e8);
  return k;
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("truncated net cache");
  return v;
}

}  // namespace

std::uint64_t SkNet::cache_key(const std::vector<std::string>& basis, int base_length) {
  std::string s;
  for (const auto& b : basis) s += b + ",";
  s += "|" + std::to_string(base_length);
  return std::stoull(fnv1a_hex(s), nullptr, 16);
}

void SkNet::init_basis(const std::vector<std::string>& basis) {
  if (basis.empty()) throw std::invalid_argument("empty basis");
  if (basis.size() > 255) throw std::invalid_argument("basis too large");
  basis_ = basis;
  matrices_.clear();
  quats_.clear();
  for (const auto& name : basis) {
    const GateDef* def = find_gate(name);
    if (def == nullptr || def->arity != 1 || def->param_count != 0)
      throw std::invalid_argument("basis gate '" + name + "' is not a fixed single-qubit gate");
    matrices_.push_back(def->matrix({}));
    quats_.push_back(to_su2(matrices_.back()));
  }
  inverse_.assign(basis.size(), -1);
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = 0; j < basis.size(); ++j)
      if (projective_distance(quats_[i] * quats_[j], Su2::Identity()) < 1e-9) {
        inverse_[i] = static_cast<int>(j);
        break;
      }
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (inverse_[i] < 0)
      throw std::invalid_argument("basis is not closed under inverses: '" + basis[i] + "' lacks one");
}

SkNet SkNet::build(const std::vector<std::string>& basis, int base_length) {
  if (base_length < 0) throw std::invalid_argument("base_length must be non-negative");
  SkNet net;
  net.init_basis(basis);
  net.base_length_ = base_length;
  std::unordered_map<QuatKey, std::size_t, QuatKeyHash> seen;
  net.entries_.push_back({Su2::Identity(), {}});
  seen.emplace(quantize(Su2::Identity()), 0);
  std::size_t frontier_begin = 0;
  for (int len = 1; len <= base_length; ++len) {
    const std::size_t frontier_end = net.entries_.size();
    for (std::size_t e = frontier_begin; e < frontier_end; ++e) {
      for (std::size_t g = 0; g < basis.size(); ++g) {
        // The new gate acts after the word, so it multiplies on the left.
        Su2 q = net.quats_[g] * net.entries_[e].q;
        q.normalize();
        if (!seen.emplace(quantize(q), net.entries_.size()).second) continue;
        std::vector<std::uint8_t> w = net.entries_[e].word;
        w.push_back(static_cast<std::uint8_t>(g));
        net.entries_.push_back({q, std::move(w)});
      }
    }
    frontier_begin = frontier_end;
    if (frontier_begin == net.entries_.size()) break;
  }
  return net;
}

const SkNet::Entry& SkNet::nearest(const Su2& u, double* distance) const {
  std::size_t best = 0;
  double best_dot = -1.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const double d = std::abs(entries_[i].q.coeffs().dot(u.coeffs()));
    if (d > best_dot + 1e-14) {
      best_dot = d;
      best = i;
    }
  }
  if (distance != nullptr) *distance = projective_distance(entries_[best].q, u);
  return entries_[best];
}

void SkNet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write net cache " + path.string());
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, key());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(base_length_));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(basis_.size()));
  for (const auto& b : basis_) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(b.size()));
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  }
  put<std::uint64_t>(out, entries_.size());
  for (const auto& e : entries_) {
    put<double>(out, e.q.w());
    put<double>(out, e.q.x());
    put<double>(out, e.q.y());
    put<double>(out, e.q.z());
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.word.size()));
    out.write(reinterpret_cast<const char*>(e.word.data()), static_cast<std::streamsize>(e.word.size()));
  }
  if (!out) throw std::runtime_error("failed writing net cache " + path.string());
}

SkNet SkNet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open net cache " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a net cache: " + path.string());
  if (get<std::uint32_t>(in) != kVersion) throw std::runtime_error("unsupported net cache version");
  const auto key = get<std::uint64_t>(in);
  const auto base_length = get<std::uint32_t>(in);
  const auto nb = get<std::uint32_t>(in);
  std::vector<std::string> basis;
  for (std::uint32_t i = 0; i < nb; ++i) {
    std::string name(get<std::uint8_t>(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    basis.push_back(name);
  }
  if (cache_key(basis, static_cast<int>(base_length)) != key) throw std::runtime_error("net cache key mismatch");
  SkNet net;
  net.init_basis(basis);
  net.base_length_ = static_cast<int>(base_length);
  const auto n = get<std::uint64_t>(in);
  net.entries_.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double w = get<double>(in), x = get<double>(in), y = get<double>(in), z = get<double>(in);
    std::vector<std::uint8_t> word(get<std::uint8_t>(in));
    in.read(reinterpret_cast<char*>(word.data()), static_cast<std::streamsize>(word.size()));
    if (!in) throw std::runtime_error("truncated net cache");
    for (auto g : word)
      if (g >= nb) throw std::runtime_error("net cache word references unknown gate");
    net.entries_.push_back({Su2(w, x, y, z), std::move(word)});
  }
  return net;
}

SkNet SkNet::load_or_build(const std::vector<std::string>& basis, int base_length,
                           const std::filesystem::path& dir) {
  std::ostringstream name;
  name << std::hex << std::setw(16) << std::setfill('0') << cache_key(basis, base_length) << ".sknet";
  const auto path = dir / name.str();
  if (std::filesystem::exists(path)) return load(path);
  SkNet net = build(basis, base_length);
  std::filesystem::create_directories(dir);
  net.save(path);
  return net;
}

namespace {

// V, W with V W V† W† = Δ (Dawson-Nielsen balanced commutator).
std::pair<Su2, Su2> group_commutator(Su2 delta) {
  if (delta.w() < 0) delta.coeffs() = -delta.coeffs();
  const double theta = 2.0 * std::acos(std::min(1.0, delta.w()));
  const double phi = 2.0 * std::asin(std::pow((1.0 - std::cos(theta / 2)) / 2.0, 0.25));
  const Su2 v(std::cos(phi / 2), std::sin(phi / 2), 0, 0);
  const Su2 w(std::cos(phi / 2), 0, std::sin(phi / 2), 0);
  const Su2 c = v * w * v.conjugate() * w.conjugate();
  const Eigen::Vector3d from = c.vec(), to = delta.vec();
  if (from.norm() < 1e-15 || to.norm() < 1e-15) return {Su2::Identity(), Su2::Identity()};
  const Su2 s = Su2::FromTwoVectors(from, to);
  return {s * v * s.conjugate(), s * w * s.conjugate()};
}

}  // namespace

SolovayKitaev::SolovayKitaev(SkConfig cfg)
    : cfg_(std::move(cfg)), net_(SkNet::build(cfg_.basis, cfg_.base_length)) {}

SolovayKitaev::SolovayKitaev(SkConfig cfg, SkNet net) : cfg_(std::move(cfg)), net_(std::move(net)) {
  if (net_.basis() != cfg_.basis || net_.base_length() != cfg_.base_length)
    throw std::invalid_argument("net does not match the configuration");
}

SolovayKitaev::Word SolovayKitaev::inverse(const Word& w) const {
  Word out(w.rbegin(), w.rend());
  for (auto& g : out) g = static_cast<std::uint8_t>(net_.inverse_of(g));
  return out;
}

SolovayKitaev::Word SolovayKitaev::cancel(const Word& w) const {
  Word out;
  for (auto g : w) {
    if (!out.empty() && net_.inverse_of(out.back()) == g)
      out.pop_back();
    else
      out.push_back(g);
  }
  return out;
}

SolovayKitaev::Word SolovayKitaev::recurse(const Su2& u, int n, Su2& approx) const {
  if (n == 0) {
    const auto& e = net_.nearest(u);
    approx = e.q;
    return e.word;
  }
  Su2 a;
  Word base = recurse(u, n - 1, a);
  const double base_dist = projective_distance(a, u);
  if (base_dist < 1e-12) {
    approx = a;
    return base;
  }
  const auto [v, w] = group_commutator(u * a.conjugate());
  Su2 av, aw;
  const Word wv = recurse(v, n - 1, av);
  const Word ww = recurse(w, n - 1, aw);
  Su2 cand = av * aw * av.conjugate() * aw.conjugate() * a;
  cand.normalize();
  if (projective_distance(cand, u) >= base_dist) {
    approx = a;
    return base;
  }
  Word out = base;
  for (const Word& part : {inverse(ww), inverse(wv), ww, wv}) out.insert(out.end(), part.begin(), part.end());
  approx = cand;
  return cancel(out);
}

Eigen::Matrix2cd SolovayKitaev::word_matrix(const std::vector<std::string>& word) const {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
  for (const auto& g : word) m = gate_matrix(g, {}) * m;
  return m;
}

SkResult SolovayKitaev::finish(const Eigen::Matrix2cd& u, const Word& w) const {
  SkResult r;
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
  for (auto g : w) {
    r.sequence.push_back(net_.basis()[g]);
    m = net_.matrix_of(g) * m;
  }
  r.length = r.sequence.size();
  r.achieved_distance = projective_distance(u, m);
  return r;
}

SkResult SolovayKitaev::basic_approx(const Eigen::Matrix2cd& u) const {
  const auto& e = net_.nearest(to_su2(u));
  SkResult r = finish(u, e.word);
  r.depth_distances = {r.achieved_distance};
  return r;
}

SkResult SolovayKitaev::decompose(const Eigen::Matrix2cd& u, int depth) const {
  if (depth < 0) throw std::invalid_argument("recursion depth must be non-negative");
  const Su2 target = to_su2(u);
  std::vector<double> dists;
  Word w;
  for (int n = 0; n <= depth; ++n) {
    Su2 approx;
    w = recurse(target, n, approx);
    dists.push_back(finish(u, w).achieved_distance);
  }
  SkResult r = finish(u, w);
  r.depth_distances = dists;
  if (dists.size() >= 2) {
    const double last = dists.back(), prev = dists[dists.size() - 2];
    r.plateau = last > cfg_.epsilon && prev > cfg_.epsilon && last >= prev * (1 - 1e-9);
  }
  return r;
}

SkCircuitResult sk_circuit(const Circuit& c, const SolovayKitaev& sk, double epsilon) {
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  const auto& basis = sk.config().basis;
  auto in_basis = [&](const std::string& g) { return std::find(basis.begin(), basis.end(), g) != basis.end(); };
  auto decomposable = [&](const GateApplication& op) {
    return !op.is_measure() && op.qubits.size() == 1 && !in_basis(op.name);
  };
  SkCircuitResult res;
  for (const auto& op : c.ops) res.decomposed += decomposable(op) ? 1 : 0;
  res.budget = res.decomposed ? epsilon / static_cast<double>(res.decomposed) : epsilon;
  res.circuit.num_qubits = c.num_qubits;
  res.circuit.num_clbits = c.num_clbits;
  for (const auto& op : c.ops) {
    if (!decomposable(op)) {
      res.circuit.ops.push_back(op);
      continue;
    }
    const Eigen::Matrix2cd u = gate_matrix(op.name, op.params);
    SkResult best;
    for (int n = 0; n <= sk.config().recursion_depth; ++n) {
      SkResult r = sk.decompose(u, n);
      best = std::move(r);
      if (best.achieved_distance <= res.budget) break;
    }
    if (best.achieved_distance > res.budget) res.met_budget = false;
    res.plateau = res.plateau || best.plateau;
    res.max_distance = std::max(res.max_distance, best.achieved_distance);
    res.total_distance += best.achieved_distance;
    for (const auto& g : best.sequence) res.circuit.ops.push_back({g, {}, op.qubits});
  }
  return res;
}

double sk_fidelity_bound(double total_distance) {
  if (total_distance >= std::sqrt(2.0)) return 0.0;
  const double r = 1.0 - total_distance * total_distance / 2.0;
  return r * r;
}

}  // namespace qasmtx
