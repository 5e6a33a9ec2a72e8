#include "qasmtx/bench.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "qasmtx/gate_set.hpp"
#include "qasmtx/gates.hpp"
#include "qasmtx/rng.hpp"
#include "qasmtx/transpile.hpp"

namespace qasmtx {

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("a line fit needs at least two (x, y) points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("a line fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    sse += r * r;
  }
  f.r2 = syy == 0 ? 1.0 : 1.0 - sse / syy;
  f.slope_se = n > 2 ? std::sqrt(sse / static_cast<double>(n - 2) / sxx) : 0.0;
  return f;
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "depth") return SweepAxis::Depth;
  if (name == "qubits") return SweepAxis::Qubits;
  throw std::invalid_argument("unknown sweep axis '" + name + "' (expected depth or qubits)");
}

std::string to_string(SweepAxis a) { return a == SweepAxis::Depth ? "depth" : "qubits"; }

TokenBudget token_budget(const Vocabulary& v, const std::string& source, const std::string& target) {
  return {v.max_qubits(), static_cast<int>(gate_sets::by_name(source).gates.size() + gate_sets::by_name(target).gates.size()),
          v.angle_bins()};
}

ScalingReport measure_tokens(const TokenSweep& sweep, const Vocabulary& v) {
  if (sweep.from > sweep.to) throw std::invalid_argument("sweep range is empty");
  if (sweep.samples < 1) throw std::invalid_argument("samples must be positive");
  const GateSetConfig& src_gs = gate_sets::by_name(sweep.source);
  const GateSetConfig& tgt_gs = gate_sets::by_name(sweep.target);
  ScalingReport rep;
  rep.budget = token_budget(v, sweep.source, sweep.target);
  std::vector<double> xs, ys, gates_all, src_all;
  for (int value = sweep.from; value <= sweep.to; ++value) {
    ScalingRow row;
    row.n_qubits = sweep.axis == SweepAxis::Qubits ? value : sweep.fixed;
    row.depth = sweep.axis == SweepAxis::Depth ? value : sweep.fixed;
    row.samples = sweep.samples;
    double first = -1;
    for (int s = 0; s < sweep.samples; ++s) {
      RandomCircuitSpec rc;
      rc.num_qubits = row.n_qubits;
      rc.depth = row.depth;
      rc.seed = splitmix64(sweep.seed ^ (static_cast<std::uint64_t>(value) << 32) ^ static_cast<std::uint64_t>(s));
      const Circuit c = random_circuit(rc, src_gs);
      const double ns = static_cast<double>(encode(c, v).ids.size());
      const double nt = static_cast<double>(encode(transpile_rules(c, tgt_gs), v).ids.size());
      row.mean_gates += static_cast<double>(c.ops.size());
      row.mean_source_tokens += ns;
      row.mean_target_tokens += nt;
      if (first < 0) first = ns + nt;
      row.constant = row.constant && ns + nt == first;
      gates_all.push_back(static_cast<double>(c.ops.size()));
      src_all.push_back(ns);
    }
    const double n = sweep.samples;
    row.mean_gates /= n;
    row.mean_source_tokens /= n;
    row.mean_target_tokens /= n;
    row.measured_tokens = row.mean_source_tokens + row.mean_target_tokens;
    row.budget_size = row.mean_gates * rep.budget.per_gate();
    xs.push_back(value);
    ys.push_back(row.measured_tokens);
    rep.rows.push_back(row);
  }
  if (xs.size() >= 2) rep.fit = fit_line(xs, ys);
  bool varied = false;
  for (double g : gates_all) varied = varied || g != gates_all.front();
  if (varied) rep.per_gate = fit_line(gates_all, src_all);
  for (auto& r : rep.rows) r.fit = rep.fit;
  return rep;
}

std::string scaling_csv_header() {
  return "axis,n_qubits,depth,samples,mean_gates,mean_source_tokens,mean_target_tokens,measured_tokens,"
         "budget_L,budget_S,slope,intercept,r2";
}

void write_scaling_csv(std::ostream& out, const TokenSweep& sweep, const ScalingReport& r) {
  out << scaling_csv_header() << '\n';
  char buf[512];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%.6f,%.6f,%.6f,%.6f,%d,%.6f,%.9g,%.9g,%.9g", to_string(sweep.axis).c_str(),
                  row.n_qubits, row.depth, row.samples, row.mean_gates, row.mean_source_tokens, row.mean_target_tokens,
                  row.measured_tokens, r.budget.per_gate(), row.budget_size, row.fit.slope, row.fit.intercept,
                  row.fit.r2);
    out << buf << '\n';
  }
}

SkGrowthReport measure_sk_growth(const std::vector<double>& thetas, const SolovayKitaev& sk) {
  if (thetas.empty()) throw std::invalid_argument("no SK targets");
  SkGrowthReport rep;
  std::vector<double> xs, ys;
  for (double theta : thetas) {
    const double t[] = {theta};
    const Eigen::Matrix2cd u = gate_matrix("rz", t);
    for (int depth = 0; depth <= sk.config().recursion_depth; ++depth) {
      const SkResult r = sk.decompose(u, depth);
      rep.rows.push_back({theta, depth, r.achieved_distance, r.length, r.plateau});
      rep.plateau = rep.plateau || r.plateau;
      if (r.achieved_distance > 0 && r.achieved_distance < 1 && r.length > 1) {
        const double x = std::log(std::log(1.0 / r.achieved_distance));
        bool seen = false;
        for (std::size_t i = 0; i < xs.size(); ++i) seen = seen || (xs[i] == x && ys[i] == std::log(double(r.length)));
        if (seen) continue;
        xs.push_back(x);
        ys.push_back(std::log(static_cast<double>(r.length)));
      }
    }
  }
  rep.fit_points = xs.size();
  if (xs.size() >= 3) {
    const LinearFit f = fit_line(xs, ys);
    rep.c = f.slope;
    rep.a = std::exp(f.intercept);
    const boost::math::students_t dist(static_cast<double>(xs.size() - 2));
    const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
    rep.c_low = f.slope - q * f.slope_se;
    rep.c_high = f.slope + q * f.slope_se;
  } else {
    rep.c = rep.c_low = rep.c_high = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

std::string sk_growth_csv_header() { return "theta,depth,distance,length,plateau"; }

void write_sk_growth_csv(std::ostream& out, const SkGrowthReport& r) {
  out << sk_growth_csv_header() << '\n';
  char buf[256];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%zu,%d", row.theta, row.depth, row.distance, row.length,
                  row.plateau ? 1 : 0);
    out << buf << '\n';
  }
}

}  // namespace qasmtx
