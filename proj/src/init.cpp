#include "fqk/init.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "fqk/parallel.hpp"

namespace fqk {

std::string_view to_string(RampKind k) {
  return k == RampKind::adiabatic ? "adiabatic" : "instantaneous";
}

RampKind ramp_kind_from_string(std::string_view name) {
  if (name == "adiabatic") return RampKind::adiabatic;
  if (name == "instantaneous") return RampKind::instantaneous;
  throw std::invalid_argument("unknown ramp kind '" + std::string(name) + "'");
}

nlohmann::json InitSystem::to_json() const {
  return {{"omega0_ghz", ordinary(omega0)},
          {"eps_d1_ghz", ordinary(eps_d1)},
          {"ramp_shape", std::string(to_string(shape))},
          {"tanh_steepness", tanh_steepness},
          {"substeps_per_fastest_period", integrator.substeps_per_fastest_period}};
}

void RampProtocol::validate() const {
  if (!(ramp_time > 0.0)) throw std::invalid_argument("RampProtocol: ramp_time must be > 0");
  if (!std::isfinite(tilt)) throw std::invalid_argument("RampProtocol: tilt must be finite");
  if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > 1e-12) {
    throw std::invalid_argument("RampProtocol: |alpha|^2 + |beta|^2 must be 1");
  }
}

double prepare_and_score(const RampProtocol& p, const InitSystem& sys) {
  p.validate();
  const double wd = sys.omega_d1(p.tilt);
  Envelope ramp = Envelope::ramp(sys.eps_d1, p.ramp_time, sys.shape);
  ramp.tanh_steepness = sys.tanh_steepness;
  const auto h_ramp = build_tls_driven(sys.omega0, sys.eps_d1, wd, ramp);
  const auto h_plateau = build_tls_driven(sys.omega0, sys.eps_d1, wd, Envelope::constant(1.0));

  FloquetOptions opts;
  opts.samples_per_period = 1;
  opts.integrator = sys.integrator;
  const auto fl = floquet_decompose(h_plateau, wd, opts);
  if (fl.degenerate) {
    throw std::domain_error("prepare_and_score: plateau Floquet spectrum is degenerate");
  }
  const HilbertSpace& space = h_plateau.space();
  const Vector phi0 = fl.mode(0).amplitudes(), phi1 = fl.mode(1).amplitudes();

  Vector start;
  if (p.kind == RampKind::adiabatic) {
    start = Vector::Zero(2);
    start(0) = p.alpha;
    start(1) = p.beta;
  } else {
    start = p.alpha * phi0 + p.beta * phi1;
  }
  const double t_end[] = {p.ramp_time};
  const auto psi = evolve_state(h_ramp, StateVector(space, start), t_end, sys.integrator);
  const auto target =
      evolve_state(h_plateau, StateVector(space, p.alpha * phi0 + p.beta * phi1), t_end,
                   sys.integrator);
  return std::norm(target[0].inner(psi[0]));
}

Boundary find_boundary(const std::function<double(double)>& f, double target, bool rising,
                       const SearchRange& range) {
  if (!(range.low > 0.0) || !(range.high > range.low)) {
    throw std::invalid_argument("find_boundary: need 0 < low < high");
  }
  Boundary b;
  b.f_low = f(range.low);
  b.f_high = f(range.high);
  b.evaluations = 2;
  const bool low_ok = b.f_low >= target, high_ok = b.f_high >= target;
  if (low_ok == high_ok || low_ok == rising) {
    std::ostringstream os;
    os << "find_boundary: no crossing of " << target << " in [" << range.low << ", " << range.high
       << "] ns (F = " << b.f_low << " at low end, " << b.f_high << " at high end)";
    throw BoundaryNotFound(os.str(), b.f_low, b.f_high);
  }
  // Invariant: `good` meets the target, `bad` does not.
  double good = rising ? range.high : range.low;
  double bad = rising ? range.low : range.high;
  auto width_ok = [&] {
    const double w = std::abs(good - bad);
    return w <= std::min(range.abs_resolution, range.rel_resolution * std::min(good, bad));
  };
  while (!width_ok()) {
    const double mid = std::sqrt(good * bad);
    ++b.evaluations;
    if (f(mid) >= target) {
      good = mid;
    } else {
      bad = mid;
    }
  }
  b.ramp_time = good;
  b.other = bad;
  return b;
}

Boundary min_ramp_time(RampKind kind, double tilt, double target, const InitSystem& sys,
                       const SearchRange& range) {
  auto f = [&](double t) {
    RampProtocol p;
    p.kind = kind;
    p.ramp_time = t;
    p.tilt = tilt;
    return prepare_and_score(p, sys);
  };
  return find_boundary(f, target, kind == RampKind::adiabatic, range);
}

ScalingFit fit_scaling_law(const std::vector<ScalingPoint>& points, double rms_threshold) {
  if (points.size() < 4) throw std::invalid_argument("fit_scaling_law: need at least 4 points");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::vector<double> x, y;
  for (const auto& p : points) {
    if (!(p.ramp_time > 0.0) || p.tilt == 0.0) {
      throw std::invalid_argument("fit_scaling_law: points need T > 0 and tilt != 0");
    }
    lo = std::min(lo, std::abs(p.tilt));
    hi = std::max(hi, std::abs(p.tilt));
    x.push_back(std::log(std::abs(p.tilt)));
    y.push_back(std::log(p.ramp_time));
  }
  if (hi < 10.0 * lo * (1.0 - 1e-12)) {
    throw std::invalid_argument("fit_scaling_law: tilts must span at least one decade");
  }
  const double n = static_cast<double>(x.size());
  ScalingFit fit;
  double mean_c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mean_c += (y[i] + x[i]) / n;
  fit.C = std::exp(mean_c);
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += std::pow(y[i] + x[i] - mean_c, 2);
  fit.rms = std::sqrt(ss / n);

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.poor_fit = fit.rms > rms_threshold;
  return fit;
}

FidelityMap fidelity_map(RampKind kind, const std::vector<double>& tilts,
                         const std::vector<double>& ramp_times, const InitSystem& sys,
                         std::size_t workers) {
  FidelityMap m{kind, tilts, ramp_times, {}};
  const std::size_t nt = ramp_times.size();
  m.F = parallel_map(tilts.size() * nt, workers, [&](std::size_t k) {
    RampProtocol p;
    p.kind = kind;
    p.tilt = tilts[k / nt];
    p.ramp_time = ramp_times[k % nt];
    return prepare_and_score(p, sys);
  });
  return m;
}

void write_fidelity_csv(std::ostream& os, const FidelityMap& m) {
  os << "tilt,T_ramp_ns,F\n";
  os.precision(12);
  for (std::size_t i = 0; i < m.tilts.size(); ++i) {
    for (std::size_t j = 0; j < m.ramp_times.size(); ++j) {
      os << m.tilts[i] << ',' << m.ramp_times[j] << ',' << m.at(i, j) << '\n';
    }
  }
}

nlohmann::json scaling_json(const ScalingFit& fit, const std::vector<ScalingPoint>& points) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) pts.push_back({{"tilt", p.tilt}, {"T_ramp_ns", p.ramp_time}});
  return {{"C_ns", fit.C},
          {"rms_log", fit.rms},
          {"free_slope", fit.slope},
          {"free_intercept", fit.intercept},
          {"poor_fit", fit.poor_fit},
          {"points", pts}};
}

}  // namespace fqk
