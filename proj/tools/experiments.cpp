#include "experiments.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "fqk/init.hpp"
#include "fqk/parallel.hpp"
#include "fqk/readout.hpp"
#include "fqk/twotone.hpp"
#include "fqk/xgate.hpp"

namespace fqk::cli {

Context::Context(RunConfig c, bool v, bool b)
    : cfg(std::move(c)), params(cfg.params, "config.params"), validate_only(v), bench(b) {}

OutputSet& Context::begin() {
  params.finish();
  if (validate_only) throw ValidateOnly{};
  nlohmann::json resolved = {{"schema_version", 1},
                             {"experiment", cfg.experiment},
                             {"seed", cfg.seed},
                             {"integrator", cfg.integrator_json},
                             {"params", params.resolved()}};
  out = std::make_unique<OutputSet>(cfg.out_dir, std::move(resolved));
  return *out;
}

namespace {

std::vector<double> logspace(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) {
    const double s = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    v.push_back(a * std::pow(b / a, s));
  }
  return v;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return v;
}

std::string tag(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

int positive_int(Section& s, const std::string& key, long fallback, long min = 1) {
  const long v = s.integer(key, fallback);
  if (v < min) throw ConfigError("config.params." + key + ": must be >= " + std::to_string(min));
  return static_cast<int>(v);
}

double positive(Section& s, const std::string& key, double fallback) {
  const double v = s.number(key, fallback);
  if (!(v > 0.0)) throw ConfigError("config.params." + key + ": must be > 0");
  return v;
}

// --- two-tone qubit ---------------------------------------------------------

struct TwoToneSetup {
  double omega0 = 0.0, eps_d1 = 0.0, omega_d1 = 0.0, eps_d2 = 0.0;
  RatioGrid grid;
  int full_numerators = 4;

  TwoToneBuilder builder() const {
    return [s = *this](double w2) { return build_tls_two_tone(s.omega0, s.eps_d1, s.omega_d1, s.eps_d2, w2); };
  }
};

TwoToneSetup read_two_tone(Section& s, const std::string& prefix, int p_max_default) {
  TwoToneSetup t;
  t.omega0 = angular(s.number("omega0_ghz"));
  t.eps_d1 = angular(s.number("eps_d1_ghz", 0.21));
  t.omega_d1 = angular(s.number("omega_d1_ghz", 5.0));
  t.eps_d2 = angular(s.number("eps_d2_ghz", 0.004));
  const int p_max = positive_int(s, prefix + "p_max", p_max_default);
  for (int p = 1; p <= p_max; ++p) t.grid.numerators.push_back(p);
  t.full_numerators = positive_int(s, prefix + "full_numerators", 4);
  t.grid.omega_d1 = t.omega_d1;
  t.grid.ratio_min = s.number(prefix + "ratio_min", 0.03);
  t.grid.ratio_max = s.number(prefix + "ratio_max", 0.2);
  t.grid.max_points = positive_int(s, prefix + "max_points", 200, 3);
  return t;
}

nlohmann::json rwa_comparison(const TwoToneSetup& t, const AnticrossingResult& r) {
  nlohmann::json out = nlohmann::json::object();
  std::string best;
  double best_dist = INFINITY;
  for (auto c : {RwaConvention::standard, RwaConvention::full_amplitude}) {
    const double ratio = rwa_tls(t.omega0, t.omega_d1, t.eps_d1, c).gap() / t.omega_d1;
    const double dist = std::abs(ratio - r.ratio_center());
    const bool inside = ratio >= r.ratio_low && ratio <= r.ratio_high;
    out[std::string(to_string(c))] = {{"predicted_ratio", ratio},
                                      {"distance_from_center", dist},
                                      {"inside_interval", inside}};
    if (dist < best_dist) best_dist = dist, best = to_string(c);
  }
  out["supported"] = best;
  out["reference_ratio"] = 0.04;
  return out;
}

struct ScanOutcome {
  ProgressiveScan scan;
  nlohmann::json report;
  ResonanceFit fit;
  bool has_fit = false;
};

ScanOutcome scan_two_tone(const TwoToneSetup& t, const Context& ctx) {
  ScanOptions o;
  o.integrator = ctx.cfg.integrator;
  o.workers = ctx.cfg.workers;
  ScanOutcome s;
  s.scan = scan_and_extract(t.builder(), t.grid, o, t.full_numerators);
  s.report = anticrossing_json(s.scan.result);
  try {
    s.fit = refine_anticrossing(s.scan.spectra.back(), s.scan.result);
    s.has_fit = true;
    s.report["resonance_fit"] = {{"omega_ghz", ordinary(s.fit.omega)},
                                 {"ratio", s.fit.omega / t.omega_d1},
                                 {"g0_mhz", ordinary(s.fit.g0) * 1e3},
                                 {"rms", s.fit.rms},
                                 {"points", s.fit.points}};
  } catch (const std::exception& e) {
    s.report["resonance_fit"] = {{"error", e.what()}};
  }
  s.report["rwa_comparison"] = rwa_comparison(t, s.scan.result);
  return s;
}

nlohmann::json quasiphase_scan(Context& ctx) {
  auto& s = ctx.params;
  const TwoToneSetup t = read_two_tone(s, "", 4);
  if (t.grid.numerators.size() < 2) throw ConfigError("config.params.p_max: must be >= 2");
  OutputSet& out = ctx.begin();
  const auto sc = scan_two_tone(t, ctx);
  for (const auto& spec : sc.scan.spectra) {
    auto os = out.csv("spectrum_p" + std::to_string(spec.p) + ".csv");
    write_spectrum_csv(os, spec);
  }
  out.json("anticrossing.json", sc.report);
  return {{"ratio_low", sc.scan.result.ratio_low},
          {"ratio_high", sc.scan.result.ratio_high},
          {"ambiguous", sc.scan.result.ambiguous},
          {"supported_convention", sc.report["rwa_comparison"]["supported"]}};
}

nlohmann::json xgate(Context& ctx) {
  auto& s = ctx.params;
  XGateParams xp;
  xp.omega0 = angular(s.number("omega0_ghz"));
  xp.eps_d1 = angular(s.number("eps_d1_ghz", 0.21));
  xp.omega_d1 = angular(s.number("omega_d1_ghz", 5.0));
  xp.eps_d2 = angular(s.number("eps_d2_ghz", 0.004));
  xp.ramp_time = positive(s, "ramp_time_ns", 20.0);
  try {
    xp.shape = ramp_shape_from_string(s.text("ramp_shape", "tanh"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config.params.ramp_shape: ") + e.what());
  }
  xp.output_every_periods = positive_int(s, "output_every_periods", 5);
  const bool given = s.has("omega_d2_ghz");
  if (given) xp.omega_d2 = angular(s.number("omega_d2_ghz"));
  if (s.has("hold_time_ns")) xp.hold_time = s.number("hold_time_ns");
  if (s.has("g0_mhz")) xp.g0 = angular(s.number("g0_mhz") * 1e-3);
  if (given && xp.hold_time < 0.0 && !(xp.g0 > 0.0)) {
    throw ConfigError("config.params: missing required key 'g0_mhz' (or 'hold_time_ns') when 'omega_d2_ghz' is set");
  }
  TwoToneSetup t;
  if (!given) {
    t = read_two_tone(s, "scan_", 15);
  }
  OutputSet& out = ctx.begin();

  nlohmann::json report;
  if (!given) {
    const auto sc = scan_two_tone(t, ctx);
    if (sc.scan.result.ambiguous) {
      throw AnticrossingNotFound("xgate: extraction left several candidate intervals", sc.scan.result.audit);
    }
    xp.omega_d2 = sc.has_fit ? sc.fit.omega : sc.scan.result.omega_center();
    if (xp.g0 <= 0.0 && xp.hold_time < 0.0) {
      if (!sc.has_fit) throw std::domain_error("xgate: resonance fit failed; set g0_mhz or hold_time_ns");
      xp.g0 = sc.fit.g0;
    }
    out.json("anticrossing.json", sc.report);
    report["omega_d2_source"] = sc.has_fit ? "resonance_fit" : "interval_center";
  } else {
    report["omega_d2_source"] = "config";
  }
  const auto r = simulate_xgate(xp, ctx.cfg.integrator);
  {
    auto os = out.csv("xgate_populations.csv");
    os << "t_ns,P0,P1,eps_d2_envelope_ghz\n" << std::setprecision(12);
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      os << r.times[k] << ',' << r.p0[k] << ',' << r.p1[k] << ',' << ordinary(r.envelope_d2[k]) << '\n';
    }
  }
  report["gate"] = xgate_json(xp, r);
  report["g0_mhz"] = ordinary(xp.g0) * 1e3;
  out.json("xgate.json", report);
  return {{"final_transfer", r.transfer}, {"omega_d2_ghz", ordinary(xp.omega_d2)}, {"gate_time_ns", r.gate_time}};
}

// --- readout ------------------------------------------------------------------

LindbladConfig read_lindblad(Section& s, int substeps) {
  LindbladConfig c;
  c.substeps_per_fastest_period = positive_int(s, "lindblad_substeps", substeps, 8);
  c.check_positivity = s.flag("check_positivity", true);
  return c;
}

Sidebands read_sidebands(Section& s, const std::string& fallback) {
  try {
    return sidebands_from_string(s.text("sidebands", fallback));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config.params.sidebands: ") + e.what());
  }
}

// int_0^T D^2 in closed form for D = A (1 - exp(-kappa t / 2)).
double snr_closed_form(double A, double kappa, double T) {
  const double I = A * A * (T - 4.0 / kappa * (1.0 - std::exp(-kappa * T / 2)) +
                            1.0 / kappa * (1.0 - std::exp(-kappa * T)));
  return std::sqrt(2.0 * kappa * I);
}

nlohmann::json readout_two_body(Context& ctx) {
  auto& s = ctx.params;
  TwoBodyReadout base;
  base.omega0 = angular(s.number("omega0_ghz", 5.0));
  base.eps_d1 = angular(positive(s, "eps_d1_ghz", 0.21));
  const auto tilts = s.numbers("tilts", {0.005, 0.01, 0.3});
  base.omega_r = angular(positive(s, "omega_r_ghz", 7.0));
  base.g_sideband = angular(s.number("g_sideband_ghz", 0.005));
  base.kappa = angular(positive(s, "kappa_ghz", 0.05));
  base.cavity_dim = static_cast<std::size_t>(positive_int(s, "cavity_dim", 20, 2));
  base.sidebands = read_sidebands(s, "both");
  const double window = positive(s, "window_kappa", 5.0);
  const int samples = positive_int(s, "samples", 201, 3);
  const double t_map = s.number("t_map_ns", 30.0);
  const auto kts = s.numbers("snr_kappa_T", {0.5, 1.0, 5.0});
  const LindbladConfig lc = read_lindblad(s, 64);
  if (tilts.empty()) throw ConfigError("config.params.tilts: empty");
  for (double kt : kts) {
    if (!(kt > 0.0 && kt <= window)) throw ConfigError("config.params.snr_kappa_T: values must lie in (0, window_kappa]");
  }
  OutputSet& out = ctx.begin();

  const double t_end = window / base.kappa;
  const auto times = linspace(0.0, t_end, samples);
  nlohmann::json report = nlohmann::json::array();
  nlohmann::json summary = nlohmann::json::object();
  for (double tilt : tilts) {
    TwoBodyReadout p = base;
    p.tilt = tilt;
    const auto tr = simulate_two_body_readout(p, times, lc);
    const double d_inf = p.g_eff() / p.kappa;
    double dev = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      dev = std::max(dev, std::abs(tr.D[k] - longitudinal_D_analytic(p.g_eff(), p.kappa, times[k])));
    }
    {
      auto os = out.csv("pointer_tilt_" + tag(tilt) + ".csv");
      write_trajectory_csv(os, tr, d_inf);
    }
    const auto fit = fit_longitudinal(times, tr.D, t_end, p.kappa);
    nlohmann::json snr = nlohmann::json::array();
    for (double kt : kts) {
      const double T = kt / p.kappa;
      snr.push_back({{"kappa_T", kt},
                     {"numerical", fqk::snr(times, tr.D, p.kappa, T)},
                     {"analytic", snr_closed_form(d_inf, p.kappa, T)}});
    }
    report.push_back({{"tilt", tilt},
                      {"d_inf_analytic", d_inf},
                      {"max_deviation_over_d_inf", dev / d_inf},
                      {"fit", {{"d_inf", fit.d_inf}, {"kappa_over_kappa", fit.kappa / p.kappa}, {"rms_over_d_inf", fit.rms / fit.d_inf}}},
                      {"snr", snr},
                      {"params", tr.params}});
    summary[tag(tilt)] = dev / d_inf;
  }

  // Longitudinal versus dispersive, both with the same D(inf); the dispersive
  // probe waits t_map for the state mapping.
  const double d_inf = base.g_eff() / base.kappa;
  const auto dp = dispersive_matching(base.kappa, d_inf, t_map);
  const auto fine = linspace(0.0, t_map + t_end, 4 * samples);
  std::vector<double> d_long, d_disp;
  {
    auto os = out.csv("dispersive_comparison.csv");
    os << "t_ns,D_longitudinal,D_dispersive\n" << std::setprecision(12);
    for (double t : fine) {
      d_long.push_back(longitudinal_D_analytic(base.g_eff(), base.kappa, t));
      d_disp.push_back(dispersive_D_analytic(dp, t));
      os << t << ',' << d_long.back() << ',' << d_disp.back() << '\n';
    }
  }
  nlohmann::json cmp = nlohmann::json::array();
  for (double kt : kts) {
    const double T = kt / base.kappa;
    cmp.push_back({{"kappa_T", kt},
                   {"snr_longitudinal", fqk::snr(fine, d_long, base.kappa, T)},
                   {"snr_dispersive", fqk::snr(fine, d_disp, base.kappa, T)}});
  }
  out.json("readout_two_body.json",
           {{"tilts", report},
            {"dispersive", {{"chi_ghz", ordinary(dp.chi)}, {"eps_probe_ghz", ordinary(dp.eps_probe)}, {"t_map_ns", t_map}, {"snr", cmp}}}});
  return {{"max_deviation_over_d_inf", summary}};
}

KerrCircuit read_circuit(Section& s) {
  KerrCircuit c;
  c.omega_a = angular(positive(s, "omega_a_ghz", 8.2));
  c.omega_b = angular(positive(s, "omega_b_ghz", 5.2));
  c.omega_c = angular(positive(s, "omega_c_ghz", 7.78));
  c.alpha_b = angular(s.number("alpha_b_ghz", -0.34));
  c.alpha_c = angular(s.number("alpha_c_ghz", 0.8));
  c.g_ab = angular(s.number("g_ab_ghz", 0.0));
  c.g_bc = angular(s.number("g_bc_ghz", 0.2));
  c.g_ca = angular(s.number("g_ca_ghz", 0.2));
  c.eps_d1 = angular(s.number("eps_d1_ghz", 0.7));
  c.tilt = s.number("tilt", 0.005);
  c.modulation = angular(s.number("modulation_ghz", 0.25));
  c.sidebands = read_sidebands(s, "difference");
  c.kappa = angular(positive(s, "kappa_ghz", 0.05));
  c.dim_a = static_cast<std::size_t>(positive_int(s, "dim_a", 6, 2));
  c.dim_b = static_cast<std::size_t>(positive_int(s, "dim_b", 6, 2));
  c.dim_c = static_cast<std::size_t>(positive_int(s, "dim_c", 3, 2));
  return c;
}

nlohmann::json readout_circuit(Context& ctx) {
  auto& s = ctx.params;
  const KerrCircuit c = read_circuit(s);
  const double window = positive(s, "window_kappa", 5.0);
  const int samples = positive_int(s, "samples", 81, 3);
  const LindbladConfig lc = read_lindblad(s, 32);
  const auto doubling = s.texts("truncation_doubling", {"a", "b", "c"});
  for (const auto& m : doubling) {
    if (m != "a" && m != "b" && m != "c") throw ConfigError("config.params.truncation_doubling: modes are \"a\", \"b\", \"c\"");
  }
  OutputSet& out = ctx.begin();

  const auto times = linspace(0.0, window / c.kappa, samples);
  const auto tr = simulate_circuit_readout(c, times, lc);
  const auto fit = fit_longitudinal(times, tr.D, times.back(), c.kappa);
  {
    auto os = out.csv("circuit_pointer.csv");
    write_trajectory_csv(os, tr, fit.d_inf);
  }
  // Truncation doublings run independently.
  const auto runs = parallel_map(doubling.size(), ctx.cfg.workers, [&](std::size_t i) {
    KerrCircuit d = c;
    if (doubling[i] == "a") d.dim_a *= 2;
    if (doubling[i] == "b") d.dim_b *= 2;
    if (doubling[i] == "c") d.dim_c *= 2;
    return simulate_circuit_readout(d, times, lc);
  });
  nlohmann::json trunc = nlohmann::json::object();
  double worst = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    double dev = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) dev = std::max(dev, std::abs(runs[i].D[k] - tr.D[k]));
    trunc[doubling[i]] = dev / fit.d_inf;
    worst = std::max(worst, dev / fit.d_inf);
    auto os = out.csv("circuit_pointer_double_" + doubling[i] + ".csv");
    write_trajectory_csv(os, runs[i], fit.d_inf);
  }
  nlohmann::json report = {{"params", tr.params},
                           {"fit",
                            {{"d_inf", fit.d_inf},
                             {"kappa_eff_ghz", ordinary(fit.kappa)},
                             {"kappa_eff_over_kappa", fit.kappa / c.kappa},
                             {"g_fit_ghz", ordinary(fit.d_inf * fit.kappa)},
                             {"rms_over_d_inf", fit.rms / fit.d_inf}}},
                           {"truncation_doubling_max_dev_over_d_inf", trunc}};
  out.json("readout_circuit.json", report);
  return {{"d_inf_fit", fit.d_inf},
          {"d_inf_predicted", tr.params.value("d_inf_predicted", 0.0)},
          {"rms_over_d_inf", fit.rms / fit.d_inf},
          {"truncation_worst", worst}};
}

// --- initialization -------------------------------------------------------------

nlohmann::json init_map(Context& ctx) {
  auto& s = ctx.params;
  InitSystem sys;
  sys.omega0 = angular(positive(s, "omega0_ghz", 5.0));
  sys.eps_d1 = angular(positive(s, "eps_d1_ghz", 0.21));
  try {
    sys.shape = ramp_shape_from_string(s.text("ramp_shape", "tanh"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config.params.ramp_shape: ") + e.what());
  }
  sys.tanh_steepness = positive(s, "tanh_steepness", 4.0);
  sys.integrator = ctx.cfg.integrator;
  const double tilt_min = positive(s, "tilt_min", 0.02), tilt_max = positive(s, "tilt_max", 0.3);
  const int n_tilts = positive_int(s, "n_tilts", 20);
  const int n_times = positive_int(s, "n_times", 20);
  const double ad_lo = positive(s, "adiabatic_T_min_ns", 10.0), ad_hi = positive(s, "adiabatic_T_max_ns", 3000.0);
  const double in_lo = positive(s, "instantaneous_T_min_ns", 0.01), in_hi = positive(s, "instantaneous_T_max_ns", 10.0);
  const double target = s.number("target", 0.99);
  const auto btilts = s.numbers("boundary_tilts", {0.02, 0.03, 0.05, 0.1, 0.2, 0.3});
  SearchRange range;
  range.low = positive(s, "search_low_ns", range.low);
  range.high = positive(s, "search_high_ns", range.high);
  if (!(target > 0.0 && target < 1.0)) throw ConfigError("config.params.target: must lie in (0, 1)");
  if (!(tilt_max > tilt_min)) throw ConfigError("config.params.tilt_max: must exceed tilt_min");
  if (!(range.high > range.low)) throw ConfigError("config.params.search_high_ns: must exceed search_low_ns");
  OutputSet& out = ctx.begin();

  const auto tilts = logspace(tilt_min, tilt_max, n_tilts);
  nlohmann::json report = {{"system", sys.to_json()}, {"target", target}};
  std::vector<std::pair<RampKind, std::vector<double>>> kinds = {
      {RampKind::adiabatic, logspace(ad_lo, ad_hi, n_times)},
      {RampKind::instantaneous, logspace(in_lo, in_hi, n_times)}};
  auto bos = out.csv("boundaries.csv");
  bos << "kind,tilt,T_ramp_ns,T_other_ns,evaluations\n" << std::setprecision(12);
  for (const auto& [kind, ramp_times] : kinds) {
    const std::string name(to_string(kind));
    const auto map = fidelity_map(kind, tilts, ramp_times, sys, ctx.cfg.workers);
    {
      auto os = out.csv("fidelity_" + name + ".csv");
      write_fidelity_csv(os, map);
    }
    struct Found {
      bool ok = false;
      Boundary b;
      std::string error;
    };
    const auto found = parallel_map(btilts.size(), ctx.cfg.workers, [&](std::size_t i) {
      Found f;
      try {
        f.b = min_ramp_time(kind, btilts[i], target, sys, range);
        f.ok = true;
      } catch (const BoundaryNotFound& e) {
        f.error = e.what();
      }
      return f;
    });
    std::vector<ScalingPoint> pts;
    nlohmann::json missing = nlohmann::json::array();
    for (std::size_t i = 0; i < found.size(); ++i) {
      if (!found[i].ok) {
        missing.push_back({{"tilt", btilts[i]}, {"error", found[i].error}});
        continue;
      }
      pts.push_back({btilts[i], found[i].b.ramp_time});
      bos << name << ',' << btilts[i] << ',' << found[i].b.ramp_time << ',' << found[i].b.other << ','
          << found[i].b.evaluations << '\n';
    }
    nlohmann::json entry;
    try {
      entry = scaling_json(fit_scaling_law(pts), pts);
    } catch (const std::invalid_argument& e) {
      entry = {{"error", e.what()}};
    }
    entry["missing"] = missing;
    entry["reference_C_ns"] = kind == RampKind::adiabatic ? 18.9 : 0.18;
    report[name] = entry;
  }
  out.json("init.json", report);
  return {{"C1_ns", report["adiabatic"].value("C_ns", NAN)},
          {"C2_ns", report["instantaneous"].value("C_ns", NAN)}};
}

}  // namespace

// --- bench ------------------------------------------------------------------------

nlohmann::json run_bench(Context& ctx) {
  auto& s = ctx.params;
  const bool is_scan = ctx.cfg.experiment == "quasiphase-scan";
  if (!is_scan && ctx.cfg.experiment != "solver-bench") {
    throw ConfigError("config.experiment: bench needs a quasiphase-scan or solver-bench config");
  }
  TwoToneSetup t = read_two_tone(s, "", 4);
  if (is_scan) s.flag("extract", true);
  std::vector<int> ps(t.grid.numerators.begin(), t.grid.numerators.end());
  if (s.has("numerators") || !is_scan) {
    const auto v = s.numbers("numerators", {1, 2, 4, 8});
    ps.clear();
    for (double x : v) {
      if (x < 1 || x != std::floor(x)) throw ConfigError("config.params.numerators: positive integers required");
      ps.push_back(static_cast<int>(x));
    }
  }
  t.grid.max_points = positive_int(s, "bench_points", 8, 1);
  const int repeats = positive_int(s, "repeats", 5);
  const bool adaptive = s.flag("adaptive", false);
  OutputSet& out = ctx.begin();

  ScanOptions o;
  o.integrator = ctx.cfg.integrator;
  o.workers = 1;
  // Fixed-step by default: Richardson refinement doubles the step count in jumps.
  if (!adaptive) o.integrator.estimate_error = false;
  struct Row {
    int p;
    std::size_t points;
    double seconds;
  };
  std::vector<Row> rows;
  for (int p : ps) {
    // The same target ratios for every p, so the period grows exactly with p.
    RatioGrid g = t.grid;
    g.max_points = std::max(3, g.max_points);
    std::vector<std::pair<double, double>> windows;
    const int q_lo = std::max(p + 1, static_cast<int>(std::ceil(p / g.ratio_max - 1e-12)));
    const int q_hi = static_cast<int>(std::floor(p / g.ratio_min + 1e-12));
    if (q_hi < q_lo) continue;
    for (double r : linspace(g.ratio_min, g.ratio_max, t.grid.max_points)) {
      const int q = std::clamp(static_cast<int>(std::lround(p / r)), q_lo, q_hi);
      const double rq = static_cast<double>(p) / q;
      if (!windows.empty() && windows.back().first == rq) continue;
      windows.emplace_back(rq, rq);
    }
    if (windows.empty()) continue;
    o.windows = windows;
    auto timed = [&](int calls) {
      const auto t0 = std::chrono::steady_clock::now();
      std::size_t n = 0;
      for (int k = 0; k < calls; ++k) n = quasiphase_spectrum(t.builder(), g, p, o).points.size();
      return std::pair(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / calls, n);
    };
    // Each repeat lasts at least ~20 ms; the minimum over repeats is kept.
    auto [best, n] = timed(1);
    const int calls = static_cast<int>(std::clamp(std::ceil(0.02 / std::max(best, 1e-9)), 1.0, 1000.0));
    for (int rep = 0; rep < repeats; ++rep) best = std::min(best, timed(calls).first);
    if (n > 0) rows.push_back({p, n, best});
  }
  nlohmann::json jrows = nlohmann::json::array();
  {
    auto os = out.csv("bench.csv");
    os << "p,points,total_s,per_point_s\n" << std::setprecision(6);
    for (const auto& r : rows) {
      os << r.p << ',' << r.points << ',' << r.seconds << ',' << r.seconds / r.points << '\n';
      jrows.push_back({{"p", r.p}, {"points", r.points}, {"total_s", r.seconds}, {"per_point_s", r.seconds / r.points}});
    }
  }
  // Per-point cost growth for every doubled numerator present.
  nlohmann::json growth = nlohmann::json::array();
  bool ok = true;
  std::map<int, double> per;
  for (const auto& r : rows) per[r.p] = r.seconds / r.points;
  for (const auto& [p, c] : per) {
    const auto it = per.find(2 * p);
    if (it == per.end()) continue;
    const double ratio = it->second / c;
    ok = ok && ratio <= 2.5;
    growth.push_back({{"p", p}, {"p_doubled", 2 * p}, {"ratio", ratio}});
  }
  out.json("bench.json", {{"rows", jrows}, {"doubling", growth}, {"limit", 2.5}, {"within_limit", ok}});
  return {{"rows", rows.size()}, {"doubling", growth}, {"within_limit", ok}};
}

nlohmann::json run_experiment(Context& ctx) {
  const std::string& e = ctx.cfg.experiment;
  if (ctx.bench) return run_bench(ctx);
  if (e == "xgate") return xgate(ctx);
  if (e == "quasiphase-scan") return quasiphase_scan(ctx);
  if (e == "readout-two-body") return readout_two_body(ctx);
  if (e == "readout-circuit") return readout_circuit(ctx);
  if (e == "init-map") return init_map(ctx);
  if (e == "solver-bench") return run_bench(ctx);
  throw ConfigError("config.experiment: unknown experiment '" + e +
                    "' (xgate, quasiphase-scan, readout-two-body, readout-circuit, init-map, solver-bench)");
}

}  // namespace fqk::cli
