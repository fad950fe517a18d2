#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "fqk/floquet.hpp"
#include "fqk/twotone.hpp"

using namespace fqk;

namespace {

const double kW0 = angular(5.02), kE1 = angular(0.21), kW1 = angular(5.0);

TwoToneBuilder qubit_builder(double eps_d2) {
  return [eps_d2](double w2) { return build_tls_two_tone(kW0, kE1, kW1, eps_d2, w2); };
}

double wrap(double x) { return std::remainder(x, kTwoPi); }

// Synthetic difference d(r) for numerator p: a genuine avoided crossing at
// r_true with gap `gap`, and fold-type zeros at positions that move with p.
QuasiphaseSpectrum synthetic(int p, double r_true, double gap, const std::vector<double>& spurious,
                             double drift, double rmin = 0.03, double rmax = 0.2) {
  QuasiphaseSpectrum s;
  s.p = p;
  s.omega_d1 = 1.0;
  const int q_lo = static_cast<int>(std::ceil(p / rmax));
  const int q_hi = static_cast<int>(std::floor(p / rmin));
  for (int q = q_hi; q >= q_lo; --q) {
    QuasiphasePoint pt;
    pt.q = q;
    pt.ratio = static_cast<double>(p) / q;
    pt.omega_d2 = pt.ratio;
    const double x = (pt.ratio - r_true) * 40.0 * p;
    double d = std::min(1.5, std::sqrt(x * x + gap * gap));
    for (double rs : spurious) d = std::min(d, 30.0 * p * std::abs(pt.ratio - (rs + drift * p)));
    pt.phi[0] = d / 2;
    pt.phi[1] = -d / 2;
    s.points.push_back(pt);
  }
  return s;
}

}  // namespace

TEST_CASE("fold_quasiphase") {
  CHECK(fold_quasiphase(kPi / 4) == doctest::Approx(kPi / 4));
  CHECK(fold_quasiphase(3 * kPi / 4) == doctest::Approx(-kPi / 4));
  CHECK(fold_quasiphase(-kPi) == doctest::Approx(0.0));
  CHECK(fold_quasiphase(kPi / 2) == doctest::Approx(kPi / 2));
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const double t = u(rng);
    const double f = fold_quasiphase(t);
    CHECK(fold_quasiphase(f) == f);
    CHECK(std::abs(f) <= kPi / 2);
    CHECK(std::abs(std::remainder(f - t, kPi)) < 1e-12);
  }
}

TEST_CASE("precision bound") {
  auto b = precision_bound(1, 10);
  CHECK(b.exact == doctest::Approx(2.0 / 99));
  CHECK(b.approx == doctest::Approx(0.02));
  b = precision_bound(20, 200);
  CHECK(b.exact == doctest::Approx(20.0 / 199 - 20.0 / 201));
  CHECK(b.approx == doctest::Approx(1e-3));
  b = precision_bound(100, 1000);
  CHECK(b.approx == doctest::Approx(2e-4));
  // 2e-4 of a 5 GHz drive is 1 MHz; 0.1 MHz needs p well above 100.
  CHECK(b.approx * 5000.0 == doctest::Approx(1.0));
  CHECK_THROWS(precision_bound(5, 5));
}

TEST_CASE("ratio grid") {
  RatioGrid g;
  g.omega_d1 = 1.0;
  g.numerators = {1, 2};
  g.ratio_min = 0.03;
  const auto qs = g.denominators(1);
  CHECK(qs.front() == 5);
  CHECK(qs.back() == 33);
  CHECK(qs.size() == 29);
  g.max_points = 10;
  const auto thin = g.denominators(2);
  CHECK(thin.size() <= 10);
  CHECK(g.omega_d2(3, 70) == doctest::Approx(3.0 / 70));
  CHECK(g.denominators(3, 0.5, 0.6).empty());
}

TEST_CASE("undriven second tone: quasiphases are q multiples of the single-tone ones") {
  RatioGrid g;
  g.omega_d1 = kW1;
  g.numerators = {1};
  g.ratio_min = 0.05;
  g.ratio_max = 0.2;
  const auto spec = quasiphase_spectrum(qubit_builder(0.0), g, 1);
  const auto single = floquet_decompose(build_tls_driven(kW0, kE1, kW1, Envelope::constant(1.0)), kW1);
  for (const auto& pt : spec.points) {
    for (int n = 0; n < 2; ++n) {
      const double expect = fold_quasiphase(wrap(single.quasienergies[n] * single.period * pt.q));
      const double d = std::remainder(pt.phi[n] - expect, kPi);
      CHECK(std::abs(d) < 1e-7);
    }
  }
}

TEST_CASE("p = 1 matches the single-frequency decomposition at omega_GCD") {
  RatioGrid g;
  g.omega_d1 = kW1;
  g.numerators = {1};
  g.ratio_min = 0.09;
  g.ratio_max = 0.11;
  const auto spec = quasiphase_spectrum(qubit_builder(angular(0.004)), g, 1);
  REQUIRE(spec.points.size() >= 2);
  for (const auto& pt : spec.points) {
    const auto h = build_tls_two_tone(kW0, kE1, kW1, angular(0.004), pt.omega_d2);
    FloquetOptions o;
    o.samples_per_period = 1;
    o.integrator.tolerance = 1e-11;
    const auto f = floquet_decompose(h, kW1 / pt.q, o);
    std::vector<double> a{pt.theta[0], pt.theta[1]};
    std::vector<double> b{wrap(f.quasienergies[0] * f.period), wrap(f.quasienergies[1] * f.period)};
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(std::abs(wrap(a[0] - b[0])) < 1e-8);
    CHECK(std::abs(wrap(a[1] - b[1])) < 1e-8);
  }
}

TEST_CASE("two-level spectra are antisymmetric") {
  RatioGrid g;
  g.omega_d1 = kW1;
  g.numerators = {2};
  g.ratio_min = 0.035;
  g.ratio_max = 0.05;
  const auto spec = quasiphase_spectrum(qubit_builder(angular(0.004)), g, 2);
  for (const auto& pt : spec.points) {
    const double sum = pt.phi[0] + pt.phi[1];
    const double off = std::min({std::abs(sum), std::abs(sum - kPi), std::abs(sum + kPi)});
    CHECK(off < 1e-8);
    CHECK(std::abs(pt.phi[0]) <= kPi / 2);
  }
}

TEST_CASE("single synthetic minimum") {
  const double r_true = 0.0613;
  std::vector<QuasiphaseSpectrum> specs;
  for (int p = 1; p <= 5; ++p) specs.push_back(synthetic(p, r_true, 0.05, {}, 0.0));
  const auto r = extract_anticrossing(specs);
  CHECK_FALSE(r.ambiguous);
  CHECK(r.ratio_low <= r_true);
  CHECK(r.ratio_high >= r_true);
  CHECK(r.width() <= r.bound.exact + 1e-15);
  CHECK(r.p_max == 5);
}

TEST_CASE("fold minimum at p = 1 is discarded at p = 2") {
  // Fold zero at 0.05 for p = 1 and 0.06 for p = 2: grid intervals disjoint.
  const double r_true = 0.12;
  std::vector<QuasiphaseSpectrum> specs;
  for (int p = 1; p <= 2; ++p) specs.push_back(synthetic(p, r_true, 0.05, {0.04}, 0.01));
  const auto r = extract_anticrossing(specs);
  REQUIRE(r.audit.size() == 2);
  CHECK(r.audit[0].survivors.size() == 2);
  CHECK(r.audit[1].found.size() == 2);
  CHECK(r.audit[1].survivors.size() == 1);
  CHECK(r.ratio_low <= r_true);
  CHECK(r.ratio_high >= r_true);
  CHECK_FALSE(r.ambiguous);
  const auto js = anticrossing_json(r);
  CHECK(js["audit"][1]["note"].get<std::string>() == "1 of 2 triplets discarded");
}

TEST_CASE("extraction soundness on random synthetic families") {
  std::mt19937 rng(20240611);
  // Below ratio 0.12 the p = 1 triplet intervals are narrower than the drift,
  // so fold zeros cannot chain from one numerator to the next.
  std::uniform_real_distribution<double> pos(0.045, 0.12), gap(0.01, 0.3), drift(0.035, 0.06);
  std::uniform_int_distribution<int> nspur(0, 3), pmax(3, 6);
  int total_spurious = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double r_true = pos(rng);
    const double dr = drift(rng);
    const double g = gap(rng);
    const int n = pmax(rng);
    // Fold zeros sweep with p but never pass within 0.05 (a few p = 1 grid
    // pitches) of the true minimum.
    std::vector<double> spur;
    int placed = 0;
    for (int k = nspur(rng), attempts = 0; k > 0 && attempts < 1000; ++attempts) {
      const double rs = pos(rng);
      bool clear = true;
      for (int p = 1; p <= n; ++p) clear = clear && std::abs(rs + dr * p - r_true) > 0.05;
      if (!clear) continue;
      spur.push_back(rs);
      --k;
      ++placed;
    }
    total_spurious += placed;
    std::vector<QuasiphaseSpectrum> specs;
    for (int p = 1; p <= n; ++p) specs.push_back(synthetic(p, r_true, g, spur, dr));
    const auto r = extract_anticrossing(specs);
    CHECK(r.ratio_low <= r_true);
    CHECK(r.ratio_high >= r_true);
  }
  CHECK(total_spurious > 50);
}

TEST_CASE("empty intersection and skipped numerators") {
  std::vector<QuasiphaseSpectrum> specs{synthetic(1, 0.05, 0.05, {}, 0.0), synthetic(2, 0.15, 0.05, {}, 0.0)};
  try {
    extract_anticrossing(specs);
    FAIL("expected AnticrossingNotFound");
  } catch (const AnticrossingNotFound& e) {
    REQUIRE(e.audit().size() == 2);
    CHECK(e.audit()[0].survivors.size() == 1);
    CHECK(e.audit()[1].survivors.empty());
  }

  // A monotone spectrum has no triplets and is skipped.
  auto mono = synthetic(2, 0.05, 0.05, {}, 0.0);
  for (std::size_t i = 0; i < mono.points.size(); ++i) {
    mono.points[i].phi[0] = 0.01 * static_cast<double>(i);
    mono.points[i].phi[1] = 0.0;
  }
  specs = {synthetic(1, 0.07, 0.05, {}, 0.0), mono, synthetic(3, 0.07, 0.05, {}, 0.0)};
  const auto r = extract_anticrossing(specs);
  CHECK(r.audit[1].skipped);
  CHECK(r.audit[1].survivors.size() == 1);
  CHECK(r.p_max == 3);
  CHECK(r.ratio_low <= 0.07);
  CHECK(r.ratio_high >= 0.07);

  CHECK_THROWS_AS(extract_anticrossing({specs[0]}), std::invalid_argument);
}

TEST_CASE("plateau ties collapse to one triplet at the middle") {
  QuasiphaseSpectrum s;
  s.p = 1;
  const std::vector<double> d{0.9, 0.5, 0.2, 0.2, 0.2, 0.4, 0.8};
  for (std::size_t i = 0; i < d.size(); ++i) {
    QuasiphasePoint pt;
    pt.q = 40 - static_cast<int>(i);
    pt.ratio = 1.0 / pt.q;
    pt.phi[0] = d[i] / 2;
    pt.phi[1] = -d[i] / 2;
    s.points.push_back(pt);
  }
  const auto t = find_triplets(s);
  REQUIRE(t.size() == 1);
  CHECK(t[0].q == 40 - 3);
  CHECK(t[0].ratio_low == doctest::Approx(1.0 / 39));
  CHECK(t[0].ratio_high == doctest::Approx(1.0 / 35));

  // A failed point splits the segment.
  s.points[3].ok = false;
  CHECK(find_triplets(s).empty());
}

TEST_CASE("resonance fit recovers model parameters") {
  const double omega = 0.2111 * kTwoPi, g0 = 0.004 * kTwoPi;
  const int p = 9;
  QuasiphaseSpectrum s;
  s.p = p;
  s.omega_d1 = kW1;
  for (int q = 230; q >= 200; --q) {
    QuasiphasePoint pt;
    pt.q = q;
    pt.ratio = static_cast<double>(p) / q;
    pt.omega_d2 = kW1 * pt.ratio;
    const double T = kTwoPi * p / pt.omega_d2;
    const double sdr = std::sqrt((omega - pt.omega_d2) * (omega - pt.omega_d2) + g0 * g0);
    const double half = fold_quasiphase(std::remainder(T * sdr / 2, kTwoPi));
    pt.phi[0] = half;
    pt.phi[1] = -half;
    s.points.push_back(pt);
  }
  std::vector<QuasiphaseSpectrum> specs{synthetic(1, omega / kW1, 0.05, {}, 0.0), s};
  specs[0].omega_d1 = kW1;
  const auto r = extract_anticrossing(specs);
  const auto fit = refine_anticrossing(s, r);
  CHECK(fit.omega == doctest::Approx(omega).epsilon(1e-9));
  CHECK(fit.g0 == doctest::Approx(g0).epsilon(1e-7));
  CHECK(fit.rms < 1e-10);
}

TEST_CASE("windowed progressive scan agrees with full scans") {
  RatioGrid g;
  g.omega_d1 = kW1;
  g.numerators = {1, 2, 3, 4, 5};
  g.ratio_min = 0.035;
  g.ratio_max = 0.06;
  ScanOptions o;
  o.workers = 2;
  const auto prog = scan_and_extract(qubit_builder(angular(0.004)), g, o, 2);
  std::vector<QuasiphaseSpectrum> full;
  for (int p : g.numerators) full.push_back(quasiphase_spectrum(qubit_builder(angular(0.004)), g, p));
  const auto ref = extract_anticrossing(full);
  CHECK(prog.result.ratio_low == ref.ratio_low);
  CHECK(prog.result.ratio_high == ref.ratio_high);
  CHECK(prog.spectra.back().points.size() < full.back().points.size());
  // Interval widths never grow with p.
  double last = 1.0;
  for (const auto& e : ref.audit) {
    REQUIRE(e.survivors.size() == 1);
    const double w = e.survivors[0].run_high - e.survivors[0].run_low;
    CHECK(w <= last);
    last = w;
  }
  std::ostringstream os;
  write_spectrum_csv(os, full[0]);
  CHECK(os.str().rfind("p,q,omega_d2_over_omega_d1,phiF_0,phiF_1\n", 0) == 0);
}
