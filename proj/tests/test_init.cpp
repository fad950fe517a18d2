#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "fqk/init.hpp"

using namespace fqk;

namespace {

double score(RampKind kind, double tilt, double t, cplx alpha = 1.0, cplx beta = 0.0) {
  RampProtocol p;
  p.kind = kind;
  p.tilt = tilt;
  p.ramp_time = t;
  p.alpha = alpha;
  p.beta = beta;
  return prepare_and_score(p, InitSystem{});
}

}  // namespace

TEST_CASE("boundary search on synthetic fidelity curves") {
  auto rising = [](double t) { return 1.0 - 1.0 / t; };
  const auto b = find_boundary(rising, 0.99, true, {1.0, 3000.0, 1.0, 0.01});
  CHECK(b.ramp_time >= 100.0);
  CHECK(b.other < 100.0);
  CHECK(b.ramp_time - b.other <= 1.0);
  CHECK(b.f_low == doctest::Approx(0.0));

  const double crossing = 50.0 * std::log(1.0 / 0.9);
  auto falling = [](double t) { return std::exp(-t / 50.0); };
  const auto d = find_boundary(falling, 0.9, false, {0.01, 3000.0, 1.0, 0.01});
  CHECK(d.ramp_time <= crossing);
  CHECK(d.other > crossing);
  CHECK(d.other - d.ramp_time <= 0.01 * d.ramp_time + 1e-12);
}

TEST_CASE("boundary search reports endpoints when nothing crosses") {
  auto flat = [](double) { return 0.5; };
  try {
    find_boundary(flat, 0.99, true);
    FAIL("expected BoundaryNotFound");
  } catch (const BoundaryNotFound& e) {
    CHECK(e.f_low() == 0.5);
    CHECK(e.f_high() == 0.5);
  }
  // Crossing in the wrong direction is not a boundary either.
  auto falling = [](double t) { return 1.0 / (1.0 + t); };
  CHECK_THROWS_AS(find_boundary(falling, 0.5, true, {0.01, 100.0}), BoundaryNotFound);
  CHECK_THROWS_AS(find_boundary(falling, 0.5, true, {10.0, 1.0}), std::invalid_argument);
}

TEST_CASE("scaling law fit") {
  std::vector<ScalingPoint> pts;
  for (double tilt : {0.02, 0.05, 0.1, 0.2, 0.3}) pts.push_back({tilt, 18.9 / tilt});
  const auto fit = fit_scaling_law(pts);
  CHECK(std::abs(fit.C - 18.9) < 1e-6);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(fit.rms < 1e-12);
  CHECK_FALSE(fit.poor_fit);

  // Negative tilts enter through |tilt|.
  std::vector<ScalingPoint> neg = pts;
  for (auto& p : neg) p.tilt = -p.tilt;
  CHECK(fit_scaling_law(neg).C == doctest::Approx(18.9));

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> jitter(0.3, 3.0);
  std::vector<ScalingPoint> noisy;
  for (double tilt : {0.02, 0.05, 0.1, 0.2, 0.3}) noisy.push_back({tilt, jitter(rng) / tilt});
  CHECK(fit_scaling_law(noisy).poor_fit);

  CHECK_THROWS_AS(fit_scaling_law({pts.begin(), pts.begin() + 3}), std::invalid_argument);
  std::vector<ScalingPoint> narrow;
  for (double tilt : {0.1, 0.15, 0.2, 0.3}) narrow.push_back({tilt, 1.0 / tilt});
  CHECK_THROWS_AS(fit_scaling_law(narrow), std::invalid_argument);
}

TEST_CASE("protocol validation") {
  RampProtocol p;
  p.alpha = 1.0;
  p.beta = 0.5;
  CHECK_THROWS_AS(prepare_and_score(p, {}), std::invalid_argument);
  p.beta = 0.0;
  p.ramp_time = 0.0;
  CHECK_THROWS_AS(prepare_and_score(p, {}), std::invalid_argument);
  CHECK(ramp_kind_from_string(to_string(RampKind::instantaneous)) == RampKind::instantaneous);
  CHECK_THROWS_AS(ramp_kind_from_string("slow"), std::invalid_argument);
}

TEST_CASE("sudden limit of the instantaneous protocol") {
  for (double tilt : {0.01, 0.1, 0.5}) {
    CHECK(score(RampKind::instantaneous, tilt, 1e-3) > 0.9999);
  }
  for (double tilt : {0.01, 0.02, 0.05}) {
    CHECK(score(RampKind::instantaneous, tilt, 1.0) >= 0.999);
  }
  const double s = M_SQRT1_2;
  CHECK(score(RampKind::instantaneous, 0.05, 1e-3, s, cplx(0, s)) > 0.9999);
}

TEST_CASE("adiabatic protocol limits") {
  // Far below the boundary near resonance.
  CHECK(score(RampKind::adiabatic, 0.01, 100.0) < 0.99);
  // Deep adiabatic: ten times the expected boundary.
  CHECK(score(RampKind::adiabatic, 0.1, 10.0 * 18.9 / 0.1) >= 0.9999);
}

TEST_CASE("adiabatic fidelity rises past the boundary") {
  std::vector<double> f;
  for (double t = 100.0; t <= 1000.0; t += 100.0) f.push_back(score(RampKind::adiabatic, 0.1, t));
  std::vector<double> smooth;
  for (std::size_t k = 1; k + 1 < f.size(); ++k) smooth.push_back((f[k - 1] + f[k] + f[k + 1]) / 3);
  for (std::size_t k = 1; k < smooth.size(); ++k) CHECK(smooth[k] >= smooth[k - 1] - 1e-6);
  for (double x : f) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0 + 1e-9);
  }
}

TEST_CASE("fidelity map matches direct evaluation") {
  const std::vector<double> tilts{0.05, 0.2}, times{0.5, 5.0, 20.0};
  const auto m = fidelity_map(RampKind::instantaneous, tilts, times, InitSystem{}, 2);
  REQUIRE(m.F.size() == 6);
  for (std::size_t i = 0; i < tilts.size(); ++i) {
    for (std::size_t j = 0; j < times.size(); ++j) {
      CHECK(m.at(i, j) == doctest::Approx(score(RampKind::instantaneous, tilts[i], times[j])).epsilon(1e-12));
      CHECK(m.at(i, j) <= 1.0 + 1e-9);
    }
  }
  std::ostringstream os;
  write_fidelity_csv(os, m);
  const std::string s = os.str();
  CHECK(s.rfind("tilt,T_ramp_ns,F\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 7);
}
