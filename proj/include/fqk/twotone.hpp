#pragma once

// Quasiphase spectra over commensurate ratios omega_d2 / omega_d1 = p / q and
// anticrossing extraction by intersecting minima across numerators.

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "fqk/propagator.hpp"

namespace fqk {

struct RatioGrid {
  double omega_d1 = 0.0;
  std::vector<int> numerators;
  double ratio_min = 0.01;
  double ratio_max = 0.2;
  int max_points = 200;

  void validate() const;
  /// q in [ceil(p / ratio_max), floor(p / ratio_min)], ascending; strided so
  /// that at most max_points remain.
  std::vector<int> denominators(int p) const;
  std::vector<int> denominators(int p, double rmin, double rmax) const;
  double omega_d2(int p, int q) const { return omega_d1 * p / q; }
  double omega_gcd(int q) const { return omega_d1 / q; }
};

struct QuasiphasePoint {
  int q = 0;
  double ratio = 0.0;     // omega_d2 / omega_d1
  double omega_d2 = 0.0;  // rad/ns
  double theta[2] = {0.0, 0.0};  // quasiphases in [-pi, pi)
  double phi[2] = {0.0, 0.0};    // folded to [-pi/2, pi/2]
  bool ok = true;
  std::string error;

  double difference() const { return std::abs(phi[0] - phi[1]); }
};

struct QuasiphaseSpectrum {
  int p = 0;
  int q_stride = 1;
  double omega_d1 = 0.0;
  IntegratorConfig integrator;
  std::vector<QuasiphasePoint> points;  // ascending omega_d2

  double common_period(const QuasiphasePoint& pt) const { return kTwoPi * pt.q / omega_d1; }
  /// True when points i and i+1 are grid neighbours (adjacent q, both valid).
  bool adjacent(std::size_t i) const;
};

/// theta -> theta if |theta| <= pi/2, else theta - sign(theta) pi.
double fold_quasiphase(double theta);

using TwoToneBuilder = std::function<DrivenHamiltonian(double omega_d2)>;

struct ScanOptions {
  IntegratorConfig integrator;
  std::size_t workers = 1;
  // Optional ratio windows; empty means the grid's full window.
  std::vector<std::pair<double, double>> windows;
  // Labels: quasiphase 0 belongs to the eigenvector with the largest overlap
  // with |0> of the computational basis.
};

QuasiphaseSpectrum quasiphase_spectrum(const TwoToneBuilder& build, const RatioGrid& grid, int p,
                                       const ScanOptions& opts = {});

struct Triplet {
  int p = 0;
  int q = 0;               // anchor
  double ratio_low = 0.0;  // neighbour ratios bounding the triplet
  double ratio_mid = 0.0;
  double ratio_high = 0.0;
  double value = 0.0;      // difference at the anchor
  double run_low = 0.0;    // running intersection with its ancestry
  double run_high = 0.0;
  int parent = -1;         // index into the previous audit entry's survivors
};

struct AuditEntry {
  int p = 0;
  std::vector<Triplet> found;
  std::vector<Triplet> survivors;
  bool skipped = false;
  std::string note;
};

struct PrecisionBound {
  double exact = 0.0;   // p/(q-1) - p/(q+1)
  double approx = 0.0;  // 2p/q^2
};
PrecisionBound precision_bound(int p_max, int q_max);

struct AnticrossingResult {
  double ratio_low = 0.0;
  double ratio_high = 0.0;
  double omega_d1 = 0.0;
  int p_max = 0;
  int q_max = 0;  // anchor denominator of the primary survivor at p_max
  PrecisionBound bound;
  bool ambiguous = false;
  std::vector<std::pair<double, double>> candidates;  // all surviving running intervals
  std::vector<AuditEntry> audit;

  double ratio_center() const { return 0.5 * (ratio_low + ratio_high); }
  double width() const { return ratio_high - ratio_low; }
  double omega_low() const { return omega_d1 * ratio_low; }
  double omega_high() const { return omega_d1 * ratio_high; }
  double omega_center() const { return omega_d1 * ratio_center(); }
};

class AnticrossingNotFound : public std::runtime_error {
 public:
  AnticrossingNotFound(const std::string& what, std::vector<AuditEntry> audit)
      : std::runtime_error(what), audit_(std::move(audit)) {}
  const std::vector<AuditEntry>& audit() const { return audit_; }

 private:
  std::vector<AuditEntry> audit_;
};

/// All triplets with d[i-1] >= d[i] <= d[i+1]; runs of equal values collapse
/// to one triplet anchored at the middle of the run.
std::vector<Triplet> find_triplets(const QuasiphaseSpectrum& s);

AnticrossingResult extract_anticrossing(const std::vector<QuasiphaseSpectrum>& spectra);

struct ProgressiveScan {
  std::vector<QuasiphaseSpectrum> spectra;
  AnticrossingResult result;
};

/// Scans numerators in order; the first `full_numerators` use the whole
/// window, later ones only padded neighbourhoods of the current survivors.
ProgressiveScan scan_and_extract(const TwoToneBuilder& build, const RatioGrid& grid,
                                 const ScanOptions& opts, int full_numerators = 4);

/// Two-level fit of the p_max spectrum near the extracted minimum with
/// d = 2 |fold(T s / 2)|, s = sqrt((Omega - w2)^2 + G0^2), T = 2 pi p / w2.
struct ResonanceFit {
  double omega = 0.0;  // resonance Omega, rad/ns
  double g0 = 0.0;     // minimum splitting, rad/ns
  double rms = 0.0;
  int points = 0;
};
ResonanceFit refine_anticrossing(const QuasiphaseSpectrum& s, const AnticrossingResult& r);

void write_spectrum_csv(std::ostream& os, const QuasiphaseSpectrum& s);
nlohmann::json anticrossing_json(const AnticrossingResult& r);

}  // namespace fqk
