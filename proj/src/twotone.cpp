#include "fqk/twotone.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fqk/parallel.hpp"

namespace fqk {

void RatioGrid::validate() const {
  if (!(omega_d1 > 0.0)) throw std::invalid_argument("RatioGrid: omega_d1 must be positive");
  if (numerators.empty()) throw std::invalid_argument("RatioGrid: no numerators");
  for (int p : numerators) {
    if (p < 1) throw std::invalid_argument("RatioGrid: numerators must be >= 1");
  }
  if (!(ratio_min > 0.0 && ratio_max > ratio_min)) {
    throw std::invalid_argument("RatioGrid: need 0 < ratio_min < ratio_max");
  }
  if (max_points < 3) throw std::invalid_argument("RatioGrid: max_points must be >= 3");
}

std::vector<int> RatioGrid::denominators(int p) const {
  return denominators(p, ratio_min, ratio_max);
}

std::vector<int> RatioGrid::denominators(int p, double rmin, double rmax) const {
  rmin = std::max(rmin, ratio_min);
  rmax = std::min(rmax, ratio_max);
  std::vector<int> qs;
  if (!(rmax >= rmin)) return qs;
  const int q_lo = std::max(p + 1, static_cast<int>(std::ceil(p / rmax - 1e-12)));
  const int q_hi = static_cast<int>(std::floor(p / rmin + 1e-12));
  if (q_hi < q_lo) return qs;
  const int count = q_hi - q_lo + 1;
  const int stride = (count + max_points - 1) / max_points;
  for (int q = q_lo; q <= q_hi; q += stride) qs.push_back(q);
  return qs;
}

bool QuasiphaseSpectrum::adjacent(std::size_t i) const {
  if (i + 1 >= points.size()) return false;
  return points[i].ok && points[i + 1].ok && points[i].q - points[i + 1].q == q_stride;
}

double fold_quasiphase(double theta) {
  if (std::abs(theta) <= kPi / 2) return theta;
  return theta - std::copysign(kPi, theta);
}

namespace {

QuasiphasePoint scan_point(const TwoToneBuilder& build, const RatioGrid& grid, int p, int q,
                           const IntegratorConfig& cfg) {
  QuasiphasePoint pt;
  pt.q = q;
  pt.ratio = static_cast<double>(p) / q;
  pt.omega_d2 = grid.omega_d2(p, q);
  try {
    const DrivenHamiltonian h = build(pt.omega_d2);
    if (h.dim() != 2) throw DimensionError("quasiphase_spectrum: two-level Hamiltonian required");
    const double period = kTwoPi * q / grid.omega_d1;
    const Matrix u = propagate(h, 0.0, period, cfg).U.matrix();
    Eigen::ComplexSchur<Matrix> schur(u);
    const Matrix& v = schur.matrixU();
    // Quasiphase 0 goes with the eigenvector closer to |0>.
    const int first = std::norm(v(0, 0)) >= std::norm(v(0, 1)) ? 0 : 1;
    for (int n = 0; n < 2; ++n) {
      const int k = n == 0 ? first : 1 - first;
      double th = -std::arg(schur.matrixT()(k, k));
      if (th >= kPi) th -= kTwoPi;
      pt.theta[n] = th;
      pt.phi[n] = fold_quasiphase(th);
    }
  } catch (const ConvergenceError& e) {
    pt.ok = false;
    pt.error = e.what();
  }
  return pt;
}

bool intersects(double a0, double a1, double b0, double b1) { return a0 <= b1 && b0 <= a1; }

}  // namespace

QuasiphaseSpectrum quasiphase_spectrum(const TwoToneBuilder& build, const RatioGrid& grid, int p,
                                       const ScanOptions& opts) {
  grid.validate();
  opts.integrator.validate();
  QuasiphaseSpectrum spec;
  spec.p = p;
  spec.omega_d1 = grid.omega_d1;
  spec.integrator = opts.integrator;

  std::vector<int> qs;
  if (opts.windows.empty()) {
    qs = grid.denominators(p);
    if (qs.size() >= 2) spec.q_stride = qs[1] - qs[0];
  } else {
    RatioGrid fine = grid;
    fine.max_points = 1 << 30;
    for (const auto& [lo, hi] : opts.windows) {
      const auto part = fine.denominators(p, lo, hi);
      qs.insert(qs.end(), part.begin(), part.end());
    }
    std::sort(qs.begin(), qs.end());
    qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
  }
  // Ascending omega_d2 means descending q.
  std::reverse(qs.begin(), qs.end());
  spec.points = parallel_map(qs.size(), opts.workers, [&](std::size_t i) {
    return scan_point(build, grid, p, qs[i], opts.integrator);
  });
  return spec;
}

std::vector<Triplet> find_triplets(const QuasiphaseSpectrum& s) {
  std::vector<Triplet> out;
  const auto& pts = s.points;
  std::size_t start = 0;
  while (start < pts.size()) {
    if (!pts[start].ok) {
      ++start;
      continue;
    }
    std::size_t end = start;
    while (s.adjacent(end)) ++end;
    // Contiguous segment [start, end].
    std::size_t i = start + 1;
    while (i + 1 <= end) {
      const double v = pts[i].difference();
      std::size_t j = i;
      while (j + 1 <= end && pts[j + 1].difference() == v) ++j;
      if (j + 1 <= end && pts[i - 1].difference() >= v && pts[j + 1].difference() >= v) {
        const std::size_t mid = (i + j) / 2;
        Triplet t;
        t.p = s.p;
        t.q = pts[mid].q;
        t.ratio_low = pts[i - 1].ratio;
        t.ratio_mid = pts[mid].ratio;
        t.ratio_high = pts[j + 1].ratio;
        t.value = v;
        t.run_low = t.ratio_low;
        t.run_high = t.ratio_high;
        out.push_back(t);
      }
      i = j + 1;
    }
    start = end + 1;
  }
  return out;
}

PrecisionBound precision_bound(int p_max, int q_max) {
  if (p_max < 1 || q_max <= p_max) {
    throw std::invalid_argument("precision_bound: need q_max > p_max >= 1");
  }
  const double p = p_max, q = q_max;
  return {p / (q - 1.0) - p / (q + 1.0), 2.0 * p / (q * q)};
}

AnticrossingResult extract_anticrossing(const std::vector<QuasiphaseSpectrum>& spectra) {
  if (spectra.size() < 2) throw std::invalid_argument("extract_anticrossing: need >= 2 numerators");
  for (std::size_t k = 1; k < spectra.size(); ++k) {
    if (spectra[k].p <= spectra[k - 1].p) {
      throw std::invalid_argument("extract_anticrossing: spectra must be ordered by p");
    }
  }
  for (const auto& s : spectra) {
    if (s.points.size() < 3) throw std::invalid_argument("extract_anticrossing: spectrum with < 3 points");
  }

  AnticrossingResult res;
  res.omega_d1 = spectra.front().omega_d1;
  const std::vector<Triplet>* prev = nullptr;

  for (const auto& s : spectra) {
    AuditEntry entry;
    entry.p = s.p;
    entry.found = find_triplets(s);
    if (entry.found.empty()) {
      entry.skipped = true;
      entry.note = "no triplets; numerator skipped";
      if (prev) entry.survivors = *prev;
      res.audit.push_back(std::move(entry));
      prev = &res.audit.back().survivors;
      continue;
    }
    if (!prev) {
      entry.survivors = entry.found;
    } else {
      for (Triplet t : entry.found) {
        int best = -1;
        double best_len = -1.0;
        for (std::size_t k = 0; k < prev->size(); ++k) {
          const auto& a = (*prev)[k];
          if (!intersects(t.ratio_low, t.ratio_high, a.run_low, a.run_high)) continue;
          const double len = std::min(t.ratio_high, a.run_high) - std::max(t.ratio_low, a.run_low);
          if (len > best_len) {
            best_len = len;
            best = static_cast<int>(k);
          }
        }
        if (best < 0) continue;
        const auto& a = (*prev)[static_cast<std::size_t>(best)];
        t.parent = best;
        t.run_low = std::max(t.ratio_low, a.run_low);
        t.run_high = std::min(t.ratio_high, a.run_high);
        entry.survivors.push_back(t);
      }
      const std::size_t dropped = entry.found.size() - entry.survivors.size();
      entry.note = std::to_string(dropped) + " of " + std::to_string(entry.found.size()) +
                   " triplets discarded";
      if (entry.survivors.empty()) {
        res.audit.push_back(std::move(entry));
        std::ostringstream os;
        os << "extract_anticrossing: empty intersection at p = " << s.p
           << " (grid too coarse or window misplaced)";
        throw AnticrossingNotFound(os.str(), res.audit);
      }
    }
    res.audit.push_back(std::move(entry));
    prev = &res.audit.back().survivors;
  }

  // Last numerator that contributed triplets.
  const AuditEntry* last = nullptr;
  for (const auto& e : res.audit) {
    if (!e.skipped) last = &e;
  }
  if (!last) throw AnticrossingNotFound("extract_anticrossing: no triplets at any numerator", res.audit);

  const auto& surv = last->survivors;
  std::size_t primary = 0;
  for (std::size_t k = 1; k < surv.size(); ++k) {
    if (surv[k].value > surv[primary].value) primary = k;
  }
  for (const auto& t : surv) res.candidates.emplace_back(t.run_low, t.run_high);
  res.ambiguous = surv.size() > 1;
  res.ratio_low = surv[primary].run_low;
  res.ratio_high = surv[primary].run_high;
  res.p_max = last->p;
  res.q_max = surv[primary].q;
  res.bound = precision_bound(res.p_max, res.q_max);
  return res;
}

ProgressiveScan scan_and_extract(const TwoToneBuilder& build, const RatioGrid& grid,
                                 const ScanOptions& opts, int full_numerators) {
  grid.validate();
  ProgressiveScan out;
  std::vector<Triplet> survivors;
  for (std::size_t k = 0; k < grid.numerators.size(); ++k) {
    const int p = grid.numerators[k];
    ScanOptions o = opts;
    o.windows.clear();
    if (static_cast<int>(k) >= full_numerators && !survivors.empty()) {
      for (const auto& t : survivors) {
        const double r = 0.5 * (t.run_low + t.run_high);
        const double pitch = r * r / p;
        const double pad = std::max(t.run_high - t.run_low, 4.0 * pitch);
        o.windows.emplace_back(t.run_low - pad, t.run_high + pad);
      }
    }
    out.spectra.push_back(quasiphase_spectrum(build, grid, p, o));
    if (out.spectra.size() >= 2) {
      out.result = extract_anticrossing(out.spectra);
      for (auto it = out.result.audit.rbegin(); it != out.result.audit.rend(); ++it) {
        survivors = it->survivors;
        break;
      }
    } else {
      survivors = find_triplets(out.spectra.back());
    }
  }
  if (out.spectra.size() < 2) {
    throw std::invalid_argument("scan_and_extract: need >= 2 numerators");
  }
  return out;
}

namespace {

double fit_model(double w2, int p, double omega, double g0) {
  const double period = kTwoPi * p / w2;
  const double s = std::sqrt((omega - w2) * (omega - w2) + g0 * g0);
  return 2.0 * std::abs(fold_quasiphase(std::remainder(period * s / 2.0, kTwoPi)));
}

}  // namespace

ResonanceFit refine_anticrossing(const QuasiphaseSpectrum& s, const AnticrossingResult& r) {
  std::size_t anchor = s.points.size();
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    if (s.points[k].q == r.q_max && s.points[k].ok) anchor = k;
  }
  if (anchor == s.points.size() || s.p != r.p_max) {
    throw std::invalid_argument("refine_anticrossing: spectrum does not contain the anchor");
  }
  // Monotone branch on each side of the anchor.
  std::size_t lo = anchor, hi = anchor;
  const std::size_t reach = 12;
  while (lo > 0 && anchor - lo < reach && s.adjacent(lo - 1) &&
         s.points[lo - 1].difference() >= s.points[lo].difference())
    --lo;
  while (hi + 1 < s.points.size() && hi - anchor < reach && s.adjacent(hi) &&
         s.points[hi + 1].difference() >= s.points[hi].difference())
    ++hi;
  const int n = static_cast<int>(hi - lo + 1);
  if (n < 4) throw std::runtime_error("refine_anticrossing: fewer than 4 points on the branch");

  const auto& a = s.points[anchor];
  double omega = a.omega_d2;
  double g0 = std::max(1e-9, a.difference() / (kTwoPi * s.p / a.omega_d2));
  auto residuals = [&](double om, double g) {
    Eigen::VectorXd res(n);
    for (int i = 0; i < n; ++i) {
      const auto& pt = s.points[lo + static_cast<std::size_t>(i)];
      res(i) = fit_model(pt.omega_d2, s.p, om, g) - pt.difference();
    }
    return res;
  };
  double lambda = 1e-3;
  Eigen::VectorXd res = residuals(omega, g0);
  for (int it = 0; it < 200; ++it) {
    const double h_om = 1e-7 * std::max(1.0, omega), h_g = 1e-7 * std::max(1e-3, g0);
    Eigen::MatrixXd jac(n, 2);
    jac.col(0) = (residuals(omega + h_om, g0) - residuals(omega - h_om, g0)) / (2 * h_om);
    jac.col(1) = (residuals(omega, g0 + h_g) - residuals(omega, g0 - h_g)) / (2 * h_g);
    Eigen::Matrix2d jtj = jac.transpose() * jac;
    const Eigen::Vector2d jtr = jac.transpose() * res;
    jtj.diagonal() *= 1.0 + lambda;
    const Eigen::Vector2d step = jtj.ldlt().solve(-jtr);
    const double om_new = omega + step(0), g_new = std::abs(g0 + step(1));
    const Eigen::VectorXd trial = residuals(om_new, g_new);
    if (trial.squaredNorm() < res.squaredNorm()) {
      const bool done = std::abs(step(0)) < 1e-13 * std::max(1.0, omega);
      omega = om_new;
      g0 = g_new;
      res = trial;
      lambda = std::max(1e-9, lambda / 3);
      if (done) break;
    } else {
      lambda *= 4;
      if (lambda > 1e8) break;
    }
  }
  return {omega, g0, std::sqrt(res.squaredNorm() / n), n};
}

void write_spectrum_csv(std::ostream& os, const QuasiphaseSpectrum& s) {
  os << "p,q,omega_d2_over_omega_d1,phiF_0,phiF_1\n" << std::setprecision(15);
  for (const auto& pt : s.points) {
    if (!pt.ok) continue;
    os << s.p << ',' << pt.q << ',' << pt.ratio << ',' << pt.phi[0] << ',' << pt.phi[1] << '\n';
  }
}

namespace {

nlohmann::json triplet_json(const Triplet& t) {
  return {{"p", t.p},
          {"q", t.q},
          {"ratio_low", t.ratio_low},
          {"ratio_mid", t.ratio_mid},
          {"ratio_high", t.ratio_high},
          {"value", t.value},
          {"running_low", t.run_low},
          {"running_high", t.run_high},
          {"parent", t.parent}};
}

}  // namespace

nlohmann::json anticrossing_json(const AnticrossingResult& r) {
  nlohmann::json audit = nlohmann::json::array();
  for (const auto& e : r.audit) {
    nlohmann::json found = nlohmann::json::array(), surv = nlohmann::json::array();
    for (const auto& t : e.found) found.push_back(triplet_json(t));
    for (const auto& t : e.survivors) surv.push_back(triplet_json(t));
    audit.push_back({{"p", e.p}, {"skipped", e.skipped}, {"note", e.note}, {"found", found},
                     {"survivors", surv}});
  }
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& [lo, hi] : r.candidates) cands.push_back({lo, hi});
  return {{"ratio_low", r.ratio_low},
          {"ratio_high", r.ratio_high},
          {"ratio_center", r.ratio_center()},
          {"omega_d2_center_ghz", ordinary(r.omega_center())},
          {"width_ratio", r.width()},
          {"p_max", r.p_max},
          {"q_max", r.q_max},
          {"precision_bound_exact", r.bound.exact},
          {"precision_bound_approx", r.bound.approx},
          {"ambiguous", r.ambiguous},
          {"candidates", cands},
          {"audit", audit}};
}

}  // namespace fqk
