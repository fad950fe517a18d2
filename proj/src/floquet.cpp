#include "fqk/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include <Eigen/Eigenvalues>

namespace fqk {

namespace {

struct Eigenpairs {
  std::vector<double> quasienergies;
  Matrix vectors;  // columns, orthonormal
  bool degenerate = false;
};

Eigenpairs diagonalize_one_period(const Matrix& u, double period, double omega) {
  // U is normal, so its Schur form is diagonal and the Schur vectors are an
  // orthonormal eigenbasis even inside degenerate clusters.
  Eigen::ComplexSchur<Matrix> schur(u);
  const Matrix& tri = schur.matrixT();
  Eigenpairs out;
  out.vectors = schur.matrixU();
  const auto n = u.rows();
  std::vector<double> phases(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    phases[static_cast<std::size_t>(k)] = std::arg(tri(k, k));
    out.quasienergies.push_back(fold_quasienergy(-std::arg(tri(k, k)) / period, omega));
  }
  for (std::size_t i = 0; i < phases.size(); ++i) {
    for (std::size_t j = i + 1; j < phases.size(); ++j) {
      double d = std::abs(phases[i] - phases[j]);
      d = std::min(d, kTwoPi - d);
      if (d < 1e-10) out.degenerate = true;
    }
  }
  return out;
}

// Greedy assignment: repeatedly take the largest remaining overlap. Modes not
// claimed by a reference are appended by ascending quasienergy.
std::vector<std::size_t> label_by_overlap(const Matrix& refs, const Eigenpairs& ep) {
  const auto n = ep.vectors.cols();
  const auto r = std::min<Eigen::Index>(refs.cols(), n);
  const Eigen::MatrixXd overlap = (refs.leftCols(r).adjoint() * ep.vectors).cwiseAbs2();
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::vector<bool> ref_used(static_cast<std::size_t>(r), false), mode_used(static_cast<std::size_t>(n), false);
  // Candidate pairs sorted by overlap, ties by ascending quasienergy.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < n; ++j) pairs.emplace_back(i, j);
  std::stable_sort(pairs.begin(), pairs.end(), [&](const auto& a, const auto& b) {
    const double oa = overlap(a.first, a.second), ob = overlap(b.first, b.second);
    if (oa != ob) return oa > ob;
    return ep.quasienergies[static_cast<std::size_t>(a.second)] <
           ep.quasienergies[static_cast<std::size_t>(b.second)];
  });
  for (const auto& [i, j] : pairs) {
    const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
    if (ref_used[ui] || mode_used[uj]) continue;
    ref_used[ui] = mode_used[uj] = true;
    order[ui] = uj;
  }
  std::vector<std::size_t> rest;
  for (std::size_t j = 0; j < mode_used.size(); ++j)
    if (!mode_used[j]) rest.push_back(j);
  std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
    return ep.quasienergies[a] < ep.quasienergies[b];
  });
  std::copy(rest.begin(), rest.end(), order.begin() + r);
  return order;
}

Matrix default_reference(const DrivenHamiltonian& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.static_part().matrix());
  const auto n = es.eigenvectors().cols();
  std::vector<Eigen::Index> dominant(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    es.eigenvectors().col(k).cwiseAbs().maxCoeff(&dominant[static_cast<std::size_t>(k)]);
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return dominant[static_cast<std::size_t>(a)] < dominant[static_cast<std::size_t>(b)];
  });
  Matrix ref(n, n);
  for (Eigen::Index k = 0; k < n; ++k) ref.col(k) = es.eigenvectors().col(idx[static_cast<std::size_t>(k)]);
  return ref;
}

void fix_phase(Eigen::Ref<Vector> v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  v *= std::polar(1.0, -std::arg(v(k)));
}

struct Labeled {
  std::vector<double> quasienergies;
  Matrix vectors;
  bool degenerate = false;
};

Labeled labeled_eigenpairs(const Matrix& u, double period, double omega, const Matrix& refs) {
  const Eigenpairs ep = diagonalize_one_period(u, period, omega);
  const auto order = label_by_overlap(refs, ep);
  Labeled out;
  out.degenerate = ep.degenerate;
  out.vectors.resize(u.rows(), u.cols());
  for (std::size_t n = 0; n < order.size(); ++n) {
    out.quasienergies.push_back(ep.quasienergies[order[n]]);
    out.vectors.col(static_cast<Eigen::Index>(n)) = ep.vectors.col(static_cast<Eigen::Index>(order[n]));
    fix_phase(out.vectors.col(static_cast<Eigen::Index>(n)));
  }
  return out;
}

}  // namespace

double fold_quasienergy(double x, double omega) {
  double y = std::fmod(x + omega / 2.0, omega);
  if (y < 0.0) y += omega;
  if (y >= omega) y -= omega;
  return y - omega / 2.0;
}

double quasienergy_gap(const FloquetSolution& s, std::size_t i, std::size_t j) {
  double d = std::fmod(std::abs(s.quasienergies.at(i) - s.quasienergies.at(j)), s.omega);
  return std::min(d, s.omega - d);
}

std::size_t FloquetSolution::nearest_sample(double t) const {
  double rel = std::fmod(t - t0, period);
  if (rel < 0.0) rel += period;
  const double dt = period / static_cast<double>(sample_times.size());
  auto k = static_cast<std::size_t>(std::llround(rel / dt));
  return k % sample_times.size();
}

FloquetSolution floquet_decompose(const DrivenHamiltonian& h, double omega,
                                  const FloquetOptions& opts) {
  if (!(omega > 0.0)) throw std::invalid_argument("floquet_decompose: omega must be positive");
  if (!h.has_constant_envelopes()) {
    throw std::invalid_argument("floquet_decompose: envelopes must be constant");
  }
  for (const auto& tone : h.tones()) {
    const double m = tone.frequency / omega;
    if (std::abs(m - std::round(m)) > 1e-9 * std::max(1.0, m)) {
      throw std::invalid_argument("floquet_decompose: tone frequency is not a multiple of omega");
    }
  }
  if (opts.samples_per_period < 1) {
    throw std::invalid_argument("floquet_decompose: samples_per_period must be >= 1");
  }
  if (opts.continuation_steps < 0) {
    throw std::invalid_argument("floquet_decompose: continuation_steps < 0");
  }

  const double period = kTwoPi / omega;
  const double t0 = opts.t0;
  const auto dim = static_cast<Eigen::Index>(h.dim());

  Matrix refs;
  if (opts.reference.empty()) {
    refs = default_reference(h);
  } else {
    refs.resize(dim, static_cast<Eigen::Index>(opts.reference.size()));
    for (std::size_t k = 0; k < opts.reference.size(); ++k) {
      if (!(opts.reference[k].space() == h.space())) {
        throw SpaceMismatch("floquet_decompose: reference state space mismatch");
      }
      refs.col(static_cast<Eigen::Index>(k)) = opts.reference[k].amplitudes();
    }
  }

  for (int stage = 1; stage < opts.continuation_steps; ++stage) {
    const double f = static_cast<double>(stage) / opts.continuation_steps;
    const auto hs = h.scaled_drives(f);
    const Matrix u = propagate(hs, t0, t0 + period, opts.integrator).U.matrix();
    refs = labeled_eigenpairs(u, period, omega, refs).vectors;
  }

  // Validated step count first, then a uniform pass that records samples.
  const auto checked = propagate(h, t0, t0 + period, opts.integrator);
  const auto samples = static_cast<long>(opts.samples_per_period);
  const long per_sample = std::max(1L, (checked.step_count + samples - 1) / samples);
  const double dt = period / static_cast<double>(per_sample * samples);

  std::vector<Matrix> u_at;
  u_at.reserve(static_cast<std::size_t>(samples) + 1);
  Matrix u = Matrix::Identity(dim, dim);
  u_at.push_back(u);
  long step = 0;
  for (long s = 0; s < samples; ++s) {
    for (long k = 0; k < per_sample; ++k, ++step) {
      magnus4_step(h, t0 + dt * static_cast<double>(step), dt, u);
    }
    u_at.push_back(u);
  }

  const Labeled lab = labeled_eigenpairs(u_at.back(), period, omega, refs);

  FloquetSolution sol;
  sol.omega = omega;
  sol.period = period;
  sol.t0 = t0;
  sol.quasienergies = lab.quasienergies;
  sol.degenerate = lab.degenerate;
  sol.modes.resize(static_cast<std::size_t>(samples));
  for (long s = 0; s < samples; ++s) {
    const double tk = t0 + period * static_cast<double>(s) / static_cast<double>(samples);
    sol.sample_times.push_back(tk);
    const Matrix evolved = u_at[static_cast<std::size_t>(s)] * lab.vectors;
    auto& row = sol.modes[static_cast<std::size_t>(s)];
    row.reserve(static_cast<std::size_t>(dim));
    for (Eigen::Index n = 0; n < dim; ++n) {
      const cplx phase = std::polar(1.0, lab.quasienergies[static_cast<std::size_t>(n)] * (tk - t0));
      row.emplace_back(h.space(), Vector(phase * evolved.col(n)));
    }
    Matrix cols(dim, dim);
    for (Eigen::Index n = 0; n < dim; ++n) cols.col(n) = row[static_cast<std::size_t>(n)].amplitudes();
    sol.orthonormality_defect = std::max(
        sol.orthonormality_defect, max_abs(cols.adjoint() * cols - Matrix::Identity(dim, dim)));
  }
  const Matrix end = u_at.back() * lab.vectors;
  for (Eigen::Index n = 0; n < dim; ++n) {
    const cplx phase = std::polar(1.0, lab.quasienergies[static_cast<std::size_t>(n)] * period);
    const double ov = std::abs(lab.vectors.col(n).dot(phase * end.col(n)));
    sol.periodicity_defect = std::max(sol.periodicity_defect, 1.0 - ov);
  }
  return sol;
}

std::string_view to_string(RwaConvention c) {
  return c == RwaConvention::full_amplitude ? "full_amplitude" : "standard";
}

StateVector RwaTlsSolution::mode(int n, double t) const {
  if (n != 0 && n != 1) throw std::out_of_range("RwaTlsSolution::mode: index must be 0 or 1");
  const double c = convention == RwaConvention::full_amplitude ? std::abs(eps_d) : std::abs(eps_d) / 2.0;
  const double lower = quasienergy[n] - detuning / 2.0;
  const double norm = std::sqrt(c * c + lower * lower);
  Vector v(2);
  const cplx envelope = std::polar(1.0 / norm, omega_d * t / 2.0);
  v(0) = envelope * c * std::polar(1.0, -omega_d * t);
  v(1) = envelope * lower;
  return StateVector(HilbertSpace::single(2), std::move(v));
}

RwaTlsSolution rwa_tls(double omega0, double omega_d, double eps_d, RwaConvention convention) {
  RwaTlsSolution s;
  s.detuning = omega0 - omega_d;
  s.omega_d = omega_d;
  s.eps_d = eps_d;
  s.convention = convention;
  const double c = convention == RwaConvention::full_amplitude ? eps_d : eps_d / 2.0;
  const double e = std::sqrt(s.detuning * s.detuning / 4.0 + c * c);
  s.quasienergy[0] = e;
  s.quasienergy[1] = -e;
  return s;
}

FloquetPopulation floquet_population(const StateVector& psi, const FloquetSolution& s, double t) {
  FloquetPopulation out;
  const auto& row = s.modes.at(s.nearest_sample(t));
  for (const auto& phi : row) {
    const double p = std::norm(phi.inner(psi));
    out.p.push_back(p);
    out.total += p;
  }
  out.incomplete = out.total < 0.999;
  return out;
}

void write_floquet_csv(std::ostream& os, const FloquetSolution& s) {
  os << "t_ns";
  for (std::size_t n = 0; n < s.size(); ++n) {
    for (std::size_t c = 0; c < s.size(); ++c) {
      os << ",re_phi" << n << "_" << c << ",im_phi" << n << "_" << c;
    }
  }
  os << '\n' << std::setprecision(12);
  for (std::size_t k = 0; k < s.sample_times.size(); ++k) {
    os << s.sample_times[k];
    for (const auto& phi : s.modes[k]) {
      for (Eigen::Index c = 0; c < phi.amplitudes().size(); ++c) {
        os << ',' << phi.amplitudes()(c).real() << ',' << phi.amplitudes()(c).imag();
      }
    }
    os << '\n';
  }
}

nlohmann::json floquet_json(const FloquetSolution& s) {
  return {
      {"omega_rad_per_ns", s.omega},
      {"period_ns", s.period},
      {"t0_ns", s.t0},
      {"quasienergies_rad_per_ns", s.quasienergies},
      {"samples_per_period", s.sample_times.size()},
      {"degenerate", s.degenerate},
      {"periodicity_defect", s.periodicity_defect},
      {"orthonormality_defect", s.orthonormality_defect},
  };
}

}  // namespace fqk
