#include "fqk/readout.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace fqk {

using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

namespace {

SparseMatrix to_sparse(const Matrix& m, double drop = 1e-14) {
  SparseMatrix s = m.sparseView(1.0, drop);
  s.makeCompressed();
  return s;
}

// Largest |E_i - E_j| over the structural nonzeros of `op`.
double support_frequency(const SparseMatrix& op, const Eigen::VectorXd& e) {
  double f = 0.0;
  for (int k = 0; k < op.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(op, k); it; ++it) {
      f = std::max(f, std::abs(e(it.row()) - e(it.col())));
    }
  }
  return f;
}

double row_sum_norm(const SparseMatrix& op) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(op.rows());
  for (int k = 0; k < op.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(op, k); it; ++it) rows(it.row()) += std::abs(it.value());
  }
  return rows.size() ? rows.maxCoeff() : 0.0;
}

struct ToneGroup {
  SparseMatrix op;
  std::vector<const DriveTone*> terms;
};

// Master equation in the frame of the static diagonal:
// rho = V rho_I V^dag with V = diag(exp(-i E t)).
class LawsonEngine {
 public:
  LawsonEngine(const LindbladModel& model) : model_(model) {
    const Matrix& s = model.h.static_part().matrix();
    n_ = s.rows();
    energies_ = s.diagonal().real();
    Matrix off = s;
    off.diagonal().setZero();
    static_off_ = to_sparse(off);

    for (const auto& tone : model.h.tones()) {
      auto it = std::find_if(groups_.begin(), groups_.end(), [&](const ToneGroup& g) {
        return g.terms.front()->op.matrix() == tone.op.matrix();
      });
      if (it == groups_.end()) {
        groups_.push_back({to_sparse(tone.op.matrix()), {&tone}});
      } else {
        it->terms.push_back(&tone);
      }
    }

    Matrix k = Matrix::Zero(n_, n_);
    for (const auto& c : model.collapse) {
      if (c.rate == 0.0) continue;
      const Matrix l = std::sqrt(c.rate) * c.op.matrix();
      jumps_.push_back(to_sparse(l));
      k += l.adjoint() * l;
    }
    anti_ = to_sparse(cplx(0, -0.5) * k);

    fastest_ = support_frequency(static_off_, energies_);
    for (const auto& g : groups_) {
      const double spread = support_frequency(g.op, energies_);
      for (const auto* t : g.terms) fastest_ = std::max(fastest_, t->frequency + spread);
    }
    for (const auto& l : jumps_) fastest_ = std::max(fastest_, support_frequency(l, energies_));
    fastest_ = std::max(fastest_, support_frequency(anti_, energies_));
    // Coupling magnitudes and decay rates count as frequencies too, so RK4
    // stays inside its stability region when levels are degenerate.
    double norm = row_sum_norm(static_off_);
    for (const auto& g : groups_) {
      for (const auto* t : g.terms) norm += std::abs(t->envelope.amplitude) * row_sum_norm(g.op);
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> ek(k, Eigen::EigenvaluesOnly);
    fastest_ = std::max({fastest_, norm, ek.eigenvalues().maxCoeff()});

    // One sparsity pattern for the whole effective Hamiltonian; each part
    // keeps its values aligned to it so H_eff(t) is a linear combination of arrays.
    SparseMatrix pattern(n_, n_);
    auto mark = [&](const SparseMatrix& x) {
      SparseMatrix ones = x;
      for (Eigen::Index i = 0; i < ones.nonZeros(); ++i) ones.valuePtr()[i] = 1.0;
      pattern += ones;
    };
    mark(static_off_);
    mark(anti_);
    for (const auto& g : groups_) mark(g.op);
    pattern.makeCompressed();
    heff_ = pattern;
    auto align = [&](const SparseMatrix& x) {
      Eigen::VectorXcd vals(pattern.nonZeros());
      Eigen::Index idx = 0;
      for (int col = 0; col < pattern.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(pattern, col); it; ++it) vals(idx++) = x.coeff(it.row(), it.col());
      }
      return vals;
    };
    base_vals_ = align(static_off_) + align(anti_);
    for (const auto& g : groups_) group_vals_.push_back(align(g.op));
  }

  double fastest_frequency() const { return fastest_; }

  Eigen::VectorXcd phases(double t) const {
    return (cplx(0, -1) * t * energies_.cast<cplx>()).array().exp().matrix();
  }

  Matrix to_lab(const Matrix& rho_i, double t) const {
    const Eigen::VectorXcd v = phases(t);
    return v.asDiagonal() * rho_i * v.conjugate().asDiagonal();
  }

  // d(rho_I)/dt for Hermitian rho_I.
  void rhs(double t, const Matrix& rho_i, Matrix& out) {
    const Eigen::VectorXcd v = phases(t);
    r_.noalias() = v.asDiagonal() * rho_i * v.conjugate().asDiagonal();
    Eigen::Map<Eigen::VectorXcd> vals(heff_.valuePtr(), heff_.nonZeros());
    vals = base_vals_;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      double c = 0.0;
      for (const auto* term : groups_[g].terms) c += term->coefficient(t);
      if (c != 0.0) vals += c * group_vals_[g];
    }
    // drho = -i (Heff R - R Heff^dag) + sum L R L^dag, with R Heff^dag = (Heff R)^dag.
    a_.noalias() = heff_ * r_;
    out = cplx(0, -1) * (a_ - a_.adjoint());
    for (const auto& l : jumps_) {
      tmp_.noalias() = l * r_;
      b_.noalias() = l * tmp_.adjoint();
      out += 0.5 * (b_ + b_.adjoint());
    }
    out = v.conjugate().asDiagonal() * out * v.asDiagonal();
  }

  Eigen::Index dim() const { return n_; }

 private:
  const LindbladModel& model_;
  Eigen::Index n_ = 0;
  Eigen::VectorXd energies_;
  SparseMatrix static_off_, anti_, heff_;
  Eigen::VectorXcd base_vals_;
  std::vector<Eigen::VectorXcd> group_vals_;
  std::vector<ToneGroup> groups_;
  std::vector<SparseMatrix> jumps_;
  double fastest_ = 0.0;
  Matrix r_, a_, b_, tmp_;
};

}  // namespace

void validate_sample(const Matrix& rho, const LindbladConfig& cfg, double t, double step,
                     double trace0) {
  const double tr_err = std::abs(rho.trace() - trace0);
  const double herm = max_abs(rho - rho.adjoint());
  std::ostringstream os;
  if (!rho.allFinite()) {
    os << "lindblad: non-finite state at t = " << t << " ns (step " << step << " ns)";
    throw LindbladError(os.str(), t, step);
  }
  if (tr_err > cfg.trace_tol) {
    os << "lindblad: trace drift " << tr_err << " at t = " << t << " ns (step " << step << " ns)";
    throw LindbladError(os.str(), t, step);
  }
  if (herm > cfg.hermiticity_tol) {
    os << "lindblad: Hermiticity defect " << herm << " at t = " << t << " ns (step " << step
       << " ns)";
    throw LindbladError(os.str(), t, step);
  }
  if (cfg.check_positivity) {
    const Matrix sym = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo < -cfg.positivity_tol) {
      os << "lindblad: negative eigenvalue " << lo << " at t = " << t << " ns (step " << step
         << " ns); reduce the step";
      throw LindbladError(os.str(), t, step);
    }
  }
}

void LindbladModel::validate() const {
  for (const auto& c : collapse) {
    if (!(c.rate >= 0.0)) throw std::invalid_argument("LindbladModel: negative collapse rate");
    if (!(c.op.space() == h.space())) throw SpaceMismatch("LindbladModel: collapse op space");
  }
}

double lindblad_run(const LindbladModel& model, const DensityMatrix& rho0,
                    std::span<const double> times, const DensityObserver& observe,
                    const LindbladConfig& cfg, double t_start) {
  model.validate();
  if (!(rho0.space() == model.h.space())) throw SpaceMismatch("lindblad: initial state space");
  if (cfg.substeps_per_fastest_period < 8) {
    throw std::invalid_argument("LindbladConfig: substeps_per_fastest_period must be >= 8");
  }
  rho0.validate();
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw std::invalid_argument("lindblad: times not increasing");
  }
  if (!times.empty() && times.front() < t_start) {
    throw std::invalid_argument("lindblad: first time precedes start time");
  }

  LawsonEngine eng(model);
  const double f = eng.fastest_frequency();
  const double h_max = f > 0.0 ? kTwoPi / f / cfg.substeps_per_fastest_period : 0.01;
  const double trace0 = rho0.trace().real();

  const Eigen::VectorXcd v0 = eng.phases(t_start);
  Matrix y = v0.conjugate().asDiagonal() * rho0.matrix() * v0.asDiagonal();
  y = 0.5 * (y + y.adjoint()).eval();
  const auto n = eng.dim();
  Matrix k1(n, n), k2(n, n), k3(n, n), k4(n, n), tmp(n, n);
  double t = t_start;
  double used = 0.0;
  for (std::size_t idx = 0; idx < times.size(); ++idx) {
    const double span = times[idx] - t;
    if (span > 0.0) {
      const long steps = std::max(1L, static_cast<long>(std::ceil(span / h_max - 1e-9)));
      const double h = span / static_cast<double>(steps);
      used = std::max(used, h);
      for (long s = 0; s < steps; ++s) {
        const double ts = t + h * static_cast<double>(s);
        eng.rhs(ts, y, k1);
        tmp = y + (0.5 * h) * k1;
        eng.rhs(ts + 0.5 * h, tmp, k2);
        tmp = y + (0.5 * h) * k2;
        eng.rhs(ts + 0.5 * h, tmp, k3);
        tmp = y + h * k3;
        eng.rhs(ts + h, tmp, k4);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      t = times[idx];
    }
    Matrix lab = eng.to_lab(y, t);
    validate_sample(lab, cfg, t, used > 0.0 ? used : h_max, trace0);
    observe(idx, DensityMatrix(model.h.space(), std::move(lab)));
  }
  return used > 0.0 ? used : h_max;
}

std::vector<DensityMatrix> lindblad_evolve(const LindbladModel& model, const DensityMatrix& rho0,
                                           std::span<const double> times,
                                           const LindbladConfig& cfg, double t_start) {
  std::vector<DensityMatrix> out;
  out.reserve(times.size());
  lindblad_run(
      model, rho0, times, [&](std::size_t, const DensityMatrix& r) { out.push_back(r); }, cfg,
      t_start);
  return out;
}

PointerTrajectory pointer_separation(const LindbladModel& model, const StateVector& psi0,
                                     const StateVector& psi1, const Operator& field,
                                     std::span<const double> times, const LindbladConfig& cfg) {
  if (!(field.space() == model.h.space())) throw SpaceMismatch("pointer_separation: field space");
  PointerTrajectory tr;
  tr.times.assign(times.begin(), times.end());
  tr.a0.resize(times.size());
  tr.a1.resize(times.size());
  lindblad_run(model, DensityMatrix::pure(psi0), times,
               [&](std::size_t k, const DensityMatrix& r) { tr.a0[k] = expectation(r, field); }, cfg);
  lindblad_run(model, DensityMatrix::pure(psi1), times,
               [&](std::size_t k, const DensityMatrix& r) { tr.a1[k] = expectation(r, field); }, cfg);
  tr.D.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) tr.D[k] = std::abs(tr.a0[k] - tr.a1[k]);
  return tr;
}

double longitudinal_D_analytic(double g_eff, double kappa, double t) {
  if (!(kappa > 0.0)) throw std::invalid_argument("longitudinal_D_analytic: kappa must be > 0");
  return g_eff / kappa * -std::expm1(-0.5 * kappa * t);
}

double snr(std::span<const double> times, std::span<const double> D, double kappa, double T) {
  if (times.size() != D.size() || times.empty()) {
    throw std::invalid_argument("snr: times and D must be nonempty and equal length");
  }
  if (T < times.front() || T > times.back() + 1e-12) {
    throw std::out_of_range("snr: T outside the sampled range");
  }
  double integral = 0.0;
  for (std::size_t k = 1; k < times.size() && times[k - 1] < T; ++k) {
    const double t0 = times[k - 1];
    double t1 = times[k], d1 = D[k];
    if (t1 > T) {
      d1 = D[k - 1] + (D[k] - D[k - 1]) * (T - t0) / (t1 - t0);
      t1 = T;
    }
    integral += 0.5 * (t1 - t0) * (D[k - 1] * D[k - 1] + d1 * d1);
  }
  return std::sqrt(2.0 * kappa * integral);
}

double dispersive_D_analytic(const DispersiveParams& p, double t) {
  const double s = t - p.t_map;
  if (s <= 0.0) return 0.0;
  auto pointer = [&](double sign) {
    const cplx lam(0.5 * p.kappa, sign * p.chi);
    return cplx(0, -1) * p.eps_probe / lam * (1.0 - std::exp(-lam * s));
  };
  return std::abs(pointer(+1.0) - pointer(-1.0));
}

DispersiveParams dispersive_matching(double kappa, double d_inf, double t_map) {
  return {0.5 * kappa, kappa, 0.5 * kappa * d_inf, t_map};
}

ExponentialFit fit_longitudinal(std::span<const double> times, std::span<const double> D,
                                double t_max, double kappa_guess) {
  std::vector<double> ts, ds;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] <= t_max) {
      ts.push_back(times[k]);
      ds.push_back(D[k]);
    }
  }
  if (ts.size() < 3) throw std::invalid_argument("fit_longitudinal: need at least 3 samples");
  double kap = kappa_guess;
  // For fixed kappa the amplitude is linear; start from that.
  auto best_amp = [&](double k) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double b = -std::expm1(-0.5 * k * ts[i]);
      num += b * ds[i];
      den += b * b;
    }
    return den > 0.0 ? num / den : 0.0;
  };
  double amp = best_amp(kap);
  auto cost = [&](double a, double k) {
    double c = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double r = ds[i] - a * -std::expm1(-0.5 * k * ts[i]);
      c += r * r;
    }
    return c;
  };
  double lambda = 1e-3;
  double c0 = cost(amp, kap);
  for (int it = 0; it < 200; ++it) {
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double e = std::exp(-0.5 * kap * ts[i]);
      const Eigen::Vector2d j(1.0 - e, amp * 0.5 * ts[i] * e);
      const double r = ds[i] - amp * (1.0 - e);
      jtj += j * j.transpose();
      jtr += j * r;
    }
    Eigen::Matrix2d a = jtj;
    a.diagonal() *= 1.0 + lambda;
    const Eigen::Vector2d step = a.ldlt().solve(jtr);
    const double na = amp + step(0), nk = std::max(1e-12, kap + step(1));
    const double c1 = cost(na, nk);
    if (c1 < c0) {
      const bool done = c0 - c1 < 1e-15 * (1.0 + c0);
      amp = na;
      kap = nk;
      c0 = c1;
      lambda *= 0.3;
      if (done) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return {amp, kap, std::sqrt(c0 / static_cast<double>(ts.size()))};
}

// ---------------------------------------------------------------- two-body

double TwoBodyReadout::g_eff() const {
  return sidebands == Sidebands::both ? 2.0 * g_sideband : g_sideband;
}

nlohmann::json TwoBodyReadout::to_json() const {
  return {{"omega0_ghz", ordinary(omega0)},
          {"eps_d1_ghz", ordinary(eps_d1)},
          {"tilt", tilt},
          {"omega_d1_ghz", ordinary(omega_d1())},
          {"omega_r_ghz", ordinary(omega_r)},
          {"g_sideband_ghz", ordinary(g_sideband)},
          {"g_eff_ghz", ordinary(g_eff())},
          {"kappa_ghz", ordinary(kappa)},
          {"cavity_dim", cavity_dim},
          {"sidebands", std::string(to_string(sidebands))},
          {"d_inf", g_eff() / kappa}};
}

PointerTrajectory simulate_two_body_readout(const TwoBodyReadout& p, std::span<const double> times,
                                            const LindbladConfig& cfg) {
  if (!(p.kappa > 0.0)) throw std::invalid_argument("two-body readout: kappa must be > 0");
  if (p.cavity_dim < 2) throw std::invalid_argument("two-body readout: cavity_dim < 2");
  const double wd = p.omega_d1();
  const auto qubit = build_tls_driven(p.omega0, p.eps_d1, wd, Envelope::constant(1.0));
  const auto fl = floquet_decompose(qubit, wd);

  LindbladModel model{build_qubit_cavity(p.omega0, p.eps_d1, wd, p.omega_r, p.g_sideband,
                                         p.cavity_dim, p.sidebands),
                      {}};
  const HilbertSpace& space = model.h.space();
  const Operator a = embed(annihilation(p.cavity_dim), 1, space);
  model.collapse.push_back({a, p.kappa});
  const StateVector vac = fock_state(0, p.cavity_dim);
  auto tr = pointer_separation(model, tensor({fl.mode(0), vac}), tensor({fl.mode(1), vac}), a,
                               times, cfg);
  tr.params = p.to_json();
  return tr;
}

// ---------------------------------------------------------------- circuit

nlohmann::json KerrCircuit::to_json() const {
  return {{"omega_a_ghz", ordinary(omega_a)},
          {"omega_b_ghz", ordinary(omega_b)},
          {"omega_c_ghz", ordinary(omega_c)},
          {"alpha_b_ghz", ordinary(alpha_b)},
          {"alpha_c_ghz", ordinary(alpha_c)},
          {"g_ab_ghz", ordinary(g_ab)},
          {"g_bc_ghz", ordinary(g_bc)},
          {"g_ca_ghz", ordinary(g_ca)},
          {"eps_d1_ghz", ordinary(eps_d1)},
          {"tilt", tilt},
          {"modulation_ghz", ordinary(modulation)},
          {"sidebands", std::string(to_string(sidebands))},
          {"kappa_ghz", ordinary(kappa)},
          {"dims", {dim_a, dim_b, dim_c}}};
}

nlohmann::json NormalModeData::to_json() const {
  nlohmann::json u_rows = nlohmann::json::array(), chi_rows = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) {
    u_rows.push_back({u(i, 0), u(i, 1), u(i, 2)});
    chi_rows.push_back({ordinary(chi1(i, 0)), ordinary(chi1(i, 1)), ordinary(chi1(i, 2))});
  }
  return {{"frequencies_ghz",
           {ordinary(frequencies(0)), ordinary(frequencies(1)), ordinary(frequencies(2))}},
          {"u_bare_by_normal", u_rows},
          {"alpha1_ghz", {ordinary(alpha1(0)), ordinary(alpha1(1)), ordinary(alpha1(2))}},
          {"chi1_ghz", chi_rows},
          {"g_per_modulation", g_per_modulation}};
}

NormalModeData normal_mode_reduce(const KerrCircuit& c) {
  Eigen::Matrix3d m;
  m << c.omega_a, c.g_ab, c.g_ca, c.g_ab, c.omega_b, c.g_bc, c.g_ca, c.g_bc, c.omega_c;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
  const Eigen::Matrix3d vecs = es.eigenvectors();
  const Eigen::Vector3d vals = es.eigenvalues();

  // Assign eigenvectors to bare labels by overlap, largest overlaps first.
  NormalModeData nm;
  std::array<int, 3> owner{-1, -1, -1};
  std::array<bool, 3> used{false, false, false};
  for (int round = 0; round < 3; ++round) {
    double best = -1.0;
    int bi = -1, bj = -1;
    for (int bare = 0; bare < 3; ++bare) {
      if (owner[bare] >= 0) continue;
      for (int j = 0; j < 3; ++j) {
        if (used[j]) continue;
        if (std::abs(vecs(bare, j)) > best) {
          best = std::abs(vecs(bare, j));
          bi = bare;
          bj = j;
        }
      }
    }
    owner[bi] = bj;
    used[bj] = true;
  }
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d col = vecs.col(owner[k]);
    Eigen::Index dom = 0;
    col.cwiseAbs().maxCoeff(&dom);
    if (col(dom) < 0) col = -col;
    nm.u.col(k) = col;
    nm.frequencies(k) = vals(owner[k]);
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (std::abs(nm.frequencies(i) - nm.frequencies(j)) < angular(1e-3)) {
        throw LabelingAmbiguity("normal_mode_reduce: normal frequencies closer than 1 MHz");
      }
    }
  }

  const double bare_alpha[3] = {0.0, c.alpha_b, c.alpha_c};
  nm.alpha1.setZero();
  nm.chi1.setZero();
  for (int j = 0; j < 3; ++j) {
    for (int i = 1; i < 3; ++i) nm.alpha1(j) += std::pow(nm.u(i, j), 4) * bare_alpha[i];
    for (int k = j + 1; k < 3; ++k) {
      for (int i = 1; i < 3; ++i) {
        nm.chi1(j, k) += 2.0 * nm.u(i, j) * nm.u(i, j) * nm.u(i, k) * nm.u(i, k) * bare_alpha[i];
      }
      nm.chi1(k, j) = nm.chi1(j, k);
    }
  }
  nm.g_per_modulation = nm.u(2, 0) * nm.u(2, 1);
  return nm;
}

NormalModeData normal_mode_kerr_by_expansion(const KerrCircuit& c, const NormalModeData& nm) {
  // Fock 0..2 per normal mode suffices for <2_j|Q|2_j> and <1_j 1_k|Q|1_j 1_k>.
  const HilbertSpace space({3, 3, 3});
  std::array<Operator, 3> modes{embed(annihilation(3), 0, space), embed(annihilation(3), 1, space),
                                embed(annihilation(3), 2, space)};
  const double bare_alpha[3] = {0.0, c.alpha_b, c.alpha_c};
  Operator q = Operator::zero(space);
  for (int i = 1; i < 3; ++i) {
    Operator beta = Operator::zero(space);
    for (int a = 0; a < 3; ++a) beta += cplx(nm.u(i, a)) * modes[a];
    const Operator bd = beta.adjoint();
    q += cplx(0.5 * bare_alpha[i]) * (bd * bd * beta * beta);
  }
  auto index = [](int na, int nb, int nc) { return static_cast<Eigen::Index>((na * 3 + nb) * 3 + nc); };
  auto occupation = [&](int j, int k) {
    int n[3] = {0, 0, 0};
    n[j] += 1;
    n[k] += 1;
    return index(n[0], n[1], n[2]);
  };
  NormalModeData out = nm;
  out.alpha1.setZero();
  out.chi1.setZero();
  for (int j = 0; j < 3; ++j) {
    const auto d = occupation(j, j);
    out.alpha1(j) = q.matrix()(d, d).real();
    for (int k = 0; k < 3; ++k) {
      if (k == j) continue;
      const auto e = occupation(j, k);
      out.chi1(j, k) = q.matrix()(e, e).real();
    }
  }
  return out;
}

namespace {

struct CircuitOperators {
  HilbertSpace space;
  Operator a, b, c;
};

CircuitOperators circuit_operators(std::size_t da, std::size_t db, std::size_t dc) {
  const HilbertSpace space({da, db, dc});
  return {space, embed(annihilation(da), 0, space), embed(annihilation(db), 1, space),
          embed(annihilation(dc), 2, space)};
}

DrivenHamiltonian circuit_hamiltonian(const KerrCircuit& k, const CircuitOperators& o,
                                      double omega_d1, double modulation_frequency,
                                      bool with_modulation) {
  const Operator ad = o.a.adjoint(), bd = o.b.adjoint(), cd = o.c.adjoint();
  Operator h = cplx(k.omega_a) * (ad * o.a) + cplx(k.omega_b) * (bd * o.b) +
               cplx(k.omega_c) * (cd * o.c);
  h += cplx(0.5 * k.alpha_b) * (bd * bd * o.b * o.b);
  h += cplx(0.5 * k.alpha_c) * (cd * cd * o.c * o.c);
  h += cplx(k.g_ab) * (ad * o.b + bd * o.a);
  h += cplx(k.g_bc) * (bd * o.c + cd * o.b);
  h += cplx(k.g_ca) * (cd * o.a + ad * o.c);
  std::vector<DriveTone> tones;
  // -i eps (b - b^dag)
  tones.push_back({cplx(0, -1) * (o.b - bd), Envelope::constant(k.eps_d1), omega_d1, 0.0});
  if (with_modulation && k.modulation != 0.0) {
    tones.push_back({cd * o.c, Envelope::constant(k.modulation), modulation_frequency, 0.0});
  }
  return DrivenHamiltonian(std::move(h), std::move(tones));
}

}  // namespace

CircuitModel build_circuit_model(const KerrCircuit& k, bool with_modulation) {
  if (k.dim_a < 2 || k.dim_b < 2 || k.dim_c < 2) {
    throw std::invalid_argument("KerrCircuit: every truncation must be >= 2");
  }
  if (!(k.kappa >= 0.0)) throw std::invalid_argument("KerrCircuit: kappa must be >= 0");
  const NormalModeData nm = normal_mode_reduce(k);
  const double omega_d1 = nm.frequencies(1) - k.tilt * k.eps_d1;
  double wm = 0.0;
  switch (k.sidebands) {
    case Sidebands::difference:
      wm = std::abs(nm.frequencies(0) - nm.frequencies(1));
      break;
    case Sidebands::sum:
      wm = nm.frequencies(0) + nm.frequencies(1);
      break;
    case Sidebands::both:
      throw std::invalid_argument("KerrCircuit: pick one sideband (difference or sum)");
  }
  const auto ops = circuit_operators(k.dim_a, k.dim_b, k.dim_c);
  // Normal cavity mode: a_N = sum over bare beta of u(beta, a) beta.
  const Operator field =
      cplx(nm.u(0, 0)) * ops.a + cplx(nm.u(1, 0)) * ops.b + cplx(nm.u(2, 0)) * ops.c;
  LindbladModel model{circuit_hamiltonian(k, ops, omega_d1, wm, with_modulation),
                      {{field, k.kappa}}};
  return {std::move(model), field, nm, omega_d1, wm};
}

CircuitFloquetQubit circuit_floquet_qubit(const KerrCircuit& k, const CircuitModel& m) {
  // Floquet problem on a small cavity/coupler truncation, embedded afterwards;
  // the drive barely populates those modes.
  const std::size_t da = std::min<std::size_t>(k.dim_a, 2), dc = std::min<std::size_t>(k.dim_c, 2);
  const auto small = circuit_operators(da, k.dim_b, dc);
  const auto h = circuit_hamiltonian(k, small, m.omega_d1, 0.0, false);

  Eigen::SelfAdjointEigenSolver<Matrix> es(h.static_part().matrix());
  auto dressed = [&](std::size_t nb) {
    const auto bare = static_cast<Eigen::Index>(nb * dc);
    Eigen::Index best = 0;
    es.eigenvectors().row(bare).cwiseAbs().maxCoeff(&best);
    return StateVector(small.space, es.eigenvectors().col(best));
  };
  FloquetOptions opts;
  opts.reference = {dressed(0), dressed(1)};
  opts.continuation_steps = 8;
  opts.samples_per_period = 64;
  const auto fl = floquet_decompose(h, m.omega_d1, opts);

  const auto& u = m.modes.u;
  const Operator bn = cplx(u(0, 1)) * small.a + cplx(u(1, 1)) * small.b + cplx(u(2, 1)) * small.c;
  cplx b1[2] = {0.0, 0.0};
  for (std::size_t s = 0; s < fl.sample_times.size(); ++s) {
    const cplx w = std::exp(cplx(0, m.omega_d1 * (fl.sample_times[s] - fl.t0)));
    for (int n = 0; n < 2; ++n) b1[n] += expectation(fl.mode(static_cast<std::size_t>(n), s), bn) * w;
  }

  const HilbertSpace& big = m.model.h.space();
  auto embed_state = [&](const StateVector& s) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(big.dim()));
    for (std::size_t ia = 0; ia < da; ++ia) {
      for (std::size_t ib = 0; ib < k.dim_b; ++ib) {
        for (std::size_t ic = 0; ic < dc; ++ic) {
          v(static_cast<Eigen::Index>((ia * k.dim_b + ib) * k.dim_c + ic)) =
              s.amplitudes()(static_cast<Eigen::Index>((ia * k.dim_b + ib) * dc + ic));
        }
      }
    }
    return StateVector(big, v).normalized();
  };
  const double ns = static_cast<double>(fl.sample_times.size());
  return {embed_state(fl.mode(0)), embed_state(fl.mode(1)), {b1[0] / ns, b1[1] / ns}};
}

double circuit_d_inf_prediction(const KerrCircuit& k, const CircuitModel& m,
                                const CircuitFloquetQubit& q) {
  return std::abs(m.modes.g_per_modulation * k.modulation) * q.contrast() / k.kappa;
}

PointerTrajectory simulate_circuit_readout(const KerrCircuit& k, std::span<const double> times,
                                           const LindbladConfig& cfg, bool with_modulation) {
  const auto m = build_circuit_model(k, with_modulation);
  const auto q = circuit_floquet_qubit(k, m);
  auto tr = pointer_separation(m.model, q.phi0, q.phi1, m.field, times, cfg);
  tr.params = k.to_json();
  tr.params["omega_d1_ghz"] = ordinary(m.omega_d1);
  tr.params["modulation_frequency_ghz"] = ordinary(m.modulation_frequency);
  tr.params["g_predicted_ghz"] = ordinary(m.modes.g_per_modulation * k.modulation);
  tr.params["floquet_contrast"] = q.contrast();
  tr.params["d_inf_predicted"] = circuit_d_inf_prediction(k, m, q);
  tr.params["normal_modes"] = m.modes.to_json();
  return tr;
}

void write_trajectory_csv(std::ostream& os, const PointerTrajectory& tr, double d_inf) {
  os << "t_ns,ReA0,ImA0,ReA1,ImA1,D,D_over_Dinf\n";
  os.precision(12);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    os << tr.times[k] << ',' << tr.a0[k].real() << ',' << tr.a0[k].imag() << ','
       << tr.a1[k].real() << ',' << tr.a1[k].imag() << ',' << tr.D[k] << ','
       << (d_inf > 0.0 ? tr.D[k] / d_inf : 0.0) << '\n';
  }
}

}  // namespace fqk
