#include "optocool/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "optocool/errors.hpp"
#include "optocool/io.hpp"

namespace optocool::lindblad {

namespace {

constexpr Complex I{0.0, 1.0};

Sparse identity(int n) {
  Sparse id(n, n);
  id.setIdentity();
  return id;
}

// tr(ρ O) = Σ_{i,k} O(i,k) ρ(k,i)
Complex expectation(const Matrix& rho, const Sparse& op) {
  Complex acc = 0.0;
  for (int k = 0; k < op.outerSize(); ++k)
    for (Sparse::InnerIterator it(op, k); it; ++it) acc += it.value() * rho(k, it.row());
  return acc;
}

covariance::MomentState moments_of(const Matrix& rho, const FockConfig& cfg) {
  const auto ops = ladder_operators(cfg);
  const Sparse ad = ops.a.adjoint();
  const Sparse bd = ops.b.adjoint();
  covariance::MomentState s;
  s.n_a = expectation(rho, Sparse(ad * ops.a)).real();
  s.n_b = expectation(rho, Sparse(bd * ops.b)).real();
  s.adag_b = expectation(rho, Sparse(ad * ops.b));
  s.a_b = expectation(rho, Sparse(ops.a * ops.b));
  s.a_sq = expectation(rho, Sparse(ops.a * ops.a));
  s.b_sq = expectation(rho, Sparse(ops.b * ops.b));
  return s;
}

Matrix single_mode_thermal(int dim, double n) {
  Eigen::VectorXd p(dim);
  const double ratio = n > 0.0 ? n / (n + 1.0) : 0.0;
  double w = 1.0;
  for (int k = 0; k < dim; ++k, w *= ratio) p[k] = w;
  p /= p.sum();
  return p.cast<Complex>().asDiagonal();
}

Eigen::VectorXcd coherent_vector(int dim, Complex alpha) {
  Eigen::VectorXcd c(dim);
  c[0] = 1.0;
  for (int k = 1; k < dim; ++k) c[k] = c[k - 1] * alpha / std::sqrt(static_cast<double>(k));
  return c / c.norm();
}

}  // namespace

void FockConfig::validate() const {
  if (dim_a < 2 || dim_b < 2) throw ConfigError("fock cutoffs: dim_a and dim_b must be >= 2");
  if (static_cast<std::size_t>(side()) > budget)
    throw BudgetExceeded("fock space: dim_a*dim_b = " + std::to_string(side()) +
                         " exceeds the budget of " + std::to_string(budget));
}

DensityMatrix::DensityMatrix(FockConfig cfg, Matrix entries)
    : cfg_(cfg), rho_(std::move(entries)) {
  if (rho_.rows() != cfg_.side() || rho_.cols() != cfg_.side())
    throw ConfigError("density matrix: shape does not match dim_a*dim_b");
  trace_ = rho_.trace().real();
}

DensityMatrix DensityMatrix::vacuum(const FockConfig& cfg) {
  cfg.validate();
  Matrix rho = Matrix::Zero(cfg.side(), cfg.side());
  rho(0, 0) = 1.0;
  return {cfg, std::move(rho)};
}

DensityMatrix DensityMatrix::thermal(const FockConfig& cfg, double n_a, double n_b) {
  cfg.validate();
  if (!(n_a >= 0.0) || !(n_b >= 0.0)) throw ConfigError("thermal state: occupancies must be >= 0");
  Matrix rho = Eigen::kroneckerProduct(single_mode_thermal(cfg.dim_a, n_a),
                                       single_mode_thermal(cfg.dim_b, n_b));
  return {cfg, std::move(rho)};
}

DensityMatrix DensityMatrix::coherent(const FockConfig& cfg, Complex alpha, Complex beta) {
  cfg.validate();
  const Eigen::VectorXcd psi = Eigen::kroneckerProduct(coherent_vector(cfg.dim_a, alpha),
                                                       coherent_vector(cfg.dim_b, beta));
  return {cfg, psi * psi.adjoint()};
}

HealthReport DensityMatrix::health(bool with_spectrum) const {
  HealthReport h;
  h.hermiticity_error = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  h.trace_error = std::abs(rho_.trace() - 1.0);
  if (with_spectrum) {
    const Matrix herm = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    h.min_eigenvalue = es.eigenvalues().minCoeff();
  } else {
    h.min_eigenvalue = rho_.diagonal().real().minCoeff();
  }
  for (int m = 0; m < cfg_.dim_b; ++m)
    h.top_photon_population += rho_(cfg_.index(cfg_.dim_a - 1, m), cfg_.index(cfg_.dim_a - 1, m)).real();
  for (int n = 0; n < cfg_.dim_a; ++n)
    h.top_phonon_population += rho_(cfg_.index(n, cfg_.dim_b - 1), cfg_.index(n, cfg_.dim_b - 1)).real();
  return h;
}

LadderOperators ladder_operators(const FockConfig& cfg) {
  const int d = cfg.side();
  std::vector<Eigen::Triplet<Complex>> ta, tb;
  for (int n = 0; n < cfg.dim_a; ++n) {
    for (int m = 0; m < cfg.dim_b; ++m) {
      if (n > 0) ta.emplace_back(cfg.index(n - 1, m), cfg.index(n, m), std::sqrt(double(n)));
      if (m > 0) tb.emplace_back(cfg.index(n, m - 1), cfg.index(n, m), std::sqrt(double(m)));
    }
  }
  LadderOperators ops{Sparse(d, d), Sparse(d, d)};
  ops.a.setFromTriplets(ta.begin(), ta.end());
  ops.b.setFromTriplets(tb.begin(), tb.end());
  return ops;
}

Sparse hamiltonian(const ReducedParams& rp, const FockConfig& cfg) {
  const auto ops = ladder_operators(cfg);
  const Sparse ad = ops.a.adjoint();
  const Sparse bd = ops.b.adjoint();
  const Complex G = rp.coupling();
  Sparse h = Complex(-rp.detuning) * Sparse(ad * ops.a) + Complex(rp.omega_m) * Sparse(bd * ops.b);
  const Sparse drive = G * ad + std::conj(G) * Sparse(ops.a);
  h += Sparse(drive * Sparse(ops.b + bd));
  h.makeCompressed();
  return h;
}

namespace {

// Smallest multiple of 8 doubles ≥ side spanning an odd number of cache lines.
int leading_dimension(int side) {
  int ld = (side + 7) / 8 * 8;
  if ((ld / 8) % 2 == 0) ld += 8;
  return ld;
}

}  // namespace

SplitMatrix::SplitMatrix(int side, int pad)
    : side_(side),
      pad_(pad),
      ld_(leading_dimension(side)),
      re_(std::size_t(ld_) * std::size_t(side) + 2 * std::size_t(pad), 0.0),
      im_(re_.size() + skew, 0.0) {}

SplitMatrix::SplitMatrix(const Matrix& m, int pad) : SplitMatrix(int(m.rows()), pad) {
  for (int j = 0; j < side_; ++j)
    for (int i = 0; i < side_; ++i) {
      re(j)[i] = m(i, j).real();
      im(j)[i] = m(i, j).imag();
    }
}

Matrix SplitMatrix::to_matrix() const {
  Matrix m(side_, side_);
  for (int j = 0; j < side_; ++j)
    for (int i = 0; i < side_; ++i) m(i, j) = Complex(re(j)[i], im(j)[i]);
  return m;
}

void SplitMatrix::mirror_upper(int band) {
  const int d = side_;
  if (band >= 0) {
    for (int j = 0; j < d; ++j) {
      double* lr = re(j);
      double* li = im(j);
      for (int i = j + 1; i <= std::min(d - 1, j + band); ++i) {
        lr[i] = re(i)[j];
        li[i] = -im(i)[j];
      }
    }
    return;
  }
  constexpr int block = 32;
  for (int jb0 = 0; jb0 < d; jb0 += block)
    for (int ib = jb0; ib < d; ib += block)
      for (int j = jb0; j < std::min(jb0 + block, d); ++j) {
        double* lr = re(j);
        double* li = im(j);
        for (int i = std::max(ib, j + 1); i < std::min(ib + block, d); ++i) {
          lr[i] = re(i)[j];
          li[i] = -im(i)[j];
        }
      }
}

Generator::Generator(const ReducedParams& rp, const FockConfig& cfg) : cfg_(cfg), rp_(rp) {
  cfg_.validate();
  rp_.validate();
  const auto ops = ladder_operators(cfg_);
  jumps_.push_back(std::sqrt(rp_.kappa) * ops.a);
  jumps_.push_back(std::sqrt(rp_.gamma * (rp_.n_th + 1.0)) * ops.b);
  if (rp_.n_th > 0.0) jumps_.push_back(std::sqrt(rp_.gamma * rp_.n_th) * Sparse(ops.b.adjoint()));
  h_eff_ = hamiltonian(rp_, cfg_);
  for (const auto& j : jumps_) h_eff_ -= Complex(0.0, 0.5) * Sparse(Sparse(j.adjoint()) * j);
  h_eff_.makeCompressed();
  for (auto& j : jumps_) j.makeCompressed();

  const int da = cfg_.dim_a, db = cfg_.dim_b, d = cfg_.side();
  const Complex G = rp_.coupling();
  diag_re_.resize(d);
  diag_im_.resize(d);
  offset_ = {-db + 1, -db - 1, db + 1, db - 1};
  std::array<Eigen::VectorXcd, 4> coupling;
  for (auto& c : coupling) c.setZero(d);
  jump_a_.setZero(d);
  jump_b_.setZero(d);
  jump_bd_.setZero(d);
  for (int n = 0; n < da; ++n) {
    for (int m = 0; m < db; ++m) {
      const int i = cfg_.index(n, m);
      const bool top_a = n + 1 >= da, top_b = m + 1 >= db;
      // Truncated b b† vanishes on the top phonon level.
      const double decay = rp_.kappa * n + rp_.gamma * (rp_.n_th + 1.0) * m +
                           rp_.gamma * rp_.n_th * (top_b ? 0.0 : m + 1.0);
      diag_re_[i] = -rp_.detuning * n + rp_.omega_m * m;
      diag_im_[i] = -0.5 * decay;
      const double sn = std::sqrt(double(n)), sn1 = std::sqrt(n + 1.0);
      const double sm = std::sqrt(double(m)), sm1 = std::sqrt(m + 1.0);
      if (n >= 1 && !top_b) coupling[0][i] = G * sn * sm1;            // G a†b
      if (n >= 1 && m >= 1) coupling[1][i] = G * sn * sm;             // G a†b†
      if (!top_a && !top_b) coupling[2][i] = std::conj(G) * sn1 * sm1;  // G* ab
      if (!top_a && m >= 1) coupling[3][i] = std::conj(G) * sn1 * sm;   // G* ab†
      if (!top_a) jump_a_[i] = std::sqrt(rp_.kappa) * sn1;
      if (!top_b) jump_b_[i] = std::sqrt(rp_.gamma * (rp_.n_th + 1.0)) * sm1;
      jump_bd_[i] = std::sqrt(rp_.gamma * rp_.n_th) * sm;
    }
  }
  for (int k = 0; k < 4; ++k) {
    coupling_re_[k] = coupling[k].real();
    coupling_im_[k] = coupling[k].imag();
  }
}

Matrix Generator::apply(const Matrix& rho) const {
  const Matrix left = h_eff_ * rho;                                  // H_eff ρ
  const Matrix right = (h_eff_ * rho.adjoint()).adjoint();           // ρ H_eff†
  Matrix out = -I * left + I * right;
  for (const auto& j : jumps_) {
    const Matrix rho_jd = Matrix(j * rho.adjoint()).adjoint();       // ρ J†
    out += j * rho_jd;
  }
  return out;
}

Matrix Generator::apply_hermitian(const Matrix& rho) const {
  Matrix out(rho.rows(), rho.cols());
  apply_hermitian_into(rho, out);
  return out;
}

void Generator::apply_hermitian_into(const Matrix& rho, Matrix& out) const {
  const SplitMatrix in(rho, padding());
  SplitMatrix res(cfg_.side(), padding());
  apply_split(in, res);
  out = res.to_matrix();
}

// L_ij = −i(h_i − h_j*)ρ_ij − i Σ_k c_ik ρ_kj + i Σ_k c_jk* ρ_ik + Σ_J J ρ J†,
// evaluated for i ≤ j and mirrored. ρ is Hermitian, so ρ_ik is read from
// column k and every term walks down a column. Absent neighbours carry zero
// weight and point at finite data, so the loop body has no branches.
namespace {

// Everything one column of the kernel reads; see Generator::sweep.
struct Column {
  const double *hr, *hi, *ja, *jb, *jd;
  const double *c0r, *c0i, *c1r, *c1i, *c2r, *c2i, *c3r, *c3i;
  int o0, o1, o2, o3;
  const double *xr, *xi;
  double hjr, hji;
  double w0r, w0i, w1r, w1i, w2r, w2i, w3r, w3i;
  const double *s0r, *s0i, *s1r, *s1i, *s2r, *s2i, *s3r, *s3i;
  double wa, wb, wd;
  const double *ar, *ai, *br, *bi, *dr, *di;
};

// Raw pointers only, so the wider clone shares no vectorized Eigen state.
#if defined(__GNUC__) && defined(__x86_64__) && !defined(__clang__)
__attribute__((target_clones("avx512f", "arch=haswell", "default")))
#endif
void column_block(const Column& c, int i0, int i1, double* __restrict vr,
                  double* __restrict vi) {
  const double *hr = c.hr, *hi = c.hi, *ja = c.ja, *jb = c.jb, *jd = c.jd;
  const double *c0r = c.c0r, *c0i = c.c0i, *c1r = c.c1r, *c1i = c.c1i;
  const double *c2r = c.c2r, *c2i = c.c2i, *c3r = c.c3r, *c3i = c.c3i;
  const int o0 = c.o0, o1 = c.o1, o2 = c.o2, o3 = c.o3;
  const double *xr = c.xr, *xi = c.xi;
  const double hjr = c.hjr, hji = c.hji;
  const double w0r = c.w0r, w0i = c.w0i, w1r = c.w1r, w1i = c.w1i;
  const double w2r = c.w2r, w2i = c.w2i, w3r = c.w3r, w3i = c.w3i;
  const double *s0r = c.s0r, *s0i = c.s0i, *s1r = c.s1r, *s1i = c.s1i;
  const double *s2r = c.s2r, *s2i = c.s2i, *s3r = c.s3r, *s3i = c.s3i;
  const double wa = c.wa, wb = c.wb, wd = c.wd;
  const double *ar = c.ar, *ai = c.ai, *br = c.br, *bi = c.bi, *dr = c.dr, *di = c.di;
#pragma GCC ivdep
  for (int i = i0; i <= i1; ++i) {
    const double er = hr[i] - hjr, ei = hi[i] - hji;
    double re = er * xr[i] - ei * xi[i];
    double im = er * xi[i] + ei * xr[i];
    // Row-side couplings read column j shifted by the offset.
    re += c0r[i] * xr[i + o0] - c0i[i] * xi[i + o0] + c1r[i] * xr[i + o1] - c1i[i] * xi[i + o1] +
          c2r[i] * xr[i + o2] - c2i[i] * xi[i + o2] + c3r[i] * xr[i + o3] - c3i[i] * xi[i + o3];
    im += c0r[i] * xi[i + o0] + c0i[i] * xr[i + o0] + c1r[i] * xi[i + o1] + c1i[i] * xr[i + o1] +
          c2r[i] * xi[i + o2] + c2i[i] * xr[i + o2] + c3r[i] * xi[i + o3] + c3i[i] * xr[i + o3];
    re -= w0r * s0r[i] - w0i * s0i[i] + w1r * s1r[i] - w1i * s1i[i] + w2r * s2r[i] -
          w2i * s2i[i] + w3r * s3r[i] - w3i * s3i[i];
    im -= w0r * s0i[i] + w0i * s0r[i] + w1r * s1i[i] + w1i * s1r[i] + w2r * s2i[i] +
          w2i * s2r[i] + w3r * s3i[i] + w3i * s3r[i];
    const double fa = wa * ja[i], fb = wb * jb[i], fd = wd * jd[i];
    // −i·(re + i·im) = im − i·re
    vr[i - i0] = im + fa * ar[i] + fb * br[i] + fd * dr[i];
    vi[i - i0] = -re + fa * ai[i] + fb * bi[i] + fd * di[i];
  }
}

}  // namespace

template <class Emit>
void Generator::sweep(const SplitMatrix& rho, Emit&& emit) const {
  const int d = cfg_.side(), db = cfg_.dim_b;
  Column c{};
  c.hr = diag_re_.data();
  c.hi = diag_im_.data();
  c.ja = jump_a_.data();
  c.jb = jump_b_.data();
  c.jd = jump_bd_.data();
  c.c0r = coupling_re_[0].data(), c.c0i = coupling_im_[0].data();
  c.c1r = coupling_re_[1].data(), c.c1i = coupling_im_[1].data();
  c.c2r = coupling_re_[2].data(), c.c2i = coupling_im_[2].data();
  c.c3r = coupling_re_[3].data(), c.c3i = coupling_im_[3].data();
  c.o0 = offset_[0], c.o1 = offset_[1], c.o2 = offset_[2], c.o3 = offset_[3];
  // Row blocks keep the band of columns j ± (dim_b + 1) that feeds column j
  // resident in cache.
  constexpr int rows = 256;
  alignas(64) double vr[rows], vi[rows];
  for (int i0 = 0; i0 < d; i0 += rows) {
    for (int j = i0; j < d; ++j) {
      const int i1 = std::min(j, i0 + rows - 1);
      c.xr = rho.re(j);
      c.xi = rho.im(j);
      c.hjr = c.hr[j];
      c.hji = -c.hi[j];
      // Column-side couplings read column j + offset with weight conj(c_jk).
      auto side = [&](int k, const double* cre, const double* cim, double& wr, double& wi,
                      const double*& sr, const double*& si) {
        wr = cre[j];
        wi = -cim[j];
        const bool on = wr != 0.0 || wi != 0.0;
        sr = on ? rho.re(j + offset_[k]) : c.xr;
        si = on ? rho.im(j + offset_[k]) : c.xi;
      };
      side(0, c.c0r, c.c0i, c.w0r, c.w0i, c.s0r, c.s0i);
      side(1, c.c1r, c.c1i, c.w1r, c.w1i, c.s1r, c.s1i);
      side(2, c.c2r, c.c2i, c.w2r, c.w2i, c.s2r, c.s2i);
      side(3, c.c3r, c.c3i, c.w3r, c.w3i, c.s3r, c.s3i);
      c.wa = c.ja[j], c.wb = c.jb[j], c.wd = c.jd[j];
      c.ar = c.wa != 0.0 ? rho.re(j + db) + db : c.xr;
      c.ai = c.wa != 0.0 ? rho.im(j + db) + db : c.xi;
      c.br = c.wb != 0.0 ? rho.re(j + 1) + 1 : c.xr;
      c.bi = c.wb != 0.0 ? rho.im(j + 1) + 1 : c.xi;
      c.dr = c.wd != 0.0 ? rho.re(j - 1) - 1 : c.xr;
      c.di = c.wd != 0.0 ? rho.im(j - 1) - 1 : c.xi;
      column_block(c, i0, i1, vr, vi);
      if (i1 == j) vi[j - i0] = 0.0;
      emit(j, i0, i1, static_cast<const double*>(vr), static_cast<const double*>(vi));
    }
  }
}

void Generator::apply_split(const SplitMatrix& rho, SplitMatrix& out) const {
  sweep(rho, [&out](int j, int i0, int i1, const double* vr, const double* vi) {
    double* __restrict r = out.re(j);
    double* __restrict m = out.im(j);
    for (int i = i0; i <= i1; ++i) {
      r[i] = vr[i - i0];
      m[i] = vi[i - i0];
    }
  });
  out.mirror_upper();
}

void Generator::rk_stage(const SplitMatrix& rho, const SplitMatrix& base, double h,
                         SplitMatrix* next, SplitMatrix& acc, double w, bool fresh) const {
  sweep(rho, [&](int j, int i0, int i1, const double* vr, const double* vi) {
    const double* br = base.re(j);
    const double* bi = base.im(j);
    double* __restrict ar = acc.re(j);
    double* __restrict ai = acc.im(j);
    const double* sr = fresh ? br : ar;
    const double* si = fresh ? bi : ai;
#pragma GCC ivdep
    for (int i = i0; i <= i1; ++i) {
      ar[i] = sr[i] + w * vr[i - i0];
      ai[i] = si[i] + w * vi[i - i0];
    }
    if (!next) return;
    double* __restrict nr = next->re(j);
    double* __restrict ni = next->im(j);
    for (int i = i0; i <= i1; ++i) {
      nr[i] = br[i] + h * vr[i - i0];
      ni[i] = bi[i] + h * vi[i - i0];
    }
  });
}

Sparse Generator::superoperator() const {
  const int d = cfg_.side();
  if (d > 1024)
    throw BudgetExceeded("superoperator: side " + std::to_string(d) + " exceeds 1024");
  const Sparse id = identity(d);
  // vec(AXB) = (Bᵀ ⊗ A) vec(X)
  const Sparse heff_conj = h_eff_.conjugate();
  Sparse l = Complex(-I) * Sparse(Eigen::kroneckerProduct(id, h_eff_)) +
             I * Sparse(Eigen::kroneckerProduct(heff_conj, id));
  for (const auto& j : jumps_) l += Sparse(Eigen::kroneckerProduct(Sparse(j.conjugate()), j));
  l.makeCompressed();
  return l;
}

Generator build_generator(const ReducedParams& rp, const FockConfig& cfg) { return {rp, cfg}; }

EvolveResult evolve_rho(const DensityMatrix& rho0, const Generator& gen, double t_final,
                        const EvolveOptions& opts) {
  const auto& cfg = gen.config();
  if (rho0.config().dim_a != cfg.dim_a || rho0.config().dim_b != cfg.dim_b)
    throw ConfigError("evolve_rho: state and generator cutoffs differ");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ConfigError("t_final: must be >= 0");
  if (!(opts.dt > 0.0) || !(opts.sample_dt > 0.0))
    throw ConfigError("evolve_rho: dt and sample_dt must be > 0");

  const auto& rp = gen.params();
  const double rate = std::max({rp.omega_m, rp.kappa, std::abs(rp.detuning)});
  const double dt_cap = std::min(opts.dt, 0.01 / rate);
  const auto samples = std::max<long>(
      t_final > 0.0 ? 1 : 0, static_cast<long>(std::ceil(t_final / opts.sample_dt - 1e-9)));
  const double sample_dt = samples > 0 ? t_final / static_cast<double>(samples) : 0.0;
  const long steps = samples > 0 ? std::max<long>(1, static_cast<long>(std::ceil(sample_dt / dt_cap - 1e-9))) : 0;
  const double dt = steps > 0 ? sample_dt / static_cast<double>(steps) : dt_cap;

  EvolveResult res{{}, {}, rho0, 0, 0.0, 0.0, false, dt};
  const int d = cfg.side(), pad = gen.padding();
  SplitMatrix rho(rho0.entries(), pad);
  SplitMatrix t1(d, pad), t2 = t1, acc = t1;
  using Plane = Eigen::Map<Eigen::ArrayXd>;
  auto trace = [&] {
    double t = 0.0;
    for (int i = 0; i < d; ++i) t += rho.re(i)[i];
    return t;
  };

  auto record = [&](double t) {
    rho.mirror_upper();
    DensityMatrix dm(cfg, rho.to_matrix());
    Snapshot snap{t, moments_of(dm.entries(), cfg), dm.health(opts.check_positivity)};
    if (!snap.health.truncation_ok()) res.truncation_warning = true;
    res.snapshots.push_back(snap);
    if (opts.keep_matrices) res.matrices.push_back(std::move(dm));
  };

  record(0.0);
  for (long s = 0; s < samples; ++s) {
    for (long k = 0; k < steps; ++k) {
      const double before = trace();
      // Classic RK4, each stage fused with its update of the next input and
      // of the accumulated step. The kernel reads below the diagonal only
      // within `pad` subdiagonals.
      gen.rk_stage(rho, rho, 0.5 * dt, &t1, acc, dt / 6.0, true);
      t1.mirror_upper(pad);
      gen.rk_stage(t1, rho, 0.5 * dt, &t2, acc, dt / 3.0, false);
      t2.mirror_upper(pad);
      gen.rk_stage(t2, rho, dt, &t1, acc, dt / 3.0, false);
      t1.mirror_upper(pad);
      gen.rk_stage(t1, rho, 0.0, nullptr, acc, dt / 6.0, false);
      acc.mirror_upper(pad);
      std::swap(rho, acc);
      const double tr = trace();
      const double drift = std::abs(tr - before);
      res.max_step_trace_drift = std::max(res.max_step_trace_drift, drift);
      if (!std::isfinite(tr) || drift > 1e-6)
        throw StepTooLarge("evolve_rho: per-step trace drift " + io::format_number(drift) +
                           " exceeds 1e-6 (dt = " + io::format_number(dt) + ")");
      if (std::abs(tr - 1.0) > 1e-10) {
        Plane(rho.re_plane().data(), Eigen::Index(rho.re_plane().size())) /= tr;
        Plane(rho.im_plane().data(), Eigen::Index(rho.im_plane().size())) /= tr;
        ++res.renormalizations;
        res.total_trace_correction += std::abs(tr - 1.0);
      }
    }
    record(static_cast<double>(s + 1) * sample_dt);
  }
  rho.mirror_upper();
  res.final_state = DensityMatrix(cfg, rho.to_matrix());
  return res;
}

covariance::MomentState moments_from_rho(const DensityMatrix& rho) {
  return moments_of(rho.entries(), rho.config());
}

covariance::MomentState expectation_derivatives(const DensityMatrix& rho, const Generator& gen) {
  return moments_of(gen.apply(rho.entries()), rho.config());
}

void write_matrix(std::ostream& out, const DensityMatrix& rho) {
  const auto& cfg = rho.config();
  out << "# optocool density matrix (photon-major basis n*dim_b + m)\n";
  out << cfg.dim_a << ' ' << cfg.dim_b << '\n';
  const auto& m = rho.entries();
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << io::format_number(m(i, j).real()) << ' ' << io::format_number(m(i, j).imag());
    }
    out << '\n';
  }
}

DensityMatrix read_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#')
    throw ConfigError("density matrix: missing comment header");
  FockConfig cfg;
  if (!std::getline(in, line)) throw ConfigError("density matrix: missing dimensions line");
  {
    std::istringstream dims(line);
    if (!(dims >> cfg.dim_a >> cfg.dim_b)) throw ConfigError("density matrix: bad dimensions");
  }
  cfg.budget = std::max<std::size_t>(cfg.budget, static_cast<std::size_t>(std::max(cfg.side(), 0)));
  cfg.validate();
  const int d = cfg.side();
  Matrix m(d, d);
  for (int i = 0; i < d; ++i) {
    if (!std::getline(in, line)) throw ConfigError("density matrix: truncated at row " + std::to_string(i));
    std::istringstream row(line);
    std::string re, im;
    for (int j = 0; j < d; ++j) {
      if (!(row >> re >> im))
        throw ConfigError("density matrix: row " + std::to_string(i) + " is short");
      m(i, j) = Complex(io::parse_number(re, "rho"), io::parse_number(im, "rho"));
    }
  }
  return {cfg, std::move(m)};
}

}  // namespace optocool::lindblad
