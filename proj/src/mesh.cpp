#include "kvdelay/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <Eigen/SparseCholesky>

#include "kvdelay/io.hpp"

namespace kvdelay {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void add_element(Triplets& t, Index a, Index b, double kaa, double kab) {
  if (a >= 0) t.emplace_back(a, a, kaa);
  if (b >= 0) t.emplace_back(b, b, kaa);
  if (a >= 0 && b >= 0) {
    t.emplace_back(a, b, kab);
    t.emplace_back(b, a, kab);
  }
}

SparseMatrix from_triplets(Index rows, Index cols, const Triplets& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

bool in_kv_region(const WaveConfig& cfg, double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  return mid > cfg.alpha && mid < cfg.beta;
}

}  // namespace

Mesh build_mesh(const WaveConfig& cfg, std::size_t n_elements_hint) {
  check_structure(cfg);
  if (n_elements_hint < 4) throw Error("n_elements_hint must be >= 4");

  struct Piece {
    double lo, hi;
  };
  std::vector<Piece> pieces;
  if (cfg.alpha > 0) pieces.push_back({0.0, cfg.alpha});
  pieces.push_back({cfg.alpha, cfg.beta});
  if (cfg.beta < cfg.L) pieces.push_back({cfg.beta, cfg.L});

  Mesh mesh;
  mesh.nodes.push_back(0.0);
  for (const auto& p : pieces) {
    const auto count = std::max<long>(
        1, std::lround(static_cast<double>(n_elements_hint) * (p.hi - p.lo) / cfg.L));
    for (long j = 1; j < count; ++j)
      mesh.nodes.push_back(p.lo + (p.hi - p.lo) * static_cast<double>(j) / static_cast<double>(count));
    mesh.nodes.push_back(p.hi);
  }
  auto index_of = [&](double v) {
    return static_cast<std::size_t>(std::find(mesh.nodes.begin(), mesh.nodes.end(), v) - mesh.nodes.begin());
  };
  mesh.interface_indices = {index_of(cfg.alpha), index_of(cfg.beta)};
  for (std::size_t i = 0; i + 1 < mesh.nodes.size(); ++i)
    mesh.element_sizes.push_back(mesh.nodes[i + 1] - mesh.nodes[i]);
  return mesh;
}

Index DelayCoupling::snapshot_width() const {
  switch (kind) {
    case Kind::BoundaryTraceAtL: return 1;
    case Kind::DistributedGradient: return static_cast<Index>(kv_dofs.size());
    case Kind::None: return 0;
  }
  return 0;
}

SparseMatrix SemiDiscreteSystem::damping() const {
  SparseMatrix C = cfg.delta1 * D;
  if (boundary.active && boundary.gain != 0.0) C.coeffRef(boundary.dof, boundary.dof) += boundary.gain;
  C.makeCompressed();
  return C;
}

Eigen::VectorXd SemiDiscreteSystem::delay_trace(const Eigen::VectorXd& V) const {
  switch (delay.kind) {
    case DelayCoupling::Kind::BoundaryTraceAtL: return Eigen::VectorXd::Constant(1, V[delay.trace_dof]);
    case DelayCoupling::Kind::DistributedGradient: {
      Eigen::VectorXd s(static_cast<Index>(delay.kv_dofs.size()));
      for (std::size_t i = 0; i < delay.kv_dofs.size(); ++i) s[static_cast<Index>(i)] = V[delay.kv_dofs[i]];
      return s;
    }
    case DelayCoupling::Kind::None: break;
  }
  return {};
}

Eigen::VectorXd SemiDiscreteSystem::delay_force(const Eigen::VectorXd& snapshot) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n_dof());
  if (snapshot.size() != delay.snapshot_width()) throw ShapeError("delayed snapshot has the wrong width");
  switch (delay.kind) {
    case DelayCoupling::Kind::BoundaryTraceAtL:
      f[delay.trace_dof] = delay.weight * snapshot[0];
      break;
    case DelayCoupling::Kind::DistributedGradient: {
      Eigen::VectorXd z = Eigen::VectorXd::Zero(n_dof());
      for (std::size_t i = 0; i < delay.kv_dofs.size(); ++i) z[delay.kv_dofs[i]] = snapshot[static_cast<Index>(i)];
      f = delay.weight * (D * z);
      break;
    }
    case DelayCoupling::Kind::None: break;
  }
  return f;
}

SparseMatrix SemiDiscreteSystem::history_metric() const {
  if (delay.kind != DelayCoupling::Kind::DistributedGradient) {
    SparseMatrix one(1, 1);
    one.insert(0, 0) = 1.0;
    return one;
  }
  const auto w = static_cast<Index>(delay.kv_dofs.size());
  std::vector<Index> pos(static_cast<std::size_t>(n_dof()), -1);
  for (Index i = 0; i < w; ++i) pos[static_cast<std::size_t>(delay.kv_dofs[static_cast<std::size_t>(i)])] = i;
  Triplets t;
  for (Index c = 0; c < D.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(D, c); it; ++it) {
      const Index r = pos[static_cast<std::size_t>(it.row())], s = pos[static_cast<std::size_t>(it.col())];
      if (r >= 0 && s >= 0) t.emplace_back(r, s, it.value());
    }
  return from_triplets(w, w, t);
}

SemiDiscreteSystem assemble(const WaveConfig& cfg, const Mesh& mesh, MassKind mass) {
  check_structure(cfg);
  const auto& x = mesh.nodes;
  if (x.size() < 3 || mesh.element_sizes.size() != x.size() - 1 || x.front() != 0.0 ||
      x.back() != cfg.L || mesh.interface_indices[0] >= x.size() ||
      mesh.interface_indices[1] >= x.size() || x[mesh.interface_indices[0]] != cfg.alpha ||
      x[mesh.interface_indices[1]] != cfg.beta)
    throw Error("mesh and config interfaces disagree");
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    if (!(x[i + 1] > x[i])) throw Error("mesh nodes must be strictly increasing");

  SemiDiscreteSystem sys;
  sys.cfg = cfg;
  sys.mesh = mesh;
  const bool fixed_right = cfg.scenario == Scenario::InteriorKvInteriorDelay;
  sys.dofs.dof_of_node.assign(x.size(), -1);
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (fixed_right && i + 1 == x.size()) break;
    sys.dofs.dof_of_node[i] = static_cast<Index>(sys.dofs.node_of_dof.size());
    sys.dofs.node_of_dof.push_back(i);
  }
  const Index n = sys.dofs.size();

  Triplets tm, tk, td;
  for (std::size_t e = 0; e + 1 < x.size(); ++e) {
    const double h = mesh.element_sizes[e];
    const Index a = sys.dofs.dof_of_node[e], b = sys.dofs.dof_of_node[e + 1];
    const double k = cfg.kappa_on(x[e], x[e + 1]);
    add_element(tk, a, b, k / h, -k / h);
    if (mass == MassKind::Consistent)
      add_element(tm, a, b, h / 3.0, h / 6.0);
    else
      add_element(tm, a, b, h / 2.0, 0.0);
    if (in_kv_region(cfg, x[e], x[e + 1])) add_element(td, a, b, 1.0 / h, -1.0 / h);
  }
  sys.M = from_triplets(n, n, tm);
  sys.K = from_triplets(n, n, tk);
  sys.D = from_triplets(n, n, td);
  sys.M.prune(0.0);

  if (has_boundary_delay(cfg.scenario)) {
    sys.boundary.active = true;
    sys.boundary.dof = n - 1;
    sys.boundary.gain = cfg.kappa3 * cfg.delta3;
  }

  if (cfg.delta2 != 0.0) {
    if (has_boundary_delay(cfg.scenario)) {
      sys.delay.kind = DelayCoupling::Kind::BoundaryTraceAtL;
      sys.delay.weight = cfg.kappa3 * cfg.delta2;
      sys.delay.trace_dof = n - 1;
    } else {
      sys.delay.kind = DelayCoupling::Kind::DistributedGradient;
      sys.delay.weight = cfg.delta2;
      std::vector<std::size_t> kv_elements;
      for (std::size_t e = 0; e + 1 < x.size(); ++e)
        if (in_kv_region(cfg, x[e], x[e + 1])) kv_elements.push_back(e);
      std::vector<Index> dofs;
      for (auto e : kv_elements)
        for (auto node : {e, e + 1})
          if (sys.dofs.dof_of_node[node] >= 0) dofs.push_back(sys.dofs.dof_of_node[node]);
      std::sort(dofs.begin(), dofs.end());
      dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
      sys.delay.kv_dofs = dofs;
      Triplets tg;
      sys.delay.kv_element_sizes.resize(static_cast<Index>(kv_elements.size()));
      for (std::size_t r = 0; r < kv_elements.size(); ++r) {
        const auto e = kv_elements[r];
        const double h = mesh.element_sizes[e];
        sys.delay.kv_element_sizes[static_cast<Index>(r)] = h;
        if (auto a = sys.dofs.dof_of_node[e]; a >= 0) tg.emplace_back(static_cast<Index>(r), a, -1.0 / h);
        if (auto b = sys.dofs.dof_of_node[e + 1]; b >= 0) tg.emplace_back(static_cast<Index>(r), b, 1.0 / h);
      }
      sys.delay.gradient = from_triplets(static_cast<Index>(kv_elements.size()), n, tg);
    }
  }
  return sys;
}

AugmentedSystem assemble_augmented(const SemiDiscreteSystem& sys, const GeneratorOptions& opt) {
  if (opt.n_rho < 2) throw Error("n_rho must be >= 2");
  const auto& cfg = sys.cfg;
  const bool boundary = sys.delay.kind == DelayCoupling::Kind::BoundaryTraceAtL;
  const bool interior = sys.delay.kind == DelayCoupling::Kind::DistributedGradient;

  BlockLayout lay;
  lay.n_dof = sys.n_dof();
  if (sys.delay.active()) {
    lay.n_rho = static_cast<Index>(opt.n_rho);
    lay.eta_width = boundary ? 1 : sys.delay.gradient.rows();
  }
  if (lay.size() > opt.max_dim)
    throw DimensionError("generator dimension " + std::to_string(lay.size()) + " exceeds cap " +
                         std::to_string(opt.max_dim));

  const Index n = lay.n_dof, N = lay.size(), w = lay.eta_width;
  const double rate = static_cast<double>(lay.n_rho) / cfg.tau;
  const double drho = lay.n_rho > 0 ? 1.0 / static_cast<double>(lay.n_rho) : 0.0;
  const double scale = boundary ? cfg.tau : cfg.tau * std::abs(cfg.delta2);
  const SparseMatrix C = sys.damping();

  auto eta = [&](Index j, Index i) { return lay.eta_begin() + (j - 1) * w + i; };  // j = 1..n_rho

  Triplets te, tf, tp;
  for (Index i = 0; i < n; ++i) {
    te.emplace_back(i, i, 1.0);
    tf.emplace_back(i, n + i, 1.0);
  }
  auto copy_into = [](Triplets& t, const SparseMatrix& m, Index r0, Index c0, double s) {
    for (Index c = 0; c < m.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(m, c); it; ++it) t.emplace_back(r0 + it.row(), c0 + it.col(), s * it.value());
  };
  copy_into(te, sys.M, n, n, 1.0);
  copy_into(tf, sys.K, n, 0, -1.0);
  copy_into(tf, C, n, n, -1.0);
  copy_into(tp, sys.K, 0, 0, 1.0);
  copy_into(tp, sys.M, n, n, 1.0);

  if (sys.delay.active()) {
    const Index m = lay.n_rho;
    for (Index j = 1; j <= m; ++j)
      for (Index i = 0; i < w; ++i) {
        te.emplace_back(eta(j, i), eta(j, i), 1.0);
        tf.emplace_back(eta(j, i), eta(j, i), -rate);
        if (j > 1) tf.emplace_back(eta(j, i), eta(j - 1, i), rate);
        const double qw = (opt.quadrature == RhoQuadrature::Trapezoid && j == m) ? 0.5 * drho : drho;
        const double metric = boundary ? 1.0 : sys.delay.kv_element_sizes[i];
        tp.emplace_back(eta(j, i), eta(j, i), scale * qw * metric);
      }
    if (boundary) {
      const Index L = sys.delay.trace_dof;
      tf.emplace_back(eta(1, 0), n + L, rate);
      tf.emplace_back(n + L, eta(m, 0), -sys.delay.weight);
      if (opt.quadrature == RhoQuadrature::Trapezoid) tp.emplace_back(n + L, n + L, scale * 0.5 * drho);
    } else if (interior) {
      const SparseMatrix& G = sys.delay.gradient;
      copy_into(tf, G, eta(1, 0), n, rate);
      SparseMatrix coupling = (G.transpose() * sys.delay.kv_element_sizes.asDiagonal()).eval();
      copy_into(tf, coupling, n, eta(m, 0), -sys.delay.weight);
      if (opt.quadrature == RhoQuadrature::Trapezoid) copy_into(tp, sys.D, n, n, scale * 0.5 * drho);
    }
  }

  AugmentedSystem aug;
  aug.layout = lay;
  aug.E = from_triplets(N, N, te);
  aug.F = from_triplets(N, N, tf);
  aug.P = from_triplets(N, N, tp);
  aug.quadrature = opt.quadrature;
  aug.config_hash = config_hash(cfg);
  return aug;
}

namespace {

// Solves the V rows of E X = F; the other blocks of E are identities.
Eigen::MatrixXd descriptor_to_dense(const SemiDiscreteSystem& sys, const AugmentedSystem& aug) {
  const auto& lay = aug.layout;
  Eigen::MatrixXd A = Eigen::MatrixXd(aug.F);
  Eigen::SimplicialLDLT<SparseMatrix> mass(sys.M);
  if (mass.info() != Eigen::Success) throw Error("mass matrix factorization failed");
  const Eigen::MatrixXd rows = A.middleRows(lay.v_begin(), lay.n_dof);
  A.middleRows(lay.v_begin(), lay.n_dof) = mass.solve(rows);
  return A;
}

}  // namespace

GeneratorMatrix assemble_generator(const SemiDiscreteSystem& sys, const GeneratorOptions& opt) {
  const AugmentedSystem aug = assemble_augmented(sys, opt);
  GeneratorMatrix gen;
  gen.layout = aug.layout;
  gen.A = descriptor_to_dense(sys, aug);
  gen.P = Eigen::MatrixXd(aug.P);
  gen.lambda_cut = resolution_cutoff(sys.cfg, sys.mesh.n_elements());
  gen.config_hash = aug.config_hash;
  return gen;
}

GeneratorMatrix assemble_generator(const WaveConfig& cfg, const Mesh& mesh, const GeneratorOptions& opt) {
  return assemble_generator(assemble(cfg, mesh), opt);
}

Eigen::MatrixXd energy_form(const AugmentedSystem& aug) {
  const auto& lay = aug.layout;
  // Outside the trapezoid variant, P E^{-1} = blkdiag(K, I, W) and no solve is needed.
  const Index v0 = lay.v_begin(), v1 = lay.v_begin() + lay.n_dof;
  Triplets tl;
  for (Index c = 0; c < aug.P.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(aug.P, c); it; ++it)
      if (it.row() < v0 || it.row() >= v1) tl.emplace_back(it.row(), it.col(), it.value());
  for (Index i = v0; i < v1; ++i) tl.emplace_back(i, i, 1.0);
  const SparseMatrix left = from_triplets(lay.size(), lay.size(), tl);
  Eigen::MatrixXd PA = Eigen::MatrixXd(left * aug.F);
  if (aug.quadrature == RhoQuadrature::Trapezoid) {
    // Extra V-block weight X = P_VV - M: add X M^{-1} F_V.
    const SparseMatrix Pvv = aug.P.block(lay.v_begin(), lay.v_begin(), lay.n_dof, lay.n_dof);
    const SparseMatrix M = aug.E.block(lay.v_begin(), lay.v_begin(), lay.n_dof, lay.n_dof);
    const SparseMatrix X = Pvv - M;
    Eigen::SimplicialLDLT<SparseMatrix> mass(M);
    const Eigen::MatrixXd Fv = Eigen::MatrixXd(aug.F.middleRows(lay.v_begin(), lay.n_dof));
    PA.middleRows(lay.v_begin(), lay.n_dof) += X * mass.solve(Fv);
  }
  return PA;
}

Eigen::MatrixXd transport_block(std::size_t n_rho, double tau) {
  const auto m = static_cast<Index>(n_rho);
  const double rate = static_cast<double>(n_rho) / tau;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (Index j = 0; j < m; ++j) {
    T(j, j) = -rate;
    if (j > 0) T(j, j - 1) = rate;
  }
  return T;
}

double resolution_cutoff(const WaveConfig& cfg, std::size_t n_elements) {
  return 0.3 * std::numbers::pi * static_cast<double>(n_elements) * std::sqrt(cfg.kappa_min()) / cfg.L;
}

void write_matrix_market(const std::string& path, const SparseMatrix& m) {
  std::string text = "%%MatrixMarket matrix coordinate real general\n";
  text += std::to_string(m.rows()) + " " + std::to_string(m.cols()) + " " + std::to_string(m.nonZeros()) + "\n";
  char buf[96];
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n", static_cast<long long>(it.row() + 1),
                    static_cast<long long>(it.col() + 1), it.value());
      text += buf;
    }
  write_file_atomic(path, text);
}

void write_matrix_market(const std::string& path, const Eigen::MatrixXd& m) {
  write_matrix_market(path, SparseMatrix(m.sparseView(1.0, 0.0)));
}

}  // namespace kvdelay
