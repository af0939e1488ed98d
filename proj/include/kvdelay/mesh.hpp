#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "kvdelay/model.hpp"

namespace kvdelay {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

struct Mesh {
  std::vector<double> nodes;
  std::array<std::size_t, 2> interface_indices{};  // nodes at alpha and beta
  std::vector<double> element_sizes;

  std::size_t n_elements() const { return element_sizes.size(); }
};

Mesh build_mesh(const WaveConfig& cfg, std::size_t n_elements_hint);

enum class MassKind { Consistent, Lumped };

struct DofMap {
  std::vector<Index> dof_of_node;  // -1 for eliminated nodes
  std::vector<std::size_t> node_of_dof;

  Index size() const { return static_cast<Index>(node_of_dof.size()); }
};

// Undelayed boundary feedback at L: adds kappa3*delta3 to the (L, L) damping entry.
struct BoundaryCoupling {
  bool active = false;
  Index dof = -1;
  double gain = 0.0;  // kappa3 * delta3
};

struct DelayCoupling {
  enum class Kind { None, BoundaryTraceAtL, DistributedGradient };
  Kind kind = Kind::None;
  double weight = 0.0;  // kappa3*delta2 at L, delta2 in the interior

  // Boundary trace.
  Index trace_dof = -1;

  // Distributed: dofs touching the KV elements, the per-element gradient operator
  // G (n_kv_elements x n_dof) and the element lengths, with D = G^T diag(h) G.
  std::vector<Index> kv_dofs;
  SparseMatrix gradient;
  Eigen::VectorXd kv_element_sizes;

  bool active() const { return kind != Kind::None; }
  // Width of the delayed snapshot: 1 at L, kv_dofs.size() in the interior.
  Index snapshot_width() const;
};

struct SemiDiscreteSystem {
  WaveConfig cfg;
  Mesh mesh;
  DofMap dofs;
  SparseMatrix M, K, D;
  BoundaryCoupling boundary;
  DelayCoupling delay;

  Index n_dof() const { return dofs.size(); }
  // delta1*D plus the boundary Robin term.
  SparseMatrix damping() const;
  // Restriction of V to the delayed quantity (trace at L or kv dofs).
  Eigen::VectorXd delay_trace(const Eigen::VectorXd& V) const;
  // Right-hand-side force from a delayed snapshot; enters as M V' = ... - delay_force.
  Eigen::VectorXd delay_force(const Eigen::VectorXd& snapshot) const;
  // Quadratic form measuring a snapshot: 1x1 identity at L, D restricted to kv dofs.
  SparseMatrix history_metric() const;
};

SemiDiscreteSystem assemble(const WaveConfig& cfg, const Mesh& mesh,
                            MassKind mass = MassKind::Consistent);

enum class RhoQuadrature { Matched, Trapezoid };

struct GeneratorOptions {
  std::size_t n_rho = 32;
  RhoQuadrature quadrature = RhoQuadrature::Matched;
  Index max_dim = 20000;
};

struct BlockLayout {
  Index n_dof = 0;
  Index n_rho = 0;
  Index eta_width = 0;  // 1 at L, number of KV elements in the interior
  Index u_begin() const { return 0; }
  Index v_begin() const { return n_dof; }
  Index eta_begin() const { return 2 * n_dof; }
  Index n_eta() const { return n_rho * eta_width; }
  Index size() const { return 2 * n_dof + n_eta(); }
};

// Sparse descriptor form E X' = F X with energy weight P (E_h = X^T P X / 2).
// The eta block stores the delayed quantity at rho_j = j/n_rho, j = 1..n_rho: the
// trace at L, or the per-element gradient on the KV elements in the interior.
struct AugmentedSystem {
  BlockLayout layout;
  SparseMatrix E, F, P;
  RhoQuadrature quadrature = RhoQuadrature::Matched;
  std::string config_hash;
};

AugmentedSystem assemble_augmented(const SemiDiscreteSystem& sys, const GeneratorOptions& opt);

struct GeneratorMatrix {
  Eigen::MatrixXd A;
  Eigen::MatrixXd P;
  BlockLayout layout;
  double lambda_cut = 0.0;
  std::string config_hash;
};

GeneratorMatrix assemble_generator(const WaveConfig& cfg, const Mesh& mesh,
                                   const GeneratorOptions& opt = {});
GeneratorMatrix assemble_generator(const SemiDiscreteSystem& sys, const GeneratorOptions& opt);

// P*A assembled without inverting M; its symmetric part is the discrete dissipation form.
Eigen::MatrixXd energy_form(const AugmentedSystem& aug);

// Upwind matrix for eta' = -(1/tau) d_rho eta with zero inflow.
Eigen::MatrixXd transport_block(std::size_t n_rho, double tau);

// Frequency below which the P1 mesh resolves the continuous spectrum.
double resolution_cutoff(const WaveConfig& cfg, std::size_t n_elements);

void write_matrix_market(const std::string& path, const SparseMatrix& m);
void write_matrix_market(const std::string& path, const Eigen::MatrixXd& m);

}  // namespace kvdelay
