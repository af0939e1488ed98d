#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "kvdelay/mesh.hpp"
#include "kvdelay/model.hpp"

namespace kvdelay {

// Ring of the last depth+1 snapshots of the delayed quantity, newest at lag 0.
class HistoryBuffer {
 public:
  HistoryBuffer() = default;
  HistoryBuffer(double stride, std::size_t depth, Index width);

  double stride() const { return stride_; }
  std::size_t depth() const { return depth_; }
  Index width() const { return width_; }
  double window() const { return stride_ * static_cast<double>(depth_); }

  // Snapshot recorded k steps ago, 0 <= k <= depth.
  const Eigen::VectorXd& at_lag_steps(std::size_t k) const;
  // Drops the oldest snapshot.
  void push(const Eigen::VectorXd& snapshot);
  void set_newest(const Eigen::VectorXd& snapshot);

 private:
  double stride_ = 0.0;
  std::size_t depth_ = 0;
  Index width_ = 0;
  std::vector<Eigen::VectorXd> ring_;
  std::size_t cursor_ = 0;  // slot of the newest snapshot
};

struct BufferShape {
  double stride = 0.0;
  std::vector<double> sample_points;  // x at which f0 is sampled: {L} or the kv dof nodes
};

BufferShape buffer_shape(const SemiDiscreteSystem& sys, double stride);

HistoryBuffer init_history(const WaveConfig& cfg, const BufferShape& shape);

// Integer multiples of the stride return stored snapshots; half-integer multiples
// return the average of the bracketing pair.
Eigen::VectorXd delayed_value(const HistoryBuffer& buffer, double lag);

// eta sampled at rho_j = j/n_rho, j = 1..n_rho (the generator's eta block layout),
// plus the inflow value at rho = 0.
struct RhoGrid {
  std::size_t n_rho = 0;
  Index width = 0;
  Eigen::VectorXd values;  // n_rho * width, rho-major
  Eigen::VectorXd inflow;  // width

  auto at(std::size_t j) const {  // j = 1..n_rho
    return values.segment(static_cast<Index>(j - 1) * width, width);
  }
  void synchronize(const Eigen::VectorXd& trace) { inflow = trace; }
};

// diag(h) over the KV elements in the interior, 1x1 identity at L.
SparseMatrix rho_grid_metric(const SemiDiscreteSystem& sys);

// History selector sampled on the rho grid; interior delay stores element gradients.
RhoGrid init_rho_grid(const SemiDiscreteSystem& sys, std::size_t n_rho);

// `metric` measures one snapshot: 1x1 identity at L, D restricted to the kv dofs for
// the buffer, diag(h) over KV elements for the rho grid.
double delay_energy(const HistoryBuffer& line, const WaveConfig& cfg, const SparseMatrix& metric,
                    RhoQuadrature q = RhoQuadrature::Matched);
double delay_energy(const RhoGrid& line, const WaveConfig& cfg, const SparseMatrix& metric,
                    RhoQuadrature q = RhoQuadrature::Matched);

// Columns lag, value_0, value_1, ...
std::string history_csv(const HistoryBuffer& line);

}  // namespace kvdelay
