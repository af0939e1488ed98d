#include "kvdelay/delay_line.hpp"

#include <cmath>

#include "kvdelay/io.hpp"

namespace kvdelay {

HistoryBuffer::HistoryBuffer(double stride, std::size_t depth, Index width)
    : stride_(stride), depth_(depth), width_(width), ring_(depth + 1, Eigen::VectorXd::Zero(width)) {
  if (!(stride > 0) || depth == 0) throw Error("history buffer needs stride > 0 and depth >= 1");
}

const Eigen::VectorXd& HistoryBuffer::at_lag_steps(std::size_t k) const {
  if (k > depth_) throw Error("lag beyond the delay window");
  return ring_[(cursor_ + ring_.size() - k) % ring_.size()];
}

void HistoryBuffer::push(const Eigen::VectorXd& snapshot) {
  if (snapshot.size() != width_) throw ShapeError("snapshot width mismatch");
  cursor_ = (cursor_ + 1) % ring_.size();
  ring_[cursor_] = snapshot;
}

void HistoryBuffer::set_newest(const Eigen::VectorXd& snapshot) {
  if (snapshot.size() != width_) throw ShapeError("snapshot width mismatch");
  ring_[cursor_] = snapshot;
}

BufferShape buffer_shape(const SemiDiscreteSystem& sys, double stride) {
  BufferShape shape{stride, {}};
  if (sys.delay.kind == DelayCoupling::Kind::BoundaryTraceAtL) {
    shape.sample_points.push_back(sys.cfg.L);
  } else {
    for (Index d : sys.delay.kv_dofs)
      shape.sample_points.push_back(sys.mesh.nodes[sys.dofs.node_of_dof[static_cast<std::size_t>(d)]]);
  }
  return shape;
}

HistoryBuffer init_history(const WaveConfig& cfg, const BufferShape& shape) {
  const double q = cfg.tau / shape.stride;
  const double m = std::round(q);
  if (m < 1 || std::abs(q - m) > 1e-12 * q) throw Error("tau is not an integer multiple of the stride");
  const auto depth = static_cast<std::size_t>(m);
  const auto width = static_cast<Index>(shape.sample_points.size());
  const bool spatial = !has_boundary_delay(cfg.scenario);
  HistoryBuffer buf(shape.stride, depth, width);
  // Oldest first so that the newest slot ends at lag 0.
  for (std::size_t k = depth + 1; k-- > 0;) {
    Eigen::VectorXd s(width);
    const double t = -static_cast<double>(k) * shape.stride;
    for (Index i = 0; i < width; ++i)
      s[i] = evaluate(cfg.initial.history, shape.sample_points[static_cast<std::size_t>(i)], t, cfg.L, spatial);
    buf.push(s);
  }
  return buf;
}

Eigen::VectorXd delayed_value(const HistoryBuffer& buffer, double lag) {
  if (lag < 0) throw Error("negative lag");
  const double q = lag / buffer.stride();
  const double tol = 1e-9 * std::max(1.0, q);
  if (q > static_cast<double>(buffer.depth()) + tol) throw Error("lag outside the delay window");
  const double whole = std::round(q);
  if (std::abs(q - whole) <= tol) return buffer.at_lag_steps(static_cast<std::size_t>(whole));
  const double lo = std::floor(q);
  if (std::abs(q - lo - 0.5) <= tol) {
    const auto k = static_cast<std::size_t>(lo);
    return 0.5 * (buffer.at_lag_steps(k) + buffer.at_lag_steps(k + 1));
  }
  throw Error("lag is not an integer or half-integer multiple of the stride");
}

SparseMatrix rho_grid_metric(const SemiDiscreteSystem& sys) {
  if (sys.delay.kind != DelayCoupling::Kind::DistributedGradient) return sys.history_metric();
  const auto& h = sys.delay.kv_element_sizes;
  SparseMatrix m(h.size(), h.size());
  for (Index i = 0; i < h.size(); ++i) m.insert(i, i) = h[i];
  m.makeCompressed();
  return m;
}

RhoGrid init_rho_grid(const SemiDiscreteSystem& sys, std::size_t n_rho) {
  RhoGrid g;
  g.n_rho = n_rho;
  const auto& cfg = sys.cfg;
  if (!sys.delay.active()) return g;
  const bool boundary = sys.delay.kind == DelayCoupling::Kind::BoundaryTraceAtL;
  g.width = boundary ? 1 : sys.delay.gradient.rows();
  g.values.resize(static_cast<Index>(n_rho) * g.width);
  auto sample = [&](double t) -> Eigen::VectorXd {
    if (boundary) return Eigen::VectorXd::Constant(1, evaluate(cfg.initial.history, cfg.L, t, cfg.L, false));
    // Nodal values on the free dofs, then element gradients; fixed nodes read as zero.
    Eigen::VectorXd z(sys.n_dof());
    for (Index d = 0; d < sys.n_dof(); ++d)
      z[d] = evaluate(cfg.initial.history, sys.mesh.nodes[sys.dofs.node_of_dof[static_cast<std::size_t>(d)]], t,
                      cfg.L, true);
    return sys.delay.gradient * z;
  };
  for (std::size_t j = 1; j <= n_rho; ++j)
    g.values.segment(static_cast<Index>(j - 1) * g.width, g.width) =
        sample(-cfg.tau * static_cast<double>(j) / static_cast<double>(n_rho));
  g.inflow = sample(0.0);
  return g;
}

namespace {

double weight_scale(const WaveConfig& cfg) {
  return has_boundary_delay(cfg.scenario) ? 0.5 * cfg.tau : 0.5 * cfg.tau * std::abs(cfg.delta2);
}

double measure(const SparseMatrix& metric, const Eigen::VectorXd& v) {
  if (metric.rows() != v.size()) throw ShapeError("metric and line widths differ");
  return v.dot(metric * v);
}

}  // namespace

double delay_energy(const HistoryBuffer& line, const WaveConfig& cfg, const SparseMatrix& metric,
                    RhoQuadrature q) {
  const std::size_t m = line.depth();
  const double dr = 1.0 / static_cast<double>(m);
  double sum = 0.0;
  if (q == RhoQuadrature::Matched) {
    // Cell averages of consecutive snapshots, matching the midpoint staging.
    for (std::size_t k = 1; k <= m; ++k)
      sum += measure(metric, 0.5 * (line.at_lag_steps(k - 1) + line.at_lag_steps(k)));
  } else {
    for (std::size_t k = 0; k <= m; ++k)
      sum += ((k == 0 || k == m) ? 0.5 : 1.0) * measure(metric, line.at_lag_steps(k));
  }
  return weight_scale(cfg) * dr * sum;
}

double delay_energy(const RhoGrid& line, const WaveConfig& cfg, const SparseMatrix& metric,
                    RhoQuadrature q) {
  if (line.n_rho == 0) return 0.0;
  const double dr = 1.0 / static_cast<double>(line.n_rho);
  double sum = 0.0;
  for (std::size_t j = 1; j <= line.n_rho; ++j) {
    const double w = (q == RhoQuadrature::Trapezoid && j == line.n_rho) ? 0.5 : 1.0;
    sum += w * measure(metric, line.at(j));
  }
  if (q == RhoQuadrature::Trapezoid) sum += 0.5 * measure(metric, line.inflow);
  return weight_scale(cfg) * dr * sum;
}

std::string history_csv(const HistoryBuffer& line) {
  std::vector<std::string> header{"lag"};
  for (Index i = 0; i < line.width(); ++i) header.push_back("value_" + std::to_string(i));
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k <= line.depth(); ++k) {
    std::vector<double> row{static_cast<double>(k) * line.stride()};
    const auto& s = line.at_lag_steps(k);
    row.insert(row.end(), s.data(), s.data() + s.size());
    rows.push_back(std::move(row));
  }
  return csv_text(header, rows);
}

}  // namespace kvdelay
