#include "redmf/model.hpp"

#include <cmath>
#include <numeric>

namespace redmf {

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}
}  // namespace

void NetworkParams::validate() const {
  require(capacity_per_user > 0, "capacity_per_user must be > 0");
  require(prop_delay > 0, "prop_delay must be > 0");
  require(n_users > 0, "n_users must be > 0");
  require(w_max >= 2, "w_max must be >= 2");
  require(buffer_delay >= 0, "buffer_delay must be >= 0");
  require(packet_size > 0, "packet_size must be > 0");
}

NetworkParams make_network_params(double capacity_bps, double packet_bytes,
                                  double overhead_bytes, double prop_delay,
                                  double buffer_delay, int n_users,
                                  double w_max) {
  require(n_users > 0, "n_users must be > 0");
  require(packet_bytes + overhead_bytes > 0, "packet size must be > 0");
  NetworkParams p;
  p.packet_size = packet_bytes + overhead_bytes;
  p.capacity_per_user = capacity_bps / (8.0 * p.packet_size) / n_users;
  p.prop_delay = prop_delay;
  p.n_users = n_users;
  p.w_max = w_max;
  p.buffer_delay = buffer_delay;
  p.validate();
  return p;
}

void REDConfig::validate() const {
  require(min_th >= 0 && min_th < max_th, "RED needs 0 <= min_th < max_th");
  require(p_max > 0 && p_max <= 1, "RED p_max must be in (0, 1]");
  require(w_q > 0 && w_q <= 1, "RED w_q must be in (0, 1]");
}

double red_drop_probability(const REDConfig& cfg, double q) {
  if (q <= cfg.min_th) return 0.0;
  if (q < cfg.max_th) return cfg.epsilon() * (q - cfg.min_th);
  if (q == cfg.max_th) return cfg.p_max;
  return 1.0;
}

double units_convert(const NetworkParams& params, double value, Unit from,
                     Unit to) {
  if (from == to) return value;
  const double pkt_rate = params.aggregate_capacity();
  const double bits_per_packet = 8.0 * params.packet_size;
  auto is_queue = [](Unit u) { return u == Unit::Packets || u == Unit::Seconds; };
  if (is_queue(from) != is_queue(to))
    throw Error(ErrorCode::InvalidArgument,
                "incompatible units: cannot convert a queue size to a rate");
  switch (from) {
    case Unit::Seconds: return value * pkt_rate;
    case Unit::Packets: return value / pkt_rate;
    case Unit::PacketsPerSecond: return value * bits_per_packet;
    case Unit::BitsPerSecond: return value / bits_per_packet;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown unit");
}

WindowDistribution::WindowDistribution(double w_max,
                                       std::vector<double> cell_mass,
                                       double mass_at_wmax)
    : w_max_(w_max), mass_(std::move(cell_mass)), atom_(mass_at_wmax) {
  require(w_max_ > 0, "w_max must be > 0");
  require(!mass_.empty(), "distribution needs at least one cell");
  require(atom_ >= 0 && atom_ <= 1, "mass at w_max must be in [0, 1]");
  for (double m : mass_)
    if (!(m >= 0)) throw Error(ErrorCode::Domain, "negative or NaN cell mass");
  if (!is_normalized())
    throw Error(ErrorCode::Domain, "window distribution is not normalized");
}

WindowDistribution WindowDistribution::unchecked(double w_max,
                                                 std::vector<double> cell_mass,
                                                 double mass_at_wmax) {
  WindowDistribution d;
  d.w_max_ = w_max;
  d.mass_ = std::move(cell_mass);
  d.atom_ = mass_at_wmax;
  return d;
}

WindowDistribution WindowDistribution::degenerate_at_wmax(double w_max,
                                                          std::size_t cells) {
  return WindowDistribution(w_max, std::vector<double>(cells, 0.0), 1.0);
}

WindowDistribution WindowDistribution::point_mass(double w_max,
                                                  std::size_t cells, double w) {
  require(w > 0 && w < w_max, "point mass must lie inside (0, w_max)");
  std::vector<double> m(cells, 0.0);
  auto idx = static_cast<std::size_t>(w / w_max * static_cast<double>(cells));
  m[std::min(idx, cells - 1)] = 1.0;
  return WindowDistribution(w_max, std::move(m), 0.0);
}

double WindowDistribution::total_mass() const {
  return std::accumulate(mass_.begin(), mass_.end(), 0.0) + atom_;
}

bool WindowDistribution::is_normalized(double tol) const {
  return std::abs(total_mass() - 1.0) <= tol;
}

}  // namespace redmf
