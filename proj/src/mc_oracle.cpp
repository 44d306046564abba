#include "redmf/mc_oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace redmf {

namespace {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::mt19937_64 flow_rng(std::uint64_t seed, std::uint64_t flow) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(flow), static_cast<std::uint32_t>(flow >> 32)};
  return std::mt19937_64(seq);
}

struct FlowTally {
  std::vector<double> cells;
  std::vector<double> units;  // unit bins, atom last
  double atom = 0, weight = 0, w1 = 0, w2 = 0;
  std::uint64_t events = 0;
};

template <class Fn>
void for_each_flow(int n_flows, int threads, Fn&& fn) {
  const int workers = std::max(1, std::min(threads, n_flows));
  if (workers == 1) {
    for (int f = 0; f < n_flows; ++f) fn(f);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (int f = next++; f < n_flows; f = next++) fn(f);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

void ack_event(FlowState& flow, double k, std::mt19937_64& rng) {
  if (uniform01(rng) < k) {
    flow.window = std::max(1.0, 0.5 * flow.window);
  } else {
    flow.window = std::min(flow.w_max, flow.window + 1.0 / flow.window);
  }
}

OracleResult run_oracle(const OracleOptions& o) {
  if (o.n_flows < 1) throw Error(ErrorCode::InvalidArgument, "oracle needs at least one flow");
  if (!(o.k >= 0 && o.k < 1)) throw Error(ErrorCode::InvalidArgument, "oracle loss must be in [0, 1)");
  if (!(o.w_max >= 1)) throw Error(ErrorCode::InvalidArgument, "oracle w_max must be >= 1");
  if (o.cells < 1) throw Error(ErrorCode::InvalidArgument, "oracle needs at least one cell");
  if (o.n_events < static_cast<std::uint64_t>(o.n_flows))
    throw Error(ErrorCode::InvalidArgument, "oracle needs at least one event per flow");

  const std::uint64_t burn =
      o.burn_in > 0 ? o.burn_in : static_cast<std::uint64_t>(1000 * o.w_max);
  const double dw = o.w_max / static_cast<double>(o.cells);
  const auto n_units = static_cast<std::size_t>(std::ceil(o.w_max));
  std::vector<FlowTally> tally(o.n_flows);

  for_each_flow(o.n_flows, o.threads, [&](int f) {
    auto rng = flow_rng(o.seed, static_cast<std::uint64_t>(f));
    FlowTally& t = tally[f];
    t.cells.assign(o.cells, 0.0);
    t.units.assign(n_units + 1, 0.0);
    FlowState flow{1.0, o.w_max};
    for (std::uint64_t i = 0; i < burn; ++i) ack_event(flow, o.k, rng);
    const std::uint64_t n = o.n_events / o.n_flows +
                            (static_cast<std::uint64_t>(f) < o.n_events % o.n_flows ? 1 : 0);
    for (std::uint64_t i = 0; i < n; ++i) {
      const double w = flow.window;
      const double dur = 1.0 / w;  // time to the next ACK, in RTTs
      if (w >= o.w_max) {
        t.atom += dur;
        t.units[n_units] += dur;
      } else {
        t.cells[std::min(o.cells - 1, static_cast<std::size_t>(w / dw))] += dur;
        t.units[std::min(n_units - 1, static_cast<std::size_t>(w))] += dur;
      }
      t.weight += dur;
      t.w1 += w * dur;
      t.w2 += w * w * dur;
      ack_event(flow, o.k, rng);
    }
    t.events = n;
  });

  // Merge in flow order so the result does not depend on thread timing.
  std::vector<double> cells(o.cells, 0.0);
  double atom = 0, weight = 0, w1 = 0, w2 = 0;
  OracleResult r;
  for (const auto& t : tally) {
    for (std::size_t i = 0; i < o.cells; ++i) cells[i] += t.cells[i];
    atom += t.atom;
    weight += t.weight;
    w1 += t.w1;
    w2 += t.w2;
    r.events += t.events;
  }
  for (double& c : cells) c /= weight;
  atom /= weight;
  r.mean = w1 / weight;
  r.second_moment = w2 / weight;
  r.mass_at_wmax = atom;
  r.dist = WindowDistribution::unchecked(o.w_max, std::move(cells), atom);

  if (o.n_flows < 2) {
    r.max_rel_se = std::numeric_limits<double>::infinity();
  } else {
    const double nf = o.n_flows;
    for (std::size_t b = 0; b <= n_units; ++b) {
      double s = 0, s2 = 0;
      for (const auto& t : tally) {
        const double x = t.units[b] / t.weight;
        s += x;
        s2 += x * x;
      }
      const double m = s / nf;
      if (m < 1e-3) continue;
      const double var = std::max(0.0, (s2 - nf * m * m) / (nf - 1));
      r.max_rel_se = std::max(r.max_rel_se, std::sqrt(var / nf) / m);
    }
  }
  r.insufficient_samples = !(r.max_rel_se <= 0.2);
  return r;
}

std::vector<double> coarse_bins(const WindowDistribution& dist, double width) {
  if (!(width > 0)) throw Error(ErrorCode::InvalidArgument, "bin width must be > 0");
  const auto n = static_cast<std::size_t>(std::ceil(dist.w_max() / width - 1e-9));
  std::vector<double> bins(n + 1, 0.0);
  const auto mass = dist.cell_mass();
  for (std::size_t i = 0; i < mass.size(); ++i)
    bins[std::min(n - 1, static_cast<std::size_t>(dist.cell_center(i) / width))] += mass[i];
  bins[n] = dist.mass_at_wmax();
  return bins;
}

double tv_distance(const WindowDistribution& a, const WindowDistribution& b,
                   double width) {
  if (a.w_max() != b.w_max())
    throw Error(ErrorCode::InvalidArgument, "distributions have different w_max");
  const auto x = coarse_bins(a, width), y = coarse_bins(b, width);
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
  return 0.5 * s;
}

std::vector<double> oracle_transient(const WindowDistribution& initial, double k,
                                     double rtt, const std::vector<double>& times,
                                     int n_flows, std::uint64_t seed) {
  if (n_flows < 1 || !(rtt > 0) || !(k >= 0 && k < 1))
    throw Error(ErrorCode::InvalidArgument, "oracle_transient needs flows, rtt > 0, k in [0,1)");
  if (!std::is_sorted(times.begin(), times.end()))
    throw Error(ErrorCode::InvalidArgument, "sample times must be sorted");

  // Inverse CDF over cells (uniform within a cell) and the atom.
  const auto mass = initial.cell_mass();
  std::vector<double> cdf(mass.size());
  double acc = 0;
  for (std::size_t i = 0; i < mass.size(); ++i) cdf[i] = acc += mass[i];
  const double total = acc + initial.mass_at_wmax();

  std::vector<double> sum(times.size(), 0.0);
  for (int f = 0; f < n_flows; ++f) {
    auto rng = flow_rng(seed, static_cast<std::uint64_t>(f));
    const double u = uniform01(rng) * total;
    FlowState flow{initial.w_max(), initial.w_max()};
    if (u < acc) {
      const auto i = static_cast<std::size_t>(
          std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      const double lo = i * initial.cell_width();
      flow.window = std::max(1.0, lo + uniform01(rng) * initial.cell_width());
    }
    double t = 0;
    std::size_t j = 0;
    while (j < times.size()) {
      const double next = t + rtt / flow.window;
      while (j < times.size() && times[j] < next) sum[j++] += flow.window;
      t = next;
      ack_event(flow, k, rng);
    }
  }
  for (double& s : sum) s /= n_flows;
  return sum;
}

}  // namespace redmf
