#include "redmf/scenario.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace redmf {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view v) {
  double x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw std::invalid_argument("not a number");
  return x;
}

template <class Int>
Int to_int(std::string_view v) {
  Int x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw std::invalid_argument("not an integer");
  return x;
}

std::string fmt(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general);
  return std::string(buf, r.ptr);
}

template <class E>
struct Names {
  std::vector<std::pair<E, const char*>> items;
  E parse(std::string_view v) const {
    for (auto& [e, n] : items)
      if (v == n) return e;
    throw std::invalid_argument("unknown value");
  }
  const char* name(E e) const {
    for (auto& [x, n] : items)
      if (x == e) return n;
    return "?";
  }
};

const Names<LossKind> kLossNames{{{LossKind::Red, "red"},
                                  {LossKind::DropTail, "droptail"},
                                  {LossKind::Constant, "constant"}}};
const Names<RedMode> kModeNames{{{RedMode::Instantaneous, "instantaneous"},
                                 {RedMode::Ewma, "ewma"}}};
const Names<StartMode> kStartNames{{{StartMode::Warm, "warm"},
                                    {StartMode::Cold, "cold"},
                                    {StartMode::Equilibrium, "equilibrium"}}};

struct Field {
  std::function<void(Scenario&, std::string_view)> set;
  std::function<std::string(const Scenario&)> get;
};

Field real(double Scenario::*m) {
  return {[m](Scenario& s, std::string_view v) { s.*m = to_double(v); },
          [m](const Scenario& s) { return fmt(s.*m); }};
}
Field red_real(double REDConfig::*m) {
  return {[m](Scenario& s, std::string_view v) { s.red.*m = to_double(v); },
          [m](const Scenario& s) { return fmt(s.red.*m); }};
}
template <class E>
Field named(E Scenario::*m, const Names<E>& names) {
  return {[m, &names](Scenario& s, std::string_view v) { s.*m = names.parse(v); },
          [m, &names](const Scenario& s) { return std::string(names.name(s.*m)); }};
}

// Emission order follows this table.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> f = {
      {"capacity_bps", real(&Scenario::capacity_bps)},
      {"packet_bytes", real(&Scenario::packet_bytes)},
      {"overhead_bytes", real(&Scenario::overhead_bytes)},
      {"prop_delay_s", real(&Scenario::prop_delay_s)},
      {"buffer_delay_s", real(&Scenario::buffer_delay_s)},
      {"n_users",
       {[](Scenario& s, std::string_view v) { s.n_users = to_int<int>(v); },
        [](const Scenario& s) { return std::to_string(s.n_users); }}},
      {"w_max", real(&Scenario::w_max)},
      {"loss_model", named(&Scenario::loss_model, kLossNames)},
      {"red.min_th_s", red_real(&REDConfig::min_th)},
      {"red.max_th_s", red_real(&REDConfig::max_th)},
      {"red.p_max", red_real(&REDConfig::p_max)},
      {"red.w_q", red_real(&REDConfig::w_q)},
      {"red.mode", named(&Scenario::red_mode, kModeNames)},
      {"constant.k", real(&Scenario::constant_k)},
      {"t_end_s", real(&Scenario::t_end_s)},
      {"warmup_s", real(&Scenario::warmup_s)},
      {"dt_s", real(&Scenario::dt_s)},
      {"sample_interval_s", real(&Scenario::sample_interval_s)},
      {"cells",
       {[](Scenario& s, std::string_view v) { s.cells = to_int<std::size_t>(v); },
        [](const Scenario& s) { return std::to_string(s.cells); }}},
      {"start", named(&Scenario::start, kStartNames)},
      {"seed",
       {[](Scenario& s, std::string_view v) { s.seed = to_int<std::uint64_t>(v); },
        [](const Scenario& s) { return std::to_string(s.seed); }}},
      {"out",
       {[](Scenario& s, std::string_view v) { s.out = std::string(v); },
        [](const Scenario& s) { return s.out; }}},
  };
  return f;
}

const Field* find_field(std::string_view key) {
  static const auto index = [] {
    std::map<std::string_view, const Field*> m;
    for (const auto& [k, f] : fields()) m[k] = &f;
    return m;
  }();
  const auto it = index.find(key);
  return it == index.end() ? nullptr : it->second;
}

}  // namespace

const char* to_string(LossKind k) { return kLossNames.name(k); }

NetworkParams Scenario::network() const {
  return make_network_params(capacity_bps, packet_bytes, overhead_bytes,
                             prop_delay_s, buffer_delay_s, n_users, w_max);
}

LossModel Scenario::loss() const {
  switch (loss_model) {
    case LossKind::Red:
      red.validate();
      return RedLoss{red, red_mode};
    case LossKind::DropTail:
      return DropTailLoss{buffer_delay_s};
    case LossKind::Constant:
      if (!(constant_k >= 0 && constant_k < 1))
        throw Error(ErrorCode::InvalidArgument, "constant.k must be in [0, 1)");
      return ConstantLoss{constant_k};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown loss model");
}

SimOptions Scenario::sim_options() const {
  if (!(t_end_s > 0) || warmup_s < 0 || warmup_s >= t_end_s)
    throw Error(ErrorCode::InvalidArgument, "need 0 <= warmup_s < t_end_s");
  SimOptions o;
  o.cells = cells;
  o.dt = dt_s;
  o.t_end = t_end_s;
  o.warmup = warmup_s;
  o.sample_interval = sample_interval_s;
  o.start = start;
  return o;
}

void set_scenario_key(Scenario& s, std::string_view key, std::string_view value) {
  const Field* f = find_field(key);
  if (!f) throw Error(ErrorCode::Parse, "unknown key '" + std::string(key) + "'");
  try {
    f->set(s, trim(value));
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::Parse,
                "bad value '" + std::string(value) + "' for " + std::string(key));
  }
}

std::string get_scenario_key(const Scenario& s, std::string_view key) {
  const Field* f = find_field(key);
  if (!f) throw Error(ErrorCode::Parse, "unknown key '" + std::string(key) + "'");
  return f->get(s);
}

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + why);
    };
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!seen.insert(std::string(key)).second)
      fail("duplicate key '" + std::string(key) + "'");
    try {
      set_scenario_key(s, key, value);
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string emit_scenario(const Scenario& s) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(s) + "\n";
  return out;
}

}  // namespace redmf
