#include "bcounter/sim/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

namespace bcounter::sim {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != ',') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
std::optional<T> number(std::string_view s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

template <typename T>
std::optional<std::vector<T>> numbers(std::string_view s) {
  std::vector<T> out;
  for (auto w : words(s)) {
    auto v = number<T>(w);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

std::optional<bool> boolean(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  return std::nullopt;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  // Trim trailing zeros for readability; keeps output stable.
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

std::string join(const std::vector<int>& v, const char* sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
  if (rank == 0) rank = 1;
  return v[rank - 1];
}

}  // namespace

double SimConfig::quiescent_at() const {
  double t = load_stop();
  for (const auto& p : partitions) t = std::max(t, p.end_ms);
  for (const auto& c : crashes) t = std::max(t, c.end_ms);
  for (const auto& r : reconfigurations) t = std::max(t, r.at_ms);
  return t;
}

int SimConfig::total_clients() const {
  int n = 0;
  for (int c : clients) n += c;
  return n;
}

std::string ConfigError::to_string() const {
  return line > 0 ? "line " + std::to_string(line) + ": " + message : message;
}

std::optional<std::string> apply_setting(SimConfig& cfg, std::string_view key,
                                         std::string_view value) {
  auto& m = cfg.middleware;
  const std::string bad = "invalid value '" + std::string(value) + "' for " + std::string(key);
  auto set_double = [&](double& field) -> std::optional<std::string> {
    auto v = number<double>(value);
    if (!v || !std::isfinite(*v)) return bad;
    field = *v;
    return std::nullopt;
  };
  auto set_int = [&](auto& field) -> std::optional<std::string> {
    auto v = number<std::remove_reference_t<decltype(field)>>(value);
    if (!v) return bad;
    field = *v;
    return std::nullopt;
  };

  if (key == "dcs") return set_int(cfg.dcs);
  if (key == "dc_names") {
    cfg.dc_names.clear();
    for (auto w : words(value)) cfg.dc_names.emplace_back(w);
    return std::nullopt;
  }
  if (key == "rtt_ms") {
    std::vector<std::vector<double>> rows;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= value.size(); ++i) {
      if (i == value.size() || value[i] == '/' || value[i] == ';') {
        auto row = numbers<double>(value.substr(start, i - start));
        if (!row || row->empty()) return bad;
        rows.push_back(std::move(*row));
        start = i + 1;
      }
    }
    cfg.rtt_ms = std::move(rows);
    return std::nullopt;
  }
  if (key == "store_read_ms") return set_double(cfg.store_read_ms);
  if (key == "store_write_ms") return set_double(cfg.store_write_ms);
  if (key == "store_jitter_ms") return set_double(cfg.store_jitter_ms);
  if (key == "intra_dc_ms") return set_double(cfg.intra_dc_ms);
  if (key == "jitter_ms") return set_double(cfg.jitter_ms);
  if (key == "clients") {
    auto v = numbers<int>(value);
    if (!v || v->empty()) return bad;
    cfg.clients = v->size() == 1 ? std::vector<int>(static_cast<std::size_t>(std::max(cfg.dcs, 0)),
                                                    v->front())
                                 : *v;
    return std::nullopt;
  }
  if (key == "inc_fraction") {
    if (auto e = set_double(cfg.inc_fraction)) return e;
    cfg.dec_fraction = 1.0 - cfg.inc_fraction;
    return std::nullopt;
  }
  if (key == "dec_fraction") {
    if (auto e = set_double(cfg.dec_fraction)) return e;
    cfg.inc_fraction = 1.0 - cfg.dec_fraction;
    return std::nullopt;
  }
  if (key == "think_ms") return set_double(cfg.think_ms);
  if (key == "flag") {
    if (value == "local") cfg.flag = OpFlag::Local;
    else if (value == "global") cfg.flag = OpFlag::Global;
    else return bad;
    return std::nullopt;
  }
  if (key == "counters") return set_int(cfg.counters);
  if (key == "initial") return set_int(cfg.initial);
  if (key == "bound") return set_int(cfg.bound);
  if (key == "polarity") {
    if (value == "lower") cfg.polarity = Polarity::Lower;
    else if (value == "upper") cfg.polarity = Polarity::Upper;
    else return bad;
    return std::nullopt;
  }
  if (key == "initial_split") {
    auto b = boolean(value);
    if (!b) return bad;
    m.initial_split = *b;
    return std::nullopt;
  }
  if (key == "strategy") {
    auto k = mw::parse_strategy(value);
    if (!k) return bad;
    cfg.strategy = *k;
    return std::nullopt;
  }
  if (key == "sync_period_ms") return set_double(m.sync_period_ms);
  if (key == "rebalance_period_ms") return set_double(m.rebalance_period_ms);
  if (key == "rebalance_threshold") {
    if (value == "auto") {
      m.rebalance_threshold.reset();
      return std::nullopt;
    }
    auto v = number<Count>(value);
    if (!v) return bad;
    m.rebalance_threshold = *v;
    return std::nullopt;
  }
  if (key == "retry_limit") return set_int(m.retry_limit);
  if (key == "nodes_per_dc") return set_int(m.nodes_per_dc);
  if (key == "batch_cap") return set_int(m.batch_cap);
  if (key == "op_timeout_ms") return set_double(m.op_timeout_ms);
  if (key == "home_dc") return set_int(m.home_dc);
  if (key == "duration_ms") return set_double(cfg.duration_ms);
  if (key == "load_stop_ms") {
    if (value == "auto") {
      cfg.load_stop_ms.reset();
      return std::nullopt;
    }
    double v = 0;
    if (auto e = set_double(v)) return e;
    cfg.load_stop_ms = v;
    return std::nullopt;
  }
  if (key == "bucket_ms") return set_double(cfg.bucket_ms);
  if (key == "seed") return set_int(cfg.seed);
  if (key == "partition") {
    // "<dcs on one side> [| <other side>] @ <start> <end>"
    const auto at = value.find('@');
    if (at == std::string_view::npos) return bad;
    auto lhs = value.substr(0, at);
    if (auto bar = lhs.find('|'); bar != std::string_view::npos) lhs = lhs.substr(0, bar);
    auto side = numbers<int>(lhs);
    auto times = numbers<double>(value.substr(at + 1));
    if (!side || side->empty() || !times || times->size() != 2) return bad;
    cfg.partitions.push_back({*side, (*times)[0], (*times)[1]});
    return std::nullopt;
  }
  if (key == "crash") {
    // "<dc>:<node> @ <start> <end>"
    const auto at = value.find('@');
    const auto colon = value.find(':');
    if (at == std::string_view::npos || colon == std::string_view::npos || colon > at) return bad;
    auto dc = number<int>(trim(value.substr(0, colon)));
    auto node = number<int>(trim(value.substr(colon + 1, at - colon - 1)));
    auto times = numbers<double>(value.substr(at + 1));
    if (!dc || !node || !times || times->size() != 2) return bad;
    cfg.crashes.push_back({*dc, *node, (*times)[0], (*times)[1]});
    return std::nullopt;
  }
  if (key == "reconfigure") {
    const auto at = value.find('@');
    if (at == std::string_view::npos) return bad;
    auto dc = number<int>(trim(value.substr(0, at)));
    auto t = number<double>(trim(value.substr(at + 1)));
    if (!dc || !t) return bad;
    cfg.reconfigurations.push_back({*dc, *t});
    return std::nullopt;
  }
  return "unknown setting '" + std::string(key) + "'";
}

std::optional<ConfigError> parse_config(std::string_view text, SimConfig& cfg) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) return ConfigError{line_no, "expected 'key = value'"};
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) return ConfigError{line_no, "missing key"};
    if (auto err = apply_setting(cfg, key, value)) return ConfigError{line_no, *err};
  }
  if (auto err = validate(cfg)) return ConfigError{0, *err};
  return std::nullopt;
}

std::optional<std::string> validate(const SimConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.dcs);
  if (cfg.dcs < 1) return "dcs must be at least 1";
  if (cfg.dc_names.size() != n) return "dc_names needs one name per DC";
  if (cfg.rtt_ms.size() != n) return "rtt_ms needs one row per DC";
  for (std::size_t i = 0; i < n; ++i) {
    if (cfg.rtt_ms[i].size() != n) return "rtt_ms row " + std::to_string(i) + " has wrong length";
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && !(cfg.rtt_ms[i][j] > 0)) return "rtt_ms entries between DCs must be positive";
    }
  }
  if (cfg.clients.size() != n) return "clients needs one count per DC";
  for (int c : cfg.clients) {
    if (c < 0) return "client counts must be non-negative";
  }
  if (cfg.inc_fraction < 0 || cfg.dec_fraction < 0 ||
      std::abs(cfg.inc_fraction + cfg.dec_fraction - 1.0) > 1e-9) {
    return "inc_fraction and dec_fraction must be non-negative and sum to 1";
  }
  if (cfg.store_read_ms < 0 || cfg.store_write_ms < 0 || cfg.store_jitter_ms < 0 ||
      cfg.intra_dc_ms < 0 || cfg.jitter_ms < 0 || cfg.think_ms < 0) {
    return "latencies and think time must be non-negative";
  }
  if (cfg.counters < 1) return "counters must be at least 1";
  if (cfg.polarity == Polarity::Lower ? cfg.initial < cfg.bound : cfg.initial > cfg.bound) {
    return "initial value is outside the bound";
  }
  const auto& m = cfg.middleware;
  if (!(m.sync_period_ms > 0) || !(m.rebalance_period_ms > 0)) return "periods must be positive";
  if (m.retry_limit < 0) return "retry_limit must be non-negative";
  if (m.nodes_per_dc < 1) return "nodes_per_dc must be at least 1";
  if (!(m.op_timeout_ms > 0)) return "op_timeout_ms must be positive";
  if (m.home_dc < 0 || m.home_dc >= cfg.dcs) return "home_dc out of range";
  if (!(cfg.duration_ms > 0)) return "duration_ms must be positive";
  if (cfg.load_stop_ms && (*cfg.load_stop_ms < 0 || *cfg.load_stop_ms > cfg.duration_ms)) {
    return "load_stop_ms must lie within the run";
  }
  if (!(cfg.bucket_ms > 0)) return "bucket_ms must be positive";
  for (const auto& p : cfg.partitions) {
    for (int dc : p.side) {
      if (dc < 0 || dc >= cfg.dcs) return "partition names an unknown DC";
    }
    if (p.start_ms < 0 || p.end_ms < p.start_ms) return "partition times out of order";
  }
  for (const auto& c : cfg.crashes) {
    if (c.dc < 0 || c.dc >= cfg.dcs || c.node < 0) return "crash names an unknown node";
    if (c.start_ms < 0 || c.end_ms < c.start_ms) return "crash times out of order";
  }
  for (const auto& r : cfg.reconfigurations) {
    if (r.dc < 0 || r.dc >= cfg.dcs || r.at_ms < 0) return "reconfigure out of range";
  }
  return std::nullopt;
}

std::string to_text(const SimConfig& cfg) {
  std::ostringstream o;
  const auto& m = cfg.middleware;
  o << "dcs = " << cfg.dcs << "\n";
  o << "dc_names =";
  for (const auto& n : cfg.dc_names) o << " " << n;
  o << "\nrtt_ms =";
  for (std::size_t i = 0; i < cfg.rtt_ms.size(); ++i) {
    if (i) o << " /";
    for (double v : cfg.rtt_ms[i]) o << " " << fmt(v);
  }
  o << "\nstore_read_ms = " << fmt(cfg.store_read_ms) << "\n";
  o << "store_write_ms = " << fmt(cfg.store_write_ms) << "\n";
  o << "store_jitter_ms = " << fmt(cfg.store_jitter_ms) << "\n";
  o << "intra_dc_ms = " << fmt(cfg.intra_dc_ms) << "\n";
  o << "jitter_ms = " << fmt(cfg.jitter_ms) << "\n";
  o << "clients = " << join(cfg.clients) << "\n";
  o << "inc_fraction = " << fmt(cfg.inc_fraction) << "\n";
  o << "dec_fraction = " << fmt(cfg.dec_fraction) << "\n";
  o << "think_ms = " << fmt(cfg.think_ms) << "\n";
  o << "flag = " << to_string(cfg.flag) << "\n";
  o << "counters = " << cfg.counters << "\n";
  o << "initial = " << cfg.initial << "\n";
  o << "bound = " << cfg.bound << "\n";
  o << "polarity = " << to_string(cfg.polarity) << "\n";
  o << "initial_split = " << (m.initial_split ? "true" : "false") << "\n";
  o << "strategy = " << mw::to_string(cfg.strategy) << "\n";
  o << "sync_period_ms = " << fmt(m.sync_period_ms) << "\n";
  o << "rebalance_period_ms = " << fmt(m.rebalance_period_ms) << "\n";
  o << "rebalance_threshold = "
    << (m.rebalance_threshold ? std::to_string(*m.rebalance_threshold) : "auto") << "\n";
  o << "retry_limit = " << m.retry_limit << "\n";
  o << "nodes_per_dc = " << m.nodes_per_dc << "\n";
  o << "batch_cap = " << m.batch_cap << "\n";
  o << "op_timeout_ms = " << fmt(m.op_timeout_ms) << "\n";
  o << "home_dc = " << m.home_dc << "\n";
  for (const auto& p : cfg.partitions) {
    o << "partition = " << join(p.side) << " @ " << fmt(p.start_ms) << " " << fmt(p.end_ms)
      << "\n";
  }
  for (const auto& c : cfg.crashes) {
    o << "crash = " << c.dc << ":" << c.node << " @ " << fmt(c.start_ms) << " " << fmt(c.end_ms)
      << "\n";
  }
  for (const auto& r : cfg.reconfigurations) {
    o << "reconfigure = " << r.dc << " @ " << fmt(r.at_ms) << "\n";
  }
  o << "duration_ms = " << fmt(cfg.duration_ms) << "\n";
  o << "load_stop_ms = " << (cfg.load_stop_ms ? fmt(*cfg.load_stop_ms) : "auto") << "\n";
  o << "bucket_ms = " << fmt(cfg.bucket_ms) << "\n";
  o << "seed = " << cfg.seed << "\n";
  return o.str();
}

// --- running ---------------------------------------------------------------

namespace {

struct ClientState {
  int dc;
  int id;
  Rng rng;
};

struct Runner {
  Runner(const SimConfig& c, World& w, mw::Strategy& s) : cfg(c), world(w), strategy(s) {}

  void issue(const std::shared_ptr<ClientState>& cl) {
    const SimTime now = world.loop.now();
    if (now >= from_ms(cfg.load_stop())) return;
    ClientOp op;
    op.dc = cl->dc;
    op.client = cl->id;
    op.key = cfg.key(cfg.counters == 1 ? 0 : static_cast<int>(cl->rng.below(
                                                 static_cast<std::uint64_t>(cfg.counters))));
    op.kind = cl->rng.uniform() < cfg.inc_fraction ? OpKind::Inc : OpKind::Dec;
    op.delta = 1;
    op.flag = cfg.flag;

    const std::size_t idx = ops.size();
    ops.push_back(OpRecord{to_ms(now), op.dc, op.client, op.kind, OpStatus::Fail,
                           std::nullopt, 0.0, false, false, false});
    ++in_flight;

    auto settled = std::make_shared<bool>(false);
    auto finish = [this, cl, idx, settled, now](OpResult r, bool timed_out) {
      if (*settled) return;
      *settled = true;
      --in_flight;
      OpRecord& rec = ops[idx];
      rec.status = r.status;
      rec.reason = r.reason;
      rec.sync_transfer = r.used_sync_transfer;
      rec.timed_out = timed_out;
      rec.latency_ms = to_ms(world.loop.now() - now);
      rec.completed = true;
      world.loop.after(from_ms(cfg.think_ms), [this, cl] { issue(cl); });
    };
    world.loop.after(from_ms(cfg.middleware.op_timeout_ms), [finish] {
      finish(OpResult::retry(Errc::RetriesExhausted, false), true);
    });
    strategy.submit(op, [finish](OpResult r) { finish(r, false); });
  }

  void probe() {
    if (converged_at) return;
    if (in_flight == 0 && all_equal()) {
      converged_at = world.loop.now();
      return;
    }
    world.loop.after(from_ms(1.0), [this] { probe(); });
  }

  bool all_equal() {
    for (int k = 0; k < cfg.counters; ++k) {
      const auto first = strategy.stored_state(0, cfg.key(k));
      for (int dc = 1; dc < cfg.dcs; ++dc) {
        if (strategy.stored_state(dc, cfg.key(k)) != first) return false;
      }
    }
    return true;
  }

  const SimConfig& cfg;
  World& world;
  mw::Strategy& strategy;
  std::vector<OpRecord> ops;
  int in_flight = 0;
  std::optional<SimTime> converged_at;
};

}  // namespace

Result<RunReport> run(const SimConfig& cfg) {
  if (validate(cfg)) return Errc::ConfigInvalid;

  WorldConfig wc;
  wc.one_way_ms.assign(static_cast<std::size_t>(cfg.dcs),
                       std::vector<double>(static_cast<std::size_t>(cfg.dcs), 0.0));
  for (int i = 0; i < cfg.dcs; ++i) {
    for (int j = 0; j < cfg.dcs; ++j) {
      wc.one_way_ms[i][j] = i == j ? cfg.intra_dc_ms : cfg.rtt_ms[i][j] / 2.0;
    }
  }
  wc.network_jitter_ms = cfg.jitter_ms;
  wc.store = kv::StoreLatency{cfg.store_read_ms, cfg.store_write_ms, cfg.store_jitter_ms};
  wc.seed = cfg.seed;
  wc.bucket_ms = cfg.bucket_ms;
  World world(wc);

  auto strategy = mw::make_strategy(cfg.strategy, world, cfg.middleware);
  for (int k = 0; k < cfg.counters; ++k) {
    if (Status st = strategy->install({cfg.key(k), cfg.polarity, cfg.bound, cfg.initial}); !st) {
      return st.error();
    }
  }
  strategy->start();

  for (const auto& p : cfg.partitions) {
    auto handle = std::make_shared<int>(-1);
    world.loop.at(from_ms(p.start_ms), [&world, side = p.side, handle] {
      *handle = world.net.partition(side);
    });
    world.loop.at(from_ms(p.end_ms), [&world, handle] {
      if (*handle >= 0) world.net.heal(*handle);
    });
  }
  for (const auto& c : cfg.crashes) {
    world.loop.at(from_ms(c.start_ms), [s = strategy.get(), c] { s->crash(c.dc, c.node); });
    world.loop.at(from_ms(c.end_ms), [s = strategy.get(), c] { s->recover(c.dc, c.node); });
  }
  for (const auto& r : cfg.reconfigurations) {
    world.loop.at(from_ms(r.at_ms), [s = strategy.get(), r] { s->reconfigure(r.dc); });
  }

  Runner runner(cfg, world, *strategy);
  Rng client_seeds(cfg.seed ^ 0x636c69656e7473ULL);
  for (int dc = 0; dc < cfg.dcs; ++dc) {
    for (int c = 0; c < cfg.clients[static_cast<std::size_t>(dc)]; ++c) {
      auto cl = std::make_shared<ClientState>(ClientState{dc, c, client_seeds.fork()});
      const SimTime offset = from_ms(cl->rng.uniform() * cfg.think_ms);
      world.loop.at(offset, [&runner, cl] { runner.issue(cl); });
    }
  }
  world.loop.at(from_ms(cfg.quiescent_at()), [&runner] { runner.probe(); });

  world.loop.run_until(from_ms(cfg.duration_ms));
  strategy->stop();

  RunReport rep;
  rep.strategy = std::string(strategy->name());
  rep.ops = runner.ops;

  const SimTime bucket = from_ms(cfg.bucket_ms);
  const auto buckets =
      static_cast<std::size_t>((from_ms(cfg.duration_ms) + bucket - 1) / bucket);
  std::vector<std::vector<double>> lat(buckets);
  rep.rows.resize(buckets);
  for (std::size_t b = 0; b < buckets; ++b) {
    auto& row = rep.rows[b];
    row.time_s = to_ms(static_cast<SimTime>(b) * bucket) / 1000.0;
    row.strategy = rep.strategy;
    row.store_writes = world.tally.in_bucket(Metric::StoreWrite, b);
    row.conflicts = world.tally.in_bucket(Metric::Conflict, b);
    row.transfer_msgs = world.tally.in_bucket(Metric::TransferMessage, b);
  }
  for (const auto& [t, n] : world.observer.violation_events()) {
    const auto b = static_cast<std::size_t>(t / bucket);
    if (b < buckets) rep.rows[b].violations += n;
  }
  std::vector<std::vector<double>> dc_lat(static_cast<std::size_t>(cfg.dcs));
  for (const auto& op : rep.ops) {
    const auto b = std::min(buckets - 1, static_cast<std::size_t>(from_ms(op.start_ms) / bucket));
    auto& row = rep.rows[b];
    ++row.attempted;
    ++rep.attempted;
    if (!op.completed) continue;
    if (op.status == OpStatus::Ok) {
      ++row.succeeded;
      ++rep.succeeded;
    } else {
      ++row.failed;
      ++rep.failed;
    }
    if (op.sync_transfer) {
      ++row.sync_transfer_ops;
      ++rep.sync_transfer_ops;
    }
    if (!op.timed_out) {
      lat[b].push_back(op.latency_ms);
      dc_lat[static_cast<std::size_t>(op.dc)].push_back(op.latency_ms);
    }
  }
  for (std::size_t b = 0; b < buckets; ++b) {
    rep.rows[b].p50_ms = percentile(lat[b], 0.50);
    rep.rows[b].p99_ms = percentile(lat[b], 0.99);
  }
  for (const auto& v : dc_lat) rep.dc_p50_ms.push_back(percentile(v, 0.50));

  rep.store_writes = world.tally.total(Metric::StoreWrite);
  rep.conflicts = world.tally.total(Metric::Conflict);
  rep.transfer_msgs = world.tally.total(Metric::TransferMessage);
  rep.transfer_to_empty = world.tally.total(Metric::TransferToEmpty);
  rep.sync_msgs = world.tally.total(Metric::SyncMessage);
  rep.violations = world.observer.violations();
  for (int k = 0; k < cfg.counters; ++k) {
    rep.expected_values.push_back(world.observer.value(cfg.key(k)));
    std::vector<std::optional<Count>> per_dc;
    for (int dc = 0; dc < cfg.dcs; ++dc) per_dc.push_back(strategy->stored_value(dc, cfg.key(k)));
    rep.final_values.push_back(std::move(per_dc));
  }
  if (runner.converged_at) {
    rep.convergence_ms = to_ms(*runner.converged_at - from_ms(cfg.quiescent_at()));
  }
  if (auto d = world.observer.depleted_at(cfg.key(0))) rep.depleted_ms = to_ms(*d);
  return rep;
}

void write_metrics_csv(const RunReport& report, std::ostream& out) {
  out << "# bcounter-metrics v1\n";
  out << "time_s,strategy,attempted,succeeded,failed,p50_ms,p99_ms,store_writes,conflicts,"
         "transfer_msgs,sync_transfer_ops,violations\n";
  for (const auto& r : report.rows) {
    out << fmt(r.time_s) << ',' << r.strategy << ',' << r.attempted << ',' << r.succeeded << ','
        << r.failed << ',' << fmt(r.p50_ms) << ',' << fmt(r.p99_ms) << ',' << r.store_writes
        << ',' << r.conflicts << ',' << r.transfer_msgs << ',' << r.sync_transfer_ops << ','
        << r.violations << '\n';
  }
}

void write_ops_csv(const RunReport& report, std::ostream& out) {
  out << "# bcounter-ops v1\n";
  out << "time_ms,dc,client,op,status,latency_ms,sync_transfer\n";
  for (const auto& op : report.ops) {
    out << fmt(op.start_ms) << ',' << op.dc << ',' << op.client << ',' << to_string(op.kind)
        << ','
        << (!op.completed ? "pending" : op.timed_out ? "timeout" : to_string(op.status)) << ','
        << fmt(op.latency_ms) << ',' << (op.sync_transfer ? 1 : 0) << '\n';
  }
}

}  // namespace bcounter::sim
