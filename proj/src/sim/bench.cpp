#include "bcounter/sim/bench.hpp"

namespace bcounter::sim {

namespace {

constexpr mw::StrategyKind kAll[] = {mw::StrategyKind::Weak, mw::StrategyKind::Strong,
                                     mw::StrategyKind::Bcclt, mw::StrategyKind::Bcsrv,
                                     mw::StrategyKind::BcsrvNoBatch};

struct Template {
  std::string_view name;
  std::string_view description;
  bool per_op;
  std::vector<int> clients;
  std::vector<mw::StrategyKind> strategies;
  SimConfig base;
};

SimConfig throughput_base(int counters) {
  SimConfig c;
  c.counters = counters;
  c.initial = 1'000'000;
  c.inc_fraction = 0.2;
  c.dec_fraction = 0.8;
  c.duration_ms = 10'000;
  return c;
}

SimConfig depletion_base(double duration_ms) {
  SimConfig c;
  c.initial = 6000;
  c.inc_fraction = 0.0;
  c.dec_fraction = 1.0;
  c.duration_ms = duration_ms;
  return c;
}

std::vector<Template> templates() {
  const std::vector<int> sweep{10, 50, 100, 200};
  const std::vector<mw::StrategyKind> all(std::begin(kAll), std::end(kAll));
  return {
      {"single-counter", "one hot counter, 20% increments, throughput and failures", false,
       sweep, all, throughput_base(1)},
      {"multi-counter-100", "100 counters picked uniformly, 20% increments", false, sweep, all,
       throughput_base(100)},
      {"exhaustion-6000", "one counter from 6000 down to its bound, decrements only", true, {30},
       {mw::StrategyKind::Bcsrv}, depletion_base(30'000)},
      {"violation-count", "decrements only from 6000; counts updates past the bound", false,
       sweep, all, depletion_base(90'000)},
  };
}

}  // namespace

std::vector<int> split_clients(int total, int dcs) {
  std::vector<int> out(static_cast<std::size_t>(dcs), total / dcs);
  for (int i = 0; i < total % dcs; ++i) ++out[static_cast<std::size_t>(i)];
  return out;
}

std::vector<std::string_view> bench_names() {
  std::vector<std::string_view> out;
  for (const auto& t : templates()) out.push_back(t.name);
  return out;
}

std::optional<BenchScenario> bench_scenario(std::string_view name,
                                            const BenchOverrides& overrides) {
  for (const auto& t : templates()) {
    if (t.name != name) continue;
    BenchScenario sc{std::string(t.name), std::string(t.description), t.per_op, {}};
    auto strategies = t.strategies;
    if (overrides.strategy) strategies = {*overrides.strategy};
    auto clients = t.clients;
    if (overrides.clients) clients = {*overrides.clients};
    for (auto kind : strategies) {
      for (int total : clients) {
        SimConfig cfg = t.base;
        cfg.strategy = kind;
        cfg.clients = split_clients(total, cfg.dcs);
        if (overrides.seed) cfg.seed = *overrides.seed;
        if (overrides.duration_ms) cfg.duration_ms = *overrides.duration_ms;
        sc.points.push_back({std::string(mw::to_string(kind)) + "-c" + std::to_string(total),
                             total, std::move(cfg)});
      }
    }
    return sc;
  }
  return std::nullopt;
}

}  // namespace bcounter::sim
