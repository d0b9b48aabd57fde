// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any failed.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bcounter/check/model_checker.hpp"
#include "bcounter/crdt/bounded_counter.hpp"
#include "bcounter/sim/bench.hpp"
#include "bcounter/sim/harness.hpp"
#include "crdt_oracle.hpp"

using namespace bcounter;
using bcounter::testing::Dense;
using mw::StrategyKind;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      detail += " [failed: " + what + "]";
    }
  }
  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::string num(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

// Every simulation run is recorded so the determinism criterion can repeat it.
struct Recorded {
  std::string label;
  sim::SimConfig cfg;
  std::string csv;
};
std::vector<Recorded> g_runs;

std::string csv_of(const sim::RunReport& r) {
  std::ostringstream o;
  sim::write_metrics_csv(r, o);
  sim::write_ops_csv(r, o);
  return o.str();
}

sim::RunReport simulate(const std::string& label, const sim::SimConfig& cfg) {
  if (auto err = sim::validate(cfg)) {
    std::fprintf(stderr, "%s: invalid config: %s\n", label.c_str(), err->c_str());
    std::exit(2);
  }
  auto r = sim::run(cfg);
  if (!r) {
    std::fprintf(stderr, "%s: run failed: %s\n", label.c_str(),
                 std::string(to_string(r.error())).c_str());
    std::exit(2);
  }
  g_runs.push_back({label, cfg, csv_of(*r)});
  return std::move(*r);
}

sim::SimConfig bench_point(std::string_view scenario, StrategyKind kind, int clients) {
  sim::BenchOverrides ov;
  ov.strategy = kind;
  ov.clients = clients;
  auto sc = sim::bench_scenario(scenario, ov);
  return sc->points.at(0).config;
}

const std::vector<int> kSweep{10, 50, 100, 200};

// 1 ---------------------------------------------------------------------------

Outcome worked_example() {
  Outcome o;
  const auto t0 = Clock::now();
  BoundedCounter::RightsMatrix r{{{0, 0}, 30}, {{0, 1}, 10}, {{0, 2}, 10}, {{1, 1}, 1}};
  auto c = BoundedCounter::from_parts(Polarity::Lower, 10, 3, r, {5, 4, 2});
  o.require(c.ok(), "state builds");
  if (!c) return o;
  const Count value = c->value();
  const Count rights = *c->local_rights({0});
  o.note("value " + std::to_string(value) + ", rights at r0 " + std::to_string(rights));
  o.require(value == 30, "value == 30");
  o.require(rights == 5, "localRights(r0) == 5");
  const double secs = seconds_since(t0);
  o.require(secs < 1.0, "< 1 s");
  return o;
}

// 2 ---------------------------------------------------------------------------

Outcome lattice_laws() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20260101);
  int failures = 0;
  const int trials = 10'000;
  for (int t = 0; t < trials; ++t) {
    const auto pol = (t % 2) ? Polarity::Upper : Polarity::Lower;
    const std::uint32_t n = 1 + static_cast<std::uint32_t>(rng() % 5);
    auto a = testing::random_state(rng, pol, 3, n);
    auto b = testing::random_state(rng, pol, 3, n);
    auto c = testing::random_state(rng, pol, 3, n);
    const auto ab = *merge(a, b);
    bool ok = Dense::of(ab) == Dense::max(Dense::of(a), Dense::of(b));
    ok = ok && ab == *merge(b, a);
    ok = ok && *merge(ab, c) == *merge(a, *merge(b, c));
    ok = ok && *merge(a, a) == a;
    ok = ok && *a.leq(ab) && *b.leq(ab);
    // ab is the least upper bound: below every upper bound of a and b.
    const auto above = *merge(ab, c);
    ok = ok && *a.leq(above) && *b.leq(above) && *ab.leq(above);
    ok = ok && (*ab.leq(c) == (*a.leq(c) && *b.leq(c)));
    if (!ok) ++failures;
  }
  const double secs = seconds_since(t0);
  o.note(std::to_string(trials) + " triples, " + std::to_string(failures) + " failures, " +
         num(secs, 2) + " s");
  o.require(failures == 0, "zero failures");
  o.require(secs < 30.0, "< 30 s");
  return o;
}

// 3 ---------------------------------------------------------------------------

check::ExploreSpec criterion3_spec() {
  check::ExploreSpec s;
  s.replicas = 3;
  s.bound = 0;
  s.initial = 5;
  s.incs = 1;
  s.decs = 3;
  s.transfers = 1;
  s.max_updates = 8;
  s.max_merges = 6;
  return s;
}

std::string g_mutant_trace;

Outcome model_checking() {
  Outcome o;
  auto t0 = Clock::now();
  auto r = check::explore(criterion3_spec());
  const double secs = seconds_since(t0);
  o.require(r.ok(), "exploration completes");
  if (!r) return o;
  o.note((r->verified ? "verified, " : "counterexample, ") + std::to_string(r->states) +
         " states, " + num(secs, 1) + " s");
  o.require(r->verified, "Verified");
  o.require(secs < 300.0, "< 5 min");

  auto mutant = criterion3_spec();
  mutant.mutant = true;
  t0 = Clock::now();
  auto m = check::explore(mutant);
  const double msecs = seconds_since(t0);
  o.require(m.ok() && m->counterexample.has_value(), "mutant yields a counterexample");
  if (m && m->counterexample) {
    const auto& t = *m->counterexample;
    o.note("mutant: " + std::string(to_string(*t.violation)) + " after " +
           std::to_string(t.steps.size()) + " steps, " + num(msecs, 2) + " s");
    auto end = check::replay(t);
    o.require(end.ok() && check::state_digest(*end) == t.digest, "trace replays to its state");
    g_mutant_trace = check::to_text(t);
  }
  o.require(msecs < 300.0, "mutant < 5 min");
  return o;
}

// 4 ---------------------------------------------------------------------------

Outcome violation_sweep() {
  Outcome o;
  for (auto kind : {StrategyKind::Weak, StrategyKind::Strong, StrategyKind::Bcclt,
                    StrategyKind::Bcsrv, StrategyKind::BcsrvNoBatch}) {
    const auto t0 = Clock::now();
    std::vector<Count> v;
    for (int c : kSweep) {
      auto cfg = bench_point("violation-count", kind, c);
      v.push_back(simulate("violation-count " + std::string(mw::to_string(kind)), cfg).violations);
    }
    const double secs = seconds_since(t0);
    std::string row = std::string(mw::to_string(kind)) + " {";
    for (std::size_t i = 0; i < v.size(); ++i) row += (i ? "," : "") + std::to_string(v[i]);
    o.note(row + "} in " + num(secs, 1) + " s");
    const std::string name(mw::to_string(kind));
    if (kind == StrategyKind::Weak) {
      o.require(std::all_of(v.begin(), v.end(), [](Count x) { return x > 0; }),
                "weak violations > 0");
      o.require(std::is_sorted(v.begin(), v.end()), "weak violations non-decreasing");
    } else {
      o.require(std::all_of(v.begin(), v.end(), [](Count x) { return x == 0; }),
                name + " violations == 0");
    }
    o.require(secs < 120.0, name + " sweep < 2 min");
  }
  return o;
}

// 5 ---------------------------------------------------------------------------

Outcome exhaustion() {
  Outcome o;
  const auto t0 = Clock::now();
  auto sc = sim::bench_scenario("exhaustion-6000");
  const auto rep = simulate("exhaustion-6000", sc->points.at(0).config);
  const double secs = seconds_since(t0);

  bool converged_zero = rep.expected_values.at(0) == 0;
  for (const auto& v : rep.final_values.at(0)) converged_zero = converged_zero && v == 0;
  o.note("final value " + std::to_string(rep.expected_values.at(0)));
  o.require(converged_zero, "every DC stores 0");
  o.require(rep.violations == 0, "bound never crossed");

  const double frac = static_cast<double>(rep.sync_transfer_ops) / static_cast<double>(rep.attempted);
  o.note("synchronous transfers " + std::to_string(rep.sync_transfer_ops) + "/" +
         std::to_string(rep.attempted) + " = " + num(100.0 * frac, 2) + "%");
  o.require(frac < 0.05, "sync transfers < 5%");

  o.require(rep.depleted_ms.has_value(), "counter depleted");
  if (rep.depleted_ms) {
    std::int64_t after = 0, failed = 0, remote = 0;
    for (const auto& op : rep.ops) {
      if (op.start_ms <= *rep.depleted_ms || !op.completed) continue;
      ++after;
      if (op.status == OpStatus::Fail) ++failed;
      if (op.sync_transfer) ++remote;
    }
    o.note("depleted at " + num(*rep.depleted_ms / 1000.0, 2) + " s; afterwards " +
           std::to_string(failed) + "/" + std::to_string(after) + " failed, " +
           std::to_string(remote) + " asked for rights");
    o.require(after > 0 && failed == after, "all later ops fail");
    o.require(remote == 0, "later ops fail locally");
  }
  o.note("transfers to exhausted replicas " + std::to_string(rep.transfer_to_empty));
  o.require(rep.transfer_to_empty == 0, "no transfer requests to exhausted replicas");
  o.require(secs < 120.0, "< 2 min");
  return o;
}

// 6 ---------------------------------------------------------------------------

Outcome batching() {
  Outcome o;
  const int clients = 600;
  const auto b = simulate("batching bcsrv", bench_point("single-counter", StrategyKind::Bcsrv, clients));
  const auto n = simulate("batching bcsrv-nobatch",
                          bench_point("single-counter", StrategyKind::BcsrvNoBatch, clients));
  auto per_op = [](const sim::RunReport& r) {
    return static_cast<double>(r.store_writes) / static_cast<double>(std::max<std::int64_t>(1, r.succeeded));
  };
  const double wb = per_op(b), wn = per_op(n);
  const double ratio = static_cast<double>(b.succeeded) / static_cast<double>(std::max<std::int64_t>(1, n.succeeded));
  o.note("writes per ok op: bcsrv " + num(wb) + ", nobatch " + num(wn) + "; throughput ratio " +
         num(ratio, 2));
  o.require(wb < 0.5, "bcsrv writes/op < 0.5");
  o.require(std::abs(wn - 1.0) <= 0.01, "nobatch writes/op == 1 +- 0.01");
  o.require(ratio >= 2.0, "bcsrv throughput >= 2x nobatch");
  return o;
}

// 7 ---------------------------------------------------------------------------

Outcome contention() {
  Outcome o;
  for (auto kind : {StrategyKind::Bcclt, StrategyKind::Strong, StrategyKind::Bcsrv}) {
    std::vector<double> f;
    for (int c : kSweep) {
      const auto r = simulate("contention " + std::string(mw::to_string(kind)),
                              bench_point("single-counter", kind, c));
      f.push_back(r.store_writes == 0 ? 0.0
                                      : static_cast<double>(r.conflicts) /
                                            static_cast<double>(r.store_writes));
    }
    std::string row = std::string(mw::to_string(kind)) + " {";
    for (std::size_t i = 0; i < f.size(); ++i) row += (i ? "," : "") + num(f[i]);
    o.note(row + "}");
    const std::string name(mw::to_string(kind));
    if (kind == StrategyKind::Bcsrv) {
      o.require(std::all_of(f.begin(), f.end(), [](double x) { return x < 0.01; }),
                "bcsrv conflicts < 1%");
    } else {
      bool strictly = true;
      for (std::size_t i = 1; i < f.size(); ++i) strictly = strictly && f[i] > f[i - 1];
      o.require(strictly, name + " conflict fraction strictly increasing");
    }
  }
  return o;
}

// 8 ---------------------------------------------------------------------------

Outcome latency() {
  Outcome o;
  const int clients = 30;
  auto strong_cfg = bench_point("single-counter", StrategyKind::Strong, clients);
  const double store = strong_cfg.store_read_ms + strong_cfg.store_write_ms;
  const int home = strong_cfg.middleware.home_dc;
  int eu = -1;
  for (int i = 0; i < strong_cfg.dcs; ++i) {
    if (strong_cfg.dc_names[static_cast<std::size_t>(i)] == "eu") eu = i;
  }
  o.require(eu >= 0 && eu != home, "an EU DC away from home");
  if (!o.pass) return o;
  const auto s = simulate("latency strong", strong_cfg);
  const auto b = simulate("latency bcsrv", bench_point("single-counter", StrategyKind::Bcsrv, clients));
  std::string row = "strong p50 home " + num(s.dc_p50_ms[static_cast<std::size_t>(home)], 1) +
                    " ms, eu " + num(s.dc_p50_ms[static_cast<std::size_t>(eu)], 1) + " ms; bcsrv";
  for (double p : b.dc_p50_ms) row += " " + num(p, 1);
  o.note(row + " ms; store " + num(store, 1) + " ms");
  o.require(s.dc_p50_ms[static_cast<std::size_t>(eu)] >= 90.0, "strong eu p50 >= 90 ms");
  o.require(s.dc_p50_ms[static_cast<std::size_t>(home)] <= store + 5.0,
            "strong home p50 <= store + 5 ms");
  o.require(std::all_of(b.dc_p50_ms.begin(), b.dc_p50_ms.end(),
                        [&](double p) { return p <= store + 10.0; }),
            "bcsrv p50 <= store + 10 ms everywhere");
  return o;
}

// 9 ---------------------------------------------------------------------------

Outcome partition() {
  Outcome o;
  std::ifstream in(BCOUNTER_SCENARIO_DIR "/partition.conf");
  std::stringstream text;
  text << in.rdbuf();
  sim::SimConfig cfg;
  auto err = sim::parse_config(text.str(), cfg);
  o.require(in.good() && !err && cfg.partitions.size() == 1, "partition scenario loads");
  if (!o.pass) return o;
  const auto& p = cfg.partitions[0];
  const auto rep = simulate("partition", cfg);

  std::vector<std::int64_t> ok(static_cast<std::size_t>(cfg.dcs), 0);
  std::int64_t crossing = 0;
  for (const auto& op : rep.ops) {
    if (op.start_ms < p.start_ms || op.start_ms + op.latency_ms > p.end_ms) continue;
    if (op.status != OpStatus::Ok) continue;
    ++ok[static_cast<std::size_t>(op.dc)];
    if (op.sync_transfer) ++crossing;
  }
  std::string row = "ok during partition per DC";
  for (auto v : ok) row += " " + std::to_string(v);
  o.note(row);
  o.require(std::all_of(ok.begin(), ok.end(), [](std::int64_t v) { return v > 0; }),
            "every DC succeeds while cut off");
  o.require(crossing == 0, "successes used local rights");

  Count row_violations = 0;
  for (const auto& r : rep.rows) row_violations = std::max(row_violations, r.violations);
  o.note("violations " + std::to_string(rep.violations));
  o.require(rep.violations == 0 && row_violations == 0, "zero violations");

  const double limit = 3 * cfg.middleware.sync_period_ms;
  o.note("converged " + (rep.convergence_ms ? num(*rep.convergence_ms, 1) + " ms" : "never") +
         " after quiescence (limit " + num(limit, 0) + " ms)");
  o.require(rep.convergence_ms && *rep.convergence_ms <= limit, "converged within 3 sync periods");
  return o;
}

// 10 --------------------------------------------------------------------------

Outcome determinism() {
  Outcome o;
  std::size_t same = 0;
  const std::size_t total = g_runs.size();
  for (const auto& r : g_runs) {
    auto again = sim::run(r.cfg);
    if (again && csv_of(*again) == r.csv) {
      ++same;
    } else {
      o.require(false, r.label + " differs");
    }
  }
  auto mutant = criterion3_spec();
  mutant.mutant = true;
  auto m = check::explore(mutant);
  const bool trace_same = m && m->counterexample && check::to_text(*m->counterexample) == g_mutant_trace;
  o.note(std::to_string(same) + "/" + std::to_string(total) + " runs byte-identical; trace " +
         (trace_same ? "identical" : "differs"));
  o.require(total > 0, "runs recorded");
  o.require(trace_same, "counterexample trace identical");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"worked example", worked_example},
      {"lattice laws", lattice_laws},
      {"model checking", model_checking},
      {"violations by client count", violation_sweep},
      {"exhaustion", exhaustion},
      {"batching", batching},
      {"contention failures", contention},
      {"latency structure", latency},
      {"partition tolerance", partition},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome out = criteria[i].second();
    if (!out.pass) ++failed;
    std::printf("%s criterion %zu (%s): %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), out.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
