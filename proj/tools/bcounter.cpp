#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "bcounter/check/model_checker.hpp"
#include "bcounter/sim/bench.hpp"
#include "bcounter/sim/harness.hpp"

namespace {

using namespace bcounter;

constexpr int kOk = 0;
constexpr int kFound = 1;
constexpr int kUsage = 2;

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string summary(const sim::RunReport& r) {
  std::ostringstream o;
  o << "strategy=" << r.strategy << " attempted=" << r.attempted << " succeeded=" << r.succeeded
    << " failed=" << r.failed << " store_writes=" << r.store_writes
    << " conflicts=" << r.conflicts << " transfer_msgs=" << r.transfer_msgs
    << " violations=" << r.violations;
  if (!r.expected_values.empty()) o << " value=" << r.expected_values[0];
  if (r.convergence_ms) o << " convergence_ms=" << *r.convergence_ms;
  return o.str();
}

// --- check -----------------------------------------------------------------

struct CheckArgs {
  check::ExploreSpec spec;
  std::string polarity = "lower";
  int max_updates = 8;
  int max_depth = 0;
  std::string trace_out;
};

int run_check(CheckArgs& a) {
  auto& s = a.spec;
  s.polarity = a.polarity == "upper" ? Polarity::Upper : Polarity::Lower;
  s.max_updates = a.max_updates;
  if (a.max_depth > 0) s.max_depth = a.max_depth;

  std::cout << "# check\n"
            << "replicas = " << s.replicas << "\n"
            << "polarity = " << to_string(s.polarity) << "\n"
            << "bound = " << s.bound << "\n"
            << "initial = " << s.initial << "\n"
            << "incs = " << s.incs << "\n"
            << "decs = " << s.decs << "\n"
            << "transfers = " << s.transfers << "\n"
            << "max_updates = " << *s.max_updates << "\n"
            << "merges = " << s.max_merges << "\n"
            << "max_depth = " << (s.max_depth ? std::to_string(*s.max_depth) : "none") << "\n"
            << "max_states = " << s.max_states << "\n";
  if (s.mutant) std::cout << "mutant = 1\n";
  std::cout.flush();

  auto r = check::explore(s);
  if (!r) {
    std::cerr << "error: " << to_string(r.error()) << "\n";
    return kUsage;
  }
  if (r->verified) {
    std::cout << "verified: " << r->states << " states, " << r->transitions
              << " transitions, depth " << r->depth << "\n";
    return kOk;
  }
  const auto& t = *r->counterexample;
  std::cout << "counterexample: " << to_string(*t.violation) << " after " << t.steps.size()
            << " steps (" << r->states << " states explored)\n"
            << to_text(t);
  if (!a.trace_out.empty()) {
    std::ofstream out(a.trace_out);
    out << to_text(t);
    if (!out) {
      std::cerr << "error: cannot write " << a.trace_out << "\n";
      return kUsage;
    }
  }
  return kFound;
}

// --- replay ----------------------------------------------------------------

int run_replay(const std::string& path) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot read " << path << "\n";
    return kUsage;
  }
  auto t = check::parse_trace(*text);
  if (!t) {
    std::cerr << "error: malformed trace\n";
    return kUsage;
  }
  auto end = check::replay(*t);
  if (!end) {
    std::cerr << "error: " << to_string(end.error()) << "\n";
    return kUsage;
  }
  for (std::uint32_t i = 0; i < end->size(); ++i) {
    const auto& c = (*end)[i];
    std::cout << "r" << i << ": value " << c.value() << ", own rights "
              << *c.local_rights({i}) << "\n";
  }
  const auto digest = check::state_digest(*end);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  std::cout << "digest " << buf << "\n";
  if (t->digest != 0 && t->digest != digest) {
    std::cout << "digest differs from the trace\n";
    return kFound;
  }
  return kOk;
}

// --- simulate --------------------------------------------------------------

struct SimArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::string clients;
  std::string strategy;
  std::string out;
  std::string ops_out;
};

int write_to(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return kOk;
  }
  std::ofstream out(path, std::ios::binary);
  fn(out);
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    return kFound;
  }
  return kOk;
}

int run_simulate(const SimArgs& a) {
  auto text = read_file(a.config);
  if (!text) {
    std::cerr << "error: cannot read " << a.config << "\n";
    return kUsage;
  }
  sim::SimConfig cfg;
  if (auto err = sim::parse_config(*text, cfg)) {
    std::cerr << a.config << ":";
    if (err->line > 0) std::cerr << err->line << ":";
    std::cerr << " " << err->message << "\n";
    return kUsage;
  }
  auto set = [&](std::string_view key, const std::string& value) -> bool {
    if (auto err = sim::apply_setting(cfg, key, value)) {
      std::cerr << "error: --" << key << ": " << *err << "\n";
      return false;
    }
    return true;
  };
  if (a.seed && !set("seed", std::to_string(*a.seed))) return kUsage;
  if (a.duration) {
    std::ostringstream d;
    d << *a.duration;
    if (!set("duration_ms", d.str())) return kUsage;
  }
  if (!a.clients.empty() && !set("clients", a.clients)) return kUsage;
  if (!a.strategy.empty() && !set("strategy", a.strategy)) return kUsage;
  if (auto err = sim::validate(cfg)) {
    std::cerr << "error: " << *err << "\n";
    return kUsage;
  }

  std::cerr << "# resolved configuration\n" << sim::to_text(cfg);
  auto rep = sim::run(cfg);
  if (!rep) {
    std::cerr << "error: " << to_string(rep.error()) << "\n";
    return kFound;
  }
  int rc = write_to(a.out, [&](std::ostream& o) { sim::write_metrics_csv(*rep, o); });
  if (rc == kOk && !a.ops_out.empty()) {
    rc = write_to(a.ops_out, [&](std::ostream& o) { sim::write_ops_csv(*rep, o); });
  }
  std::cerr << "# " << summary(*rep) << "\n";
  return rc;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string name;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<int> clients;
  std::string strategy;
  std::string out;
};

int run_bench(const BenchArgs& a) {
  sim::BenchOverrides ov;
  ov.seed = a.seed;
  if (a.duration) ov.duration_ms = *a.duration;
  ov.clients = a.clients;
  if (!a.strategy.empty()) {
    ov.strategy = mw::parse_strategy(a.strategy);
    if (!ov.strategy) {
      std::cerr << "error: unknown strategy '" << a.strategy << "'\n";
      return kUsage;
    }
  }
  auto sc = sim::bench_scenario(a.name, ov);
  if (!sc) {
    std::cerr << "error: unknown scenario '" << a.name << "'; known:";
    for (auto n : sim::bench_names()) std::cerr << " " << n;
    std::cerr << "\n";
    return kUsage;
  }
  if (!a.out.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(a.out, ec);
    if (ec) {
      std::cerr << "error: cannot create " << a.out << "\n";
      return kFound;
    }
  }
  std::cerr << "# bench " << sc->name << ": " << sc->description << "\n";
  for (const auto& p : sc->points) {
    if (auto err = sim::validate(p.config)) {
      std::cerr << "error: " << *err << "\n";
      return kUsage;
    }
    std::cerr << "# point " << p.label << "\n" << sim::to_text(p.config);
    auto rep = sim::run(p.config);
    if (!rep) {
      std::cerr << "error: " << to_string(rep.error()) << "\n";
      return kFound;
    }
    const std::string stem = a.out.empty() ? "" : a.out + "/" + sc->name + "-" + p.label;
    if (stem.empty()) {
      std::cout << "# point " << p.label << "\n";
      sim::write_metrics_csv(*rep, std::cout);
      if (sc->per_op) sim::write_ops_csv(*rep, std::cout);
    } else {
      if (int rc = write_to(stem + ".csv", [&](std::ostream& o) { sim::write_metrics_csv(*rep, o); });
          rc != kOk) {
        return rc;
      }
      if (sc->per_op) {
        if (int rc = write_to(stem + "-ops.csv",
                              [&](std::ostream& o) { sim::write_ops_csv(*rep, o); });
            rc != kOk) {
          return rc;
        }
      }
    }
    std::cerr << "# " << p.label << ": " << summary(*rep) << "\n";
  }
  return kOk;
}

// --- demo ------------------------------------------------------------------

int run_demo() {
  std::cout << "A counter that must stay >= 10, replicated at r0, r1, r2.\n";
  BoundedCounter::RightsMatrix r{{{0, 0}, 30}, {{0, 1}, 10}, {{0, 2}, 10}, {{1, 1}, 1}};
  auto c = *BoundedCounter::from_parts(Polarity::Lower, 10, 3, r, {5, 4, 2});
  auto show = [](const BoundedCounter& s) {
    std::cout << "  value " << s.value() << "; rights";
    for (std::uint32_t i = 0; i < s.replicas(); ++i) {
      std::cout << " r" << i << "=" << *s.local_rights({i});
    }
    std::cout << "\n";
  };
  show(c);
  std::cout << "r2 decrements by 8 using only its own rights:\n";
  auto r2 = c;
  (void)r2.decrement({2}, 8);
  show(r2);
  std::cout << "r2 tries one more: " << to_string(r2.decrement({2}, 1).error()) << "\n";
  std::cout << "r0 moves 3 rights to r2 and r2 merges r0's state:\n";
  auto r0 = c;
  (void)r0.transfer({0}, {2}, 3);
  (void)r2.merge(r0);
  show(r2);
  std::cout << "r2 decrements again: " << (r2.decrement({2}, 1).ok() ? "ok" : "refused") << "\n\n";

  std::cout << "Three simulated data centers, 60 clients decrementing from 300:\n";
  for (auto kind : {mw::StrategyKind::Weak, mw::StrategyKind::Bcsrv}) {
    sim::SimConfig cfg;
    cfg.strategy = kind;
    cfg.clients = {20, 20, 20};
    cfg.initial = 300;
    cfg.inc_fraction = 0.0;
    cfg.dec_fraction = 1.0;
    cfg.duration_ms = 5000;
    auto rep = sim::run(cfg);
    if (!rep) return kFound;
    std::cout << "  " << rep->strategy << ": " << rep->succeeded << " decrements succeeded, "
              << rep->violations << " past the bound, final value " << rep->expected_values[0]
              << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounded counters on a simulated geo-replicated store"};
  app.require_subcommand(1);
  int rc = kOk;

  CheckArgs ca;
  ca.spec.decs = 0;
  ca.spec.transfers = 0;
  auto* check = app.add_subcommand("check", "exhaustively explore a small counter model");
  check->add_option("--replicas", ca.spec.replicas, "number of replicas")
      ->required()
      ->check(CLI::Range(1u, 8u));
  check->add_option("--bound", ca.spec.bound, "bound")->required();
  check->add_option("--initial", ca.spec.initial, "initial value (rights start at r0)")
      ->required();
  check->add_option("--polarity", ca.polarity, "lower or upper")
      ->check(CLI::IsMember({"lower", "upper"}))
      ->capture_default_str();
  check->add_option("--incs", ca.spec.incs, "increments per replica")->capture_default_str();
  check->add_option("--decs", ca.spec.decs, "decrements per replica")->capture_default_str();
  check->add_option("--transfers", ca.spec.transfers, "unit transfers per replica")
      ->capture_default_str();
  check->add_option("--max-updates", ca.max_updates, "updates across all replicas")
      ->capture_default_str();
  check->add_option("--merges", ca.spec.max_merges, "merge events")->capture_default_str();
  check->add_option("--max-depth", ca.max_depth, "longest path, 0 for no limit");
  check->add_option("--max-states", ca.spec.max_states, "give up past this many states")
      ->capture_default_str();
  check->add_option("--trace-out", ca.trace_out, "write a counterexample trace here");
  check->add_flag("--mutant-skip-dec-check", ca.spec.mutant)->group("");
  check->callback([&] { rc = run_check(ca); });

  std::string trace_path;
  auto* replay = app.add_subcommand("replay", "re-execute a trace written by check");
  replay->add_option("trace", trace_path, "trace file")->required();
  replay->callback([&] { rc = run_replay(trace_path); });

  SimArgs sa;
  auto* simulate = app.add_subcommand("simulate", "run one scenario file, CSV out");
  simulate->add_option("config", sa.config, "scenario file")->required();
  simulate->add_option("--seed", sa.seed, "override the seed");
  simulate->add_option("--duration", sa.duration, "override duration_ms");
  simulate->add_option("--clients", sa.clients, "override clients (one count, or one per DC)");
  simulate->add_option("--strategy", sa.strategy, "override strategy");
  simulate->add_option("--out", sa.out, "metrics CSV file (default stdout)");
  simulate->add_option("--ops-out", sa.ops_out, "per-operation CSV file");
  simulate->callback([&] { rc = run_simulate(sa); });

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "run a bundled sweep, one CSV per point");
  bench->add_option("scenario", ba.name,
                    "single-counter, multi-counter-100, exhaustion-6000 or violation-count")
      ->required();
  bench->add_option("--seed", ba.seed, "override the seed");
  bench->add_option("--duration", ba.duration, "override duration_ms");
  bench->add_option("--clients", ba.clients, "run only this total client count");
  bench->add_option("--strategy", ba.strategy, "run only this strategy");
  bench->add_option("--out", ba.out, "directory for the CSV files (default stdout)");
  bench->callback([&] { rc = run_bench(ba); });

  auto* demo = app.add_subcommand("demo", "short walkthrough");
  demo->callback([&] { rc = run_demo(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return kUsage;
  }
  return rc;
}
