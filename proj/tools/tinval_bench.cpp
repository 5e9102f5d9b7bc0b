// Command-line driver for workload runs and index micro-benchmarks.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tinval/bench/index_bench.hpp"
#include "tinval/bench/report.hpp"
#include "tinval/bench/workload.hpp"
#include "tinval/error.hpp"

namespace {

using namespace tinval;
using namespace tinval::bench;

struct Common {
  std::string dist = "zipfian";
  double theta = 0.99;
  std::size_t threads = 1;
  std::uint64_t ops = 100000;
  std::uint64_t seed = 1;
  std::uint32_t bloom_bits = 128;
  std::uint32_t keys_per_filter = 10;
  std::string out;
  std::string format = "csv";
  bool validate = false;
};

struct WorkloadArgs {
  std::string mix = "ycsb-rh";
  std::string strategy = "transparent-p";
  std::string fixture;
  double ttl = 1.0;
  std::uint64_t ticks_per_second = 10000;
  std::size_t capacity = 10000;
  std::uint64_t max_scan = 10;
};

struct IndexArgs {
  std::string index = "qtree";
  std::vector<double> insert_ratios = {0.25, 0.5, 0.75};
  std::uint64_t preload = 1000000;
  double max_seconds = 0;
  std::uint64_t max_width = 10;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--dist", c.dist, "uniform or zipfian")->check(CLI::IsMember({"uniform", "zipfian"}));
  app->add_option("--theta", c.theta, "zipfian skew in (0, 1)");
  app->add_option("--threads", c.threads, "client threads")->check(CLI::PositiveNumber);
  app->add_option("--ops", c.ops, "operations across all threads")->check(CLI::PositiveNumber);
  app->add_option("--seed", c.seed, "base random seed");
  app->add_option("--bloom-bits", c.bloom_bits, "bits per bloom filter");
  app->add_option("--keys-per-filter", c.keys_per_filter, "keys per bloom filter");
  app->add_option("--out", c.out, "report path; stdout when omitted");
  app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_flag("--validate", c.validate, "check results and audit indexes; nonzero exit on audit failure");
}

std::vector<RunReport> run_workloads(const Common& c, const WorkloadArgs& a) {
  WorkloadSpec spec = WorkloadSpec::named(a.mix);
  spec.distribution = parse_distribution(c.dist);
  spec.theta = c.theta;
  spec.threads = c.threads;
  spec.ops = c.ops;
  spec.seed = c.seed;
  spec.validate = c.validate;
  spec.max_scan_length = a.max_scan;
  spec.ticks_per_second = a.ticks_per_second;
  spec.check();

  std::string fixture = a.fixture;
  if (fixture.empty()) {
    fixture = std::holds_alternative<TpccMix>(spec.mix) ? "fixtures/tpcc.fix" : "fixtures/ycsb.fix";
  }
  const auto bloom = BloomConfig::with_optimal_k(c.bloom_bits, c.keys_per_filter);

  std::vector<StrategyKind> strategies;
  if (a.strategy == "all") {
    strategies = {StrategyKind::transparent_p, StrategyKind::transparent_b, StrategyKind::coarse,
                  StrategyKind::ttl};
  } else {
    strategies = {parse_strategy(a.strategy)};
  }

  std::vector<RunReport> reports;
  for (auto s : strategies) {
    EngineConfig cfg;
    cfg.strategy = s;
    cfg.capacity = a.capacity;
    cfg.bloom = bloom;
    cfg.ttl_ticks = ttl_ticks_for(a.ttl, spec);
    auto db = load_fixture_file(fixture, bloom);
    reports.push_back(run_workload(spec, cfg, *db));
  }
  return reports;
}

std::vector<RunReport> run_index_benches(const Common& c, const IndexArgs& a) {
  std::vector<IndexKind> kinds;
  if (a.index == "both") {
    kinds = {IndexKind::qtree, IndexKind::bftree};
  } else {
    kinds = {parse_index_kind(a.index)};
  }
  std::vector<RunReport> reports;
  for (auto kind : kinds) {
    for (double ratio : a.insert_ratios) {
      IndexBenchSpec spec;
      spec.kind = kind;
      spec.insert_ratio = ratio;
      spec.distribution = parse_distribution(c.dist);
      spec.theta = c.theta;
      spec.threads = c.threads;
      spec.preload = a.preload;
      spec.ops = c.ops;
      spec.max_seconds = a.max_seconds;
      spec.seed = c.seed;
      spec.bloom = BloomConfig::with_optimal_k(c.bloom_bits, c.keys_per_filter);
      spec.max_width = a.max_width;
      reports.push_back(run_index_bench(spec));
    }
  }
  return reports;
}

int emit(const Common& c, const std::vector<RunReport>& reports) {
  const auto format = parse_format(c.format);
  if (c.out.empty()) {
    std::cout << (format == ReportFormat::csv ? to_csv(reports) : to_json(reports));
  } else {
    write_report(reports, c.out, format);
  }
  if (!c.validate) return 0;
  int status = 0;
  for (const auto& r : reports) {
    if (r.audit_problems > 0) {
      std::cerr << "audit failed: " << r.workload << " " << r.strategy << ": " << r.audit_problems
                << " problem(s)\n";
      status = 2;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cache invalidation benchmarks"};
  app.require_subcommand(1);

  Common wc;
  WorkloadArgs wa;
  auto* workload = app.add_subcommand("workload", "run a cache workload through engine and database");
  add_common(workload, wc);
  workload->add_option("--mix", wa.mix, "ycsb-rh, ycsb-sh, ycsb-mix, ycsb-ro, tpcc, ycsb:R,S,U or tpcc:N,S");
  workload->add_option("--strategy", wa.strategy, "transparent-p, transparent-b, coarse, ttl or all");
  workload->add_option("--fixture", wa.fixture, "database fixture file");
  workload->add_option("--ttl", wa.ttl, "TTL in seconds for the ttl strategy");
  workload->add_option("--ticks-per-second", wa.ticks_per_second, "operations per simulated second");
  workload->add_option("--capacity", wa.capacity, "cache entries");
  workload->add_option("--max-scan", wa.max_scan, "longest range scan");

  Common ic;
  ic.threads = 16;
  ic.dist = "uniform";
  ic.ops = 1000000;
  IndexArgs ia;
  auto* index = app.add_subcommand("index-bench", "insert/invalidate throughput of one index");
  add_common(index, ic);
  index->add_option("--index", ia.index, "qtree, bftree or both")
      ->check(CLI::IsMember({"qtree", "bftree", "both"}));
  index->add_option("--insert-ratio", ia.insert_ratios, "insert shares to sweep")->delimiter(',');
  index->add_option("--preload", ia.preload, "items loaded before timing");
  index->add_option("--max-seconds", ia.max_seconds, "time limit per run; 0 for none");
  index->add_option("--max-width", ia.max_width, "keys covered by one item, drawn from 1..N")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (workload->parsed()) return emit(wc, run_workloads(wc, wa));
    return emit(ic, run_index_benches(ic, ia));
  } catch (const tinval::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
