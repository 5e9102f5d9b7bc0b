#include "tinval/bench/report.hpp"

#include <cstdio>
#include <fstream>
#include <type_traits>

#include <json.hpp>

#include "tinval/error.hpp"

namespace tinval::bench {

namespace {

// Single source of the column order shared by CSV and JSON.
template <class R, class F>
void visit_fields(R& r, F&& f) {
  f("kind", r.kind);
  f("workload", r.workload);
  f("strategy", r.strategy);
  f("distribution", r.distribution);
  f("theta", r.theta);
  f("threads", r.threads);
  f("ops", r.ops);
  f("seed", r.seed);
  f("bloom_bits", r.bloom_bits);
  f("keys_per_filter", r.keys_per_filter);
  f("ttl_ticks", r.ttl_ticks);
  f("insert_ratio", r.insert_ratio);
  f("preload", r.preload);
  auto& m = r.metrics;
  f("lookups", m.lookups);
  f("hits", m.hits);
  f("misses", m.misses);
  f("stale_hits", m.stale_hits);
  f("admissions", m.admissions);
  f("rejected_admissions", m.rejected_admissions);
  f("capacity_evictions", m.capacity_evictions);
  f("ttl_expirations", m.ttl_expirations);
  f("updates", m.updates);
  f("cache_invalidations", m.invalidations);
  f("false_invalidations", m.false_invalidations);
  f("unaffected_pairs", m.unaffected_pairs);
  f("lookup_p95_ns", m.lookup_p95_ns);
  f("admit_p95_ns", m.admit_p95_ns);
  f("update_p95_ns", m.update_p95_ns);
  f("hit_ratio", r.hit_ratio);
  f("stale_rate", r.stale_rate);
  f("false_invalidation_rate", r.false_invalidation_rate);
  f("analytic_fp", r.analytic_fp);
  f("missed_invalidations", r.missed_invalidations);
  f("insert_count", r.inserts.count);
  f("insert_p95_ns", r.inserts.p95_ns);
  f("evict_count", r.evictions.count);
  f("evict_p95_ns", r.evictions.p95_ns);
  f("invalidate_count", r.invalidations.count);
  f("invalidate_p95_ns", r.invalidations.p95_ns);
  f("seconds", r.seconds);
  f("throughput", r.throughput);
  f("validated", r.validated);
  f("audit_problems", r.audit_problems);
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_cell(std::uint64_t v) { return std::to_string(v); }
std::string csv_cell(bool v) { return v ? "1" : "0"; }

}  // namespace

ReportFormat parse_format(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw Error(Errc::invalid_argument, "unknown report format '" + std::string(name) + "'");
}

std::string to_csv(const std::vector<RunReport>& reports) {
  std::string out;
  const RunReport header_source;
  bool first = true;
  visit_fields(header_source, [&](const char* name, const auto&) {
    if (!first) out += ',';
    out += name;
    first = false;
  });
  out += '\n';
  for (const auto& r : reports) {
    first = true;
    visit_fields(r, [&](const char*, const auto& v) {
      if (!first) out += ',';
      out += csv_cell(v);
      first = false;
    });
    out += '\n';
  }
  return out;
}

std::string to_json(const std::vector<RunReport>& reports) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    visit_fields(r, [&](const char* name, const auto& v) { obj[name] = v; });
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

std::vector<RunReport> reports_from_json(std::string_view text) {
  std::vector<RunReport> out;
  try {
    const auto arr = nlohmann::json::parse(text);
    if (!arr.is_array()) throw Error(Errc::invalid_argument, "report JSON must be an array");
    for (const auto& obj : arr) {
      RunReport r;
      visit_fields(r, [&](const char* name, auto& v) {
        v = obj.at(name).get<std::remove_reference_t<decltype(v)>>();
      });
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed report JSON: ") + e.what());
  }
  return out;
}

void write_report(const std::vector<RunReport>& reports, const std::string& path,
                  ReportFormat format) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::io_error, "cannot open '" + path + "' for writing");
  f << (format == ReportFormat::csv ? to_csv(reports) : to_json(reports));
  if (!f.flush()) throw Error(Errc::io_error, "failed writing '" + path + "'");
}

}  // namespace tinval::bench
