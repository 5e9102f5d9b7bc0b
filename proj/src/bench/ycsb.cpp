#include "tinval/bench/ycsb.hpp"

#include "session.hpp"
#include "tinval/error.hpp"

namespace tinval::bench {

namespace ycsb {

namespace {
std::string pk_attr() { return qualify(kTable, kPrimaryKey); }
}  // namespace

Query point_read(std::uint64_t pk) {
  Query q;
  q.id = "ycsb.point:" + std::to_string(pk);
  q.tables = {std::string(kTable)};
  q.selections = {Predicate::point(pk_attr(), Value(static_cast<std::int64_t>(pk)))};
  return q;
}

Query range_scan(std::uint64_t first, std::uint64_t length) {
  if (length == 0) throw Error(Errc::invalid_argument, "scan length must be positive");
  Query q;
  q.id = "ycsb.scan:" + std::to_string(first) + ":" + std::to_string(length);
  q.tables = {std::string(kTable)};
  q.selections = {Predicate::range(pk_attr(), Value(static_cast<std::int64_t>(first)),
                                   Value(static_cast<std::int64_t>(first + length - 1)))};
  return q;
}

DmlStatement update(std::uint64_t pk, std::int64_t value) {
  return {"ycsb.update:" + std::to_string(pk),
          UpdateStmt{std::string(kTable), pk, {{std::string(kField), Value(value)}}}};
}

}  // namespace ycsb

namespace {

class YcsbDriver final : public Driver {
 public:
  YcsbDriver(const WorkloadSpec& spec, const YcsbMix& mix, const Database& db) : mix_(mix) {
    const Table& t = db.table(ycsb::kTable);
    if (!t.has_column(ycsb::kField)) {
      throw Error(Errc::unknown_attribute, qualify(ycsb::kTable, ycsb::kField));
    }
    for (const auto& [pk, tuple] : t.rows()) pks_.push_back(pk);
    if (pks_.empty()) throw Error(Errc::invalid_argument, "usertable is empty");
    keys_ = std::make_unique<KeyChooser>(pks_.size(), spec.distribution, spec.theta, spec.seed);
    max_scan_ = spec.max_scan_length;
  }

  void run_op(Session& s, std::mt19937_64& rng) override {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const std::uint64_t pk = pks_[keys_->next(rng)];
    if (u < mix_.point_read) {
      const auto q = ycsb::point_read(pk);
      (void)s.read(q.id, q);
    } else if (u < mix_.point_read + mix_.range_scan) {
      const auto len = std::uniform_int_distribution<std::uint64_t>(1, max_scan_)(rng);
      const auto q = ycsb::range_scan(pk, len);
      (void)s.read(q.id, q);
    } else {
      const auto v = std::uniform_int_distribution<std::int64_t>(0, 999999)(rng);
      s.write(ycsb::update(pk, v));
    }
  }

 private:
  YcsbMix mix_;
  std::vector<std::uint64_t> pks_;
  std::unique_ptr<KeyChooser> keys_;
  std::uint64_t max_scan_ = 10;
};

}  // namespace

std::unique_ptr<Driver> make_ycsb_driver(const WorkloadSpec& spec, const YcsbMix& mix,
                                         const Database& db) {
  return std::make_unique<YcsbDriver>(spec, mix, db);
}

}  // namespace tinval::bench
