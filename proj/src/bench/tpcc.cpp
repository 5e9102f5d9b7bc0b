#include "tinval/bench/tpcc.hpp"

#include <algorithm>
#include <atomic>
#include <limits>

#include "session.hpp"
#include "tinval/error.hpp"

namespace tinval::bench {

namespace tpcc {

Query district_read(std::int64_t district) {
  Query q;
  q.id = "tpcc.district:" + std::to_string(district);
  q.tables = {"district"};
  q.selections = {Predicate::point("district.pk", Value(district))};
  return q;
}

Query stock_level(std::int64_t district, std::int64_t next_o_id, std::int64_t threshold) {
  Query q;
  q.id = "tpcc.stock_level:" + std::to_string(district) + ":" + std::to_string(next_o_id) + ":" +
         std::to_string(threshold);
  q.tables = {"district", "order_line", "stock"};
  q.joins = {{"order_line.d_id", "district.pk"}, {"order_line.i_id", "stock.pk"}};
  q.selections = {
      Predicate::point("district.pk", Value(district)),
      Predicate::point("order_line.d_id", Value(district)),
      Predicate::range("order_line.o_id", Value(next_o_id - kStockLevelWindow),
                       Value(next_o_id - 1)),
      Predicate::range("stock.quantity", Value(std::numeric_limits<std::int64_t>::min()),
                       Value(threshold), true, false)};
  return q;
}

std::vector<DmlStatement> new_order(const NewOrderInput& in) {
  if (in.items.size() != in.stock_quantities.size()) {
    throw Error(Errc::invalid_argument, "new-order needs one stock quantity per item");
  }
  std::vector<DmlStatement> out;
  const auto d = static_cast<std::uint64_t>(in.district);
  out.push_back({"tpcc.new_order.district",
                 UpdateStmt{"district", d, {{"next_o_id", Value(in.o_id + 1)}}}});
  for (std::size_t i = 0; i < in.items.size(); ++i) {
    Tuple line{in.first_line_pk + i,
               {{"d_id", Value(in.district)},
                {"o_id", Value(in.o_id)},
                {"i_id", Value(static_cast<std::int64_t>(in.items[i]))},
                {"quantity", Value(in.line_quantity)}}};
    out.push_back({"tpcc.new_order.line", InsertStmt{"order_line", std::move(line)}});
  }
  for (std::size_t i = 0; i < in.items.size(); ++i) {
    std::int64_t q = in.stock_quantities[i] - in.line_quantity;
    if (q < 10) q += 91;
    out.push_back({"tpcc.new_order.stock", UpdateStmt{"stock", in.items[i], {{"quantity", Value(q)}}}});
  }
  return out;
}

}  // namespace tpcc

namespace {

std::int64_t int_column(const std::vector<Row>& rows, const std::string& attr) {
  if (rows.size() != 1) throw Error(Errc::missing_tuple, "expected one row for " + attr);
  const auto it = rows.front().find(attr);
  if (it == rows.front().end() || !it->second.is_int()) {
    throw Error(Errc::unknown_attribute, attr);
  }
  return it->second.as_int();
}

Query stock_read(std::uint64_t item) {
  Query q;
  q.id = "tpcc.stock:" + std::to_string(item);
  q.tables = {"stock"};
  q.selections = {Predicate::point("stock.pk", Value(static_cast<std::int64_t>(item)))};
  return q;
}

class TpccDriver final : public Driver {
 public:
  TpccDriver(const WorkloadSpec& spec, const TpccMix& mix, const Database& db) : mix_(mix) {
    for (const auto& [pk, t] : db.table("district").rows()) districts_.push_back(pk);
    for (const auto& [pk, t] : db.table("stock").rows()) items_.push_back(pk);
    const Table& lines = db.table("order_line");
    for (const char* col : {"d_id", "o_id", "i_id", "quantity"}) {
      if (!lines.has_column(col)) throw Error(Errc::unknown_attribute, qualify("order_line", col));
    }
    if (!db.table("district").has_column("next_o_id")) {
      throw Error(Errc::unknown_attribute, "district.next_o_id");
    }
    if (!db.table("stock").has_column("quantity")) throw Error(Errc::unknown_attribute, "stock.quantity");
    if (districts_.empty() || items_.size() < kMaxLines) {
      throw Error(Errc::invalid_argument, "tpcc needs districts and at least 15 stock items");
    }
    next_line_pk_ = lines.rows().empty() ? 1 : lines.rows().rbegin()->first + 1;
    items_chooser_ =
        std::make_unique<KeyChooser>(items_.size(), spec.distribution, spec.theta, spec.seed);
  }

  void run_op(Session& s, std::mt19937_64& rng) override {
    const auto d = static_cast<std::int64_t>(
        districts_[std::uniform_int_distribution<std::size_t>(0, districts_.size() - 1)(rng)]);
    const std::int64_t next_o_id =
        int_column(s.peek(tpcc::district_read(d)), "district.next_o_id");
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < mix_.stock_level) {
      const auto threshold = std::uniform_int_distribution<std::int64_t>(10, 20)(rng);
      const auto q = tpcc::stock_level(d, next_o_id, threshold);
      (void)s.read(q.id, q);
      return;
    }
    tpcc::NewOrderInput in;
    in.district = d;
    in.o_id = next_o_id;
    const auto count = std::uniform_int_distribution<std::size_t>(5, kMaxLines)(rng);
    while (in.items.size() < count) {
      const auto item = items_[items_chooser_->next(rng)];
      if (std::find(in.items.begin(), in.items.end(), item) != in.items.end()) continue;
      in.items.push_back(item);
      in.stock_quantities.push_back(int_column(s.peek(stock_read(item)), "stock.quantity"));
    }
    in.first_line_pk = next_line_pk_.fetch_add(count);
    s.begin_transaction();
    for (const auto& stmt : tpcc::new_order(in)) s.write(stmt);
    s.end_transaction();
  }

 private:
  static constexpr std::size_t kMaxLines = 15;

  TpccMix mix_;
  std::vector<std::uint64_t> districts_;
  std::vector<std::uint64_t> items_;
  std::unique_ptr<KeyChooser> items_chooser_;
  std::atomic<std::uint64_t> next_line_pk_{1};
};

}  // namespace

std::unique_ptr<Driver> make_tpcc_driver(const WorkloadSpec& spec, const TpccMix& mix,
                                         const Database& db) {
  return std::make_unique<TpccDriver>(spec, mix, db);
}

}  // namespace tinval::bench
