#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include "tinval/error.hpp"
#include "tinval/simdb.hpp"

namespace tinval {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw Error(Errc::malformed_fixture, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_words(std::string_view s, std::size_t line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size() || s[i] == '#') break;
    std::string word;
    bool quoted = false;
    while (i < s.size() && (quoted || (s[i] != ' ' && s[i] != '\t'))) {
      if (s[i] == '"') {
        quoted = !quoted;
      } else if (quoted && s[i] == '\\' && i + 1 < s.size()) {
        word += '\\';
        word += s[++i];
        ++i;
        continue;
      }
      word += s[i++];
    }
    if (quoted) fail(line, "unterminated string");
    out.push_back(std::move(word));
  }
  return out;
}

std::int64_t parse_int(std::string_view s, std::size_t line) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) fail(line, "bad integer '" + std::string(s) + "'");
  return v;
}

// null, an integer, or a double-quoted string with \" and \\ escapes.
Value parse_literal(std::string_view s, std::size_t line) {
  if (s == "null") return Value::null();
  if (!s.empty() && s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') fail(line, "bad string literal");
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] == '\\' && i + 2 < s.size()) ++i;
      out += s[i];
    }
    return Value(std::move(out));
  }
  return Value(parse_int(s, line));
}

std::pair<std::string_view, std::string_view> split_assign(std::string_view w, std::size_t line) {
  const auto eq = w.find('=');
  if (eq == std::string_view::npos || eq == 0) fail(line, "expected name=value, got '" + std::string(w) + "'");
  return {w.substr(0, eq), w.substr(eq + 1)};
}

std::vector<std::string_view> split_colon(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto c = s.find(':', start);
    out.push_back(s.substr(start, c - start));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

struct Generator {
  enum class Kind { seq, div, uniform, text, constant } kind;
  std::int64_t a = 0;
  std::int64_t b = 0;
  Value constant;
};

Generator parse_generator(std::string_view spec, std::size_t line) {
  const auto parts = split_colon(spec);
  const auto& head = parts[0];
  if (head == "seq" && parts.size() <= 2) {
    return {Generator::Kind::seq, parts.size() == 2 ? parse_int(parts[1], line) : 0, 0, {}};
  }
  if (head == "div" && (parts.size() == 2 || parts.size() == 3)) {
    Generator g{Generator::Kind::div, parse_int(parts[1], line),
                parts.size() == 3 ? parse_int(parts[2], line) : 0, {}};
    if (g.a <= 0) fail(line, "div needs a positive divisor");
    return g;
  }
  if (head == "uniform" && parts.size() == 3) {
    Generator g{Generator::Kind::uniform, parse_int(parts[1], line), parse_int(parts[2], line), {}};
    if (g.a > g.b) fail(line, "uniform bounds out of order");
    return g;
  }
  if (head == "text" && parts.size() == 2) {
    Generator g{Generator::Kind::text, parse_int(parts[1], line), 0, {}};
    if (g.a < 0) fail(line, "negative text length");
    return g;
  }
  if (head == "const" && parts.size() >= 2) {
    return {Generator::Kind::constant, 0, 0, parse_literal(spec.substr(6), line)};
  }
  fail(line, "unknown generator '" + std::string(spec) + "'");
}

struct Loader {
  explicit Loader(Database& d) : db(d) {}

  Database& db;
  Table* current = nullptr;
  std::vector<Column> pending_schema;
  std::vector<std::string> pending_indexes;
  std::string pending_name;
  bool open = false;

  // A table is created once its first row, generator or `end` arrives, so
  // columns and indexes may be declared in any order before that.
  Table& materialize(std::size_t line) {
    if (!open) fail(line, "no open table");
    if (!current) {
      try {
        current = &db.create_table(pending_name, pending_schema);
        for (const auto& c : pending_indexes) current->add_index(c);
      } catch (const Error& e) {
        fail(line, e.what());
      }
    }
    return *current;
  }

  void add_tuple(Tuple t, std::size_t line) {
    Table& tab = materialize(line);
    try {
      tab.insert(tab.normalize(std::move(t)));
    } catch (const Error& e) {
      fail(line, e.what());
    }
  }

  void directive(const std::vector<std::string>& w, std::size_t line) {
    const auto& cmd = w[0];
    if (cmd == "table") {
      if (w.size() != 2) fail(line, "usage: table <name>");
      if (open) materialize(line);
      open = true;
      current = nullptr;
      pending_name = w[1];
      pending_schema.clear();
      pending_indexes.clear();
    } else if (cmd == "column") {
      if (w.size() != 3 || (w[2] != "int" && w[2] != "text")) fail(line, "usage: column <name> int|text");
      if (!open || current) fail(line, "column after rows or outside a table");
      pending_schema.push_back({w[1], w[2] == "int" ? ValueType::integer : ValueType::text});
    } else if (cmd == "index") {
      if (w.size() != 2) fail(line, "usage: index <column>");
      if (!open) fail(line, "index outside a table");
      if (current) {
        try {
          current->add_index(w[1]);
        } catch (const Error& e) {
          fail(line, e.what());
        }
      } else {
        pending_indexes.push_back(w[1]);
      }
    } else if (cmd == "row") {
      if (w.size() < 2) fail(line, "usage: row <pk> col=value...");
      const auto pk = parse_int(w[1], line);
      if (pk < 0) fail(line, "negative primary key");
      Tuple t{static_cast<std::uint64_t>(pk), {}};
      for (std::size_t i = 2; i < w.size(); ++i) {
        auto [col, lit] = split_assign(w[i], line);
        t.attrs.emplace_back(std::string(col), parse_literal(lit, line));
      }
      add_tuple(std::move(t), line);
    } else if (cmd == "generate") {
      generate(w, line);
    } else if (cmd == "end") {
      if (w.size() != 1) fail(line, "usage: end");
      materialize(line);
      open = false;
      current = nullptr;
    } else {
      fail(line, "unknown directive '" + cmd + "'");
    }
  }

  void generate(const std::vector<std::string>& w, std::size_t line) {
    if (w.size() < 2) fail(line, "usage: generate <count> [start=N] [seed=N] col=gen...");
    const auto count = parse_int(w[1], line);
    if (count < 0) fail(line, "negative count");
    std::int64_t start = 0;
    std::uint64_t seed = 1;
    std::vector<std::pair<std::string, Generator>> gens;
    for (std::size_t i = 2; i < w.size(); ++i) {
      auto [name, spec] = split_assign(w[i], line);
      if (name == "start") {
        start = parse_int(spec, line);
        if (start < 0) fail(line, "negative start");
      } else if (name == "seed") {
        seed = static_cast<std::uint64_t>(parse_int(spec, line));
      } else {
        gens.emplace_back(std::string(name), parse_generator(spec, line));
      }
    }
    std::mt19937_64 rng(seed);
    for (std::int64_t r = 0; r < count; ++r) {
      const std::int64_t pk = start + r;
      Tuple t{static_cast<std::uint64_t>(pk), {}};
      for (const auto& [col, g] : gens) {
        switch (g.kind) {
          case Generator::Kind::seq:
            t.attrs.emplace_back(col, Value(pk + g.a));
            break;
          case Generator::Kind::div:
            t.attrs.emplace_back(col, Value(r / g.a + g.b));
            break;
          case Generator::Kind::uniform: {
            std::uniform_int_distribution<std::int64_t> d(g.a, g.b);
            t.attrs.emplace_back(col, Value(d(rng)));
            break;
          }
          case Generator::Kind::text: {
            std::uniform_int_distribution<int> d('a', 'z');
            std::string s(static_cast<std::size_t>(g.a), 'a');
            for (auto& c : s) c = static_cast<char>(d(rng));
            t.attrs.emplace_back(col, Value(std::move(s)));
            break;
          }
          case Generator::Kind::constant:
            t.attrs.emplace_back(col, g.constant);
            break;
        }
      }
      add_tuple(std::move(t), line);
    }
  }
};

}  // namespace

void load_fixture_into(Database& db, std::string_view text) {
  Loader loader(db);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    const auto words = split_words(line, line_no);
    if (!words.empty()) loader.directive(words, line_no);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (loader.open) loader.materialize(line_no);
}

std::unique_ptr<Database> load_fixture(std::string_view text, BloomConfig cfg) {
  auto db = std::make_unique<Database>(cfg);
  load_fixture_into(*db, text);
  return db;
}

std::unique_ptr<Database> load_fixture_file(const std::string& path, BloomConfig cfg) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_fixture(ss.str(), cfg);
}

}  // namespace tinval
