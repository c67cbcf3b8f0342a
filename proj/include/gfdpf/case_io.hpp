#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gfdpf/network.hpp"

namespace gfdpf {

namespace detail {

// Numeric matrices and scalars of a MatPower case script; other statements
// (function header, strings, cell arrays) are skipped.
class MatpowerReader {
 public:
  struct Matrix {
    std::vector<std::vector<double>> rows;
    int line = 0;
  };

  explicit MatpowerReader(std::string_view text) : text_(text) {}

  void read() {
    for (;;) {
      skip_blank(true);
      if (eof()) return;
      const int line = line_, col = col_;
      std::string name = identifier();
      if (name.empty()) fail("expected a statement");
      if (name == "function") {
        skip_line();
        continue;
      }
      skip_blank(false);
      if (peek() != '=') {
        skip_line();
        continue;
      }
      get();
      skip_blank(false);
      const char c = peek();
      if (c == '[') {
        matrices_[name] = matrix();
        matrices_[name].line = line;
      } else if (c == '{') {
        skip_group('{', '}');
      } else if (c == '\'' || c == '"') {
        skip_string();
      } else {
        scalars_[name] = number();
      }
      skip_blank(false);
      if (peek() == ';') get();
      (void)col;
    }
  }

  const Matrix* matrix_named(const std::string& name) const {
    auto it = matrices_.find(name);
    return it == matrices_.end() ? nullptr : &it->second;
  }

  const double* scalar_named(const std::string& name) const {
    auto it = scalars_.find(name);
    return it == scalars_.end() ? nullptr : &it->second;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw CaseError(CaseError::Code::Syntax, what, line_, col_);
  }

 private:
  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }

  char get() {
    const char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_line() {
    while (!eof() && peek() != '\n') get();
  }

  // Skips spaces and comments; newlines too when `newlines` is set.
  void skip_blank(bool newlines) {
    while (!eof()) {
      const char c = peek();
      if (c == '%' || c == '#') {
        skip_line();
      } else if (c == '.' && text_.substr(pos_, 3) == "...") {
        skip_line();
        if (!eof()) get();
      } else if (c == ' ' || c == '\t' || c == '\r' || (newlines && c == '\n')) {
        get();
      } else {
        return;
      }
    }
  }

  std::string identifier() {
    std::string out;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '.'))
      out.push_back(get());
    return out;
  }

  double number() {
    const std::size_t start = pos_;
    std::size_t end = pos_;
    while (end < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '.' ||
            text_[end] == '-' || text_[end] == '+'))
      ++end;
    std::string_view tok = text_.substr(start, end - start);
    double value = 0.0;
    if (tok == "Inf" || tok == "inf" || tok == "+Inf") {
      value = HUGE_VAL;
    } else if (tok == "-Inf" || tok == "-inf") {
      value = -HUGE_VAL;
    } else {
      std::string_view body = tok;
      if (!body.empty() && body.front() == '+') body.remove_prefix(1);
      auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
      if (ec != std::errc() || ptr != body.data() + body.size() || body.empty())
        fail("malformed number '" + std::string(tok) + "'");
    }
    while (pos_ < end) get();
    return value;
  }

  Matrix matrix() {
    get();  // '['
    Matrix m;
    std::vector<double> row;
    auto end_row = [&] {
      if (row.empty()) return;
      if (!m.rows.empty() && m.rows.front().size() != row.size())
        fail("row has " + std::to_string(row.size()) + " columns, expected " +
             std::to_string(m.rows.front().size()));
      m.rows.push_back(std::move(row));
      row.clear();
    };
    for (;;) {
      skip_blank(false);
      if (eof()) fail("unterminated matrix");
      const char c = peek();
      if (c == ']') {
        get();
        end_row();
        return m;
      }
      if (c == ';' || c == '\n') {
        get();
        end_row();
      } else if (c == ',') {
        get();
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.' ||
                 c == 'I' || c == 'i') {
        row.push_back(number());
      } else {
        fail(std::string("unexpected character '") + c + "' in matrix");
      }
    }
  }

  void skip_group(char open, char close) {
    int depth = 0;
    do {
      if (eof()) fail(std::string("unterminated '") + open + "'");
      const char c = get();
      if (c == open) ++depth;
      if (c == close) --depth;
    } while (depth > 0);
  }

  void skip_string() {
    const char quote = get();
    while (!eof() && peek() != quote && peek() != '\n') get();
    if (peek() != quote) fail("unterminated string");
    get();
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  std::map<std::string, Matrix> matrices_;
  std::map<std::string, double> scalars_;
};

inline BusKind matpower_bus_kind(double code, int bus_id) {
  switch (static_cast<int>(code)) {
    case 1: return BusKind::PQ;
    case 2: return BusKind::PV;
    case 3: return BusKind::Slack;
    default:
      throw CaseError(CaseError::Code::InvalidValue,
                      "bus " + std::to_string(bus_id) + ": unsupported bus type " +
                          std::to_string(static_cast<int>(code)));
  }
}

inline int as_bus_id(double v, int line) {
  if (v != std::floor(v) || std::abs(v) > 2e9)
    throw CaseError(CaseError::Code::Syntax, "bus id must be an integer", line, 1);
  return static_cast<int>(v);
}

inline Network parse_matpower(std::string_view text) {
  MatpowerReader reader(text);
  reader.read();
  const double* base = reader.scalar_named("mpc.baseMVA");
  if (!base) throw CaseError(CaseError::Code::Syntax, "missing mpc.baseMVA");
  const double base_mva = *base;
  if (!(base_mva > 0.0)) throw CaseError(CaseError::Code::InvalidValue, "mpc.baseMVA must be positive");

  auto table = [&](const char* name, std::size_t min_cols) -> const MatpowerReader::Matrix& {
    const auto* m = reader.matrix_named(name);
    if (!m) throw CaseError(CaseError::Code::Syntax, std::string("missing ") + name);
    if (!m->rows.empty() && m->rows.front().size() < min_cols)
      throw CaseError(CaseError::Code::Syntax,
                      std::string(name) + " needs at least " + std::to_string(min_cols) + " columns",
                      m->line, 1);
    return *m;
  };

  const auto& bus_m = table("mpc.bus", 13);
  const auto& gen_m = table("mpc.gen", 10);
  const auto& branch_m = table("mpc.branch", 11);

  std::vector<Bus> buses;
  buses.reserve(bus_m.rows.size());
  for (const auto& r : bus_m.rows) {
    Bus b;
    b.id = as_bus_id(r[0], bus_m.line);
    b.kind = matpower_bus_kind(r[1], b.id);
    b.pd = r[2] / base_mva;
    b.qd = r[3] / base_mva;
    b.gs = r[4] / base_mva;
    b.bs = r[5] / base_mva;
    b.area_hint = static_cast<int>(r[6]);
    b.vm0 = r[7];
    b.va0 = r[8] * kDegToRad;
    b.base_kv = r[9];
    buses.push_back(b);
  }

  std::vector<Generator> gens;
  gens.reserve(gen_m.rows.size());
  for (const auto& r : gen_m.rows) {
    Generator g;
    g.bus = as_bus_id(r[0], gen_m.line);
    g.pg = r[1] / base_mva;
    g.qg = r[2] / base_mva;
    g.vset = r[5];
    g.in_service = r[7] > 0.0;
    g.pmax = r[8] / base_mva;
    gens.push_back(g);
  }

  std::vector<Branch> branches;
  branches.reserve(branch_m.rows.size());
  for (const auto& r : branch_m.rows) {
    Branch br;
    br.from = as_bus_id(r[0], branch_m.line);
    br.to = as_bus_id(r[1], branch_m.line);
    br.r = r[2];
    br.x = r[3];
    br.b_charging = r[4];
    br.tap = r[8] == 0.0 ? 1.0 : r[8];
    br.shift = r[9] * kDegToRad;
    br.in_service = r[10] > 0.0;
    branches.push_back(br);
  }
  return Network(base_mva, std::move(buses), std::move(branches), std::move(gens));
}

inline std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline BusKind bus_kind_from_name(const std::string& s, int id) {
  if (s == "Slack") return BusKind::Slack;
  if (s == "PV") return BusKind::PV;
  if (s == "PQ") return BusKind::PQ;
  throw CaseError(CaseError::Code::InvalidValue,
                  "bus " + std::to_string(id) + ": unknown kind '" + s + "'");
}

inline Network parse_native(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw CaseError(CaseError::Code::Syntax, "malformed case document", line, col);
  }
  try {
    const double base = doc.at("base_mva").get<double>();
    if (!(base > 0.0)) throw CaseError(CaseError::Code::InvalidValue, "base_mva must be positive");
    std::vector<Bus> buses;
    for (const json& jb : doc.at("buses")) {
      Bus b;
      b.id = jb.at("id").get<int>();
      b.kind = bus_kind_from_name(jb.at("kind").get<std::string>(), b.id);
      b.pd = jb.value("pd", 0.0) / base;
      b.qd = jb.value("qd", 0.0) / base;
      b.gs = jb.value("gs", 0.0) / base;
      b.bs = jb.value("bs", 0.0) / base;
      b.vm0 = jb.value("vm0", 1.0);
      b.va0 = jb.value("va0", 0.0) * kDegToRad;
      b.base_kv = jb.value("base_kv", 0.0);
      if (jb.contains("area_hint") && !jb.at("area_hint").is_null())
        b.area_hint = jb.at("area_hint").get<int>();
      buses.push_back(b);
    }
    std::vector<Branch> branches;
    for (const json& jr : doc.at("branches")) {
      Branch br;
      br.from = jr.at("from").get<int>();
      br.to = jr.at("to").get<int>();
      br.r = jr.value("r", 0.0);
      br.x = jr.at("x").get<double>();
      br.b_charging = jr.value("b_charging", 0.0);
      br.tap = jr.value("tap", 1.0);
      br.shift = jr.value("shift", 0.0) * kDegToRad;
      br.in_service = jr.value("status", true);
      branches.push_back(br);
    }
    std::vector<Generator> gens;
    for (const json& jg : doc.at("generators")) {
      Generator g;
      g.bus = jg.at("bus").get<int>();
      g.pg = jg.value("pg", 0.0) / base;
      g.qg = jg.value("qg", 0.0) / base;
      g.vset = jg.value("vset", 1.0);
      g.pmax = jg.value("pmax", 0.0) / base;
      g.in_service = jg.value("in_service", true);
      gens.push_back(g);
    }
    return Network(base, std::move(buses), std::move(branches), std::move(gens));
  } catch (const json::exception& e) {
    throw CaseError(CaseError::Code::Syntax, std::string("case document: ") + e.what());
  }
}

}  // namespace detail

/// Parses either a MatPower-style case script or the native JSON document
/// (detected by a leading '{').
inline Network parse_case(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return detail::parse_native(text);
  return detail::parse_matpower(text);
}

inline Network load_case(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CaseError(CaseError::Code::Io, "cannot open case file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

/// Native JSON document; powers in MW/MVAr, angles in degrees.
inline nlohmann::json case_to_json(const Network& net) {
  using nlohmann::json;
  const double base = net.base_mva();
  json doc;
  doc["base_mva"] = base;
  json& buses = doc["buses"] = json::array();
  for (const Bus& b : net.buses()) {
    json jb{{"id", b.id},        {"kind", to_string(b.kind)}, {"pd", b.pd * base},
            {"qd", b.qd * base}, {"gs", b.gs * base},         {"bs", b.bs * base},
            {"vm0", b.vm0},      {"va0", b.va0 * kRadToDeg},  {"base_kv", b.base_kv}};
    jb["area_hint"] = b.area_hint ? json(*b.area_hint) : json(nullptr);
    buses.push_back(std::move(jb));
  }
  json& branches = doc["branches"] = json::array();
  for (const Branch& br : net.branches())
    branches.push_back({{"from", br.from},
                        {"to", br.to},
                        {"r", br.r},
                        {"x", br.x},
                        {"b_charging", br.b_charging},
                        {"tap", br.tap},
                        {"shift", br.shift * kRadToDeg},
                        {"status", br.in_service}});
  json& gens = doc["generators"] = json::array();
  for (const Generator& g : net.generators())
    gens.push_back({{"bus", g.bus},
                    {"pg", g.pg * base},
                    {"qg", g.qg * base},
                    {"vset", g.vset},
                    {"pmax", g.pmax * base},
                    {"in_service", g.in_service}});
  return doc;
}

inline std::string serialize_case(const Network& net) { return case_to_json(net).dump(1) + "\n"; }

}  // namespace gfdpf
