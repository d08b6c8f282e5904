#include "wkam/spec.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "wkam/errors.hpp"
#include "wkam/expr.hpp"

namespace wkam {

namespace {

enum class Kind { Number, Integer, Expression, Point, Text, Angle, Family };

struct Field {
  const char* key;
  Kind kind;
  const char* fallback;  // nullptr means required
};

using Schema = std::vector<Field>;

const std::map<std::string, Schema>& domain_schemas() {
  static const std::map<std::string, Schema> s{
      {"disk", {{"center_x", Kind::Number, "0"}, {"center_y", Kind::Number, "0"}, {"radius", Kind::Number, "1"}}},
      {"ellipse",
       {{"center_x", Kind::Number, "0"}, {"center_y", Kind::Number, "0"}, {"semi_x", Kind::Number, "1"},
        {"semi_y", Kind::Number, "0.5"}}},
      {"rectangle",
       {{"center_x", Kind::Number, "0"}, {"center_y", Kind::Number, "0"}, {"half_x", Kind::Number, "1"},
        {"half_y", Kind::Number, "1"}, {"exponent", Kind::Number, "8"}}},
      {"interval", {{"lo", Kind::Number, "-1"}, {"hi", Kind::Number, "1"}}},
      {"expression",
       {{"psi", Kind::Expression, nullptr}, {"box_lo_x", Kind::Number, "-1"}, {"box_lo_y", Kind::Number, "-1"},
        {"box_hi_x", Kind::Number, "1"}, {"box_hi_y", Kind::Number, "1"}, {"dim", Kind::Integer, "2"}}},
  };
  return s;
}

const std::map<std::string, Schema>& hamiltonian_schemas() {
  static const std::map<std::string, Schema> s{
      {"kinetic", {}},
      {"mechanical", {{"V", Kind::Expression, "0"}}},
      {"eikonal", {{"f", Kind::Expression, "1"}}},
      {"anisotropic",
       {{"m11", Kind::Expression, "1"}, {"m12", Kind::Expression, "0"}, {"m22", Kind::Expression, "1"},
        {"V", Kind::Expression, "0"}}},
  };
  return s;
}

const Schema& fixed_schema(const std::string& block) {
  static const std::map<std::string, Schema> s{
      {"oblique", {{"angle", Kind::Angle, "normal"}, {"g", Kind::Expression, "0"}}},
      {"grid", {{"h", Kind::Number, "0.05"}, {"dt", Kind::Number, "0"}, {"T", Kind::Number, "1"}}},
      {"run",
       {{"tol_c", Kind::Number, "0.05"},
        {"slope_horizon", Kind::Number, "8"},
        {"seed", Kind::Integer, "1"},
        {"u0", Kind::Expression, "0"},
        {"from", Kind::Point, "0.5,0"},
        {"at", Kind::Point, "0,0"},
        {"horizon", Kind::Number, "10"},
        {"refine", Kind::Integer, "4"},
        {"x0", Kind::Point, "1,0"},
        {"v", Kind::Point, "1,0"},
        {"skorokhod_T", Kind::Number, "3.141592653589793"},
        {"lambda", Kind::Number, "0.5"},
        {"pairs", Kind::Integer, "20"}}},
      {"output", {{"dir", Kind::Text, "out"}, {"formats", Kind::Text, "csv,json"}}},
  };
  return s.at(block);
}

const std::vector<std::string>& block_order() {
  static const std::vector<std::string> b{"domain", "hamiltonian", "oblique", "grid", "run", "output"};
  return b;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

[[noreturn]] void spec_fail(const std::string& what) { fail(ErrorCode::SpecError, what); }

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  if (*b == '+') ++b;
  const auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e && std::isfinite(out);
}

struct RawValue {
  std::string text;
  int line = 0;
};
using RawBlocks = std::map<std::string, std::map<std::string, RawValue>>;

std::string where(const std::string& block, const std::string& key, int line) {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  os << block << "." << key;
  return os.str();
}

std::string canonical(const std::string& block, const Field& f, const RawValue& raw) {
  const std::string at = where(block, f.key, raw.line);
  const std::string v = trim(raw.text);
  switch (f.kind) {
    case Kind::Number: {
      double x;
      if (!parse_number(v, x)) spec_fail(at + ": expected a number, got '" + v + "'");
      return format_number(x);
    }
    case Kind::Integer: {
      double x;
      if (!parse_number(v, x) || x != std::floor(x) || std::abs(x) > 9e15)
        spec_fail(at + ": expected an integer, got '" + v + "'");
      return format_number(x);
    }
    case Kind::Expression: {
      try {
        return Expr::parse(v).source();
      } catch (const Error& e) {
        spec_fail(at + ": " + e.what());
      }
    }
    case Kind::Point: {
      const auto comma = v.find(',');
      double x, y;
      if (comma == std::string::npos || !parse_number(trim(v.substr(0, comma)), x) ||
          !parse_number(trim(v.substr(comma + 1)), y))
        spec_fail(at + ": expected a point 'x,y', got '" + v + "'");
      return format_number(x) + "," + format_number(y);
    }
    case Kind::Angle: {
      if (v == "normal") return v;
      double x;
      if (!parse_number(v, x)) spec_fail(at + ": expected 'normal' or an angle in degrees, got '" + v + "'");
      if (!(std::abs(x) < 90.0))
        spec_fail(at + ": angle " + format_number(x) +
                  " deg violates obliqueness (the rotated normal needs |angle| < 90)");
      return format_number(x);
    }
    case Kind::Text:
    case Kind::Family:
      if (v.empty()) spec_fail(at + ": empty value");
      return v;
  }
  return v;
}

void fill_block(ProblemSpec& spec, const std::string& block, const Schema& schema,
                std::map<std::string, RawValue> raw, const std::string& context) {
  auto& out = spec.blocks[block];
  for (const Field& f : schema) {
    auto it = raw.find(f.key);
    if (it == raw.end()) {
      if (!f.fallback) spec_fail(block + "." + f.key + ": required" + context);
      out[f.key] = canonical(block, f, RawValue{f.fallback, 0});
    } else {
      out[f.key] = canonical(block, f, it->second);
      raw.erase(it);
    }
  }
  if (!raw.empty()) {
    std::vector<std::string> allowed;
    for (const Field& f : schema) allowed.push_back(f.key);
    const auto& [key, val] = *raw.begin();
    spec_fail(where(block, key, val.line) + ": unknown key" + context + " (allowed: " + join(allowed) + ")");
  }
}

void family_block(ProblemSpec& spec, const std::string& block, const std::map<std::string, Schema>& schemas,
                  const std::string& fallback, std::map<std::string, RawValue> raw) {
  std::string family = fallback;
  int line = 0;
  if (auto it = raw.find("family"); it != raw.end()) {
    family = trim(it->second.text);
    line = it->second.line;
    raw.erase(it);
  }
  auto sit = schemas.find(family);
  if (sit == schemas.end()) {
    std::vector<std::string> known;
    for (const auto& [k, _] : schemas) known.push_back(k);
    spec_fail(where(block, "family", line) + ": unknown family '" + family + "' (known: " + join(known) + ")");
  }
  spec.blocks[block]["family"] = family;
  fill_block(spec, block, sit->second, std::move(raw), " for family " + family);
}

void check_positive(const ProblemSpec& s, const std::string& block, const std::string& key, bool allow_zero = false) {
  const double v = s.number(block, key);
  if (allow_zero ? v < 0.0 : !(v > 0.0))
    spec_fail(block + "." + key + ": must be " + (allow_zero ? "non-negative" : "positive"));
}

ProblemSpec normalize(RawBlocks raw) {
  for (const auto& [name, _] : raw) {
    if (std::find(block_order().begin(), block_order().end(), name) == block_order().end())
      spec_fail("unknown block '" + name + "' (known: " + join(block_order()) + ")");
  }
  ProblemSpec s;
  family_block(s, "domain", domain_schemas(), "disk", raw["domain"]);
  family_block(s, "hamiltonian", hamiltonian_schemas(), "kinetic", raw["hamiltonian"]);
  for (const char* b : {"oblique", "grid", "run", "output"}) fill_block(s, b, fixed_schema(b), raw[b], "");

  const std::string& fam = s.text("domain", "family");
  if (fam == "disk") check_positive(s, "domain", "radius");
  if (fam == "ellipse") {
    check_positive(s, "domain", "semi_x");
    check_positive(s, "domain", "semi_y");
  }
  if (fam == "rectangle") {
    check_positive(s, "domain", "half_x");
    check_positive(s, "domain", "half_y");
    if (s.number("domain", "exponent") < 2.0) spec_fail("domain.exponent: must be at least 2");
  }
  if (fam == "interval" && !(s.number("domain", "lo") < s.number("domain", "hi")))
    spec_fail("domain.lo: must be below domain.hi");
  if (fam == "expression") {
    const double d = s.number("domain", "dim");
    if (d != 1.0 && d != 2.0) spec_fail("domain.dim: must be 1 or 2");
    if (!(s.number("domain", "box_lo_x") < s.number("domain", "box_hi_x")) ||
        !(s.number("domain", "box_lo_y") < s.number("domain", "box_hi_y")))
      spec_fail("domain.box_lo_x: bounding box corners are not ordered");
  }
  const bool one_d = fam == "interval" || (fam == "expression" && s.number("domain", "dim") == 1.0);
  if (one_d && s.text("oblique", "angle") != "normal" && s.number("oblique", "angle") != 0.0)
    spec_fail("oblique.angle: 1-D domains only admit the normal direction");
  check_positive(s, "grid", "h");
  check_positive(s, "grid", "dt", true);
  check_positive(s, "grid", "T");
  // Zero tolerances are legal: they make the corresponding gate impossible.
  check_positive(s, "run", "tol_c", true);
  check_positive(s, "run", "slope_horizon");
  check_positive(s, "run", "horizon");
  check_positive(s, "run", "skorokhod_T");
  check_positive(s, "run", "pairs");
  if (s.number("run", "refine") < 2.0) spec_fail("run.refine: must be at least 2");
  const double lam = s.number("run", "lambda");
  if (lam < 0.0 || lam > 1.0) spec_fail("run.lambda: must lie in [0, 1]");
  return s;
}

RawBlocks parse_text(std::string_view text) {
  RawBlocks raw;
  std::string block;
  int line_no = 0, block_line = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::ostringstream at;
    at << "line " << line_no << ": ";
    if (t == "}") {
      if (block.empty()) spec_fail(at.str() + "unmatched '}'");
      block.clear();
      continue;
    }
    if (t.back() == '{') {
      if (!block.empty()) spec_fail(at.str() + "blocks do not nest");
      block = trim(t.substr(0, t.size() - 1));
      if (block.empty()) spec_fail(at.str() + "block name missing");
      if (raw.count(block)) spec_fail(at.str() + "block '" + block + "' appears twice");
      raw[block];
      block_line = line_no;
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) spec_fail(at.str() + "expected 'key = value'");
    if (block.empty()) spec_fail(at.str() + "key outside of a block");
    const std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) spec_fail(at.str() + "empty key");
    if (raw[block].count(key)) spec_fail(at.str() + block + "." + key + " given twice");
    raw[block][key] = RawValue{value, line_no};
  }
  if (!block.empty()) {
    std::ostringstream os;
    os << "line " << block_line << ": block '" << block << "' is not closed";
    spec_fail(os.str());
  }
  return raw;
}

RawBlocks parse_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    spec_fail(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) spec_fail("JSON spec must be an object of blocks");
  RawBlocks raw;
  for (auto& [name, body] : j.items()) {
    if (!body.is_object()) spec_fail(name + ": block must be an object");
    for (auto& [key, val] : body.items()) {
      std::string v;
      if (val.is_string()) {
        v = val.get<std::string>();
      } else if (val.is_number()) {
        v = format_number(val.get<double>());
      } else {
        spec_fail(name + "." + key + ": value must be a string or a number");
      }
      raw[name][key] = RawValue{v, 0};
    }
  }
  return raw;
}

Vec2 point_of(const std::string& s) {
  const auto comma = s.find(',');
  return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
}

}  // namespace

const std::string& ProblemSpec::text(const std::string& block, const std::string& key) const {
  auto b = blocks.find(block);
  if (b == blocks.end()) spec_fail("missing block " + block);
  auto k = b->second.find(key);
  if (k == b->second.end()) spec_fail("missing field " + block + "." + key);
  return k->second;
}

double ProblemSpec::number(const std::string& block, const std::string& key) const {
  double v;
  if (!parse_number(text(block, key), v)) spec_fail(block + "." + key + ": not a number");
  return v;
}

void ProblemSpec::set(const std::string& block, const std::string& key, const std::string& value) {
  auto raw = RawBlocks{};
  for (const auto& [b, kv] : blocks)
    for (const auto& [k, v] : kv) raw[b][k] = RawValue{v, 0};
  raw[block][key] = RawValue{value, 0};
  *this = normalize(std::move(raw));
}

ProblemSpec parse_spec(std::string_view text) {
  const std::string t = trim(text);
  // A text spec starts with a block name; JSON starts with '{'.
  if (!t.empty() && t.front() == '{') return normalize(parse_json(t));
  return normalize(parse_text(text));
}

std::string emit_spec(const ProblemSpec& spec) {
  std::ostringstream os;
  for (const std::string& b : block_order()) {
    auto it = spec.blocks.find(b);
    if (it == spec.blocks.end()) continue;
    os << b << " {\n";
    if (auto f = it->second.find("family"); f != it->second.end()) os << "  family = " << f->second << "\n";
    for (const auto& [k, v] : it->second)
      if (k != "family") os << "  " << k << " = " << v << "\n";
    os << "}\n";
  }
  return os.str();
}

std::string emit_spec_json(const ProblemSpec& spec) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const std::string& b : block_order()) {
    auto it = spec.blocks.find(b);
    if (it == spec.blocks.end()) continue;
    nlohmann::ordered_json body = nlohmann::ordered_json::object();
    for (const auto& [k, v] : it->second) body[k] = v;
    j[b] = body;
  }
  return j.dump(2);
}

const std::vector<std::string>& known_domain_families() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : domain_schemas()) out.push_back(k);
    return out;
  }();
  return v;
}

const std::vector<std::string>& known_hamiltonian_families() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : hamiltonian_schemas()) out.push_back(k);
    return out;
  }();
  return v;
}

Problem build_problem(const ProblemSpec& s) {
  const std::string& df = s.text("domain", "family");
  auto num = [&](const char* b, const char* k) { return s.number(b, k); };
  auto domain = [&]() -> ImplicitDomain {
    const Vec2 c{df == "interval" || df == "expression" ? 0.0 : num("domain", "center_x"),
                 df == "interval" || df == "expression" ? 0.0 : num("domain", "center_y")};
    if (df == "disk") return make_disk(c, num("domain", "radius"));
    if (df == "ellipse") return make_ellipse(c, num("domain", "semi_x"), num("domain", "semi_y"));
    if (df == "rectangle")
      return make_smoothed_rectangle(c, num("domain", "half_x"), num("domain", "half_y"), num("domain", "exponent"));
    if (df == "interval") return make_interval(num("domain", "lo"), num("domain", "hi"));
    Box box{{num("domain", "box_lo_x"), num("domain", "box_lo_y")}, {num("domain", "box_hi_x"), num("domain", "box_hi_y")}};
    return make_expression_domain(Expr::parse(s.text("domain", "psi")), box,
                                  static_cast<int>(num("domain", "dim")));
  }();
  const int dim = domain.dim();
  const std::string& hf = s.text("hamiltonian", "family");
  auto ex = [&](const char* k) { return Expr::parse(s.text("hamiltonian", k)); };
  auto model = [&]() -> HamiltonianModel {
    if (hf == "kinetic") return make_kinetic(dim);
    if (hf == "mechanical") return make_mechanical(ex("V"), dim);
    if (hf == "eikonal") return make_eikonal(ex("f"), dim);
    return make_anisotropic(ex("m11"), ex("m12"), ex("m22"), ex("V"), dim);
  }();
  const std::string& ang = s.text("oblique", "angle");
  const double angle = ang == "normal" ? 0.0 : s.number("oblique", "angle");
  const Expr g = Expr::parse(s.text("oblique", "g"));
  ObliqueField field = make_rotated_normal(domain, angle, [g](const Vec2& p) { return g(p); });
  auto grid = std::make_shared<const Grid>(domain, num("grid", "h"));
  return Problem{std::move(domain), std::move(model), std::move(field), std::move(grid)};
}

Vec2 spec_point(const ProblemSpec& s, const std::string& block, const std::string& key) {
  return point_of(s.text(block, key));
}

}  // namespace wkam
