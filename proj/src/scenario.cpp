#include "mip/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>

#include "json.hpp"

#include "mip/body.hpp"
#include "mip/error.hpp"

namespace mip {
namespace {

using nlohmann::json;

std::string field_label(const std::string& where) {
  return where.empty() ? "scenario top level" : "scenario field \"" + where + "\"";
}

[[noreturn]] void malformed(const std::string& where, const std::string& what) {
  fail(ErrorCode::parse, field_label(where) + ": " + what);
}

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  fail(ErrorCode::invalid_argument, field_label(where) + ": " + what);
}

std::string sub(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& need(const json& obj, const std::string& where, const char* key) {
  const json* p = find(obj, key);
  if (p == nullptr) malformed(where, std::string("missing required key \"") + key + "\"");
  return *p;
}

void need_object(const json& v, const std::string& where) {
  if (!v.is_object()) malformed(where, "expected an object");
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) malformed(where, "unknown key \"" + it.key() + "\"");
  }
}

double get_double(const json& v, const std::string& where) {
  if (!v.is_number()) malformed(where, "expected a number");
  return v.get<double>();
}

std::int64_t get_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) malformed(where, "expected an integer");
  return v.get<std::int64_t>();
}

bool get_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) malformed(where, "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) malformed(where, "expected a string");
  return v.get<std::string>();
}

Vec get_vec(const json& v, const std::string& where, int dim) {
  if (!v.is_array()) malformed(where, "expected an array of numbers");
  if (static_cast<int>(v.size()) != dim)
    invalid(where, "length " + std::to_string(v.size()) + " does not match dim " +
                       std::to_string(dim));
  Vec out(dim);
  for (int i = 0; i < dim; ++i)
    out[i] = get_double(v[i], where + "[" + std::to_string(i) + "]");
  return out;
}

// rows: fixed column count, any row count unless rows_expected >= 0.
Mat get_mat(const json& v, const std::string& where, int rows_expected, int cols) {
  if (!v.is_array() || v.empty()) malformed(where, "expected a non-empty array of rows");
  const int rows = static_cast<int>(v.size());
  if (rows_expected >= 0 && rows != rows_expected)
    invalid(where, "row count " + std::to_string(rows) + " does not match dim " +
                       std::to_string(rows_expected));
  Mat out(rows, cols);
  for (int i = 0; i < rows; ++i)
    out.row(i) = get_vec(v[i], where + "[" + std::to_string(i) + "]", cols).transpose();
  return out;
}

// Optional "dim" inside a body record must agree with the scenario dim.
void check_dim_key(const json& rec, const std::string& where, int dim) {
  if (const json* d = find(rec, "dim")) {
    const std::int64_t got = get_int(*d, sub(where, "dim"));
    if (got != dim)
      invalid(sub(where, "dim"), "dim " + std::to_string(got) +
                                     " does not match scenario dim " + std::to_string(dim));
  }
}

Body parse_body(const json& v, const std::string& where, int dim) {
  need_object(v, where);
  const std::string type = get_string(need(v, where, "type"), sub(where, "type"));
  if (type == "ball") {
    check_keys(v, where, {"type", "radius", "dim"});
    check_dim_key(v, where, dim);
    return Body::ball(dim, get_double(need(v, where, "radius"), sub(where, "radius")));
  }
  if (type == "cube") {
    check_keys(v, where, {"type", "half_width", "dim"});
    check_dim_key(v, where, dim);
    return Body::cube(dim, get_double(need(v, where, "half_width"), sub(where, "half_width")));
  }
  if (type == "hpolytope") {
    check_keys(v, where, {"type", "rows", "offsets"});
    const Mat rows = get_mat(need(v, where, "rows"), sub(where, "rows"), -1, dim);
    const Vec offsets =
        get_vec(need(v, where, "offsets"), sub(where, "offsets"), static_cast<int>(rows.rows()));
    return Body::hpolytope(rows, offsets);
  }
  if (type == "ellipsoid") {
    check_keys(v, where, {"type", "matrix"});
    return Body::ellipsoid(get_mat(need(v, where, "matrix"), sub(where, "matrix"), dim, dim));
  }
  if (type == "all_space") {
    check_keys(v, where, {"type", "dim"});
    check_dim_key(v, where, dim);
    return Body::all_space(dim);
  }
  malformed(sub(where, "type"), "unknown body type \"" + type + "\"");
}

// A number c stands for c.I; otherwise a full dim x dim matrix.
Mat get_sigma_inv(const json& v, const std::string& where, int dim) {
  if (v.is_number()) {
    const double c = v.get<double>();
    if (!(c > 0.0) || !std::isfinite(c)) invalid(where, "scalar sigma_inv must be positive");
    return c * Mat::Identity(dim, dim);
  }
  return get_mat(v, where, dim, dim);
}

LogConcaveFunc parse_function(const json& v, const std::string& where, int dim) {
  need_object(v, where);
  const std::string type = get_string(need(v, where, "type"), sub(where, "type"));
  if (type == "indicator") {
    check_keys(v, where, {"type", "body"});
    return LogConcaveFunc::indicator(parse_body(need(v, where, "body"), sub(where, "body"), dim));
  }
  if (type == "gaussian") {
    check_keys(v, where, {"type", "sigma_inv", "mean"});
    const Mat s = get_sigma_inv(need(v, where, "sigma_inv"), sub(where, "sigma_inv"), dim);
    Vec mean = Vec::Zero(dim);
    if (const json* m = find(v, "mean")) mean = get_vec(*m, sub(where, "mean"), dim);
    return LogConcaveFunc::gaussian(s, mean);
  }
  if (type == "restricted_gaussian") {
    check_keys(v, where, {"type", "body", "sigma_inv", "mean"});
    const Body body = parse_body(need(v, where, "body"), sub(where, "body"), dim);
    const Mat s = get_sigma_inv(need(v, where, "sigma_inv"), sub(where, "sigma_inv"), dim);
    Vec mean = Vec::Zero(dim);
    if (const json* m = find(v, "mean")) mean = get_vec(*m, sub(where, "mean"), dim);
    return LogConcaveFunc::restricted_gaussian(body, s, mean);
  }
  if (type == "exp_gauge") {
    check_keys(v, where, {"type", "body", "power"});
    const Body body = parse_body(need(v, where, "body"), sub(where, "body"), dim);
    return LogConcaveFunc::gauge_power(body,
                                       get_double(need(v, where, "power"), sub(where, "power")));
  }
  malformed(sub(where, "type"), "unknown function type \"" + type + "\"");
}

void parse_mode(const json* v, const std::string& where, DetMode* mode, double* target) {
  *mode = DetMode::unit_det;
  *target = 1.0;
  if (v == nullptr) return;
  if (v->is_string()) {
    const std::string s = v->get<std::string>();
    if (s == "unit") return;
    if (s == "free") {
      *mode = DetMode::free_det;
      return;
    }
    malformed(where, "mode must be \"unit\", \"free\", or {\"type\":\"fixed\",\"target\":r}");
  }
  if (!v->is_object())
    malformed(where, "mode must be \"unit\", \"free\", or {\"type\":\"fixed\",\"target\":r}");
  check_keys(*v, where, {"type", "target"});
  const std::string type = get_string(need(*v, where, "type"), sub(where, "type"));
  if (type != "fixed") malformed(sub(where, "type"), "unknown mode type \"" + type + "\"");
  const double r = get_double(need(*v, where, "target"), sub(where, "target"));
  if (!(r > 0.0) || !std::isfinite(r)) invalid(sub(where, "target"), "target must be positive");
  *mode = DetMode::fixed_det;
  *target = r;
}

json zero_array(int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(0.0);
  return a;
}

json normalize_body(const json& rec, int dim) {
  json out = rec;
  const std::string type = rec.at("type").get<std::string>();
  if ((type == "ball" || type == "cube" || type == "all_space") && !rec.contains("dim"))
    out["dim"] = dim;
  return out;
}

json normalize_function(const json& rec, int dim) {
  json out = rec;
  const std::string type = rec.at("type").get<std::string>();
  if (rec.contains("body")) out["body"] = normalize_body(rec.at("body"), dim);
  if (type == "gaussian" || type == "restricted_gaussian") {
    if (!rec.contains("mean")) out["mean"] = zero_array(dim);
    if (rec.at("sigma_inv").is_number()) {
      const double c = rec.at("sigma_inv").get<double>();
      json m = json::array();
      for (int i = 0; i < dim; ++i) {
        json row = json::array();
        for (int j = 0; j < dim; ++j) row.push_back(i == j ? c : 0.0);
        m.push_back(row);
      }
      out["sigma_inv"] = m;
    }
  }
  return out;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::parse, origin + ": " + e.what());
  }
  if (!root.is_object()) fail(ErrorCode::parse, origin + ": top level must be an object");
  check_keys(root, "", {"name", "dim", "f", "g", "mode", "declared_flags", "budget", "seed"});

  const std::string name = get_string(need(root, "", "name"), "name");
  if (name.empty()) invalid("name", "must be non-empty");
  const std::int64_t dim64 = get_int(need(root, "", "dim"), "dim");
  if (dim64 < 1 || dim64 > 32) invalid("dim", "must be between 1 and 32");
  const int dim = static_cast<int>(dim64);

  LogConcaveFunc f = parse_function(need(root, "", "f"), "f", dim);
  LogConcaveFunc g = parse_function(need(root, "", "g"), "g", dim);

  DetMode mode = DetMode::unit_det;
  double det_target = 1.0;
  parse_mode(find(root, "mode"), "mode", &mode, &det_target);

  DeclaredFlags flags;
  if (const json* fl = find(root, "declared_flags")) {
    need_object(*fl, "declared_flags");
    check_keys(*fl, "declared_flags", {"even_symmetry", "support_regularity"});
    if (const json* b = find(*fl, "even_symmetry"))
      flags.even_symmetry = get_bool(*b, "declared_flags.even_symmetry");
    if (const json* b = find(*fl, "support_regularity"))
      flags.support_regularity = get_bool(*b, "declared_flags.support_regularity");
  }
  if (flags.even_symmetry && !(f.even() && g.even()))
    invalid("declared_flags.even_symmetry", "the given function pair is not even");

  std::int64_t budget = std::int64_t{1} << 16;
  if (const json* b = find(root, "budget")) {
    budget = get_int(*b, "budget");
    if (budget < 1) invalid("budget", "must be at least 1");
  }
  std::uint64_t seed = 1;
  if (const json* s = find(root, "seed")) {
    const std::int64_t v = get_int(*s, "seed");
    if (v < 0) invalid("seed", "must be non-negative");
    seed = static_cast<std::uint64_t>(v);
  }

  json norm;
  norm["name"] = name;
  norm["dim"] = dim;
  norm["f"] = normalize_function(root.at("f"), dim);
  norm["g"] = normalize_function(root.at("g"), dim);
  norm["mode"] = mode == DetMode::unit_det
                     ? json("unit")
                     : mode == DetMode::free_det
                           ? json("free")
                           : json{{"type", "fixed"}, {"target", det_target}};
  norm["declared_flags"] = {{"even_symmetry", flags.even_symmetry},
                            {"support_regularity", flags.support_regularity}};
  norm["budget"] = budget;
  norm["seed"] = seed;

  return Scenario{name,   dim,   std::move(f), std::move(g), mode,
                  det_target, flags, budget,       seed,         norm.dump(2)};
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::parse, "cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path);
}

}  // namespace mip
