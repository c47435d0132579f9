#include "winf/model_io.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "winf/error.hpp"

namespace winf {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw structural_error(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw structural_error("unknown key '" + key + "' in " + where);
  }
}

double number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw structural_error(where + " is missing '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number()) throw structural_error("'" + std::string(key) + "' in " + where + " must be a number");
  return v.get<double>();
}

Piece parse_piece(const json& p, std::size_t index) {
  const std::string where = "pieces[" + std::to_string(index) + "]";
  if (!p.is_object() || !p.contains("kind") || !p.at("kind").is_string()) {
    throw structural_error(where + " needs a string 'kind'");
  }
  const auto kind = p.at("kind").get<std::string>();
  const Interval span{number(p, "from", where), number(p, "to", where)};
  if (kind == "constant") {
    check_keys(p, {"from", "to", "kind", "value"}, where);
    return Piece::constant(span, number(p, "value", where));
  }
  if (kind == "power") {
    check_keys(p, {"from", "to", "kind", "coefficient", "center", "exponent"}, where);
    return Piece::power(span, number(p, "coefficient", where), number(p, "center", where),
                        number(p, "exponent", where));
  }
  if (kind == "polynomial") {
    check_keys(p, {"from", "to", "kind", "coefficients"}, where);
    const auto& c = p.value("coefficients", json::array());
    if (!c.is_array()) throw structural_error(where + " 'coefficients' must be an array");
    std::vector<double> coeffs;
    for (const auto& v : c) {
      if (!v.is_number()) throw structural_error(where + " has a non-numeric coefficient");
      coeffs.push_back(v.get<double>());
    }
    return Piece::polynomial(span, std::move(coeffs));
  }
  throw structural_error(where + " has unknown kind '" + kind + "'");
}

}  // namespace

DensitySpec parse_density_spec(const json& doc) {
  check_keys(doc, {"schema", "id", "pieces", "zeros", "singulars"}, "density");
  if (doc.contains("schema") && doc.at("schema") != kDensitySchema) {
    throw structural_error(std::string("density schema must be '") + kDensitySchema + "'");
  }
  DensitySpec spec;
  spec.id = doc.value("id", std::string("density"));
  if (!doc.contains("pieces") || !doc.at("pieces").is_array()) {
    throw structural_error("density needs a 'pieces' array");
  }
  std::size_t i = 0;
  for (const auto& p : doc.at("pieces")) spec.pieces.push_back(parse_piece(p, i++));

  i = 0;
  for (const auto& z : doc.value("zeros", json::array())) {
    const std::string where = "zeros[" + std::to_string(i++) + "]";
    check_keys(z, {"location", "order", "lower", "upper", "radius"}, where);
    ZeroPoint zp;
    zp.location = number(z, "location", where);
    const double order = number(z, "order", where);
    if (order != std::floor(order)) throw structural_error(where + " order must be an integer");
    zp.order = static_cast<int>(order);
    zp.lower_constant = number(z, "lower", where);
    zp.upper_constant = number(z, "upper", where);
    zp.radius = number(z, "radius", where);
    spec.zeros.push_back(zp);
  }

  i = 0;
  for (const auto& s : doc.value("singulars", json::array())) {
    const std::string where = "singulars[" + std::to_string(i++) + "]";
    check_keys(s, {"location", "exponent", "coefficient"}, where);
    spec.singulars.push_back(
        {number(s, "location", where), number(s, "exponent", where), number(s, "coefficient", where)});
  }
  return spec;
}

DensitySpec load_density_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open density file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw structural_error("density file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  auto spec = parse_density_spec(doc);
  if (spec.id.empty()) spec.id = path.stem().string();
  return spec;
}

DensityModel load_density(const std::filesystem::path& path) {
  return DensityModel::build(load_density_spec(path));
}

json json_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

json to_json(const ValidationReport& r) {
  json zeros = json::array();
  for (const auto& z : r.zeros) {
    zeros.push_back({{"location", z.location},
                     {"order", z.order},
                     {"inside_domain", z.inside_domain},
                     {"vanishes_at_location", z.vanishes_at_location},
                     {"envelope_holds", z.envelope_holds},
                     {"min_ratio", json_number(z.min_ratio)},
                     {"max_ratio", json_number(z.max_ratio)}});
  }
  return {{"passes", r.passes()},
          {"bounded_below_regime", r.bounded_below_regime},
          {"bounded_zero_regime", r.bounded_zero_regime},
          {"singular_zero_regime", r.singular_zero_regime},
          {"no_convergence_regime", r.no_convergence_regime},
          {"lambda", json_number(r.lambda)},
          {"Lambda", json_number(r.Lambda)},
          {"lambda_outside_zeros", json_number(r.lambda_outside_zeros)},
          {"zeros", zeros},
          {"violations", r.violations}};
}

}  // namespace winf
