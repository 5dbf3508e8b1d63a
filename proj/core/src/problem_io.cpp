#include "sizer/problem_io.hpp"

#include <fstream>

namespace sizer {

using nlohmann::json;

void to_json(json& j, const ConstraintSpec& c) {
  j = json{{"metric", c.metric}, {"comparator", to_string(c.comparator)}, {"threshold", c.threshold}};
  if (!c.context.empty()) j["context"] = c.context;
}

void from_json(const json& j, ConstraintSpec& c) {
  c.metric = j.at("metric").get<std::string>();
  c.comparator = comparator_from_string(j.at("comparator").get<std::string>());
  c.threshold = j.at("threshold").get<double>();
  c.context = j.value("context", std::string{});
  c.validate();
}

void to_json(json& j, const Bounds& b) { j = json{{"lower", b.lower()}, {"upper", b.upper()}}; }

void from_json(const json& j, Bounds& b) {
  b = Bounds(j.at("lower").get<std::vector<double>>(), j.at("upper").get<std::vector<double>>());
}

namespace {

json objective_json(const Objective& o) {
  return std::visit(
      [](const auto& obj) -> json {
        using T = std::decay_t<decltype(obj)>;
        if constexpr (std::is_same_v<T, MetricObjective>) {
          return {{"kind", "metric"}, {"metric", obj.key}, {"absolute", obj.absolute}};
        } else if constexpr (std::is_same_v<T, AreaObjective>) {
          return {{"kind", "area"}};
        } else {
          return {{"kind", "weighted"},
                  {"alpha", obj.alpha},
                  {"beta", obj.beta},
                  {"power_metric", obj.power_metric}};
        }
      },
      o);
}

Objective objective_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "metric") {
    return MetricObjective{j.at("metric").get<std::string>(), j.value("absolute", false)};
  }
  if (kind == "area") return AreaObjective{};
  if (kind == "weighted") {
    WeightedObjective w{j.at("alpha").get<double>(), j.at("beta").get<double>(),
                        j.value("power_metric", std::string("power"))};
    w.validate();
    return w;
  }
  throw std::invalid_argument("unknown objective kind '" + kind + "'");
}

GeometryConstraint::Kind geometry_kind(const std::string& s) {
  if (s == "aspect_ratio") return GeometryConstraint::Kind::AspectRatio;
  if (s == "length") return GeometryConstraint::Kind::Length;
  if (s == "area") return GeometryConstraint::Kind::Area;
  throw std::invalid_argument("unknown geometry constraint '" + s + "'");
}

}  // namespace

void to_json(json& j, const ProblemSpec& p) {
  j = json::object();
  j["name"] = p.name;
  json vars = json::array();
  for (const auto& v : p.variables) vars.push_back({{"name", v.name}, {"unit", v.unit}});
  j["variables"] = vars;
  j["bounds"] = p.bounds;
  j["objective"] = objective_json(p.objective);
  j["constraints"] = p.constraints;
  json geo = json::array();
  for (const auto& g : p.geometry) {
    json e{{"kind", to_string(g.kind)}};
    if (g.min) e["min"] = *g.min;
    if (g.max) e["max"] = *g.max;
    geo.push_back(e);
  }
  j["geometry"] = geo;
  json devs = json::array();
  for (const auto& d : p.devices) {
    json e{{"devices", d.devices}, {"width_var", d.width_var}};
    if (d.length_var) {
      e["length_var"] = *d.length_var;
    } else {
      e["length"] = d.length;
    }
    devs.push_back(e);
  }
  j["devices"] = devs;
  j["transistors"] = p.transistors;
  j["saturation_contexts"] = p.saturation_contexts;
  j["evaluator"] = p.evaluator;
}

void from_json(const json& j, ProblemSpec& p) {
  p = ProblemSpec{};
  p.name = j.at("name").get<std::string>();
  for (const auto& v : j.at("variables")) {
    p.variables.push_back({v.at("name").get<std::string>(), v.value("unit", std::string{})});
  }
  p.bounds = j.at("bounds").get<Bounds>();
  p.objective = objective_from_json(j.at("objective"));
  p.constraints = j.value("constraints", std::vector<ConstraintSpec>{});
  for (const auto& g : j.value("geometry", json::array())) {
    GeometryConstraint gc;
    gc.kind = geometry_kind(g.at("kind").get<std::string>());
    if (g.contains("min")) gc.min = g.at("min").get<double>();
    if (g.contains("max")) gc.max = g.at("max").get<double>();
    p.geometry.push_back(gc);
  }
  for (const auto& d : j.value("devices", json::array())) {
    DeviceGroup g;
    g.devices = d.at("devices").get<std::vector<std::string>>();
    g.width_var = d.at("width_var").get<std::size_t>();
    if (d.contains("length_var")) {
      g.length_var = d.at("length_var").get<std::size_t>();
    } else {
      g.length = d.at("length").get<double>();
    }
    p.devices.push_back(std::move(g));
  }
  p.transistors = j.value("transistors", std::vector<std::string>{});
  p.saturation_contexts = j.value("saturation_contexts", std::vector<std::string>{});
  p.evaluator = j.value("evaluator", std::string{});
  p.validate();
}

ProblemSpec load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file " + path.string());
  return json::parse(in).get<ProblemSpec>();
}

void save_problem(const ProblemSpec& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write problem file " + path.string());
  out << json(p).dump(2) << '\n';
}

}  // namespace sizer
