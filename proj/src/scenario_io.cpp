#include "morse/scenario_io.hpp"

#include <fstream>
#include <sstream>

namespace morse {

namespace {

Expression expr_at(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ScenarioFormatError(where + ": expected an expression string");
  try {
    return parse_expression(j.get<std::string>());
  } catch (const ParseError& e) {
    throw ScenarioFormatError(where + ": " + e.what());
  }
}

std::vector<Expression> expr_list(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ScenarioFormatError(where + ": expected an array");
  std::vector<Expression> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(expr_at(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Json expr_list_json(const std::vector<Expression>& v) {
  Json a = Json::array();
  for (const Expression& e : v) a.push_back(e.to_string());
  return a;
}

const Json& field(const Json& j, const char* key) {
  if (!j.contains(key)) throw ScenarioFormatError(std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

Json chart_point_json(const Atlas& atlas, const ChartPoint& p) {
  Json c = Json::array();
  for (Eigen::Index i = 0; i < p.coords.size(); ++i) c.push_back(p.coords[i]);
  return Json{{"chart", atlas.chart(p.chart).id}, {"coords", c}};
}

ChartPoint chart_point_from_json(const Atlas& atlas, const Json& j) {
  ChartPoint p;
  try {
    p.chart = atlas.chart_index(field(j, "chart").get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ScenarioFormatError(e.what());
  }
  const Json& c = field(j, "coords");
  if (static_cast<int>(c.size()) != atlas.dimension()) throw ScenarioFormatError("point has wrong dimension");
  p.coords.resize(atlas.dimension());
  for (int i = 0; i < atlas.dimension(); ++i) p.coords[i] = c[static_cast<std::size_t>(i)].get<double>();
  return p;
}

Json scenario_to_json(const Scenario& s) {
  const ScenarioData& d = s.data();
  const Atlas& atlas = s.atlas();
  const int n = s.dimension();
  Json j;
  j["name"] = d.name;
  j["dimension"] = n;
  Json charts = Json::array();
  for (const Chart& ch : d.charts) {
    Json axes = Json::array();
    for (const AxisSpec& a : ch.axes) axes.push_back({{"lower", a.lower}, {"upper", a.upper}, {"periodic", a.periodic}});
    Json trs = Json::array();
    for (const Transition& t : ch.transitions)
      trs.push_back({{"target", atlas.chart(t.target).id},
                     {"overlap", t.overlap.to_string()},
                     {"map", expr_list_json(t.map)},
                     {"inverse", expr_list_json(t.inverse)}});
    charts.push_back({{"id", ch.id}, {"axes", axes}, {"transitions", trs}});
  }
  j["charts"] = charts;
  Json metric = Json::object(), field_j = Json::object(), lyap = Json::object();
  for (std::size_t c = 0; c < d.charts.size(); ++c) {
    Json rows = Json::array();
    for (int r = 0; r < n; ++r) {
      std::vector<Expression> row(d.metric[c].begin() + r * n, d.metric[c].begin() + (r + 1) * n);
      rows.push_back(expr_list_json(row));
    }
    metric[d.charts[c].id] = rows;
    field_j[d.charts[c].id] = expr_list_json(d.vector_field[c]);
    lyap[d.charts[c].id] = d.lyapunov[c].to_string();
  }
  j["metric"] = metric;
  j["vector_field"] = field_j;
  j["lyapunov"] = lyap;
  Json forms = Json::array();
  for (const NamedForm& f : d.forms) {
    Json coeffs = Json::object();
    for (std::size_t c = 0; c < d.charts.size(); ++c) coeffs[d.charts[c].id] = expr_list_json(f.form.coefficients()[c]);
    forms.push_back({{"name", f.name}, {"degree", f.form.degree()}, {"closed", f.form.declared_closed()}, {"coefficients", coeffs}});
  }
  j["forms"] = forms;
  if (d.ground_truth) {
    const GroundTruth& g = *d.ground_truth;
    Json inst = Json::array();
    for (const ExpectedInstantons& e : g.instantons)
      inst.push_back({{"from", chart_point_json(atlas, e.from)}, {"to", chart_point_json(atlas, e.to)}, {"count", e.count}});
    j["ground_truth"] = {{"rest_points_per_index", g.rest_points_per_index},
                         {"betti", g.betti},
                         {"triangulation", g.triangulation},
                         {"instantons", inst}};
  } else {
    j["ground_truth"] = nullptr;
  }
  return j;
}

Scenario scenario_from_json(const Json& j) {
  try {
    ScenarioData d;
    d.name = field(j, "name").get<std::string>();
    const int n = field(j, "dimension").get<int>();
    if (n < 1) throw ScenarioFormatError("dimension must be positive");
    const Json& charts = field(j, "charts");
    if (!charts.is_array() || charts.empty()) throw ScenarioFormatError("charts must be a non-empty array");
    std::vector<std::string> ids;
    for (const Json& c : charts) ids.push_back(field(c, "id").get<std::string>());
    auto index_of = [&](const std::string& id) {
      for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == id) return static_cast<int>(i);
      throw ScenarioFormatError("unknown chart id '" + id + "'");
    };
    for (const Json& c : charts) {
      Chart ch;
      ch.id = c.at("id").get<std::string>();
      ch.dimension = n;
      for (const Json& a : field(c, "axes"))
        ch.axes.push_back({field(a, "lower").get<double>(), field(a, "upper").get<double>(), a.value("periodic", false)});
      if (c.contains("transitions"))
        for (const Json& t : c.at("transitions")) {
          Transition tr;
          tr.target = index_of(field(t, "target").get<std::string>());
          tr.overlap = expr_at(field(t, "overlap"), ch.id + ".overlap");
          tr.map = expr_list(field(t, "map"), ch.id + ".map");
          tr.inverse = expr_list(field(t, "inverse"), ch.id + ".inverse");
          ch.transitions.push_back(std::move(tr));
        }
      d.charts.push_back(std::move(ch));
    }
    for (const std::string& id : ids) {
      std::vector<Expression> g;
      const Json& rows = field(field(j, "metric"), id.c_str());
      if (static_cast<int>(rows.size()) != n) throw ScenarioFormatError("metric for chart " + id + " has wrong size");
      for (const Json& row : rows) {
        auto r = expr_list(row, "metric." + id);
        if (static_cast<int>(r.size()) != n) throw ScenarioFormatError("metric row has wrong size");
        g.insert(g.end(), r.begin(), r.end());
      }
      d.metric.push_back(std::move(g));
      d.vector_field.push_back(expr_list(field(field(j, "vector_field"), id.c_str()), "vector_field." + id));
      d.lyapunov.push_back(expr_at(field(field(j, "lyapunov"), id.c_str()), "lyapunov." + id));
    }
    if (j.contains("forms"))
      for (const Json& f : j.at("forms")) {
        std::vector<std::vector<Expression>> coeffs;
        for (const std::string& id : ids)
          coeffs.push_back(expr_list(field(field(f, "coefficients"), id.c_str()), "form." + id));
        d.forms.push_back({field(f, "name").get<std::string>(),
                           DifferentialForm(field(f, "degree").get<int>(), n, std::move(coeffs), f.value("closed", false))});
      }
    // Ground-truth points need the atlas, so resolve them after building it.
    Scenario bare(d);
    if (j.contains("ground_truth") && !j.at("ground_truth").is_null()) {
      const Json& g = j.at("ground_truth");
      GroundTruth gt;
      gt.rest_points_per_index = g.value("rest_points_per_index", std::vector<int>{});
      gt.betti = g.value("betti", std::vector<int>{});
      gt.triangulation = g.value("triangulation", std::string{});
      if (g.contains("instantons"))
        for (const Json& e : g.at("instantons"))
          gt.instantons.push_back({chart_point_from_json(bare.atlas(), field(e, "from")),
                                   chart_point_from_json(bare.atlas(), field(e, "to")), field(e, "count").get<int>()});
      d.ground_truth = gt;
      return Scenario(std::move(d));
    }
    return bare;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioFormatError(std::string("malformed scenario JSON: ") + e.what());
  } catch (const DegreeError& e) {
    throw ScenarioFormatError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ScenarioFormatError(e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioFormatError(path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

std::vector<std::filesystem::path> emit_scenarios(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::vector<std::filesystem::path> out;
  for (const Scenario& s : builtin_scenarios()) {
    auto path = dir / (s.name() + ".json");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << scenario_to_json(s).dump(2) << '\n';
    if (!f) throw std::runtime_error("write failed for " + path.string());
    out.push_back(path);
  }
  return out;
}

Scenario resolve_scenario(const std::string& source) {
  for (const Scenario& s : builtin_scenarios())
    if (s.name() == source) return s;
  return load_scenario(source);
}

}  // namespace morse
