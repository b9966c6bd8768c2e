#include "treeloc/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace treeloc {

using json = nlohmann::ordered_json;

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian(double stddev) {
  if (have_spare_) {
    have_spare_ = false;
    return spare_ * stddev;
  }
  double u1 = uniform(), u2 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(2.0 * M_PI * u2);
  have_spare_ = true;
  return mag * std::cos(2.0 * M_PI * u2) * stddev;
}

Graph NetworkScenario::measurement_graph() const {
  Graph g(n_sensors);
  for (const auto& m : range_measurements) g.add_edge(m.i, m.j);
  return g;
}

std::vector<std::vector<int>> NetworkScenario::anchor_adjacency() const {
  std::vector<std::vector<int>> adj(n_sensors);
  for (const auto& m : anchor_measurements) adj[m.i].push_back(m.j);
  return adj;
}

NetworkScenario generate_scenario(int n_sensors, int n_anchors, double area_w,
                                  double area_h, double r_c, std::int64_t seed) {
  if (n_sensors < 1 || n_anchors < 1)
    throw std::invalid_argument("generate_scenario: need at least one sensor and anchor");
  if (area_w <= 0 || area_h <= 0 || r_c <= 0)
    throw std::invalid_argument("generate_scenario: area and r_c must be positive");
  const int d = 2;
  int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_anchors))));
  Eigen::MatrixXd anchors(n_anchors, d);
  for (int a = 0; a < n_anchors; ++a) {
    int row = a / grid, col = a % grid;
    anchors(a, 0) = (col + 0.5) * area_w / grid;
    anchors(a, 1) = (row + 0.5) * area_h / grid;
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::int64_t s = seed + attempt;
    Rng rng(static_cast<std::uint64_t>(s));
    Eigen::MatrixXd sensors(n_sensors, d);
    for (int i = 0; i < n_sensors; ++i) {
      sensors(i, 0) = rng.uniform() * area_w;
      sensors(i, 1) = rng.uniform() * area_h;
    }
    auto [g, anchor_adj] = build_measurement_graph(sensors, anchors, r_c);
    bool any_anchor = false;
    for (const auto& lst : anchor_adj) any_anchor = any_anchor || !lst.empty();
    if (g.connected() && any_anchor) {
      NetworkScenario scn;
      scn.dim = d;
      scn.rc = r_c;
      scn.seed = s;
      scn.anchors = anchors;
      scn.sensors_true = sensors;
      scn.n_sensors = n_sensors;
      return scn;
    }
  }
  throw std::runtime_error("could not generate connected scenario");
}

NetworkScenario synthesize_measurements(const NetworkScenario& scn, double sigma_r,
                                        double sigma_a, std::int64_t seed) {
  if (!scn.sensors_true)
    throw std::invalid_argument("synthesize_measurements: true positions required");
  if (sigma_r < 0 || sigma_a < 0)
    throw std::invalid_argument("synthesize_measurements: negative noise level");
  const Eigen::MatrixXd& sensors = *scn.sensors_true;
  auto [g, anchor_adj] = build_measurement_graph(sensors, scn.anchors, scn.rc);
  NetworkScenario out = scn;
  out.range_measurements.clear();
  out.anchor_measurements.clear();
  Rng rng(static_cast<std::uint64_t>(seed));
  double var_r = sigma_r > 0 ? sigma_r * sigma_r : 1.0;
  double var_a = sigma_a > 0 ? sigma_a * sigma_a : 1.0;
  for (const auto& [i, j] : g.edges) {
    double d = (sensors.row(i) - sensors.row(j)).norm();
    out.range_measurements.push_back(
        {i, j, std::abs(d + rng.gaussian(sigma_r)), var_r});
  }
  for (int i = 0; i < out.n_sensors; ++i)
    for (int j : anchor_adj[i]) {
      double d = (sensors.row(i) - scn.anchors.row(j)).norm();
      out.anchor_measurements.push_back(
          {i, j, std::abs(d + rng.gaussian(sigma_a)), var_a});
    }
  return out;
}

double rmse(const Eigen::MatrixXd& truth, const std::vector<Eigen::MatrixXd>& estimates) {
  if (estimates.empty()) throw std::invalid_argument("rmse: no estimates");
  double acc = 0.0;
  for (const auto& est : estimates) {
    if (est.rows() != truth.rows() || est.cols() != truth.cols())
      throw std::invalid_argument("rmse: dimension mismatch");
    acc += (truth - est).rowwise().squaredNorm().sum();
  }
  return std::sqrt(acc / (static_cast<double>(estimates.size()) * truth.rows()));
}

namespace {

void check_connected_or_throw(const NetworkScenario& scn) {
  if (scn.n_sensors <= 1) return;
  // positions-only files (no measurements yet) carry no graph to check
  if (scn.range_measurements.empty() && scn.sensors_true) return;
  Graph g = scn.measurement_graph();
  if (g.connected()) return;
  // report the component containing vertex 0
  std::vector<char> seen(g.n_vertices, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  std::vector<int> comp{0};
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int w : g.neighbors(v))
      if (!seen[w]) {
        seen[w] = 1;
        comp.push_back(w);
        q.push(w);
      }
  }
  std::sort(comp.begin(), comp.end());
  std::ostringstream os;
  os << "scenario: measurement graph not connected; component {";
  for (size_t k = 0; k < comp.size(); ++k) os << (k ? "," : "") << comp[k];
  os << "} is isolated";
  throw std::runtime_error(os.str());
}

json positions_to_json(const Eigen::MatrixXd& p) {
  json arr = json::array();
  for (int i = 0; i < p.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < p.cols(); ++j) row.push_back(p(i, j));
    arr.push_back(row);
  }
  return arr;
}

Eigen::MatrixXd positions_from_json(const json& arr, int dim, const std::string& field) {
  Eigen::MatrixXd p(arr.size(), dim);
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_array() || static_cast<int>(arr[i].size()) != dim)
      throw std::runtime_error("scenario: " + field + "[" + std::to_string(i) +
                               "] must have " + std::to_string(dim) + " coordinates");
    for (int j = 0; j < dim; ++j) p(i, j) = arr[i][j].get<double>();
  }
  return p;
}

}  // namespace

std::string scenario_to_json(const NetworkScenario& scn) {
  json j;
  j["dim"] = scn.dim;
  j["rc"] = scn.rc;
  j["seed"] = scn.seed;
  j["anchors"] = positions_to_json(scn.anchors);
  if (scn.sensors_true) j["sensors_true"] = positions_to_json(*scn.sensors_true);
  json rms = json::array();
  for (const auto& m : scn.range_measurements)
    rms.push_back({{"i", m.i}, {"j", m.j}, {"r", m.value}, {"var", m.variance}});
  j["range_measurements"] = rms;
  json ams = json::array();
  for (const auto& m : scn.anchor_measurements)
    ams.push_back({{"i", m.i}, {"j", m.j}, {"y", m.value}, {"var", m.variance}});
  j["anchor_measurements"] = ams;
  return j.dump(2) + "\n";
}

NetworkScenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("scenario: invalid JSON: ") + e.what());
  }
  NetworkScenario scn;
  for (const char* field : {"dim", "rc", "anchors", "range_measurements",
                            "anchor_measurements"})
    if (!j.contains(field))
      throw std::runtime_error(std::string("scenario: missing field ") + field);
  scn.dim = j["dim"].get<int>();
  if (scn.dim != 2 && scn.dim != 3) throw std::runtime_error("scenario: dim must be 2 or 3");
  scn.rc = j["rc"].get<double>();
  scn.seed = j.value("seed", std::int64_t{0});
  scn.anchors = positions_from_json(j["anchors"], scn.dim, "anchors");
  if (j.contains("sensors_true"))
    scn.sensors_true = positions_from_json(j["sensors_true"], scn.dim, "sensors_true");

  int max_sensor = -1;
  auto read_meas = [&](const char* field, const char* value_key, bool inter_sensor) {
    std::vector<RangeMeasurement> out;
    const json& arr = j[field];
    for (size_t k = 0; k < arr.size(); ++k) {
      std::string at = std::string(field) + "[" + std::to_string(k) + "]";
      const json& e = arr[k];
      for (const char* key : {"i", "j", value_key, "var"})
        if (!e.contains(key))
          throw std::runtime_error("scenario: " + at + " missing field " + key);
      RangeMeasurement m;
      m.i = e["i"].get<int>();
      m.j = e["j"].get<int>();
      m.value = e[value_key].get<double>();
      m.variance = e["var"].get<double>();
      if (m.i < 0 || m.j < 0) throw std::runtime_error("scenario: " + at + ": negative index");
      if (inter_sensor && m.i >= m.j)
        throw std::runtime_error("scenario: " + at + ": requires i < j");
      if (m.value < 0)
        throw std::runtime_error("scenario: " + at + ": negative range");
      if (!(m.variance > 0))
        throw std::runtime_error("scenario: " + at + ": variance must be positive");
      max_sensor = std::max(max_sensor, m.i);
      if (inter_sensor) max_sensor = std::max(max_sensor, m.j);
      else if (m.j >= scn.anchors.rows())
        throw std::runtime_error("scenario: " + at + ": anchor index out of range");
      out.push_back(m);
    }
    return out;
  };
  scn.range_measurements = read_meas("range_measurements", "r", true);
  scn.anchor_measurements = read_meas("anchor_measurements", "y", false);
  scn.n_sensors = max_sensor + 1;
  if (scn.sensors_true) {
    scn.n_sensors = std::max<int>(scn.n_sensors,
                                  static_cast<int>(scn.sensors_true->rows()));
    if (max_sensor >= scn.sensors_true->rows())
      throw std::runtime_error("scenario: measurement sensor index exceeds sensors_true");
  }
  check_connected_or_throw(scn);
  return scn;
}

NetworkScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scenario: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

void save_scenario(const NetworkScenario& scn, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("scenario: cannot write " + path);
  out << scenario_to_json(scn);
}

}  // namespace treeloc
