#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "treeloc/graph.hpp"

// Scenario generation, measurement synthesis, file I/O and accuracy
// metrics for the experiment harness.

namespace treeloc {

// Deterministic generator shared by scenario generation and measurement
// synthesis: mersenne-twister (mt19937_64) raw draws mapped to doubles
// via (x >> 11) * 2^-53, gaussians via Box-Muller. Identical streams on
// every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();                  // [0, 1)
  double gaussian(double stddev);    // N(0, stddev^2)

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct RangeMeasurement {
  int i = 0;       // sensor (i < j for inter-sensor pairs)
  int j = 0;       // sensor or anchor id
  double value = 0.0;
  double variance = 0.0;
};

struct NetworkScenario {
  int dim = 2;
  double rc = 0.0;
  std::int64_t seed = 0;  // seed actually used (after connectivity retries)
  Eigen::MatrixXd anchors;                       // m x d
  std::optional<Eigen::MatrixXd> sensors_true;   // N x d; absent for ingested data
  std::vector<RangeMeasurement> range_measurements;   // inter-sensor, i < j
  std::vector<RangeMeasurement> anchor_measurements;  // i sensor, j anchor
  int n_sensors = 0;

  Graph measurement_graph() const;
  std::vector<std::vector<int>> anchor_adjacency() const;
};

struct EstimateReport {
  Eigen::MatrixXd estimated_positions;
  std::optional<double> rmse;
  int iterations = 0;
  long long per_agent_communications = 0;
  double wall_time = 0.0;
};

// Sensors i.i.d. uniform in [0,w] x [0,h]; anchors on a deterministic
// ceil(sqrt(m)) x ceil(sqrt(m)) grid. Retries seed+1, seed+2, ... until
// the induced measurement graph (at range r_c, including anchor links
// for the N=1 case) is connected; the used seed is recorded.
NetworkScenario generate_scenario(int n_sensors, int n_anchors, double area_w,
                                  double area_h, double r_c, std::int64_t seed);

// R_ij = |true distance + N(0, sigma^2)| for every edge of the
// measurement graph. Stored variance is sigma^2, or 1.0 when sigma = 0
// (unit weights for noise-free data).
NetworkScenario synthesize_measurements(const NetworkScenario& scn, double sigma_r,
                                        double sigma_a, std::int64_t seed);

// sqrt( (1/(M N)) sum_m sum_j ||truth_j - est_j(m)||^2 )
double rmse(const Eigen::MatrixXd& truth, const std::vector<Eigen::MatrixXd>& estimates);

NetworkScenario load_scenario(const std::string& path);
void save_scenario(const NetworkScenario& scn, const std::string& path);
std::string scenario_to_json(const NetworkScenario& scn);
NetworkScenario scenario_from_json(const std::string& text);

}  // namespace treeloc
