#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "weakh/model/sde_system.hpp"
#include "weakh/sde/rng.hpp"

namespace weakh::sde {

inline constexpr double kDefaultDt = 0.005;
inline constexpr double kCirFloor = 1e-9;
inline constexpr const char* kScheme = "em-exp";

struct SimOptions {
  double dt = kDefaultDt;
  double t_end = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  /// Store every stride-th state (first and last always).
  std::size_t stride = 1;
};

/// Time-indexed states (v, p_1..p_k, xi) with fixed step and run metadata.
struct Path {
  double dt = 0.0;
  double t0 = 0.0;
  std::size_t stride = 1;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  std::string scheme = kScheme;
  std::uint64_t model_hash = 0;
  std::vector<double> t;
  std::vector<double> data;  // row-major, dim entries per row

  std::size_t size() const { return t.size(); }
  Eigen::Map<const Eigen::VectorXd> state(std::size_t i) const {
    return Eigen::Map<const Eigen::VectorXd>(data.data() + i * dim, static_cast<Eigen::Index>(dim));
  }
};

/// One step of the scheme:
///   xi  <- xi + b_m(t, xi) dt + sigma(xi) dW   (CIR floored at -K + 1e-9)
///   v   <- v + (d xi) / C + F(v, p) dt
///   p_i <- p_i e^{-a_i dt} + (b_i / a_i)(1 - e^{-a_i dt}), a_i, b_i at the old v
class Stepper {
 public:
  explicit Stepper(const model::StochasticSystem& sys);

  /// Advances x in place. Throws ComputationError on divergence or when a
  /// generic input leaves its state interval.
  void step(double t, double dt, double dW, std::span<double> x);
  std::size_t cir_floor_events() const { return floor_events_; }
  /// Gate values pushed back into [0, 1] after rounding (expected 0).
  std::size_t clamp_events() const { return clamp_events_; }

 private:
  const model::StochasticSystem& sys_;
  std::size_t k_;
  double C_;
  model::Interval U_;
  std::vector<double> a_, b_;
  std::size_t floor_events_ = 0;
  std::size_t clamp_events_ = 0;
};

/// Observer called with (step index, t, state) after every step and once for
/// the initial state (index 0). Returning false stops the run early.
using Observer = std::function<bool(std::size_t, double, std::span<const double>)>;

struct RunStats {
  std::size_t steps = 0;
  std::size_t cir_floor_events = 0;
  std::size_t clamp_events = 0;
};

/// Runs one path from x0 to t_end without storing it.
RunStats simulate_observed(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, const SimOptions& opt,
                           const Observer& observer);

/// Runs one path and stores it.
Path simulate(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, const SimOptions& opt,
              RunStats* stats = nullptr);

/// Digest of the system description used in path headers.
std::uint64_t model_hash(const model::StochasticSystem& sys);

/// Column names: v, channel names (n, m, h for HH), xi.
std::vector<std::string> state_columns(const model::StochasticSystem& sys);

/// CSV with header "t,<columns>".
std::string path_csv(const Path& path, const std::vector<std::string>& columns);

/// Binary format, little-endian: magic "WKHPATH1", u32 version, u32 dim,
/// f64 dt, f64 t0, u64 rows, u64 stride, u64 seed, u64 path_index,
/// u64 model_hash, then rows of (t, x_1..x_dim) as f64.
void write_path_binary(const Path& path, const std::string& file);
Path read_path_binary(const std::string& file);

/// Stationary OU mean at time t for a periodic signal S:
///   int_0^inf S(t - r / tau) e^{-r} dr
/// truncated at r = 40, composite Simpson with 10^4 panels.
double ou_periodic_mean(const model::InputSignal& S, double t, double tau);

}  // namespace weakh::sde
