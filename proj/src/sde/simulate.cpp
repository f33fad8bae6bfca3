#include "weakh/sde/simulate.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "weakh/model/conductance_model.hpp"
#include "weakh/model/hh.hpp"
#include "weakh/util/error.hpp"
#include "weakh/util/format.hpp"

namespace weakh::sde {

Stepper::Stepper(const model::StochasticSystem& sys)
    : sys_(sys),
      k_(sys.model().channel_count()),
      C_(sys.model().capacitance()),
      U_(sys.noise().state_interval()),
      a_(k_),
      b_(k_) {}

void Stepper::step(double t, double dt, double dW, std::span<double> x) {
  const auto& noise = sys_.noise();
  const double v = x[0];
  const double xi = x[k_ + 1];
  double xi_new = xi + noise.drift(t, xi) * dt + noise.sigma(xi) * dW;
  if (noise.kind() == model::NoiseSpec::Kind::cir) {
    const double floor = -noise.K() + kCirFloor;
    if (xi_new < floor) {
      xi_new = floor;
      ++floor_events_;
    }
  } else if (noise.kind() == model::NoiseSpec::Kind::generic && !U_.contains(xi_new)) {
    throw ComputationError("input left state interval at t = " + util::format_double(t + dt));
  }
  const std::span<const double> p(x.data() + 1, k_);
  const double v_new = v + (xi_new - xi) / C_ + sys_.model().voltage_drift(v, p) * dt;
  sys_.model().kinetics(v, a_, b_);
  for (std::size_t i = 0; i < k_; ++i) {
    const double e = std::exp(-a_[i] * dt);
    // Convex combination of the old value and b/a, both in [0, 1].
    double g = x[i + 1] * e + (b_[i] / a_[i]) * (1.0 - e);
    if (g < 0.0 || g > 1.0) {
      g = g < 0.0 ? 0.0 : 1.0;
      ++clamp_events_;
    }
    x[i + 1] = g;
  }
  x[0] = v_new;
  x[k_ + 1] = xi_new;
  if (!std::isfinite(v_new) || !std::isfinite(xi_new)) {
    throw ComputationError("divergence at t = " + util::format_double(t + dt));
  }
}

namespace {
void check_options(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, const SimOptions& opt) {
  if (!(opt.dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
  if (!(opt.t_end >= 0.0)) throw std::invalid_argument("simulate: t_end must be >= 0");
  if (opt.stride == 0) throw std::invalid_argument("simulate: stride must be >= 1");
  const std::size_t m = sys.dimension();
  if (static_cast<std::size_t>(x0.size()) != m) throw std::invalid_argument("simulate: initial state has wrong dimension");
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double g = x0[static_cast<Eigen::Index>(i)];
    if (!(g >= 0.0 && g <= 1.0)) throw std::invalid_argument("simulate: internal variables must lie in [0, 1]");
  }
  const double xi = x0[static_cast<Eigen::Index>(m - 1)];
  if (!sys.noise().state_interval().contains(xi)) throw std::invalid_argument("simulate: input value outside its state interval");
  if (!std::isfinite(x0[0])) throw std::invalid_argument("simulate: non-finite membrane potential");
}
}  // namespace

RunStats simulate_observed(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, const SimOptions& opt,
                           const Observer& observer) {
  check_options(sys, x0, opt);
  Stepper stepper(sys);
  NormalSource normals(path_stream(opt.seed, opt.path_index));
  std::vector<double> x(x0.data(), x0.data() + x0.size());
  const auto steps = static_cast<std::size_t>(std::llround(opt.t_end / opt.dt));
  const double sq = std::sqrt(opt.dt);
  RunStats stats;
  const auto finish = [&](std::size_t n) {
    stats.steps = n;
    stats.cir_floor_events = stepper.cir_floor_events();
    stats.clamp_events = stepper.clamp_events();
    return stats;
  };
  if (observer && !observer(0, 0.0, x)) return finish(0);
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t = static_cast<double>(i - 1) * opt.dt;
    stepper.step(t, opt.dt, sq * normals.next(), x);
    if (observer && !observer(i, static_cast<double>(i) * opt.dt, x)) return finish(i);
  }
  return finish(steps);
}

Path simulate(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, const SimOptions& opt, RunStats* stats) {
  Path path;
  path.dt = opt.dt;
  path.stride = opt.stride;
  path.dim = sys.dimension();
  path.seed = opt.seed;
  path.path_index = opt.path_index;
  path.model_hash = model_hash(sys);
  const auto steps = static_cast<std::size_t>(std::llround(opt.t_end / opt.dt));
  const RunStats st = simulate_observed(sys, x0, opt, [&](std::size_t i, double t, std::span<const double> x) {
    if (i % opt.stride == 0 || i == steps) {
      path.t.push_back(t);
      path.data.insert(path.data.end(), x.begin(), x.end());
    }
    return true;
  });
  if (stats) *stats = st;
  return path;
}

std::uint64_t model_hash(const model::StochasticSystem& sys) { return util::fnv1a64(sys.fingerprint()); }

std::vector<std::string> state_columns(const model::StochasticSystem& sys) {
  std::vector<std::string> cols = {"v"};
  const auto& m = sys.model();
  if (dynamic_cast<const model::HodgkinHuxley*>(&m)) {
    cols.insert(cols.end(), {"n", "m", "h"});
  } else if (const auto* cm = dynamic_cast<const model::ConductanceModel*>(&m)) {
    for (const auto& ch : cm->channels()) cols.push_back(ch.name);
  } else {
    for (std::size_t i = 1; i <= m.channel_count(); ++i) cols.push_back("p" + std::to_string(i));
  }
  cols.push_back("xi");
  return cols;
}

std::string path_csv(const Path& path, const std::vector<std::string>& columns) {
  if (columns.size() != path.dim) throw std::invalid_argument("path_csv: column count mismatch");
  std::vector<std::string> header = {"t"};
  header.insert(header.end(), columns.begin(), columns.end());
  std::string out = util::csv_row(header) + "\n";
  std::vector<double> row(path.dim + 1);
  for (std::size_t i = 0; i < path.size(); ++i) {
    row[0] = path.t[i];
    for (std::size_t j = 0; j < path.dim; ++j) row[j + 1] = path.data[i * path.dim + j];
    out += util::csv_row(row);
    out += '\n';
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'W', 'K', 'H', 'P', 'A', 'T', 'H', '1'};

void put_u64(std::ostream& out, std::uint64_t x) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}
void put_u32(std::ostream& out, std::uint32_t x) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}
void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated path file");
  std::uint64_t x = 0;
  for (int i = 7; i >= 0; --i) x = (x << 8) | b[i];
  return x;
}
std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated path file");
  std::uint32_t x = 0;
  for (int i = 3; i >= 0; --i) x = (x << 8) | b[i];
  return x;
}
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void write_path_binary(const Path& path, const std::string& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write path file '" + file + "'");
  out.write(kMagic, 8);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(path.dim));
  put_f64(out, path.dt);
  put_f64(out, path.t0);
  put_u64(out, path.size());
  put_u64(out, path.stride);
  put_u64(out, path.seed);
  put_u64(out, path.path_index);
  put_u64(out, path.model_hash);
  for (std::size_t i = 0; i < path.size(); ++i) {
    put_f64(out, path.t[i]);
    for (std::size_t j = 0; j < path.dim; ++j) put_f64(out, path.data[i * path.dim + j]);
  }
  if (!out) throw IoError("error writing path file '" + file + "'");
}

Path read_path_binary(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open path file '" + file + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw IoError("'" + file + "' is not a path file");
  if (get_u32(in) != 1) throw IoError("unsupported path file version in '" + file + "'");
  Path p;
  p.dim = get_u32(in);
  p.dt = get_f64(in);
  p.t0 = get_f64(in);
  const std::uint64_t rows = get_u64(in);
  p.stride = get_u64(in);
  p.seed = get_u64(in);
  p.path_index = get_u64(in);
  p.model_hash = get_u64(in);
  p.t.reserve(rows);
  p.data.reserve(rows * p.dim);
  for (std::uint64_t i = 0; i < rows; ++i) {
    p.t.push_back(get_f64(in));
    for (std::size_t j = 0; j < p.dim; ++j) p.data.push_back(get_f64(in));
  }
  return p;
}

double ou_periodic_mean(const model::InputSignal& S, double t, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("ou_periodic_mean: tau must be positive");
  constexpr double R = 40.0;
  constexpr int panels = 10000;
  const double h = R / panels;
  const auto f = [&](double r) { return S(t - r / tau) * std::exp(-r); };
  double sum = f(0.0) + f(R);
  for (int i = 1; i < panels; ++i) sum += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace weakh::sde
