#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "statgames/games.hpp"

namespace statgames::harness {

struct SuiteConfig {
  std::string suite;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t max_dim = 4;
  double tolerance = 1e-9;
  Instance instance = Instance::discrete;
  /// laxators: only product priors, where every laxator must vanish
  bool product_priors = false;
  /// generators may place exact zeros in priors and kernel rows
  bool degenerate = false;
};

/// Throws ShapeError when trials, max_dim or tolerance are out of range.
void validate(const SuiteConfig& cfg);

/// One checked equation inside one trial.
struct Record {
  std::string suite;
  std::size_t trial = 0;
  std::string check;
  std::string digest;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct SuiteReport {
  std::string suite;
  Instance instance = Instance::discrete;
  std::size_t trials = 0;
  std::size_t checks = 0;
  std::size_t failures = 0;
  double worst_err = 0.0;
  double wall_seconds = 0.0;
  std::vector<Record> records;
  /// Measured but unasserted quantities.
  std::vector<std::string> notes;

  bool ok() const noexcept { return failures == 0; }
};

const std::vector<std::string>& suite_names();
bool is_suite(const std::string& name);

SuiteReport run_suite(const SuiteConfig& cfg);

std::string to_json(const SuiteReport& r, bool with_time = true);
/// JSON array of several reports.
std::string to_json(const std::vector<SuiteReport>& rs, bool with_time = true);
/// One summary line per suite with a header.
std::string to_csv(const std::vector<SuiteReport>& rs, bool with_time = true);
std::string summary_line(const SuiteReport& r);

// ------------------------------------------------------------------ randomness

std::uint64_t splitmix64(std::uint64_t x);
/// Seed of one trial, independent of the order in which trials run.
std::uint64_t trial_seed(std::uint64_t seed, const std::string& suite, std::size_t trial);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0);
  /// Uniform integer in [lo, hi].
  std::size_t index(std::size_t lo, std::size_t hi);
  bool coin(double p = 0.5);
  /// A point of the open simplex with Dirichlet(1, ..., 1) law.
  Eigen::VectorXd simplex(std::size_t n);

 private:
  std::mt19937_64 eng_;
};

// ------------------------------------------------------------------ generators

discrete::FiniteKernel gen_kernel(Rng& rng, const discrete::FiniteSpace& dom, const discrete::FiniteSpace& cod,
                                  bool degenerate = false);
discrete::FiniteKernel gen_kernel(std::uint64_t seed, std::size_t dom_size, std::size_t cod_size,
                                  bool degenerate = false);
discrete::Dist gen_dist(Rng& rng, const discrete::FiniteSpace& space, bool degenerate = false);
discrete::CoparKernel gen_copar_kernel(Rng& rng, const discrete::FiniteSpace& dom, const discrete::FiniteSpace& copar,
                                       const discrete::FiniteSpace& out, Side side = Side::left,
                                       bool degenerate = false);
discrete::Effect gen_effect(Rng& rng, const discrete::FiniteSpace& space, double inf_prob = 0.0);

gaussian::GaussChannel gen_gauss_channel(Rng& rng, Eigen::Index dom_dim, Eigen::Index cod_dim,
                                         Eigen::Index copar_dim = 0, Side side = Side::left);
gaussian::GaussChannel gen_gauss_channel(std::uint64_t seed, Eigen::Index dom_dim, Eigen::Index cod_dim);
gaussian::GaussState gen_gauss_state(Rng& rng, Eigen::Index dim);
/// L L^T + floor I with L lower-triangular and diagonal in [0.5, 1.5].
Eigen::MatrixXd gen_spd(Rng& rng, Eigen::Index dim, double floor = 1e-6);

/// Simple lens whose backward is a fixed blend (1 - t) exact + t R (discrete) or
/// the exact backward with shifted gain, offset and inflated covariance (Gaussian).
BayesLens perturbed_lens(Rng& rng, const Channel& fwd, double t);

/// Random forward channel X -> M ⊗ Y of the given instance with sizes in range.
Channel gen_forward(Rng& rng, Instance inst, const Object& dom, std::size_t max_dim, bool degenerate = false);
Object gen_object(Rng& rng, Instance inst, std::size_t max_dim);
State gen_state(Rng& rng, const Object& space, bool degenerate = false);
Point gen_point(Rng& rng, const Object& space);

}  // namespace statgames::harness
