#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "statgames/loss.hpp"

namespace statgames::demo {

/// Generative model x ~ N(0, 1), y | x ~ N(a x + b, sigma^2), observed at y.
struct Model {
  double a = 1.5;
  double b = 0.5;
  double sigma = 0.8;
  double y = 1.0;
};

struct Config {
  std::size_t steps = 2000;
  double lr = 1e-2;
  std::uint64_t seed = 0;
  /// central difference step
  double h = 1e-5;
  /// a step may raise FE by at most this much
  double slack = 1e-6;
  std::size_t max_rejections = 50;
};

/// Backward family y -> N(gain y + offset, exp(logvar)).
struct Params {
  double gain = 0.0;
  double offset = 0.0;
  double logvar = 0.0;
};

struct Row {
  std::size_t step;
  double fe;
  double kl;
  double mle;
  Params params;
};

struct Result {
  std::vector<Row> rows;
  bool diverged = false;
  std::size_t rejections = 0;
  double neg_log_evidence = 0.0;
};

BayesLens model_lens(const Model& m, const Params& p);
/// (FE, KL, MLE) of the backward family at the observation.
Row evaluate(const Model& m, const Params& p, std::size_t step);
/// -log p(y) in closed form.
double neg_log_evidence(const Model& m);
Params initial_params(std::uint64_t seed);

/// Gradient descent on FE with finite-difference gradients.  A step that
/// raises FE by more than `slack` is rejected and the learning rate halved;
/// `max_rejections` consecutive rejections mark divergence.
Result run(const Model& m, const Config& cfg);

std::string to_csv(const Result& r);

}  // namespace statgames::demo
