#pragma once

#include <memory>
#include <string>
#include <vector>

#include "statgames/loss.hpp"

namespace statgames {

/// A statistical game: a lens with a loss on (priors on its domain, its outputs).
struct Game {
  Game(BayesLens lens, LossFn loss);

  BayesLens lens;
  LossFn loss;
};

using GameRef = std::shared_ptr<const Game>;

GameRef make_game(BayesLens lens, LossFn loss);

/// One (prior, observation) evaluation point.
struct Probe {
  State prior;
  Point obs;
};

/// Composite game "g2 after g1": optic composite lens, composite loss.
GameRef game_hcompose(const GameRef& g2, const GameRef& g1);

/// A loss witness between two games on the same lens: loss(from) = loss(to) + K
/// with K >= 0, checked on the probe set at construction.
class TwoCellWitness {
 public:
  TwoCellWitness(GameRef from, GameRef to, LossFn K, std::vector<Probe> probes, double tol = 1e-9,
                 double floor = -1e-12);

  static TwoCellWitness identity(const GameRef& g, std::vector<Probe> probes);

  const GameRef& from() const noexcept { return from_; }
  const GameRef& to() const noexcept { return to_; }
  const LossFn& K() const noexcept { return K_; }
  const std::vector<Probe>& probes() const noexcept { return probes_; }

 private:
  GameRef from_;
  GameRef to_;
  LossFn K_;
  std::vector<Probe> probes_;
};

/// Vertical composite: requires w1.to() to be w2.from(); K is the pointwise sum.
TwoCellWitness game_vcompose(const TwoCellWitness& w2, const TwoCellWitness& w1);

enum class Classification { strict, lax, violation };
const char* to_string(Classification c);

/// Composable pair "d after c".
struct LensPair {
  BayesLens d;
  BayesLens c;
};

struct SectionReport {
  LossModel model;
  Classification classification;
  std::size_t n_pairs = 0;
  std::size_t n_probes = 0;
  double worst_K = 0.0;      // most negative witness value
  double worst_abs_K = 0.0;  // largest |K|
  std::size_t skipped = 0;   // probes hitting support or singularity errors
};

/// Evaluates the laxness witness K(d, c) at each pair's probes (probes[i] belongs
/// to pairs[i]) and classifies the loss model.
SectionReport section_check(LossModel model, const std::vector<LensPair>& pairs,
                            const std::vector<std::vector<Probe>>& probes, double strict_tol = 1e-9,
                            double floor = -1e-12);

std::string to_json(const SectionReport& r);

}  // namespace statgames
