#include "statgames/games.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace statgames {

Game::Game(BayesLens l, LossFn f) : lens(std::move(l)), loss(std::move(f)) {
  if (!(loss.prior_space() == lens.dom()) || !(loss.obs_space() == lens.out())) {
    throw ShapeError("game: loss spaces " + describe(loss.prior_space()) + ", " + describe(loss.obs_space()) +
                     " do not match the lens " + describe(lens.dom()) + " -> " + describe(lens.out()));
  }
}

GameRef make_game(BayesLens lens, LossFn loss) {
  return std::make_shared<const Game>(std::move(lens), std::move(loss));
}

GameRef game_hcompose(const GameRef& g2, const GameRef& g1) {
  return make_game(lens_compose(g2->lens, g1->lens), loss_compose(g2->loss, g1->loss, g2->lens, g1->lens));
}

TwoCellWitness::TwoCellWitness(GameRef from, GameRef to, LossFn K, std::vector<Probe> probes, double tol,
                               double floor)
    : from_(std::move(from)), to_(std::move(to)), K_(std::move(K)), probes_(std::move(probes)) {
  if (!from_ || !to_) throw CompositionError("witness: missing game");
  for (std::size_t i = 0; i < probes_.size(); ++i) {
    const auto& p = probes_[i];
    const double lhs = from_->loss(p.prior, p.obs);
    const double k = K_(p.prior, p.obs);
    const double rhs = discrete::ext_add(to_->loss(p.prior, p.obs), k);
    const bool same = (std::isinf(lhs) && std::isinf(rhs)) || std::abs(lhs - rhs) <= tol;
    if (!same || k < floor) {
      std::ostringstream os;
      os << "witness fails at probe " << i << ": loss " << lhs << " vs " << rhs << " with K = " << k;
      throw ValidationError(os.str());
    }
  }
}

TwoCellWitness TwoCellWitness::identity(const GameRef& g, std::vector<Probe> probes) {
  return TwoCellWitness(g, g, LossFn::zero(g->lens.dom(), g->lens.out()), std::move(probes));
}

TwoCellWitness game_vcompose(const TwoCellWitness& w2, const TwoCellWitness& w1) {
  if (w1.to() != w2.from()) throw CompositionError("vertical composite: witnesses do not chain");
  std::vector<Probe> probes = w1.probes();
  probes.insert(probes.end(), w2.probes().begin(), w2.probes().end());
  return TwoCellWitness(w1.from(), w2.to(), loss_add(w2.K(), w1.K()), std::move(probes));
}

const char* to_string(Classification c) {
  switch (c) {
    case Classification::strict: return "STRICT";
    case Classification::lax: return "LAX";
    case Classification::violation: return "VIOLATION";
  }
  return "?";
}

SectionReport section_check(LossModel model, const std::vector<LensPair>& pairs,
                            const std::vector<std::vector<Probe>>& probes, double strict_tol, double floor) {
  if (probes.size() != pairs.size()) throw ShapeError("section_check: one probe list per pair expected");
  SectionReport r{model, Classification::strict};
  r.n_pairs = pairs.size();
  bool some_positive = false, some_negative = false;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const LossFn K = laxness_witness(model, pairs[i].d, pairs[i].c);
    for (const auto& p : probes[i]) {
      ++r.n_probes;
      double k = 0.0;
      try {
        k = K(p.prior, p.obs);
      } catch (const SupportError&) {
        ++r.skipped;
        continue;
      } catch (const SingularityError&) {
        ++r.skipped;
        continue;
      }
      r.worst_K = std::min(r.worst_K, k);
      r.worst_abs_K = std::max(r.worst_abs_K, std::abs(k));
      if (k < floor) some_negative = true;
      if (std::abs(k) >= strict_tol) some_positive = true;
    }
  }
  if (some_negative) {
    r.classification = Classification::violation;
  } else if (some_positive) {
    r.classification = Classification::lax;
  }
  return r;
}

std::string to_json(const SectionReport& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  nlohmann::json j{{"model", to_string(r.model)},
                   {"classification", to_string(r.classification)},
                   {"n_pairs", r.n_pairs},
                   {"n_probes", r.n_probes},
                   {"worst_K", num(r.worst_K)},
                   {"worst_abs_K", num(r.worst_abs_K)},
                   {"skipped", r.skipped}};
  return j.dump();
}

}  // namespace statgames
