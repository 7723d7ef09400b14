#include "statgames/demo.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "statgames/harness.hpp"

namespace statgames::demo {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using gaussian::GaussChannel;
using gaussian::GaussState;

MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }
VectorXd vec(double v) { return VectorXd::Constant(1, v); }

Eigen::Vector3d pack(const Params& p) { return {p.gain, p.offset, p.logvar}; }
Params unpack(const Eigen::Vector3d& t) { return {t(0), t(1), t(2)}; }

}  // namespace

BayesLens model_lens(const Model& m, const Params& p) {
  const GaussChannel fwd(scalar(m.a), vec(m.b), scalar(m.sigma * m.sigma));
  const GaussChannel back(scalar(p.gain), vec(p.offset), scalar(std::exp(p.logvar)), 0, Side::right);
  return BayesLens(fwd, [back](const State&) -> Channel { return back; });
}

Row evaluate(const Model& m, const Params& p, std::size_t step) {
  const BayesLens l = model_lens(m, p);
  const State prior = GaussState::standard(1);
  const Point y = vec(m.y);
  const double kl = kl_loss(l)(prior, y);
  const double mle = mle_loss(l)(prior, y);
  return Row{step, kl + mle, kl, mle, p};
}

double neg_log_evidence(const Model& m) {
  const double var = m.a * m.a + m.sigma * m.sigma;
  const double r = m.y - m.b;
  return 0.5 * (std::log(2.0 * std::numbers::pi * var) + r * r / var);
}

Params initial_params(std::uint64_t seed) {
  harness::Rng rng(harness::splitmix64(seed));
  Params p;
  p.gain = rng.uniform(-1.0, 1.0);
  p.offset = rng.uniform(-1.0, 1.0);
  p.logvar = rng.uniform(-1.0, 1.0);
  return p;
}

Result run(const Model& m, const Config& cfg) {
  Result r;
  r.neg_log_evidence = neg_log_evidence(m);
  Eigen::Vector3d theta = pack(initial_params(cfg.seed));
  Row current = evaluate(m, unpack(theta), 0);
  r.rows.push_back(current);
  double lr = cfg.lr;
  auto fe = [&](const Eigen::Vector3d& t) { return evaluate(m, unpack(t), 0).fe; };
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    Eigen::Vector3d grad;
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector3d e = cfg.h * Eigen::Vector3d::Unit(i);
      grad(i) = (fe(theta + e) - fe(theta - e)) / (2.0 * cfg.h);
    }
    std::size_t rejected = 0;
    for (;;) {
      const Eigen::Vector3d next = theta - lr * grad;
      const Row candidate = evaluate(m, unpack(next), step);
      if (std::isfinite(candidate.fe) && candidate.fe <= current.fe + cfg.slack) {
        theta = next;
        current = candidate;
        break;
      }
      ++r.rejections;
      if (++rejected >= cfg.max_rejections) {
        r.diverged = true;
        return r;
      }
      lr *= 0.5;
    }
    r.rows.push_back(current);
  }
  return r;
}

std::string to_csv(const Result& r) {
  std::ostringstream os;
  os << "step,fe,kl,mle,gain,offset,logvar\n" << std::setprecision(17);
  for (const auto& row : r.rows) {
    os << row.step << "," << row.fe << "," << row.kl << "," << row.mle << "," << row.params.gain << ","
       << row.params.offset << "," << row.params.logvar << "\n";
  }
  return os.str();
}

}  // namespace statgames::demo
