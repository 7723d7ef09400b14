// statgames: verification suites, loss evaluation and the free-energy demo.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "statgames/demo.hpp"
#include "statgames/harness.hpp"
#include "statgames/io.hpp"

namespace fs = std::filesystem;
using namespace statgames;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

fs::path report_dir() {
  const char* env = std::getenv("STATGAMES_REPORT_DIR");
  return env && *env ? fs::path(env) : fs::path(".");
}

bool write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  out << text;
  if (!out) {
    std::cerr << "error: cannot write " << path.string() << "\n";
    return false;
  }
  return true;
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

// ------------------------------------------------------------------ verify

struct VerifyArgs {
  std::vector<std::string> suites{"all"};
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t max_dim = 4;
  double tol = 1e-9;
  std::string report;
  std::string instance = "discrete";
  bool product_priors = false;
  bool degenerate = false;
};

int cmd_verify(const VerifyArgs& a) {
  std::vector<std::string> names;
  for (const auto& s : a.suites) {
    if (s == "all") {
      names.insert(names.end(), harness::suite_names().begin(), harness::suite_names().end());
    } else if (harness::is_suite(s)) {
      names.push_back(s);
    } else {
      std::cerr << "error: unknown suite '" << s << "'\navailable suites: all, " << join(harness::suite_names(), ", ")
                << "\n";
      return kUsage;
    }
  }
  harness::SuiteConfig base;
  base.trials = a.trials;
  base.seed = a.seed;
  base.max_dim = a.max_dim;
  base.tolerance = a.tol;
  base.instance = a.instance == "gaussian" ? Instance::gaussian : Instance::discrete;
  base.product_priors = a.product_priors;
  base.degenerate = a.degenerate;
  try {
    harness::validate(base);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  std::vector<harness::SuiteReport> reports;
  bool ok = true;
  for (const auto& n : names) {
    harness::SuiteConfig cfg = base;
    cfg.suite = n;
    reports.push_back(harness::run_suite(cfg));
    const auto& r = reports.back();
    std::cout << harness::summary_line(r) << "\n";
    if (!r.notes.empty()) std::cout << "      " << r.notes.size() << " note(s) recorded in the report\n";
    ok = ok && r.ok();
  }
  const fs::path json_path = a.report.empty() ? report_dir() / "verify-report.json" : fs::path(a.report);
  fs::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  if (!write_file(json_path, harness::to_json(reports)) || !write_file(csv_path, harness::to_csv(reports))) {
    return kFailure;
  }
  std::cout << "report: " << json_path.string() << ", " << csv_path.string() << "\n";
  return ok ? kOk : kFailure;
}

// ------------------------------------------------------------------ eval-loss

struct EvalArgs {
  std::string model;
  std::string loss;
  std::string prior;
  std::string obs;
  bool decompose = false;
  std::string json;
};

State default_prior(const Object& x) {
  if (const auto* s = std::get_if<discrete::FiniteSpace>(&x)) return discrete::Dist::uniform(*s);
  return gaussian::GaussState::standard(std::get<gaussian::Euclidean>(x).dim);
}

int cmd_eval_loss(const EvalArgs& a) {
  const auto model = parse_loss_model(a.loss);
  if (!model) {
    std::cerr << "error: unknown loss '" << a.loss << "' (expected KL, MLE, FE or LFE)\n";
    return kUsage;
  }
  std::optional<BayesLens> lens;
  std::optional<State> prior;
  std::optional<Point> obs;
  try {
    lens = io::parse_lens(io::load_json(a.model), a.model);
    prior = a.prior.empty() ? default_prior(lens->dom()) : io::parse_state(io::load_json(a.prior), a.prior);
    if (!(space_of(*prior) == lens->dom())) {
      std::cerr << "error: " << (a.prior.empty() ? "prior" : a.prior) << ": prior lives on "
                << describe(space_of(*prior)) << ", the lens domain is " << describe(lens->dom()) << "\n";
      return kUsage;
    }
    obs = io::parse_point(a.obs, lens->out());
    if (*model == LossModel::LFE && lens->instance() != Instance::gaussian) {
      std::cerr << "error: LFE applies to Gaussian models only\n";
      return kUsage;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  nlohmann::json out{{"model", a.model}, {"loss", to_string(*model)}, {"obs", a.obs}};
  try {
    const double value = model_loss(*model, *lens)(*prior, *obs);
    std::cout << std::setprecision(12) << to_string(*model) << " " << value << "\n";
    out["value"] = value;
    if (a.decompose) {
      const EnergyEntropy d = *model == LossModel::LFE ? laplace_energy_entropy(*lens, *prior, *obs)
                                                       : energy_entropy_decomp(*lens, *prior, *obs);
      std::cout << "energy " << d.energy << "\nentropy " << d.entropy << "\n";
      if (*model != LossModel::LFE) std::cout << "energy - entropy (FE) " << d.energy - d.entropy << "\n";
      out["energy"] = d.energy;
      out["entropy"] = d.entropy;
    }
  } catch (const SupportError& e) {
    std::cerr << "error: observation '" << a.obs << "' is unsupported: " << e.what() << "\n";
    return kFailure;
  } catch (const SingularityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  if (!a.json.empty() && !write_file(a.json, out.dump(2) + "\n")) return kFailure;
  return kOk;
}

// ------------------------------------------------------------------ demo

struct DemoArgs {
  demo::Config cfg;
  std::string out;
};

int cmd_demo(const DemoArgs& a) {
  if (!(a.cfg.lr > 0.0)) {
    std::cerr << "error: --lr must be positive\n";
    return kUsage;
  }
  const demo::Model model;
  const demo::Result r = demo::run(model, a.cfg);
  const fs::path path = a.out.empty() ? report_dir() / "demo.csv" : fs::path(a.out);
  if (!write_file(path, demo::to_csv(r))) return kFailure;
  const demo::Row& last = r.rows.back();
  std::cout << std::setprecision(10) << "steps " << last.step << "  FE " << last.fe << "  KL " << last.kl << "  MLE "
            << last.mle << "\n-log evidence " << r.neg_log_evidence << "  rejected steps " << r.rejections
            << "\ntrajectory: " << path.string() << "\n";
  if (r.diverged) {
    std::cerr << "error: diverged at step " << last.step + 1 << "; last state gain=" << last.params.gain
              << " offset=" << last.params.offset << " logvar=" << last.params.logvar << " FE=" << last.fe << "\n";
    return kFailure;
  }
  return kOk;
}

// ------------------------------------------------------------------ inspect

void describe_channel(const Channel& c, const std::string& indent) {
  const char* s = side(c) == Side::left ? "left" : "right";
  if (const auto* k = std::get_if<discrete::CoparKernel>(&c)) {
    std::cout << indent << "discrete kernel " << describe(k->dom()) << " -> " << describe(k->copar()) << " (x) "
              << describe(k->out()) << ", coparameter on the " << s << "\n";
    std::cout << indent << "sizes: dom " << k->dom().size() << ", copar " << k->copar().size() << ", out "
              << k->out().size() << "\n";
    const Eigen::VectorXd sums = k->joint().rows().rowwise().sum();
    std::cout << indent << "row-sum audit: max |sum - 1| = " << std::scientific << std::setprecision(2)
              << (sums.array() - 1.0).abs().maxCoeff() << std::defaultfloat << "\n";
    return;
  }
  const auto& g = std::get<gaussian::GaussChannel>(c);
  std::cout << indent << "gaussian channel R^" << g.dom_dim() << " -> R^" << g.cod_dim() << " (copar block "
            << g.copar_dim() << " at offset " << g.copar_offset() << ", output block " << g.out_dim()
            << " at offset " << g.out_offset() << ", " << s << ")\n";
  const double ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g.noise()).eigenvalues().minCoeff();
  std::cout << indent << "noise: min eigenvalue " << ev << "\n";
}

int cmd_inspect(const std::string& path) {
  try {
    const io::Json j = io::load_json(path);
    const io::Kind kind = io::detect(j, path);
    std::cout << path << ": " << io::to_string(kind) << "\n";
    switch (kind) {
      case io::Kind::kernel:
      case io::Kind::gauss_channel:
        describe_channel(io::parse_channel(j, path), "  ");
        break;
      case io::Kind::dist:
      case io::Kind::gauss_state: {
        const State s = io::parse_state(j, path);
        std::cout << "  space " << describe(space_of(s)) << "\n";
        if (const auto* d = std::get_if<discrete::Dist>(&s)) {
          std::cout << "  mass audit: |sum - 1| = " << std::abs(d->mass().sum() - 1.0) << "\n";
        } else {
          const auto& g = std::get<gaussian::GaussState>(s);
          std::cout << "  cov min eigenvalue "
                    << Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g.cov()).eigenvalues().minCoeff() << "\n";
        }
        break;
      }
      case io::Kind::lens: {
        const BayesLens l = io::parse_lens(j, path);
        std::cout << "  forward:\n";
        describe_channel(l.fwd(), "    ");
        const auto& b = j.contains("bwd") ? j["bwd"] : io::Json("exact");
        if (b.is_string()) {
          std::cout << "  backward: exact inversion at each prior\n";
        } else {
          std::cout << "  backward: table of " << b.size() << " prior-indexed channel(s)\n";
          for (const auto& e : b) {
            std::cout << "    " << (e.contains("name") ? e["name"].get<std::string>() : std::string("(unnamed)"))
                      << "\n";
          }
        }
        break;
      }
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compositional approximate inference: verification suites, losses and demo"};
  app.require_subcommand(1);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "run verification suites");
  verify->add_option("--suite", va.suites, "suite name(s), comma separated, or 'all'")->delimiter(',');
  verify->add_option("--trials", va.trials, "seeded trials per suite")->check(CLI::PositiveNumber);
  verify->add_option("--seed", va.seed, "master seed");
  verify->add_option("--max-dim", va.max_dim, "largest space size / dimension")->check(CLI::Range(2, 64));
  verify->add_option("--tol", va.tol, "comparison tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--report", va.report, "report path (JSON; a CSV summary is written alongside)");
  verify->add_option("--instance", va.instance, "discrete or gaussian")->check(CLI::IsMember({"discrete", "gaussian"}));
  verify->add_flag("--product-priors", va.product_priors, "laxators: only product priors");
  verify->add_flag("--degenerate", va.degenerate, "allow exact zeros in generated kernels and priors");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval-loss", "evaluate a loss on a model file");
  eval->add_option("--model", ea.model, "lens bundle or channel JSON")->required();
  eval->add_option("--loss", ea.loss, "KL, MLE, FE or LFE")->required();
  eval->add_option("--prior", ea.prior, "state JSON (default: uniform / standard normal)");
  eval->add_option("--obs", ea.obs, "observation: label, index or comma-separated reals")->required();
  eval->add_flag("--decompose", ea.decompose, "print energy and entropy");
  eval->add_option("--json", ea.json, "also write the result as JSON");

  DemoArgs da;
  auto* dem = app.add_subcommand("demo", "free-energy minimisation on a conjugate Gaussian model");
  dem->add_option("--steps", da.cfg.steps, "gradient steps");
  dem->add_option("--lr", da.cfg.lr, "initial learning rate");
  dem->add_option("--seed", da.cfg.seed, "seed of the initial parameters");
  dem->add_option("--out", da.out, "trajectory CSV (default: $STATGAMES_REPORT_DIR/demo.csv)");

  std::string inspect_model;
  auto* insp = app.add_subcommand("inspect", "print the structure of a model file");
  insp->add_option("--model", inspect_model, "JSON model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (*verify) return cmd_verify(va);
  if (*eval) return cmd_eval_loss(ea);
  if (*dem) return cmd_demo(da);
  return cmd_inspect(inspect_model);
}
