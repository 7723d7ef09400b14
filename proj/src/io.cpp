#include "statgames/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace statgames::io {

namespace {

using discrete::CoparKernel;
using discrete::Dist;
using discrete::FiniteSpace;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using gaussian::GaussChannel;
using gaussian::GaussState;

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ParseError(where + ": " + what); }

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing field \"") + key + "\"");
  return *it;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

FiniteSpace labels(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty list of labels");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Json& e = j[i];
    if (e.is_string()) {
      out.push_back(e.get<std::string>());
    } else if (e.is_number_integer()) {
      out.push_back(std::to_string(e.get<long long>()));
    } else {
      fail(where + "[" + std::to_string(i) + "]", "labels are strings or integers");
    }
  }
  try {
    return FiniteSpace(std::move(out));
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
}

VectorXd vector_of(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a list of numbers");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

// Nested rows, or a flat row-major list when `cols` is known.
MatrixXd matrix_of(const Json& j, const std::string& where, Index rows, Index cols) {
  if (!j.is_array()) fail(where, "expected a matrix");
  if (!j.empty() && j[0].is_array()) {
    if (rows >= 0 && static_cast<Index>(j.size()) != rows) {
      fail(where, "expected " + std::to_string(rows) + " rows, found " + std::to_string(j.size()));
    }
    MatrixXd m(static_cast<Index>(j.size()), cols >= 0 ? cols : static_cast<Index>(j[0].size()));
    for (std::size_t r = 0; r < j.size(); ++r) {
      const std::string at = where + "[" + std::to_string(r) + "]";
      const VectorXd row = vector_of(j[r], at);
      if (row.size() != m.cols()) fail(at, "expected " + std::to_string(m.cols()) + " entries, found " + std::to_string(row.size()));
      m.row(static_cast<Index>(r)) = row.transpose();
    }
    return m;
  }
  const VectorXd flat = vector_of(j, where);
  if (rows < 0 || cols < 0) {
    if (flat.size() == 1) return MatrixXd::Constant(1, 1, flat(0));
    fail(where, "expected nested rows");
  }
  if (flat.size() != rows * cols) {
    fail(where, "expected " + std::to_string(rows * cols) + " numbers, found " + std::to_string(flat.size()));
  }
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = flat(r * cols + c);
  return m;
}

Side side_of(const Json& j, const std::string& where) {
  const auto it = j.find("side");
  if (it == j.end()) return Side::left;
  if (*it == "left") return Side::left;
  if (*it == "right") return Side::right;
  fail(where + ".side", "expected \"left\" or \"right\"");
}

Channel parse_kernel(const Json& j, const std::string& where) {
  const FiniteSpace dom = labels(field(j, "dom", where), where + ".dom");
  const FiniteSpace cod = labels(field(j, "cod", where), where + ".cod");
  const FiniteSpace copar = j.contains("copar") ? labels(j["copar"], where + ".copar") : FiniteSpace::unit();
  const MatrixXd rows = matrix_of(field(j, "rows", where), where + ".rows", static_cast<Index>(dom.size()),
                                  static_cast<Index>(copar.size() * cod.size()));
  try {
    return CoparKernel(dom, copar, cod, rows, side_of(j, where));
  } catch (const ValidationError& e) {
    fail(where + ".rows", e.what());
  } catch (const ShapeError& e) {
    fail(where, e.what());
  }
}

Channel parse_gauss_channel(const Json& j, const std::string& where) {
  const MatrixXd A = matrix_of(field(j, "A", where), where + ".A", -1, -1);
  const VectorXd b = j.contains("b") ? vector_of(j["b"], where + ".b") : VectorXd::Zero(A.rows());
  const MatrixXd noise = matrix_of(field(j, "noise", where), where + ".noise", A.rows(), A.rows());
  Index copar = 0;
  if (j.contains("copar_dim")) {
    if (!j["copar_dim"].is_number_integer()) fail(where + ".copar_dim", "expected an integer");
    copar = j["copar_dim"].get<Index>();
  }
  try {
    return GaussChannel(A, b, noise, copar, side_of(j, where));
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
}

bool same_prior(const State& a, const State& b) {
  if (instance_of(a) != instance_of(b) || !(space_of(a) == space_of(b))) return false;
  if (const auto* d = std::get_if<Dist>(&a)) {
    return (d->mass() - std::get<Dist>(b).mass()).cwiseAbs().maxCoeff() <= 1e-12;
  }
  const auto& x = std::get<GaussState>(a);
  const auto& y = std::get<GaussState>(b);
  return (x.mean() - y.mean()).cwiseAbs().maxCoeff() <= 1e-12 && (x.cov() - y.cov()).cwiseAbs().maxCoeff() <= 1e-12;
}

}  // namespace

const char* to_string(Kind k) {
  switch (k) {
    case Kind::kernel: return "kernel";
    case Kind::dist: return "distribution";
    case Kind::gauss_channel: return "gaussian channel";
    case Kind::gauss_state: return "gaussian state";
    case Kind::lens: return "lens bundle";
  }
  return "?";
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Kind detect(const Json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  if (j.contains("fwd")) return Kind::lens;
  if (j.contains("rows")) return Kind::kernel;
  if (j.contains("mass")) return Kind::dist;
  if (j.contains("A")) return Kind::gauss_channel;
  if (j.contains("mean")) return Kind::gauss_state;
  fail(where, "not a kernel, distribution, Gaussian channel, Gaussian state or lens bundle");
}

Channel parse_channel(const Json& j, const std::string& where) {
  const Kind k = detect(j, where);
  if (k == Kind::kernel) return parse_kernel(j, where);
  if (k == Kind::gauss_channel) return parse_gauss_channel(j, where);
  fail(where, std::string("expected a channel, found a ") + to_string(k));
}

State parse_state(const Json& j, const std::string& where) {
  const Kind k = detect(j, where);
  if (k == Kind::dist) {
    const FiniteSpace space = labels(field(j, "space", where), where + ".space");
    const VectorXd mass = vector_of(field(j, "mass", where), where + ".mass");
    try {
      return Dist(space, mass);
    } catch (const std::invalid_argument& e) {
      fail(where + ".mass", e.what());
    }
  }
  if (k == Kind::gauss_state) {
    const VectorXd mean = vector_of(field(j, "mean", where), where + ".mean");
    const MatrixXd cov = matrix_of(field(j, "cov", where), where + ".cov", mean.size(), mean.size());
    try {
      return GaussState(mean, cov);
    } catch (const std::invalid_argument& e) {
      fail(where + ".cov", e.what());
    }
  }
  fail(where, std::string("expected a state, found a ") + to_string(k));
}

BayesLens parse_lens(const Json& j, const std::string& where) {
  if (detect(j, where) != Kind::lens) return exact_lens(parse_channel(j, where));
  const Channel fwd = parse_channel(field(j, "fwd", where), where + ".fwd");
  if (side(fwd) != Side::left) fail(where + ".fwd", "forward channels carry a left coparameter");
  const Json& bwd = j.contains("bwd") ? j["bwd"] : Json("exact");
  if (bwd.is_string()) {
    if (bwd != "exact") fail(where + ".bwd", "expected \"exact\" or a table of backward channels");
    return exact_lens(fwd);
  }
  if (!bwd.is_array()) fail(where + ".bwd", "expected \"exact\" or a table of backward channels");
  std::vector<std::pair<std::string, std::pair<State, Channel>>> table;
  for (std::size_t i = 0; i < bwd.size(); ++i) {
    const std::string at = where + ".bwd[" + std::to_string(i) + "]";
    const std::string name = bwd[i].contains("name") ? bwd[i]["name"].get<std::string>() : "#" + std::to_string(i);
    State prior = parse_state(field(bwd[i], "prior", at), at + ".prior");
    Json ch = field(bwd[i], "channel", at);
    if (ch.is_object() && !ch.contains("side")) ch["side"] = "right";
    Channel back = parse_channel(ch, at + ".channel");
    if (!(space_of(prior) == dom(fwd))) fail(at + ".prior", "prior does not live on the forward domain");
    table.push_back({name, {std::move(prior), std::move(back)}});
  }
  BayesLens lens(fwd, [table](const State& pi) -> Channel {
    for (const auto& [name, entry] : table)
      if (same_prior(entry.first, pi)) return entry.second;
    throw SupportError("no backward channel is tabulated for this prior");
  });
  // shape-check every tabulated channel now rather than at first use
  for (const auto& [name, entry] : table) {
    try {
      lens.bwd(entry.first);
    } catch (const ShapeError& e) {
      fail(where + ".bwd (" + name + ")", e.what());
    }
  }
  return lens;
}

Point parse_point(const std::string& text, const Object& space) {
  if (const auto* s = std::get_if<FiniteSpace>(&space)) {
    if (const auto i = s->find(text)) return *i;
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(text, &used);
      if (used == text.size() && v < s->size()) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ParseError("observation '" + text + "' is not an outcome of " + s->describe());
  }
  const Index dim = std::get<gaussian::Euclidean>(space).dim;
  std::string body = text;
  if (!body.empty() && body.front() == '[') {
    try {
      const VectorXd v = vector_of(Json::parse(body), "observation");
      if (v.size() != dim) throw ParseError("observation has dimension " + std::to_string(v.size()));
      return v;
    } catch (const Json::parse_error& e) {
      throw ParseError(std::string("observation: ") + e.what());
    }
  }
  std::vector<double> vals;
  std::stringstream ss(body);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(tok, &used));
      while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError("observation: '" + tok + "' is not a number");
    }
  }
  if (static_cast<Index>(vals.size()) != dim) {
    throw ParseError("observation has dimension " + std::to_string(vals.size()) + ", expected " + std::to_string(dim));
  }
  return VectorXd(Eigen::Map<VectorXd>(vals.data(), dim));
}

Json to_json(const Channel& c) {
  auto mat = [](const MatrixXd& m) {
    Json rows = Json::array();
    for (Index r = 0; r < m.rows(); ++r) {
      Json row = Json::array();
      for (Index k = 0; k < m.cols(); ++k) row.push_back(m(r, k));
      rows.push_back(row);
    }
    return rows;
  };
  const char* s = side(c) == Side::left ? "left" : "right";
  if (const auto* k = std::get_if<CoparKernel>(&c)) {
    return Json{{"dom", k->dom().labels()}, {"copar", k->copar().labels()}, {"cod", k->out().labels()},
                {"rows", mat(k->joint().rows())}, {"side", s}};
  }
  const auto& g = std::get<GaussChannel>(c);
  return Json{{"A", mat(g.A())}, {"b", std::vector<double>(g.b().data(), g.b().data() + g.b().size())},
              {"noise", mat(g.noise())}, {"copar_dim", g.copar_dim()}, {"side", s}};
}

Json to_json(const State& st) {
  if (const auto* d = std::get_if<Dist>(&st)) {
    return Json{{"space", d->space().labels()},
                {"mass", std::vector<double>(d->mass().data(), d->mass().data() + d->mass().size())}};
  }
  const auto& g = std::get<GaussState>(st);
  Json cov = Json::array();
  for (Index r = 0; r < g.cov().rows(); ++r) {
    Json row = Json::array();
    for (Index k = 0; k < g.cov().cols(); ++k) row.push_back(g.cov()(r, k));
    cov.push_back(row);
  }
  return Json{{"mean", std::vector<double>(g.mean().data(), g.mean().data() + g.mean().size())}, {"cov", cov}};
}

}  // namespace statgames::io
