#include "asyncnet/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

namespace asyncnet {

using nlohmann::json;

namespace {

std::string join(const std::string& at, const std::string& key) { return at + "/" + key; }
std::string join(const std::string& at, std::size_t i) { return at + "/" + std::to_string(i); }

void allow_keys(const json& j, const std::string& at, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(at, "expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(join(at, it.key()), "unknown field");
}

double number(const json& j, const std::string& at) {
  if (!j.is_number()) throw ConfigError(at, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(at, "expected a finite number");
  return v;
}

double number_in(const json& j, const std::string& at, double lo, double hi, bool lo_open = false) {
  const double v = number(j, at);
  if (v < lo || v > hi || (lo_open && v == lo)) {
    std::ostringstream m;
    m << "value " << v << " outside " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
    throw ConfigError(at, m.str());
  }
  return v;
}

long integer(const json& j, const std::string& at, long lo) {
  if (!j.is_number_integer()) throw ConfigError(at, "expected an integer");
  const long v = j.get<long>();
  if (v < lo) throw ConfigError(at, "must be >= " + std::to_string(lo));
  return v;
}

const json& required(const json& j, const std::string& at, const char* key) {
  if (!j.contains(key)) throw ConfigError(join(at, key), "missing required field");
  return j.at(key);
}

Vector vec(const json& j, const std::string& at, Index expect = -1) {
  if (!j.is_array()) throw ConfigError(at, "expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number(j[i], join(at, i));
  if (expect >= 0 && v.size() != expect)
    throw ConfigError(at, "expected length " + std::to_string(expect) + ", got " + std::to_string(v.size()));
  return v;
}

// Row-major nested arrays.
Matrix mat(const json& j, const std::string& at, Index rows = -1, Index cols = -1) {
  if (!j.is_array() || j.empty()) throw ConfigError(at, "expected a non-empty array of rows");
  const Index r = static_cast<Index>(j.size());
  Index c = -1;
  Matrix A;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = vec(j[i], join(at, i));
    if (c < 0) {
      c = row.size();
      A.resize(r, c);
    }
    if (row.size() != c) throw ConfigError(join(at, i), "ragged matrix row");
    A.row(static_cast<Index>(i)) = row.transpose();
  }
  if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols))
    throw ConfigError(at, "expected a " + std::to_string(rows) + " x " + std::to_string(cols) + " matrix");
  return A;
}

Matrix covariance(const json& j, const std::string& at, Index M) {
  Matrix R;
  if (j.is_string()) {
    if (j.get<std::string>() != "identity") throw ConfigError(at, "expected \"identity\", a number, {\"diag\": [...]} or a matrix");
    R = Matrix::Identity(M, M);
  } else if (j.is_number()) {
    R = number_in(j, at, 0.0, 1e300, true) * Matrix::Identity(M, M);
  } else if (j.is_object()) {
    allow_keys(j, at, {"diag"});
    const Vector d = vec(required(j, at, "diag"), join(at, "diag"), M);
    R = d.asDiagonal();
  } else {
    R = mat(j, at, M, M);
  }
  if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError(at, "covariance must be symmetric");
  Eigen::LLT<Matrix> llt(R);
  if (llt.info() != Eigen::Success) throw ConfigError(at, "covariance must be positive-definite");
  return R;
}

Index infer_dimension(const json& root) {
  if (root.contains("M")) return static_cast<Index>(integer(root.at("M"), "/M", 1));
  if (root.contains("w_o") && root.at("w_o").is_array()) return static_cast<Index>(root.at("w_o").size());
  throw ConfigError("/M", "parameter dimension M is required when w_o is not given");
}

struct AgentBlock {
  json spec;
  std::string at;
};

std::vector<AgentBlock> expand_agents(const json& root, long& N) {
  const json& a = required(root, "", "agents");
  std::vector<AgentBlock> out;
  if (a.is_array()) {
    if (a.empty()) throw ConfigError("/agents", "need at least one agent");
    if (N > 0 && static_cast<long>(a.size()) != N)
      throw ConfigError("/agents", "array length differs from N = " + std::to_string(N));
    N = static_cast<long>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back({a[i], join("/agents", i)});
    return out;
  }
  if (!a.is_object()) throw ConfigError("/agents", "expected an agent object or an array of agents");
  if (N <= 0) N = 1;
  // Template form: array-valued sigma_v2 / step lists are spread over agents.
  for (long k = 0; k < N; ++k) {
    json one = a;
    for (const char* key : {"sigma_v2", "step"}) {
      if (a.contains(key) && a.at(key).is_array()) {
        if (static_cast<long>(a.at(key).size()) != N)
          throw ConfigError(join("/agents", key), "per-agent list must have N = " + std::to_string(N) + " entries");
        one[key] = a.at(key)[static_cast<std::size_t>(k)];
      }
    }
    out.push_back({one, "/agents"});
  }
  return out;
}

AgentModel parse_agent(const json& j, const std::string& at, Index M, const std::optional<Vector>& w_o) {
  allow_keys(j, at, {"model", "R_u", "sigma_v2", "step", "rho", "feature_mean", "feature_cov"});
  const std::string model = j.contains("model") ? j.at("model").get<std::string>() : "lms";
  if (model == "lms") {
    for (const char* k : {"rho", "feature_mean", "feature_cov"})
      if (j.contains(k)) throw ConfigError(join(at, k), "not valid for model \"lms\"");
    const Matrix R = j.contains("R_u") ? covariance(j.at("R_u"), join(at, "R_u"), M) : Matrix(Matrix::Identity(M, M));
    const double s2 = number_in(required(j, at, "sigma_v2"), join(at, "sigma_v2"), 0.0, 1e300);
    const Vector wo = w_o ? *w_o : Vector(Vector::Constant(M, 1.0 / std::sqrt(static_cast<double>(M))));
    return LinearRegressionModel(wo, R, s2);
  }
  if (model == "logistic") {
    for (const char* k : {"R_u", "sigma_v2"})
      if (j.contains(k)) throw ConfigError(join(at, k), "not valid for model \"logistic\"");
    const double rho = number_in(required(j, at, "rho"), join(at, "rho"), 0.0, 1e300, true);
    LogisticFeatureModel fm;
    fm.mean = j.contains("feature_mean") ? vec(j.at("feature_mean"), join(at, "feature_mean"), M)
                                         : Vector(Vector::Constant(M, 1.0 / std::sqrt(static_cast<double>(M))));
    fm.cov = j.contains("feature_cov") ? covariance(j.at("feature_cov"), join(at, "feature_cov"), M)
                                       : Matrix(Matrix::Identity(M, M));
    return LogisticCost(rho, fm);
  }
  throw ConfigError(join(at, "model"), "expected \"lms\" or \"logistic\"");
}

Matrix parse_combination(const json& j, const std::string& at, Index N) {
  allow_keys(j, at, {"matrix", "graph", "weights", "link_probability"});
  Matrix A;
  if (j.contains("matrix")) {
    if (j.contains("graph") || j.contains("weights")) throw ConfigError(at, "give either \"matrix\" or \"graph\", not both");
    A = mat(j.at("matrix"), join(at, "matrix"), N, N);
    const auto rep = validate_left_stochastic(A, 1e-9);
    if (!rep.ok)
      throw ConfigError(join(at, "matrix"), "not left-stochastic: " + rep.summary() + " (offending column " +
                                               std::to_string(rep.offending.front()) + ")");
    return A;
  }
  const json& g = required(j, at, "graph");
  Matrix adj;
  if (g.is_string()) {
    const std::string name = g.get<std::string>();
    if (name == "ring") adj = ring_adjacency(static_cast<int>(N));
    else if (name == "full") adj = full_adjacency(static_cast<int>(N));
    else throw ConfigError(join(at, "graph"), "expected \"ring\", \"full\" or an adjacency matrix");
  } else {
    adj = mat(g, join(at, "graph"), N, N);
  }
  const std::string w = j.contains("weights") ? j.at("weights").get<std::string>() : "metropolis";
  if (w == "metropolis") return metropolis_weights(adj);
  if (w == "uniform") return uniform_weights(adj);
  throw ConfigError(join(at, "weights"), "expected \"metropolis\" or \"uniform\"");
}

RandomCombinationPolicy parse_policy(const json& j, const std::string& at, Index N) {
  const Matrix A = parse_combination(j, at, N);
  Matrix q = Matrix::Ones(N, N);
  if (j.contains("link_probability")) {
    const json& lp = j.at("link_probability");
    const std::string lat = join(at, "link_probability");
    if (lp.is_number()) {
      q.setConstant(number_in(lp, lat, 0.0, 1.0));
    } else if (lp.is_array()) {
      for (std::size_t i = 0; i < lp.size(); ++i) {
        const std::string eat = join(lat, i);
        allow_keys(lp[i], eat, {"from", "to", "p"});
        const long l = integer(required(lp[i], eat, "from"), join(eat, "from"), 0);
        const long k = integer(required(lp[i], eat, "to"), join(eat, "to"), 0);
        if (l >= N || k >= N) throw ConfigError(eat, "agent index out of range (0-based)");
        if (l == k) throw ConfigError(eat, "self-loops cannot fail");
        if (A(l, k) == 0.0) throw ConfigError(eat, "no such link in the combination matrix");
        q(l, k) = number_in(required(lp[i], eat, "p"), join(eat, "p"), 0.0, 1.0);
      }
    } else {
      throw ConfigError(lat, "expected a number or a list of {from, to, p}");
    }
  }
  return RandomCombinationPolicy(A, q);
}

FusionSampler parse_fusion(const json& j, const std::string& at, int N) {
  allow_keys(j, at, {"type", "q", "weights"});
  const std::string t = required(j, at, "type").get<std::string>();
  if (t == "uniform") return FusionSampler::uniform(N);
  if (t == "on_off") return FusionSampler::on_off(N, number_in(required(j, at, "q"), join(at, "q"), 0.0, 1.0, true));
  if (t == "fixed") {
    const Vector w = vec(required(j, at, "weights"), join(at, "weights"), N);
    if (w.minCoeff() < 0.0 || std::abs(w.sum() - 1.0) > 1e-12)
      throw ConfigError(join(at, "weights"), "fusion weights must be nonnegative and sum to 1");
    return FusionSampler::fixed(w);
  }
  throw ConfigError(join(at, "type"), "expected \"uniform\", \"on_off\" or \"fixed\"");
}

}  // namespace

StepSizeProcess step_size_from_json(const json& j, const std::string& at) {
  if (!j.is_object()) throw ConfigError(at, "expected a step-size object");
  const std::string t = required(j, at, "type").get<std::string>();
  try {
    if (t == "constant") {
      allow_keys(j, at, {"type", "mu"});
      return StepSizeProcess::constant(number_in(required(j, at, "mu"), join(at, "mu"), 0.0, 1e300));
    }
    if (t == "bernoulli") {
      allow_keys(j, at, {"type", "mu", "p"});
      return StepSizeProcess::bernoulli(number_in(required(j, at, "mu"), join(at, "mu"), 0.0, 1e300),
                                        number_in(required(j, at, "p"), join(at, "p"), 0.0, 1.0));
    }
    if (t == "beta") {
      allow_keys(j, at, {"type", "mu_ub", "xi", "zeta"});
      return StepSizeProcess::beta_scaled(number_in(required(j, at, "mu_ub"), join(at, "mu_ub"), 0.0, 1e300),
                                          number_in(required(j, at, "xi"), join(at, "xi"), 0.0, 1e300, true),
                                          number_in(required(j, at, "zeta"), join(at, "zeta"), 0.0, 1e300, true));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(at, e.what());
  }
  throw ConfigError(join(at, "type"), "expected \"constant\", \"bernoulli\" or \"beta\"");
}

json step_size_to_json(const StepSizeProcess& p) {
  switch (p.kind()) {
    case StepSizeProcess::Kind::constant: return {{"type", "constant"}, {"mu", p.mu()}};
    case StepSizeProcess::Kind::bernoulli: return {{"type", "bernoulli"}, {"mu", p.mu()}, {"p", p.p()}};
    case StepSizeProcess::Kind::beta_scaled:
      return {{"type", "beta"}, {"mu_ub", p.mu()}, {"xi", p.xi()}, {"zeta", p.zeta()}};
  }
  return {};
}

ParsedConfig parse_config(const json& root, const ConfigOverrides& ov) {
  allow_keys(root, "", {"description", "M", "N", "w_o", "agents", "strategy", "simulation", "tolerance"});
  ParsedConfig pc;
  ExperimentSpec& spec = pc.spec;

  const Index M = infer_dimension(root);
  long N = root.contains("N") ? integer(root.at("N"), "/N", 1) : 0;
  if (root.contains("w_o")) spec.w_o = vec(root.at("w_o"), "/w_o", M);

  const auto blocks = expand_agents(root, N);
  const Index n = static_cast<Index>(N);
  for (const auto& b : blocks) {
    try {
      spec.agents.push_back(parse_agent(b.spec, b.at, M, spec.w_o));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(b.at, e.what());
    }
    const std::string sat = join(b.at, "step");
    if (!b.spec.contains("step")) throw ConfigError(sat, "missing required field");
    spec.strategy.step_sizes.push_back(step_size_from_json(b.spec.at("step"), sat));
  }

  const json& st = required(root, "", "strategy");
  allow_keys(st, "/strategy", {"kind", "combination", "unified", "C", "central_step", "fusion"});
  const json& kind_j = required(st, "/strategy", "kind");
  if (!kind_j.is_string()) throw ConfigError("/strategy/kind", "expected a string");
  try {
    spec.strategy.kind = strategy_from_string(kind_j.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("/strategy/kind", e.what());
  }
  const StrategyKind kind = spec.strategy.kind;
  try {
    if (st.contains("combination")) spec.strategy.policy = parse_policy(st.at("combination"), "/strategy/combination", n);
    if (is_distributed(kind) && !spec.strategy.policy)
      throw ConfigError("/strategy/combination", "required for strategy " + to_string(kind));
    if (st.contains("unified")) {
      const json& u = st.at("unified");
      allow_keys(u, "/strategy/unified", {"A_o", "A_1", "A_2"});
      if (u.contains("A_o")) spec.strategy.A_o = parse_policy(u.at("A_o"), "/strategy/unified/A_o", n);
      if (u.contains("A_1")) spec.strategy.A_1 = parse_policy(u.at("A_1"), "/strategy/unified/A_1", n);
      if (u.contains("A_2")) spec.strategy.A_2 = parse_policy(u.at("A_2"), "/strategy/unified/A_2", n);
    }
    if (st.contains("C")) {
      const json& c = st.at("C");
      if (c.is_string() && c.get<std::string>() == "identity") {
        spec.strategy.C = Matrix::Identity(n, n);
      } else if (c.is_string() && c.get<std::string>() == "uniform") {
        if (!spec.strategy.policy) throw ConfigError("/strategy/C", "\"uniform\" needs a combination policy");
        // c_lk = 1 / |{k : l in N_k}| over the mean graph.
        const Matrix Abar = spec.strategy.policy->mean();
        Matrix C = Matrix::Zero(n, n);
        for (Index l = 0; l < n; ++l) {
          const double deg = static_cast<double>((Abar.row(l).array() > 0.0).count());
          for (Index k = 0; k < n; ++k)
            if (Abar(l, k) > 0.0) C(l, k) = 1.0 / deg;
        }
        spec.strategy.C = C;
      } else {
        const Matrix C = mat(c, "/strategy/C", n, n);
        const auto rep = validate_right_stochastic(C, 1e-9);
        if (!rep.ok) throw ConfigError("/strategy/C", "not right-stochastic: " + rep.summary());
        spec.strategy.C = C;
      }
    }
    if (st.contains("central_step")) spec.strategy.central_step = step_size_from_json(st.at("central_step"), "/strategy/central_step");
    if (st.contains("fusion")) spec.strategy.fusion = parse_fusion(st.at("fusion"), "/strategy/fusion", static_cast<int>(n));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("/strategy", e.what());
  }

  if (root.contains("simulation")) {
    const json& sim = root.at("simulation");
    allow_keys(sim, "/simulation", {"runs", "iterations", "window", "seed", "threads", "gradient", "w_init"});
    if (sim.contains("runs")) spec.runs = integer(sim.at("runs"), "/simulation/runs", 1);
    if (sim.contains("iterations")) spec.iterations = integer(sim.at("iterations"), "/simulation/iterations", 2);
    if (sim.contains("window")) spec.window = integer(sim.at("window"), "/simulation/window", 2);
    if (sim.contains("seed")) {
      if (!sim.at("seed").is_number_unsigned() && !(sim.at("seed").is_number_integer() && sim.at("seed").get<long>() >= 0))
        throw ConfigError("/simulation/seed", "expected a nonnegative integer");
      spec.seed = sim.at("seed").get<std::uint64_t>();
    }
    if (sim.contains("threads")) spec.threads = static_cast<int>(integer(sim.at("threads"), "/simulation/threads", 0));
    if (sim.contains("gradient")) {
      const std::string g = sim.at("gradient").get<std::string>();
      if (g == "stochastic") spec.gradient_mode = GradientMode::stochastic;
      else if (g == "exact") spec.gradient_mode = GradientMode::exact;
      else throw ConfigError("/simulation/gradient", "expected \"stochastic\" or \"exact\"");
    }
    if (sim.contains("w_init")) spec.w_init = vec(sim.at("w_init"), "/simulation/w_init", M);
  }
  if (spec.window > 0 && spec.window >= spec.iterations)
    throw ConfigError("/simulation/window", "must be smaller than iterations");

  if (root.contains("tolerance")) {
    const json& t = root.at("tolerance");
    allow_keys(t, "/tolerance", {"msd", "emse", "rate"});
    for (auto it = t.begin(); it != t.end(); ++it)
      pc.tolerance[it.key()] = number_in(it.value(), join("/tolerance", it.key()), 0.0, 1e300, true);
  }

  if (ov.seed) spec.seed = *ov.seed;
  if (ov.threads) spec.threads = *ov.threads;

  // Constructor-level checks; precondition failures pass through.
  try {
    StrategyRunner probe(spec.strategy, spec.agents, spec.gradient_mode);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("/strategy", e.what());
  }

  pc.canonical = root;
  pc.canonical["simulation"]["seed"] = spec.seed;
  pc.canonical["simulation"].erase("threads");
  spec.digest = config_digest(pc.canonical);
  return pc;
}

ParsedConfig parse_config_text(const std::string& text, const ConfigOverrides& ov) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  try {
    return parse_config(j, ov);
  } catch (const json::type_error& e) {
    throw ConfigError("", std::string("wrong value type: ") + e.what());
  }
}

ParsedConfig load_config(const std::string& path, const ConfigOverrides& ov) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), ov);
}

std::string config_digest(const json& canonical) {
  const std::string s = canonical.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json matrix_to_json(const Matrix& A) {
  json rows = json::array();
  for (Index i = 0; i < A.rows(); ++i) {
    json r = json::array();
    for (Index j = 0; j < A.cols(); ++j) r.push_back(A(i, j));
    rows.push_back(r);
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const SteadyStateReport& r) {
  json j;
  j["digest"] = r.digest;
  j["strategy"] = r.strategy;
  j["runs"] = r.runs;
  j["iterations"] = r.iterations;
  j["window"] = r.window;
  j["msd"] = r.msd;
  j["msd_se"] = r.msd_se;
  j["msd_agent"] = r.msd_agent;
  j["msd_agent_se"] = r.msd_agent_se;
  j["emse"] = r.emse;
  j["emse_se"] = r.emse_se;
  j["alpha_hat"] = r.alpha_hat;
  j["time_to_2x"] = r.time_to_2x;
  j["converged"] = r.converged;
  j["diverged"] = r.diverged;
  if (r.diverged) {
    j["diverged_iteration"] = r.diverged_iteration;
    j["diverged_run"] = r.diverged_run;
    j["diverged_agent"] = r.diverged_agent;
  }
  return j;
}

json to_json(const TheoryRecord& t) {
  json j;
  j["digest"] = t.digest;
  j["strategy"] = t.strategy;
  j["available"] = t.available;
  if (!t.note.empty()) j["note"] = t.note;
  j["msd"] = t.msd;
  j["er"] = t.er ? json(*t.er) : json(nullptr);
  j["alpha"] = t.alpha ? json(*t.alpha) : json(nullptr);
  if (t.spectral_radius) j["spectral_radius"] = *t.spectral_radius;
  j["inputs"] = t.inputs;
  return j;
}

json to_json(const Comparison& c) {
  json j;
  j["comparable"] = c.comparable;
  if (!c.reason.empty()) j["reason"] = c.reason;
  j["pass"] = c.pass;
  json rows = json::array();
  for (const auto& r : c.rows)
    rows.push_back({{"quantity", r.quantity},
                    {"empirical", r.empirical},
                    {"theory", r.theory},
                    {"rel_error", r.rel_error},
                    {"tolerance", r.tolerance},
                    {"pass", r.pass}});
  j["rows"] = rows;
  return j;
}

std::string curve_csv(const LearningCurve& c) {
  std::string out = "iteration,agent_id,msd\n";
  char buf[64];
  for (Index i = 0; i < c.msd.rows(); ++i)
    for (Index k = 0; k < c.msd.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%ld,%ld,%.10e\n", static_cast<long>(i), static_cast<long>(k), c.msd(i, k));
      out += buf;
    }
  return out;
}

std::string curve_svg(const LearningCurve& c, const std::string& title) {
  const double W = 720, H = 420, L = 70, R = 20, T = 40, B = 50;
  const Index n = c.msd.rows();
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << title
    << "</text>\n";
  if (n == 0) {
    s << "</svg>\n";
    return s.str();
  }
  double lo = 1e300, hi = -1e300;
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < c.msd.cols(); ++k) {
      const double v = c.msd(i, k);
      if (v > 0.0) {
        lo = std::min(lo, std::log10(v));
        hi = std::max(hi, std::log10(v));
      }
    }
  if (!(hi > lo)) hi = lo + 1.0;
  lo = std::floor(lo);
  hi = std::ceil(hi);
  auto px = [&](double i) { return L + (W - L - R) * i / std::max<double>(1.0, static_cast<double>(n - 1)); };
  auto py = [&](double v) { return T + (H - T - B) * (hi - std::log10(std::max(v, 1e-300))) / (hi - lo); };
  s << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = lo; d <= hi; d += 1.0) {
    const double y = T + (H - T - B) * (hi - d) / (hi - lo);
    s << "<text x=\"" << L - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e"
      << d << "</text>\n";
  }
  s << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">iteration (0.."
    << n - 1 << ")</text>\n";
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  const Index stride = std::max<Index>(1, n / 800);
  for (Index k = 0; k < c.msd.cols(); ++k) {
    s << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << colors[k % 8] << "\" points=\"";
    for (Index i = 0; i < n; i += stride) s << px(static_cast<double>(i)) << ',' << py(c.msd(i, k)) << ' ';
    s << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out) throw std::runtime_error("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

}  // namespace asyncnet
