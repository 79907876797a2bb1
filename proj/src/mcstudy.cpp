#include "qla/mcstudy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qla/rng.hpp"
#include "qla/simulate.hpp"

namespace qla {

using nlohmann::json;

namespace {

std::string kind_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::qmle: return "qmle";
    case EstimatorKind::bayes: return "bayes";
    case EstimatorKind::qmle_bayes_init: return "qmle-bayes-init";
  }
  return "?";
}

EstimatorKind kind_from_name(const std::string& s) {
  if (s == "qmle") return EstimatorKind::qmle;
  if (s == "bayes") return EstimatorKind::bayes;
  if (s == "qmle-bayes-init") return EstimatorKind::qmle_bayes_init;
  throw ConfigError("unknown estimator kind: " + s);
}

json vec_to_json(const VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd vec_from_json(const json& a) {
  VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<int>(i)) = a[i].get<double>();
  return v;
}

}  // namespace

std::string EstimatorSpec::label() const {
  std::string s = kind_name(kind);
  if (kind == EstimatorKind::qmle) {
    std::ostringstream os;
    os << s << "(init";
    for (int i = 0; i < init.size(); ++i) os << (i ? "," : " ") << init(i);
    os << (multistart ? ")" : ", no-multistart)");
    return os.str();
  }
  return s;
}

void StudyConfig::validate() const {
  if (model.empty()) throw ConfigError("study: model is required");
  if (replicates < 1) throw ConfigError("study: replicates must be >= 1");
  if (h_list.empty()) throw ConfigError("study: h_list must be nonempty");
  if (estimators.empty()) throw ConfigError("study: estimators must be nonempty");
  if (substeps < 1) throw ConfigError("study: substeps must be >= 1");
  for (double h : h_list) {
    if (!(h > 0.0)) throw ConfigError("study: every h must be positive");
    const double n = T / h;
    if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n))
      throw ConfigError("study: every h must equal T/n for integer n");
  }
}

StudyConfig StudyConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("study config: invalid JSON: ") + e.what());
  }
  if (j.value("schema", 0) != 1) throw ConfigError("study config: expected \"schema\": 1");
  StudyConfig cfg;
  cfg.model = j.at("model").get<std::string>();
  cfg.theta_star = vec_from_json(j.at("theta_star"));
  cfg.T = j.value("T", 1.0);
  for (const auto& h : j.at("h_list")) cfg.h_list.push_back(h.get<double>());
  cfg.replicates = j.at("replicates").get<long>();
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.substeps = j.value("substeps", 10);
  cfg.threads = j.value("threads", 0);
  cfg.dump_reps = j.value("dump_reps", false);
  for (const auto& e : j.at("estimators")) {
    EstimatorSpec spec;
    spec.kind = kind_from_name(e.at("kind").get<std::string>());
    if (e.contains("init")) spec.init = vec_from_json(e.at("init"));
    spec.multistart = e.value("multistart", true);
    cfg.estimators.push_back(std::move(spec));
  }
  cfg.validate();
  return cfg;
}

std::string StudyConfig::to_json() const {
  json j;
  j["schema"] = 1;
  j["model"] = model;
  j["theta_star"] = vec_to_json(theta_star);
  j["T"] = T;
  j["h_list"] = h_list;
  j["replicates"] = replicates;
  j["seed"] = seed;
  j["substeps"] = substeps;
  j["threads"] = threads;
  j["dump_reps"] = dump_reps;
  json ests = json::array();
  for (const auto& e : estimators) {
    json je;
    je["kind"] = kind_name(e.kind);
    if (e.init.size() > 0) je["init"] = vec_to_json(e.init);
    je["multistart"] = e.multistart;
    ests.push_back(je);
  }
  j["estimators"] = ests;
  return j.dump(2);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("QLA_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

struct RepOutcome {
  std::vector<VectorXd> theta;     // one per estimator
  std::vector<bool> ok;
  std::vector<bool> converged;
};

RepOutcome run_replicate(const StudyConfig& cfg, const ModelSpec& model, int n, double h,
                         std::uint64_t rep_seed) {
  const Scheme scheme = (model.d == 1 && model.m == 1 && model.r == 1) ? Scheme::milstein : Scheme::euler;
  const SamplePath path = simulate_path(model, n, cfg.T, cfg.theta_star, rep_seed, scheme, cfg.substeps);
  const Observations obs = Observations::from_path(path);

  RepOutcome out;
  out.theta.resize(cfg.estimators.size());
  out.ok.assign(cfg.estimators.size(), false);
  out.converged.assign(cfg.estimators.size(), false);

  // The three estimators share the replicate's path; the Bayes posterior mean
  // is computed once and reused as the qmle-bayes-init starting point.
  bool have_bayes = false;
  EstimationResult bayes_res;
  const Prior prior = Prior::uniform();

  for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
    const EstimatorSpec& spec = cfg.estimators[e];
    try {
      EstimationResult res;
      if (spec.kind == EstimatorKind::bayes) {
        if (!have_bayes) {
          bayes_res = bayes(obs, model, prior);
          have_bayes = true;
        }
        res = bayes_res;
      } else if (spec.kind == EstimatorKind::qmle_bayes_init) {
        if (!have_bayes) {
          bayes_res = bayes(obs, model, prior);
          have_bayes = true;
        }
        QmleOpts qopts;
        qopts.multistart = spec.multistart;
        res = qmle(obs, model, model.clamp_to_margined_box(bayes_res.theta_hat), qopts);
        res.kind = EstimatorKind::qmle_bayes_init;
      } else {
        QmleOpts qopts;
        qopts.multistart = spec.multistart;
        VectorXd init = spec.init.size() == model.p ? spec.init
                                                    : (0.5 * (model.theta_lo + model.theta_hi)).eval();
        res = qmle(obs, model, init, qopts);
      }
      out.theta[e] = res.theta_hat;
      out.converged[e] = res.converged;
      out.ok[e] = res.converged;  // NoConvergence counts as a failure
    } catch (const std::exception&) {
      out.ok[e] = false;  // NonSPD / DegeneratePosterior etc.: excluded, counted
    }
  }
  return out;
}

}  // namespace

McReport run_study(const StudyConfig& cfg) {
  cfg.validate();
  const ModelSpec model = make_model(cfg.model);
  if (!model.in_closure(cfg.theta_star)) throw ConfigError("study: theta_star outside the box");

  McReport report;
  report.config = cfg;
  const int threads = resolve_threads(cfg.threads);

  for (std::size_t hi = 0; hi < cfg.h_list.size(); ++hi) {
    const double h = cfg.h_list[hi];
    const int n = static_cast<int>(std::llround(cfg.T / h));
    const std::uint64_t h_seed = derive_stream_seed(cfg.seed, static_cast<std::uint64_t>(hi));

    std::vector<RepOutcome> outcomes(cfg.replicates);
    std::atomic<long> next{0};
    auto worker = [&]() {
      while (true) {
        const long j = next.fetch_add(1);
        if (j >= cfg.replicates) break;
        outcomes[j] = run_replicate(cfg, model, n, h,
                                    derive_stream_seed(h_seed, static_cast<std::uint64_t>(j)));
      }
    };
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    // Deterministic reduction in replicate order.
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      McCell cell;
      cell.h = h;
      cell.estimator = cfg.estimators[e].label();
      VectorXd sum = VectorXd::Zero(model.p);
      long count = 0;
      for (long j = 0; j < cfg.replicates; ++j) {
        if (!outcomes[j].ok[e]) {
          ++cell.failure_count;
          continue;
        }
        sum += outcomes[j].theta[e];
        ++count;
      }
      cell.count = count;
      cell.mean = count > 0 ? (sum / count).eval() : VectorXd::Zero(model.p).eval();
      VectorXd ss = VectorXd::Zero(model.p);
      for (long j = 0; j < cfg.replicates; ++j) {
        if (!outcomes[j].ok[e]) continue;
        const VectorXd d = outcomes[j].theta[e] - cell.mean;
        ss += d.cwiseProduct(d);
      }
      cell.sd = count > 1 ? (ss / (count - 1)).cwiseSqrt().eval() : VectorXd::Zero(model.p).eval();
      cell.mc_standard_error =
          count > 0 ? (cell.sd / std::sqrt(static_cast<double>(count))).eval() : cell.sd;
      report.cells.push_back(std::move(cell));

      if (cfg.dump_reps) {
        for (long j = 0; j < cfg.replicates; ++j) {
          RepRecord rec;
          rec.rep = j;
          rec.h = h;
          rec.estimator = cfg.estimators[e].label();
          rec.theta_hat = outcomes[j].ok[e] ? outcomes[j].theta[e] : VectorXd::Zero(model.p).eval();
          rec.ok = outcomes[j].ok[e];
          rec.converged = outcomes[j].converged[e];
          report.reps.push_back(std::move(rec));
        }
      }
    }
  }
  return report;
}

std::string McReport::to_json() const {
  json j;
  j["config"] = json::parse(config.to_json());
  json cells_j = json::array();
  for (const auto& c : cells) {
    json cj;
    cj["h"] = c.h;
    cj["estimator"] = c.estimator;
    cj["mean"] = vec_to_json(c.mean);
    cj["sd"] = vec_to_json(c.sd);
    cj["mc_standard_error"] = vec_to_json(c.mc_standard_error);
    cj["count"] = c.count;
    cj["failure_count"] = c.failure_count;
    cells_j.push_back(cj);
  }
  j["cells"] = cells_j;
  return j.dump(2);
}

std::string McReport::reps_csv() const {
  std::ostringstream os;
  const int p = config.theta_star.size() > 0 ? static_cast<int>(config.theta_star.size()) : 1;
  os << "rep,h,estimator";
  for (int i = 1; i <= p; ++i) os << ",theta_hat_" << i;
  os << ",converged\n";
  os << std::setprecision(17);
  for (const auto& r : reps) {
    os << r.rep << "," << r.h << "," << r.estimator;
    for (int i = 0; i < p; ++i) os << "," << (i < r.theta_hat.size() ? r.theta_hat(i) : 0.0);
    os << "," << (r.converged ? 1 : 0) << "\n";
  }
  return os.str();
}

std::string summarize_text(const McReport& report) {
  // Rows: h. Column pair mean/s.d. per estimator.
  std::vector<std::string> labels;
  for (const auto& c : report.cells)
    if (std::find(labels.begin(), labels.end(), c.estimator) == labels.end())
      labels.push_back(c.estimator);
  std::vector<double> hs;
  for (const auto& c : report.cells)
    if (std::find(hs.begin(), hs.end(), c.h) == hs.end()) hs.push_back(c.h);

  std::size_t width = 14;
  for (const auto& l : labels) width = std::max(width, l.size() + 7);
  const int w = static_cast<int>(width);

  std::ostringstream os;
  os << std::left << std::setw(12) << "h";
  for (const auto& l : labels)
    os << std::setw(w) << (l + " mean") << std::setw(w) << (l + " s.d.");
  os << "\n";
  for (double h : hs) {
    std::ostringstream hs_os;
    hs_os << "1/" << std::llround(report.config.T / h);
    os << std::setw(12) << hs_os.str();
    for (const auto& l : labels) {
      for (const auto& c : report.cells) {
        if (c.h == h && c.estimator == l) {
          std::ostringstream ms, ss;
          ms << std::fixed << std::setprecision(5) << (c.mean.size() ? c.mean(0) : 0.0);
          ss << std::fixed << std::setprecision(5) << (c.sd.size() ? c.sd(0) : 0.0);
          os << std::setw(w) << ms.str() << std::setw(w) << ss.str();
        }
      }
    }
    os << "\n";
  }
  return os.str();
}

std::string summarize_csv(const McReport& report) {
  std::ostringstream os;
  os << "h,estimator,component,mean,sd,mc_standard_error,count,failure_count\n";
  os << std::setprecision(12);
  for (const auto& c : report.cells) {
    for (int i = 0; i < c.mean.size(); ++i) {
      os << c.h << "," << c.estimator << "," << (i + 1) << "," << c.mean(i) << "," << c.sd(i) << ","
         << c.mc_standard_error(i) << "," << c.count << "," << c.failure_count << "\n";
    }
  }
  return os.str();
}

}  // namespace qla
