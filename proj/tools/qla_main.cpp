#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "qla/csv.hpp"
#include "qla/estimate.hpp"
#include "qla/mcstudy.hpp"
#include "qla/nondeg.hpp"
#include "qla/rng.hpp"
#include "qla/simulate.hpp"

using nlohmann::json;

namespace {

qla::VectorXd parse_vector(const std::vector<double>& v) {
  qla::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
  return out;
}

json vec_json(const qla::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  std::vector<double> out;
  if (count == 1) return {lo};
  for (int i = 0; i < count; ++i)
    out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
  return out;
}

int run_simulate(const std::string& model_name, int n, double T, const std::vector<double>& theta,
                 std::uint64_t seed, const std::string& scheme_name, int substeps, long reps,
                 const std::string& out) {
  const qla::ModelSpec model = qla::make_model(model_name);
  const qla::Scheme scheme =
      scheme_name == "euler" ? qla::Scheme::euler : qla::Scheme::milstein;
  std::ostringstream os;
  for (long j = 0; j < reps; ++j) {
    const auto path = qla::simulate_path(model, n, T, parse_vector(theta),
                                         reps > 1 ? qla::derive_stream_seed(seed, j) : seed, scheme,
                                         substeps);
    qla::write_path_csv(os, path, reps > 1 ? j : -1, j == 0);
  }
  if (out.empty())
    std::cout << os.str();
  else
    qla::atomic_write(out, os.str());
  return 0;
}

int run_estimate(const std::string& model_name, const std::string& data, bool do_simulate, int n,
                 double T, const std::vector<double>& theta_star, std::uint64_t seed, int substeps,
                 const std::string& estimator, const std::vector<double>& init, bool no_multistart,
                 const std::string& out, const std::string& profile, int profile_points,
                 bool strict) {
  const qla::ModelSpec model = qla::make_model(model_name);
  qla::Observations obs;
  if (do_simulate) {
    if (theta_star.empty()) throw qla::ConfigError("--simulate requires --theta-star");
    const auto path = qla::simulate_path(model, n, T, parse_vector(theta_star), seed,
                                         qla::Scheme::milstein, substeps);
    obs = qla::Observations::from_path(path);
  } else if (!data.empty()) {
    obs = qla::ingest_csv(data);
  } else {
    throw qla::ConfigError("estimate needs --data or --simulate");
  }

  qla::EstimationResult res;
  if (estimator == "bayes") {
    res = qla::bayes(obs, model, qla::Prior::uniform());
  } else {
    qla::QmleOpts opts;
    opts.multistart = !no_multistart;
    qla::VectorXd init_v = init.empty() ? (0.5 * (model.theta_lo + model.theta_hi)).eval()
                                        : parse_vector(init);
    if (estimator == "qmle-bayes-init") {
      res = qla::qmle_with_bayes_init(obs, model, qla::Prior::uniform(), opts);
    } else {
      res = qla::qmle(obs, model, init_v, opts);
    }
  }
  if (!theta_star.empty()) qla::standardize(res, obs, model, parse_vector(theta_star));

  if (!profile.empty()) {
    // theta-grid profile of H_n, Y_n, Y for plotting (p = 1)
    if (model.p != 1) throw qla::ConfigError("--profile requires p = 1");
    std::ostringstream os;
    os << "theta,h_n,y_n,y_limit\n";
    os << std::setprecision(12);
    const qla::VectorXd ts = theta_star.empty() ? res.theta_hat : parse_vector(theta_star);
    for (int i = 0; i < profile_points; ++i) {
      qla::VectorXd th(1);
      th(0) = model.theta_lo(0) +
              i * (model.theta_hi(0) - model.theta_lo(0)) / (profile_points - 1);
      os << th(0) << "," << qla::h_n(obs, model, th) << "," << qla::y_field(obs, model, ts, th)
         << "," << qla::y_limit(obs.x, model, ts, th) << "\n";
    }
    qla::atomic_write(profile, os.str());
  }

  json j;
  j["model"] = model_name;
  j["estimator"] = estimator;
  j["theta_hat"] = vec_json(res.theta_hat);
  if (res.objective) j["objective"] = *res.objective;
  j["converged"] = res.converged;
  j["evals"] = res.evals;
  json gn = json::array();
  for (int i = 0; i < res.gamma_n.rows(); ++i) gn.push_back(vec_json(res.gamma_n.row(i)));
  j["gamma_n"] = gn;
  if (res.std_error) j["std_error"] = vec_json(*res.std_error);
  if (res.standardized) j["standardized"] = vec_json(*res.standardized);

  std::string text;
  if (!out.empty() && out.size() > 4 && out.substr(out.size() - 4) == ".csv") {
    std::ostringstream os;
    os << "component,theta_hat,std_error,standardized\n" << std::setprecision(17);
    for (int i = 0; i < res.theta_hat.size(); ++i) {
      os << (i + 1) << "," << res.theta_hat(i) << ","
         << (res.std_error ? std::to_string((*res.std_error)(i)) : "") << ","
         << (res.standardized ? std::to_string((*res.standardized)(i)) : "") << "\n";
    }
    text = os.str();
  } else {
    text = j.dump(2) + "\n";
  }
  if (out.empty())
    std::cout << text;
  else
    qla::atomic_write(out, text);

  if (strict && !res.converged) return 1;
  return 0;
}

int run_mcstudy(const std::string& config_path, const std::string& out_dir) {
  std::ifstream in(config_path);
  if (!in) throw qla::ConfigError("cannot open config: " + config_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const qla::StudyConfig cfg = qla::StudyConfig::from_json(buf.str());
  const qla::McReport report = qla::run_study(cfg);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  qla::atomic_write((fs::path(out_dir) / "report.json").string(), report.to_json());
  qla::atomic_write((fs::path(out_dir) / "table.csv").string(), qla::summarize_csv(report));
  qla::atomic_write((fs::path(out_dir) / "table.txt").string(), qla::summarize_text(report));
  if (cfg.dump_reps)
    qla::atomic_write((fs::path(out_dir) / "reps.csv").string(), report.reps_csv());
  std::cout << qla::summarize_text(report);
  return 0;
}

int run_nondeg(const std::string& check, const std::string& model_name,
               const std::vector<double>& theta_star, int n, double T, double r_min, double r_max,
               int r_count, long replicates, std::uint64_t seed, int u_grid, int grid_points,
               const std::vector<double>& alphas, double delta, double eps,
               const std::vector<double>& n_list, long samples, const std::string& support_example,
               const std::string& out) {
  json j;
  j["check"] = check;
  const auto r_grid = log_spaced(r_min, r_max, r_count);

  if (check == "chi0") {
    const qla::ModelSpec model = qla::make_model(model_name);
    const auto path = qla::simulate_path(model, n, T, parse_vector(theta_star), seed,
                                         qla::Scheme::milstein, 10);
    qla::Chi0Opts opts;
    opts.grid_points = grid_points;
    const auto res = qla::chi0(path.x, model, parse_vector(theta_star), opts);
    j["chi0"] = res.value;
    j["grid_min"] = res.grid_min;
    j["quad_form_min"] = res.quad_form_min;
    j["grid_too_coarse"] = res.grid_too_coarse;
  } else if (check == "h2-tail") {
    const qla::ModelSpec model = qla::make_model(model_name);
    const auto rep = qla::h2_tail_curve(model, parse_vector(theta_star), n, T, r_grid, replicates,
                                        seed);
    j["r_grid"] = rep.r_grid;
    j["tail_prob"] = rep.tail_prob;
    j["tail_prob_isotonic"] = rep.tail_prob_isotonic;
    json ci = json::array();
    for (const auto& w : rep.tail_ci) ci.push_back({{"lo", w.lo}, {"hi", w.hi}});
    j["tail_ci"] = ci;
    j["fitted_exponent"] = rep.fitted_exponent;
    j["exponent_fitted"] = rep.exponent_fitted;
    j["chi0_samples"] = rep.chi0_samples;
  } else if (check == "pldi-tail") {
    const qla::ModelSpec model = qla::make_model(model_name);
    const auto rep = qla::pldi_tail(model, parse_vector(theta_star), n, T, r_grid, u_grid,
                                    replicates, seed);
    j["r_grid"] = rep.r_grid;
    j["frequency"] = rep.frequency;
    json er = json::array();
    for (bool b : rep.empty_region) er.push_back(b);
    j["empty_region"] = er;
  } else if (check == "separation") {
    const int J = static_cast<int>(alphas.size()) - 1;
    const auto rep = qla::separation_check(J, alphas, delta, eps, n_list, samples, seed);
    j["n_list"] = rep.n_list;
    j["min_value"] = rep.min_value;
    j["implied_L"] = rep.implied_L;
  } else if (check == "support-bound") {
    qla::SupportingFunctionSpec spec;
    qla::ModelSpec model = qla::make_model(support_example.empty() ? model_name : support_example);
    if (model.name == "power") {
      spec.f = [](double x, double) { return std::log(1.0 + x * x); };
      spec.rho = 2.0;
      spec.x_lo = -1.0;
      spec.x_hi = 1.0;
    } else if (model.name == "sin-sin") {
      spec.f = [](double x, double th) {
        if (std::abs(th) < 1e-8) return std::sin(x);  // continuous extension at theta = 0
        return (std::sin(th) * std::sin(x) - th * th * std::sin(x) * std::sin(x)) / th;
      };
      spec.rho = 2.0;
      spec.scale = 0.05;
      spec.x_lo = -0.5;
      spec.x_hi = 0.5;
    } else {
      throw qla::ConfigError("support-bound: built-in (f, rho) exists for power and sin-sin only");
    }
    qla::VectorXd ts = parse_vector(theta_star);
    if (ts.size() == 0) ts = 0.5 * (model.theta_lo + model.theta_hi);  // box midpoint default
    const auto rep = qla::supporting_bound_check(spec, model, ts, 201, 201);
    j["min_slack"] = rep.min_slack;
    j["argmin_x"] = rep.argmin_x;
    j["argmin_theta"] = rep.argmin_theta;
    j["violations"] = rep.violations;
  } else {
    throw qla::ConfigError("unknown --check: " + check);
  }

  const std::string text = j.dump(2) + "\n";
  if (out.empty())
    std::cout << text;
  else
    qla::atomic_write(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qla: quasi-likelihood analysis for discretely sampled diffusions"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate sample paths to CSV");
  std::string model_name = "exp-sin2", scheme = "milstein", out, data, estimator = "qmle";
  std::vector<double> theta_star, init;
  int n = 500, substeps = 10, profile_points = 201;
  double T = 1.0;
  std::uint64_t seed = 1;
  long reps = 1;
  sim->add_option("--model", model_name, "model name")->required();
  sim->add_option("--n", n, "observation count");
  sim->add_option("--T", T, "horizon");
  sim->add_option("--theta-star", theta_star, "true parameter")->required();
  sim->add_option("--seed", seed, "base seed");
  sim->add_option("--scheme", scheme, "euler|milstein");
  sim->add_option("--substeps", substeps, "fine-grid factor");
  sim->add_option("--reps", reps, "number of paths (long format when > 1)");
  sim->add_option("--out", out, "output CSV path (stdout when omitted)");

  // estimate
  auto* est = app.add_subcommand("estimate", "run one estimator on data");
  bool do_simulate = false, no_multistart = false, strict = false;
  std::string profile;
  est->add_option("--model", model_name, "model name")->required();
  est->add_option("--data", data, "input CSV");
  est->add_flag("--simulate", do_simulate, "simulate the data instead of reading it");
  est->add_option("--n", n, "observation count (with --simulate)");
  est->add_option("--T", T, "horizon");
  est->add_option("--theta-star", theta_star, "true parameter (enables standardization)");
  est->add_option("--seed", seed, "seed (with --simulate)");
  est->add_option("--substeps", substeps, "fine-grid factor (with --simulate)");
  est->add_option("--estimator", estimator, "qmle|bayes|qmle-bayes-init");
  est->add_option("--init", init, "qmle initial value");
  est->add_flag("--no-multistart", no_multistart, "disable the qmle grid multistart");
  est->add_option("--out", out, "output path (.json or .csv; stdout when omitted)");
  est->add_option("--profile", profile, "write a theta-grid CSV of H_n, Y_n, Y");
  est->add_option("--profile-points", profile_points, "profile grid size");
  est->add_flag("--strict", strict, "exit 1 when the optimizer did not converge");

  // mc-study
  auto* mc = app.add_subcommand("mc-study", "run a Monte Carlo study from a JSON config");
  std::string config_path, out_dir = ".";
  mc->add_option("--config", config_path, "study config (JSON)")->required();
  mc->add_option("--out-dir", out_dir, "output directory");

  // nondeg
  auto* nd = app.add_subcommand("nondeg", "nondegeneracy diagnostics");
  std::string check, support_example;
  double r_min = 1.0, r_max = 100.0, delta = 0.5, eps = 0.5;
  int r_count = 10, u_grid = 201, grid_points = 513;
  long replicates = 200, samples = 2000;
  std::vector<double> alphas{1.0, 2.0}, n_list{1e3, 1e6};
  nd->add_option("--check", check, "chi0|h2-tail|pldi-tail|separation|support-bound")->required();
  nd->add_option("--model", model_name, "model name");
  nd->add_option("--theta-star", theta_star, "true parameter");
  nd->add_option("--n", n, "observation count");
  nd->add_option("--T", T, "horizon");
  nd->add_option("--r-min", r_min, "smallest r");
  nd->add_option("--r-max", r_max, "largest r");
  nd->add_option("--r-count", r_count, "r grid size (log-spaced)");
  nd->add_option("--replicates", replicates, "Monte Carlo replicates");
  nd->add_option("--seed", seed, "base seed");
  nd->add_option("--u-grid", u_grid, "u grid size (pldi-tail)");
  nd->add_option("--grid-points", grid_points, "theta grid size (chi0)");
  nd->add_option("--alphas", alphas, "separation exponents");
  nd->add_option("--delta", delta, "separation coefficient shell");
  nd->add_option("--eps", eps, "separation u-band");
  nd->add_option("--n-list", n_list, "separation n values");
  nd->add_option("--samples", samples, "separation coefficient samples");
  nd->add_option("--support-example", support_example, "power|sin-sin");
  nd->add_option("--out", out, "output JSON path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed())
      return run_simulate(model_name, n, T, theta_star, seed, scheme, substeps, reps, out);
    if (est->parsed())
      return run_estimate(model_name, data, do_simulate, n, T, theta_star, seed, substeps,
                          estimator, init, no_multistart, out, profile, profile_points, strict);
    if (mc->parsed()) return run_mcstudy(config_path, out_dir);
    if (nd->parsed())
      return run_nondeg(check, model_name, theta_star, n, T, r_min, r_max, r_count, replicates,
                        seed, u_grid, grid_points, alphas, delta, eps, n_list, samples,
                        support_example, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
