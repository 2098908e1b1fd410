// semicr: simulate, weight, fit and contrast semi-competing-risks cohorts.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "semicr/csv_io.hpp"
#include "semicr/frailty_em.hpp"
#include "semicr/msm_usual.hpp"
#include "semicr/parallel.hpp"
#include "semicr/propensity.hpp"
#include "semicr/resample.hpp"
#include "semicr/risk.hpp"
#include "semicr/serialize.hpp"
#include "semicr/simgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace semicr;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNotConverged = 3;

// Reads `--config` files as JSON. Nested objects name subcommands, arrays
// become multi-valued options and booleans become flags.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        // Marks the subcommand as used.
        CLI::ConfigItem open;
        open.parents = next;
        open.name = "++";
        items.push_back(open);
        collect(value, next, items);
        CLI::ConfigItem close;
        close.parents = next;
        close.name = "--";
        items.push_back(close);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

// Every option of a subcommand with its resolved value.
json resolved_options(const CLI::App* app) {
  json out = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help") continue;
    std::vector<std::string> values = opt->reduced_results();
    // Optional-value options hold their bare-flag value in the default string.
    if (values.empty() && opt->get_expected_min() == 0 && !opt->get_default_str().empty()) {
      values.push_back("0");
    } else if (values.empty() && !opt->get_default_str().empty()) {
      std::string d = opt->get_default_str();
      if (d.size() >= 2 && d.front() == '[' && d.back() == ']') {
        std::stringstream ss(d.substr(1, d.size() - 2));
        std::string item;
        while (std::getline(ss, item, ',')) values.push_back(item);
      } else {
        values.push_back(d);
      }
    }
    if (values.empty()) {
      out[name] = nullptr;
    } else if (values.size() == 1) {
      out[name] = values.front();
    } else {
      out[name] = values;
    }
  }
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

void write_manifest(const fs::path& dir, const CLI::App* sub, int threads, const std::vector<std::string>& artifacts,
                    const json& extra = json::object()) {
  json m;
  m["tool"] = "semicr";
  m["subcommand"] = sub->get_name();
  m["threads"] = threads;
  m["options"] = resolved_options(sub);
  m["artifacts"] = artifacts;
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_json(dir / "manifest.json", m);
}

struct WeightArgs {
  std::string preset = "observational";
  std::optional<bool> stabilize;
  std::vector<double> trim;
  bool no_trim = false;

  WeightOptions resolve() const {
    WeightOptions o;
    if (preset == "observational") {
      o.stabilized = true;
      o.trim = std::make_pair(0.1, 10.0);
    }
    if (stabilize) o.stabilized = *stabilize;
    if (!trim.empty()) o.trim = std::make_pair(trim[0], trim[1]);
    if (no_trim) o.trim.reset();
    return o;
  }
};

void add_weight_options(CLI::App* app, WeightArgs& w) {
  app->add_option("--preset", w.preset, "Weighting preset (observational: stabilized, trimmed to [0.1, 10])")
      ->check(CLI::IsMember({"observational", "simulation"}))
      ->capture_default_str();
  app->add_option("--stabilize", w.stabilize, "Override stabilization (true/false)");
  app->add_option("--trim", w.trim, "Trim bounds lo hi")->expected(2);
  app->add_flag("--no-trim", w.no_trim, "Disable trimming");
}

struct EmArgs {
  int max_iter = 500;
  double loglik_tol = 1e-5;
  double beta_tol = 1e-3;
  double sigma2_tol = 1e-3;
  double sigma2_init = 1.0;
  int nodes = 20;
  int fallback_nodes = 50;
  std::string accelerate = "none";

  EmControls resolve(int threads) const {
    EmControls c;
    c.max_iter = max_iter;
    c.loglik_tol = loglik_tol;
    c.beta_tol = beta_tol;
    c.sigma2_tol = sigma2_tol;
    c.sigma2_init = sigma2_init;
    c.quadrature.nodes = nodes;
    c.quadrature.fallback_nodes = fallback_nodes;
    c.threads = threads;
    c.acceleration = accelerate == "squarem" ? EmAcceleration::Squarem : EmAcceleration::None;
    return c;
  }
};

void add_em_options(CLI::App* app, EmArgs& e) {
  app->add_option("--max-iter", e.max_iter, "Maximum EM iterations")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--loglik-tol", e.loglik_tol, "EM tolerance on the log-likelihood change")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--beta-tol", e.beta_tol, "EM tolerance on each beta change")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--sigma2-tol", e.sigma2_tol, "EM tolerance on the sigma2 change")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--sigma2-init", e.sigma2_init, "Initial frailty variance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--nodes", e.nodes, "Adaptive Gauss-Hermite nodes")->check(CLI::Range(1, 200))->capture_default_str();
  app->add_option("--fallback-nodes", e.fallback_nodes, "Non-adaptive fallback nodes")
      ->check(CLI::Range(1, 200))
      ->capture_default_str();
  app->add_option("--accelerate", e.accelerate, "EM acceleration (none, squarem); max-iter then counts cycles")
      ->check(CLI::IsMember({"none", "squarem"}))
      ->capture_default_str();
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      grid.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "grid entry '" + item + "' is not a number");
    }
  }
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "grid is empty");
  return grid;
}

// Usual fit wrapper reused by the fit and contrast subcommands.
struct FittedModel {
  std::string model;
  std::optional<UsualMarkovFit> usual;
  std::optional<GeneralMarkovFit> general;

  TransitionParameters parameters() const {
    return usual ? usual->parameters() : general->theta.transitions;
  }
  bool converged() const { return usual ? true : general->converged; }
};

FittedModel fit_model(const std::string& model, const Cohort& cohort, std::span<const double> weights,
                      const EmControls& em, const std::string& provenance) {
  FittedModel f;
  f.model = model;
  if (model == "usual") {
    f.usual = fit_usual_markov(cohort, weights, provenance);
  } else {
    const UsualMarkovFit start = fit_usual_markov(cohort, weights, provenance);
    f.general = fit_general_markov(cohort, weights, start, em);
  }
  return f;
}

std::string provenance_of(const WeightOptions& o) {
  std::string s = o.stabilized ? "logistic IPW, stabilized" : "logistic IPW";
  if (o.trim) s += ", trimmed to [" + format_double(o.trim->first) + ", " + format_double(o.trim->second) + "]";
  return s;
}

int report_convergence(bool converged, bool allow) {
  if (converged) return 0;
  std::cerr << "warning: EM did not converge within the iteration limit\n";
  return allow ? 0 : kExitNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marginal structural illness-death models for semi-competing risks"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file mirroring the command-line options");
  int threads = default_threads();
  app.add_option("--threads", threads, "Worker threads (default: SEMICR_THREADS or hardware concurrency)")
      ->check(CLI::PositiveNumber);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a cohort from the structural frailty model");
  sim_cmd->configurable();
  SimConfig sim;
  std::vector<double> sim_beta{sim.beta.begin(), sim.beta.end()};
  std::vector<double> sim_alpha{sim.alpha.begin(), sim.alpha.end()};
  std::vector<double> sim_censor{sim.censor_lo, sim.censor_hi};
  std::string sim_out = ".";
  sim_cmd->add_option("--n", sim.n, "Cohort size")->check(CLI::PositiveNumber)->capture_default_str();
  sim_cmd->add_option("--sigma2", sim.sigma2, "Frailty variance")->check(CLI::NonNegativeNumber)->capture_default_str();
  sim_cmd->add_option("--beta", sim_beta, "beta1 beta2 beta3")->expected(3)->capture_default_str();
  sim_cmd->add_option("--alpha", sim_alpha, "Treatment-model coefficients alpha0..alpha3")
      ->expected(4)
      ->capture_default_str();
  sim_cmd->add_option("--censor", sim_censor, "Uniform censoring window lo hi")->expected(2)->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  sim_cmd->add_option("--out", sim_out, "Output directory")->capture_default_str();

  // weights
  auto* w_cmd = app.add_subcommand("weights", "Fit the propensity model and write IP weights and balance");
  w_cmd->configurable();
  std::string w_input, w_out = ".";
  WeightArgs w_args;
  w_cmd->add_option("--input", w_input, "Cohort CSV")->required();
  w_cmd->add_option("--out", w_out, "Output directory")->capture_default_str();
  add_weight_options(w_cmd, w_args);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit the usual or general Markov structural model");
  fit_cmd->configurable();
  std::string fit_input, fit_out = ".", fit_model_name = "usual";
  WeightArgs fit_w;
  EmArgs fit_em;
  bool fit_allow = false;
  fit_cmd->add_option("--input", fit_input, "Cohort CSV")->required();
  fit_cmd->add_option("--out", fit_out, "Output directory")->capture_default_str();
  fit_cmd->add_option("--model", fit_model_name, "usual or general")
      ->check(CLI::IsMember({"usual", "general"}))
      ->capture_default_str();
  fit_cmd->add_flag("--allow-nonconverged", fit_allow, "Exit 0 even when EM hits the iteration limit");
  add_weight_options(fit_cmd, fit_w);
  add_em_options(fit_cmd, fit_em);

  // contrast
  auto* c_cmd = app.add_subcommand("contrast", "Risk curves, differences and ratios with optional intervals");
  c_cmd->configurable();
  std::string c_input, c_out = ".", c_model = "usual", c_fit, c_kind = "f1", c_grid, c_ci = "normal";
  std::optional<double> c_t1, c_t;
  double c_b = 0.0;
  std::size_t c_boot = 0, c_bayes = 0;
  std::uint64_t c_seed = 1;
  bool c_ird = false, c_no_refit = false, c_allow = false;
  WeightArgs c_w;
  EmArgs c_em;
  c_cmd->add_option("--input", c_input, "Cohort CSV")->required();
  c_cmd->add_option("--out", c_out, "Output directory")->capture_default_str();
  c_cmd->add_option("--model", c_model, "usual or general")
      ->check(CLI::IsMember({"usual", "general"}))
      ->capture_default_str();
  c_cmd->add_option("--fit", c_fit, "Existing fit.json (otherwise the model is fitted to --input)");
  c_cmd->add_option("--kind", c_kind, "f1, f2 or f12")->check(CLI::IsMember({"f1", "f2", "f12"}))->capture_default_str();
  c_cmd->add_option("--t1", c_t1, "Non-terminal event time for f12 (default: median observed x1)")
      ->check(CLI::NonNegativeNumber);
  c_cmd->add_option("--grid", c_grid, "Comma-separated evaluation times (default: observed event times)");
  c_cmd->add_option("--b", c_b, "Random-effect value for conditional curves (general model)")->capture_default_str();
  c_cmd->add_option("--boot", c_boot, "Standard bootstrap replicates for RD intervals (bare flag: 500)")
      ->expected(0, 1)
      ->default_str("500");
  c_cmd->add_option("--ci", c_ci, "Interval type for --boot")
      ->check(CLI::IsMember({"normal", "percentile"}))
      ->capture_default_str();
  c_cmd->add_flag("--ird", c_ird, "Individual risk contrasts at --t (general model)");
  c_cmd->add_option("--t", c_t, "Time for individual contrasts")->check(CLI::NonNegativeNumber);
  c_cmd->add_option("--bayes-boot", c_bayes, "Bayesian bootstrap replicates for individual intervals (bare flag: 500)")
      ->expected(0, 1)
      ->default_str("500");
  c_cmd->add_option("--seed", c_seed, "Bootstrap seed")->capture_default_str();
  c_cmd->add_flag("--no-refit-propensity", c_no_refit, "Keep the point-estimate weights inside replicates");
  c_cmd->add_flag("--allow-nonconverged", c_allow, "Exit 0 even when EM hits the iteration limit");
  add_weight_options(c_cmd, c_w);
  add_em_options(c_cmd, c_em);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sim_cmd) {
      sim.beta = {sim_beta[0], sim_beta[1], sim_beta[2]};
      sim.alpha = {sim_alpha[0], sim_alpha[1], sim_alpha[2], sim_alpha[3]};
      sim.censor_lo = sim_censor[0];
      sim.censor_hi = sim_censor[1];
      validate(sim);
      const fs::path dir(sim_out);
      fs::create_directories(dir);
      const SimulatedCohort data = generate(sim, threads);
      {
        auto out = open_output(dir / "cohort.csv");
        write_cohort_csv(out, data.cohort);
      }
      {
        auto out = open_output(dir / "truth.csv");
        write_truth_csv(out, data);
      }
      write_manifest(dir, sim_cmd, threads, {"cohort.csv", "truth.csv"});
      return 0;
    }

    if (*w_cmd) {
      const Cohort cohort = read_cohort_csv(w_input);
      const fs::path dir(w_out);
      fs::create_directories(dir);
      const WeightOptions wo = w_args.resolve();
      const WeightResult w = estimate_weights(cohort, wo);
      {
        auto out = open_output(dir / "weights.csv");
        write_weights_csv(out, cohort, w.ip, w.analysis);
      }
      {
        auto out = open_output(dir / "smd.csv");
        write_smd_csv(out, smd(cohort, w.analysis));
      }
      write_json(dir / "propensity.json", to_json(w.model));
      write_manifest(dir, w_cmd, threads, {"weights.csv", "smd.csv", "propensity.json"});
      return 0;
    }

    if (*fit_cmd) {
      const Cohort cohort = read_cohort_csv(fit_input);
      const fs::path dir(fit_out);
      fs::create_directories(dir);
      const WeightOptions wo = fit_w.resolve();
      const WeightResult w = estimate_weights(cohort, wo);
      const FittedModel f = fit_model(fit_model_name, cohort, w.analysis, fit_em.resolve(threads), provenance_of(wo));
      std::vector<std::string> artifacts{"fit.json", "weights.csv", "smd.csv"};
      json fit_json = f.usual ? to_json(*f.usual) : to_json(*f.general);
      fit_json["propensity"] = to_json(w.model);
      fit_json["weights_provenance"] = provenance_of(wo);
      write_json(dir / "fit.json", fit_json);
      {
        auto out = open_output(dir / "weights.csv");
        write_weights_csv(out, cohort, w.ip, w.analysis);
      }
      {
        auto out = open_output(dir / "smd.csv");
        write_smd_csv(out, smd(cohort, w.analysis));
      }
      if (f.general) {
        {
          auto out = open_output(dir / "trace.csv");
          write_trace_csv(out, f.general->trace);
        }
        {
          auto out = open_output(dir / "posterior.csv");
          write_posterior_csv(out, cohort, f.general->posterior);
        }
        artifacts.insert(artifacts.end(), {"trace.csv", "posterior.csv"});
      }
      write_manifest(dir, fit_cmd, threads, artifacts, {{"converged", f.converged()}});
      return report_convergence(f.converged(), fit_allow);
    }

    if (*c_cmd) {
      if (c_ird && c_model != "general" && c_fit.empty()) {
        throw Error(ErrorCode::InvalidArgument, "individual contrasts (--ird) require --model general (a frailty model)");
      }
      const Cohort cohort = read_cohort_csv(c_input);
      const fs::path dir(c_out);
      fs::create_directories(dir);
      const WeightOptions wo = c_w.resolve();
      const EmControls em = c_em.resolve(1);
      const RiskKind kind = parse_risk_kind(c_kind);

      std::string model = c_model;
      TransitionParameters params;
      std::optional<GeneralMarkovFit> general;
      bool converged = true;
      if (!c_fit.empty()) {
        std::ifstream in(c_fit);
        if (!in) throw Error(ErrorCode::IoError, "cannot open fit artifact '" + c_fit + "'");
        json j;
        try {
          in >> j;
        } catch (const json::exception& e) {
          throw Error(ErrorCode::SchemaError, std::string("fit artifact is not JSON: ") + e.what());
        }
        const LoadedFit loaded = load_fit(j);
        model = loaded.model;
        params = loaded.theta.transitions;
        converged = loaded.converged;
        if (model == "general") {
          GeneralMarkovFit g;
          g.theta = loaded.theta;
          g.converged = loaded.converged;
          general = std::move(g);
        }
      } else {
        const WeightResult w = estimate_weights(cohort, wo);
        FittedModel f = fit_model(model, cohort, w.analysis, c_em.resolve(threads), provenance_of(wo));
        params = f.parameters();
        converged = f.converged();
        if (f.general) general = std::move(f.general);
      }
      if (c_ird && model != "general") {
        throw Error(ErrorCode::InvalidArgument, "individual contrasts (--ird) require a general (frailty) model fit");
      }
      if (model == "usual" && c_b != 0.0) {
        throw Error(ErrorCode::InvalidArgument, "--b applies to the general model only");
      }

      const double t1 = kind == RiskKind::F12 ? (c_t1 ? *c_t1 : default_t1(cohort)) : 0.0;
      const std::vector<double> grid = c_grid.empty() ? default_grid(cohort, kind, t1) : parse_grid(c_grid);
      ContrastSeries series = make_contrast(make_risk_curve(params, kind, c_b, grid, t1));

      std::vector<std::string> artifacts{"contrast.csv"};
      const WeightFunction weight_fn = [wo](const Cohort& c) { return estimate_weights(c, wo).analysis; };

      if (c_boot > 0) {
        BootstrapPlan plan;
        plan.replicates = c_boot;
        plan.seed = c_seed;
        plan.refit_propensity = !c_no_refit;
        plan.threads = threads;
        const Estimator est = [&](const Cohort& c, std::span<const double> w) {
          const FittedModel f = fit_model(model, c, w, em, {});
          if (!f.converged()) throw Error(ErrorCode::NotConverged, "EM did not converge");
          return make_contrast(make_risk_curve(f.parameters(), kind, c_b, grid, t1)).rd;
        };
        const BootstrapResult boot = bootstrap(cohort, plan, weight_fn, est);
        series.lo = c_ci == "normal" ? boot.normal_lo : boot.percentile_lo;
        series.hi = c_ci == "normal" ? boot.normal_hi : boot.percentile_hi;
        std::vector<std::string> names;
        for (double t : grid) names.push_back("rd@" + format_double(t));
        auto out = open_output(dir / "bootstrap_replicates.csv");
        write_replicates_csv(out, boot, names);
        artifacts.push_back("bootstrap_replicates.csv");
        if (boot.failed > 0) std::cerr << "note: " << boot.failed << " bootstrap replicates failed and were excluded\n";
      }
      {
        auto out = open_output(dir / "contrast.csv");
        const ContrastSeries all[] = {series};
        write_contrast_csv(out, all);
      }

      if (c_ird) {
        if (!c_t) throw Error(ErrorCode::InvalidArgument, "--ird needs --t");
        const auto b_hat = predict_b(*general, cohort, em.quadrature);
        const auto ind = individual_contrasts(*general, b_hat, *c_t, kind, t1);
        std::optional<BootstrapResult> boot;
        if (c_bayes > 0) {
          BootstrapPlan plan;
          plan.replicates = c_bayes;
          plan.seed = c_seed;
          plan.mode = BootstrapMode::Bayesian;
          plan.refit_propensity = !c_no_refit;
          plan.threads = threads;
          const Estimator est = [&](const Cohort& c, std::span<const double> w) {
            const GeneralMarkovFit g = fit_general_markov(c, w, em);
            if (!g.converged) throw Error(ErrorCode::NotConverged, "EM did not converge");
            const auto b = predict_b(g, c, em.quadrature);
            const auto rows = individual_contrasts(g, b, *c_t, kind, t1);
            std::vector<double> v;
            v.reserve(2 * rows.size());
            for (const auto& r : rows) v.push_back(r.ird);
            for (const auto& r : rows) v.push_back(r.irr ? *r.irr : std::nan(""));
            return v;
          };
          boot = bootstrap(cohort, plan, weight_fn, est);
          if (boot->failed > 0) std::cerr << "note: " << boot->failed << " Bayesian replicates failed and were excluded\n";
        }
        auto out = open_output(dir / "individual.csv");
        out << "id,b_hat,ird,irr,ird_lo,ird_hi,irr_lo,irr_hi\n";
        const std::size_t n = cohort.size();
        for (std::size_t i = 0; i < n; ++i) {
          const auto& r = ind[i];
          // Prediction intervals: point estimate +/- 1.96 Bayesian-bootstrap SE.
          auto pi = [&](std::size_t k, double point, bool lo) -> std::string {
            if (!boot || !std::isfinite(boot->se[k])) return "NA";
            return format_double(point + (lo ? -1.96 : 1.96) * boot->se[k]);
          };
          const double irr = r.irr ? *r.irr : std::nan("");
          out << cohort[i].id << ',' << format_double(r.b) << ',' << format_double(r.ird) << ','
              << (r.irr ? format_double(*r.irr) : std::string("NA")) << ',' << pi(i, r.ird, true) << ','
              << pi(i, r.ird, false) << ',' << (r.irr ? pi(n + i, irr, true) : "NA") << ','
              << (r.irr ? pi(n + i, irr, false) : "NA") << '\n';
        }
        artifacts.push_back("individual.csv");
      }

      json extra = {{"model", model}, {"converged", converged}, {"grid_size", grid.size()}};
      if (kind == RiskKind::F12) extra["t1"] = t1;
      write_manifest(dir, c_cmd, threads, artifacts, extra);
      return report_convergence(converged, c_allow);
    }
  } catch (const CohortError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& issue : e.issues()) {
      std::cerr << "  " << to_string(issue.code) << " id=" << issue.id << ": " << issue.detail << '\n';
    }
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    const bool usage = e.code() == ErrorCode::SchemaError || e.code() == ErrorCode::InvalidArgument ||
                       e.code() == ErrorCode::IoError || e.code() == ErrorCode::NegativeInput;
    return usage ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
