// Command-line entry point: dataset generation, model fitting, causal effect
// estimation, evaluation harnesses, and the power estimator.
//
// Commands: generate | fit | estimate | pipeline | evaluate | power.
// Exit codes: 0 success, 2 validation/parse errors, 3 numerical failures.

#include "ivy/baselines.hpp"
#include "ivy/core.hpp"
#include "ivy/datagen.hpp"
#include "ivy/effect.hpp"
#include "ivy/evalharness.hpp"
#include "ivy/io.hpp"
#include "ivy/paramlearn.hpp"
#include "ivy/posterior.hpp"
#include "ivy/structlearn.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace ivy;

struct CliState {
  RunConfig cfg;
  bool prior_z_given = false;
};

// Orientation runs at ingestion so every downstream step sees candidates
// positively correlated with the risk factor.
Dataset load_oriented(const RunConfig& cfg) {
  if (cfg.input.empty())
    throw Error(ErrorCode::kInvalidArgument, "no input dataset; pass --input or --preset");
  Dataset data = read_dataset_csv(cfg.input, cfg.zero_one);
  validate(data);
  return orient_candidates(data).data;
}

FittedModel fit_model(const Dataset& data, const RunConfig& cfg) {
  FittedModel fitted;
  Diagnostics diags;

  if (cfg.lambda && cfg.gamma && cfg.t1 && cfg.t2) {
    fitted.hyper = {*cfg.lambda, *cfg.gamma, *cfg.t1, *cfg.t2};
    fitted.selection_qualified = true;
  } else {
    const auto lambdas =
        cfg.lambda_grid.empty() ? default_lambda_grid(data.n(), data.m()) : cfg.lambda_grid;
    const auto gammas = cfg.gamma_grid.empty() ? default_gamma_grid() : cfg.gamma_grid;
    const ModelSelection sel = select_model(data.W, lambdas, gammas, cfg.xi, &diags);
    fitted.hyper = sel.selected;
    fitted.selection_qualified = sel.qualified;
  }

  DecompositionResult decomposition;
  fitted.graph = structure_learn(data.W, fitted.hyper, &diags,
                                 cfg.dump_prefix.empty() ? nullptr : &decomposition);
  if (!cfg.dump_prefix.empty()) {
    write_matrix_csv(cfg.dump_prefix + ".S.csv", decomposition.S);
    write_matrix_csv(cfg.dump_prefix + ".L.csv", decomposition.L);
    write_matrix_csv(cfg.dump_prefix + ".ell.csv", decomposition.ell);
  }

  ParamLearnOptions plopts;
  plopts.prior_z = cfg.prior_z;
  plopts.unbiased_moment = cfg.unbiased_moment;
  fitted.model = param_learn(data.W, fitted.graph, plopts, &diags);
  fit_clique_params(fitted.model, fitted.graph, MomentMatchOptions{}, &diags);
  fitted.diagnostics = diags;
  fitted.model.diagnostics = diags;
  return fitted;
}

// Ivy summarizer that re-learns structure on each training half; the
// sensitivity-analysis path behind --reuse-structure=false.
Summarizer relearn_summarizer(const RunConfig& cfg) {
  return [cfg](const Dataset& d, const std::vector<int>& train, const std::vector<int>& eval,
               Diagnostics& local) {
    BinMatrix sub(static_cast<Eigen::Index>(train.size()), d.m());
    for (std::size_t r = 0; r < train.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = d.W.row(train[r]);
    const auto lambdas =
        cfg.lambda_grid.empty() ? default_lambda_grid(sub.rows(), sub.cols()) : cfg.lambda_grid;
    const auto gammas = cfg.gamma_grid.empty() ? default_gamma_grid() : cfg.gamma_grid;
    const ModelSelection sel = select_model(sub, lambdas, gammas, cfg.xi, &local);
    const CandidateGraph graph = structure_learn(sub, sel.selected, &local);
    ParamLearnOptions plopts;
    plopts.prior_z = cfg.prior_z;
    plopts.unbiased_moment = cfg.unbiased_moment;
    Model model = param_learn_rows(d.W, train, graph, plopts, &local);
    bool has_clique = false;
    for (const auto& c : graph.cliques)
      if (c.size() > 1) has_clique = true;
    if (has_clique) fit_clique_params(model, graph, MomentMatchOptions{}, &local);
    return posteriors(d.W, eval, model);
  };
}

std::vector<EffectReport> run_methods(const Dataset& data, const FittedModel& fitted,
                                      const CliState& state) {
  const RunConfig& cfg = state.cfg;
  EstimateOptions opts;
  opts.replicates = cfg.replicates;
  opts.seed = cfg.seed;
  opts.prior_z = state.prior_z_given ? cfg.prior_z : fitted.model.prior_z;
  opts.unbiased_moment = cfg.unbiased_moment;

  std::vector<EffectReport> reports;
  for (const auto& method : cfg.methods) {
    if (method == "ivy") {
      if (cfg.reuse_structure)
        reports.push_back(estimate_effect(data, fitted.graph, opts));
      else
        reports.push_back(estimate_with_summary(data, relearn_summarizer(cfg), "ivy", opts));
    } else if (method == "uas") {
      reports.push_back(uas_effect(data, opts));
    } else if (method == "was") {
      reports.push_back(was_effect(data, opts));
    } else if (method == "association") {
      reports.push_back(association(data, opts));
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown method '" + method + "'");
    }
  }
  return reports;
}

SyntheticSpec resolve_spec(const RunConfig& cfg) {
  if (!cfg.spec_path.empty()) return read_spec_json(cfg.spec_path);
  return preset(cfg.preset_name);
}

int cmd_generate(const CliState& state) {
  const RunConfig& cfg = state.cfg;
  const SyntheticSpec spec = resolve_spec(cfg);
  const SampleResult sr = sample(spec, cfg.n, cfg.seed);
  const std::string out = cfg.out.empty() ? "dataset.csv" : cfg.out;
  write_dataset_csv(out, sr.data, cfg.zero_one);
  write_truth_csv(cfg.truth_out.empty() ? out + ".truth.csv" : cfg.truth_out, sr);
  std::cout << "wrote " << sr.data.n() << " samples x " << sr.data.m() << " candidates to "
            << out << "\n";
  return 0;
}

int cmd_fit(const CliState& state) {
  const RunConfig& cfg = state.cfg;
  const Dataset data = load_oriented(cfg);
  const FittedModel fitted = fit_model(data, cfg);
  const std::string out = cfg.out.empty() ? "model.json" : cfg.out;
  write_model_json(out, fitted);
  std::cout << "valid set size " << fitted.graph.valid.size() << ", "
            << fitted.graph.edges.size() << " edges, written to " << out << "\n";
  for (const auto& d : fitted.diagnostics) std::cerr << "warning: " << d << "\n";
  for (const auto& d : fitted.diagnostics)
    if (d.rfind("NotConverged", 0) == 0) return 3;
  return 0;
}

int cmd_estimate(const CliState& state) {
  const RunConfig& cfg = state.cfg;
  const Dataset data = load_oriented(cfg);
  if (cfg.model_path.empty())
    throw Error(ErrorCode::kInvalidArgument, "estimate requires --model");
  const FittedModel fitted = read_model_json(cfg.model_path);
  const auto reports = run_methods(data, fitted, state);
  const std::string out = cfg.out.empty() ? "report.json" : cfg.out;
  write_reports_json(out, reports, fitted.diagnostics);
  for (const auto& r : reports)
    std::cout << r.method << ": median " << r.median << " ci [" << r.ci_low << ", " << r.ci_high
              << "]\n";
  return 0;
}

int cmd_pipeline(const CliState& state) {
  const RunConfig& cfg = state.cfg;
  Dataset data;
  if (!cfg.input.empty()) {
    data = load_oriented(cfg);
  } else {
    const SyntheticSpec spec = resolve_spec(cfg);
    data = orient_candidates(sample(spec, cfg.n, cfg.seed).data).data;
  }
  const FittedModel fitted = fit_model(data, cfg);
  const auto reports = run_methods(data, fitted, state);
  const std::string out = cfg.out.empty() ? "report.json" : cfg.out;
  write_reports_json(out, reports, fitted.diagnostics);
  for (const auto& r : reports)
    std::cout << r.method << ": median " << r.median << " ci [" << r.ci_low << ", " << r.ci_high
              << "]\n";
  return 0;
}

int cmd_evaluate(const CliState& state) {
  const RunConfig& cfg = state.cfg;
  nlohmann::json j;
  const std::string out = cfg.out.empty() ? "evaluation.out" : cfg.out;

  if (cfg.eval_kind == "auc") {
    const SyntheticSpec spec = preset(cfg.preset_name);
    std::vector<double> aucs;
    double mean = 0.0;
    for (int s = 0; s < cfg.seeds; ++s) {
      aucs.push_back(validity_auc(spec, cfg.n, std::nullopt, cfg.xi, cfg.seed + s));
      mean += aucs.back();
    }
    mean /= static_cast<double>(cfg.seeds);
    j = {{"kind", "auc"}, {"per_seed", aucs}, {"mean", mean}};
    std::ofstream(out) << j.dump(2) << '\n';
    std::cout << "mean validity AUC " << mean << "\n";
    return 0;
  }
  if (cfg.eval_kind == "calibration") {
    const SyntheticSpec spec =
        cfg.preset_name.empty() ? preset("calibration_null") : preset(cfg.preset_name);
    const CalibrationResult res = calibration(spec, cfg.datasets, cfg.n, cfg.replicates, cfg.seed);
    j = {{"kind", "calibration"},
         {"coverage", res.coverage},
         {"datasets", res.datasets},
         {"failures", res.failures}};
    std::ofstream(out) << j.dump(2) << '\n';
    std::cout << "coverage " << res.coverage << " over " << res.datasets << " datasets\n";
    return 0;
  }
  if (cfg.eval_kind == "scaling") {
    const SyntheticSpec spec =
        cfg.preset_name.empty() ? preset("calibration_null") : preset(cfg.preset_name);
    const std::vector<long> ns = cfg.n_list.empty() ? std::vector<long>{2500, 10000} : cfg.n_list;
    const auto points = scaling_curve(spec, ns, cfg.seeds, cfg.seed);
    std::ofstream csv(out);
    csv << "n,mean_error\n";
    for (const auto& p : points) csv << p.n << ',' << p.mean_error << '\n';
    for (const auto& p : points) std::cout << "n=" << p.n << " error " << p.mean_error << "\n";
    return 0;
  }
  if (cfg.eval_kind == "robustness") {
    const std::vector<double> accs =
        cfg.accuracies.empty() ? std::vector<double>{0.5, 0.525, 0.55, 0.575, 0.6}
                               : cfg.accuracies;
    const auto points = robustness_sweep(accs, cfg.n, cfg.replicates, cfg.seed);
    std::ofstream csv(out);
    csv << "accuracy,method,median,ci_low,ci_high\n";
    for (const auto& p : points) {
      for (const auto* r : {&p.ivy, &p.uas, &p.was})
        csv << p.accuracy << ',' << r->method << ',' << r->median << ',' << r->ci_low << ','
            << r->ci_high << '\n';
      std::cout << "accuracy " << p.accuracy << ": ivy " << p.ivy.median << " uas "
                << p.uas.median << " was " << p.was.median << "\n";
    }
    return 0;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown evaluation kind '" + cfg.eval_kind + "' (auc|calibration|scaling|robustness)");
}

int cmd_power(const CliState& state) {
  const RunConfig& cfg = state.cfg;
  const double p0 = 1.0 - cfg.power_p1;
  const double pi =
      power(cfg.power_n, cfg.power_p1, p0, cfg.power_alpha, cfg.power_beta, cfg.power_level);
  std::cout << pi << "\n";
  if (!cfg.out.empty())
    std::ofstream(cfg.out) << nlohmann::json{{"kind", "power"}, {"power", pi}}.dump(2) << '\n';
  return 0;
}

void add_common_options(CLI::App* cmd, CliState& state) {
  RunConfig& cfg = state.cfg;
  cmd->add_option("--seed", cfg.seed, "master seed");
  cmd->add_option("--replicates", cfg.replicates, "half-split replicate count");
  cmd->add_option("--prior-z", cfg.prior_z, "P(z=1)")->each([&](const std::string&) {
    state.prior_z_given = true;
  });
  cmd->add_option("--preset", cfg.preset_name, "synthetic preset name");
  cmd->add_option("--spec", cfg.spec_path, "custom generating-process JSON (overrides preset)");
  cmd->add_option("--dump-decomposition", cfg.dump_prefix,
                  "fit: write the S/L/ell decomposition as <prefix>.*.csv");
  cmd->add_option("--n", cfg.n, "samples to generate");
  cmd->add_option("--input", cfg.input, "dataset CSV path");
  cmd->add_option("--model", cfg.model_path, "model JSON path");
  cmd->add_option("--out", cfg.out, "output path");
  cmd->add_option("--truth-out", cfg.truth_out, "ground-truth sidecar path");
  cmd->add_option("--methods", cfg.methods, "methods: ivy,uas,was,association")
      ->delimiter(',');
  cmd->add_option("--xi", cfg.xi, "validity threshold index scale (2 or 3)")
      ->check(CLI::IsMember({2, 3}));
  cmd->add_flag("--zero-one-encoding", cfg.zero_one, "datasets use 0/1 instead of -1/+1");
  cmd->add_option("--reuse-structure", cfg.reuse_structure,
                  "re-use the fitted structure across replicates (default true)");
  cmd->add_flag("--unbiased-moment", cfg.unbiased_moment, "1/(n-1) second-moment normalization");
  cmd->add_option("--lambda", [&cfg](const CLI::results_t& v) {
    cfg.lambda = std::stod(v[0]);
    return true;
  }, "fixed penalty weight");
  cmd->add_option("--gamma", [&cfg](const CLI::results_t& v) {
    cfg.gamma = std::stod(v[0]);
    return true;
  }, "fixed sparsity/rank trade-off");
  cmd->add_option("--t1", [&cfg](const CLI::results_t& v) {
    cfg.t1 = std::stod(v[0]);
    return true;
  }, "fixed validity threshold");
  cmd->add_option("--t2", [&cfg](const CLI::results_t& v) {
    cfg.t2 = std::stod(v[0]);
    return true;
  }, "fixed edge threshold");
  cmd->add_option("--lambda-grid", cfg.lambda_grid, "model selection lambda grid")->delimiter(',');
  cmd->add_option("--gamma-grid", cfg.gamma_grid, "model selection gamma grid")->delimiter(',');
  cmd->add_option("--eval", cfg.eval_kind, "evaluation kind: auc|calibration|scaling|robustness");
  cmd->add_option("--datasets", cfg.datasets, "calibration dataset count");
  cmd->add_option("--seeds", cfg.seeds, "harness seed count");
  cmd->add_option("--n-list", cfg.n_list, "scaling curve sample sizes")->delimiter(',');
  cmd->add_option("--accuracies", cfg.accuracies, "robustness sweep accuracies")->delimiter(',');
  cmd->add_option("--power-n", cfg.power_n, "power: sample count");
  cmd->add_option("--power-p1", cfg.power_p1, "power: P(y=1)");
  cmd->add_option("--power-alpha", cfg.power_alpha, "power: causal effect");
  cmd->add_option("--power-beta", cfg.power_beta, "power: z->x slope");
  cmd->add_option("--power-level", cfg.power_level, "power: significance level");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"summary-IV synthesis and causal effect estimation"};
  app.require_subcommand(1);

  CliState state;

  // The config file loads first; explicit flags override its values.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        state.cfg = read_config_json(argv[i + 1]);
      } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
    }
  }

  std::string config_path;
  int (*handler)(const CliState&) = nullptr;
  for (const auto& [name, desc, fn] :
       std::initializer_list<std::tuple<const char*, const char*, int (*)(const CliState&)>>{
           {"generate", "sample a synthetic dataset from a preset", cmd_generate},
           {"fit", "learn structure and parameters from a dataset", cmd_fit},
           {"estimate", "estimate causal effects with a fitted model", cmd_estimate},
           {"pipeline", "generate-or-load, fit, and estimate end to end", cmd_pipeline},
           {"evaluate", "run an evaluation harness", cmd_evaluate},
           {"power", "Wald-estimator statistical power", cmd_power}}) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    cmd->add_option("--config", config_path, "JSON config file (flags override it)");
    add_common_options(cmd, state);
    cmd->callback([&handler, fn]() { handler = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return handler(state);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!state.cfg.out.empty()) {
      std::ofstream(state.cfg.out)
          << nlohmann::json{{"error", e.what()}, {"diagnostics", {e.what()}}}.dump(2) << '\n';
    }
    return is_validation_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
