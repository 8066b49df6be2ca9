#include "plfm/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <thread>

#include "plfm/csv.hpp"
#include "plfm/evaluation.hpp"
#include "plfm/generative.hpp"
#include "plfm/inference.hpp"
#include "plfm/preprocess.hpp"
#include "plfm/trace_io.hpp"

namespace plfm {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Relative output paths resolve under $PLFM_OUTPUT_ROOT when it is set.
fs::path resolve_output(const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("PLFM_OUTPUT_ROOT"))
    return fs::path(root) / p;
  return p;
}

struct GenerateArgs {
  std::string preset = "cambridge-bars";
  std::string out_dir;
  std::uint64_t seed = 0;
  int n_obs = 500;
  double noise_sd = 0.35;
  double new_instance_prob = 0.2;
  double lifetime_param = 0.5;
  double heldout_fraction = 0.1;
  int heldout_dims = 30;
};

int run_generate(const GenerateArgs& args) {
  if (args.preset != "cambridge-bars")
    throw CLI::ValidationError("unknown preset: " + args.preset);
  SyntheticSpec spec = cambridge_bars_spec();
  spec.n_obs = args.n_obs;
  spec.noise_sd = args.noise_sd;
  spec.new_instance_prob = args.new_instance_prob;
  spec.lifetime_param = args.lifetime_param;
  spec.heldout_fraction = args.heldout_fraction;
  spec.heldout_dims_per_obs = args.heldout_dims;
  spec.seed = args.seed;
  Rng rng(spec.seed);
  const SyntheticDataset synth = generate_cambridge_bars(spec, rng);

  const fs::path dir = resolve_output(args.out_dir);
  fs::create_directories(dir);
  save_csv(dir / "data.csv", synth.data);
  save_csv(dir / "truth.csv", synth.truth);
  save_matrix_csv(dir / "true_features.csv", synth.true_dict);
  save_int_matrix_csv(dir / "true_allocation.csv",
                      synth.true_alloc.lambda());

  json manifest;
  manifest["format"] = "plfm-synthetic/1";
  manifest["preset"] = args.preset;
  manifest["seed"] = spec.seed;
  manifest["n_obs"] = spec.n_obs;
  manifest["noise_sd"] = spec.noise_sd;
  manifest["new_instance_prob"] = spec.new_instance_prob;
  manifest["lifetime_param"] = spec.lifetime_param;
  manifest["heldout_fraction"] = spec.heldout_fraction;
  manifest["heldout_dims_per_obs"] = spec.heldout_dims_per_obs;
  manifest["files"] = {"data.csv", "truth.csv", "true_features.csv",
                       "true_allocation.csv"};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  std::cout << "wrote synthetic dataset to " << dir.string() << "\n";
  return 0;
}

struct FitArgs {
  std::string data_path;
  std::string out_dir;
  SamplerConfig cfg;
  int chains = 1;
  std::vector<std::string> steps;
  StftOptions stft;
  std::string model = "dynamic-constant";
  std::string regime = "weak-limit";
  double fix_alpha = 0.0, fix_sigma2_x = 0.0, fix_sigma2_a = 0.0;
};

int run_fit(FitArgs& args) {
  args.cfg.model = model_from_string(args.model);
  args.cfg.regime = regime_from_string(args.regime);
  if (args.fix_alpha > 0.0) args.cfg.fixed.alpha = args.fix_alpha;
  if (args.fix_sigma2_x > 0.0) args.cfg.fixed.sigma2_x = args.fix_sigma2_x;
  if (args.fix_sigma2_a > 0.0) args.cfg.fixed.sigma2_a = args.fix_sigma2_a;
  args.cfg.validate();

  Dataset data = load_csv(args.data_path);
  if (!args.steps.empty()) data = apply_steps(data, args.steps, args.stft);

  const fs::path out_root = resolve_output(args.out_dir);
  const auto fit_one = [&](int chain_idx, const fs::path& dir) {
    SamplerConfig cfg = args.cfg;
    cfg.seed = args.cfg.seed;
    Rng rng = Rng(cfg.seed).stream(static_cast<std::uint64_t>(chain_idx));
    try {
      const ChainTrace trace = run_chain(data, cfg, rng);
      write_trace(dir, trace, cfg, args.data_path);
    } catch (const ChainDivergedError& err) {
      fs::create_directories(dir);
      save_int_matrix_csv(dir / "diverged_lambda.csv", err.state.alloc.lambda());
      save_matrix_csv(dir / "diverged_features.csv", err.state.dict);
      std::ofstream dump(dir / "diverged.txt");
      dump << err.what() << "\n";
      throw;
    }
  };

  if (args.chains == 1) {
    fit_one(0, out_root);
  } else {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(args.chains);
    for (int c = 0; c < args.chains; ++c) {
      char name[32];
      std::snprintf(name, sizeof(name), "chain_%03d", c);
      const fs::path dir = out_root / name;
      workers.emplace_back([&, c, dir] {
        try {
          fit_one(c, dir);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);
  }
  std::cout << "wrote trace to " << out_root.string() << "\n";
  return 0;
}

struct ImputeArgs {
  std::string trace_dir;
  std::string data_path;
  std::string out_path;
};

int run_impute(const ImputeArgs& args) {
  const ChainTrace trace = read_trace(args.trace_dir);
  Dataset data = load_csv(args.data_path);
  const std::vector<double> means = posterior_mean_imputations(trace);
  if (trace.masked_cells != data.masked_cells())
    throw std::runtime_error("trace and data disagree on masked cells");
  Dataset completed = data;
  for (std::size_t j = 0; j < means.size(); ++j) {
    const auto& [r, c] = trace.masked_cells[j];
    completed.x(r, c) = means[j];
    completed.observed(r, c) = true;
  }
  const fs::path out = resolve_output(args.out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_csv(out, completed);
  std::cout << "wrote completions to " << out.string() << "\n";
  return 0;
}

struct EvaluateArgs {
  std::vector<std::string> trace_dirs;
  std::string truth_path;
  std::string out_dir;
};

int run_evaluate(const EvaluateArgs& args) {
  const Dataset truth = load_csv(args.truth_path);
  std::vector<double> mse, n_features, persistence;
  ChainTrace first;
  bool have_first = false;
  for (const auto& dir : args.trace_dirs) {
    const ChainTrace trace = read_trace(dir);
    mse.push_back(heldout_mse(trace, truth));
    std::vector<double> k_series(trace.k_active.begin(),
                                 trace.k_active.end());
    n_features.push_back(mean_of(k_series));
    double pers = 1.0;
    try {
      pers = persistence_stats(trace);
    } catch (const std::invalid_argument&) {
      pers = std::numeric_limits<double>::quiet_NaN();
    }
    persistence.push_back(pers);
    if (!have_first) {
      first = trace;
      have_first = true;
    }
  }
  const EvalReport report = aggregate_trials(mse, n_features, persistence);

  const fs::path dir = resolve_output(args.out_dir);
  fs::create_directories(dir);
  write_report(dir / "report.json", report);

  // Plot-ready exports from the first trace's final state.
  save_matrix_csv(dir / "feature_images.csv", first.final_state.dict);
  {
    const auto usage = feature_usage(first.final_state.alloc);
    std::ofstream out(dir / "feature_usage.csv");
    out << "feature,contributions\n";
    for (const auto& [k, count] : usage) out << k << ',' << count << '\n';
  }
  save_matrix_csv(dir / "instance_heatmap.csv",
                  instance_count_matrix(first.final_state.alloc));
  std::cout << "wrote evaluation to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Time-dependent nonparametric latent feature models"};
  app.require_subcommand(1);
  // Config keys live in one section per subcommand, e.g. [fit]; command-line
  // flags override config values.
  app.set_config("--config", "", "Read options from an INI file");

  GenerateArgs gen;
  auto* generate = app.add_subcommand(
      "generate", "Write a synthetic dataset with held-out test cells");
  generate->fallthrough();
  generate->add_option("--preset", gen.preset, "Dataset preset")
      ->capture_default_str();
  generate->add_option("-o,--out", gen.out_dir, "Output directory")
      ->required();
  generate->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  generate->add_option("--n-obs", gen.n_obs)->capture_default_str();
  generate->add_option("--noise-sd", gen.noise_sd)->capture_default_str();
  generate->add_option("--new-instance-prob", gen.new_instance_prob)
      ->capture_default_str();
  generate->add_option("--lifetime-param", gen.lifetime_param)
      ->capture_default_str();
  generate->add_option("--heldout-fraction", gen.heldout_fraction)
      ->capture_default_str();
  generate->add_option("--heldout-dims", gen.heldout_dims)
      ->capture_default_str();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Run MCMC on a CSV dataset");
  fit_cmd->fallthrough();
  fit_cmd->add_option("data", fit.data_path, "Input CSV")->required();
  fit_cmd->add_option("-o,--out", fit.out_dir, "Output trace directory")
      ->required();
  fit_cmd->add_option("--model", fit.model,
                      "static | dynamic-constant | dynamic-weighted")
      ->capture_default_str();
  fit_cmd->add_option("--regime", fit.regime, "full | weak-limit")
      ->capture_default_str();
  fit_cmd->add_option("--k-max", fit.cfg.k_max)->capture_default_str();
  fit_cmd->add_option("--iters", fit.cfg.n_iters)->capture_default_str();
  fit_cmd->add_option("--burn-in", fit.cfg.burn_in)->capture_default_str();
  fit_cmd->add_option("--thin", fit.cfg.thin)->capture_default_str();
  fit_cmd->add_option("--bracket-width", fit.cfg.initial_bracket_width)
      ->capture_default_str();
  fit_cmd->add_option("--seed", fit.cfg.seed)->capture_default_str();
  fit_cmd->add_option("--chains", fit.chains)->capture_default_str();
  fit_cmd->add_option("--steps", fit.steps,
                      "Ordered preprocessing steps: standardize, subtract-min, "
                      "unit-variance, whiten, stft")
      ->delimiter(',');
  fit_cmd->add_option("--n-fft", fit.stft.n_fft)->capture_default_str();
  fit_cmd->add_option("--hop", fit.stft.hop)->capture_default_str();
  fit_cmd->add_option("--a-rho", fit.cfg.hypers.a_rho)->capture_default_str();
  fit_cmd->add_option("--b-rho", fit.cfg.hypers.b_rho)->capture_default_str();
  fit_cmd->add_option("--a-alpha", fit.cfg.hypers.a_alpha)
      ->capture_default_str();
  fit_cmd->add_option("--b-alpha", fit.cfg.hypers.b_alpha)
      ->capture_default_str();
  fit_cmd->add_option("--a-sigma", fit.cfg.hypers.a_sigma)
      ->capture_default_str();
  fit_cmd->add_option("--b-sigma", fit.cfg.hypers.b_sigma)
      ->capture_default_str();
  fit_cmd->add_option("--alpha-b", fit.cfg.hypers.alpha_b)
      ->capture_default_str();
  fit_cmd->add_option("--beta-b", fit.cfg.hypers.beta_b)
      ->capture_default_str();
  fit_cmd->add_option("--init-alpha", fit.cfg.hypers.alpha)
      ->capture_default_str();
  fit_cmd->add_option("--init-sigma2-x", fit.cfg.hypers.sigma2_x)
      ->capture_default_str();
  fit_cmd->add_option("--init-sigma2-a", fit.cfg.hypers.sigma2_a)
      ->capture_default_str();
  fit_cmd->add_option("--fix-alpha", fit.fix_alpha,
                      "Fix alpha instead of sampling it");
  fit_cmd->add_option("--fix-sigma2-x", fit.fix_sigma2_x,
                      "Fix the noise variance");
  fit_cmd->add_option("--fix-sigma2-a", fit.fix_sigma2_a,
                      "Fix the feature prior variance");

  ImputeArgs imp;
  auto* impute = app.add_subcommand(
      "impute", "Write posterior-mean completions of masked cells");
  impute->fallthrough();
  impute->add_option("--trace", imp.trace_dir, "Trace directory")->required();
  impute->add_option("--data", imp.data_path, "Masked input CSV")->required();
  impute->add_option("-o,--out", imp.out_path, "Output CSV")->required();

  EvaluateArgs eval;
  auto* evaluate = app.add_subcommand(
      "evaluate", "Held-out MSE report and plot-ready exports");
  evaluate->fallthrough();
  evaluate->add_option("--trace", eval.trace_dirs, "Trace directories")
      ->required()
      ->delimiter(',');
  evaluate->add_option("--truth", eval.truth_path, "Complete truth CSV")
      ->required();
  evaluate->add_option("-o,--out", eval.out_dir, "Output directory")
      ->required();

  try {
    app.parse(argc, argv);
    if (*generate) return run_generate(gen);
    if (*fit_cmd) return run_fit(fit);
    if (*impute) return run_impute(imp);
    if (*evaluate) return run_evaluate(eval);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace plfm
