#include "plfm/trace_io.hpp"

#include <fstream>
#include <json.hpp>

#include "plfm/csv.hpp"

namespace plfm {

namespace {

using nlohmann::json;

void write_series(const std::filesystem::path& path, const std::string& name,
                  const std::vector<int>& iteration,
                  const std::vector<double>& values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << "iteration," << name << '\n';
  for (std::size_t i = 0; i < values.size(); ++i)
    out << iteration[i] << ',' << format_double(values[i]) << '\n';
}

std::vector<double> read_series(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> values;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  return values;
}

std::vector<int> read_series_iterations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<int> its;
  while (std::getline(in, line))
    its.push_back(std::stoi(line.substr(0, line.find(','))));
  return its;
}

json config_to_json(const SamplerConfig& cfg) {
  json j;
  j["model"] = to_string(cfg.model);
  j["regime"] = to_string(cfg.regime);
  j["k_max"] = cfg.k_max;
  j["n_iters"] = cfg.n_iters;
  j["burn_in"] = cfg.burn_in;
  j["thin"] = cfg.thin;
  j["initial_bracket_width"] = cfg.initial_bracket_width;
  j["seed"] = cfg.seed;
  j["record_imputations"] = cfg.record_imputations;
  const auto& h = cfg.hypers;
  j["hypers"] = {{"alpha", h.alpha},     {"sigma2_x", h.sigma2_x},
                 {"sigma2_a", h.sigma2_a}, {"a_rho", h.a_rho},
                 {"b_rho", h.b_rho},     {"a_alpha", h.a_alpha},
                 {"b_alpha", h.b_alpha}, {"a_sigma", h.a_sigma},
                 {"b_sigma", h.b_sigma}, {"alpha_b", h.alpha_b},
                 {"beta_b", h.beta_b}};
  json fixed = json::object();
  if (cfg.fixed.alpha) fixed["alpha"] = *cfg.fixed.alpha;
  if (cfg.fixed.sigma2_x) fixed["sigma2_x"] = *cfg.fixed.sigma2_x;
  if (cfg.fixed.sigma2_a) fixed["sigma2_a"] = *cfg.fixed.sigma2_a;
  j["fixed"] = fixed;
  return j;
}

SamplerConfig config_from_json(const json& j) {
  SamplerConfig cfg;
  cfg.model = model_from_string(j.at("model").get<std::string>());
  cfg.regime = regime_from_string(j.at("regime").get<std::string>());
  cfg.k_max = j.at("k_max").get<int>();
  cfg.n_iters = j.at("n_iters").get<int>();
  cfg.burn_in = j.at("burn_in").get<int>();
  cfg.thin = j.at("thin").get<int>();
  cfg.initial_bracket_width = j.at("initial_bracket_width").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.record_imputations = j.at("record_imputations").get<bool>();
  const auto& h = j.at("hypers");
  cfg.hypers.alpha = h.at("alpha").get<double>();
  cfg.hypers.sigma2_x = h.at("sigma2_x").get<double>();
  cfg.hypers.sigma2_a = h.at("sigma2_a").get<double>();
  cfg.hypers.a_rho = h.at("a_rho").get<double>();
  cfg.hypers.b_rho = h.at("b_rho").get<double>();
  cfg.hypers.a_alpha = h.at("a_alpha").get<double>();
  cfg.hypers.b_alpha = h.at("b_alpha").get<double>();
  cfg.hypers.a_sigma = h.at("a_sigma").get<double>();
  cfg.hypers.b_sigma = h.at("b_sigma").get<double>();
  cfg.hypers.alpha_b = h.at("alpha_b").get<double>();
  cfg.hypers.beta_b = h.at("beta_b").get<double>();
  const auto& fixed = j.at("fixed");
  if (fixed.contains("alpha")) cfg.fixed.alpha = fixed["alpha"].get<double>();
  if (fixed.contains("sigma2_x"))
    cfg.fixed.sigma2_x = fixed["sigma2_x"].get<double>();
  if (fixed.contains("sigma2_a"))
    cfg.fixed.sigma2_a = fixed["sigma2_a"].get<double>();
  return cfg;
}

}  // namespace

std::string config_hash(const SamplerConfig& cfg) {
  const std::string canonical = config_to_json(cfg).dump();
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char ch : canonical) {
    hash ^= ch;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

void write_trace(const std::filesystem::path& dir, const ChainTrace& trace,
                 const SamplerConfig& cfg, const std::string& data_path) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;

  const auto series = [&](const std::string& name,
                          const std::vector<double>& values) {
    write_series(dir / (name + ".csv"), name, trace.iteration, values);
    files.push_back(name + ".csv");
  };
  series("log_joint", trace.log_joint);
  std::vector<double> k_series(trace.k_active.begin(), trace.k_active.end());
  series("k_active", k_series);
  series("alpha", trace.alpha);
  series("sigma2_x", trace.sigma2_x);
  series("sigma2_a", trace.sigma2_a);
  series("avg_persistence", trace.avg_persistence);

  {
    Matrix cells(trace.masked_cells.size(), 2);
    for (std::size_t i = 0; i < trace.masked_cells.size(); ++i) {
      cells(i, 0) = trace.masked_cells[i].first;
      cells(i, 1) = trace.masked_cells[i].second;
    }
    save_matrix_csv(dir / "masked_cells.csv", cells);
    files.push_back("masked_cells.csv");
  }
  {
    Matrix imputed(trace.imputed.size(), trace.masked_cells.size());
    for (std::size_t i = 0; i < trace.imputed.size(); ++i)
      for (std::size_t j = 0; j < trace.imputed[i].size(); ++j)
        imputed(i, j) = trace.imputed[i][j];
    save_matrix_csv(dir / "imputations.csv", imputed);
    files.push_back("imputations.csv");
  }
  save_int_matrix_csv(dir / "final_lambda.csv", trace.final_state.alloc.lambda());
  files.push_back("final_lambda.csv");
  save_matrix_csv(dir / "final_features.csv", trace.final_state.dict);
  files.push_back("final_features.csv");
  save_matrix_csv(dir / "final_weights.csv", trace.final_state.weights.b);
  files.push_back("final_weights.csv");
  save_matrix_csv(dir / "final_rho.csv", trace.final_state.rho);
  files.push_back("final_rho.csv");
  {
    Matrix scalars(1, 3);
    scalars << trace.final_state.alpha, trace.final_state.sigma2_x,
        trace.final_state.sigma2_a;
    save_matrix_csv(dir / "final_scalars.csv", scalars);
    files.push_back("final_scalars.csv");
  }

  json manifest;
  manifest["format"] = "plfm-trace/1";
  manifest["seed"] = cfg.seed;
  manifest["config"] = config_to_json(cfg);
  manifest["config_hash"] = config_hash(cfg);
  manifest["data_path"] = data_path;
  manifest["n_kept"] = trace.size();
  manifest["weight_kind"] =
      cfg.weight_kind() == WeightKind::kGammaDistributed ? "gamma"
                                                         : "constant-one";
  manifest["files"] = files;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest");
  out << manifest.dump(2) << '\n';
}

ChainTrace read_trace(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in)
    throw std::runtime_error("cannot open manifest in " + dir.string());
  json manifest = json::parse(in);
  if (manifest.at("format").get<std::string>() != "plfm-trace/1")
    throw std::runtime_error("unknown trace format");
  const SamplerConfig cfg = config_from_json(manifest.at("config"));

  ChainTrace trace;
  trace.iteration = read_series_iterations(dir / "log_joint.csv");
  trace.log_joint = read_series(dir / "log_joint.csv");
  for (double k : read_series(dir / "k_active.csv"))
    trace.k_active.push_back(static_cast<int>(k));
  trace.alpha = read_series(dir / "alpha.csv");
  trace.sigma2_x = read_series(dir / "sigma2_x.csv");
  trace.sigma2_a = read_series(dir / "sigma2_a.csv");
  trace.avg_persistence = read_series(dir / "avg_persistence.csv");

  const Matrix cells = load_matrix_csv(dir / "masked_cells.csv");
  for (Eigen::Index i = 0; i < cells.rows(); ++i)
    trace.masked_cells.emplace_back(static_cast<int>(cells(i, 0)),
                                    static_cast<int>(cells(i, 1)));
  const Matrix imputed = load_matrix_csv(dir / "imputations.csv");
  for (Eigen::Index i = 0; i < imputed.rows(); ++i) {
    std::vector<double> row(imputed.cols());
    for (Eigen::Index j = 0; j < imputed.cols(); ++j) row[j] = imputed(i, j);
    trace.imputed.push_back(std::move(row));
  }

  trace.final_state.alloc =
      FeatureAllocation(load_int_matrix_csv(dir / "final_lambda.csv"));
  trace.final_state.dict = load_matrix_csv(dir / "final_features.csv");
  trace.final_state.weights.b = load_matrix_csv(dir / "final_weights.csv");
  trace.final_state.weights.kind = cfg.weight_kind();
  trace.final_state.rho = load_matrix_csv(dir / "final_rho.csv");
  const Matrix scalars = load_matrix_csv(dir / "final_scalars.csv");
  trace.final_state.alpha = scalars(0, 0);
  trace.final_state.sigma2_x = scalars(0, 1);
  trace.final_state.sigma2_a = scalars(0, 2);
  return trace;
}

void write_report(const std::filesystem::path& path,
                  const EvalReport& report) {
  json j;
  j["mse_mean"] = report.mse_mean;
  j["mse_bound"] = report.mse_bound;
  j["n_features_mean"] = report.n_features_mean;
  j["avg_persistence_mean"] = report.avg_persistence_mean;
  j["n_trials"] = report.n_trials;
  j["per_trial_mse"] = report.per_trial_mse;
  j["per_trial_n_features"] = report.per_trial_n_features;
  j["per_trial_persistence"] = report.per_trial_persistence;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace plfm
