#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "ifa/ifa.hpp"
#include "ifa/parallel.hpp"
#include "io.hpp"
#include "json.hpp"

namespace ifa::cli {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct RunConfig {
  std::string command;
  std::string estimator = "cjmle";
  std::string model = "binary";
  std::string link = "logit";
  int k = 1;
  std::string input;
  std::string truth;
  std::string output_dir = ".";
  std::string q_matrix;
  std::string label;
  std::string config_file;
  std::uint64_t seed = 1;
  std::optional<std::size_t> workers;
  std::optional<int> max_iters;
  std::optional<double> tol;
  std::optional<double> c_radius;
  std::optional<int> burn_in;
  std::optional<int> total_iters;
  int quad_points = 21;
  // simulate only
  int n = 500;
  int j = 20;
  int categories = 4;
};

// key = value lines; '#' starts a comment.
std::vector<std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  std::vector<std::string> args;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(path + ": line " + std::to_string(line_no) + " is not of the form key = value");
    }
    auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty() || key == "config") {
      throw InputError(path + ": line " + std::to_string(line_no) + " has an invalid key");
    }
    args.push_back("--" + key);
    args.push_back(value);
  }
  return args;
}

// Values from --config are appended so they take precedence over flags.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out = args;
  for (std::size_t a = 0; a < args.size(); ++a) {
    std::string path;
    if (args[a] == "--config" && a + 1 < args.size()) {
      path = args[a + 1];
    } else if (args[a].rfind("--config=", 0) == 0) {
      path = args[a].substr(9);
    }
    if (!path.empty()) {
      const std::vector<std::string> extra = read_config_file(path);
      out.insert(out.end(), extra.begin(), extra.end());
    }
  }
  return out;
}

std::size_t resolve_worker_flag(const std::optional<std::size_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("IFA_WORKERS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 0) throw InputError("IFA_WORKERS must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }
  return 0;
}

fs::path prepare_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

std::vector<std::string> default_item_names(int j) {
  std::vector<std::string> names;
  for (int c = 1; c <= j; ++c) names.push_back("item" + std::to_string(c));
  return names;
}

Json q_json(const std::optional<QMatrix>& q) {
  if (!q) return nullptr;
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < q->entries().rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < q->entries().cols(); ++c) row.push_back(q->entries()(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<QMatrix> load_q(const RunConfig& cfg) {
  if (cfg.q_matrix.empty()) return std::nullopt;
  return read_q_matrix(cfg.q_matrix);
}

void write_manifest(const fs::path& dir, const std::string& command, std::uint64_t seed, const Json& spec,
                    const std::vector<std::string>& outputs) {
  Json manifest;
  manifest["command"] = command;
  manifest["seed"] = seed;
  manifest["spec_hash"] = fnv1a_hex(spec.dump());
  manifest["spec"] = spec;
  manifest["outputs"] = outputs;
  write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  SimSpec spec;
  spec.n = cfg.n;
  spec.j = cfg.j;
  spec.k = cfg.k;
  spec.kind = parse_model_kind(cfg.model);
  spec.link = parse_link(cfg.link);
  spec.categories = spec.kind == ModelKind::binary ? 2 : cfg.categories;
  spec.seed = cfg.seed;
  spec.q = load_q(cfg);
  spec.validate();

  Json canonical;
  canonical["n"] = spec.n;
  canonical["j"] = spec.j;
  canonical["k"] = spec.k;
  canonical["model"] = std::string(to_string(spec.kind));
  canonical["link"] = std::string(to_string(spec.link));
  canonical["categories"] = spec.categories;
  canonical["loading_range"] = {spec.loading_low, spec.loading_high};
  canonical["intercept_range"] = {spec.intercept_low, spec.intercept_high};
  canonical["threshold_range"] = {spec.threshold_low, spec.threshold_high};
  canonical["q_matrix"] = q_json(spec.q);
  canonical["seed"] = spec.seed;

  const fs::path dir = prepare_output_dir(cfg.output_dir);
  const Simulation sim = simulate(spec);
  const std::vector<std::string> names = default_item_names(spec.j);
  write_responses_csv((dir / "data.csv").string(), names, sim.data.responses());

  ParameterFile truth;
  truth.estimator = "truth";
  truth.model = ModelSpec{spec.kind, spec.link, spec.k};
  truth.item_names = names;
  truth.items = sim.items;
  truth.correlation = sim.correlation;
  truth.thetas = sim.thetas;
  truth.seed = spec.seed;
  write_text((dir / "truth.json").string(), parameters_to_json(truth));
  write_manifest(dir, "simulate", spec.seed, canonical, {"data.csv", "truth.json"});
  out << "simulated " << spec.n << " x " << spec.j << " responses into " << dir.string() << "\n";
  return kExitSuccess;
}

double max_change(const std::vector<ItemParams>& a, const std::vector<ItemParams>& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, (a[j].packed() - b[j].packed()).cwiseAbs().maxCoeff());
  return m;
}

std::string trajectory_csv(const std::vector<double>& objective, const std::vector<std::vector<ItemParams>>& snapshots) {
  std::string csv = "iteration,objective,max_param_change\n";
  const std::size_t rows = std::max({objective.size(), snapshots.size(), std::size_t{1}});
  for (std::size_t t = 0; t < rows; ++t) {
    csv += std::to_string(t) + ",";
    csv += t < objective.size() ? format_double(objective[t]) : "NA";
    csv += ",";
    csv += (t > 0 && t < snapshots.size()) ? format_double(max_change(snapshots[t], snapshots[t - 1])) : "NA";
    csv += "\n";
  }
  return csv;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.input.empty()) throw InputError("fit needs --input <data.csv>");
  const ResponseTable table = read_responses_csv(cfg.input);
  const Dataset data = Dataset::from_responses(table.responses);
  const ModelSpec model{parse_model_kind(cfg.model), parse_link(cfg.link), cfg.k};
  if (model.k < 1) throw InputError("--k must be at least 1");
  require_supported(model.kind, model.link);
  const std::optional<QMatrix> q = load_q(cfg);
  const QMatrix* qp = q ? &*q : nullptr;
  const std::size_t workers = resolve_worker_flag(cfg.workers);
  const std::string& est = cfg.estimator;

  Json settings;
  settings["estimator"] = est;
  settings["model"] = std::string(to_string(model.kind));
  settings["link"] = std::string(to_string(model.link));
  settings["k"] = model.k;
  settings["seed"] = cfg.seed;
  settings["input_hash"] = fnv1a_hex(read_text(cfg.input));
  settings["q_matrix"] = q_json(q);

  ParameterFile result;
  result.estimator = est;
  result.model = model;
  result.item_names = table.item_names;
  result.seed = cfg.seed;
  std::vector<double> objective;
  std::vector<std::vector<ItemParams>> snapshots;

  const fs::path dir = prepare_output_dir(cfg.output_dir);
  const auto started = std::chrono::steady_clock::now();
  if (est == "cjmle") {
    CjmleConfig c;
    if (cfg.c_radius) c.c_radius = *cfg.c_radius;
    if (cfg.max_iters) c.max_iters = *cfg.max_iters;
    if (cfg.tol) c.tol = *cfg.tol;
    c.workers = workers;
    settings["c_radius"] = c.radius(model.k);
    settings["max_iters"] = c.max_iters;
    settings["tol"] = c.tol;
    CjmleFit fit = fit_cjmle(data, model, c, qp);
    result.items = std::move(fit.items);
    result.thetas = std::move(fit.thetas);
    result.correlation = Eigen::MatrixXd::Identity(model.k, model.k);
    result.converged = fit.converged;
    result.iterations = fit.iterations;
    objective = fit.trajectory;
  } else if (est == "svd") {
    if (qp != nullptr) throw InputError("the svd estimator is exploratory and does not take --q-matrix");
    const SpectralFit fit = data.is_binary() ? fit_svd_binary(data, model.k, model.link)
                                             : fit_svd_ordinal(data, model.k, model.link);
    StartValues start = spectral_start(data, model);
    result.items = std::move(start.items);
    result.thetas = fit.thetas;
    result.correlation = Eigen::MatrixXd::Identity(model.k, model.k);
  } else if (est == "em" || est == "mcem" || est == "stem" || est == "sa") {
    MarginalFit fit;
    ChainConfig chain;
    chain.seed = cfg.seed;
    chain.workers = workers;
    if (est == "em") {
      if (model.k > kMaxQuadratureFactors) {
        throw InputError("the em estimator supports K <= 3 (got K = " + std::to_string(model.k) +
                         "); use --estimator stem or --estimator sa");
      }
      EmConfig c;
      c.points_per_dim = cfg.quad_points;
      if (cfg.max_iters) c.max_iters = *cfg.max_iters;
      if (cfg.tol) c.tol = *cfg.tol;
      c.workers = workers;
      settings["quad_points"] = c.points_per_dim;
      settings["max_iters"] = c.max_iters;
      settings["tol"] = c.tol;
      fit = fit_em_quadrature(data, model, c, qp);
    } else if (est == "mcem") {
      McemConfig c;
      c.chain = chain;
      if (cfg.max_iters) c.max_iters = *cfg.max_iters;
      settings["max_iters"] = c.max_iters;
      fit = fit_mcem(data, model, c, qp);
    } else if (est == "stem") {
      StemConfig c;
      c.chain = chain;
      if (cfg.total_iters) c.total_iters = *cfg.total_iters;
      if (cfg.burn_in) c.burn_in = *cfg.burn_in;
      settings["total_iters"] = c.total_iters;
      settings["burn_in"] = c.burn_in;
      fit = fit_stem(data, model, c, qp);
    } else {
      SaConfig c;
      c.chain = chain;
      if (cfg.total_iters) c.total_iters = *cfg.total_iters;
      if (cfg.burn_in) c.warmup = *cfg.burn_in;
      settings["total_iters"] = c.total_iters;
      settings["burn_in"] = c.warmup;
      fit = fit_sa_mcmc(data, model, c, qp);
    }
    result.items = std::move(fit.items);
    result.thetas = std::move(fit.thetas);
    result.correlation = std::move(fit.correlation);
    result.converged = fit.converged;
    result.iterations = fit.iterations;
    objective = fit.loglik_trace;
    snapshots = std::move(fit.trajectory);
  } else {
    throw InputError("unknown estimator '" + est + "' (expected cjmle, em, mcem, stem, sa or svd)");
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  write_text((dir / "fit.json").string(), parameters_to_json(result));
  write_text((dir / "trajectory.csv").string(), trajectory_csv(objective, snapshots));
  Json timing;
  timing["estimator"] = est;
  timing["seconds"] = seconds;
  timing["workers"] = resolve_workers(workers);
  write_text((dir / "timing.json").string(), timing.dump(2) + "\n");
  write_manifest(dir, "fit", cfg.seed, settings, {"fit.json", "trajectory.csv", "timing.json"});

  if (!result.converged) {
    err << "warning: " << est << " reached the iteration limit (" << result.iterations
        << ") without meeting the tolerance; results written to " << dir.string() << "\n";
    return kExitNotConverged;
  }
  out << est << " fit written to " << dir.string() << "\n";
  return kExitSuccess;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.truth.empty() || cfg.input.empty()) throw InputError("evaluate needs --truth <truth.json> and --input <fit.json>");
  const ParameterFile truth = read_parameters(cfg.truth);
  const ParameterFile fit = read_parameters(cfg.input);
  if (truth.model.k != fit.model.k || truth.items.size() != fit.items.size() ||
      truth.thetas.rows() != fit.thetas.rows()) {
    throw InputError("truth and fit differ in dimensions (N, J or K)");
  }
  if (truth.model.kind != fit.model.kind || truth.model.link != fit.model.link) {
    throw InputError("truth and fit use different model kinds or links");
  }
  const RecoveryReport report = recovery_report(truth.thetas, truth.items, fit.thetas, fit.items, truth.model.link);
  const std::string label = cfg.label.empty() ? fit.estimator : cfg.label;

  Json j;
  j["label"] = label;
  j["n"] = truth.thetas.rows();
  j["j"] = truth.items.size();
  j["k"] = truth.model.k;
  j["prob_mse"] = report.prob_mse;
  j["aligned_loading_loss"] = report.aligned_loading_loss;
  j["q_loading_loss"] = report.q_loading_loss;
  Json corr = Json::array();
  for (Eigen::Index f = 0; f < report.theta_correlation.size(); ++f) corr.push_back(report.theta_correlation[f]);
  j["theta_correlation"] = corr;
  j["mean_theta_correlation"] = report.mean_theta_correlation();

  const fs::path dir = prepare_output_dir(cfg.output_dir);
  write_text((dir / "report.json").string(), j.dump(2) + "\n");
  std::string csv = "label,n,j,k,prob_mse,aligned_loading_loss,q_loading_loss,mean_theta_correlation\n";
  csv += label + "," + std::to_string(truth.thetas.rows()) + "," + std::to_string(truth.items.size()) + "," +
         std::to_string(truth.model.k) + "," + format_double(report.prob_mse) + "," +
         format_double(report.aligned_loading_loss) + "," + format_double(report.q_loading_loss) + "," +
         format_double(report.mean_theta_correlation()) + "\n";
  write_text((dir / "report.csv").string(), csv);
  out << "report written to " << dir.string() << "\n";
  return kExitSuccess;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Item factor analysis: simulate, fit and evaluate"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--command", cfg.command, "simulate, fit or evaluate")
      ->required()
      ->check(CLI::IsMember({"simulate", "fit", "evaluate"}));
  app.add_option("--estimator", cfg.estimator, "cjmle, em, mcem, stem, sa or svd")
      ->check(CLI::IsMember({"cjmle", "em", "mcem", "stem", "sa", "svd"}));
  app.add_option("--model", cfg.model, "binary, graded or gpc");
  app.add_option("--link", cfg.link, "logit or probit");
  app.add_option("--k", cfg.k, "number of factors");
  app.add_option("--input", cfg.input, "data CSV (fit) or fit JSON (evaluate)");
  app.add_option("--truth", cfg.truth, "truth JSON written by simulate");
  app.add_option("--output-dir", cfg.output_dir, "directory for output files");
  app.add_option("--seed", cfg.seed, "master random seed");
  app.add_option("--workers", cfg.workers, "worker threads (0: all cores; default IFA_WORKERS)");
  app.add_option("--max-iters", cfg.max_iters, "iteration limit (cjmle, em, mcem)");
  app.add_option("--tol", cfg.tol, "relative log-likelihood tolerance (cjmle, em)");
  app.add_option("--c-radius", cfg.c_radius, "cjmle ball radius C (default 5 sqrt(K))");
  app.add_option("--burn-in", cfg.burn_in, "stem burn-in / sa warm-up iterations");
  app.add_option("--total-iters", cfg.total_iters, "stem / sa iteration count");
  app.add_option("--quad-points", cfg.quad_points, "em quadrature points per dimension");
  app.add_option("--q-matrix", cfg.q_matrix, "J x K 0/1 CSV constraining loadings");
  app.add_option("--n", cfg.n, "simulate: persons");
  app.add_option("--j", cfg.j, "simulate: items");
  app.add_option("--categories", cfg.categories, "simulate: categories per ordinal item");
  app.add_option("--label", cfg.label, "evaluate: row label (default: estimator)");
  app.add_option("--config", cfg.config_file, "key = value file overriding flags");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<char*> argv;
    std::string program = "ifa";
    argv.push_back(program.data());
    for (auto& a : args) argv.push_back(a.data());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitSuccess : kExitUsage;
    }
    if (cfg.command == "simulate") return cmd_simulate(cfg, out);
    if (cfg.command == "fit") return cmd_fit(cfg, out, err);
    return cmd_evaluate(cfg, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace ifa::cli
