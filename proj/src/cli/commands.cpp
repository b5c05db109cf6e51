#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "sdr/diagnostics.hpp"
#include "sdr/io/cli.hpp"

namespace sdr::io {

using nlohmann::json;

namespace {

struct FitArgs {
  std::string model = "sdr-lvgm", data, responses, covariates, out;
  double lambda = 0.0, gamma = 1.0, delta = 1.0, tol = 1e-6;
  int max_iters = 5000;
  bool no_diag_penalty = false, standardize = false;
};

struct SimArgs {
  Index p = 20, q = 4, k = 2, h = 2, degree = 2, edges = 10, kappa = 0, n = 1000;
  int max_boosts = 100;
  double latent_scale = 0.5;
  std::uint64_t seed = 1;
  bool reference = false;
  std::string out_pop, out_data;
};

struct VerifyArgs {
  std::string pop, n_grid = "2500,5000,10000,20000", out, json_out, variant = "sdr-lvgm";
  int trials = 50, jobs = 1, calib_trials = 20, max_iters = 5000;
  double c = 3.0, gamma = 1.0, delta = 0.55, tol = 1e-6;
  bool calibrate = false;
  std::uint64_t seed = 1;
};

struct DiagArgs {
  std::string pop, out;
  double alpha = 1.0, nu = 0.25, omega_y = 0.1, omega_yx = 0.1, psi = 1.0, n = 0.0;
  int samples = 4;
  std::uint64_t seed = 12345;
};

struct EvalArgs {
  std::string model, data;
};

struct ReportArgs {
  std::string model, compare;
  int top = 10;
  bool as_json = false;
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

std::vector<Index> parse_index_list(const std::string& s) {
  std::vector<Index> out;
  for (const auto& item : parse_name_list(s)) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(item, &pos);
      if (pos != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<Index>(v));
    } catch (const std::exception&) {
      throw InputError("not a positive integer: '" + item + "'");
    }
  }
  if (out.empty()) throw InputError("empty list");
  return out;
}

std::vector<std::string> default_names(char prefix, Index count) {
  std::vector<std::string> out;
  for (Index i = 1; i <= count; ++i) out.push_back(std::string(1, prefix) + std::to_string(i));
  return out;
}

void print_fit_report(const ModelFile& m, std::ostream& os) {
  const FitResult& f = m.fit;
  const Index p = f.theta_hat.p(), q = f.theta_hat.q();
  const ComplexitySummary cs = fit_complexity(f);
  os << "variant: " << variant_name(f.config.variant) << "\n";
  os << "p: " << p << "  q: " << q << "\n";
  if (f.config.variant == Variant::SdrFm) os << "edges: 0 (diagonal D)\n";
  else os << "edges: " << f.edge_count << "\n";
  os << "latent rank: " << f.latent_rank << "\n";
  os << "cross rank: " << f.cross_rank << "\n";
  if (is_column_sparse(f.config.variant)) {
    os << "selected covariates (" << f.column_support.size() << "):";
    for (Index j : f.column_support) os << ' ' << m.column_names[static_cast<std::size_t>(p + j)];
    os << "\n";
  }
  os << "parameters: " << cs.total << " (node " << cs.node_params << ", edge " << cs.edge_params
     << ", latent " << cs.latent_rank_params << ", cross " << cs.cross_rank_params << ")\n";
  os << "objective: " << fmt(f.objective, 17) << "\n";
  os << "converged: " << (f.converged ? "yes" : "no") << " after " << f.iterations << " iterations\n";
}

Standardization standardization_of(const Matrix& data) {
  Standardization s;
  s.mean = data.colwise().mean().transpose();
  s.scale.resize(data.cols());
  for (Index c = 0; c < data.cols(); ++c) {
    const double var = (data.col(c).array() - s.mean(c)).square().sum() / static_cast<double>(data.rows());
    if (!(var > 0.0)) throw InputError("cannot standardize a constant column");
    s.scale(c) = std::sqrt(var);
  }
  return s;
}

int cmd_fit(const FitArgs& a) {
  const CsvTable table = read_csv(a.data);
  const auto ys = parse_name_list(a.responses);
  const auto xs = a.covariates.empty() ? std::vector<std::string>{} : parse_name_list(a.covariates);
  if (ys.empty()) throw InputError("no response columns given");
  std::set<std::string> uniq(ys.begin(), ys.end());
  for (const auto& x : xs)
    if (!uniq.insert(x).second) throw InputError("column '" + x + "' listed twice");
  std::vector<std::string> names = ys;
  names.insert(names.end(), xs.begin(), xs.end());
  Matrix data = table.select(names);
  if (data.rows() < 2) throw InputError("need at least two data rows");
  ModelFile m;
  if (a.standardize) {
    m.standardization = standardization_of(data);
    data = m.standardization.apply(data);
  }
  RegConfig rc;
  try {
    rc.variant = parse_variant(a.model);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  rc.lambda_n = a.lambda;
  rc.gamma = a.gamma;
  rc.delta = a.delta;
  rc.penalize_diagonal = !a.no_diag_penalty;
  SolverOptions opt;
  opt.tol_primal = opt.tol_dual = a.tol;
  opt.max_iters = a.max_iters;
  m.column_names = names;
  m.sigma_n = sample_covariance(data);
  const auto p = static_cast<Index>(ys.size()), q = static_cast<Index>(xs.size());
  m.fit = fit(rc, m.sigma_n, p, q, opt);
  save_model(m, a.out);
  print_fit_report(m, std::cout);
  return m.fit.converged ? kOk : kNotConverged;
}

int cmd_simulate(const SimArgs& a) {
  PopulationSpec spec;
  if (a.reference) {
    spec = reference_population_spec(a.kappa);
  } else {
    spec.p = a.p;
    spec.q = a.q;
    spec.k = a.k;
    spec.h = a.h;
    spec.max_degree = a.degree;
    spec.edges = a.edges;
    spec.kappa = a.kappa;
    spec.seed = a.seed;
  }
  spec.max_boosts = a.max_boosts;
  if (!a.reference) spec.latent_scale = a.latent_scale;
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw ConstructionFailure(e.what());
  }
  const PopulationModel pop = make_population(spec);
  const Matrix data = sample(pop, a.n, a.seed + 1);
  auto names = default_names('y', spec.p);
  const auto xn = default_names('x', spec.q);
  names.insert(names.end(), xn.begin(), xn.end());
  atomic_write(a.out_pop, population_to_json(pop));
  atomic_write(a.out_data, format_csv(names, data));
  const PopulationMetadata& md = pop.meta;
  std::cout << "tau_Y: " << fmt(md.tau_Y) << "\nsigma_Y: " << fmt(md.sigma_Y) << "\nsigma_YX: " << fmt(md.sigma_YX)
            << "\nzeta_YX: " << fmt(md.zeta_YX) << "\ndeg: " << md.deg << "\ninc: " << fmt(md.inc)
            << "\nkappa: " << md.kappa << "\nedges: " << md.edges
            << "\nlambda_min(Theta*): " << fmt(min_eigenvalue(pop.theta_star.matrix())) << "\n";
  return kOk;
}

int cmd_verify(const VerifyArgs& a) {
  const PopulationModel pop = population_from_json(read_text(a.pop));
  const auto grid = parse_index_list(a.n_grid);
  if (a.trials < 1 || a.jobs < 1) throw InputError("trials and jobs must be >= 1");
  RegRule rule;
  try {
    rule.variant = parse_variant(a.variant);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  rule.c = a.c;
  rule.gamma = a.gamma;
  rule.delta = a.delta;
  SolverOptions opt;
  opt.tol_primal = opt.tol_dual = a.tol;
  opt.max_iters = a.max_iters;
  if (a.calibrate) {
    const Index mid = grid[grid.size() / 2];
    const Calibration cal = calibrate(pop, mid, a.calib_trials, rule.variant, {}, opt, nullptr, a.jobs, a.seed + 17);
    rule = cal.rule;
    std::cout << "calibrated at n=" << mid << ": c=" << rule.c << " gamma=" << rule.gamma
              << " delta=" << rule.delta << " (success " << cal.success_rate << ")\n";
  }
  const ExperimentSummary s = run_experiment(pop, grid, a.trials, rule, opt, a.jobs, a.seed);
  std::ostringstream csv;
  write_outcomes_csv(s, csv);
  atomic_write(a.out, csv.str());
  if (!a.json_out.empty()) atomic_write(a.json_out, summary_to_json(s, rule));
  std::cout << std::setw(8) << "n" << std::setw(10) << "success" << std::setw(10) << "support" << std::setw(14)
            << "median_phi" << "\n";
  for (const auto& pt : s.points)
    std::cout << std::setw(8) << pt.n << std::setw(10) << fmt(pt.success_rate, 3) << std::setw(10)
              << fmt(pt.support_rate, 3) << std::setw(14) << fmt(pt.median_phi, 5) << "\n";
  std::cout << "slope: " << (std::isfinite(s.slope) ? fmt(s.slope, 4) : std::string("n/a")) << "\n";
  return kOk;
}

json estimate_json(const Estimate& e) {
  return {{"value", e.value}, {"mode", e.mode}, {"certificate", std::string(certificate_name(e.level))}};
}

json constants_json(const TheoremConstants& c) {
  json j = {{"kind", c.kind == TheoremKind::LowRank ? "low-rank" : "column-sparse"},
            {"m", c.m},
            {"m_bar", c.m_bar},
            {"beta", c.beta},
            {"C1", c.C1},
            {"C2", c.C2},
            {"C_samp", c.C_samp},
            {"lambda_upper", c.lambda_upper},
            {"n_min", c.n_min},
            {"tau_coef", c.tau_coef},
            {"sigmaY_coef", c.sigmaY_coef}};
  if (c.kind == TheoremKind::LowRank) {
    j["C_sigmaY"] = c.C_sigmaY;
    j["C_sigmaYX"] = c.C_sigmaYX;
    j["sigmaYX_coef"] = c.sigmaYX_coef;
  } else {
    j["C_sigma"] = c.C_sigma;
    j["zeta_coef"] = c.zeta_coef;
  }
  return j;
}

int cmd_diagnose(const DiagArgs& a) {
  const PopulationModel pop = population_from_json(read_text(a.pop));
  const bool cs = pop.meta.kappa > 0 && pop.spec.kappa > 0;
  const SubspaceProduct h = SubspaceProduct::at(pop.parts, cs);
  const Matrix sigma = pop.sigma_star();
  SearchOptions so;
  so.seed = a.seed;
  so.restarts = std::max(1, a.samples);
  so.local_starts = 2;
  so.max_sweeps = 40;
  so.min_step = 1e-4;
  json out;
  out["format_version"] = 1;
  const double inc = pop.meta.latent_rank > 0 ? pop.meta.inc : 0.0;
  out["inc"] = inc;
  out["deg"] = pop.meta.deg;
  const MuBounds mu = mu_omega(h.omega, 500, a.seed);
  out["mu"] = {{"upper", mu.upper}, {"lower", mu.lower}, {"exhaustive", mu.exhaustive}};
  if (h.t_Y.rank() > 0) {
    const XiEstimate xi = xi_tangent(h.t_Y, so);
    out["xi"] = {{"bracket_lo", xi.bracket_lo}, {"bracket_hi", xi.bracket_hi}, {"estimate", xi.estimate},
                 {"certificate", "sampled"}};
  }
  const EtaReport eta = eta_quantities(h, sigma, a.omega_y, a.omega_yx, a.samples, so);
  auto eta_json = [](const EtaValues& v) { return json{{"eta1", v.eta1}, {"eta2", v.eta2}, {"eta3", v.eta3}}; };
  out["eta"] = {{"nominal", eta_json(eta.nominal)},
                {"worst", eta_json(eta.worst)},
                {"perturbations", eta.perturbations},
                {"certificate", std::string(certificate_name(eta.level))}};
  const PolyhedralSet v = polyhedral_set_V(a.alpha, a.nu, a.omega_y, a.omega_yx, inc,
                                           static_cast<double>(pop.meta.deg), eta.worst.eta2,
                                           eta.worst.eta1, eta.worst.eta3);
  out["set_V"] = {{"beta", v.beta},
                  {"delta_lo", v.delta_lo},
                  {"delta_hi", v.delta_hi},
                  {"nonempty", v.nonempty},
                  {"failed_hypotheses", v.failed_hypotheses},
                  {"unchecked_hypotheses", v.unchecked_hypotheses}};
  double delta = 1.0, gamma = 1.0;
  if (v.nonempty) {
    delta = std::clamp(1.0, v.delta_lo, v.delta_hi);
    gamma = v.gamma_interval(delta).first;
  }
  out["chi"] = {{"exact", estimate_json(chi_min_gain(h, sigma, delta, gamma, GainMode::ExactFrobenius))},
                {"sampled", estimate_json(chi_min_gain(h, sigma, delta, gamma, GainMode::PhiSampled, so))}};
  try {
    out["varphi"] = {
        {"exact", estimate_json(varphi_irrepresentability(h, sigma, delta, gamma, GainMode::ExactFrobenius))},
        {"sampled", estimate_json(varphi_irrepresentability(h, sigma, delta, gamma, GainMode::PhiSampled, so))}};
  } catch (const DegenerateModel& e) {
    out["varphi"] = {{"error", e.what()}};
  }
  TheoremInputs ti;
  ti.alpha = a.alpha;
  ti.nu = a.nu;
  ti.psi = a.psi;
  ti.delta = delta;
  ti.gamma = gamma;
  ti.deg = static_cast<double>(pop.meta.deg);
  ti.omega_Y = a.omega_y;
  ti.omega_YX = a.omega_yx;
  ti.dim = static_cast<double>(pop.spec.p + pop.spec.q);
  ti.kind = cs ? TheoremKind::ColumnSparse : TheoremKind::LowRank;
  ti.kappa = static_cast<double>(pop.meta.kappa);
  const TheoremConstants tc = theorem_constants(ti);
  json cj = constants_json(tc);
  cj["delta"] = delta;
  cj["gamma"] = gamma;
  if (a.n > 0) {
    const auto [lo, hi] = tc.lambda_range(a.n);
    cj["lambda_range"] = {{"n", a.n}, {"lo", lo}, {"hi", hi}, {"nonempty", lo <= hi}};
  }
  out["theorem"] = cj;
  const std::string text = out.dump(2) + "\n";
  if (!a.out.empty()) atomic_write(a.out, text);
  std::cout << text;
  return kOk;
}

Matrix model_data(const ModelFile& m, const CsvTable& table) {
  return m.standardization.apply(table.select(m.column_names));
}

int cmd_evaluate(const EvalArgs& a) {
  const ModelFile m = load_model(a.model);
  const CsvTable table = read_csv(a.data);
  const Matrix data = model_data(m, table);
  const double ll = predictive_loglik(m.fit, data, m.fit.theta_hat.p(), m.fit.theta_hat.q());
  std::cout << "rows: " << data.rows() << "\n";
  std::cout << (m.fit.theta_hat.q() > 0 ? "mean conditional log-likelihood: " : "mean marginal log-likelihood: ")
            << fmt(ll, 17) << "\n";
  return kOk;
}

// Column space compared across models: the SDR map, or L_Y for covariate-free fits.
Matrix comparison_basis(const FitResult& f) {
  Matrix m;
  if (f.theta_hat.q() > 0 && f.cross_rank > 0) m = sdr_map(f.theta_hat);
  else if (f.latent_rank > 0) m = f.params_hat.l_Y;
  else return Matrix::Zero(f.theta_hat.p(), 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const Index r = numerical_rank(m);
  return svd.matrixU().leftCols(r);
}

int cmd_report(const ReportArgs& a) {
  const ModelFile m = load_model(a.model);
  const FitResult& f = m.fit;
  const Index p = f.theta_hat.p();
  const double recomputed = objective(f.config, f.params_hat, f.theta_hat, m.sigma_n);
  std::vector<std::tuple<double, Index, Index>> edges;
  for (const auto& [i, j] : f.support) edges.emplace_back(f.params_hat.s_Y(i, j), i, j);
  std::stable_sort(edges.begin(), edges.end(),
                   [](const auto& x, const auto& y) { return std::abs(std::get<0>(x)) > std::abs(std::get<0>(y)); });
  const auto& names = m.column_names;
  const ComplexitySummary cs = fit_complexity(f);
  json j = {{"variant", std::string(variant_name(f.config.variant))},
            {"edge_count", f.edge_count},
            {"latent_rank", f.latent_rank},
            {"cross_rank", f.cross_rank},
            {"column_support", f.column_support},
            {"parameters", cs.total},
            {"objective", f.objective},
            {"objective_recomputed", recomputed}};
  json ej = json::array();
  const std::size_t shown = a.top < 0 ? edges.size() : std::min(edges.size(), static_cast<std::size_t>(a.top));
  for (std::size_t k = 0; k < shown; ++k) {
    const auto& [v, i, jj] = edges[k];
    ej.push_back({{"a", names[static_cast<std::size_t>(i)]}, {"b", names[static_cast<std::size_t>(jj)]}, {"value", v}});
  }
  j["edges"] = ej;
  if (!a.compare.empty()) {
    const ModelFile other = load_model(a.compare);
    if (other.fit.theta_hat.p() != p) throw InputError("compared models have different response dimension");
    const Matrix b1 = comparison_basis(f), b2 = comparison_basis(other.fit);
    json angles = json::array();
    if (b1.cols() > 0 && b2.cols() > 0)
      for (double ang : principal_angles(b1, b2)) angles.push_back(ang);
    std::set<std::pair<Index, Index>> e1(f.support.begin(), f.support.end()), e2(other.fit.support.begin(), other.fit.support.end());
    std::size_t common = 0;
    for (const auto& e : e1) common += e2.count(e);
    j["compare"] = {{"principal_angles_deg", angles},
                    {"edges_self", e1.size()},
                    {"edges_other", e2.size()},
                    {"edges_common", common}};
  }
  if (a.as_json) {
    std::cout << j.dump(2) << "\n";
    return kOk;
  }
  print_fit_report(m, std::cout);
  std::cout << "objective (recomputed): " << fmt(recomputed, 17) << "\n";
  std::cout << "strongest edges:\n";
  for (const auto& e : ej)
    std::cout << "  " << e["a"].get<std::string>() << " -- " << e["b"].get<std::string>() << "  "
              << fmt(e["value"].get<double>()) << "\n";
  if (j.contains("compare")) {
    std::cout << "principal angles (deg):";
    for (const auto& ang : j["compare"]["principal_angles_deg"]) std::cout << ' ' << fmt(ang.get<double>(), 6);
    std::cout << "\nedge overlap: " << j["compare"]["edges_common"].get<std::size_t>() << " of "
              << j["compare"]["edges_self"].get<std::size_t>() << " / " << j["compare"]["edges_other"].get<std::size_t>()
              << "\n";
  }
  return kOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"sdrfit: structured Gaussian models with sufficient dimension reduction"};
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "fit a model to a CSV data set");
  fit_cmd->add_option("--model", fa.model, "sdr-fm | sdr-gm | sdr-lvgm | cs-lvgm | cs-gm")->required();
  fit_cmd->add_option("--data", fa.data)->required();
  fit_cmd->add_option("--responses", fa.responses, "names or @file")->required();
  fit_cmd->add_option("--covariates", fa.covariates, "names or @file");
  fit_cmd->add_option("--lambda", fa.lambda)->required()->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--gamma", fa.gamma)->check(CLI::PositiveNumber);
  fit_cmd->add_option("--delta", fa.delta)->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--no-diag-penalty", fa.no_diag_penalty);
  fit_cmd->add_flag("--standardize", fa.standardize);
  fit_cmd->add_option("--tol", fa.tol)->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iters", fa.max_iters)->check(CLI::PositiveNumber);
  fit_cmd->add_option("--out", fa.out)->required();

  SimArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "draw a synthetic population and samples");
  sim_cmd->add_option("--p", sa.p);
  sim_cmd->add_option("--q", sa.q);
  sim_cmd->add_option("--rank-k", sa.k);
  sim_cmd->add_option("--latent-h", sa.h);
  sim_cmd->add_option("--degree", sa.degree, "max off-diagonal neighbours per response");
  sim_cmd->add_option("--edges", sa.edges);
  sim_cmd->add_option("--kappa", sa.kappa, "nonzero covariate columns (0: low-rank cross block)");
  sim_cmd->add_option("--max-boosts", sa.max_boosts, "diagonal boosts allowed to reach positive definiteness")
      ->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--latent-scale", sa.latent_scale, "eigenvalue of the latent block")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--n", sa.n)->required()->check(CLI::Range(2, 100000000));
  sim_cmd->add_option("--seed", sa.seed, "sampling seed; also the population seed unless --reference");
  sim_cmd->add_flag("--reference", sa.reference, "the fixed reference population (keeps --kappa)");
  sim_cmd->add_option("--out-pop", sa.out_pop)->required();
  sim_cmd->add_option("--out-data", sa.out_data)->required();

  VerifyArgs va;
  auto* ver_cmd = app.add_subcommand("verify", "Monte Carlo structural-consistency experiment");
  ver_cmd->add_option("--pop", va.pop)->required();
  ver_cmd->add_option("--n-grid", va.n_grid);
  ver_cmd->add_option("--trials", va.trials);
  ver_cmd->add_option("--jobs", va.jobs);
  ver_cmd->add_option("--out", va.out, "per-trial CSV")->required();
  ver_cmd->add_option("--json", va.json_out, "summary JSON");
  ver_cmd->add_option("--variant", va.variant);
  ver_cmd->add_option("--c", va.c)->check(CLI::PositiveNumber);
  ver_cmd->add_option("--gamma", va.gamma)->check(CLI::PositiveNumber);
  ver_cmd->add_option("--delta", va.delta)->check(CLI::PositiveNumber);
  ver_cmd->add_flag("--calibrate", va.calibrate, "pick c, gamma, delta at the middle n first");
  ver_cmd->add_option("--calib-trials", va.calib_trials);
  ver_cmd->add_option("--tol", va.tol)->check(CLI::PositiveNumber);
  ver_cmd->add_option("--max-iters", va.max_iters)->check(CLI::PositiveNumber);
  ver_cmd->add_option("--seed", va.seed);

  DiagArgs da;
  auto* diag_cmd = app.add_subcommand("diagnose", "identifiability diagnostics of a population");
  diag_cmd->add_option("--pop", da.pop)->required();
  diag_cmd->add_option("--alpha", da.alpha)->check(CLI::PositiveNumber);
  diag_cmd->add_option("--nu", da.nu)->check(CLI::Range(1e-12, 1.0 / 3.0));
  diag_cmd->add_option("--omega-y", da.omega_y)->check(CLI::Range(1e-12, 1.0));
  diag_cmd->add_option("--omega-yx", da.omega_yx)->check(CLI::Range(1e-12, 1.0));
  diag_cmd->add_option("--psi", da.psi)->check(CLI::PositiveNumber);
  diag_cmd->add_option("--n", da.n, "sample size for the admissible lambda range");
  diag_cmd->add_option("--samples", da.samples);
  diag_cmd->add_option("--seed", da.seed);
  diag_cmd->add_option("--out", da.out);

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("evaluate", "mean predictive log-likelihood on a CSV");
  eval_cmd->add_option("--model", ea.model)->required();
  eval_cmd->add_option("--data", ea.data)->required();

  ReportArgs ra;
  auto* rep_cmd = app.add_subcommand("report", "summarize a fitted model");
  rep_cmd->add_option("--model", ra.model)->required();
  rep_cmd->add_option("--compare", ra.compare);
  rep_cmd->add_option("--top", ra.top, "edges to list (-1: all)");
  rep_cmd->add_flag("--json", ra.as_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*fit_cmd) return cmd_fit(fa);
    if (*sim_cmd) return cmd_simulate(sa);
    if (*ver_cmd) return cmd_verify(va);
    if (*diag_cmd) return cmd_diagnose(da);
    if (*eval_cmd) return cmd_evaluate(ea);
    if (*rep_cmd) return cmd_report(ra);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const ConstructionFailure& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kInfeasible;
  } catch (const DegenerateModel& e) {
    std::cerr << "degenerate model: " << e.what() << "\n";
    return kInfeasible;
  }
  return kInputError;
}

}  // namespace sdr::io
