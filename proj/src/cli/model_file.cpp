#include <json.hpp>

#include "sdr/io/cli.hpp"

namespace sdr::io {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json dense(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Matrix read_dense(const json& j, Index rows, Index cols, const char* what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    throw InputError(std::string("model file: ") + what + " has wrong row count");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& r = j[static_cast<std::size_t>(i)];
    if (!r.is_array() || static_cast<Index>(r.size()) != cols)
      throw InputError(std::string("model file: ") + what + " has wrong column count");
    for (Index c = 0; c < cols; ++c) m(i, c) = r[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

json vec(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector read_vec(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

// L = F F' with F of exact rank r.
Matrix latent_factors(const Matrix& l, Index rank) {
  if (rank == 0 || l.size() == 0) return Matrix::Zero(l.rows(), 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (l + l.transpose()));
  const Index p = l.rows();
  Matrix f(p, rank);
  for (Index k = 0; k < rank; ++k) {
    const Index idx = p - 1 - k;
    f.col(k) = es.eigenvectors().col(idx) * std::sqrt(std::max(0.0, es.eigenvalues()(idx)));
  }
  return f;
}

void check_version(const json& j) {
  if (!j.contains("format_version") || j["format_version"].get<int>() != kFormatVersion)
    throw InputError("unsupported or missing format_version");
}

json spec_json(const PopulationSpec& s) {
  return {{"p", s.p},
          {"q", s.q},
          {"k", s.k},
          {"h", s.h},
          {"max_degree", s.max_degree},
          {"edges", s.edges},
          {"kappa", s.kappa},
          {"s_offdiag", {s.s_offdiag.lo, s.s_offdiag.hi}},
          {"s_diag", s.s_diag},
          {"latent_scale", s.latent_scale},
          {"cross_singular", {s.cross_singular.lo, s.cross_singular.hi}},
          {"x_offdiag", s.x_offdiag},
          {"x_margin", s.x_margin},
          {"diag_boost", s.diag_boost},
          {"max_boosts", s.max_boosts},
          {"min_eigenvalue", s.min_eigenvalue},
          {"seed", s.seed}};
}

PopulationSpec spec_from(const json& j) {
  PopulationSpec s;
  s.p = j.at("p").get<Index>();
  s.q = j.at("q").get<Index>();
  s.k = j.at("k").get<Index>();
  s.h = j.at("h").get<Index>();
  s.max_degree = j.at("max_degree").get<Index>();
  s.edges = j.at("edges").get<Index>();
  s.kappa = j.at("kappa").get<Index>();
  s.s_offdiag = {j.at("s_offdiag")[0].get<double>(), j.at("s_offdiag")[1].get<double>()};
  s.s_diag = j.at("s_diag").get<double>();
  s.latent_scale = j.at("latent_scale").get<double>();
  s.cross_singular = {j.at("cross_singular")[0].get<double>(), j.at("cross_singular")[1].get<double>()};
  s.x_offdiag = j.at("x_offdiag").get<double>();
  s.x_margin = j.at("x_margin").get<double>();
  s.diag_boost = j.at("diag_boost").get<double>();
  s.max_boosts = j.at("max_boosts").get<int>();
  s.min_eigenvalue = j.at("min_eigenvalue").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace

std::string model_to_json(const ModelFile& m) {
  const FitResult& f = m.fit;
  const Index p = f.theta_hat.p(), q = f.theta_hat.q();
  json s_triplets = json::array();
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i <= j; ++i)
      if (f.params_hat.s_Y(i, j) != 0.0) s_triplets.push_back({i, j, f.params_hat.s_Y(i, j)});
  json support = json::array();
  for (const auto& [i, j] : f.support) support.push_back({i, j});
  json doc = {
      {"format_version", kFormatVersion},
      {"variant", std::string(variant_name(f.config.variant))},
      {"p", p},
      {"q", q},
      {"column_names", m.column_names},
      {"lambda_n", f.config.lambda_n},
      {"gamma", f.config.gamma},
      {"delta", f.config.delta},
      {"penalize_diagonal", f.config.penalize_diagonal},
      {"relaxed_latent", f.config.relaxed_latent},
      {"theta_hat", dense(f.theta_hat.matrix())},
      {"s_Y", s_triplets},
      {"l_Y_factors", dense(latent_factors(f.params_hat.l_Y, f.latent_rank))},
      {"theta_YX", dense(f.params_hat.theta_YX)},
      {"theta_X", dense(f.params_hat.theta_X)},
      {"sigma_n", dense(m.sigma_n)},
      {"ranks", {{"latent", f.latent_rank}, {"cross", f.cross_rank}}},
      {"support", support},
      {"column_support", f.column_support},
      {"edge_count", f.edge_count},
      {"objective", f.objective},
      {"solver", {{"iterations", f.iterations}, {"converged", f.converged}, {"final_rho", f.final_rho}}},
  };
  if (m.standardization.active())
    doc["standardization"] = {{"mean", vec(m.standardization.mean)}, {"scale", vec(m.standardization.scale)}};
  return doc.dump(2) + "\n";
}

ModelFile model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("model file is not valid JSON: ") + e.what());
  }
  check_version(j);
  try {
    ModelFile m;
    FitResult& f = m.fit;
    const Index p = j.at("p").get<Index>(), q = j.at("q").get<Index>();
    f.config.variant = parse_variant(j.at("variant").get<std::string>());
    f.config.lambda_n = j.at("lambda_n").get<double>();
    f.config.gamma = j.at("gamma").get<double>();
    f.config.delta = j.at("delta").get<double>();
    f.config.penalize_diagonal = j.at("penalize_diagonal").get<bool>();
    f.config.relaxed_latent = j.value("relaxed_latent", false);
    m.column_names = j.at("column_names").get<std::vector<std::string>>();
    if (static_cast<Index>(m.column_names.size()) != p + q)
      throw InputError("model file: column_names length differs from p + q");
    f.theta_hat = JointPrecision(read_dense(j.at("theta_hat"), p + q, p + q, "theta_hat"), p, q);
    if (!f.theta_hat.is_positive_definite()) throw InputError("model file: theta_hat is not positive definite");
    f.params_hat = StructuredParams::zeros(p, q);
    for (const auto& t : j.at("s_Y")) {
      const Index a = t.at(0).get<Index>(), b = t.at(1).get<Index>();
      if (a < 0 || b < 0 || a >= p || b >= p) throw InputError("model file: s_Y index out of range");
      f.params_hat.s_Y(a, b) = f.params_hat.s_Y(b, a) = t.at(2).get<double>();
    }
    const json& fj = j.at("l_Y_factors");
    const Index r = fj.empty() ? 0 : static_cast<Index>(fj[0].size());
    const Matrix factors = read_dense(fj, fj.empty() ? 0 : p, r, "l_Y_factors");
    if (r > 0) f.params_hat.l_Y = factors * factors.transpose();
    f.params_hat.theta_YX = read_dense(j.at("theta_YX"), p, q, "theta_YX");
    f.params_hat.theta_X = read_dense(j.at("theta_X"), q, q, "theta_X");
    m.sigma_n = read_dense(j.at("sigma_n"), p + q, p + q, "sigma_n");
    f.latent_rank = j.at("ranks").at("latent").get<Index>();
    f.cross_rank = j.at("ranks").at("cross").get<Index>();
    if (f.latent_rank != r) throw InputError("model file: latent rank differs from factor width");
    f.objective = j.at("objective").get<double>();
    f.iterations = j.at("solver").at("iterations").get<int>();
    f.converged = j.at("solver").at("converged").get<bool>();
    f.final_rho = j.at("solver").at("final_rho").get<double>();
    const Index declared_rank = f.cross_rank;
    extract_structure(f);
    f.latent_rank = r;
    f.cross_rank = declared_rank;
    std::vector<std::pair<Index, Index>> declared;
    for (const auto& e : j.at("support")) declared.emplace_back(e.at(0).get<Index>(), e.at(1).get<Index>());
    if (declared != f.support) throw InputError("model file: s_Y triplets disagree with declared support");
    if (j.contains("standardization")) {
      m.standardization.mean = read_vec(j["standardization"].at("mean"));
      m.standardization.scale = read_vec(j["standardization"].at("scale"));
    }
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
}

void save_model(const ModelFile& model, const std::string& path) { atomic_write(path, model_to_json(model)); }

ModelFile load_model(const std::string& path) { return model_from_json(read_text(path)); }

std::string population_to_json(const PopulationModel& pop) {
  const PopulationMetadata& md = pop.meta;
  json doc = {{"format_version", kFormatVersion},
              {"spec", spec_json(pop.spec)},
              {"s_Y", dense(pop.parts.s_Y)},
              {"l_Y", dense(pop.parts.l_Y)},
              {"theta_YX", dense(pop.parts.theta_YX)},
              {"theta_X", dense(pop.parts.theta_X)},
              {"boosts_used", pop.boosts_used},
              {"metadata",
               {{"tau_Y", md.tau_Y},
                {"sigma_Y", md.sigma_Y},
                {"sigma_YX", md.sigma_YX},
                {"zeta_YX", md.zeta_YX},
                {"deg", md.deg},
                {"inc", md.inc},
                {"kappa", md.kappa},
                {"latent_rank", md.latent_rank},
                {"cross_rank", md.cross_rank},
                {"edges", md.edges},
                {"min_eigenvalue", min_eigenvalue(pop.theta_star.matrix())}}}};
  return doc.dump(2) + "\n";
}

PopulationModel population_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("population file is not valid JSON: ") + e.what());
  }
  check_version(j);
  try {
    PopulationModel pop;
    pop.spec = spec_from(j.at("spec"));
    const Index p = pop.spec.p, q = pop.spec.q;
    pop.parts.s_Y = read_dense(j.at("s_Y"), p, p, "s_Y");
    pop.parts.l_Y = read_dense(j.at("l_Y"), p, p, "l_Y");
    pop.parts.theta_YX = read_dense(j.at("theta_YX"), p, q, "theta_YX");
    pop.parts.theta_X = read_dense(j.at("theta_X"), q, q, "theta_X");
    pop.boosts_used = j.value("boosts_used", 0);
    pop.theta_star = JointPrecision(assemble(pop.parts), p, q);
    if (!pop.theta_star.is_positive_definite()) throw InputError("population precision is not positive definite");
    pop.meta = describe(pop.parts);
    return pop;
  } catch (const json::exception& e) {
    throw InputError(std::string("population file: ") + e.what());
  }
}

std::string summary_to_json(const ExperimentSummary& s, const RegRule& rule) {
  json pts = json::array();
  for (const auto& pt : s.points)
    pts.push_back({{"n", pt.n},
                   {"trials", pt.trials},
                   {"success_rate", pt.success_rate},
                   {"support_rate", pt.support_rate},
                   {"converged_rate", pt.converged_rate},
                   {"mean_phi_error", pt.mean_phi},
                   {"median_phi_error", pt.median_phi}});
  json doc = {{"format_version", kFormatVersion},
              {"rule",
               {{"variant", std::string(variant_name(rule.variant))},
                {"c", rule.c},
                {"gamma", rule.gamma},
                {"delta", rule.delta},
                {"penalize_diagonal", rule.penalize_diagonal}}},
              {"n_grid", s.n_grid},
              {"trials", s.trials},
              {"points", pts},
              {"slope", std::isfinite(s.slope) ? json(s.slope) : json(nullptr)},
              // wall time is the only run-dependent field
              {"metadata", {{"wall_seconds", s.wall_seconds}}}};
  return doc.dump(2) + "\n";
}

}  // namespace sdr::io
