// geor2: simulate, fit and report coefficients of determination for
// geostatistical GLMs from site-level CSV files.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "geor2/artifact.hpp"
#include "geor2/csvio.hpp"
#include "geor2/error.hpp"
#include "geor2/glm.hpp"
#include "geor2/lingeo.hpp"
#include "geor2/mcml.hpp"
#include "geor2/posterior.hpp"
#include "geor2/r2engine.hpp"
#include "geor2/report.hpp"
#include "geor2/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace geor2;

namespace {

struct SamplerOpts {
  int burn_in = 10000;
  int thin = 8;
  int samples = 1000;
};

void add_sampler_options(CLI::App* cmd, SamplerOpts& s) {
  cmd->add_option("--burn-in", s.burn_in, "MALA burn-in iterations")->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--thin", s.thin, "keep every thin-th draw")->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--samples", s.samples, "retained draws B")->check(CLI::PositiveNumber)
      ->capture_default_str();
}

json sampler_json(const SamplerOpts& s) {
  return {{"burn_in", s.burn_in}, {"thin", s.thin}, {"samples", s.samples}};
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, const std::string& what) {
  if (!seed) throw InputError(what + " is stochastic and needs --seed");
  return *seed;
}

std::vector<std::string> split_names(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}


std::string config_hash(const json& config) { return fnv1a64_hex(config.dump()); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

fs::path prepare_dir(const std::string& dir) {
  fs::create_directories(dir);
  return fs::path(dir);
}

struct LoadedData {
  Dataset data;
  std::string hash;
};

LoadedData load_data(const std::string& path, const std::vector<std::string>& covariates,
                     const Family& family, bool force_planar) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  LoadedData out{parse_dataset_csv(in, covariates, path), fnv1a64_hex(text)};
  if (!force_planar && looks_like_lonlat(out.data.coords))
    throw InputError("'" + path +
                     "': coordinates look like longitude/latitude; project them to a planar "
                     "system or pass --force-planar");
  validate_dataset(out.data, family);
  return out;
}

void check_artifact_matches(const ModelArtifact& a, const LoadedData& d, const std::string& path) {
  if (a.data_hash != d.hash)
    throw InputError("artifact '" + path + "' was fitted to different data (data_hash " +
                     a.data_hash + ", input " + d.hash + ")");
}

Family artifact_family(const ModelArtifact& a) {
  Family f = family_from_name(a.family);
  if (link_name(f.link) != a.link)
    throw InputError("artifact link '" + a.link + "' does not match family '" + a.family + "'");
  return f;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  int n = 100;
  std::string family = "binomial";
  std::vector<double> bbox{0.0, 0.0, 1.0, 1.0};
  std::vector<double> beta;
  double sigma2 = 1.0;
  double phi = 0.25;
  double tau2 = 0.0;
  std::string trend = "none";
  double trend_scale = 1.0;
  int normal_covariates = 0;
  std::optional<int> m;
  std::vector<int> m_range;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void run_simulate(const SimulateOpts& o) {
  SimSpec spec;
  spec.n = o.n;
  spec.family = family_from_name(o.family);
  spec.xmin = o.bbox[0];
  spec.ymin = o.bbox[1];
  spec.xmax = o.bbox[2];
  spec.ymax = o.bbox[3];
  spec.truth.beta = Eigen::Map<const Eigen::VectorXd>(o.beta.data(),
                                                      static_cast<Eigen::Index>(o.beta.size()));
  spec.truth.cov = CovParams{o.sigma2, o.phi, o.tau2};
  spec.trend = trend_from_name(o.trend);
  spec.trend_scale = o.trend_scale;
  spec.normal_covariates = o.normal_covariates;
  if (!o.m_range.empty()) {
    spec.m_min = o.m_range[0];
    spec.m_max = o.m_range[1];
  } else {
    spec.m_min = spec.m_max = o.m.value_or(1);
  }
  spec.seed = require_seed(o.seed, "simulate");
  const Simulation sim = simulate(spec);

  std::ostringstream csv;
  write_dataset_csv(csv, sim.data);
  const std::string data_text = csv.str();

  json truth;
  truth["n"] = spec.n;
  truth["family"] = o.family;
  truth["link"] = link_name(spec.family.link);
  truth["bbox"] = o.bbox;
  truth["beta"] = o.beta;
  truth["sigma2"] = o.sigma2;
  truth["phi"] = o.phi;
  truth["tau2"] = o.tau2;
  truth["trend"] = std::string(trend_name(spec.trend));
  truth["trend_scale"] = o.trend_scale;
  truth["normal_covariates"] = o.normal_covariates;
  truth["m_range"] = {spec.m_min, spec.m_max};
  truth["covariates"] = sim.data.covariate_names;
  truth["seed"] = spec.seed;
  json config = truth;
  config["command"] = "simulate";
  truth["config_hash"] = config_hash(config);
  truth["data_hash"] = fnv1a64_hex(data_text);
  truth["latent"] = std::vector<double>(sim.latent.data(), sim.latent.data() + sim.latent.size());

  const fs::path dir = prepare_dir(o.out_dir);
  write_text(dir / "data.csv", data_text);
  write_json_file((dir / "truth.json").string(), truth);
  std::cout << "wrote " << (dir / "data.csv").string() << " (" << spec.n << " sites) and "
            << (dir / "truth.json").string() << "\n";
}

// --------------------------------------------------------------------- fit

struct FitOpts {
  std::string data;
  std::string family = "binomial";
  std::string covariates;
  std::optional<std::uint64_t> seed;
  SamplerOpts sampler;
  int max_updates = 5;
  double tolerance = 0.01;
  std::optional<double> sigma2_init;
  std::optional<double> phi_init;
  std::optional<double> fix_sigma2;
  std::optional<double> fix_phi;
  bool force_planar = false;
  std::string out;
};

json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void run_fit(const FitOpts& o) {
  const Family family = family_from_name(o.family);
  const std::vector<std::string> covs = split_names(o.covariates);
  const LoadedData loaded = load_data(o.data, covs, family, o.force_planar);
  const Dataset& data = loaded.data;

  ModelArtifact a;
  a.family = family.name();
  a.link = link_name(family.link);
  a.covariates = data.covariate_names;
  json config{{"command", "fit"}, {"family", a.family}, {"covariates", a.covariates},
              {"data_hash", loaded.hash}};

  if (family.kind == FamilyKind::gaussian) {
    const LinearMlFit fit = fit_linear_ml(data);
    a.method = "linear_ml";
    a.params = GlgmParams{fit.beta, fit.cov};
    const Eigen::Index p = fit.beta.size();
    for (Eigen::Index j = 0; j < p; ++j) {
      a.parameter_names.push_back(j == 0 ? "(intercept)" : data.covariate_names[j - 1]);
      a.estimates.push_back(fit.beta(j));
      a.std_errors.push_back(fit.beta_se(j));
      a.ci95.push_back({fit.beta(j) - 1.96 * fit.beta_se(j), fit.beta(j) + 1.96 * fit.beta_se(j)});
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [name, value] : {std::pair{"sigma2", fit.cov.sigma2},
                                      std::pair{"phi", fit.cov.phi}, std::pair{"tau2", fit.cov.tau2}}) {
      a.parameter_names.push_back(name);
      a.estimates.push_back(value);
      a.std_errors.push_back(nan);
      a.ci95.push_back({nan, nan});
    }
    a.diagnostics = {{"log_likelihood", fit.log_likelihood},
                     {"converged", fit.converged},
                     {"evaluations", fit.evaluations}};
    a.seed = o.seed.value_or(0);
  } else if (family.kind == FamilyKind::binomial) {
    McmlSchedule schedule;
    schedule.sampler = {o.sampler.burn_in, o.sampler.thin, o.sampler.samples,
                        require_seed(o.seed, "fit with the binomial family")};
    schedule.max_reference_updates = o.max_updates;
    schedule.tolerance = o.tolerance;
    schedule.fixed_sigma2 = o.fix_sigma2;
    schedule.fixed_phi = o.fix_phi;
    GlgmParams init = default_init(data, family);
    if (o.sigma2_init) init.cov.sigma2 = *o.sigma2_init;
    if (o.phi_init) init.cov.phi = *o.phi_init;

    const McmlFit fit = fit_mcml(data, family, init, schedule);
    a.method = "mcml";
    a.params = fit.params;
    a.parameter_names = fit.parameter_names;
    a.estimates.assign(fit.estimates.data(), fit.estimates.data() + fit.estimates.size());
    a.std_errors.assign(fit.std_errors.data(), fit.std_errors.data() + fit.std_errors.size());
    a.ci95 = fit.ci95;
    a.seed = schedule.sampler.seed;
    json splits = json::array();
    for (const auto& split : fit.splits) {
      json row = json::array();
      for (const bool absorbed : split) row.push_back(absorbed ? "latent" : "likelihood");
      splits.push_back(row);
    }
    a.diagnostics = {{"converged", fit.converged},
                     {"reference_updates", fit.reference_updates},
                     {"parameter_changes", fit.parameter_changes},
                     {"acceptance_rates", fit.acceptance_rates},
                     {"coefficient_splits", splits},
                     {"relative_likelihood_at_optimum", fit.relative_likelihood_at_optimum},
                     {"mc_samples_used", fit.mc_samples_used},
                     {"hessian_condition", fit.hessian_condition},
                     {"init", {{"beta", vector_json(init.beta)},
                               {"sigma2", init.cov.sigma2},
                               {"phi", init.cov.phi}}}};
    a.schedule = sampler_json(o.sampler);
    a.schedule["max_reference_updates"] = o.max_updates;
    a.schedule["tolerance"] = o.tolerance;
    a.schedule["fixed_sigma2"] = o.fix_sigma2 ? json(*o.fix_sigma2) : json(nullptr);
    a.schedule["fixed_phi"] = o.fix_phi ? json(*o.fix_phi) : json(nullptr);
    config["schedule"] = a.schedule;
    config["seed"] = a.seed;
    config["init"] = a.diagnostics["init"];
    if (!fit.converged)
      std::cerr << "geor2: warning: reference point still moving after " << fit.reference_updates
                << " updates (last change " << fit.parameter_changes.back() << ")\n";
  } else {
    throw DomainError("fit supports the binomial (logit) and gaussian (identity) families; got '" +
                      a.family + "'");
  }

  a.data_hash = loaded.hash;
  a.config_hash = config_hash(config);
  const fs::path out(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_json_file(out.string(), artifact_to_json(a));
  std::cout << "wrote " << out.string() << " (" << a.method << ")\n";
  for (std::size_t k = 0; k < a.parameter_names.size(); ++k)
    std::cout << "  " << a.parameter_names[k] << " = " << format_double(a.estimates[k]) << "\n";
}

// --------------------------------------------------------------- r2 / se

struct ModelInput {
  ModelArtifact artifact;
  Family family;
  LoadedData data;
};

ModelInput load_model(const std::string& artifact_path, const std::string& data_path,
                      bool force_planar) {
  ModelArtifact a = load_artifact(artifact_path);
  Family f = artifact_family(a);
  LoadedData d = load_data(data_path, a.covariates, f, force_planar);
  check_artifact_matches(a, d, artifact_path);
  return {std::move(a), f, std::move(d)};
}

PosteriorDraws draw(const ModelInput& m, const SamplerOpts& s, std::uint64_t seed) {
  return sample_posterior(m.data.data, m.family, m.artifact.params,
                          SamplerSchedule{s.burn_in, s.thin, s.samples, seed});
}

struct R2Opts {
  std::string data;
  std::string artifact;
  std::string artifact_without;
  std::optional<std::uint64_t> seed;
  SamplerOpts sampler;
  bool force_planar = false;
  std::string out_dir;
};

void run_r2(const R2Opts& o) {
  const ModelInput with = load_model(o.artifact, o.data, o.force_planar);
  std::optional<ModelInput> without;
  if (!o.artifact_without.empty()) {
    without = load_model(o.artifact_without, o.data, o.force_planar);
    if (without->artifact.family != with.artifact.family)
      throw InputError("the two artifacts use different families");
    if (!without->artifact.covariates.empty())
      throw InputError("--artifact-without must be an intercept-only fit");
  }
  const Dataset& data = with.data.data;
  const Family& family = with.family;
  const bool closed_form = family.kind == FamilyKind::gaussian;

  R2Report report;
  report.r2_glm = r2_glm(data, family, fit_glm(data, family));
  json config{{"command", "r2"},
              {"data_hash", with.data.hash},
              {"artifact", with.artifact.config_hash},
              {"artifact_without", without ? json(without->artifact.config_hash) : json(nullptr)}};

  if (closed_form) {
    // Expected residual variation is exact for the linear model.
    const GlgmParams& p = with.artifact.params;
    report.r2_glgm = r2_linear_glgm(data, p.beta, p.cov);
    report.r2_glgm_mc_se = 0.0;
    if (without) {
      const GlgmParams& q = without->artifact.params;
      const double e_with = linear_posterior(data, p.beta, p.cov).expected_total_variation;
      const double e_without =
          linear_posterior(data.intercept_only(), q.beta, q.cov).expected_total_variation;
      if (!(e_without > 0.0))
        throw UndefinedR2Error("partial R2 undefined: zero expected variation without covariates");
      report.partial_r2 = 1.0 - e_with / e_without;
      report.partial_r2_mc_se = 0.0;
    }
    report.B = 0;
    report.seed = o.seed.value_or(0);
  } else {
    const std::uint64_t seed = require_seed(o.seed, "r2");
    const PosteriorDraws draws = draw(with, o.sampler, seed);
    const R2Estimate r2 = r2_glgm_mc(data, family, with.artifact.params, draws);
    report.r2_glgm = r2.value;
    report.r2_glgm_mc_se = r2.mc_se;
    if (without) {
      // Same seed for both chains, so identical models give identical draws.
      const PosteriorDraws draws0 = draw(*without, o.sampler, seed);
      const R2Estimate pr =
          partial_r2(data, family, with.artifact.params, draws, without->artifact.params, draws0);
      report.partial_r2 = pr.value;
      report.partial_r2_mc_se = pr.mc_se;
    }
    report.B = o.sampler.samples;
    report.seed = seed;
    config["sampler"] = sampler_json(o.sampler);
  }
  config["seed"] = report.seed;
  const std::string hash = config_hash(config);

  const fs::path dir = prepare_dir(o.out_dir);
  json j = r2_report_json(report, with.artifact.family, hash);
  write_json_file((dir / "r2_report.json").string(), j);
  std::ostringstream csv;
  write_r2_report_csv(csv, report, hash);
  write_text(dir / "r2_report.csv", csv.str());

  std::cout << "R2_GLM  = " << format_double(report.r2_glm) << "\n"
            << "R2_GLGM = " << format_double(report.r2_glgm);
  if (report.r2_glgm_mc_se) std::cout << " (mc_se " << format_double(*report.r2_glgm_mc_se) << ")";
  std::cout << "\n";
  if (report.partial_r2) {
    std::cout << "partial R2_GLGM = " << format_double(*report.partial_r2);
    if (report.partial_r2_mc_se)
      std::cout << " (mc_se " << format_double(*report.partial_r2_mc_se) << ")";
    std::cout << "\n";
  }
  std::cout << "wrote " << (dir / "r2_report.json").string() << " and "
            << (dir / "r2_report.csv").string() << "\n";
}

struct SeOpts {
  std::string data;
  std::string artifact_with;
  std::string artifact_without;
  std::optional<std::uint64_t> seed;
  SamplerOpts sampler;
  bool force_planar = false;
  std::string out_dir;
};

void run_se_compare(const SeOpts& o) {
  const ModelInput with = load_model(o.artifact_with, o.data, o.force_planar);
  const ModelInput without = load_model(o.artifact_without, o.data, o.force_planar);
  if (with.artifact.family != without.artifact.family)
    throw InputError("the two artifacts use different families");
  const std::uint64_t seed = require_seed(o.seed, "se-compare");

  const PosteriorDraws draws_with = draw(with, o.sampler, seed);
  const PosteriorDraws draws_without = draw(without, o.sampler, seed);
  const Eigen::VectorXd se_with =
      prevalence_se(with.data.data, with.family, with.artifact.params, draws_with);
  const Eigen::VectorXd se_without =
      prevalence_se(without.data.data, without.family, without.artifact.params, draws_without);
  const SeComparison cmp = compare_se(with.data.data, se_without, se_with);

  const json config{{"command", "se-compare"},
                    {"data_hash", with.data.hash},
                    {"artifact_with", with.artifact.config_hash},
                    {"artifact_without", without.artifact.config_hash},
                    {"sampler", sampler_json(o.sampler)},
                    {"seed", seed}};
  const std::string hash = config_hash(config);

  const fs::path dir = prepare_dir(o.out_dir);
  std::ostringstream se_csv, points_csv;
  write_se_compare_csv(se_csv, cmp);
  write_prevalence_points_csv(points_csv, with.data.data);
  write_text(dir / "se_compare.csv", se_csv.str());
  write_text(dir / "prevalence_points.csv", points_csv.str());
  // The CSV layouts are fixed, so provenance goes in a sidecar.
  const json meta{{"config_hash", hash},
                  {"seed", seed},
                  {"B", o.sampler.samples},
                  {"sites", cmp.sites.size()},
                  {"max_relative_reduction", cmp.max_relative_reduction},
                  {"fraction_not_larger", cmp.fraction_not_larger},
                  {"acceptance_rate_with", draws_with.acceptance_rate},
                  {"acceptance_rate_without", draws_without.acceptance_rate},
                  {"files", {"se_compare.csv", "prevalence_points.csv"}}};
  write_json_file((dir / "se_compare_run.json").string(), meta);

  std::cout << "se_with <= se_without at " << format_double(100.0 * cmp.fraction_not_larger)
            << "% of sites; largest relative reduction "
            << format_double(100.0 * cmp.max_relative_reduction) << "%\n"
            << "wrote " << (dir / "se_compare.csv").string() << ", "
            << (dir / "prevalence_points.csv").string() << " and "
            << (dir / "se_compare_run.json").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geor2: coefficients of determination for geostatistical GLMs"};
  app.require_subcommand(1);

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "simulate a georeferenced dataset");
  c_sim->add_option("--n", sim.n, "number of sites")->capture_default_str();
  c_sim->add_option("--family", sim.family, "binomial, poisson or gaussian")->capture_default_str();
  c_sim->add_option("--bbox", sim.bbox, "xmin,ymin,xmax,ymax")->delimiter(',')->expected(4)
      ->capture_default_str();
  c_sim->add_option("--beta", sim.beta, "coefficients, intercept first (use --beta=-2,1)")
      ->delimiter(',')->required();
  c_sim->add_option("--sigma2", sim.sigma2, "latent variance (0 disables the field)")
      ->capture_default_str();
  c_sim->add_option("--phi", sim.phi, "exponential range")->capture_default_str();
  c_sim->add_option("--tau2", sim.tau2, "nugget (gaussian only)")->capture_default_str();
  c_sim->add_option("--trend", sim.trend, "none, planar or normal")->capture_default_str();
  c_sim->add_option("--trend-scale", sim.trend_scale, "planar covariates = scale * coordinates")
      ->capture_default_str();
  c_sim->add_option("--normal-covariates", sim.normal_covariates, "count for --trend normal")
      ->capture_default_str();
  auto* m_opt = c_sim->add_option("--m", sim.m, "binomial denominator for every site");
  c_sim->add_option("--m-range", sim.m_range, "lo,hi: denominators uniform on the integers")
      ->delimiter(',')->expected(2)->excludes(m_opt);
  c_sim->add_option("--seed", sim.seed, "random seed")->required();
  c_sim->add_option("--out-dir", sim.out_dir, "output directory")->required();
  c_sim->callback([&] { run_simulate(sim); });

  FitOpts fit;
  auto* c_fit = app.add_subcommand("fit", "fit a geostatistical GLM");
  c_fit->add_option("--data", fit.data, "site CSV")->required()->check(CLI::ExistingFile);
  c_fit->add_option("--family", fit.family, "binomial or gaussian")->capture_default_str();
  c_fit->add_option("--covariates", fit.covariates, "comma-separated covariate columns");
  c_fit->add_option("--seed", fit.seed, "random seed (binomial)");
  add_sampler_options(c_fit, fit.sampler);
  c_fit->add_option("--max-updates", fit.max_updates, "reference-point updates")
      ->check(CLI::PositiveNumber)->capture_default_str();
  c_fit->add_option("--tolerance", fit.tolerance, "stop when the parameter change is below this")
      ->capture_default_str();
  c_fit->add_option("--sigma2-init", fit.sigma2_init, "initial sigma2 (default 1)");
  c_fit->add_option("--phi-init", fit.phi_init, "initial phi (default: diagonal / 4)");
  c_fit->add_option("--fix-sigma2", fit.fix_sigma2, "hold sigma2 fixed");
  c_fit->add_option("--fix-phi", fit.fix_phi, "hold phi fixed");
  c_fit->add_flag("--force-planar", fit.force_planar, "accept lon/lat-looking coordinates");
  c_fit->add_option("--out", fit.out, "model artifact JSON")->required();
  c_fit->callback([&] { run_fit(fit); });

  R2Opts r2;
  auto* c_r2 = app.add_subcommand("r2", "coefficients of determination for a fitted model");
  c_r2->add_option("--data", r2.data, "site CSV")->required()->check(CLI::ExistingFile);
  c_r2->add_option("--artifact", r2.artifact, "fitted model")->required()->check(CLI::ExistingFile);
  c_r2->add_option("--artifact-without", r2.artifact_without,
                   "intercept-only fit, enables partial R2")->check(CLI::ExistingFile);
  c_r2->add_option("--seed", r2.seed, "random seed");
  add_sampler_options(c_r2, r2.sampler);
  c_r2->add_flag("--force-planar", r2.force_planar, "accept lon/lat-looking coordinates");
  c_r2->add_option("--out-dir", r2.out_dir, "output directory")->required();
  c_r2->callback([&] { run_r2(r2); });

  SeOpts se;
  auto* c_se = app.add_subcommand("se-compare", "per-site prediction standard errors of two fits");
  c_se->add_option("--data", se.data, "site CSV")->required()->check(CLI::ExistingFile);
  c_se->add_option("--artifact-with", se.artifact_with, "fit with covariates")->required()
      ->check(CLI::ExistingFile);
  c_se->add_option("--artifact-without", se.artifact_without, "fit without covariates")
      ->required()->check(CLI::ExistingFile);
  c_se->add_option("--seed", se.seed, "random seed");
  add_sampler_options(c_se, se.sampler);
  c_se->add_flag("--force-planar", se.force_planar, "accept lon/lat-looking coordinates");
  c_se->add_option("--out-dir", se.out_dir, "output directory")->required();
  c_se->callback([&] { run_se_compare(se); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "geor2: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "geor2: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
