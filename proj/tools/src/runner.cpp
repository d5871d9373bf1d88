#include "heavytail/cli/runner.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <optional>

#include "heavytail/cluster.hpp"
#include "heavytail/error.hpp"
#include "heavytail/limits.hpp"
#include "heavytail/models.hpp"
#include "heavytail/parallel.hpp"
#include "heavytail/regen.hpp"
#include "heavytail/tailstats.hpp"
#include "json.hpp"

namespace heavytail::cli {

using json = nlohmann::ordered_json;

namespace {

// Stream ids of the run stages under the master seed.
enum Stage : std::uint64_t {
  kPath = 1,
  kTailProcess = 2,
  kPilot = 3,
  kTelescoping = 4,
  kClosedForm = 5,
  kExtremal = 6,
  kLdp = 7,
  kTarget = 8,
  kStable = 9,
  kBValues = 10,
  kDrift = 11,
  kRegen = 12,
};

struct Context {
  const ExperimentConfig& cfg;
  OutputSet& out;
  json summary = json::object();
  std::map<std::string, std::uint64_t> streams;

  randkit::RngStream stream(const std::string& stage, Stage id) {
    streams[stage] = id;
    return randkit::derive_stream(cfg.seed, id);
  }
};

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json estimate_json(const cluster::ClusterIndexEstimate& e) {
  return json{{"value", e.value},       {"std_error", e.std_error}, {"jackknife_se", e.jackknife_se},
              {"route", std::string(cluster::to_string(e.route))},  {"horizon", e.horizon},
              {"replicas", e.replicas}, {"skipped", e.skipped}};
}

bool has_closed_form(const models::ModelSpec& spec) { return !std::holds_alternative<models::Garch11Spec>(spec); }

std::vector<Cell> direction_cells(std::size_t index, const cluster::Direction& th) {
  std::vector<Cell> row{static_cast<std::uint64_t>(index)};
  for (Eigen::Index j = 0; j < th.theta().size(); ++j) row.emplace_back(th.theta()[j]);
  return row;
}

std::vector<std::string> direction_columns(std::size_t d) {
  std::vector<std::string> cols{"direction"};
  for (std::size_t j = 0; j < d; ++j) cols.push_back("theta_" + std::to_string(j));
  return cols;
}

// b(theta) by the closed form where one exists, else by the tail process.
cluster::ClusterIndexEstimate b_estimate(const models::ModelSpec& spec, const models::TailSampler& sampler,
                                         const cluster::Direction& theta, double alpha, std::size_t horizon,
                                         std::size_t replicas, const randkit::RngStream& stream) {
  if (has_closed_form(spec)) return cluster::closed_form_cluster_index(spec, theta, replicas, stream);
  return cluster::cluster_index_tail_process(sampler, theta, alpha, horizon, replicas, stream);
}

void run_simulate(Context& ctx) {
  const auto& o = ctx.cfg.simulate;
  const models::PathMatrix path = models::simulate_path(ctx.cfg.model, o.n, o.burn_in, ctx.stream("path", kPath));
  const std::size_t d = path.cols();
  Table t;
  t.columns.push_back("t");
  for (std::size_t j = 0; j < d; ++j) t.columns.push_back("x_" + std::to_string(j));
  for (std::size_t i = 0; i < path.rows(); ++i) {
    std::vector<Cell> row{static_cast<std::uint64_t>(i + 1)};
    for (std::size_t j = 0; j < d; ++j) row.emplace_back(path.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    t.add(std::move(row));
  }
  ctx.out.write("path.csv", t.to_csv());
  ctx.summary["n"] = path.rows();
  ctx.summary["dim"] = d;
  ctx.summary["burn_in_used"] = path.burn_in_used;
  if (path.rows() > 0) ctx.summary["sample_mean"] = vec_json(path.values.colwise().mean().transpose());
}

void run_cluster(Context& ctx) {
  const auto& o = ctx.cfg.cluster;
  const models::ModelSpec& spec = ctx.cfg.model;
  const models::TailProcessSampler sampler(spec, ctx.stream("pilot", kPilot));
  const double alpha = sampler.alpha();
  const std::size_t horizon = o.horizon.value_or(models::default_horizon(spec));
  const std::size_t k = o.telescoping_k != 0 ? o.telescoping_k : std::max<std::size_t>(1, horizon / 2);
  const auto fn = sampler.as_function();
  const auto dirs = cluster::direction_grid(sampler.dim(), o.directions);
  const auto tp_stream = ctx.stream("tail_process", kTailProcess);
  const auto tel_stream = ctx.stream("telescoping", kTelescoping);
  const bool closed = o.closed_form && has_closed_form(spec);
  const auto cf_stream = closed ? ctx.stream("closed_form", kClosedForm) : randkit::RngStream{};
  const auto ex_stream = o.extremal ? ctx.stream("extremal", kExtremal) : randkit::RngStream{};

  Table t;
  t.columns = direction_columns(sampler.dim());
  for (const char* c : {"quantity", "route", "value", "std_error", "jackknife_se", "horizon", "replicas"}) {
    t.columns.emplace_back(c);
  }
  std::vector<double> b_values;
  std::vector<double> theta0_moments;
  json per_dir = json::array();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto& th = dirs[i];
    auto add = [&](const char* quantity, const cluster::ClusterIndexEstimate& e) {
      auto row = direction_cells(i, th);
      row.emplace_back(std::string(quantity));
      row.emplace_back(std::string(cluster::to_string(e.route)));
      row.emplace_back(e.value);
      row.emplace_back(e.std_error);
      row.emplace_back(e.jackknife_se);
      row.emplace_back(static_cast<std::uint64_t>(e.horizon));
      row.emplace_back(static_cast<std::uint64_t>(e.replicas));
      t.add(std::move(row));
    };
    const auto tp = cluster::cluster_index_tail_process(fn, th, alpha, horizon, o.replicas, tp_stream.fork(i));
    add("cluster_index", tp);
    const auto tel = cluster::telescoping_difference(fn, th, alpha, k, o.replicas, tel_stream.fork(i));
    add("cluster_index", tel);
    json entry{{"direction", i}, {"theta", vec_json(th.theta())}, {"tail_process", estimate_json(tp)},
               {"telescoping", estimate_json(tel)}, {"theta0_moment", tp.theta0_moment}};
    if (closed) {
      const auto cf = cluster::closed_form_cluster_index(spec, th, o.replicas, cf_stream.fork(i));
      add("cluster_index", cf);
      entry["closed_form"] = estimate_json(cf);
    }
    if (o.extremal) {
      const auto ex = cluster::extremal_index(fn, th, alpha, horizon, o.replicas, ex_stream.fork(i));
      add("extremal_index", ex);
      entry["extremal_index"] = estimate_json(ex);
    }
    b_values.push_back(std::max(0.0, tp.value));
    theta0_moments.push_back(tp.theta0_moment);
    per_dir.push_back(std::move(entry));
  }
  ctx.out.write("cluster_index.csv", t.to_csv());
  ctx.summary["alpha"] = alpha;
  ctx.summary["horizon"] = horizon;
  ctx.summary["telescoping_k"] = k;
  ctx.summary["theta0_source"] = sampler.theta0_source();
  const cluster::LimitMeasureEvaluator nu(alpha, dirs, b_values);
  ctx.summary["integer_alpha_asymmetric"] = nu.uniqueness_flagged(0.0);
  ctx.summary["directions"] = std::move(per_dir);
}

cluster::Direction ldp_direction(const ExperimentConfig& cfg) {
  const std::size_t d = models::dimension(cfg.model);
  if (cfg.ldp.theta.empty()) return cluster::Direction(Eigen::VectorXd::Unit(static_cast<Eigen::Index>(d), 0));
  if (cfg.ldp.theta.size() != d) throw ParameterError("[ldp-scan] theta must have one entry per dimension");
  return cluster::Direction::normalized(
      Eigen::Map<const Eigen::VectorXd>(cfg.ldp.theta.data(), static_cast<Eigen::Index>(d)));
}

void run_ldp(Context& ctx) {
  const auto& o = ctx.cfg.ldp;
  const models::ModelSpec& spec = ctx.cfg.model;
  const cluster::Direction theta = ldp_direction(ctx.cfg);
  double target = 0.0;
  std::string target_source = "config";
  if (o.target) {
    target = *o.target;
  } else {
    const models::TailProcessSampler sampler(spec, ctx.stream("pilot", kPilot));
    const auto est = b_estimate(spec, sampler.as_function(), theta, sampler.alpha(), models::default_horizon(spec),
                                o.target_replicas, ctx.stream("target", kTarget));
    target = est.value;
    target_source = std::string(cluster::to_string(est.route));
  }
  limits::LdpOptions opts;
  opts.epsilon = o.epsilon;
  opts.c_factor = o.c_factor;
  const auto res = limits::ldp_scan(spec, theta, o.n, o.grid_size, o.replicas, target, ctx.stream("ldp", kLdp), opts);
  Table t;
  t.columns = {"x", "exceedances", "ratio", "ratio_se", "target"};
  for (std::size_t j = 0; j < res.xs.size(); ++j) {
    t.add({res.xs[j], static_cast<std::uint64_t>(res.counts[j]), res.ratios[j], res.ratio_se[j], target});
  }
  ctx.out.write("ldp_scan.csv", t.to_csv());
  ctx.summary["n"] = res.n;
  ctx.summary["theta"] = vec_json(theta.theta());
  ctx.summary["alpha"] = res.alpha;
  ctx.summary["b_n"] = res.b_n;
  ctx.summary["c_n"] = res.c_n;
  ctx.summary["replicas"] = res.replicas;
  ctx.summary["target"] = target;
  ctx.summary["target_source"] = target_source;
  ctx.summary["sup_dev"] = res.sup_dev;
  ctx.summary["max_z"] = res.max_z;
  ctx.summary["tail_constant"] = res.tail_constant;
  ctx.summary["tail_source"] = res.tail_source;
  ctx.summary["centering_source"] = res.centering_source;
  if (o.band) {
    ctx.summary["band"] = *o.band;
    ctx.summary["pass"] = res.sup_dev <= *o.band;
  }
}

void run_stable(Context& ctx) {
  const auto& o = ctx.cfg.stable;
  const models::ModelSpec& spec = ctx.cfg.model;
  double alpha = 0.0;
  try {
    alpha = models::model_alpha(spec);
  } catch (const UnsupportedLawError& e) {
    // Light-tailed noise: the limit is Gaussian, outside the stable regime.
    throw RegimeError(std::string("stable-check needs a regularly varying model: ") + e.what());
  }
  if (!(alpha < 2.0)) {
    throw RegimeError("stable-check needs alpha < 2 (model alpha " + format_double(alpha) + ")");
  }
  const models::TailProcessSampler sampler(spec, ctx.stream("pilot", kPilot));
  const auto fn = sampler.as_function();
  const std::size_t horizon = models::default_horizon(spec);
  const auto dirs = cluster::direction_grid(sampler.dim(), o.directions);
  const auto b_stream = ctx.stream("b_values", kBValues);

  std::vector<limits::StablePair> pairs;
  json dir_json = json::array();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto plus = b_estimate(spec, fn, dirs[i], alpha, horizon, o.b_replicas, b_stream.fork(2 * i));
    const auto minus = b_estimate(spec, fn, -dirs[i], alpha, horizon, o.b_replicas, b_stream.fork(2 * i + 1));
    // E|theta' Theta_0|^alpha = 0: both one-sided constants are set to 0.
    const bool degenerate = plus.theta0_moment + minus.theta0_moment == 0.0;
    limits::StablePair p{dirs[i], degenerate ? 0.0 : std::max(0.0, plus.value),
                         degenerate ? 0.0 : std::max(0.0, minus.value)};
    if (alpha == 1.0 && o.symmetric) {
      const double avg = 0.5 * (p.b_plus + p.b_minus);
      p.b_plus = avg;
      p.b_minus = avg;
    }
    dir_json.push_back(json{{"direction", i},
                            {"theta", vec_json(dirs[i].theta())},
                            {"b_plus", p.b_plus},
                            {"b_minus", p.b_minus},
                            {"b_route", std::string(cluster::to_string(plus.route))},
                            {"degenerate", degenerate}});
    pairs.push_back(std::move(p));
  }
  const auto params = limits::StableLawParams::make(alpha, pairs);
  limits::StableCheckOptions opts;
  opts.grid_points = o.grid_points;
  opts.x_max = o.x_max;
  opts.declared_symmetric = o.symmetric;
  const auto res = limits::stable_check(spec, params, dirs, o.n, o.replicas, ctx.stream("stable", kStable), opts);

  Table t;
  t.columns = direction_columns(sampler.dim());
  for (const char* c : {"x", "empirical_re", "empirical_im", "theoretical_re", "theoretical_im"}) t.columns.emplace_back(c);
  bool all_pass = true;
  for (std::size_t i = 0; i < res.comparisons.size(); ++i) {
    const auto& cmp = res.comparisons[i];
    for (std::size_t j = 0; j < cmp.grid.size(); ++j) {
      auto row = direction_cells(i, cmp.theta);
      row.emplace_back(cmp.grid[j]);
      row.emplace_back(cmp.empirical[j].real());
      row.emplace_back(cmp.empirical[j].imag());
      row.emplace_back(cmp.theoretical[j].real());
      row.emplace_back(cmp.theoretical[j].imag());
      t.add(std::move(row));
    }
    dir_json[i]["sup_abs_gap"] = cmp.sup_abs_gap;
    dir_json[i]["pass"] = cmp.pass;
    all_pass = all_pass && cmp.pass;
  }
  ctx.out.write("stable_check.csv", t.to_csv());
  ctx.summary["alpha"] = alpha;
  ctx.summary["c_alpha"] = params.c_alpha;
  ctx.summary["n"] = o.n;
  ctx.summary["replicas"] = o.replicas;
  ctx.summary["a_n"] = res.a_n;
  ctx.summary["a_n_source"] = res.a_n_source;
  ctx.summary["centering_source"] = res.centering_source;
  ctx.summary["mc_band"] = res.comparisons.empty() ? 0.0 : res.comparisons.front().mc_band;
  ctx.summary["pass"] = all_pass;
  ctx.summary["directions"] = std::move(dir_json);
}

void run_drift(Context& ctx) {
  const auto& o = ctx.cfg.drift;
  const models::ModelSpec& spec = ctx.cfg.model;
  const bool garch = std::holds_alternative<models::Garch11Spec>(spec);
  const auto d = static_cast<Eigen::Index>(garch ? 1 : models::dimension(spec));
  std::vector<models::Vector> grid;
  for (double v : o.grid) grid.push_back(v * models::Vector::Unit(d, 0));
  const auto rep = models::drift_margin(spec, o.p, o.m, grid, ctx.stream("drift", kDrift), o.replicas_per_state);
  Table t;
  t.columns = {"state", "v", "conditional", "conditional_se"};
  for (std::size_t j = 0; j < grid.size(); ++j) {
    t.add({o.grid[j], rep.grid_v[j], rep.conditional[j], rep.conditional_se[j]});
  }
  ctx.out.write("drift.csv", t.to_csv());
  ctx.summary["p"] = rep.p;
  ctx.summary["m"] = rep.m;
  ctx.summary["beta"] = rep.beta;
  ctx.summary["beta_se"] = rep.beta_se;
  ctx.summary["beta_upper"] = rep.beta_upper;
  ctx.summary["intercept"] = rep.intercept;
  ctx.summary["c1"] = rep.c1;
  ctx.summary["c2"] = rep.c2;
  ctx.summary["pass"] = rep.pass;
}

void run_regen(Context& ctx) {
  const auto& o = ctx.cfg.regen;
  const models::ModelSpec& spec = ctx.cfg.model;
  const regen::Minorization m =
      o.atomized ? regen::Minorization::atomized(spec) : regen::Minorization::for_model(spec, o.radius);
  const auto blocks = regen::harvest_blocks(m, o.n, ctx.stream("regen", kRegen), true);
  const std::size_t d = m.dim();
  const auto lengths = blocks.cycle_lengths();

  Table t;
  t.columns = {"cycle", "start", "length"};
  for (std::size_t j = 0; j < d; ++j) t.columns.push_back("block_sum_" + std::to_string(j));
  for (std::size_t i = 0; i < blocks.block_sums.size(); ++i) {
    std::vector<Cell> row{static_cast<std::uint64_t>(i + 1), static_cast<std::uint64_t>(blocks.cycle_starts[i]),
                          lengths[i]};
    for (std::size_t j = 0; j < d; ++j) row.emplace_back(blocks.block_sums[i][static_cast<Eigen::Index>(j)]);
    t.add(std::move(row));
  }
  ctx.out.write("regen_cycles.csv", t.to_csv());

  const double pi_atom = m.epsilon() * blocks.small_set_fraction;
  ctx.summary["n"] = blocks.n;
  ctx.summary["cycles"] = blocks.cycle_count();
  ctx.summary["radius"] = o.atomized ? json("whole_space") : json(m.radius());
  ctx.summary["epsilon"] = m.epsilon();
  ctx.summary["minorization_heuristic"] = !o.atomized;
  ctx.summary["small_set_fraction"] = blocks.small_set_fraction;
  ctx.summary["pi_atom"] = pi_atom;
  ctx.summary["decomposition_exact"] = regen::decomposition_exact(blocks);
  ctx.summary["total"] = vec_json(blocks.total);
  const auto kac = regen::kac_check(blocks, pi_atom);
  ctx.summary["kac"] = json{{"mean_length", kac.mean_length}, {"mean_length_se", kac.mean_length_se},
                            {"expected_length", kac.expected_length}, {"z_score", kac.z_score},
                            {"tail_slope", kac.tail_slope},          {"pass", kac.pass}};
  if (blocks.cycle_count() >= 3) ctx.summary["block_abs_lag1_corr"] = regen::block_abs_lag1_correlation(blocks);

  const auto& law = std::holds_alternative<models::Var1Spec>(spec) ? std::get<models::Var1Spec>(spec).innovation.law
                                                                    : std::get<models::KestenSpec>(spec).b_law;
  if (law.regularly_varying() && blocks.cycle_count() >= 16) {
    std::vector<double> block_norms;
    for (const auto& s : blocks.block_sums) block_norms.push_back(s.norm());
    std::vector<double> x_norms(static_cast<std::size_t>(blocks.observations.rows()));
    for (Eigen::Index i = 0; i < blocks.observations.rows(); ++i) {
      x_norms[static_cast<std::size_t>(i)] = blocks.observations.row(i).norm();
    }
    const auto hb = tailstats::hill_estimate(block_norms);
    const auto hx = tailstats::hill_estimate(x_norms);
    ctx.summary["hill_blocks"] = json{{"alpha_hat", hb.alpha_hat}, {"ci_low", hb.ci_low}, {"ci_high", hb.ci_high}, {"k", hb.k_used}};
    ctx.summary["hill_observations"] =
        json{{"alpha_hat", hx.alpha_hat}, {"ci_low", hx.ci_low}, {"ci_high", hx.ci_high}, {"k", hx.k_used}};
    ctx.summary["hill_overlap"] = tailstats::intervals_overlap(hb, hx);

    const std::size_t k = o.spectral_k != 0
                              ? o.spectral_k
                              : static_cast<std::size_t>(std::sqrt(static_cast<double>(blocks.cycle_count())));
    const auto am = regen::block_spectral_measure(blocks, k);
    Table s;
    s.columns.clear();
    for (std::size_t j = 0; j < d; ++j) s.columns.push_back("s_" + std::to_string(j));
    s.columns.emplace_back("weight");
    for (const auto& a : am.atoms) {
      std::vector<Cell> row;
      for (std::size_t j = 0; j < d; ++j) row.emplace_back(a.direction[static_cast<Eigen::Index>(j)]);
      row.emplace_back(a.weight);
      s.add(std::move(row));
    }
    ctx.out.write("block_spectral.csv", s.to_csv());
  } else if (!law.regularly_varying()) {
    const auto g = limits::gaussian_sigma(blocks, o.batch_size);
    json sig = json::array();
    json bat = json::array();
    for (Eigen::Index i = 0; i < g.sigma_hat.rows(); ++i) {
      sig.push_back(vec_json(g.sigma_hat.row(i).transpose()));
      bat.push_back(vec_json(g.batch_sigma.row(i).transpose()));
    }
    ctx.summary["gaussian_clt"] = json{{"sigma_hat", sig},     {"batch_sigma", bat},
                                       {"rel_gap", g.rel_gap},  {"batch_size", g.batch_size},
                                       {"mean_cycle_length", g.mean_cycle_length}};
  }
}

void run_report(Context& ctx) {
  const models::ModelSpec& spec = ctx.cfg.model;
  Table t;
  t.columns = {"quantity", "value"};
  auto put = [&](const std::string& key, double v) {
    t.add({key, v});
    ctx.summary[key] = v;
  };
  ctx.summary["model"] = models::model_name(spec);
  ctx.summary["dim"] = models::dimension(spec);
  try {
    put("alpha", models::model_alpha(spec));
  } catch (const RegimeError& e) {
    ctx.summary["alpha_error"] = e.what();
  }
  put("contraction_rate", models::contraction_rate(spec));
  put("default_burn_in", static_cast<double>(models::default_burn_in(spec)));
  put("default_horizon", static_cast<double>(models::default_horizon(spec)));
  if (auto c = models::stationary_tail_constant(spec)) put("tail_constant", *c);
  if (auto mu = models::stationary_mean(spec)) {
    for (Eigen::Index j = 0; j < mu->size(); ++j) t.add({"mean_" + std::to_string(j), (*mu)[j]});
    ctx.summary["mean"] = vec_json(*mu);
  }
  ctx.out.write("report.csv", t.to_csv());
}

}  // namespace

std::string version_string() { return "0.3.0"; }

int exit_code_for(const std::exception& e) noexcept {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->is_regime_error() ? 3 : 2;
  return 1;
}

RunManifest run(const ExperimentConfig& config, Command command, const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  OutputSet out(out_dir);
  try {
    Context ctx{config, out, json::object(), {}};
    switch (command) {
      case Command::simulate: run_simulate(ctx); break;
      case Command::cluster_index: run_cluster(ctx); break;
      case Command::ldp_scan: run_ldp(ctx); break;
      case Command::stable_check: run_stable(ctx); break;
      case Command::drift_check: run_drift(ctx); break;
      case Command::regen_check: run_regen(ctx); break;
      case Command::report: run_report(ctx); break;
    }
    json summary = json::object();
    summary["command"] = std::string(to_string(command));
    summary["model"] = models::model_name(config.model);
    summary["seed"] = config.seed;
    for (auto& [k, v] : ctx.summary.items()) summary[k] = v;
    out.write("summary.json", summary.dump(2) + "\n");

    RunManifest m;
    m.command = std::string(to_string(command));
    m.seed = config.seed;
    m.config = config.echo;
    m.artifacts = out.artifacts();
    m.versions = {{"heavytail", version_string()},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"compiler", __VERSION__}};
    m.threads = worker_count();
    m.streams = ctx.streams;
    m.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json mj = json::object();
    mj["command"] = m.command;
    mj["seed"] = m.seed;
    mj["config"] = m.config;
    json files = json::array();
    for (const auto& a : m.artifacts) files.push_back(json{{"file", a.file}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    mj["artifacts"] = files;
    mj["versions"] = m.versions;
    mj["threads"] = m.threads;
    mj["streams"] = m.streams;
    mj["runtime_seconds"] = m.runtime_seconds;
    out.write("manifest.json", mj.dump(2) + "\n");
    return m;
  } catch (...) {
    out.discard();
    throw;
  }
}

}  // namespace heavytail::cli
