// remage: command-line front end for the RHT/REM toolkit.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "remage/conditions.hpp"
#include "remage/experiment.hpp"
#include "remage/hypercube.hpp"
#include "remage/limits.hpp"
#include "remage/parallel.hpp"
#include "remage/trap.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace remage;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool need_config) {
  auto* opt = app->add_option("--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  if (need_config) opt->required();
  app->add_option("--seed", c.seed, "override master_seed");
  app->add_option("--threads", c.threads, "worker threads (default: REMAGE_THREADS or hardware)");
  app->add_option("--out", c.out, "output directory or file");
}

void apply_threads(const Common& c) {
  if (c.threads > 0) set_thread_count(c.threads);
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot write " + out);
  os << text;
}

int run_config(const Common& c, std::optional<ExperimentKind> only) {
  apply_threads(c);
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.master_seed = *c.seed;
  if (!c.out.empty()) cfg.output = c.out;
  if (only) {
    for (const auto& e : cfg.experiments)
      if (e.kind != *only)
        throw ConfigError("experiment '" + e.name + "' has the wrong kind for this subcommand");
  }
  const RunResult r = run(cfg);
  std::cerr << "wrote " << r.rows.size() << " estimate rows to " << r.output_dir.string() << "\n";
  if (r.failed) {
    std::cerr << "error: " << r.error << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random hopping time dynamics of the REM: simulation and checks"};
  app.require_subcommand(1);

  Common sim, cond, lim, cmp, summ, walk;

  auto* simulate = app.add_subcommand("simulate", "run every experiment in a config");
  add_common(simulate, sim, true);

  auto* conditions = app.add_subcommand("conditions", "run condition checks (config or direct flags)");
  add_common(conditions, cond, false);
  int c_n = 12;
  double c_beta = 1.0, c_eps = 0.5, c_t = 1.0;
  std::vector<double> c_u{0.5, 1.0, 2.0}, c_delta{0.1};
  std::size_t c_skel = 200;
  bool c_samples = false;
  conditions->add_option("--n", c_n, "cube dimension");
  conditions->add_option("--beta", c_beta, "inverse temperature");
  conditions->add_option("--eps", c_eps, "scale exponent");
  conditions->add_option("--t", c_t, "time horizon");
  conditions->add_option("--u", c_u, "u grid");
  conditions->add_option("--delta", c_delta, "delta grid for the small-jump check");
  conditions->add_option("--skeletons", c_skel, "number of skeletons");
  conditions->add_flag("--samples", c_samples, "include per-skeleton samples in the JSON");

  auto* limits = app.add_subcommand("limits", "limit objects");
  limits->require_subcommand(1);
  auto* l_asl = limits->add_subcommand("asl", "generalized arcsine distribution function");
  double l_alpha = 0.5, l_u = 0.5, l_t = 1.0, l_rho = 1.0, l_eps = 1.0, l_T = 1.0, l_delta = -1.0;
  std::size_t l_K = 100000, l_reps = 100000;
  std::uint64_t l_seed = 1;
  l_asl->add_option("--alpha", l_alpha)->required();
  l_asl->add_option("--u", l_u)->required();
  auto* l_marks = limits->add_subcommand("marks", "sample PRM marks and evaluate nu_ext");
  l_marks->add_option("--alpha", l_alpha);
  l_marks->add_option("--K", l_K);
  l_marks->add_option("--seed", l_seed);
  l_marks->add_option("--eps-prime", l_eps);
  l_marks->add_option("--u", l_u);
  auto* l_sub = limits->add_subcommand("subordinator", "simulate a stable subordinator path");
  l_sub->add_option("--alpha", l_alpha);
  l_sub->add_option("--T", l_T);
  l_sub->add_option("--delta", l_delta, "jump cutoff (default 1e-4 T)");
  l_sub->add_option("--seed", l_seed);
  auto* l_over = limits->add_subcommand("overshoot", "range-avoidance probability of a stable subordinator");
  l_over->add_option("--alpha", l_alpha);
  l_over->add_option("--t", l_t);
  l_over->add_option("--rho", l_rho);
  l_over->add_option("--replicas", l_reps);
  l_over->add_option("--seed", l_seed);
  for (auto* s : {l_asl, l_marks, l_sub, l_over}) s->add_option("--out", lim.out);
  limits->add_option("--threads", lim.threads);

  auto* compare = app.add_subcommand("compare", "compare REM and trap rows of estimates.csv files");
  std::vector<std::string> cmp_files;
  compare->add_option("files", cmp_files, "estimates.csv files holding REM and Trap rows")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--out", cmp.out);

  auto* summarize_cmd = app.add_subcommand("summarize", "pool result files and check against targets");
  std::vector<std::string> sum_files;
  double s_abs = 0.05, s_mult = 3.0;
  summarize_cmd->add_option("files", sum_files, "estimates.csv files")->required()->check(CLI::ExistingFile);
  summarize_cmd->add_option("--abs-tol", s_abs);
  summarize_cmd->add_option("--ci-mult", s_mult);
  summarize_cmd->add_option("--out", summ.out);

  auto* tabulate = app.add_subcommand("tabulate-walk", "exact transition probabilities of the cube walk");
  int w_n = 8;
  long long w_l = 12;
  tabulate->add_option("--n", w_n)->check(CLI::Range(1, 64));
  tabulate->add_option("--l", w_l, "largest step count")->check(CLI::NonNegativeNumber);
  tabulate->add_option("--out", walk.out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return run_config(sim, std::nullopt);

    if (*conditions) {
      if (!cond.config.empty()) return run_config(cond, ExperimentKind::Conditions);
      apply_threads(cond);
      LandscapeParams p{c_n, c_beta, EpsilonScale{c_eps}, cond.seed.value_or(1)};
      ConditionOptions opt;
      opt.skeletons = c_skel;
      opt.seed = derive_seed(p.master_seed, Stream::Skeleton);
      const auto rep = check_conditions(p, c_t, c_u, c_delta, opt);
      emit(rep.to_json(c_samples).dump(2) + "\n", cond.out);
      return 0;
    }

    if (*limits) {
      apply_threads(lim);
      json j;
      if (*l_asl) {
        j = {{"alpha", l_alpha}, {"u", l_u}, {"asl", asl_cdf(l_alpha, l_u)}};
      } else if (*l_marks) {
        const auto m = sample_prm_marks(l_alpha, l_K, l_seed);
        const auto v = nu_ext(m, l_eps, l_u);
        j = {{"alpha", l_alpha},       {"K", l_K},        {"seed", l_seed},
             {"gamma_1", m.gamma[0]},  {"gamma_K", m.gamma_tail()},
             {"nu_ext", v.value},      {"tail", v.tail},  {"truncation_error", v.truncation_error},
             {"warning", v.warning}};
      } else if (*l_sub) {
        Rng rng(derive_seed(l_seed, Stream::Subordinator));
        const double d = l_delta > 0.0 ? l_delta : 1e-4 * l_T;
        const auto path = simulate_subordinator(SubordinatorSpec::stable(l_alpha), l_T, d, rng);
        j = {{"alpha", l_alpha}, {"T", l_T},           {"delta", d},
             {"drift", path.drift}, {"times", path.times}, {"sizes", path.sizes},
             {"S_T", path.value_at(l_T)}};
      } else {
        const auto e = overshoot_correlation(SubordinatorSpec::stable(l_alpha), l_t, l_rho, l_reps, l_seed);
        j = {{"alpha", l_alpha},    {"t", l_t},
             {"rho", l_rho},        {"p_hat", e.p_hat},
             {"ci95", e.ci_half_width},
             {"asl_target", asl_cdf(l_alpha, 1.0 / (1.0 + l_rho))}};
      }
      emit(j.dump(2) + "\n", lim.out);
      return 0;
    }

    if (*compare) {
      std::vector<CorrelationEstimate> rem, trap;
      for (const auto& f : cmp_files)
        for (const auto& r : read_estimates_csv(f)) {
          CorrelationEstimate e;
          e.t = r.t;
          e.rho = r.rho;
          e.p_hat = r.p_hat;
          e.ci_half_width = r.ci95;
          e.n_env = r.n_env;
          e.n_chain = r.n_chain;
          (r.model == "Trap" ? trap : rem).push_back(e);
        }
      const auto rep = compare_models(rem, trap);
      emit(rep.to_json().dump(2) + "\n", cmp.out);
      return rep.all_within ? 0 : 1;
    }

    if (*summarize_cmd) {
      std::vector<fs::path> files(sum_files.begin(), sum_files.end());
      Tolerances tol;
      tol.abs = s_abs;
      tol.ci_mult = s_mult;
      const auto s = summarize(files, tol);
      emit(to_csv(s), summ.out);
      return s.all_pass ? 0 : 1;
    }

    if (*tabulate) {
      std::string text = "n,l,d,p\n";
      for (long long l = 0; l <= w_l; ++l)
        for (int d = 0; d <= w_n; ++d)
          text += std::to_string(w_n) + "," + std::to_string(l) + "," + std::to_string(d) + "," +
                  format_double(transition_prob(w_n, d, l)) + "\n";
      emit(text, walk.out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
