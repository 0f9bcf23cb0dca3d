// heat: ensemble transfer-attack campaigns, ablations, gradient audits and
// report rendering.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "heat/campaign.hpp"
#include "heat/kernels.hpp"
#include "heat/linalg.hpp"
#include "heat/model.hpp"
#include "heat/random.hpp"

namespace fs = std::filesystem;
using namespace heat;

namespace {

// Numeric flag that also accepts fractions such as 8/255.
double parse_real(const std::string& text, const std::string& flag) {
  try {
    const auto slash = text.find('/');
    if (slash == std::string::npos) return std::stod(text);
    return std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
  } catch (const std::logic_error&) {
    throw CLI::ValidationError(flag, "expected a number or fraction, got " + text);
  }
}

struct CampaignFlags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t samples = 0;
  unsigned threads = 0;
  std::vector<std::string> methods;
  std::vector<std::string> bases;
  std::string epsilon, alpha, p, tau, eps_stab, momentum, resize_rate, diversity_prob;
  int iterations = 0;
  bool random_init = false;
  bool row_normalize = false;
  std::vector<std::string> disable;
};

void add_campaign_flags(CLI::App* cmd, CampaignFlags& f, bool with_method) {
  cmd->add_option("-c,--config", f.config, "Campaign TOML file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Campaign seed")->required();
  cmd->add_option("-o,--out", f.out, "Output directory (overrides output_dir)");
  cmd->add_option("--samples", f.samples, "Attack only the first N samples");
  cmd->add_option("--threads", f.threads, "Worker threads");
  if (with_method) {
    cmd->add_option("--method", f.methods, "ens|heat (repeatable)");
    cmd->add_option("--disable", f.disable, "Turn off a HEAT component: cgrads|intra|loss_factor|align_factor");
  }
  cmd->add_option("--base", f.bases, "ifgsm|mifgsm|difgsm (repeatable)");
  cmd->add_option("--epsilon", f.epsilon, "Perturbation bound, e.g. 8/255");
  cmd->add_option("--alpha", f.alpha, "Step size (default epsilon/10)");
  cmd->add_option("--iterations", f.iterations, "Iterations T");
  cmd->add_option("--p", f.p, "Cumulative contribution ratio");
  cmd->add_option("--tau", f.tau, "Temperature");
  cmd->add_option("--eps-stab", f.eps_stab, "Stabilizing constant");
  cmd->add_option("--momentum", f.momentum, "MI-FGSM momentum");
  cmd->add_option("--resize-rate", f.resize_rate, "DI resize rate");
  cmd->add_option("--diversity-prob", f.diversity_prob, "DI probability");
  cmd->add_flag("--random-init", f.random_init, "Start from a random point in the ball");
  cmd->add_flag("--row-normalize", f.row_normalize, "Unit-normalize gradient rows before the SVD");
}

CampaignConfig resolve_campaign(const CampaignFlags& f) {
  CampaignConfig cfg = load_campaign_config(f.config);
  AttackConfig& a = cfg.attack;
  a.seed = f.seed;
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (f.samples) cfg.max_samples = f.samples;
  if (f.threads) cfg.threads = f.threads;
  if (!f.methods.empty()) {
    cfg.methods.clear();
    for (const auto& m : f.methods) cfg.methods.push_back(parse_method(m));
  }
  if (!f.bases.empty()) {
    cfg.bases.clear();
    for (const auto& b : f.bases) cfg.bases.push_back(parse_base_attack(b));
  }
  if (!f.epsilon.empty()) {
    a.epsilon = parse_real(f.epsilon, "--epsilon");
    if (!cfg.alpha_explicit) a.alpha = a.epsilon / 10.0;
  }
  if (!f.alpha.empty()) a.alpha = parse_real(f.alpha, "--alpha");
  if (f.iterations) a.iterations = f.iterations;
  if (!f.p.empty()) a.p = parse_real(f.p, "--p");
  if (!f.tau.empty()) a.tau = parse_real(f.tau, "--tau");
  if (!f.eps_stab.empty()) a.eps_stab = parse_real(f.eps_stab, "--eps-stab");
  if (!f.momentum.empty()) a.momentum = parse_real(f.momentum, "--momentum");
  if (!f.resize_rate.empty()) a.resize_rate = parse_real(f.resize_rate, "--resize-rate");
  if (!f.diversity_prob.empty()) a.diversity_prob = parse_real(f.diversity_prob, "--diversity-prob");
  if (f.random_init) a.random_init = true;
  if (f.row_normalize) a.row_normalize = true;
  for (const auto& d : f.disable) {
    if (d == "cgrads") a.toggles.cgrads = false;
    else if (d == "intra") a.toggles.intra = false;
    else if (d == "loss_factor") a.toggles.loss_factor = false;
    else if (d == "align_factor") a.toggles.align_factor = false;
    else throw Error(ErrorCode::InvalidConfig, "field 'disable': unknown component " + d);
  }
  a.validate();
  return cfg;
}

void print_table(const CampaignReport& report) {
  std::cout << csv_to_markdown(render_csv(report), "");
}

int run_gradcheck(const std::vector<std::string>& models, const std::string& zoo, int samples,
                  double h, double tol, std::uint64_t seed) {
  std::vector<fs::path> files(models.begin(), models.end());
  if (!zoo.empty()) {
    std::vector<fs::path> found;
    for (const auto& entry : fs::directory_iterator(zoo)) {
      if (entry.path().extension() == ".json") found.push_back(entry.path());
    }
    std::sort(found.begin(), found.end());
    files.insert(files.end(), found.begin(), found.end());
  }
  if (files.empty()) {
    std::cerr << "gradcheck: no models given (use --model or --zoo)\n";
    return 2;
  }
  bool ok = true;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& file : files) {
    const auto model = load_model(file);
    Rng rng(derive_seed(seed, std::hash<std::string>{}(file.filename().string())));
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      std::vector<double> x(model->input_dim());
      for (double& v : x) v = uniform01(rng);
      const int y = static_cast<int>(uniform_int(rng, 0, static_cast<long long>(model->num_classes()) - 1));
      const auto analytic = model->loss_and_grad(x, y).grad;
      const auto numeric = finite_diff_grad(*model, x, y, h);
      std::vector<double> diff(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) diff[i] = analytic[i] - numeric[i];
      const double denom = std::max(norm2(analytic), norm2(numeric));
      const double rel = denom > 0.0 ? norm2(diff) / denom : norm2(diff);
      worst = std::max(worst, rel);
    }
    const bool pass = worst <= tol;
    ok = ok && pass;
    std::printf("%-32s %-15s worst rel. error %.3e  %s\n", file.filename().string().c_str(),
                model->kind().c_str(), worst, pass ? "PASS" : "FAIL");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%zu models, %d points each, h=%g, tolerance %g, %.2f s\n", files.size(), samples, h, tol, secs);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HEAT ensemble transfer attacks"};
  app.require_subcommand(1);
  std::string kernel_choice;
  app.add_option("--kernels", kernel_choice, "Force a kernel variant: scalar|avx2");

  CampaignFlags attack_flags;
  auto* attack = app.add_subcommand("attack", "Run a campaign: every (method, base) cell against the targets");
  add_campaign_flags(attack, attack_flags, true);

  CampaignFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "Sweep the HEAT component toggles (six rows)");
  add_campaign_flags(ablate, ablate_flags, false);

  std::vector<std::string> gc_models;
  std::string gc_zoo;
  int gc_samples = 50;
  double gc_h = 1e-5;
  double gc_tol = 1e-6;
  std::uint64_t gc_seed = 1;
  auto* gradcheck = app.add_subcommand("gradcheck", "Audit analytic input gradients against central differences");
  gradcheck->add_option("--model", gc_models, "Model JSON file (repeatable)");
  gradcheck->add_option("--zoo", gc_zoo, "Directory of model JSON files")->check(CLI::ExistingDirectory);
  gradcheck->add_option("--samples", gc_samples, "Random (x, y) points per model");
  gradcheck->add_option("--step", gc_h, "Finite-difference step h");
  gradcheck->add_option("--tol", gc_tol, "Relative L2 error tolerance");
  gradcheck->add_option("--seed", gc_seed, "Seed for the random points");

  std::string rp_csv, rp_out, rp_title;
  auto* report = app.add_subcommand("report", "Render a report CSV as a Markdown table");
  report->add_option("csv", rp_csv, "report.csv or ablation.csv")->required()->check(CLI::ExistingFile);
  report->add_option("-o,--out", rp_out, "Write Markdown here instead of stdout");
  report->add_option("--title", rp_title, "Heading");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!kernel_choice.empty() && !kernels::select(kernel_choice)) {
      std::cerr << "kernel variant '" << kernel_choice << "' is not available here\n";
      return 2;
    }
    if (attack->parsed()) {
      const CampaignConfig cfg = resolve_campaign(attack_flags);
      const CampaignReport rep = run_benchmark(cfg);
      print_table(rep);
      std::cout << "wrote " << (cfg.output_dir / "report.csv").string() << "\n";
    } else if (ablate->parsed()) {
      const CampaignConfig cfg = resolve_campaign(ablate_flags);
      const CampaignReport rep = run_ablation(cfg);
      print_table(rep);
      std::cout << "wrote " << (cfg.output_dir / "ablation.csv").string() << "\n";
    } else if (gradcheck->parsed()) {
      return run_gradcheck(gc_models, gc_zoo, gc_samples, gc_h, gc_tol, gc_seed);
    } else if (report->parsed()) {
      std::ifstream in(rp_csv, std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      const std::string md = csv_to_markdown(buf.str(), rp_title);
      if (rp_out.empty()) {
        std::cout << md;
      } else {
        std::ofstream(rp_out, std::ios::binary) << md;
      }
    }
  } catch (const Error& e) {
    std::cerr << "heat: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
