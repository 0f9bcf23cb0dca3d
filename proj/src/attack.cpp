#include "heat/attack.hpp"

#include <cmath>
#include <stdexcept>

#include "heat/kernels.hpp"
#include "heat/random.hpp"

namespace heat {

namespace {

[[noreturn]] void bad_field(const char* field, const std::string& why) {
  throw Error(ErrorCode::InvalidConfig, std::string("field '") + field + "': " + why);
}

void check_feasible(const ImageTensor& x, const ImageTensor& x_orig, double epsilon) {
  if (linf_distance(x.values(), x_orig.values()) > epsilon + 1e-12 || !x.in_unit_range()) {
    throw std::logic_error("iterate left the feasible set");
  }
}

}  // namespace

std::string to_string(BaseAttack base) {
  switch (base) {
    case BaseAttack::IFgsm: return "ifgsm";
    case BaseAttack::MiFgsm: return "mifgsm";
    case BaseAttack::DiFgsm: return "difgsm";
  }
  return "?";
}

std::string to_string(Method method) { return method == Method::Ens ? "ens" : "heat"; }

BaseAttack parse_base_attack(const std::string& name) {
  if (name == "ifgsm") return BaseAttack::IFgsm;
  if (name == "mifgsm") return BaseAttack::MiFgsm;
  if (name == "difgsm") return BaseAttack::DiFgsm;
  bad_field("base", "expected ifgsm|mifgsm|difgsm, got \"" + name + "\"");
}

Method parse_method(const std::string& name) {
  if (name == "ens") return Method::Ens;
  if (name == "heat") return Method::Heat;
  bad_field("method", "expected ens|heat, got \"" + name + "\"");
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) bad_field("epsilon", "must be in [0, 1]");
  if (!(alpha >= 0.0)) bad_field("alpha", "must be >= 0");
  if (alpha > epsilon) bad_field("alpha", "must not exceed epsilon");
  if (epsilon > 0.0 && !(alpha > 0.0)) bad_field("alpha", "must be > 0");
  if (iterations < 1) bad_field("iterations", "must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) bad_field("p", "must be in (0, 1]");
  if (!(tau > 0.0)) bad_field("tau", "must be > 0");
  if (!(eps_stab > 0.0)) bad_field("eps_stab", "must be > 0");
  if (!(momentum >= 0.0)) bad_field("momentum", "must be >= 0");
  if (!(resize_rate > 0.0 && resize_rate <= 1.0)) bad_field("resize_rate", "must be in (0, 1]");
  if (!(diversity_prob >= 0.0 && diversity_prob <= 1.0)) {
    bad_field("diversity_prob", "must be in [0, 1]");
  }
}

std::vector<double> ens_gradient(std::span<const ClassifierPtr> models, const ImageTensor& x,
                                 int label) {
  Ensemble ensemble(models);
  return ens_gradient(ensemble, x, label);
}

std::vector<double> ens_gradient(Ensemble& ensemble, const ImageTensor& x, int label) {
  const auto axpy = kernels::active().axpy;
  const double scale = 1.0 / static_cast<double>(ensemble.size());
  std::vector<double> g(ensemble.input_dim(), 0.0);
  for (std::size_t m = 0; m < ensemble.size(); ++m) {
    const LossGrad lg = ensemble.loss_and_grad(m, x, label);
    axpy(scale, lg.grad.data(), g.data(), g.size());
  }
  return g;
}

std::vector<double> combine_gradient(std::span<const ClassifierPtr> models, const ImageTensor& x_vk,
                                     int label, const WeightVector& w_intra,
                                     const WeightVector& w_inter) {
  if (w_intra.size() != models.size() || w_inter.size() != models.size()) {
    throw Error(ErrorCode::LengthMismatch, "weight vectors must have one entry per model");
  }
  return combine_gradient(build_gradient_matrix(models, x_vk, label), w_intra, w_inter);
}

std::vector<double> combine_gradient(const GradientMatrix& grads_at_vk, const WeightVector& w_intra,
                                     const WeightVector& w_inter) {
  if (w_intra.size() != grads_at_vk.rows() || w_inter.size() != grads_at_vk.rows()) {
    throw Error(ErrorCode::LengthMismatch, "weight vectors must have one entry per model");
  }
  const auto axpy = kernels::active().axpy;
  std::vector<double> g(grads_at_vk.cols(), 0.0);
  for (std::size_t m = 0; m < grads_at_vk.rows(); ++m) {
    axpy(w_intra[m] * w_inter[m], grads_at_vk.row(m).data(), g.data(), g.size());
  }
  return g;
}

HeatGradient heat_gradient(Ensemble& ensemble, const ImageTensor& x_iter, const ImageTensor& x_orig,
                           int label, const AttackConfig& cfg) {
  const std::size_t count = ensemble.size();
  const Toggles& on = cfg.toggles;
  HeatGradient out;
  IterationDiagnostics& diag = out.diagnostics;

  std::vector<double> anchor_losses;
  const GradientMatrix anchor = build_gradient_matrix(ensemble, x_iter, label, &anchor_losses);

  // Consensus direction and the example along it.
  out.x_vk = x_iter;
  if (on.cgrads) {
    const SvdFactors factors = thin_svd(cfg.row_normalize ? normalize_rows(anchor) : anchor);
    // An all-zero gradient matrix has no direction to follow; stay put.
    if (factors.rank() > 0) {
      const ConsensusDirection dir =
          synthesize_direction(factors, select_rank(factors.singular_values, cfg.p));
      diag.k = dir.k;
      diag.retained_ratio = dir.retained_ratio;
      out.x_vk = cgrads_step(x_iter, x_orig, dir, cfg.alpha, cfg.epsilon);
    }
  }

  diag.intra = on.intra && count > 1
                   ? intra_weights(ensemble, anchor, x_iter, x_orig, label, cfg.alpha, cfg.epsilon,
                                   cfg.eps_stab)
                   : WeightVector::uniform(count, WeightKind::Intra);

  // Gradients and losses at x_vk; the anchor evaluation is reused when x_vk is
  // the anchor and evaluation is deterministic.
  std::vector<double> losses;
  GradientMatrix at_vk;
  if (on.cgrads || ensemble.has_diversity()) {
    at_vk = build_gradient_matrix(ensemble, out.x_vk, label, &losses);
  } else {
    at_vk = anchor;
    losses = std::move(anchor_losses);
  }

  if (count == 1 || (!on.loss_factor && !on.align_factor)) {
    diag.inter = WeightVector::uniform(count, WeightKind::Inter);
  } else {
    const double uniform_share = std::pow(1.0 / static_cast<double>(count), 1.0 / cfg.tau);
    std::vector<double> s_norm(count, uniform_share);
    std::vector<double> a_norm(count, uniform_share);
    if (on.loss_factor) {
      std::vector<double> s(losses);
      for (double& v : s) v += cfg.eps_stab;
      s_norm = temperature_normalize(s, cfg.tau);
    }
    if (on.align_factor) {
      a_norm = temperature_normalize(alignment_contributions(at_vk, cfg.eps_stab), cfg.tau);
    }
    diag.inter = entropy_weights(s_norm, a_norm, cfg.eps_stab);
  }

  out.g = combine_gradient(at_vk, diag.intra, diag.inter);
  return out;
}

HeatStep heat_step(std::span<const ClassifierPtr> models, const ImageTensor& x_iter,
                   const ImageTensor& x_orig, int label, const AttackConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0));
  Ensemble ensemble = cfg.base == BaseAttack::DiFgsm
                          ? Ensemble(models, {cfg.resize_rate, cfg.diversity_prob}, rng)
                          : Ensemble(models);
  HeatGradient hg = heat_gradient(ensemble, x_iter, x_orig, label, cfg);
  return {clip_project(sign_step(x_iter, hg.g, cfg.alpha), x_orig, cfg.epsilon),
          std::move(hg.diagnostics)};
}

std::vector<double> momentum_update(std::span<const double> g_accum, std::span<const double> g,
                                    double mu, double eps_stab) {
  if (g_accum.size() != g.size()) {
    throw Error(ErrorCode::LengthMismatch, "momentum accumulator and gradient differ in length");
  }
  std::vector<double> out(g_accum.begin(), g_accum.end());
  for (double& v : out) v *= mu;
  const double l1 = kernels::active().abs_sum(g.data(), g.size());
  if (l1 > eps_stab) kernels::active().axpy(1.0 / l1, g.data(), out.data(), out.size());
  return out;
}

AttackResult run_attack(std::span<const ClassifierPtr> models, const LabeledSample& sample,
                        const AttackConfig& cfg, std::uint64_t sample_index) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, sample_index));
  Ensemble ensemble = cfg.base == BaseAttack::DiFgsm
                          ? Ensemble(models, {cfg.resize_rate, cfg.diversity_prob}, rng)
                          : Ensemble(models);
  if (sample.x.size() != ensemble.input_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "sample does not match the ensemble input_dim");
  }

  const ImageTensor& x_orig = sample.x;
  ImageTensor x = x_orig;
  if (cfg.random_init) {
    for (double& v : x.values()) v += (uniform01(rng) - 0.5) * cfg.epsilon;
    x = clip_project(x, x_orig, cfg.epsilon);
  }

  AttackResult result;
  std::vector<double> accum(x.size(), 0.0);
  for (int t = 0; t < cfg.iterations; ++t) {
    std::vector<double> g;
    if (cfg.method == Method::Ens) {
      g = ens_gradient(ensemble, x, sample.y);
    } else {
      HeatGradient hg = heat_gradient(ensemble, x, x_orig, sample.y, cfg);
      g = std::move(hg.g);
      result.per_iteration.push_back(std::move(hg.diagnostics));
    }
    if (cfg.base == BaseAttack::MiFgsm) {
      accum = momentum_update(accum, g, cfg.momentum, cfg.eps_stab);
      g = accum;
    }
    x = clip_project(sign_step(x, g, cfg.alpha), x_orig, cfg.epsilon);
    check_feasible(x, x_orig, cfg.epsilon);
  }
  result.x_adv = std::move(x);
  return result;
}

}  // namespace heat
