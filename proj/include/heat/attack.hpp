#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "heat/cgrads.hpp"
#include "heat/dharmo.hpp"
#include "heat/ensemble.hpp"
#include "heat/model.hpp"

namespace heat {

enum class BaseAttack { IFgsm, MiFgsm, DiFgsm };
enum class Method { Ens, Heat };

std::string to_string(BaseAttack base);
std::string to_string(Method method);
BaseAttack parse_base_attack(const std::string& name);
Method parse_method(const std::string& name);

// Component switches of the HEAT step: (A) consensus direction, (B) intra
// weights, (C) loss factor, (D) alignment factor.
struct Toggles {
  bool cgrads = true;
  bool intra = true;
  bool loss_factor = true;
  bool align_factor = true;

  static Toggles none() { return {false, false, false, false}; }
  friend bool operator==(const Toggles&, const Toggles&) = default;
};

struct AttackConfig {
  double epsilon = 8.0 / 255.0;
  double alpha = 8.0 / 255.0 / 10.0;
  int iterations = 10;
  double p = 0.7;
  double tau = 1.0;
  double eps_stab = 1e-8;
  BaseAttack base = BaseAttack::IFgsm;
  Method method = Method::Heat;
  double momentum = 0.9;
  double resize_rate = 0.9;
  double diversity_prob = 0.5;
  Toggles toggles;
  bool random_init = false;
  bool row_normalize = false;
  std::uint64_t seed = 0;

  // Throws InvalidConfig naming the offending field.
  void validate() const;
};

struct IterationDiagnostics {
  WeightVector intra;
  WeightVector inter;
  std::size_t k = 0;
  double retained_ratio = 0.0;
};

struct AttackResult {
  ImageTensor x_adv;
  std::vector<IterationDiagnostics> per_iteration;
  std::map<std::string, bool> success_per_target;
  bool failed = false;
  std::string failure;
};

struct LabeledSample {
  ImageTensor x;
  int y = 0;
};

// (1/M) sum_m grad L_m(x, y)
std::vector<double> ens_gradient(std::span<const ClassifierPtr> models, const ImageTensor& x,
                                 int label);
std::vector<double> ens_gradient(Ensemble& ensemble, const ImageTensor& x, int label);

// sum_m w_intra[m] * w_inter[m] * grad L_m(x_vk, y)
std::vector<double> combine_gradient(std::span<const ClassifierPtr> models, const ImageTensor& x_vk,
                                     int label, const WeightVector& w_intra,
                                     const WeightVector& w_inter);
std::vector<double> combine_gradient(const GradientMatrix& grads_at_vk, const WeightVector& w_intra,
                                     const WeightVector& w_inter);

// The aggregated HEAT gradient at x_iter plus its diagnostics, before any step.
struct HeatGradient {
  std::vector<double> g;
  ImageTensor x_vk;
  IterationDiagnostics diagnostics;
};
HeatGradient heat_gradient(Ensemble& ensemble, const ImageTensor& x_iter, const ImageTensor& x_orig,
                           int label, const AttackConfig& cfg);

struct HeatStep {
  ImageTensor x_next;
  IterationDiagnostics diagnostics;
};

// One full HEAT iteration anchored at x_iter: consensus direction, intra and
// inter weights, weighted gradient, then a projected sign step from x_iter.
HeatStep heat_step(std::span<const ClassifierPtr> models, const ImageTensor& x_iter,
                   const ImageTensor& x_orig, int label, const AttackConfig& cfg);

// mu * g_accum + g / |g|_1; a g with |g|_1 <= eps_stab adds nothing.
std::vector<double> momentum_update(std::span<const double> g_accum, std::span<const double> g,
                                    double mu, double eps_stab = 1e-8);

// Runs cfg.iterations steps from x (or a random start inside the ball when
// cfg.random_init). Randomness comes from derive_seed(cfg.seed, sample_index).
AttackResult run_attack(std::span<const ClassifierPtr> models, const LabeledSample& sample,
                        const AttackConfig& cfg, std::uint64_t sample_index = 0);

}  // namespace heat
