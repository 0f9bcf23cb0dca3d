#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "heat/attack.hpp"
#include "heat/dataset.hpp"
#include "heat/model.hpp"

namespace heat {

// A model reference in a campaign: a JSON model file or a provider endpoint.
struct ModelRef {
  std::string id;
  std::string location;
};

struct CampaignConfig {
  std::string name = "campaign";
  std::filesystem::path dataset;
  std::vector<ModelRef> surrogates;
  std::vector<ModelRef> targets;
  std::vector<Method> methods{Method::Ens, Method::Heat};
  std::vector<BaseAttack> bases{BaseAttack::IFgsm};
  AttackConfig attack;
  bool alpha_explicit = false;
  std::optional<std::size_t> max_samples;
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;
};

// Parses the TOML campaign file. Relative paths resolve against the file's
// directory. Unknown keys and invalid values raise InvalidConfig naming the
// field.
CampaignConfig load_campaign_config(const std::filesystem::path& path);
CampaignConfig parse_campaign_config(const std::string& text,
                                     const std::filesystem::path& base_dir = ".");

// Human readable dump of the effective settings.
std::string describe(const CampaignConfig& cfg);

ClassifierPtr open_model(const ModelRef& ref, std::size_t input_dim, std::size_t num_classes);

// One (sample, target) cell of the success matrix.
struct SampleOutcome {
  std::size_t sample = 0;
  std::size_t target = 0;
  int label = 0;
  int clean_pred = -1;
  int adv_pred = -1;
  bool clean_correct = false;
  bool success = false;
  bool failed = false;
};

// A named group of target columns that gets its own average column.
struct AverageGroup {
  std::string name;
  std::vector<std::size_t> columns;
};

struct ReportRow {
  std::vector<std::string> keys;            // aligned with CampaignReport::key_names
  std::vector<std::optional<double>> asr;   // per target, nullopt = N/A
  std::vector<std::optional<double>> averages;
  std::vector<SampleOutcome> outcomes;
  double seconds = 0.0;
};

struct CampaignReport {
  std::vector<std::string> key_names;
  std::vector<std::string> target_ids;
  std::vector<AverageGroup> average_groups;
  std::vector<ReportRow> rows;
  std::string config_echo;
};

// Clean-input predictions, [target][sample].
std::vector<std::vector<int>> clean_predictions(const std::vector<ClassifierPtr>& targets,
                                                const Dataset& dataset);

// ASR per target = 100 * #success / #clean-correct, where success means the
// target got the clean input right and gets the adversarial one wrong. A
// target with no clean-correct sample is N/A and skipped by the averages.
// The report has a single row with the given keys.
CampaignReport evaluate_asr(const std::vector<ClassifierPtr>& targets,
                            const std::vector<AttackResult>& results, const Dataset& dataset,
                            const std::vector<std::string>& target_ids = {},
                            const std::vector<std::vector<int>>* clean = nullptr);

// Attacks every sample (fanning out over cfg.threads workers). Remote
// failures mark the sample failed instead of aborting the campaign.
std::vector<AttackResult> attack_dataset(const std::vector<ClassifierPtr>& surrogates,
                                         const Dataset& dataset, const AttackConfig& attack,
                                         unsigned threads);


std::string render_csv(const CampaignReport& report);
std::string render_samples_csv(const CampaignReport& report);
std::string render_markdown(const CampaignReport& report, const std::string& title);
// Markdown table from report CSV text (the `report` subcommand).
std::string csv_to_markdown(const std::string& csv, const std::string& title);

// One cell per (method, base); writes report.csv, report.md, samples.csv and
// one adversarial dataset per cell.
CampaignReport run_benchmark(const CampaignConfig& cfg);

// Sweep over the component toggles with method=heat and the
// first configured base. Targets are the surrogates (white-box columns)
// followed by the black-box targets. Writes ablation.csv/.md/samples.
CampaignReport run_ablation(const CampaignConfig& cfg);

// The six toggle rows, from nothing enabled to everything enabled.
std::vector<Toggles> ablation_rows();

}  // namespace heat
