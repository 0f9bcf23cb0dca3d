#include "heat/campaign.hpp"

#include <toml.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "heat/remote.hpp"

namespace heat {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::InvalidConfig, "field '" + field + "': " + why);
}

void reject_unknown(const toml::table& table, const std::string& prefix,
                    const std::set<std::string>& known) {
  for (const auto& [key, value] : table) {
    const std::string k(key.str());
    if (!known.contains(k)) bad(prefix + k, "unknown key");
  }
}

double read_real(const toml::node& node, const std::string& field) {
  if (auto v = node.value<double>()) return *v;
  if (auto s = node.value<std::string>()) {
    // Fractions such as "8/255" are accepted for readability.
    const auto slash = s->find('/');
    const auto whole = [](const std::string& text) {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    };
    try {
      if (slash == std::string::npos) return whole(*s);
      const double num = whole(s->substr(0, slash));
      const double den = whole(s->substr(slash + 1));
      if (den == 0.0) bad(field, "division by zero");
      return num / den;
    } catch (const std::logic_error&) {
      bad(field, "expected a number or a fraction like \"8/255\", got \"" + *s + "\"");
    }
  }
  bad(field, "expected a number");
}

bool read_bool(const toml::node& node, const std::string& field) {
  if (node.is_boolean()) return *node.value<bool>();
  bad(field, "expected true or false");
}

long long read_int(const toml::node& node, const std::string& field) {
  if (node.is_integer()) return *node.value<long long>();
  bad(field, "expected an integer");
}

std::string read_string(const toml::node& node, const std::string& field) {
  if (auto v = node.value<std::string>()) return *v;
  bad(field, "expected a string");
}

std::vector<std::string> read_strings(const toml::node& node, const std::string& field) {
  const toml::array* arr = node.as_array();
  if (!arr) bad(field, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    out.push_back(read_string(*arr->get(i), field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::string resolve(const std::string& location, const fs::path& base_dir) {
  if (Endpoint::looks_like_endpoint(location)) return location;
  const fs::path p(location);
  return p.is_absolute() ? p.string() : (base_dir / p).lexically_normal().string();
}

std::vector<ModelRef> read_models(const toml::node& node, const std::string& field,
                                  const fs::path& base_dir) {
  const toml::array* arr = node.as_array();
  if (!arr || arr->empty()) bad(field, "expected a non-empty array");
  std::vector<ModelRef> out;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const std::string where = field + "[" + std::to_string(i) + "]";
    const toml::node& item = *arr->get(i);
    ModelRef ref;
    if (const toml::table* t = item.as_table()) {
      reject_unknown(*t, where + ".", {"id", "location"});
      if (!t->contains("location")) bad(where + ".location", "missing");
      ref.location = read_string(*t->get("location"), where + ".location");
      if (t->contains("id")) ref.id = read_string(*t->get("id"), where + ".id");
    } else {
      ref.location = read_string(item, where);
    }
    if (ref.id.empty()) {
      ref.id = Endpoint::looks_like_endpoint(ref.location)
                   ? field.substr(field.rfind('.') + 1) + "_" + std::to_string(i)
                   : fs::path(ref.location).stem().string();
    }
    if (ref.id.find_first_of(",\n|") != std::string::npos) bad(where + ".id", "must not contain ',' or '|'");
    ref.location = resolve(ref.location, base_dir);
    out.push_back(std::move(ref));
  }
  return out;
}

std::string fmt_double(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt_asr(const std::optional<double>& v) { return v ? fmt_double("%.6f", *v) : "NA"; }

std::optional<double> mean_of(const std::vector<std::optional<double>>& values,
                              const std::vector<std::size_t>& columns) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c : columns) {
    if (values[c]) {
      sum += *values[c];
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
  out << text;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<ClassifierPtr> open_models(const std::vector<ModelRef>& refs, const Dataset& dataset) {
  std::vector<ClassifierPtr> out;
  for (const auto& ref : refs) out.push_back(open_model(ref, dataset.input_dim(), dataset.num_classes));
  return out;
}

std::vector<std::string> ids_of(const std::vector<ModelRef>& refs) {
  std::vector<std::string> ids;
  for (const auto& r : refs) ids.push_back(r.id);
  return ids;
}

Dataset load_limited(const CampaignConfig& cfg) {
  Dataset ds = load_dataset(cfg.dataset);
  if (cfg.max_samples && *cfg.max_samples < ds.samples.size()) ds.samples.resize(*cfg.max_samples);
  return ds;
}

void write_adversarial(const fs::path& path, const Dataset& dataset,
                       const std::vector<AttackResult>& results, const std::string& label) {
  Dataset adv;
  adv.name = dataset.name + "-adv-" + label;
  adv.num_classes = dataset.num_classes;
  adv.shape = dataset.shape;
  for (std::size_t i = 0; i < results.size(); ++i) {
    adv.samples.push_back({results[i].x_adv, dataset.samples[i].y});
  }
  write_file(path, serialize_dataset(adv));
}

}  // namespace

CampaignConfig parse_campaign_config(const std::string& text, const fs::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "line " << e.source().begin.line << ": " << e.description();
    throw Error(ErrorCode::ParseError, msg.str());
  }
  reject_unknown(root, "", {"name", "dataset", "output_dir", "methods", "bases", "samples", "threads",
                            "models", "attack", "toggles"});
  CampaignConfig cfg;
  if (auto n = root.get("name")) cfg.name = read_string(*n, "name");
  if (!root.contains("dataset")) bad("dataset", "missing");
  cfg.dataset = resolve(read_string(*root.get("dataset"), "dataset"), base_dir);
  if (auto n = root.get("output_dir")) cfg.output_dir = resolve(read_string(*n, "output_dir"), base_dir);
  if (auto n = root.get("methods")) {
    cfg.methods.clear();
    for (const auto& m : read_strings(*n, "methods")) cfg.methods.push_back(parse_method(m));
    if (cfg.methods.empty()) bad("methods", "must not be empty");
  }
  if (auto n = root.get("bases")) {
    cfg.bases.clear();
    for (const auto& b : read_strings(*n, "bases")) cfg.bases.push_back(parse_base_attack(b));
    if (cfg.bases.empty()) bad("bases", "must not be empty");
  }
  if (auto n = root.get("samples")) {
    const long long s = read_int(*n, "samples");
    if (s < 1) bad("samples", "must be >= 1");
    cfg.max_samples = static_cast<std::size_t>(s);
  }
  if (auto n = root.get("threads")) {
    const long long t = read_int(*n, "threads");
    if (t < 1) bad("threads", "must be >= 1");
    cfg.threads = static_cast<unsigned>(t);
  }

  const toml::table* models = root.get_as<toml::table>("models");
  if (!models) bad("models", "missing [models] table");
  reject_unknown(*models, "models.", {"surrogates", "targets"});
  if (!models->contains("surrogates")) bad("models.surrogates", "missing");
  if (!models->contains("targets")) bad("models.targets", "missing");
  cfg.surrogates = read_models(*models->get("surrogates"), "models.surrogates", base_dir);
  cfg.targets = read_models(*models->get("targets"), "models.targets", base_dir);

  AttackConfig& a = cfg.attack;
  if (const toml::table* t = root.get_as<toml::table>("attack")) {
    reject_unknown(*t, "attack.", {"epsilon", "alpha", "iterations", "p", "tau", "eps_stab", "momentum",
                                   "resize_rate", "diversity_prob", "random_init", "row_normalize"});
    if (auto n = t->get("epsilon")) a.epsilon = read_real(*n, "attack.epsilon");
    if (auto n = t->get("alpha")) {
      a.alpha = read_real(*n, "attack.alpha");
      cfg.alpha_explicit = true;
    }
    if (auto n = t->get("iterations")) a.iterations = static_cast<int>(read_int(*n, "attack.iterations"));
    if (auto n = t->get("p")) a.p = read_real(*n, "attack.p");
    if (auto n = t->get("tau")) a.tau = read_real(*n, "attack.tau");
    if (auto n = t->get("eps_stab")) a.eps_stab = read_real(*n, "attack.eps_stab");
    if (auto n = t->get("momentum")) a.momentum = read_real(*n, "attack.momentum");
    if (auto n = t->get("resize_rate")) a.resize_rate = read_real(*n, "attack.resize_rate");
    if (auto n = t->get("diversity_prob")) a.diversity_prob = read_real(*n, "attack.diversity_prob");
    if (auto n = t->get("random_init")) a.random_init = read_bool(*n, "attack.random_init");
    if (auto n = t->get("row_normalize")) a.row_normalize = read_bool(*n, "attack.row_normalize");
  } else if (root.contains("attack")) {
    bad("attack", "must be a table");
  }
  if (!cfg.alpha_explicit) a.alpha = a.epsilon / 10.0;
  if (const toml::table* t = root.get_as<toml::table>("toggles")) {
    reject_unknown(*t, "toggles.", {"cgrads", "intra", "loss_factor", "align_factor"});
    if (auto n = t->get("cgrads")) a.toggles.cgrads = read_bool(*n, "toggles.cgrads");
    if (auto n = t->get("intra")) a.toggles.intra = read_bool(*n, "toggles.intra");
    if (auto n = t->get("loss_factor")) a.toggles.loss_factor = read_bool(*n, "toggles.loss_factor");
    if (auto n = t->get("align_factor")) a.toggles.align_factor = read_bool(*n, "toggles.align_factor");
  }
  try {
    a.validate();
  } catch (const Error& e) {
    // Name the TOML path rather than the struct field.
    std::string msg = e.what();
    const auto pos = msg.find("field '");
    if (pos != std::string::npos) msg.insert(pos + 7, "attack.");
    throw Error(ErrorCode::InvalidConfig, msg.substr(msg.find(": ") + 2));
  }
  return cfg;
}

CampaignConfig load_campaign_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_campaign_config(buf.str(), path.parent_path());
}

std::string describe(const CampaignConfig& cfg) {
  const AttackConfig& a = cfg.attack;
  std::ostringstream out;
  out << "name = " << cfg.name << "\n"
      << "dataset = " << cfg.dataset.string() << "\n"
      << "surrogates =";
  for (const auto& s : cfg.surrogates) out << " " << s.id;
  out << "\ntargets =";
  for (const auto& t : cfg.targets) out << " " << t.id;
  out << "\nmethods =";
  for (auto m : cfg.methods) out << " " << to_string(m);
  out << "\nbases =";
  for (auto b : cfg.bases) out << " " << to_string(b);
  out << "\nsamples = " << (cfg.max_samples ? std::to_string(*cfg.max_samples) : "all") << "\n"
      << "epsilon = " << fmt_double("%.17g", a.epsilon) << "\n"
      << "alpha = " << fmt_double("%.17g", a.alpha) << "\n"
      << "iterations = " << a.iterations << "\n"
      << "p = " << fmt_double("%.17g", a.p) << "\n"
      << "tau = " << fmt_double("%.17g", a.tau) << "\n"
      << "eps_stab = " << fmt_double("%.17g", a.eps_stab) << "\n"
      << "momentum = " << fmt_double("%.17g", a.momentum) << "\n"
      << "resize_rate = " << fmt_double("%.17g", a.resize_rate) << "\n"
      << "diversity_prob = " << fmt_double("%.17g", a.diversity_prob) << "\n"
      << "toggles = A:" << a.toggles.cgrads << " B:" << a.toggles.intra
      << " C:" << a.toggles.loss_factor << " D:" << a.toggles.align_factor << "\n"
      << "random_init = " << a.random_init << "\n"
      << "row_normalize = " << a.row_normalize << "\n"
      << "seed = " << a.seed << "\n";
  return out.str();
}

ClassifierPtr open_model(const ModelRef& ref, std::size_t input_dim, std::size_t num_classes) {
  ClassifierPtr model;
  if (Endpoint::looks_like_endpoint(ref.location)) {
    RemoteOptions opts;
    opts.expected_input_dim = input_dim;
    opts.expected_num_classes = num_classes;
    model = connect_provider(ref.location, opts);
  } else {
    model = load_model(ref.location);
  }
  if (model->input_dim() != input_dim || model->num_classes() != num_classes) {
    throw Error(ErrorCode::DimensionMismatch,
                "model '" + ref.id + "' does not match the dataset dimensions");
  }
  return model;
}

std::vector<std::vector<int>> clean_predictions(const std::vector<ClassifierPtr>& targets,
                                                const Dataset& dataset) {
  std::vector<std::vector<int>> out(targets.size(), std::vector<int>(dataset.samples.size(), -1));
  for (std::size_t t = 0; t < targets.size(); ++t) {
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
      try {
        out[t][i] = targets[t]->predict(dataset.samples[i].x);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RemoteFailure) throw;
      }
    }
  }
  return out;
}

CampaignReport evaluate_asr(const std::vector<ClassifierPtr>& targets,
                            const std::vector<AttackResult>& results, const Dataset& dataset,
                            const std::vector<std::string>& target_ids,
                            const std::vector<std::vector<int>>* clean) {
  if (results.size() != dataset.samples.size()) {
    throw Error(ErrorCode::LengthMismatch, "results are not aligned with the dataset");
  }
  std::vector<std::vector<int>> own_clean;
  if (!clean) {
    own_clean = clean_predictions(targets, dataset);
    clean = &own_clean;
  }
  CampaignReport report;
  report.target_ids = target_ids;
  if (report.target_ids.empty()) {
    for (std::size_t t = 0; t < targets.size(); ++t) report.target_ids.push_back("target_" + std::to_string(t));
  }
  AverageGroup all{"average", {}};
  for (std::size_t t = 0; t < targets.size(); ++t) all.columns.push_back(t);
  report.average_groups.push_back(all);

  ReportRow row;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    std::size_t correct = 0;
    std::size_t flipped = 0;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
      SampleOutcome o;
      o.sample = i;
      o.target = t;
      o.label = dataset.samples[i].y;
      o.clean_pred = (*clean)[t][i];
      o.clean_correct = o.clean_pred == o.label;
      o.failed = results[i].failed;
      if (!o.failed) {
        try {
          o.adv_pred = targets[t]->predict(results[i].x_adv);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::RemoteFailure) throw;
          o.failed = true;
        }
      }
      o.success = o.clean_correct && !o.failed && o.adv_pred != o.label;
      correct += o.clean_correct;
      flipped += o.success;
      row.outcomes.push_back(o);
    }
    row.asr.push_back(correct ? std::optional<double>(100.0 * static_cast<double>(flipped) /
                                                      static_cast<double>(correct))
                              : std::nullopt);
  }
  for (const auto& g : report.average_groups) row.averages.push_back(mean_of(row.asr, g.columns));
  report.rows.push_back(std::move(row));
  return report;
}

std::vector<AttackResult> attack_dataset(const std::vector<ClassifierPtr>& surrogates,
                                         const Dataset& dataset, const AttackConfig& attack,
                                         unsigned threads) {
  const std::size_t n = dataset.samples.size();
  std::vector<AttackResult> results(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  const auto work = [&](bool own_instances) {
    std::vector<ClassifierPtr> models;
    try {
      if (own_instances) {
        for (const auto& m : surrogates) models.push_back(m->worker_instance(m));
      } else {
        models = surrogates;
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      return;
    }
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = run_attack(models, dataset.samples[i], attack, i);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RemoteFailure) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
        results[i].x_adv = dataset.samples[i].x;
        results[i].failed = true;
        results[i].failure = e.what();
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  if (threads <= 1) {
    work(false);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, true);
  }
  if (error) std::rethrow_exception(error);
  return results;
}

std::string render_csv(const CampaignReport& report) {
  std::string out;
  std::vector<std::string> header = report.key_names;
  header.insert(header.end(), report.target_ids.begin(), report.target_ids.end());
  for (const auto& g : report.average_groups) header.push_back(g.name);
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& row : report.rows) {
    std::vector<std::string> cells = row.keys;
    for (const auto& v : row.asr) cells.push_back(fmt_asr(v));
    for (const auto& v : row.averages) cells.push_back(fmt_asr(v));
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += '\n';
  }
  return out;
}

std::string render_samples_csv(const CampaignReport& report) {
  std::string out;
  for (const auto& k : report.key_names) out += k + ",";
  out += "sample,target,label,clean_pred,adv_pred,clean_correct,success,failed\n";
  for (const auto& row : report.rows) {
    std::string prefix;
    for (const auto& k : row.keys) prefix += k + ",";
    for (const auto& o : row.outcomes) {
      out += prefix + std::to_string(o.sample) + "," + report.target_ids[o.target] + "," +
             std::to_string(o.label) + "," + std::to_string(o.clean_pred) + "," +
             std::to_string(o.adv_pred) + "," + (o.clean_correct ? "1" : "0") + "," +
             (o.success ? "1" : "0") + "," + (o.failed ? "1" : "0") + "\n";
    }
  }
  return out;
}

std::string csv_to_markdown(const std::string& csv, const std::string& title) {
  std::istringstream in(csv);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line != "\r") rows.push_back(split(line, ','));
  }
  if (rows.empty()) throw Error(ErrorCode::ParseError, "report CSV is empty");
  const std::size_t width = rows.front().size();
  std::string out;
  if (!title.empty()) out += "# " + title + "\n\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      throw Error(ErrorCode::ParseError, "report CSV line " + std::to_string(r + 1) + " has " +
                                             std::to_string(rows[r].size()) + " cells, expected " +
                                             std::to_string(width));
    }
    out += "|";
    for (const auto& cell : rows[r]) {
      std::string shown = cell;
      if (r > 0) {
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (!cell.empty() && end && *end == '\0') shown = fmt_double("%.2f", v);
      }
      out += " " + shown + " |";
    }
    out += "\n";
    if (r == 0) {
      out += "|";
      for (std::size_t c = 0; c < width; ++c) out += "---|";
      out += "\n";
    }
  }
  return out;
}

std::string render_markdown(const CampaignReport& report, const std::string& title) {
  std::string out = csv_to_markdown(render_csv(report), title);
  out += "\nASR (%) = flipped / clean-correct per target; NA = target misclassifies every clean sample.\n";
  out += "\n## Wall clock\n\n";
  for (const auto& row : report.rows) {
    std::string label;
    for (const auto& k : row.keys) label += (label.empty() ? "" : "/") + (k.empty() ? "-" : k);
    out += "- " + label + ": " + fmt_double("%.2f", row.seconds) + " s\n";
  }
  if (!report.config_echo.empty()) out += "\n## Configuration\n\n```\n" + report.config_echo + "```\n";
  return out;
}

CampaignReport run_benchmark(const CampaignConfig& cfg) {
  const Dataset dataset = load_limited(cfg);
  const auto surrogates = open_models(cfg.surrogates, dataset);
  const auto targets = open_models(cfg.targets, dataset);
  const auto clean = clean_predictions(targets, dataset);

  CampaignReport report;
  report.key_names = {"method", "base"};
  report.target_ids = ids_of(cfg.targets);
  report.config_echo = describe(cfg);
  std::vector<std::size_t> all(targets.size());
  for (std::size_t t = 0; t < all.size(); ++t) all[t] = t;
  report.average_groups.push_back({"average", all});

  fs::create_directories(cfg.output_dir);
  for (Method method : cfg.methods) {
    for (BaseAttack base : cfg.bases) {
      AttackConfig attack = cfg.attack;
      attack.method = method;
      attack.base = base;
      const auto start = std::chrono::steady_clock::now();
      const auto results = attack_dataset(surrogates, dataset, attack, cfg.threads);
      CampaignReport cell = evaluate_asr(targets, results, dataset, report.target_ids, &clean);
      ReportRow row = std::move(cell.rows.front());
      row.keys = {to_string(method), to_string(base)};
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      write_adversarial(cfg.output_dir / ("adv_" + row.keys[0] + "_" + row.keys[1] + ".jsonl"),
                        dataset, results, row.keys[0] + "_" + row.keys[1]);
      report.rows.push_back(std::move(row));
    }
  }
  write_file(cfg.output_dir / "report.csv", render_csv(report));
  write_file(cfg.output_dir / "samples.csv", render_samples_csv(report));
  write_file(cfg.output_dir / "report.md", render_markdown(report, cfg.name));
  return report;
}

std::vector<Toggles> ablation_rows() {
  return {
      {false, false, false, false}, {true, false, false, false}, {true, true, false, false},
      {true, true, true, false},    {true, true, false, true},   {true, true, true, true},
  };
}

CampaignReport run_ablation(const CampaignConfig& cfg) {
  const Dataset dataset = load_limited(cfg);
  const auto surrogates = open_models(cfg.surrogates, dataset);
  auto evaluated = surrogates;
  for (const auto& t : open_models(cfg.targets, dataset)) evaluated.push_back(t);
  const auto clean = clean_predictions(evaluated, dataset);

  CampaignReport report;
  report.key_names = {"A", "B", "C", "D"};
  report.target_ids = ids_of(cfg.surrogates);
  for (const auto& id : ids_of(cfg.targets)) report.target_ids.push_back(id);
  report.config_echo = describe(cfg);
  AverageGroup white{"white_box", {}};
  AverageGroup black{"black_box", {}};
  for (std::size_t c = 0; c < evaluated.size(); ++c) {
    (c < surrogates.size() ? white : black).columns.push_back(c);
  }
  report.average_groups = {white, black};

  fs::create_directories(cfg.output_dir);
  const auto mark = [](bool on) { return std::string(on ? "on" : "off"); };
  for (const Toggles& toggles : ablation_rows()) {
    AttackConfig attack = cfg.attack;
    attack.method = Method::Heat;
    attack.base = cfg.bases.front();
    attack.toggles = toggles;
    const auto start = std::chrono::steady_clock::now();
    const auto results = attack_dataset(surrogates, dataset, attack, cfg.threads);
    CampaignReport cell = evaluate_asr(evaluated, results, dataset, report.target_ids, &clean);
    ReportRow row = std::move(cell.rows.front());
    row.keys = {mark(toggles.cgrads), mark(toggles.intra), mark(toggles.loss_factor),
                mark(toggles.align_factor)};
    row.averages.clear();
    for (const auto& g : report.average_groups) row.averages.push_back(mean_of(row.asr, g.columns));
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string label = "ablate";
    for (const auto& k : row.keys) label += "_" + k;
    write_adversarial(cfg.output_dir / ("adv_" + label + ".jsonl"), dataset, results, label);
    report.rows.push_back(std::move(row));
  }
  write_file(cfg.output_dir / "ablation.csv", render_csv(report));
  write_file(cfg.output_dir / "ablation_samples.csv", render_samples_csv(report));
  write_file(cfg.output_dir / "ablation.md", render_markdown(report, cfg.name + " ablation"));
  return report;
}

}  // namespace heat
