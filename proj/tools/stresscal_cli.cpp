// stresscal command-line front end. Precedence: built-in defaults, then the
// --config file, then flags.

#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "stresscal/stresscal.h"

namespace {

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

const std::vector<FlagSpec> kModelFlags{
    {"--features", "data.features", "feature table CSV"},
    {"--schema", "data.schema", "column-role schema (default: <features>.schema)"},
    {"--algorithm", "model.algorithm", "rf | extratrees"},
    {"--task", "model.task", "classification | regression"},
    {"--n-trees", "model.n_trees", "number of trees"},
    {"--max-depth", "model.max_depth", "maximum tree depth"},
    {"--max-features", "model.max_features", "auto | sqrt | third | all | N"},
    {"--bootstrap", "model.bootstrap", "true | false"},
    {"--transforms", "transform.enabled", "apply skew transforms and robust scaling: true | false"},
    {"--skew-threshold", "transform.skew_threshold", "|skew| above which a column is transformed"},
    {"--rebalance", "transform.rebalance", "downsample classes to the minority count: true | false"},
    {"--select", "transform.select", "MDI feature selection: top_k=N | min_mdi=x"},
};

const std::map<std::string, std::vector<FlagSpec>> kCommandFlags{
    {"extract",
     {{"--manifest", "data.manifest", "CSV: subject,kind,path,sample_rate_hz,conditions"},
      {"--source", "extract.source", "hrv | eda"},
      {"--hrv-window-s", "features.hrv_window_s", "HRV window length in seconds"},
      {"--eda-window-s", "features.eda_window_s", "EDA window length in seconds"},
      {"--eda-step", "features.eda_step", "EDA window step in samples"},
      {"--cutoff-hz", "signal.cutoff_hz", "EDA low-pass cutoff"},
      {"--filter-order", "signal.filter_order", "EDA low-pass order (even)"},
      {"--smooth-window-s", "signal.smooth_window_s", "EDA moving-average window in seconds"},
      {"--scr-threshold", "signal.scr_threshold", "SCR onset slope threshold in uS/s"},
      {"--labels", "features.labels", "declared label order, comma separated"}}},
    {"train", {{"--model", "data.model", "output model path (default: <out-dir>/model.json)"}}},
    {"evaluate",
     {{"--protocol", "protocol.name", "kfold | loso"},
      {"--folds", "protocol.folds", "k for k-fold"},
      {"--subject", "protocol.subject", "restrict k-fold to one subject"}}},
    {"calibrate",
     {{"--q", "calibration.q", "held-out subjects"},
      {"--sizes", "calibration.sizes", "calibration sizes per subject, e.g. 0,10,100"},
      {"--fraction", "calibration.fraction", "share of each held-out subject used as calibration pool"}}},
    {"rank-features", {}},
    {"report",
     {{"--input", "report.input", "evaluation or calibration JSON"},
      {"--format", "report.format", "text | csv | json"},
      {"--output", "report.output", "output file (default: stdout)"}}},
};

const std::vector<std::pair<const char*, const char*>> kCommandHelp{
    {"extract", "windowed HRV/EDA features from raw recordings"},
    {"train", "fit a forest and write the model artifact"},
    {"evaluate", "person-specific k-fold or leave-one-subject-out evaluation"},
    {"calibrate", "calibration sweep over per-subject sample counts"},
    {"rank-features", "MDI ranking with the subject id as a control feature"},
    {"report", "render a saved evaluation or calibration report"},
};

int exit_code(sc_status status) {
  if (status == SC_OK) return 0;
  return status == SC_E_USAGE || status == SC_E_CONFIG ? 2 : 1;
}

void print_text(const char* text, void*) {
  std::fputs(text, stdout);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stresscal: stress prediction from physiological signals"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::map<std::string, std::string> values;  // config key -> flag value
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "run configuration (TOML subset)");
  app.add_option("--seed", values["run.seed"], "master seed");
  app.add_option("--out-dir", values["run.out_dir"], "output directory");
  app.add_option("--threads", values["run.threads"], "worker threads");
  app.add_option("--set", overrides, "override any config key: section.key=value");

  std::map<std::string, CLI::App*> commands;
  for (const auto& [name, help] : kCommandHelp) {
    CLI::App* sub = app.add_subcommand(name, help);
    const auto& flags = kCommandFlags.at(name);
    for (const auto& f : flags) sub->add_option(f.flag, values[f.key], f.help);
    if (std::string(name) != "extract" && std::string(name) != "report") {
      for (const auto& f : kModelFlags) {
        if (!sub->get_option_no_throw(f.flag)) sub->add_option(f.flag, values[f.key], f.help);
      }
    }
    commands[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  sc_config* config = nullptr;
  sc_status status = config_path.empty() ? sc_config_new(&config) : sc_config_load(config_path.c_str(), &config);
  auto fail = [&](sc_status s) {
    std::fprintf(stderr, "stresscal: %s: %s\n", sc_status_name(s), sc_last_error());
    sc_config_free(config);
    return exit_code(s);
  };
  if (status != SC_OK) return fail(status);

  for (const auto& [key, value] : values) {
    if (value.empty()) continue;
    if ((status = sc_config_set(config, key.c_str(), value.c_str())) != SC_OK) return fail(status);
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "stresscal: usage error: --set expects section.key=value, got '%s'\n", o.c_str());
      sc_config_free(config);
      return 2;
    }
    const std::string key = o.substr(0, eq);
    const std::string value = o.substr(eq + 1);
    if ((status = sc_config_set(config, key.c_str(), value.c_str())) != SC_OK) return fail(status);
  }
  if ((status = sc_config_validate(config)) != SC_OK) return fail(status);

  using Runner = sc_status (*)(const sc_config*, sc_text_fn, void*);
  const std::map<std::string, Runner> runners{
      {"extract", sc_run_extract},     {"train", sc_run_train},
      {"evaluate", sc_run_evaluate},   {"calibrate", sc_run_calibrate},
      {"rank-features", sc_run_rank_features}, {"report", sc_run_report},
  };
  for (const auto& [name, sub] : commands) {
    if (sub->parsed()) {
      status = runners.at(name)(config, print_text, nullptr);
      break;
    }
  }
  if (status != SC_OK) return fail(status);
  sc_config_free(config);
  return 0;
}
