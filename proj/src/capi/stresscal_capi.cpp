#include "stresscal/stresscal.h"

#include <cstring>
#include <new>
#include <string>

#include "stresscal/config.hpp"
#include "stresscal/dataio.hpp"
#include "stresscal/diag.hpp"
#include "stresscal/error.hpp"
#include "stresscal/model.hpp"
#include "stresscal/pipeline.hpp"

struct sc_config {
  stresscal::ConfigFile file;
};

struct sc_table {
  stresscal::FeatureTable table;
};

struct sc_model {
  stresscal::ModelArtifact model;
};

namespace {

thread_local std::string last_error;

sc_status record(sc_status status, const char* message) {
  last_error = message;
  return status;
}

// Runs `f`, translating every exception into a status code.
template <class F>
sc_status guarded(F&& f) {
  try {
    f();
    return SC_OK;
  } catch (const stresscal::Error& e) {
    return record(static_cast<sc_status>(static_cast<int>(e.kind())), e.what());
  } catch (const std::bad_alloc&) {
    return record(SC_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(SC_E_INTERNAL, e.what());
  } catch (...) {
    return record(SC_E_INTERNAL, "unknown error");
  }
}

sc_status null_argument(const char* name) {
  return record(SC_E_USAGE, (std::string("null argument: ") + name).c_str());
}

stresscal::pipeline::OutputFn sink(sc_text_fn out, void* user) {
  return [out, user](std::string_view text) {
    if (out != nullptr) {
      const std::string s(text);
      out(s.c_str(), user);
    }
  };
}

template <class Run>
sc_status run_stage(const sc_config* config, sc_text_fn out, void* user, Run run) {
  if (config == nullptr) return null_argument("config");
  return guarded([&] { run(config->file, sink(out, user)); });
}

}  // namespace

extern "C" {

const char* sc_version(void) { return "1.0.0"; }

const char* sc_status_name(sc_status status) {
  switch (status) {
    case SC_OK: return "ok";
    case SC_E_INTERNAL: return "internal";
    default: break;
  }
  const int code = static_cast<int>(status);
  if (code >= 1 && code <= static_cast<int>(stresscal::ErrorKind::policy)) {
    return stresscal::error_kind_name(static_cast<stresscal::ErrorKind>(code));
  }
  return "unknown";
}

const char* sc_last_error(void) { return last_error.c_str(); }

void sc_set_warning_handler(sc_text_fn fn, void* user) {
  if (fn == nullptr) {
    stresscal::set_warning_sink(nullptr);
    return;
  }
  stresscal::set_warning_sink([fn, user](const std::string& message) { fn(message.c_str(), user); });
}

sc_status sc_config_new(sc_config** out) {
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = new sc_config{}; });
}

sc_status sc_config_load(const char* path, sc_config** out) {
  if (path == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    auto file = stresscal::ConfigFile::load(path);
    *out = new sc_config{std::move(file)};
  });
}

sc_status sc_config_set(sc_config* config, const char* key, const char* value) {
  if (config == nullptr) return null_argument("config");
  if (key == nullptr) return null_argument("key");
  if (value == nullptr) return null_argument("value");
  return guarded([&] {
    if (!stresscal::config_defaults().count(key)) {
      stresscal::fail(stresscal::ErrorKind::config, std::string("unknown config key ") + key);
    }
    config->file.set(key, value);
  });
}

sc_status sc_config_get(const sc_config* config, const char* key, char* buf, size_t len, size_t* needed) {
  if (config == nullptr) return null_argument("config");
  if (key == nullptr) return null_argument("key");
  return guarded([&] {
    auto value = config->file.get(key);
    if (!value) {
      const auto& defaults = stresscal::config_defaults();
      const auto it = defaults.find(key);
      if (it == defaults.end() || it->second.empty()) {
        stresscal::fail(stresscal::ErrorKind::usage, std::string("config key ") + key + " is not set");
      }
      value = it->second;
    }
    if (needed != nullptr) *needed = value->size() + 1;
    if (buf != nullptr && len > 0) {
      const size_t n = std::min(len - 1, value->size());
      std::memcpy(buf, value->data(), n);
      buf[n] = '\0';
    }
  });
}

sc_status sc_config_validate(const sc_config* config) {
  if (config == nullptr) return null_argument("config");
  return guarded([&] { (void)stresscal::RunConfig::resolve(config->file); });
}

void sc_config_free(sc_config* config) { delete config; }

sc_status sc_run_extract(const sc_config* config, sc_text_fn out, void* user) {
  return run_stage(config, out, user, stresscal::pipeline::run_extract);
}
sc_status sc_run_train(const sc_config* config, sc_text_fn out, void* user) {
  return run_stage(config, out, user, stresscal::pipeline::run_train);
}
sc_status sc_run_evaluate(const sc_config* config, sc_text_fn out, void* user) {
  return run_stage(config, out, user, stresscal::pipeline::run_evaluate);
}
sc_status sc_run_calibrate(const sc_config* config, sc_text_fn out, void* user) {
  return run_stage(config, out, user, stresscal::pipeline::run_calibrate);
}
sc_status sc_run_rank_features(const sc_config* config, sc_text_fn out, void* user) {
  return run_stage(config, out, user, stresscal::pipeline::run_rank_features);
}
sc_status sc_run_report(const sc_config* config, sc_text_fn out, void* user) {
  return run_stage(config, out, user, stresscal::pipeline::run_report);
}

sc_status sc_table_load(const char* csv_path, const char* schema_path, sc_table** out) {
  if (csv_path == nullptr) return null_argument("csv_path");
  if (schema_path == nullptr) return null_argument("schema_path");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    const auto schema = stresscal::TableSchema::load(schema_path);
    *out = new sc_table{stresscal::load_feature_table(csv_path, schema)};
  });
}

size_t sc_table_num_rows(const sc_table* table) { return table ? table->table.num_rows() : 0; }
size_t sc_table_num_features(const sc_table* table) { return table ? table->table.num_features() : 0; }
size_t sc_table_num_labels(const sc_table* table) { return table ? table->table.labels.size() : 0; }

sc_status sc_table_copy_features(const sc_table* table, double* out, size_t len) {
  if (table == nullptr) return null_argument("table");
  if (out == nullptr) return null_argument("out");
  const auto& t = table->table;
  if (len != t.num_rows() * t.num_features()) {
    return record(SC_E_SHAPE, "buffer length must equal rows * features");
  }
  for (size_t r = 0; r < t.num_rows(); ++r) {
    std::memcpy(out + r * t.num_features(), t.rows[r].features.data(), t.num_features() * sizeof(double));
  }
  return SC_OK;
}

void sc_table_free(sc_table* table) { delete table; }

sc_status sc_model_load(const char* path, sc_model** out) {
  if (path == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = new sc_model{stresscal::load_model(path)}; });
}

sc_status sc_model_save(const sc_model* model, const char* path) {
  if (model == nullptr) return null_argument("model");
  if (path == nullptr) return null_argument("path");
  return guarded([&] { stresscal::save_model(model->model, path); });
}

size_t sc_model_num_features(const sc_model* model) { return model ? model->model.feature_names.size() : 0; }
size_t sc_model_num_trees(const sc_model* model) { return model ? model->model.ensemble.trees.size() : 0; }

sc_status sc_model_fit(const sc_config* config, const sc_table* table, sc_model** out) {
  if (config == nullptr) return null_argument("config");
  if (table == nullptr) return null_argument("table");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    const auto cfg = stresscal::RunConfig::resolve(config->file);
    const auto hyper = cfg.hyperparams(stresscal::Algorithm::random_forest, table->table.task);
    stresscal::FeatureTable t = table->table;
    t.task = hyper.task;
    *out = new sc_model{stresscal::fit_model(t, hyper, cfg.protocol_options().model_options())};
  });
}

sc_status sc_model_predict(const sc_model* model, const double* features, size_t n, double* out) {
  if (model == nullptr) return null_argument("model");
  if (features == nullptr) return null_argument("features");
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = model->model.predict({features, n}); });
}

sc_status sc_model_importances(const sc_model* model, double* out, size_t n) {
  if (model == nullptr) return null_argument("model");
  if (out == nullptr) return null_argument("out");
  const auto& values = model->model.ensemble.importances.values;
  if (n != values.size()) return record(SC_E_SHAPE, "buffer length must equal the feature count");
  std::copy(values.begin(), values.end(), out);
  return SC_OK;
}

void sc_model_free(sc_model* model) { delete model; }

}  // extern "C"
