// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "geomdn/geomdn.h"

#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "geomdn/config.hpp"
#include "geomdn/error.hpp"
#include "geomdn/geo_eval.hpp"
#include "geomdn/geolocation.hpp"
#include "geomdn/math_core.hpp"
#include "geomdn/pipeline.hpp"

struct geomdn_config {
  geomdn::RunConfig value;
};

struct geomdn_model {
  geomdn::Model model;
  std::optional<geomdn::Vocabulary> vocab;
};

namespace {

thread_local std::string last_error;

geomdn_status fail(geomdn_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename Fn>
geomdn_status guarded(Fn&& fn) {
  try {
    fn();
    return GEOMDN_OK;
  } catch (const geomdn::Error& e) {
    return fail(static_cast<geomdn_status>(e.code()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(GEOMDN_E_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(GEOMDN_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(GEOMDN_E_INTERNAL, e.what());
  } catch (...) {
    return fail(GEOMDN_E_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw geomdn::InvalidArgument(std::string(what) + " is null");
}

geomdn::LogSink sink(geomdn_line_fn fn, void* user) {
  if (fn == nullptr) return {};
  return [fn, user](const std::string& line) { fn(line.c_str(), user); };
}

void send_lines(const std::string& text, geomdn_line_fn fn, void* user) {
  if (fn == nullptr) return;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) fn(line.c_str(), user);
}

}  // namespace

extern "C" {

const char* geomdn_last_error(void) { return last_error.c_str(); }

const char* geomdn_status_name(geomdn_status status) {
  switch (status) {
    case GEOMDN_OK: return "ok";
    case GEOMDN_E_INVALID_ARGUMENT: return "invalid argument";
    case GEOMDN_E_DOMAIN: return "domain error";
    case GEOMDN_E_CONTRACT: return "contract violation";
    case GEOMDN_E_IO: return "i/o error";
    case GEOMDN_E_FORMAT: return "format error";
    case GEOMDN_E_TRAINING: return "training error";
    case GEOMDN_E_INIT: return "initialization error";
    case GEOMDN_E_PIPELINE: return "pipeline error";
    case GEOMDN_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* geomdn_version(void) { return "1.0.0"; }

geomdn_status geomdn_config_create(geomdn_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new geomdn_config();
  });
}

void geomdn_config_destroy(geomdn_config* config) { delete config; }

geomdn_status geomdn_config_set(geomdn_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->value.set(key, value);
  });
}

geomdn_status geomdn_config_get(const geomdn_config* config, const char* key, char* buf,
                                size_t capacity, size_t* needed) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    const std::string v = config->value.get(key);
    if (needed != nullptr) *needed = v.size() + 1;
    if (buf != nullptr && capacity >= v.size() + 1) std::memcpy(buf, v.c_str(), v.size() + 1);
  });
}

geomdn_status geomdn_config_apply_profile(geomdn_config* config, const char* name) {
  return guarded([&] {
    require(config, "config");
    require(name, "name");
    config->value.apply_profile(name);
  });
}

geomdn_status geomdn_config_load_file(geomdn_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    config->value.load_file(path);
  });
}

geomdn_status geomdn_config_validate(const geomdn_config* config, geomdn_line_fn warn,
                                     void* user) {
  return guarded([&] {
    require(config, "config");
    for (const auto& w : config->value.validate()) {
      if (warn != nullptr) warn(w.c_str(), user);
    }
  });
}

size_t geomdn_config_key_count(void) { return geomdn::RunConfig::keys().size(); }

const char* geomdn_config_key_name(size_t index) {
  const auto& k = geomdn::RunConfig::keys();
  return index < k.size() ? k[index].name : nullptr;
}

const char* geomdn_config_key_section(size_t index) {
  const auto& k = geomdn::RunConfig::keys();
  return index < k.size() ? k[index].section : nullptr;
}

const char* geomdn_config_key_help(size_t index) {
  const auto& k = geomdn::RunConfig::keys();
  return index < k.size() ? k[index].help : nullptr;
}

size_t geomdn_profile_count(void) { return geomdn::RunConfig::profile_names().size(); }

const char* geomdn_profile_name(size_t index) {
  const auto& p = geomdn::RunConfig::profile_names();
  return index < p.size() ? p[index].c_str() : nullptr;
}

geomdn_status geomdn_train(const geomdn_config* config, geomdn_line_fn log, void* user) {
  return guarded([&] {
    require(config, "config");
    geomdn::run_train(config->value, sink(log, user));
  });
}

geomdn_status geomdn_evaluate(const geomdn_config* config, geomdn_eval_report* report,
                              geomdn_line_fn out, geomdn_line_fn log, void* user) {
  return guarded([&] {
    require(config, "config");
    const auto s = geomdn::run_evaluate(config->value, sink(log, user));
    if (report != nullptr) {
      report->is_geolocation = s.geolocation ? 1 : 0;
      report->acc_at_161 = s.report.acc_at_161;
      report->mean_km = s.report.mean_km;
      report->median_km = s.report.median_km;
      report->perplexity = s.perplexity;
      report->users = s.users;
      report->vocab_size = s.vocab_size;
    }
    send_lines(geomdn::format_evaluate_summary(s), out, user);
  });
}

geomdn_status geomdn_predict(const geomdn_config* config, const char* input_path,
                             const char* text, size_t top_k, geomdn_line_fn out, void* user) {
  return guarded([&] {
    require(config, "config");
    const auto& cfg = config->value;
    geomdn::Model model = geomdn::load_model(cfg.checkpoint_path);
    const auto vocab = geomdn::Vocabulary::load_file(cfg.vocab_path);
    geomdn::check_vocab(model, vocab);
    std::vector<geomdn::PredictInput> inputs;
    if (input_path != nullptr) {
      std::ifstream in(input_path);
      if (!in) throw geomdn::IoError(std::string("cannot open ") + input_path);
      inputs = geomdn::read_predict_inputs(in);
    } else {
      require(text, "text");
      inputs.push_back({"input", text});
    }
    const auto rule = cfg.was_set("rule") ? cfg.rule : model.head.rule;
    if (cfg.output_path.empty()) {
      std::ostringstream os;
      geomdn::write_predictions(os, model, vocab, inputs, rule, top_k);
      send_lines(os.str(), out, user);
    } else {
      std::ofstream os(cfg.output_path, std::ios::binary);
      if (!os) throw geomdn::IoError("cannot write " + cfg.output_path);
      geomdn::write_predictions(os, model, vocab, inputs, rule, top_k);
      os.close();
      if (!os) throw geomdn::IoError("failed writing " + cfg.output_path);
    }
  });
}

geomdn_status geomdn_dialect(const geomdn_config* config, const char* regions_path,
                             size_t samples, size_t k, double radius_km, geomdn_line_fn out,
                             geomdn_line_fn log, void* user) {
  return guarded([&] {
    require(config, "config");
    require(regions_path, "regions_path");
    geomdn::DialectOptions options;
    options.regions_path = regions_path;
    options.samples = samples;
    options.k = k;
    options.radius_km = radius_km;
    const auto reports = geomdn::run_dialect(config->value, options, sink(log, user));
    if (out == nullptr) return;
    char buf[256];
    out("region\tin_region\trecall", user);
    for (const auto& r : reports) {
      if (r.skipped || !r.recall.defined) {
        std::snprintf(buf, sizeof buf, "\t%zu\tNA", r.in_region);
      } else {
        std::snprintf(buf, sizeof buf, "\t%zu\t%.4f", r.in_region, r.recall.recall);
      }
      out((r.region + buf).c_str(), user);
    }
  });
}

geomdn_status geomdn_heatmap(const geomdn_config* config, const char* word, const char* text,
                             double lat_min, double lat_max, double lon_min, double lon_max,
                             size_t resolution) {
  return guarded([&] {
    require(config, "config");
    geomdn::HeatmapOptions options;
    if (word != nullptr) options.word = word;
    if (text != nullptr) options.text = text;
    options.bbox = {lat_min, lat_max, lon_min, lon_max};
    options.resolution = resolution;
    geomdn::run_heatmap(config->value, options);
  });
}

geomdn_status geomdn_synth(const geomdn_config* config, const char* preset,
                           const char* out_dir) {
  return guarded([&] {
    require(config, "config");
    require(preset, "preset");
    require(out_dir, "out_dir");
    geomdn::write_synthetic(geomdn::synthetic_spec_for(config->value, preset), out_dir);
  });
}

geomdn_status geomdn_model_load(const char* checkpoint_path, const char* vocab_path,
                                geomdn_model** out) {
  return guarded([&] {
    require(checkpoint_path, "checkpoint_path");
    require(out, "out");
    auto handle = std::make_unique<geomdn_model>();
    handle->model = geomdn::load_model(checkpoint_path);
    if (vocab_path != nullptr) {
      handle->vocab = geomdn::Vocabulary::load_file(vocab_path);
      geomdn::check_vocab(handle->model, *handle->vocab);
    }
    *out = handle.release();
  });
}

void geomdn_model_destroy(geomdn_model* model) { delete model; }

geomdn_status geomdn_model_save(const geomdn_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    geomdn::save_model(model->model, path);
  });
}

const char* geomdn_model_kind(const geomdn_model* model) {
  return model == nullptr ? nullptr : geomdn::to_string(model->model.kind);
}

size_t geomdn_model_num_components(const geomdn_model* model) {
  return model == nullptr ? 0 : model->model.head.num_components;
}

geomdn_status geomdn_model_predict(const geomdn_model* model, const char* const* texts,
                                   size_t n, geomdn_rule rule, double* out_latlon) {
  return guarded([&] {
    require(model, "model");
    if (n == 0) return;
    require(texts, "texts");
    require(out_latlon, "out_latlon");
    if (!model->vocab) throw geomdn::InvalidArgument("model was loaded without a vocabulary");
    std::vector<geomdn::UserRecord> records(n);
    for (size_t i = 0; i < n; ++i) {
      require(texts[i], "text");
      records[i].text = texts[i];
    }
    geomdn::SelectionRule r = model->model.head.rule;
    if (rule == GEOMDN_RULE_STRONGEST_PI) r = geomdn::SelectionRule::kStrongestPi;
    if (rule == GEOMDN_RULE_MAX_MIXTURE_PROB) r = geomdn::SelectionRule::kMaxMixtureProb;
    const auto points = geomdn::predict_records(model->model, *model->vocab, records, r);
    for (size_t i = 0; i < n; ++i) {
      out_latlon[2 * i] = points[i].lat;
      out_latlon[2 * i + 1] = points[i].lon;
    }
  });
}

geomdn_status geomdn_log_pdf(double mu1, double mu2, double sigma1, double sigma2, double rho,
                             double x1, double x2, double* out) {
  return guarded([&] {
    require(out, "out");
    const geomdn::GaussianParams g{mu1, mu2, sigma1, sigma2, rho};
    g.validate();
    *out = geomdn::log_pdf(g, {x1, x2});
  });
}

double geomdn_haversine_km(double lat1, double lon1, double lat2, double lon2) {
  return geomdn::haversine_km({lat1, lon1}, {lat2, lon2});
}

}  // extern "C"
