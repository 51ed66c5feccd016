// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the library only through geomdn.h.

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "geomdn/geomdn.h"

namespace {

struct Common {
  std::string config_file;
  std::string profile;
  std::map<std::string, std::string> keys;  // flag values, by config key
  std::map<std::string, CLI::Option*> options;
};

void to_stdout(const char* line, void*) { std::printf("%s\n", line); }
void to_stderr(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }
void warn(const char* line, void*) { std::fprintf(stderr, "warning: %s\n", line); }

std::string profile_list() {
  std::string out;
  for (size_t i = 0; i < geomdn_profile_count(); ++i) {
    out += (i ? ", " : "") + std::string(geomdn_profile_name(i));
  }
  return out;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "config file ([section] key = value)");
  cmd->add_option("--profile", c.profile, "hyper-parameter profile: " + profile_list());
  for (size_t i = 0; i < geomdn_config_key_count(); ++i) {
    const std::string key = geomdn_config_key_name(i);
    const std::string group = geomdn_config_key_section(i);
    c.options[key] = cmd->add_option("--" + key, c.keys[key], geomdn_config_key_help(i))
                         ->group(group + " settings");
  }
}

int report(geomdn_status s) {
  if (s == GEOMDN_OK) return 0;
  std::fprintf(stderr, "error (%s): %s\n", geomdn_status_name(s), geomdn_last_error());
  return static_cast<int>(s);
}

// Defaults, then the profile, then the file, then flags.
// Training reports its own warnings.
int build_config(const Common& c, bool quiet, geomdn_config** out) {
  geomdn_config* cfg = nullptr;
  if (int rc = report(geomdn_config_create(&cfg))) return rc;
  *out = cfg;
  if (!c.profile.empty()) {
    if (int rc = report(geomdn_config_apply_profile(cfg, c.profile.c_str()))) return rc;
  }
  if (!c.config_file.empty()) {
    if (int rc = report(geomdn_config_load_file(cfg, c.config_file.c_str()))) return rc;
  }
  for (size_t i = 0; i < geomdn_config_key_count(); ++i) {
    const std::string key = geomdn_config_key_name(i);
    if (c.options.at(key)->count() == 0) continue;
    if (int rc = report(geomdn_config_set(cfg, key.c_str(), c.keys.at(key).c_str()))) {
      return rc;
    }
  }
  return report(geomdn_config_validate(cfg, quiet ? nullptr : warn, nullptr));
}

bool parse_bbox(const std::string& text, double box[4]) {
  std::istringstream in(text);
  char comma = 0;
  in >> box[0] >> comma >> box[1] >> comma >> box[2] >> comma >> box[3];
  return !in.fail() && in.peek() == EOF;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture density networks for text geolocation and lexical dialectology"};
  app.require_subcommand(1);
  app.set_version_flag("--version", geomdn_version());

  auto* train = app.add_subcommand("train", "train a model and write vocabulary, checkpoint, log");
  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on the test corpus");
  auto* predict = app.add_subcommand("predict", "predict locations and mixture components");
  auto* dialect = app.add_subcommand("dialect", "rank regional terms with a dialect model");
  auto* heatmap = app.add_subcommand("heatmap", "export a log-probability grid as CSV");
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  std::map<CLI::App*, Common> commons;
  for (auto* cmd : {train, evaluate, predict, dialect, heatmap, synth}) {
    add_common(cmd, commons[cmd]);
  }

  std::string input_path, text;
  size_t top_k = 3;
  auto* input_opt = predict->add_option("--input", input_path,
                                        "one user per line: id TAB text, or bare text");
  predict->add_option("--text", text, "a single input text")->excludes(input_opt);
  predict->add_option("--top-k", top_k, "mixture components to list (clamped to K)")
      ->capture_default_str();

  std::string regions;
  size_t samples = 10000, recall_k = 10;
  double radius_km = 161.0;
  dialect->add_option("--regions", regions, "regions file: name TAB lat,lon;... TAB terms")
      ->required();
  dialect->add_option("--samples", samples, "training points to sample (P)")
      ->capture_default_str();
  dialect->add_option("--recall-k", recall_k, "cutoff for recall@k")->capture_default_str();
  dialect->add_option("--radius-km", radius_km, "region membership radius")
      ->capture_default_str();

  std::string word, heat_text, bbox = "24,50,-125,-66";
  size_t resolution = 100;
  heatmap->add_option("--word", word, "term to map (dialect models)");
  heatmap->add_option("--text", heat_text, "input text (mixture models)");
  heatmap->add_option("--bbox", bbox, "lat_min,lat_max,lon_min,lon_max")->capture_default_str();
  heatmap->add_option("--resolution", resolution, "cells per side")->capture_default_str();

  std::string preset = "bimodal", out_dir;
  synth->add_option("--preset", preset, "bimodal or dialect")->capture_default_str();
  synth->add_option("--out-dir", out_dir, "directory for the TSV files")->required();

  CLI11_PARSE(app, argc, argv);

  const Common* common = nullptr;
  for (const auto& [cmd, c] : commons) {
    if (cmd->parsed()) common = &c;
  }
  geomdn_config* cfg = nullptr;
  int rc = build_config(*common, train->parsed(), &cfg);
  if (rc == 0) {
    if (train->parsed()) {
      rc = report(geomdn_train(cfg, to_stderr, nullptr));
    } else if (evaluate->parsed()) {
      geomdn_eval_report r{};
      rc = report(geomdn_evaluate(cfg, &r, to_stdout, to_stderr, nullptr));
    } else if (predict->parsed()) {
      if (input_path.empty() && predict->count("--text") == 0) {
        std::fprintf(stderr, "error: predict needs --input or --text\n");
        rc = 2;
      } else {
        rc = report(geomdn_predict(cfg, input_path.empty() ? nullptr : input_path.c_str(),
                                   text.c_str(), top_k, to_stdout, nullptr));
      }
    } else if (dialect->parsed()) {
      rc = report(geomdn_dialect(cfg, regions.c_str(), samples, recall_k, radius_km, to_stdout,
                                 to_stderr, nullptr));
    } else if (heatmap->parsed()) {
      double box[4];
      if (!parse_bbox(bbox, box)) {
        std::fprintf(stderr, "error: --bbox expects lat_min,lat_max,lon_min,lon_max\n");
        rc = 2;
      } else {
        rc = report(geomdn_heatmap(cfg, word.c_str(), heat_text.c_str(), box[0], box[1],
                                   box[2], box[3], resolution));
      }
    } else if (synth->parsed()) {
      rc = report(geomdn_synth(cfg, preset.c_str(), out_dir.c_str()));
    }
  }
  geomdn_config_destroy(cfg);
  return rc;
}
