// Copyright 2026 the lser authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define LSER_BUILDING
#include "lser/lser.h"

#include <cstring>
#include <string>

#include "errors.hpp"
#include "pipeline.hpp"

namespace {

thread_local std::string g_last_error;

lser_status status_from_errc(lser::Errc c) {
  using lser::Errc;
  switch (c) {
    case Errc::ok: return LSER_OK;
    case Errc::file_not_found: return LSER_ERR_FILE_NOT_FOUND;
    case Errc::malformed_riff: return LSER_ERR_MALFORMED_RIFF;
    case Errc::unsupported_encoding: return LSER_ERR_UNSUPPORTED_ENCODING;
    case Errc::short_signal: return LSER_ERR_SHORT_SIGNAL;
    case Errc::bad_argument: return LSER_ERR_BAD_ARGUMENT;
    case Errc::silent_frame: return LSER_ERR_SILENT_FRAME;
    case Errc::degenerate_frame: return LSER_ERR_DEGENERATE_FRAME;
    case Errc::dimension_mismatch: return LSER_ERR_DIMENSION_MISMATCH;
    case Errc::missing_cache: return LSER_ERR_MISSING_CACHE;
    case Errc::io_error: return LSER_ERR_IO;
    case Errc::bad_config: return LSER_ERR_BAD_CONFIG;
    case Errc::numeric_fault: return LSER_ERR_NUMERIC_FAULT;
    case Errc::internal: return LSER_ERR_INTERNAL;
  }
  return LSER_ERR_INTERNAL;
}

// Runs fn, translating exceptions into status codes + the thread-local
// detail message.
template <class Fn>
lser_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return LSER_OK;
  } catch (const lser::Error& e) {
    g_last_error = e.what();
    return status_from_errc(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LSER_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LSER_ERR_INTERNAL;
  }
}

void fill_stats(lser_stage_stats* out, const lser::StageStats& stats) {
  if (!out) return;
  out->computed = stats.computed;
  out->reused = stats.reused;
  out->failed = static_cast<int32_t>(stats.failures.size());
}

std::string join_failures(const char* stage,
                          const std::vector<std::string>& failures) {
  std::string message = std::string(stage) + " failures:";
  for (const auto& f : failures) message += "\n  " + f;
  return message;
}

}  // namespace

struct lser_config {
  lser::PipelineConfig impl;
};

struct lser_report {
  lser::EvaluateOutput impl;
  std::string json_path;
  std::string csv_path;
};

extern "C" {

const char* lser_version(void) { return "0.1.0"; }

const char* lser_status_name(lser_status status) {
  switch (status) {
    case LSER_OK: return "ok";
    case LSER_ERR_FILE_NOT_FOUND: return "file_not_found";
    case LSER_ERR_MALFORMED_RIFF: return "malformed_riff";
    case LSER_ERR_UNSUPPORTED_ENCODING: return "unsupported_encoding";
    case LSER_ERR_SHORT_SIGNAL: return "short_signal";
    case LSER_ERR_BAD_ARGUMENT: return "bad_argument";
    case LSER_ERR_SILENT_FRAME: return "silent_frame";
    case LSER_ERR_DEGENERATE_FRAME: return "degenerate_frame";
    case LSER_ERR_DIMENSION_MISMATCH: return "dimension_mismatch";
    case LSER_ERR_MISSING_CACHE: return "missing_cache";
    case LSER_ERR_IO: return "io_error";
    case LSER_ERR_BAD_CONFIG: return "bad_config";
    case LSER_ERR_NUMERIC_FAULT: return "numeric_fault";
    case LSER_ERR_STAGE_FAILURES: return "stage_failures";
    case LSER_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* lser_last_error_message(void) { return g_last_error.c_str(); }

lser_config* lser_config_create(void) {
  return new lser_config{lser::default_config()};
}

void lser_config_destroy(lser_config* config) { delete config; }

lser_status lser_config_load(const char* path, lser_config** out) {
  if (!path || !out) {
    g_last_error = "null argument";
    return LSER_ERR_BAD_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&] { *out = new lser_config{lser::load_config(path)}; });
}

lser_status lser_config_save(const lser_config* config, const char* path) {
  if (!config || !path) {
    g_last_error = "null argument";
    return LSER_ERR_BAD_ARGUMENT;
  }
  return guarded([&] { lser::save_config(config->impl, path); });
}

lser_status lser_config_set(lser_config* config, const char* key,
                            const char* value) {
  if (!config || !key || !value) {
    g_last_error = "null argument";
    return LSER_ERR_BAD_ARGUMENT;
  }
  return guarded([&] { lser::config_set(config->impl, key, value); });
}

lser_status lser_config_get(const lser_config* config, const char* key,
                            char* buf, size_t bufsize, size_t* size) {
  if (!config || !key) {
    g_last_error = "null argument";
    return LSER_ERR_BAD_ARGUMENT;
  }
  return guarded([&] {
    const std::string value = lser::config_get(config->impl, key);
    if (size) *size = value.size() + 1;
    if (buf && bufsize > 0) {
      const size_t n = std::min(bufsize - 1, value.size());
      std::memcpy(buf, value.data(), n);
      buf[n] = '\0';
    }
  });
}

lser_status lser_make_synthetic_corpus(const char* dir, uint64_t seed,
                                       int32_t n_per_class) {
  if (!dir) {
    g_last_error = "null argument";
    return LSER_ERR_BAD_ARGUMENT;
  }
  return guarded(
      [&] { lser::make_synthetic_corpus(dir, seed, n_per_class); });
}

lser_status lser_run_preprocess(const lser_config* config,
                                lser_stage_stats* stats) {
  if (!config) {
    g_last_error = "null argument";
    return LSER_ERR_BAD_ARGUMENT;
  }
  lser::StageStats result;
  const lser_status st =
      guarded([&] { result = lser::run_preprocess(config->impl); });
  fill_stats(stats, result);
  if (st != LSER_OK) return st;
  if (!result.failures.empty()) {
    g_last_error = join_failures("preprocess", result.failures);
    return LSER_ERR_STAGE_FAILURES;
  }
  return LSER_OK;
}

lser_status lser_run_simulate(const lser_config* config,
                              lser_stage_stats* stats) {
  if (!config) {
    g_last_error = "null argument";
    return LSER_ERR_BAD_ARGUMENT;
  }
  lser::StageStats result;
  const lser_status st =
      guarded([&] { result = lser::run_simulate(config->impl); });
  fill_stats(stats, result);
  if (st != LSER_OK) return st;
  if (!result.failures.empty()) {
    g_last_error = join_failures("simulate", result.failures);
    return LSER_ERR_STAGE_FAILURES;
  }
  return LSER_OK;
}

lser_status lser_run_evaluate(const lser_config* config, lser_report** out) {
  if (!config || !out) {
    g_last_error = "null argument";
    return LSER_ERR_BAD_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&] {
    auto* report = new lser_report{lser::run_evaluate(config->impl), "", ""};
    report->json_path = report->impl.report_json.string();
    report->csv_path = report->impl.confusion_csv.string();
    *out = report;
  });
}

lser_status lser_run_all(const lser_config* config, lser_report** out) {
  if (!config || !out) {
    g_last_error = "null argument";
    return LSER_ERR_BAD_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&] {
    lser::RunAllResult result = lser::run_all(config->impl);
    auto* report = new lser_report{std::move(result.evaluate), "", ""};
    report->json_path = report->impl.report_json.string();
    report->csv_path = report->impl.confusion_csv.string();
    *out = report;
  });
}

lser_status lser_run_sweep(const lser_config* config) {
  if (!config) {
    g_last_error = "null argument";
    return LSER_ERR_BAD_ARGUMENT;
  }
  return guarded([&] { lser::run_sweep(config->impl); });
}

void lser_report_destroy(lser_report* report) { delete report; }

double lser_report_mean_accuracy(const lser_report* report) {
  return report ? report->impl.report.mean_accuracy : 0.0;
}

double lser_report_ci95(const lser_report* report) {
  return report ? report->impl.report.ci95_half_width : 0.0;
}

int32_t lser_report_n_classes(const lser_report* report) {
  return report ? report->impl.report.n_classes : 0;
}

int64_t lser_report_confusion(const lser_report* report, int32_t truth,
                              int32_t predicted) {
  if (!report || truth < 0 || predicted < 0 ||
      truth >= report->impl.report.n_classes ||
      predicted >= report->impl.report.n_classes) {
    return -1;
  }
  return report->impl.report.confusion(truth, predicted);
}

const char* lser_report_json_path(const lser_report* report) {
  return report ? report->json_path.c_str() : "";
}

const char* lser_report_confusion_csv_path(const lser_report* report) {
  return report ? report->csv_path.c_str() : "";
}

}  // extern "C"
