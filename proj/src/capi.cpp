#include "mip.h"

#include <exception>
#include <string>
#include <utility>
#include <vector>

#include "mip/error.hpp"
#include "mip/runner.hpp"
#include "mip/scenario.hpp"

struct mip_scenario {
  mip::Scenario scen;
};

struct mip_report {
  mip::RunReport rep;
};

namespace {

thread_local std::string g_last_error;

mip_status map_code(mip::ErrorCode code) {
  switch (code) {
    case mip::ErrorCode::invalid_argument:
      return MIP_ERR_INVALID_ARGUMENT;
    case mip::ErrorCode::dimension_mismatch:
      return MIP_ERR_DIMENSION_MISMATCH;
    case mip::ErrorCode::invalid_body:
      return MIP_ERR_INVALID_BODY;
    case mip::ErrorCode::unsupported:
      return MIP_ERR_UNSUPPORTED;
    case mip::ErrorCode::precondition:
      return MIP_ERR_PRECONDITION;
    case mip::ErrorCode::singular_point:
      return MIP_ERR_SINGULAR_POINT;
    case mip::ErrorCode::empty_region:
      return MIP_ERR_EMPTY_REGION;
    case mip::ErrorCode::parse:
      return MIP_ERR_PARSE;
    case mip::ErrorCode::internal:
      return MIP_ERR_INTERNAL;
  }
  return MIP_ERR_INTERNAL;
}

template <typename Fn>
mip_status guarded(Fn&& fn) {
  try {
    fn();
    return MIP_OK;
  } catch (const mip::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MIP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MIP_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* mip_version(void) { return mip::kToolVersion; }

const char* mip_last_error(void) { return g_last_error.c_str(); }

void mip_run_flags_init(mip_run_flags* flags) {
  if (flags == nullptr) return;
  flags->scenario_path = nullptr;
  flags->budget = 0;
  flags->seed = -1;
  flags->tol = 0.0;
  flags->workers = 0;
  flags->radii = nullptr;
  flags->radii_len = 0;
  flags->fd_step = 0.0;
}

mip_status mip_scenario_open(const char* path, mip_scenario** out) {
  if (path == nullptr || out == nullptr) {
    g_last_error = "null argument";
    return MIP_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&] { *out = new mip_scenario{mip::parse_scenario(path)}; });
}

mip_status mip_scenario_parse_text(const char* text, const char* origin, mip_scenario** out) {
  if (text == nullptr || out == nullptr) {
    g_last_error = "null argument";
    return MIP_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  const std::string label = origin != nullptr ? origin : "<memory>";
  return guarded([&] { *out = new mip_scenario{mip::parse_scenario_text(text, label)}; });
}

const char* mip_scenario_name(const mip_scenario* s) {
  return s != nullptr ? s->scen.name.c_str() : nullptr;
}

int mip_scenario_dim(const mip_scenario* s) { return s != nullptr ? s->scen.dim : 0; }

const char* mip_scenario_echo(const mip_scenario* s) {
  return s != nullptr ? s->scen.echo.c_str() : nullptr;
}

void mip_scenario_free(mip_scenario* s) { delete s; }

mip_status mip_run(const char* command, const mip_run_flags* flags, mip_report** out) {
  if (command == nullptr || out == nullptr) {
    g_last_error = "null argument";
    return MIP_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  mip::RunFlags rf;
  if (flags != nullptr) {
    if (flags->scenario_path != nullptr) rf.scenario_path = flags->scenario_path;
    rf.budget = flags->budget;
    rf.seed = flags->seed;
    rf.tol = flags->tol;
    rf.workers = flags->workers > 0 ? flags->workers : 1;
    if (flags->radii != nullptr)
      rf.radii.assign(flags->radii, flags->radii + flags->radii_len);
    rf.fd_step = flags->fd_step;
  }
  return guarded([&] { *out = new mip_report{mip::run_command(command, rf)}; });
}

int mip_report_exit_code(const mip_report* r) { return r != nullptr ? r->rep.exit_code : 1; }

const char* mip_report_json(const mip_report* r) {
  return r != nullptr ? r->rep.report_json.c_str() : nullptr;
}

const char* mip_report_summary(const mip_report* r) {
  return r != nullptr ? r->rep.summary.c_str() : nullptr;
}

size_t mip_report_table_count(const mip_report* r) {
  return r != nullptr ? r->rep.tables.size() : 0;
}

const char* mip_report_table_name(const mip_report* r, size_t i) {
  if (r == nullptr || i >= r->rep.tables.size()) return nullptr;
  return r->rep.tables[i].filename.c_str();
}

const char* mip_report_table_content(const mip_report* r, size_t i) {
  if (r == nullptr || i >= r->rep.tables.size()) return nullptr;
  return r->rep.tables[i].content.c_str();
}

mip_status mip_report_write(const mip_report* r, const char* out_dir) {
  if (r == nullptr || out_dir == nullptr) {
    g_last_error = "null argument";
    return MIP_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { mip::write_artifacts(r->rep, out_dir); });
}

void mip_report_free(mip_report* r) { delete r; }

}  // extern "C"
