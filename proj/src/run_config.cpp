#include "decompound/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <utility>

#include <json.hpp>

#include "decompound/distinguished_log.hpp"
#include "decompound/ecf.hpp"
#include "decompound/errors.hpp"

namespace decomp {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

//! Run a library constructor or validator, prefixing any error it raises
//! with the config-file field it came from.
template <typename F>
auto run_checked(const std::string& field, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    fail(field, e.what());
  }
}

const json* find_key(const json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(section, "must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&](const char* name) { return key == name; });
    if (!known) fail(section + "." + key, "unknown key");
  }
}

double get_real(const json& obj, const std::string& section, const char* key,
                double fallback) {
  const json* v = find_key(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(section + "." + key, "must be a number");
  return v->get<double>();
}

double require_real(const json& obj, const std::string& section,
                    const char* key) {
  const json* v = find_key(obj, key);
  if (!v) fail(section + "." + key, "is required");
  if (!v->is_number()) fail(section + "." + key, "must be a number");
  return v->get<double>();
}

std::int64_t get_integer(const json& obj, const std::string& section,
                         const char* key, std::int64_t fallback) {
  const json* v = find_key(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(section + "." + key, "must be an integer");
  return v->get<std::int64_t>();
}

bool get_flag(const json& obj, const std::string& section, const char* key,
              bool fallback) {
  const json* v = find_key(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(section + "." + key, "must be a boolean");
  return v->get<bool>();
}

std::string get_text(const json& obj, const std::string& section,
                     const char* key, const std::string& fallback) {
  const json* v = find_key(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(section + "." + key, "must be a string");
  return v->get<std::string>();
}

std::vector<double> get_real_list(const json& obj, const std::string& section,
                                  const char* key) {
  const json* v = find_key(obj, key);
  if (!v) return {};
  const std::string field = section + "." + key;
  std::vector<double> values;
  if (v->is_number()) {
    values.push_back(v->get<double>());
    return values;
  }
  if (!v->is_array()) fail(field, "must be a number or an array of numbers");
  for (const auto& item : *v) {
    if (!item.is_number()) fail(field, "must contain numbers only");
    values.push_back(item.get<double>());
  }
  return values;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

//! JSON value for a real: infinities spelled out as strings so documents
//! stay valid JSON, NaN mapped to null (the absent marker).
json json_real(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

std::pair<JumpDensity, json> parse_jump_spec(const json& obj,
                                             const std::string& section,
                                             bool allow_mixture) {
  const std::string family = get_text(obj, section, "family", "gaussian");
  json params = json::object();
  if (const json* v = find_key(obj, "params")) params = *v;
  const std::string psec = section + ".params";
  if (!params.is_object()) fail(psec, "must be an object");

  if (family == "gaussian") {
    check_keys(params, psec, {"mean", "sd"});
    const double mean = get_real(params, psec, "mean", 0.0);
    const double sd = get_real(params, psec, "sd", 1.0);
    return {run_checked(psec, [&] { return JumpDensity::gaussian(mean, sd); }),
            json{{"mean", mean}, {"sd", sd}}};
  }
  if (family == "laplace") {
    check_keys(params, psec, {"scale"});
    const double scale = get_real(params, psec, "scale", 1.0);
    return {run_checked(psec, [&] { return JumpDensity::laplace(scale); }),
            json{{"scale", scale}}};
  }
  if (family == "gamma") {
    check_keys(params, psec, {"shape", "scale"});
    const double shape = get_real(params, psec, "shape", 2.0);
    const double scale = get_real(params, psec, "scale", 1.0);
    return {run_checked(psec, [&] { return JumpDensity::gamma(shape, scale); }),
            json{{"shape", shape}, {"scale", scale}}};
  }
  if (family == "uniform") {
    check_keys(params, psec, {"low", "high"});
    const double low = get_real(params, psec, "low", -1.0);
    const double high = get_real(params, psec, "high", 1.0);
    return {run_checked(
                psec, [&] { return JumpDensity::uniform_interval(low, high); }),
            json{{"low", low}, {"high", high}}};
  }
  if (family == "mixture") {
    if (!allow_mixture) fail(section + ".family", "nested mixtures are not supported");
    check_keys(params, psec, {"components"});
    const json* comps = find_key(params, "components");
    if (!comps || !comps->is_array() || comps->empty())
      fail(psec + ".components", "must be a nonempty array");
    std::vector<double> weights;
    std::vector<JumpDensity> parts;
    json comp_doc = json::array();
    std::size_t idx = 0;
    for (const auto& comp : *comps) {
      const std::string csec =
          psec + ".components[" + std::to_string(idx) + "]";
      check_keys(comp, csec, {"weight", "family", "params"});
      const double weight = require_real(comp, csec, "weight");
      auto [part, part_doc] = parse_jump_spec(comp, csec, false);
      weights.push_back(weight);
      parts.push_back(std::move(part));
      comp_doc.push_back(json{{"weight", weight},
                              {"family", get_text(comp, csec, "family", "gaussian")},
                              {"params", part_doc}});
      ++idx;
    }
    return {run_checked(psec,
                        [&] {
                          return JumpDensity::mixture(std::move(weights),
                                                      std::move(parts));
                        }),
            json{{"components", comp_doc}}};
  }
  fail(section + ".family", "unknown family '" + family + "'");
}

double parse_p(const json& est) {
  const json* v = find_key(est, "p");
  if (!v) return 2.0;
  if (v->is_string()) {
    const auto s = v->get<std::string>();
    if (s == "inf" || s == "infinity")
      return std::numeric_limits<double>::infinity();
    fail("estimator.p", "must be a number or \"inf\"");
  }
  if (!v->is_number()) fail("estimator.p", "must be a number or \"inf\"");
  return v->get<double>();
}

//! Appends one CSV row of reals, already formatted with %.17g.
void append_row(std::string& csv, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) csv += ',';
    csv += format_real(v);
    first = false;
  }
  csv += '\n';
}

//! Write the given (name, content) files plus manifest.json into the
//! output directory. The manifest always carries the resolved config and
//! the output list, independent of the formats filter.
std::vector<std::string> finish_run(const RunConfig& config,
                                    const char* subcommand,
                                    const std::vector<std::pair<std::string, std::string>>& files) {
  const fs::path dir(config.out_dir);
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    throw IoError("cannot create output directory " + dir.string() + ": " +
                  e.what());
  }

  std::vector<std::string> written;
  json names = json::array();
  for (const auto& [name, content] : files) {
    const fs::path path = dir / name;
    write_text(path, content);
    written.push_back(path.string());
    names.push_back(name);
  }

  json manifest;
  manifest["subcommand"] = subcommand;
  manifest["config"] = json::parse(config.resolved_json);
  manifest["outputs"] = names;
  const fs::path manifest_path = dir / "manifest.json";
  write_text(manifest_path, manifest.dump(2) + "\n");
  written.push_back(manifest_path.string());
  return written;
}

std::string increments_csv(const IncrementSample& sample) {
  std::string csv = "index,value\n";
  for (std::int64_t i = 0; i < sample.n; ++i) {
    csv += std::to_string(i);
    csv += ',';
    csv += format_real(sample.values[static_cast<std::size_t>(i)]);
    csv += '\n';
  }
  return csv;
}

std::string estimate_csv(const DensityEstimate& est) {
  std::string csv = "x,nu_hat\n";
  for (std::size_t i = 0; i < est.xs.size(); ++i)
    append_row(csv, {est.xs[i], est.values[i]});
  return csv;
}

json estimate_meta(const DensityEstimate& est, const RunConfig& config,
                   bool adaptive) {
  json meta;
  meta["j"] = est.j;
  meta["lambda_hat"] = json_real(est.lambda_hat);
  meta["valid"] = est.valid;
  meta["h"] = json_real(est.h_used);
  meta["u"] = json_real(est.u_used);
  meta["u_clamped_count"] = est.u_clamped_count;
  meta["series_regime_warn"] = est.series_regime_warn;
  meta["imag_residue"] = json_real(est.imag_residue);
  meta["series_terms"] = config.series_terms;
  meta["adaptive"] = adaptive;
  return meta;
}

json trace_doc(const SelectionTrace& trace) {
  json doc;
  doc["j_values"] = trace.j_values;
  doc["j_hat"] = trace.j_hat;
  doc["tau"] = json_real(trace.tau_used);
  doc["t"] = json_real(trace.t);
  doc["p"] = json_real(trace.p);
  json pairwise = json::array();
  for (const auto& row : trace.pairwise_stats) {
    json doc_row = json::array();
    for (double v : row) doc_row.push_back(json_real(v));
    pairwise.push_back(std::move(doc_row));
  }
  doc["pairwise"] = pairwise;
  json valid = json::array();
  for (const auto& est : trace.estimates) valid.push_back(est.valid);
  doc["estimate_valid"] = valid;
  return doc;
}

json report_summary(const RiskReport& report) {
  json doc;
  doc["t_lambda"] = json_real(report.t_lambda);
  doc["t"] = json_real(report.t);
  doc["delta"] = json_real(report.delta);
  doc["n"] = report.n;
  doc["reps"] = report.reps;
  doc["mean"] = json_real(report.mean);
  doc["std_error"] = json_real(report.std_error);
  doc["q50"] = json_real(report.q50);
  doc["q90"] = json_real(report.q90);
  doc["invalid_rate"] = json_real(report.invalid_rate);
  return doc;
}

std::vector<std::string> run_estimate_impl(const RunConfig& config,
                                           const char* subcommand,
                                           bool force_adaptive) {
  IncrementSample sample;
  if (!config.sample_path.empty())
    sample = load_increments_csv(config.sample_path, config.model.delta);
  else
    sample = sample_increments(config.model, config.n, config.seed);

  const bool adaptive =
      force_adaptive || config.selection.mode == JSelection::Mode::Adaptive;
  if (config.series_terms > 0 && adaptive)
    fail("estimator.series_terms", "requires a fixed j");

  DensityEstimate est;
  std::optional<SelectionTrace> trace;
  if (adaptive) {
    trace = select_j(sample, config.estimator, config.lepskii);
    const auto it = std::find(trace->j_values.begin(), trace->j_values.end(),
                              trace->j_hat);
    est = trace->estimates[static_cast<std::size_t>(
        it - trace->j_values.begin())];
  } else {
    int j = config.selection.j;
    if (config.selection.mode == JSelection::Mode::Oracle)
      j = choose_j_oracle(config.model.lambda *
                              static_cast<double>(sample.n) * sample.delta,
                          config.selection.s, config.estimator.p);
    est = config.series_terms > 0
              ? series_estimate(sample, config.estimator, j,
                                config.series_terms)
              : estimate_fixed_j(sample, config.estimator, j);
  }

  std::vector<std::pair<std::string, std::string>> files;
  if (config.write_csv) files.emplace_back("estimate.csv", estimate_csv(est));
  if (config.write_json) {
    files.emplace_back("estimate_meta.json",
                       estimate_meta(est, config, adaptive).dump(2) + "\n");
    if (trace)
      files.emplace_back("selection_trace.json",
                         trace_doc(*trace).dump(2) + "\n");
  }
  return finish_run(config, subcommand, files);
}

} // namespace

RunConfig parse_run_config(const std::string& json_text,
                           const CliOverrides& overrides) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid json: ") + e.what());
  }
  check_keys(doc, "config",
             {"model", "estimator", "lepskii", "experiment", "output"});

  RunConfig config;
  const json empty = json::object();

  // model
  const json* model = find_key(doc, "model");
  if (!model) model = &empty;
  check_keys(*model, "model", {"family", "params", "lambda", "delta"});
  config.model.lambda = require_real(*model, "model", "lambda");
  if (!(config.model.lambda > 0.0)) fail("model.lambda", "must be > 0");
  config.model.delta = get_real(*model, "model", "delta", 1.0);
  if (!(config.model.delta > 0.0)) fail("model.delta", "must be > 0");
  auto [jump, jump_doc] = parse_jump_spec(*model, "model", true);
  config.model.jump = std::move(jump);
  run_checked("model", [&] { config.model.validate(); return 0; });

  // estimator
  const json* est = find_key(doc, "estimator");
  if (!est) est = &empty;
  check_keys(*est, "estimator",
             {"operator", "p", "j", "oracle_s", "u_exponent", "theta_h",
              "theta_h_prime", "oversampling", "x_points", "x_half_width",
              "clip_negative", "series_terms"});
  const json* op = find_key(*est, "operator");
  if (!op) op = &empty;
  check_keys(*op, "estimator.operator", {"kind", "b", "c"});
  const std::string kind =
      get_text(*op, "estimator.operator", "kind", "flat_top");
  if (kind == "flat_top")
    config.estimator.op.kind = OperatorKind::FlatTopConvolution;
  else if (kind == "meyer")
    config.estimator.op.kind = OperatorKind::MeyerProjection;
  else
    fail("estimator.operator.kind", "must be flat_top or meyer");
  config.estimator.op.b = get_real(*op, "estimator.operator", "b", 1.0);
  config.estimator.op.c = get_real(*op, "estimator.operator", "c", 0.05);

  config.estimator.p = parse_p(*est);
  const json* jv = find_key(*est, "j");
  if (!jv) {
    config.selection.mode = JSelection::Mode::Adaptive;
  } else if (jv->is_string()) {
    const auto s = jv->get<std::string>();
    if (s == "adaptive")
      config.selection.mode = JSelection::Mode::Adaptive;
    else if (s == "oracle")
      config.selection.mode = JSelection::Mode::Oracle;
    else
      fail("estimator.j", "must be an integer, \"adaptive\", or \"oracle\"");
  } else if (jv->is_number_integer()) {
    config.selection.mode = JSelection::Mode::Fixed;
    config.selection.j = static_cast<int>(jv->get<std::int64_t>());
    if (config.selection.j < 0) fail("estimator.j", "must be >= 0");
  } else {
    fail("estimator.j", "must be an integer, \"adaptive\", or \"oracle\"");
  }
  config.selection.s = get_real(*est, "estimator", "oracle_s", 1.0);
  if (!(config.selection.s > 0.0)) fail("estimator.oracle_s", "must be > 0");
  config.estimator.u_exponent = get_real(*est, "estimator", "u_exponent", 0.5);
  config.estimator.theta_h = get_real(*est, "estimator", "theta_h", 0.0);
  config.estimator.theta_h_prime =
      get_real(*est, "estimator", "theta_h_prime", -1.0);
  config.estimator.oversampling = static_cast<int>(
      get_integer(*est, "estimator", "oversampling", 4));
  config.estimator.x_points =
      static_cast<int>(get_integer(*est, "estimator", "x_points", 0));
  config.estimator.x_half_width =
      get_real(*est, "estimator", "x_half_width", 16.0);
  config.estimator.clip_negative =
      get_flag(*est, "estimator", "clip_negative", false);
  config.series_terms = static_cast<int>(
      get_integer(*est, "estimator", "series_terms", 0));
  if (config.series_terms < 0) fail("estimator.series_terms", "must be >= 0");
  run_checked("estimator", [&] { config.estimator.validate(); return 0; });

  // lepskii
  const json* lep = find_key(doc, "lepskii");
  if (!lep) lep = &empty;
  check_keys(*lep, "lepskii",
             {"eta", "tau", "c_lambda_weight", "c_ms", "eta_prime",
              "tau_fallback"});
  config.lepskii.eta = get_real(*lep, "lepskii", "eta", 0.0);
  if (const json* tau = find_key(*lep, "tau")) {
    if (tau->is_string()) {
      if (tau->get<std::string>() != "auto")
        fail("lepskii.tau", "must be a number or \"auto\"");
    } else if (tau->is_number()) {
      config.lepskii.tau = tau->get<double>();
    } else {
      fail("lepskii.tau", "must be a number or \"auto\"");
    }
  }
  config.lepskii.c_lambda_weight =
      get_real(*lep, "lepskii", "c_lambda_weight", 1.0);
  config.lepskii.c_ms = get_real(*lep, "lepskii", "c_ms", 1.0);
  config.lepskii.eta_prime = get_real(*lep, "lepskii", "eta_prime", 0.0);
  config.lepskii.tau_fallback =
      get_real(*lep, "lepskii", "tau_fallback", 2.0);
  run_checked("lepskii", [&] {
    config.lepskii.validate(config.estimator.p,
                            config.estimator.resolved_theta_h());
    return 0;
  });

  // experiment
  const json* exp = find_key(doc, "experiment");
  if (!exp) exp = &empty;
  check_keys(*exp, "experiment",
             {"n", "t", "reps", "seed", "threads", "delta_sweep",
              "t_lambda_sweep", "xi_prime", "delta_exp", "population",
              "sample_path"});
  const json* nv = find_key(*exp, "n");
  const json* tv = find_key(*exp, "t");
  if (nv && tv) fail("experiment", "give n or t, not both");
  if (tv) {
    const double t = require_real(*exp, "experiment", "t");
    if (!(t > 0.0)) fail("experiment.t", "must be > 0");
    const auto n =
        static_cast<std::int64_t>(std::llround(t / config.model.delta));
    if (n < 1 || std::abs(static_cast<double>(n) * config.model.delta - t) >
                     1e-9 * std::max(1.0, t))
      fail("experiment.t", "must be model.delta times a positive integer");
    config.n = n;
  } else {
    config.n = get_integer(*exp, "experiment", "n", 1000);
    if (config.n < 1) fail("experiment.n", "must be >= 1");
  }
  {
    const std::int64_t reps = get_integer(*exp, "experiment", "reps", 50);
    if (reps < 1) fail("experiment.reps", "must be >= 1");
    config.reps = static_cast<int>(reps);
  }
  if (const json* seed = find_key(*exp, "seed")) {
    if (!seed->is_number_integer() ||
        (seed->is_number_integer() && !seed->is_number_unsigned() &&
         seed->get<std::int64_t>() < 0))
      fail("experiment.seed", "must be a nonnegative integer");
    config.seed = seed->get<std::uint64_t>();
  }
  {
    const std::int64_t threads = get_integer(*exp, "experiment", "threads", 1);
    if (threads < 1 || threads > 1024)
      fail("experiment.threads", "must lie in [1, 1024]");
    config.threads = static_cast<int>(threads);
  }
  config.delta_sweep = get_real_list(*exp, "experiment", "delta_sweep");
  for (double d : config.delta_sweep)
    if (!(d > 0.0)) fail("experiment.delta_sweep", "entries must be > 0");
  config.t_lambda_sweep = get_real_list(*exp, "experiment", "t_lambda_sweep");
  for (double t : config.t_lambda_sweep)
    if (!(t > 0.0)) fail("experiment.t_lambda_sweep", "entries must be > 0");
  config.xi_prime_list = get_real_list(*exp, "experiment", "xi_prime");
  for (double x : config.xi_prime_list)
    if (!(x > 0.0)) fail("experiment.xi_prime", "entries must be > 0");
  config.delta_exp = get_real(*exp, "experiment", "delta_exp", 0.5);
  if (!(config.delta_exp > 0.0)) fail("experiment.delta_exp", "must be > 0");
  config.selection.population =
      get_flag(*exp, "experiment", "population", false);
  config.sample_path = get_text(*exp, "experiment", "sample_path", "");

  // output
  const json* out = find_key(doc, "output");
  if (!out) out = &empty;
  check_keys(*out, "output", {"dir", "formats"});
  config.out_dir = get_text(*out, "output", "dir", "out");
  if (config.out_dir.empty()) fail("output.dir", "must be nonempty");
  if (const json* formats = find_key(*out, "formats")) {
    if (!formats->is_array()) fail("output.formats", "must be an array");
    config.write_csv = false;
    config.write_json = false;
    for (const auto& f : *formats) {
      if (!f.is_string()) fail("output.formats", "entries must be strings");
      const auto s = f.get<std::string>();
      if (s == "csv")
        config.write_csv = true;
      else if (s == "json")
        config.write_json = true;
      else
        fail("output.formats", "entries must be csv or json");
    }
  }

  // command-line overrides beat file values
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.out_dir) config.out_dir = *overrides.out_dir;
  if (overrides.threads) {
    if (*overrides.threads < 1 || *overrides.threads > 1024)
      fail("--threads", "must lie in [1, 1024]");
    config.threads = *overrides.threads;
  }
  config.selection.lepskii = config.lepskii;

  // resolved document, defaults applied, for the output manifests
  json resolved;
  resolved["model"] = json{{"family", get_text(*model, "model", "family", "gaussian")},
                           {"params", jump_doc},
                           {"lambda", config.model.lambda},
                           {"delta", config.model.delta}};
  json est_doc;
  est_doc["operator"] = json{{"kind", kind},
                             {"b", config.estimator.op.b},
                             {"c", config.estimator.op.c}};
  est_doc["p"] = json_real(config.estimator.p);
  switch (config.selection.mode) {
    case JSelection::Mode::Fixed:
      est_doc["j"] = config.selection.j;
      break;
    case JSelection::Mode::Oracle:
      est_doc["j"] = "oracle";
      break;
    case JSelection::Mode::Adaptive:
      est_doc["j"] = "adaptive";
      break;
  }
  est_doc["oracle_s"] = config.selection.s;
  est_doc["u_exponent"] = config.estimator.u_exponent;
  if (config.estimator.p < 2.0) {
    est_doc["theta_h"] = config.estimator.resolved_theta_h();
    est_doc["theta_h_prime"] = config.estimator.resolved_theta_h_prime();
  } else {
    est_doc["theta_h"] = nullptr;
    est_doc["theta_h_prime"] = nullptr;
  }
  est_doc["oversampling"] = config.estimator.oversampling;
  est_doc["x_points"] = config.estimator.x_points;
  est_doc["x_half_width"] = config.estimator.x_half_width;
  est_doc["clip_negative"] = config.estimator.clip_negative;
  est_doc["series_terms"] = config.series_terms;
  resolved["estimator"] = est_doc;

  json lep_doc;
  lep_doc["eta"] = config.lepskii.resolved_eta(
      config.estimator.p, config.estimator.resolved_theta_h());
  lep_doc["tau"] = config.lepskii.tau ? json(*config.lepskii.tau) : json("auto");
  lep_doc["c_lambda_weight"] = config.lepskii.c_lambda_weight;
  lep_doc["c_ms"] = config.lepskii.c_ms;
  lep_doc["eta_prime"] = config.lepskii.resolved_eta_prime(
      config.estimator.p, config.estimator.resolved_theta_h());
  lep_doc["tau_fallback"] = config.lepskii.tau_fallback;
  resolved["lepskii"] = lep_doc;

  json exp_doc;
  exp_doc["n"] = config.n;
  exp_doc["reps"] = config.reps;
  exp_doc["seed"] = config.seed;
  exp_doc["threads"] = config.threads;
  exp_doc["delta_sweep"] = config.delta_sweep;
  exp_doc["t_lambda_sweep"] = config.t_lambda_sweep;
  exp_doc["xi_prime"] = config.xi_prime_list;
  exp_doc["delta_exp"] = config.delta_exp;
  exp_doc["population"] = config.selection.population;
  exp_doc["sample_path"] = config.sample_path;
  resolved["experiment"] = exp_doc;

  json formats = json::array();
  if (config.write_csv) formats.push_back("csv");
  if (config.write_json) formats.push_back("json");
  resolved["output"] = json{{"dir", config.out_dir}, {"formats", formats}};

  config.resolved_json = resolved.dump(2) + "\n";
  return config;
}

RunConfig load_run_config(const std::string& path,
                          const CliOverrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_run_config(text, overrides);
}

IncrementSample load_increments_csv(const std::string& path, double delta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);

  const auto strip_cr = [](std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  strip_cr(line);
  if (line != "index,value")
    throw ConfigError(path + ":1: expected header 'index,value'");

  IncrementSample sample;
  sample.delta = delta;
  std::int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'index,value'");
    char* end = nullptr;
    const std::string index_text = line.substr(0, comma);
    const long long index = std::strtoll(index_text.c_str(), &end, 10);
    if (end == index_text.c_str() || *end != '\0' ||
        index != static_cast<long long>(sample.values.size()))
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": bad or out-of-order index");
    const std::string value_text = line.substr(comma + 1);
    const double value = std::strtod(value_text.c_str(), &end);
    if (end == value_text.c_str() || *end != '\0' || !std::isfinite(value))
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": bad increment value");
    sample.values.push_back(value);
  }
  if (sample.values.empty()) throw ConfigError(path + ": no increment rows");
  sample.n = static_cast<std::int64_t>(sample.values.size());
  recount_zeros(sample);
  return sample;
}

std::vector<std::string> run_simulate(const RunConfig& config) {
  const auto sample = sample_increments(config.model, config.n, config.seed);
  std::vector<std::pair<std::string, std::string>> files;
  if (config.write_csv)
    files.emplace_back("increments.csv", increments_csv(sample));
  return finish_run(config, "simulate", files);
}

std::vector<std::string> run_estimate(const RunConfig& config) {
  return run_estimate_impl(config, "estimate", false);
}

std::vector<std::string> run_adapt(const RunConfig& config) {
  return run_estimate_impl(config, "adapt", true);
}

std::vector<std::string> run_bench(const RunConfig& config) {
  if (config.series_terms > 0)
    fail("estimator.series_terms", "is not supported by bench");
  if (!config.t_lambda_sweep.empty() && !config.delta_sweep.empty())
    fail("experiment", "give delta_sweep or t_lambda_sweep, not both");

  std::vector<RiskReport> reports;
  if (!config.t_lambda_sweep.empty()) {
    const double per_increment = config.model.lambda * config.model.delta;
    for (double t_lambda : config.t_lambda_sweep) {
      const auto n =
          static_cast<std::int64_t>(std::llround(t_lambda / per_increment));
      if (n < 1 ||
          std::abs(static_cast<double>(n) * per_increment - t_lambda) >
              1e-6 * std::max(1.0, t_lambda))
        fail("experiment.t_lambda_sweep",
             "each value must be lambda*delta times a positive integer");
      reports.push_back(mc_risk(config.model, config.estimator,
                                config.selection, n, config.reps, config.seed,
                                config.threads));
    }
  } else if (!config.delta_sweep.empty()) {
    const double t_fixed =
        static_cast<double>(config.n) * config.model.delta;
    reports = regime_sweep(config.model.jump, config.model.lambda, t_fixed,
                           config.delta_sweep, config.estimator,
                           config.selection, config.reps, config.seed,
                           config.threads);
  } else {
    reports.push_back(mc_risk(config.model, config.estimator,
                              config.selection, config.n, config.reps,
                              config.seed, config.threads));
  }

  std::vector<std::pair<std::string, std::string>> files;
  if (config.write_csv) {
    std::string csv = "t_lambda,t,delta,n,rep,error,valid\n";
    for (const auto& report : reports) {
      for (int r = 0; r < report.reps; ++r) {
        csv += format_real(report.t_lambda);
        csv += ',';
        csv += format_real(report.t);
        csv += ',';
        csv += format_real(report.delta);
        csv += ',';
        csv += std::to_string(report.n);
        csv += ',';
        csv += std::to_string(r);
        csv += ',';
        csv += format_real(report.errors[static_cast<std::size_t>(r)]);
        csv += ',';
        csv += report.invalid_flags[static_cast<std::size_t>(r)] ? '0' : '1';
        csv += '\n';
      }
    }
    files.emplace_back("risk_reps.csv", csv);
  }
  if (config.write_json) {
    json summary;
    json items = json::array();
    for (const auto& report : reports) items.push_back(report_summary(report));
    summary["reports"] = items;
    files.emplace_back("risk_summary.json", summary.dump(2) + "\n");
    if (config.t_lambda_sweep.size() >= 3) {
      const RateFit fit = rate_fit(reports);
      json fit_doc;
      json points = json::array();
      for (const auto& [x, y] : fit.points)
        points.push_back(json::array({x, y}));
      fit_doc["points"] = points;
      fit_doc["slope"] = json_real(fit.slope);
      fit_doc["intercept"] = json_real(fit.intercept);
      fit_doc["residual_rms"] = json_real(fit.residual_rms);
      files.emplace_back("rate_fit.json", fit_doc.dump(2) + "\n");
    }
  }
  return finish_run(config, "bench", files);
}

std::vector<std::string> run_ecf_diagnose(const RunConfig& config) {
  if (config.xi_prime_list.empty())
    fail("experiment.xi_prime", "is required for ecf-diagnose");

  std::vector<FluctuationStats> stats;
  stats.reserve(config.xi_prime_list.size());
  for (double xi_prime : config.xi_prime_list)
    stats.push_back(ecf_fluctuation_stats(config.model, config.n, xi_prime,
                                          config.delta_exp, config.reps,
                                          config.seed, config.threads));

  std::vector<std::pair<std::string, std::string>> files;
  if (config.write_csv) {
    std::string csv =
        "xi_prime,delta_exp,n,t_lambda,reps,mean_normalized,q50_normalized,"
        "q90_normalized,exceed_frequency\n";
    for (const auto& s : stats) {
      csv += format_real(s.xi_prime);
      csv += ',';
      csv += format_real(s.delta_exp);
      csv += ',';
      csv += std::to_string(s.n);
      csv += ',';
      csv += format_real(s.t_lambda);
      csv += ',';
      csv += std::to_string(s.reps);
      csv += ',';
      csv += format_real(s.mean_normalized);
      csv += ',';
      csv += format_real(s.q50_normalized);
      csv += ',';
      csv += format_real(s.q90_normalized);
      csv += ',';
      csv += format_real(s.exceed_frequency);
      csv += '\n';
    }
    files.emplace_back("fluctuation.csv", csv);

    std::string reps_csv = "xi_prime,rep,raw_sup,normalized\n";
    for (const auto& s : stats) {
      for (int r = 0; r < s.reps; ++r) {
        reps_csv += format_real(s.xi_prime);
        reps_csv += ',';
        reps_csv += std::to_string(r);
        reps_csv += ',';
        reps_csv += format_real(s.raw_sup[static_cast<std::size_t>(r)]);
        reps_csv += ',';
        reps_csv += format_real(s.normalized[static_cast<std::size_t>(r)]);
        reps_csv += '\n';
      }
    }
    files.emplace_back("fluctuation_reps.csv", reps_csv);

    // First-replication spectra on the widest requested band, for visual
    // inspection of the ECF and the unwrapped log.
    const double xi_top = *std::max_element(config.xi_prime_list.begin(),
                                            config.xi_prime_list.end());
    const int k_max =
        static_cast<int>(std::ceil(16.0 * xi_top - 1e-9));
    const auto grid = symmetric_grid(1.0 / 16.0, k_max);
    const auto sample =
        sample_increments(config.model, config.n, config.seed);
    const auto raw = ecf(sample, grid);
    std::string ecf_csv = "xi,re,im\n";
    for (std::size_t i = 0; i < raw.xis.size(); ++i)
      append_row(ecf_csv,
                 {raw.xis[i], raw.values[i].real(), raw.values[i].imag()});
    files.emplace_back("ecf.csv", ecf_csv);

    std::string log_csv = "xi,re,im\n";
    if (sample.n_zero > 0) {
      const double lam = lambda_hat(sample);
      const auto scaled = scale_ecf(raw, lam, sample.delta);
      const auto part = detail::distinguished_log_partial(
          scaled, sample.delta, &sample.values, 4);
      const auto c = static_cast<std::ptrdiff_t>(part.log.xis.size() / 2);
      for (std::ptrdiff_t k = -part.reached; k <= part.reached; ++k) {
        const auto i = static_cast<std::size_t>(c + k);
        append_row(log_csv, {part.log.xis[i], part.log.values[i].real(),
                             part.log.values[i].imag()});
      }
    }
    files.emplace_back("log.csv", log_csv);
  }
  if (config.write_json) {
    json doc;
    json items = json::array();
    for (const auto& s : stats) {
      json item;
      item["xi_prime"] = json_real(s.xi_prime);
      item["delta_exp"] = json_real(s.delta_exp);
      item["n"] = s.n;
      item["t_lambda"] = json_real(s.t_lambda);
      item["reps"] = s.reps;
      item["mean_normalized"] = json_real(s.mean_normalized);
      item["q50_normalized"] = json_real(s.q50_normalized);
      item["q90_normalized"] = json_real(s.q90_normalized);
      item["exceed_frequency"] = json_real(s.exceed_frequency);
      items.push_back(item);
    }
    doc["stats"] = items;
    files.emplace_back("fluctuation_summary.json", doc.dump(2) + "\n");
  }
  return finish_run(config, "ecf-diagnose", files);
}

} // namespace decomp
