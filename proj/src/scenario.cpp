#include "reslab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "reslab/domain_carving.hpp"
#include "reslab/enumeration.hpp"
#include "reslab/errors.hpp"
#include "reslab/flow_oracle.hpp"
#include "reslab/parallel.hpp"
#include "reslab/report.hpp"
#include "reslab/resolvent_core.hpp"
#include "reslab/resonance_analysis.hpp"
#include "reslab/selftest.hpp"
#include "reslab/svg.hpp"

namespace reslab {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ScenarioError(path + ": " + msg);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional = {}) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const char* k : required)
    if (!j.contains(k)) fail(path, std::string("missing key '") + k + "'");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const bool known =
        std::any_of(required.begin(), required.end(),
                    [&](const char* k) { return key == k; }) ||
        std::any_of(optional.begin(), optional.end(),
                    [&](const char* k) { return key == k; });
    if (!known) fail(path, "unknown key '" + key + "'");
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int get_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

Complex get_complex(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  fail(path, "expected a number or [re, im]");
}

std::vector<double> get_real_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

CVector get_complex_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array");
  CVector out(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out[i] = get_complex(j[i], path + "[" + std::to_string(i) + "]");
  return out;
}

CMatrix get_complex_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty matrix");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) fail(path, "expected an array of rows");
  CMatrix out(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != cols)
      fail(row_path, "ragged matrix row");
    for (std::size_t k = 0; k < cols; ++k)
      out(i, k) =
          get_complex(j[i][k], row_path + "[" + std::to_string(k) + "]");
  }
  return out;
}

std::pair<double, double> get_interval(const json& j,
                                       const std::string& path) {
  if (!j.is_array() || j.size() != 2) fail(path, "expected [lo, hi]");
  const double lo = get_number(j[0], path + "[0]");
  const double hi = get_number(j[1], path + "[1]");
  if (!(lo < hi)) fail(path, "interval endpoints out of order");
  return {lo, hi};
}

Rect get_rect(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 4)
    fail(path, "expected [re_lo, re_hi, im_lo, im_hi]");
  Rect r;
  r.re_lo = get_number(j[0], path + "[0]");
  r.re_hi = get_number(j[1], path + "[1]");
  r.im_lo = get_number(j[2], path + "[2]");
  r.im_hi = get_number(j[3], path + "[3]");
  if (!(r.re_lo < r.re_hi && r.im_lo < r.im_hi))
    fail(path, "rectangle sides out of order");
  return r;
}

std::function<RiggedModel(std::mt19937_64&)> parse_model(
    const json& j, const std::string& path) {
  check_keys(j, path, {"kind"},
             {"diag", "phi", "scale", "h0", "rigging", "coupling", "sites",
              "truncation_dim", "lambda0", "v", "z0", "a", "b", "dim"});
  if (!j["kind"].is_string()) fail(path + ".kind", "expected a string");
  const std::string kind = j["kind"].get<std::string>();

  if (kind == "rank_one") {
    check_keys(j, path, {"kind", "diag", "phi", "scale"});
    const auto diag = get_real_vector(j["diag"], path + ".diag");
    const CVector phi = get_complex_vector(j["phi"], path + ".phi");
    const double scale = get_number(j["scale"], path + ".scale");
    return [=](std::mt19937_64&) { return make_rank_one(diag, phi, scale); };
  }
  if (kind == "finite") {
    check_keys(j, path, {"kind", "h0", "coupling"}, {"rigging"});
    const CMatrix h0 = get_complex_matrix(j["h0"], path + ".h0");
    const CMatrix coupling =
        get_complex_matrix(j["coupling"], path + ".coupling");
    if (j.contains("rigging")) {
      const CMatrix rigging =
          get_complex_matrix(j["rigging"], path + ".rigging");
      return [=](std::mt19937_64&) {
        return make_finite(h0, rigging, coupling);
      };
    }
    return [=](std::mt19937_64&) { return make_finite(h0, coupling); };
  }
  if (kind == "half_line_jacobi") {
    check_keys(j, path, {"kind", "sites", "coupling"}, {"truncation_dim"});
    if (!j["sites"].is_array() || j["sites"].empty())
      fail(path + ".sites", "expected a nonempty array");
    std::vector<int> sites;
    for (std::size_t i = 0; i < j["sites"].size(); ++i)
      sites.push_back(get_integer(j["sites"][i], path + ".sites[" +
                                                     std::to_string(i) + "]"));
    const CMatrix coupling =
        get_complex_matrix(j["coupling"], path + ".coupling");
    const int trunc = j.contains("truncation_dim")
                          ? get_integer(j["truncation_dim"],
                                        path + ".truncation_dim")
                          : 2000;
    return [=](std::mt19937_64&) {
      return make_half_line_jacobi(sites, coupling, trunc);
    };
  }
  if (kind == "embedded_block") {
    check_keys(j, path, {"kind", "lambda0", "v"}, {"truncation_dim"});
    const double lambda0 = get_number(j["lambda0"], path + ".lambda0");
    const double v = get_number(j["v"], path + ".v");
    const int trunc = j.contains("truncation_dim")
                          ? get_integer(j["truncation_dim"],
                                        path + ".truncation_dim")
                          : 2000;
    return [=](std::mt19937_64&) {
      return make_embedded_block(lambda0, v, trunc);
    };
  }
  if (kind == "sqrt_branch") {
    check_keys(j, path, {"kind", "z0"});
    const Complex z0 = get_complex(j["z0"], path + ".z0");
    return [=](std::mt19937_64&) { return make_sqrt_branch_family(z0); };
  }
  if (kind == "two_branch") {
    check_keys(j, path, {"kind", "a", "b"});
    const Complex a = get_complex(j["a"], path + ".a");
    const Complex b = get_complex(j["b"], path + ".b");
    return [=](std::mt19937_64&) { return make_two_branch_family(a, b); };
  }
  if (kind == "absorbing_control") {
    check_keys(j, path, {"kind", "z0"});
    const Complex z0 = get_complex(j["z0"], path + ".z0");
    return [=](std::mt19937_64&) { return make_absorbing_control(z0); };
  }
  if (kind == "random") {
    check_keys(j, path, {"kind", "dim"});
    const int dim = get_integer(j["dim"], path + ".dim");
    if (dim < 1 || dim > 16) fail(path + ".dim", "dim must be in [1, 16]");
    return [=](std::mt19937_64& rng) { return random_finite_model(dim, rng); };
  }
  fail(path + ".kind", "unknown model kind '" + kind + "'");
}

ExperimentKind experiment_kind(const std::string& type,
                               const std::string& path) {
  if (type == "spectrum_grid") return ExperimentKind::SpectrumGrid;
  if (type == "continue") return ExperimentKind::Continue;
  if (type == "egorov") return ExperimentKind::Egorov;
  if (type == "impacting") return ExperimentKind::Impacting;
  if (type == "classify") return ExperimentKind::Classify;
  if (type == "detect_branch_points")
    return ExperimentKind::DetectBranchPoints;
  if (type == "absorbing_sweep") return ExperimentKind::AbsorbingSweep;
  if (type == "oracle_check") return ExperimentKind::OracleCheck;
  if (type == "ray_stats") return ExperimentKind::RayStats;
  fail(path, "unknown experiment type '" + type + "'");
}

void validate_experiment(const json& j, ExperimentKind kind,
                         const std::string& path) {
  switch (kind) {
    case ExperimentKind::SpectrumGrid: {
      check_keys(j, path, {"type", "re", "im"});
      for (const char* axis : {"re", "im"}) {
        const json& a = j[axis];
        const std::string ap = path + "." + axis;
        if (!a.is_array() || a.size() != 3) fail(ap, "expected [lo, hi, n]");
        get_number(a[0], ap + "[0]");
        get_number(a[1], ap + "[1]");
        if (get_integer(a[2], ap + "[2]") < 1) fail(ap, "n must be >= 1");
      }
      return;
    }
    case ExperimentKind::Continue: {
      check_keys(j, path, {"type", "start_z", "start_r", "waypoints"});
      get_complex(j["start_z"], path + ".start_z");
      get_complex(j["start_r"], path + ".start_r");
      if (!j["waypoints"].is_array() || j["waypoints"].empty())
        fail(path + ".waypoints", "expected a nonempty array");
      for (std::size_t i = 0; i < j["waypoints"].size(); ++i)
        get_complex(j["waypoints"][i],
                    path + ".waypoints[" + std::to_string(i) + "]");
      return;
    }
    case ExperimentKind::Egorov: {
      check_keys(j, path, {"type", "interval", "delta"},
                 {"m_max", "n_max", "lambda_step_rel"});
      get_interval(j["interval"], path + ".interval");
      if (!(get_number(j["delta"], path + ".delta") > 0.0))
        fail(path + ".delta", "delta must be positive");
      if (j.contains("m_max")) get_integer(j["m_max"], path + ".m_max");
      if (j.contains("n_max")) get_integer(j["n_max"], path + ".n_max");
      if (j.contains("lambda_step_rel"))
        get_number(j["lambda_step_rel"], path + ".lambda_step_rel");
      return;
    }
    case ExperimentKind::Impacting: {
      check_keys(j, path, {"type", "interval", "delta"},
                 {"lambda_samples", "y_top", "y_bottom"});
      get_interval(j["interval"], path + ".interval");
      if (!(get_number(j["delta"], path + ".delta") > 0.0))
        fail(path + ".delta", "delta must be positive");
      if (j.contains("lambda_samples"))
        get_integer(j["lambda_samples"], path + ".lambda_samples");
      if (j.contains("y_top")) get_number(j["y_top"], path + ".y_top");
      if (j.contains("y_bottom"))
        get_number(j["y_bottom"], path + ".y_bottom");
      return;
    }
    case ExperimentKind::Classify: {
      check_keys(j, path, {"type", "candidate"}, {"probe_radius"});
      get_complex(j["candidate"], path + ".candidate");
      if (j.contains("probe_radius") &&
          !(get_number(j["probe_radius"], path + ".probe_radius") > 0.0))
        fail(path + ".probe_radius", "probe_radius must be positive");
      return;
    }
    case ExperimentKind::DetectBranchPoints: {
      check_keys(j, path, {"type", "rect"}, {"grid_re", "grid_im"});
      get_rect(j["rect"], path + ".rect");
      if (j.contains("grid_re")) get_integer(j["grid_re"], path + ".grid_re");
      if (j.contains("grid_im")) get_integer(j["grid_im"], path + ".grid_im");
      return;
    }
    case ExperimentKind::AbsorbingSweep: {
      check_keys(j, path, {"type", "rect"}, {"grid_re", "grid_im"});
      get_rect(j["rect"], path + ".rect");
      if (j.contains("grid_re")) get_integer(j["grid_re"], path + ".grid_re");
      if (j.contains("grid_im")) get_integer(j["grid_im"], path + ".grid_im");
      return;
    }
    case ExperimentKind::OracleCheck: {
      check_keys(j, path, {"type", "lambda"}, {"grid_n"});
      get_number(j["lambda"], path + ".lambda");
      if (j.contains("grid_n")) get_integer(j["grid_n"], path + ".grid_n");
      return;
    }
    case ExperimentKind::RayStats: {
      check_keys(j, path, {"type", "z0", "rect", "n_rays"}, {"start_r"});
      get_complex(j["z0"], path + ".z0");
      get_rect(j["rect"], path + ".rect");
      if (get_integer(j["n_rays"], path + ".n_rays") < 1)
        fail(path + ".n_rays", "n_rays must be >= 1");
      if (j.contains("start_r")) get_complex(j["start_r"], path + ".start_r");
      return;
    }
  }
}

}  // namespace

Scenario parse_scenario(const json& j) {
  check_keys(j, "$", {"name", "model", "experiments"}, {"seed"});
  Scenario s;
  if (!j["name"].is_string()) fail("$.name", "expected a string");
  s.name = j["name"].get<std::string>();
  if (j.contains("seed")) {
    const bool ok_int = j["seed"].is_number_unsigned() ||
                        (j["seed"].is_number_integer() &&
                         j["seed"].get<long long>() >= 0);
    if (!ok_int) fail("$.seed", "expected a nonnegative integer");
    s.seed = j["seed"].get<unsigned long long>();
  }
  s.model_spec = j["model"];
  s.build_model = parse_model(j["model"], "$.model");
  {
    // surface model precondition violations at validation time
    std::mt19937_64 probe(s.seed);
    try {
      (void)s.build_model(probe);
    } catch (const Error& e) {
      fail("$.model", e.what());
    }
  }

  if (!j["experiments"].is_array() || j["experiments"].empty())
    fail("$.experiments", "expected a nonempty array");
  for (std::size_t i = 0; i < j["experiments"].size(); ++i) {
    const std::string path = "$.experiments[" + std::to_string(i) + "]";
    const json& e = j["experiments"][i];
    if (!e.is_object() || !e.contains("type") || !e["type"].is_string())
      fail(path, "expected an object with a string 'type'");
    Experiment exp;
    exp.type_name = e["type"].get<std::string>();
    exp.kind = experiment_kind(exp.type_name, path + ".type");
    validate_experiment(e, exp.kind, path);
    exp.params = e;
    s.experiments.push_back(std::move(exp));
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ScenarioError("scenario is not valid JSON: " +
                        std::string(e.what()));
  }
  return parse_scenario(j);
}

namespace {

struct ExperimentContext {
  const RiggedModel* model;
  int threads = 1;
  std::string out_dir;
  std::string prefix;
  std::vector<std::string>* files;
  std::vector<Check> checks;

  void emit(const std::string& suffix, const std::string& content) {
    const std::string name = prefix + suffix;
    write_text_file(out_dir + "/" + name, content);
    files->push_back(name);
  }
};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  if (n == 1) {
    out.push_back(lo);
    return out;
  }
  for (int i = 0; i < n; ++i)
    out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

const char* status_name(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::Ok:
      return "ok";
    case TrajectoryStatus::HitBranchPoint:
      return "hit_branch_point";
    case TrajectoryStatus::Diverged:
      return "diverged";
    case TrajectoryStatus::LeftDomain:
      return "left_domain";
  }
  return "unknown";
}

const char* kind_name(SingularityKind k) {
  switch (k) {
    case SingularityKind::Regular:
      return "regular";
    case SingularityKind::BranchPoint:
      return "branch_point";
    case SingularityKind::AbsorbingSuspect:
      return "absorbing_suspect";
    case SingularityKind::Unresolved:
      return "unresolved";
  }
  return "unknown";
}

ordered json_singularity(const SingularityReport& r) {
  ordered j;
  j["location"] = json_complex(r.location);
  j["kind"] = kind_name(r.kind);
  j["period"] = r.period;
  j["monodromy"] = r.monodromy;
  j["residual_discriminant"] = r.residual_discriminant;
  j["min_sigma"] = r.min_sigma;
  j["evidence"] = r.evidence;
  return j;
}

ordered run_spectrum_grid(ExperimentContext& ctx, const json& p) {
  const auto re = linspace(p["re"][0].get<double>(), p["re"][1].get<double>(),
                           p["re"][2].get<int>());
  const auto im = linspace(p["im"][0].get<double>(), p["im"][1].get<double>(),
                           p["im"][2].get<int>());
  std::vector<CsvRow> rows;
  std::vector<SvgMarker> markers;
  double max_residual = 0.0;
  bool accounting_ok = true;
  int evaluated = 0;
  int skipped = 0;
  for (double x : re) {
    for (double y : im) {
      const Complex z{x, y};
      SigmaMultiset spec;
      try {
        spec = resonance_spectrum(*ctx.model, z);
      } catch (const SingularPoint&) {
        ++skipped;
        continue;
      }
      ++evaluated;
      const CMatrix tj = sandwiched_tj(*ctx.model, z);
      if (static_cast<int>(spec.sigmas.size()) + spec.far_count !=
          ctx.model->nf)
        accounting_ok = false;
      const auto rs = spec.resonances();
      for (std::size_t k = 0; k < rs.size(); ++k) {
        max_residual = std::max(max_residual, pole_residual(tj, rs[k]));
        rows.push_back({static_cast<int>(k), z, rs[k], "ok"});
        markers.push_back({rs[k], "#1f6fb2", 2.0});
      }
    }
  }
  ctx.emit("_resonances.csv", csv_table(rows));
  ctx.emit("_resonances.svg",
           svg_plane_plot({}, markers, "resonances in the r-plane"));

  ctx.checks.push_back({"sigma_accounting", accounting_ok,
                        "kept + culled == nf at every grid point"});
  ctx.checks.push_back({"pole_residual", max_residual < 1e-7,
                        "max |det(I + r T J)| = " + fmt_double(max_residual)});
  const bool rank_one_real =
      ctx.model->nf == 1 && (ctx.model->kind == ModelKind::FiniteMatrix ||
                             ctx.model->kind == ModelKind::RankOne);
  if (rank_one_real && im.front() > 0.0) {
    std::vector<Complex> grid;
    for (double x : re)
      for (double y : im) grid.emplace_back(x, y);
    const HerglotzReport h = herglotz_check(*ctx.model, grid);
    ctx.checks.push_back(
        {"herglotz", h.pass,
         "min sign-adjusted Im r = " + fmt_double(h.min_im)});
  }

  ordered out;
  out["grid_points"] = evaluated;
  out["skipped_singular"] = skipped;
  out["rows"] = rows.size();
  out["max_pole_residual"] = max_residual;
  return out;
}

ordered run_continue(ExperimentContext& ctx, const json& p) {
  const Complex start_z = get_complex(p["start_z"], "start_z");
  const Complex start_r = get_complex(p["start_r"], "start_r");
  std::vector<Complex> waypoints;
  for (const auto& w : p["waypoints"])
    waypoints.push_back(get_complex(w, "waypoints"));

  const BranchTrajectory traj =
      continue_branch(*ctx.model, start_z, start_r, waypoints);

  std::vector<CsvRow> rows;
  double max_residual = 0.0;
  for (std::size_t i = 0; i < traj.path.size(); ++i) {
    const bool last = i + 1 == traj.path.size();
    rows.push_back({0, traj.path[i], traj.values[i],
                    last ? status_name(traj.status) : "ok"});
    try {
      max_residual = std::max(
          max_residual,
          pole_residual(sandwiched_tj(*ctx.model, traj.path[i]),
                        traj.values[i]));
    } catch (const Error&) {
    }
  }
  ctx.emit("_trajectory.csv", csv_table(rows));

  SvgSeries r_series;
  for (Complex v : traj.values) r_series.points.push_back(v);
  SvgSeries z_series;
  z_series.color = "#2ca02c";
  for (Complex z : traj.path) z_series.points.push_back(z);
  ctx.emit("_r_plane.svg",
           svg_plane_plot({r_series}, {}, "tracked resonance, r-plane"));
  ctx.emit("_z_plane.svg",
           svg_plane_plot({z_series}, {}, "continuation path, z-plane"));

  ctx.checks.push_back({"trajectory_completed",
                        traj.status == TrajectoryStatus::Ok,
                        status_name(traj.status)});
  ctx.checks.push_back({"pole_residual_along_path", max_residual < 1e-6,
                        "max residual " + fmt_double(max_residual)});

  ordered out;
  out["status"] = status_name(traj.status);
  out["samples"] = traj.path.size();
  out["final_z"] = json_complex(traj.path.back());
  out["final_r"] = json_complex(traj.values.back());
  if (traj.boundary_limit)
    out["boundary_limit"] = json_complex(*traj.boundary_limit);
  if (traj.status != TrajectoryStatus::Ok) {
    out["failure_interval"] =
        ordered::array({json_complex(traj.failure_interval.first),
                        json_complex(traj.failure_interval.second)});
  }
  return out;
}

EgorovCertificate egorov_from_params(ExperimentContext& ctx, const json& p) {
  const auto interval = get_interval(p["interval"], "interval");
  const double delta = p["delta"].get<double>();
  EgorovOptions opts;
  opts.threads = ctx.threads;
  if (p.contains("m_max")) opts.m_max = p["m_max"].get<int>();
  if (p.contains("n_max")) opts.n_max = p["n_max"].get<int>();
  if (p.contains("lambda_step_rel"))
    opts.lambda_step_rel = p["lambda_step_rel"].get<double>();
  const RiggedModel* model = ctx.model;
  auto evaluator = [model](Complex z) { return eval_T(*model, z).matrix; };
  return egorov_compact(evaluator, interval, delta, opts);
}

ordered json_certificate(const EgorovCertificate& cert) {
  ordered j;
  j["interval"] =
      ordered::array({cert.interval.first, cert.interval.second});
  j["delta"] = cert.delta;
  j["norm_scale"] = cert.norm_scale;
  j["grid_step"] = cert.grid_step;
  j["ok"] = cert.ok;
  j["uncovered_measure"] = cert.uncovered_measure;
  j["region_measure"] = cert.region.measure();
  j["epsilon"] = cert.region.epsilon();
  ordered intervals = ordered::array();
  for (const auto& [a, b] : cert.region.intervals())
    intervals.push_back(ordered::array({a, b}));
  j["region"] = intervals;
  ordered moduli = ordered::array();
  for (const auto& m : cert.moduli) {
    ordered row;
    row["m"] = m.m;
    row["n0"] = m.n0;
    row["defect"] = m.defect;
    moduli.push_back(row);
  }
  j["moduli"] = moduli;
  ordered witnesses = ordered::array();
  for (const auto& w : cert.witnesses) {
    ordered row;
    row["lambda"] = w.lambda;
    row["z"] = json_complex(w.z);
    row["deviation"] = w.deviation;
    row["m"] = w.m;
    row["n0"] = w.n0;
    witnesses.push_back(row);
  }
  j["witnesses"] = witnesses;
  if (!cert.worst_offenders.empty()) j["worst_offenders"] = cert.worst_offenders;
  return j;
}

ordered run_egorov(ExperimentContext& ctx, const json& p) {
  const EgorovCertificate cert = egorov_from_params(ctx, p);
  const RiggedModel* model = ctx.model;
  auto evaluator = [model](Complex z) { return eval_T(*model, z).matrix; };

  bool witnesses_ok = true;
  for (const auto& w : cert.witnesses)
    if (!recheck_witness(evaluator, cert, w)) witnesses_ok = false;

  ctx.emit("_certificate.json", json_certificate(cert).dump(2) + "\n");
  std::vector<SvgMarker> markers;
  for (const auto& w : cert.witnesses)
    markers.push_back({w.z, "#d62728", 2.0});
  ctx.emit("_region.svg",
           svg_cone_region(cert.region, cert.interval, markers,
                           "certified region and truncated cones"));

  ctx.checks.push_back({"measure_budget", cert.ok,
                        "uncovered " + fmt_double(cert.uncovered_measure) +
                            " against delta " + fmt_double(cert.delta)});
  ctx.checks.push_back({"witness_recheck", witnesses_ok,
                        std::to_string(cert.witnesses.size()) + " witnesses"});

  ordered out = json_certificate(cert);
  out["witnesses_recheck_pass"] = witnesses_ok;
  return out;
}

ordered run_impacting(ExperimentContext& ctx, const json& p) {
  const EgorovCertificate cert = egorov_from_params(ctx, p);
  ImpactingOptions iopts;
  if (p.contains("y_top")) iopts.y_top = p["y_top"].get<double>();
  if (p.contains("y_bottom")) iopts.y_bottom = p["y_bottom"].get<double>();
  const int samples =
      p.contains("lambda_samples") ? p["lambda_samples"].get<int>() : 25;

  // quantiles of the region by measure
  std::vector<double> lambdas;
  const double total = cert.region.measure();
  if (total > 0.0) {
    for (int i = 0; i < samples; ++i) {
      double target = total * (i + 0.5) / samples;
      for (const auto& [a, b] : cert.region.intervals()) {
        if (target <= b - a) {
          lambdas.push_back(a + target);
          break;
        }
        target -= b - a;
      }
    }
  }

  std::vector<ImpactingSet> sets(lambdas.size());
  parallel_for(static_cast<int>(lambdas.size()), ctx.threads, [&](int i) {
    sets[i] = find_impacting(*ctx.model, lambdas[i], iopts);
  });

  std::vector<CsvRow> rows;
  std::vector<SvgMarker> markers;
  int total_impacting = 0;
  for (const auto& set : sets) {
    for (const auto& b : set.branches) {
      rows.push_back({b.branch_id, Complex{set.lambda, 0.0},
                      b.boundary_value, b.impacting ? "impacting" : "clean"});
      if (b.impacting) {
        markers.push_back({Complex{set.lambda, 0.0}, "#d62728", 3.0});
        ++total_impacting;
      }
    }
  }
  ctx.emit("_boundary.csv", csv_table(rows));
  ctx.emit("_region.svg",
           svg_cone_region(cert.region, cert.interval, markers,
                           "impacting boundary points over the region"));

  VerifyOptions vopts;
  vopts.impacting = iopts;
  const SingleValuednessReport verify =
      verify_single_valuedness(*ctx.model, cert.region, sets, vopts);

  ctx.checks.push_back({"egorov_measure_budget", cert.ok,
                        "uncovered " + fmt_double(cert.uncovered_measure)});
  ctx.checks.push_back(
      {"single_valuedness", verify.pass,
       std::to_string(verify.checks.size()) + " loop checks, min height " +
           fmt_double(verify.min_verified_height)});

  ordered out;
  out["lambda_samples"] = lambdas.size();
  out["impacting_rows"] = total_impacting;
  out["global_branches"] = verify.global_branches;
  out["impacting_chains"] = verify.impacting_chains;
  out["min_verified_height"] = verify.min_verified_height;
  out["verification_pass"] = verify.pass;
  ordered per_lambda = ordered::array();
  for (const auto& set : sets) {
    ordered row;
    row["lambda"] = set.lambda;
    row["impacting_count"] = set.impacting_count();
    if (!set.note.empty()) row["note"] = set.note;
    per_lambda.push_back(row);
  }
  out["per_lambda"] = per_lambda;
  return out;
}

ordered run_classify(ExperimentContext& ctx, const json& p) {
  const Complex candidate = get_complex(p["candidate"], "candidate");
  ClassifyOptions opts;
  if (p.contains("probe_radius"))
    opts.probe_radius = p["probe_radius"].get<double>();
  const SingularityReport report =
      classify_singularity(*ctx.model, candidate, opts);
  ctx.checks.push_back({"classification_resolved",
                        report.kind != SingularityKind::Unresolved,
                        kind_name(report.kind)});
  return json_singularity(report);
}

ordered run_detect(ExperimentContext& ctx, const json& p) {
  const Rect rect = get_rect(p["rect"], "rect");
  DetectOptions opts;
  opts.threads = ctx.threads;
  if (p.contains("grid_re")) opts.grid_re = p["grid_re"].get<int>();
  if (p.contains("grid_im")) opts.grid_im = p["grid_im"].get<int>();
  const std::vector<SingularityReport> reports =
      detect_branch_points(*ctx.model, rect, opts);

  std::vector<SvgMarker> markers;
  SvgSeries outline;
  outline.color = "#999999";
  outline.closed = true;
  outline.points = {Complex{rect.re_lo, rect.im_lo},
                    Complex{rect.re_hi, rect.im_lo},
                    Complex{rect.re_hi, rect.im_hi},
                    Complex{rect.re_lo, rect.im_hi}};
  for (const auto& r : reports) markers.push_back({r.location, "#d62728", 3.5});
  ctx.emit("_points.svg",
           svg_plane_plot({outline}, markers, "branch point candidates"));

  bool all_resolved = true;
  for (const auto& r : reports)
    if (r.kind == SingularityKind::Unresolved) all_resolved = false;
  ctx.checks.push_back({"all_candidates_classified", all_resolved,
                        std::to_string(reports.size()) + " candidates"});

  ordered out;
  out["count"] = reports.size();
  ordered arr = ordered::array();
  for (const auto& r : reports) arr.push_back(json_singularity(r));
  out["points"] = arr;
  return out;
}

ordered run_absorbing_sweep(ExperimentContext& ctx, const json& p) {
  const Rect rect = get_rect(p["rect"], "rect");
  AbsorbingSweepOptions opts;
  opts.threads = ctx.threads;
  if (p.contains("grid_re")) opts.grid_re = p["grid_re"].get<int>();
  if (p.contains("grid_im")) opts.grid_im = p["grid_im"].get<int>();
  const AbsorbingSweepReport report = absorbing_sweep(*ctx.model, rect, opts);

  ctx.checks.push_back(
      {"no_absorbing_suspects", report.suspects.empty(),
       std::to_string(report.suspects.size()) + " suspects, min |sigma| " +
           fmt_double(report.min_sigma_seen)});

  ordered out;
  out["candidates_examined"] = report.candidates_examined;
  out["min_sigma_seen"] = report.min_sigma_seen;
  out["argmin_z"] = json_complex(report.argmin_z);
  ordered suspects = ordered::array();
  for (const auto& s : report.suspects) suspects.push_back(json_singularity(s));
  out["suspects"] = suspects;
  ordered other = ordered::array();
  for (const auto& s : report.other_events) other.push_back(json_singularity(s));
  out["other_events"] = other;
  return out;
}

ordered run_oracle_check(ExperimentContext& ctx, const json& p) {
  const double lambda = p["lambda"].get<double>();
  FlowOptions fopts;
  if (p.contains("grid_n")) fopts.grid_n = p["grid_n"].get<int>();
  const std::vector<CrossingRecord> records =
      crossings(*ctx.model, lambda, fopts);

  // Independent route: real resonances at the boundary point inside [0, 1].
  std::vector<double> bs_values;
  const SigmaMultiset spec =
      resonance_spectrum(*ctx.model, Complex{lambda, 0.0});
  for (Complex r : spec.resonances())
    if (std::abs(r.imag()) <= 1e-8 && r.real() >= -1e-10 &&
        r.real() <= 1.0 + 1e-10)
      bs_values.push_back(r.real());
  std::sort(bs_values.begin(), bs_values.end());

  std::vector<CsvRow> rows;
  for (const auto& rec : records) {
    std::string status = rec.direction > 0 ? "crossing_up" : "crossing_down";
    if (rec.degenerate) status += "_degenerate";
    rows.push_back({rec.eigen_index, Complex{lambda, 0.0},
                    Complex{rec.s_star, 0.0}, status});
  }
  ctx.emit("_crossings.csv", csv_table(rows));

  bool equivalent = records.size() == bs_values.size();
  double max_gap = 0.0;
  if (equivalent) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      const double gap = std::abs(records[i].s_star - bs_values[i]);
      max_gap = std::max(max_gap, gap);
      if (gap > 1e-8) equivalent = false;
    }
  }
  ctx.checks.push_back(
      {"oracle_equivalence", equivalent,
       std::to_string(records.size()) + " crossings vs " +
           std::to_string(bs_values.size()) + " real resonances, max gap " +
           fmt_double(max_gap)});
  bool hf_ok = true;
  for (const auto& rec : records)
    if (rec.degenerate) hf_ok = false;
  ctx.checks.push_back({"crossings_transversal", hf_ok, ""});

  ordered out;
  out["lambda"] = lambda;
  out["net_flow"] = net_flow(records);
  ordered cr = ordered::array();
  for (const auto& rec : records) {
    ordered row;
    row["s_star"] = rec.s_star;
    row["direction"] = rec.direction;
    row["multiplicity"] = rec.multiplicity;
    row["eigen_index"] = rec.eigen_index;
    row["hf_slope"] = rec.hf_slope;
    row["degenerate"] = rec.degenerate;
    cr.push_back(row);
  }
  out["crossings"] = cr;
  out["real_resonances"] = bs_values;
  return out;
}

ordered run_ray_stats(ExperimentContext& ctx, const json& p) {
  const Complex z0 = get_complex(p["z0"], "z0");
  const Rect rect = get_rect(p["rect"], "rect");
  const int n_rays = p["n_rays"].get<int>();
  Complex start_r;
  if (p.contains("start_r")) {
    start_r = get_complex(p["start_r"], "start_r");
  } else {
    const SigmaMultiset spec = resonance_spectrum(*ctx.model, z0);
    if (spec.sigmas.empty())
      throw RejectedInput("no resonance available at z0 for ray statistics");
    start_r = spec.resonances().front();
  }
  const RayStats stats =
      ray_survival_stats(*ctx.model, z0, start_r, rect, n_rays);
  ctx.checks.push_back(
      {"all_rays_survive", stats.survived == stats.n_rays,
       std::to_string(stats.survived) + " of " + std::to_string(stats.n_rays)});
  ordered out;
  out["n_rays"] = stats.n_rays;
  out["survived"] = stats.survived;
  out["survival_fraction"] = stats.survival_fraction;
  out["failed_rays"] = stats.failed_rays;
  return out;
}

ordered dispatch(ExperimentContext& ctx, const Experiment& exp) {
  switch (exp.kind) {
    case ExperimentKind::SpectrumGrid:
      return run_spectrum_grid(ctx, exp.params);
    case ExperimentKind::Continue:
      return run_continue(ctx, exp.params);
    case ExperimentKind::Egorov:
      return run_egorov(ctx, exp.params);
    case ExperimentKind::Impacting:
      return run_impacting(ctx, exp.params);
    case ExperimentKind::Classify:
      return run_classify(ctx, exp.params);
    case ExperimentKind::DetectBranchPoints:
      return run_detect(ctx, exp.params);
    case ExperimentKind::AbsorbingSweep:
      return run_absorbing_sweep(ctx, exp.params);
    case ExperimentKind::OracleCheck:
      return run_oracle_check(ctx, exp.params);
    case ExperimentKind::RayStats:
      return run_ray_stats(ctx, exp.params);
  }
  throw Error("unhandled experiment kind");
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, const RunOptions& opts) {
  RunResult result;
  const unsigned long long seed =
      opts.seed_override ? opts.seed : scenario.seed;
  const int threads = resolve_thread_count(opts.threads);
  std::mt19937_64 rng(seed);
  const RiggedModel model = scenario.build_model(rng);

  std::filesystem::create_directories(opts.out_dir);

  ordered report;
  report["scenario"] = scenario.name;
  report["seed"] = seed;
  report["model"] = scenario.model_spec;
  ordered experiments = ordered::array();

  bool all_pass = true;
  for (std::size_t i = 0; i < scenario.experiments.size(); ++i) {
    const Experiment& exp = scenario.experiments[i];
    ExperimentContext ctx;
    ctx.model = &model;
    ctx.threads = threads;
    ctx.out_dir = opts.out_dir;
    ctx.prefix = std::to_string(i + 1) + "_" + exp.type_name;
    ctx.files = &result.files_written;

    ordered block;
    block["type"] = exp.type_name;
    block["params"] = exp.params;
    block["results"] = dispatch(ctx, exp);
    block["checks"] = json_checks(ctx.checks);
    for (const Check& c : ctx.checks)
      if (!c.pass) all_pass = false;
    experiments.push_back(block);
  }
  report["experiments"] = experiments;
  report["files"] = result.files_written;
  report["pass"] = all_pass;

  write_text_file(opts.out_dir + "/report.json", report.dump(2) + "\n");
  result.files_written.push_back("report.json");
  result.report = std::move(report);
  result.exit_code = all_pass ? 0 : 1;
  return result;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"resonance-lab: coupling resonances under factorized "
               "perturbations"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  unsigned long long seed = 0;
  bool seed_set = false;
  int threads = 0;

  CLI::App* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("scenario", scenario_path, "scenario JSON file")
      ->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the scenario seed")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--threads", threads, "worker threads");

  CLI::App* validate = app.add_subcommand("validate", "validate a scenario");
  validate->add_option("scenario", scenario_path, "scenario JSON file")
      ->required();

  CLI::App* selftest =
      app.add_subcommand("selftest", "run the built-in invariant suites");
  selftest->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      const Scenario scenario = load_scenario_file(scenario_path);
      RunOptions opts;
      opts.seed_override = seed_set;
      opts.seed = seed;
      opts.threads = threads;
      opts.out_dir = out_dir;
      const RunResult result = run_scenario(scenario, opts);
      std::printf("%s: %s (%d files)\n", scenario.name.c_str(),
                  result.exit_code == 0 ? "pass" : "FAIL",
                  static_cast<int>(result.files_written.size()));
      return result.exit_code;
    }
    if (validate->parsed()) {
      const Scenario scenario = load_scenario_file(scenario_path);
      std::printf("%s: valid (%d experiments)\n", scenario.name.c_str(),
                  static_cast<int>(scenario.experiments.size()));
      return 0;
    }
    return run_selftest(std::cout);
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return 2;
  } catch (const RejectedInput& e) {
    std::fprintf(stderr, "rejected input: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace reslab
