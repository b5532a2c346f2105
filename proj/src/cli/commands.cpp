#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

#include <json.hpp>

#include "nljc/cli.hpp"
#include "nljc/criteria.hpp"
#include "nljc/errors.hpp"
#include "nljc/measurement.hpp"

#ifndef NLJC_VERSION
#define NLJC_VERSION "0.0.0"
#endif

namespace nljc {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kArtifact = "nljc";

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::filesystem::path output_path(const RunConfig& config, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec || !std::filesystem::is_directory(config.out_dir))
    throw ConfigError("output directory '" + config.out_dir + "' cannot be created", "output.directory");
  return std::filesystem::path(config.out_dir) / name;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string(), "output.directory");
  return out;
}

// CSV preamble: `#!` lines carry run metadata, `# key = value` lines the
// resolved config. Both are skipped by ordinary CSV readers with a comment
// character.
std::ofstream open_csv(const RunConfig& config, const std::string& name, const std::string& command,
                       const std::vector<std::string>& notes = {}) {
  auto out = open_output(output_path(config, name));
  out << "#! artifact = " << kArtifact << "\n";
  out << "#! version = " << NLJC_VERSION << "\n";
  out << "#! command = " << command << "\n";
  out << "#! created = " << utc_timestamp() << "\n";
  for (const auto& n : notes) out << "#! note = " << n << "\n";
  for (const auto& [k, v] : config.echo()) out << "# " << k << " = " << v << "\n";
  return out;
}

json envelope(const RunConfig& config, const std::string& command) {
  json j;
  j["artifact"] = kArtifact;
  j["version"] = NLJC_VERSION;
  j["command"] = command;
  j["created"] = utc_timestamp();
  json c = json::object();
  for (const auto& [k, v] : config.echo()) c[k] = v;
  j["config"] = std::move(c);
  return j;
}

void write_json(const RunConfig& config, const std::string& name, const json& j) {
  auto out = open_output(output_path(config, name));
  out << j.dump(2) << "\n";
}

// JSON numbers cannot be nan/inf; those become null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::vector<double> time_grid(double t0, double t1, int n) {
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[i] = n == 1 ? t0 : t0 + (t1 - t0) * i / (n - 1);
  return t;
}

std::string join(std::initializer_list<double> xs) {
  std::string s;
  bool first = true;
  for (double x : xs) {
    if (!first) s += ',';
    s += format_number(x);
    first = false;
  }
  return s;
}

json moments_json(const MomentSet& m) {
  return {{"mean_a_re", number(m.mean_a.real())},   {"mean_a_im", number(m.mean_a.imag())},
          {"mean_a2_re", number(m.mean_a2.real())}, {"mean_a2_im", number(m.mean_a2.imag())},
          {"mean_n", number(m.mean_n)},             {"mean_na_re", number(m.mean_na.real())},
          {"mean_na_im", number(m.mean_na.imag())}, {"mean_n2", number(m.mean_n2)}};
}

std::array<double, 8> flatten(const MomentSet& m) {
  return {m.mean_a.real(), m.mean_a.imag(), m.mean_a2.real(), m.mean_a2.imag(),
          m.mean_n,        m.mean_na.real(), m.mean_na.imag(), m.mean_n2};
}

MomentSet unflatten(const std::array<double, 8>& v) {
  MomentSet m;
  m.mean_a = {v[0], v[1]};
  m.mean_a2 = {v[2], v[3]};
  m.mean_n = v[4];
  m.mean_na = {v[5], v[6]};
  m.mean_n2 = v[7];
  return m;
}

std::vector<Complex> grid_points(const PhaseGrid& grid) {
  std::vector<Complex> pts(static_cast<std::size_t>(grid.size()));
  for (int i = 0; i < grid.size(); ++i) pts[i] = grid.point(i);
  return pts;
}

json grid_json(const PhaseGrid& g) {
  return {{"center_re", g.center().real()},
          {"center_im", g.center().imag()},
          {"half_extent", g.half_extent()},
          {"n_side", g.n_side()}};
}

double optional_q(const MomentSet& m) {
  try {
    return mandel_q(m);
  } catch (const UndefinedForVacuum&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

json criteria_json(const MomentSet& m) {
  const auto ac = c_ac(m);
  const auto sq = c_sq(m);
  return {{"c_sq", number(sq.value)}, {"phi_sq", number(sq.phi)}, {"c_sp", number(optional_q(m))},
          {"c_ac", number(ac.value)}, {"phi_ac", number(ac.phi)}};
}

}  // namespace

int cmd_criteria(const RunConfig& config) {
  const auto ts = time_grid(config.t_start, config.t_end, config.n_points);
  const auto rows = criteria_scan(config.model_params(), ts, config.truncation());
  auto out = open_csv(config, "criteria.csv", "criteria");
  out << "t,c_sq,phi_sq,c_sp,c_sp_defined,c_ac,phi_ac\n";
  for (const auto& r : rows) {
    const double sp = r.c_sp.value_or(std::numeric_limits<double>::quiet_NaN());
    out << join({r.t, r.c_sq, r.phi_sq, sp}) << ',' << (r.c_sp ? "true" : "false") << ','
        << join({r.c_ac, r.phi_ac}) << "\n";
  }
  std::cout << "criteria: " << rows.size() << " rows -> "
            << (std::filesystem::path(config.out_dir) / "criteria.csv").string() << "\n";
  return 0;
}

int cmd_pfunc(const RunConfig& config) {
  const MotionalDensityMatrix rho =
      reduced_rho(config.state_t, config.model_params(), config.truncation());
  const PhaseGrid grid = config.grid();
  const QuasiProbMap map = config.method == PMethod::series
                               ? p_omega_series_map(rho, grid, config.filter)
                               : p_omega_integral(rho, grid, config.filter);
  json j = envelope(config, "pfunc");
  j["state_t"] = config.state_t;
  j["grid"] = grid_json(grid);
  j["method"] = config.method == PMethod::series ? "series" : "integral";
  j["width_w"] = map.width;
  json values = json::array();
  for (double v : map.values) values.push_back(number(v));
  j["values"] = std::move(values);
  j["min_value"] = number(map.min_value());
  const int am = map.argmin();
  j["argmin"] = {{"index", am}, {"re", grid.point(am).real()}, {"im", grid.point(am).imag()}};
  j["converged"] = map.converged;
  j["max_imag_residue"] = number(map.max_imag_residue);
  j["grid_integral"] = number(map.integral());
  write_json(config, "pfunc.json", j);
  std::cout << "pfunc: min " << format_number(map.min_value()) << " at "
            << format_number(grid.point(am).real()) << (grid.point(am).imag() < 0 ? "" : "+")
            << format_number(grid.point(am).imag()) << "i"
            << (map.converged ? "" : " (series not converged everywhere)") << "\n";
  return 0;
}

int cmd_oracle_check(const RunConfig& config) {
  if (std::abs(config.beta0) > 3.0)
    throw ConfigError("oracle-check requires |beta0| <= 3 (got " + format_number(std::abs(config.beta0)) + ")",
                      "model.beta0_re");
  const ModelParams params = config.model_params();
  ModelParams oracle_params = params;
  if (config.oracle_eta) oracle_params.eta = *config.oracle_eta;

  int cavity_dim = 0;
  if (config.cavity_dim) {
    cavity_dim = *config.cavity_dim;
  } else {
    // The coupling raises the pump photon number by one, so the oracle space
    // must hold one photon above both the analytic window and the coherent
    // input's significant support.
    const double mean = std::norm(config.beta0);
    int top = cavity_window(config.beta0).m_hi;
    while (poisson_tail(mean, top) > 1e-14) ++top;
    cavity_dim = top + 2;
  }
  const int motional_dim = config.motional_dim.value_or(config.n_max + 1);

  const MotionalPropagator analytic(params, config.truncation());
  const OracleEvolver oracle(oracle_params, cavity_dim, motional_dim);
  const auto ts = time_grid(0.0, config.oracle_t_end, config.oracle_points);

  json table = json::array();
  double worst = 0.0;
  for (double t : ts) {
    const CMatrix a = analytic.at(t).resized(motional_dim, 1.0).matrix();
    const CMatrix b = oracle.at(t).matrix();
    const double d = trace_distance(a, b);
    worst = std::max(worst, d);
    table.push_back({{"t", t}, {"trace_distance", number(d)}});
  }
  const bool pass = worst < config.oracle_threshold;

  json j = envelope(config, "oracle-check");
  j["cavity_dim"] = cavity_dim;
  j["motional_dim"] = motional_dim;
  j["oracle_eta"] = oracle_params.eta;
  j["hamiltonian_hermiticity_defect"] = number(oracle.hermiticity_defect());
  j["threshold"] = config.oracle_threshold;
  j["table"] = std::move(table);
  j["max_distance"] = number(worst);
  j["pass"] = pass;
  write_json(config, "oracle_check.json", j);
  std::cout << "oracle-check: max trace distance " << format_number(worst) << " ("
            << (pass ? "pass" : "FAIL") << ", threshold " << format_number(config.oracle_threshold)
            << ")\n";
  return pass ? 0 : 1;
}

int cmd_measure(const RunConfig& config) {
  const ModelParams params = config.model_params();
  const MotionalDensityMatrix rho = reduced_rho(config.state_t, params, config.truncation());
  const VibronicState state = VibronicState::upper(rho);
  const MomentSet direct = moments_from_rho(rho);
  const ElementSet elements = state.upper_only() ? ElementSet::upper : ElementSet::all;
  const int blocks_per_n = elements == ElementSet::upper ? 1 : 4;

  auto make_design = [&](int rows, std::uint64_t seed) {
    const int unknowns = blocks_per_n * rows;
    if (config.schedule == ScheduleKind::linear) {
      const int count = config.n_schedules.value_or(unknowns);
      return ProbeDesign(linear_schedule_family(count, config.tau_step, config.kappa_prime), rows,
                         params, elements);
    }
    const double oversampling =
        config.n_schedules ? std::max(1.0, static_cast<double>(*config.n_schedules) / unknowns)
                           : config.oversampling;
    auto family = random_schedule_family(rows, params, elements, seed, oversampling, config.kappa_prime);
    // An explicit count below the number of unknowns is kept as given, so that
    // the design reports the rank deficiency.
    if (config.n_schedules && static_cast<int>(family.size()) > *config.n_schedules)
      family.resize(*config.n_schedules);
    return ProbeDesign(std::move(family), rows, params, elements);
  };

  // Wigner grid about the coherent amplitude of the state.
  const PhaseGrid wgrid(direct.mean_a, config.wigner_half_extent, config.wigner_n_side);
  const std::vector<Complex> walphas = grid_points(wgrid);
  const int rows = required_rows(state, wgrid);
  const ProbeDesign design = make_design(rows, config.seed);
  const RMatrix probs = dark_probabilities(state, walphas, design);

  const bool shot_mode = config.shots.has_value();
  const double inf = std::numeric_limits<double>::infinity();
  const double tail_tol = shot_mode ? inf : 1e-10;
  const double trace_tol = shot_mode ? inf : 1e-6;

  struct Estimate {
    std::vector<RhoNNTable> tables;
    MomentSet coarse, refined;
  };
  auto estimate = [&](const RMatrix& freqs) {
    Estimate e;
    e.tables = reconstruct_rho_nn(freqs, walphas, design);
    const CfMatrix cf(wigner_grid(e.tables, wgrid, tail_tol), trace_tol);
    auto phi = [&cf](Complex b) { return cf.traced(b); };
    e.coarse = moments_from_cf(phi, config.fd_step, false);
    e.refined = config.richardson ? moments_from_cf(phi, config.fd_step, true) : e.coarse;
    return e;
  };

  std::vector<Estimate> runs;
  if (!shot_mode) {
    runs.push_back(estimate(probs));
  } else {
    for (int r = 0; r < config.replicates; ++r)
      runs.push_back(estimate(sample_frequencies(probs, *config.shots, config.seed + r)));
  }
  const Estimate& first = runs.front();

  std::array<double, 8> mean{}, stderr_{};
  for (const auto& r : runs) {
    const auto v = flatten(r.refined);
    for (int i = 0; i < 8; ++i) mean[i] += v[i] / runs.size();
  }
  if (runs.size() > 1) {
    for (const auto& r : runs) {
      const auto v = flatten(r.refined);
      for (int i = 0; i < 8; ++i) stderr_[i] += (v[i] - mean[i]) * (v[i] - mean[i]);
    }
    for (int i = 0; i < 8; ++i)
      stderr_[i] = std::sqrt(stderr_[i] / (runs.size() - 1) / runs.size());
  }
  const MomentSet pipeline = unflatten(mean);

  std::array<double, 8> fd_error{};
  {
    const auto a = flatten(first.refined), b = flatten(first.coarse);
    for (int i = 0; i < 8; ++i) fd_error[i] = std::abs(a[i] - b[i]);
  }
  auto named = [](const std::array<double, 8>& v) {
    const char* keys[8] = {"mean_a_re", "mean_a_im",  "mean_a2_re", "mean_a2_im",
                           "mean_n",    "mean_na_re", "mean_na_im", "mean_n2"};
    json j;
    for (int i = 0; i < 8; ++i) j[keys[i]] = number(v[i]);
    return j;
  };

  const std::string caveat =
      "input state is |2><2| (x) rho_mot(t); the pump mode is traced out before probing";
  const std::string mode = shot_mode ? "shots=" + std::to_string(*config.shots) : "ideal";

  {
    auto out = open_csv(config, "measure_rho_nn.csv", "measure", {caveat, "statistics = " + mode});
    out << "alpha_re,alpha_im,n,rho11_re,rho22_re,rho12_re,rho12_im,rho11_direct,rho22_direct,"
           "rho12_direct_re,rho12_direct_im\n";
    for (std::size_t k = 0; k < walphas.size(); k += config.table_stride) {
      const RhoNNTable& t = first.tables[k];
      const RhoNNTable ex = exact_rho_nn(state, walphas[k], rows);
      for (int n = 0; n < rows; ++n)
        out << join({walphas[k].real(), walphas[k].imag()}) << ',' << n << ','
            << join({t.rho11(n).real(), t.rho22(n).real(), t.rho12(n).real(), t.rho12(n).imag(),
                     ex.rho11(n).real(), ex.rho22(n).real(), ex.rho12(n).real(), ex.rho12(n).imag()})
            << "\n";
    }
  }
  {
    const WignerGrid wg = wigner_grid(first.tables, wgrid, tail_tol);
    auto out = open_csv(config, "measure_wigner.csv", "measure", {caveat, "statistics = " + mode});
    out << "alpha_re,alpha_im,w11,w22,w12_re,w12_im,w_traced,w_traced_direct\n";
    for (int k = 0; k < wgrid.size(); ++k) {
      const RVector d = displaced_diagonal(rho, walphas[k]);
      double w_direct = 0.0;
      for (int n = 0; n < d.size(); ++n) w_direct += (n % 2 == 0 ? 1.0 : -1.0) * d(n);
      w_direct *= 2.0 / kPi;
      const auto& w = wg.values[k];
      out << join({walphas[k].real(), walphas[k].imag(), w(0, 0).real(), w(1, 1).real(),
                   w(0, 1).real(), w(0, 1).imag(), (w(0, 0) + w(1, 1)).real(), w_direct})
          << "\n";
    }
  }

  const PhaseGrid pgrid = config.grid();
  bool p_converged = true;
  if (config.p_maps) {
    std::optional<PMatrixMaps> maps;
    std::optional<QuasiProbMap> ref;
    if (config.method == PMethod::series) {
      const std::vector<Complex> palphas = grid_points(pgrid);
      const int prow = required_rows(state, pgrid);
      const ProbeDesign pdesign = make_design(prow, config.seed + 1);
      RMatrix pprobs = dark_probabilities(state, palphas, pdesign);
      if (shot_mode) pprobs = sample_frequencies(pprobs, *config.shots, config.seed);
      maps = p_matrix_series(reconstruct_rho_nn(pprobs, palphas, pdesign), pgrid, config.filter);
      ref = p_omega_series_map(rho, pgrid, config.filter);
    } else {
      const CfMatrix cf(wigner_grid(first.tables, wgrid, tail_tol), trace_tol);
      maps = p_matrix_integral(cf, pgrid, config.filter);
      ref = p_omega_integral(rho, pgrid, config.filter);
    }
    p_converged = maps->converged;
    const QuasiProbMap traced = maps->traced();
    auto out = open_csv(config, "measure_pmatrix.csv", "measure",
                        {caveat, "statistics = " + mode,
                         std::string("method = ") + (config.method == PMethod::series ? "series" : "integral"),
                         std::string("converged = ") + (maps->converged ? "true" : "false")});
    out << "alpha_re,alpha_im,p11,p22,p12_re,p12_im,p_traced,p_direct\n";
    for (int k = 0; k < pgrid.size(); ++k) {
      const Complex a = pgrid.point(k);
      out << join({a.real(), a.imag(), maps->block(0, 0)[k].real(), maps->block(1, 1)[k].real(),
                   maps->block(0, 1)[k].real(), maps->block(0, 1)[k].imag(), traced.values[k],
                   ref->values[k]})
          << "\n";
    }
  }

  json j = envelope(config, "measure");
  j["caveat"] = caveat;
  j["statistics"] = mode;
  j["state_t"] = config.state_t;
  j["design"] = {{"family", config.schedule == ScheduleKind::random ? "random" : "linear"},
                 {"elements", elements == ElementSet::upper ? "upper" : "all"},
                 {"rows", rows},
                 {"unknowns", design.unknowns()},
                 {"schedules", design.schedules().size()},
                 {"condition_number", number(design.condition_number())}};
  j["wigner_grid"] = grid_json(wgrid);
  j["fd_step"] = config.fd_step;
  j["richardson"] = config.richardson;
  j["pipeline"] = moments_json(pipeline);
  j["direct"] = moments_json(direct);
  j["finite_difference_error"] = named(fd_error);
  if (shot_mode) {
    j["replicates"] = runs.size();
    j["standard_error"] = named(stderr_);
  }
  j["criteria_pipeline"] = criteria_json(pipeline);
  j["criteria_direct"] = criteria_json(direct);
  const double ac_pipe = c_ac(pipeline).value, ac_direct = c_ac(direct).value;
  j["c_ac"] = {{"pipeline", number(ac_pipe)},
               {"direct", number(ac_direct)},
               {"same_sign", std::signbit(ac_pipe) == std::signbit(ac_direct)}};
  if (config.p_maps) j["p_maps_converged"] = p_converged;
  write_json(config, "measure_moments.json", j);

  std::cout << "measure: " << design.schedules().size() << " schedules, " << design.unknowns()
            << " unknowns, cond " << format_number(design.condition_number()) << "\n"
            << "  C_AC pipeline " << format_number(ac_pipe) << ", direct " << format_number(ac_direct)
            << "\n";
  return 0;
}

}  // namespace nljc
