#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "nljc/cli.hpp"
#include "nljc/errors.hpp"

namespace nljc {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, int line,
                            const std::string& expected) {
  std::string msg = "invalid value '" + value + "' for key '" + key + "': expected " + expected;
  if (line > 0) msg += " (line " + std::to_string(line) + ")";
  throw ConfigError(msg, key, line);
}

double to_double(const std::string& key, const std::string& v, int line) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    bad_value(key, v, line, "a finite number");
  return x;
}

long long to_integer(const std::string& key, const std::string& v, int line) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, line, "an integer");
  return x;
}

bool to_bool(const std::string& key, const std::string& v, int line) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(key, v, line, "true or false");
}

struct Entry {
  std::string key;
  std::function<void(RunConfig&, const std::string&, int)> set;
  std::function<std::string(const RunConfig&)> get;
};

Entry real(std::string key, double RunConfig::*field) {
  return {key,
          [key, field](RunConfig& c, const std::string& v, int line) {
            c.*field = to_double(key, v, line);
          },
          [field](const RunConfig& c) { return format_number(c.*field); }};
}

Entry integer(std::string key, int RunConfig::*field) {
  return {key,
          [key, field](RunConfig& c, const std::string& v, int line) {
            c.*field = static_cast<int>(to_integer(key, v, line));
          },
          [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

Entry boolean(std::string key, bool RunConfig::*field) {
  return {key,
          [key, field](RunConfig& c, const std::string& v, int line) {
            c.*field = to_bool(key, v, line);
          },
          [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

Entry complex_part(std::string key, Complex RunConfig::*field, bool imag) {
  return {key,
          [key, field, imag](RunConfig& c, const std::string& v, int line) {
            const double x = to_double(key, v, line);
            if (imag)
              (c.*field).imag(x);
            else
              (c.*field).real(x);
          },
          [field, imag](const RunConfig& c) {
            return format_number(imag ? (c.*field).imag() : (c.*field).real());
          }};
}

Entry center_part(std::string key, bool imag) {
  return {key,
          [key, imag](RunConfig& c, const std::string& v, int line) {
            if (v == "auto") {
              c.grid_center.reset();
              return;
            }
            Complex z = c.grid_center.value_or(c.alpha0);
            if (imag)
              z.imag(to_double(key, v, line));
            else
              z.real(to_double(key, v, line));
            c.grid_center = z;
          },
          [imag](const RunConfig& c) -> std::string {
            if (!c.grid_center) return "auto";
            return format_number(imag ? c.grid_center->imag() : c.grid_center->real());
          }};
}

template <class T>
Entry optional_count(std::string key, std::optional<T> RunConfig::*field, std::string none_word) {
  return {key,
          [key, field, none_word](RunConfig& c, const std::string& v, int line) {
            if (v == none_word) {
              (c.*field).reset();
              return;
            }
            c.*field = static_cast<T>(to_integer(key, v, line));
          },
          [field, none_word](const RunConfig& c) {
            return (c.*field) ? std::to_string(*(c.*field)) : none_word;
          }};
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back(real("model.eta", &RunConfig::eta));
    e.push_back(real("model.delta_phi", &RunConfig::delta_phi));
    e.push_back(integer("model.k_sideband", &RunConfig::k_sideband));
    e.push_back(real("model.delta_omega", &RunConfig::delta_omega));
    e.push_back(real("model.nu", &RunConfig::nu));
    e.push_back(real("model.omega21", &RunConfig::omega21));
    e.push_back(real("model.kappa_phase", &RunConfig::kappa_phase));
    e.push_back(complex_part("model.beta0_re", &RunConfig::beta0, false));
    e.push_back(complex_part("model.beta0_im", &RunConfig::beta0, true));
    e.push_back({"motion.kind",
                 [](RunConfig& c, const std::string& v, int line) {
                   if (v == "coherent")
                     c.motion = MotionKind::coherent;
                   else if (v == "number")
                     c.motion = MotionKind::number;
                   else if (v == "thermal")
                     c.motion = MotionKind::thermal;
                   else
                     bad_value("motion.kind", v, line, "coherent, number or thermal");
                 },
                 [](const RunConfig& c) -> std::string {
                   switch (c.motion) {
                     case MotionKind::number: return "number";
                     case MotionKind::thermal: return "thermal";
                     default: return "coherent";
                   }
                 }});
    e.push_back(complex_part("motion.alpha_re", &RunConfig::alpha0, false));
    e.push_back(complex_part("motion.alpha_im", &RunConfig::alpha0, true));
    e.push_back(integer("motion.number", &RunConfig::motion_number));
    e.push_back(real("motion.thermal_mean", &RunConfig::thermal_mean));
    e.push_back(integer("truncation.n_max", &RunConfig::n_max));
    e.push_back(real("truncation.tail_tol", &RunConfig::tail_tol));
    e.push_back(real("scan.t_start", &RunConfig::t_start));
    e.push_back(real("scan.t_end", &RunConfig::t_end));
    e.push_back(integer("scan.n_points", &RunConfig::n_points));
    e.push_back(real("state.t", &RunConfig::state_t));
    e.push_back(center_part("grid.center_re", false));
    e.push_back(center_part("grid.center_im", true));
    e.push_back(real("grid.half_extent", &RunConfig::half_extent));
    e.push_back(integer("grid.n_side", &RunConfig::n_side));
    e.push_back({"filter.kind",
                 [](RunConfig& c, const std::string& v, int line) {
                   if (v != "disc_autocorrelation")
                     bad_value("filter.kind", v, line, "disc_autocorrelation");
                   c.filter.kind = FilterKind::disc_autocorrelation;
                 },
                 [](const RunConfig&) { return std::string("disc_autocorrelation"); }});
    e.push_back({"filter.width",
                 [](RunConfig& c, const std::string& v, int line) {
                   c.filter.width = to_double("filter.width", v, line);
                 },
                 [](const RunConfig& c) { return format_number(c.filter.width); }});
    e.push_back({"pfunc.method",
                 [](RunConfig& c, const std::string& v, int line) {
                   if (v == "series")
                     c.method = PMethod::series;
                   else if (v == "integral")
                     c.method = PMethod::integral;
                   else
                     bad_value("pfunc.method", v, line, "series or integral");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.method == PMethod::series ? "series" : "integral");
                 }});
    e.push_back(real("measurement.kappa_prime", &RunConfig::kappa_prime));
    e.push_back({"measurement.schedule",
                 [](RunConfig& c, const std::string& v, int line) {
                   if (v == "random")
                     c.schedule = ScheduleKind::random;
                   else if (v == "linear")
                     c.schedule = ScheduleKind::linear;
                   else
                     bad_value("measurement.schedule", v, line, "random or linear");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.schedule == ScheduleKind::random ? "random" : "linear");
                 }});
    e.push_back(optional_count("measurement.n_schedules", &RunConfig::n_schedules, "auto"));
    e.push_back(real("measurement.oversampling", &RunConfig::oversampling));
    e.push_back(real("measurement.tau_step", &RunConfig::tau_step));
    e.push_back(optional_count("measurement.shots", &RunConfig::shots, "ideal"));
    e.push_back(integer("measurement.replicates", &RunConfig::replicates));
    e.push_back(real("measurement.fd_step", &RunConfig::fd_step));
    e.push_back(boolean("measurement.richardson", &RunConfig::richardson));
    e.push_back(real("measurement.wigner_half_extent", &RunConfig::wigner_half_extent));
    e.push_back(integer("measurement.wigner_n_side", &RunConfig::wigner_n_side));
    e.push_back(boolean("measurement.p_maps", &RunConfig::p_maps));
    e.push_back(integer("measurement.table_stride", &RunConfig::table_stride));
    e.push_back(optional_count("oracle.cavity_dim", &RunConfig::cavity_dim, "auto"));
    e.push_back(optional_count("oracle.motional_dim", &RunConfig::motional_dim, "auto"));
    e.push_back(integer("oracle.points", &RunConfig::oracle_points));
    e.push_back(real("oracle.t_end", &RunConfig::oracle_t_end));
    e.push_back(real("oracle.threshold", &RunConfig::oracle_threshold));
    e.push_back({"oracle.eta",
                 [](RunConfig& c, const std::string& v, int line) {
                   if (v == "same")
                     c.oracle_eta.reset();
                   else
                     c.oracle_eta = to_double("oracle.eta", v, line);
                 },
                 [](const RunConfig& c) {
                   return c.oracle_eta ? format_number(*c.oracle_eta) : std::string("same");
                 }});
    e.push_back({"output.directory",
                 [](RunConfig& c, const std::string& v, int) { c.out_dir = v; },
                 [](const RunConfig& c) { return c.out_dir; }});
    e.push_back({"run.seed",
                 [](RunConfig& c, const std::string& v, int line) {
                   std::uint64_t x = 0;
                   const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
                   if (ec != std::errc() || p != v.data() + v.size())
                     bad_value("run.seed", v, line, "a nonnegative integer");
                   c.seed = x;
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    return e;
  }();
  return entries;
}

}  // namespace

ModelParams RunConfig::model_params() const {
  ModelParams p;
  p.eta = eta;
  p.delta_phi = delta_phi;
  p.k_sideband = k_sideband;
  p.delta_omega = delta_omega;
  p.nu = nu;
  p.omega21 = omega21;
  p.kappa_phase = kappa_phase;
  p.beta0 = beta0;
  switch (motion) {
    case MotionKind::coherent:
      p.motional_input = alpha0;
      break;
    case MotionKind::number:
      p.motional_input = MotionalDensityMatrix::from_pure(number_vector(motion_number, truncation()));
      break;
    case MotionKind::thermal:
      p.motional_input = thermal_rho(thermal_mean, truncation());
      break;
  }
  return p;
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Entry& e : registry()) out.emplace_back(e.key, e.get(*this));
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : registry()) keys.push_back(e.key);
  return keys;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("invalid config: " + key + " " + why, key);
  };
  if (!(eta > 0.0)) fail("model.eta", "must be positive");
  if (k_sideband < 0) fail("model.k_sideband", "must be >= 0");
  if (std::abs(beta0) == 0.0) fail("model.beta0_re", "pump amplitude must be nonzero");
  if (n_max < 1) fail("truncation.n_max", "must be >= 1");
  if (!(tail_tol > 0.0 && tail_tol < 1.0)) fail("truncation.tail_tol", "must lie in (0, 1)");
  if (motion == MotionKind::number && (motion_number < 0 || motion_number > n_max))
    fail("motion.number", "must lie in [0, n_max]");
  if (motion == MotionKind::thermal && thermal_mean < 0.0) fail("motion.thermal_mean", "must be >= 0");
  if (n_points < 1) fail("scan.n_points", "must be >= 1");
  if (t_start < 0.0) fail("scan.t_start", "must be >= 0");
  if (t_end < t_start) fail("scan.t_end", "must be >= scan.t_start");
  if (state_t < 0.0) fail("state.t", "must be >= 0");
  if (n_side < 1 || n_side % 2 == 0) fail("grid.n_side", "must be odd and positive");
  if (half_extent < 0.0) fail("grid.half_extent", "must be >= 0");
  if (!(filter.width > 0.0)) fail("filter.width", "must be positive");
  if (!(kappa_prime > 0.0)) fail("measurement.kappa_prime", "must be positive");
  if (n_schedules && *n_schedules < 1) fail("measurement.n_schedules", "schedule list is empty");
  if (!(oversampling >= 1.0)) fail("measurement.oversampling", "must be >= 1");
  if (!(tau_step > 0.0)) fail("measurement.tau_step", "must be positive");
  if (shots && *shots < 1) fail("measurement.shots", "must be positive or 'ideal'");
  if (replicates < 2) fail("measurement.replicates", "must be >= 2");
  if (wigner_n_side < 3 || wigner_n_side % 2 == 0) fail("measurement.wigner_n_side", "must be odd and >= 3");
  if (!(wigner_half_extent > 0.0)) fail("measurement.wigner_half_extent", "must be positive");
  if (table_stride < 1) fail("measurement.table_stride", "must be >= 1");
  if (cavity_dim && *cavity_dim < 1) fail("oracle.cavity_dim", "must be positive");
  if (motional_dim && *motional_dim < 1) fail("oracle.motional_dim", "must be positive");
  if (oracle_points < 1) fail("oracle.points", "must be >= 1");
  if (oracle_t_end < 0.0) fail("oracle.t_end", "must be >= 0");
  if (oracle_eta && !(*oracle_eta > 0.0)) fail("oracle.eta", "must be positive");
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value, int line) {
  for (const Entry& e : registry()) {
    if (e.key == key) {
      e.set(config, value, line);
      return;
    }
  }
  std::string msg = "unknown config key '" + key + "'";
  if (line > 0) msg += " (line " + std::to_string(line) + ")";
  throw ConfigError(msg, key, line);
}

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value' at line " + std::to_string(line), trim(text), line);
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key at line " + std::to_string(line), "", line);
    apply_setting(config, key, value, line);
  }
  return config;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string(), "--config");
  return parse_config(in);
}

}  // namespace nljc
