// lsfm-invlab: config-driven runner for the light-sheet inverse-problem
// experiments. Usage: lsfm-invlab <command> [--config file.json] [overrides]

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lsfm/errors.hpp"
#include "lsfm/forward.hpp"
#include "lsfm/io/csv.hpp"
#include "lsfm/io/digest.hpp"
#include "lsfm/io/serialize.hpp"
#include "lsfm/io/svg.hpp"
#include "lsfm/linsys.hpp"
#include "lsfm/phantom.hpp"
#include "lsfm/simd/kernels.hpp"
#include "lsfm/stability.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using lsfm::ConfigError;
using lsfm::io::fmt;

namespace {

constexpr const char* kVersion = "1.0.0";

const std::vector<std::string> kCommands{"phantom",     "sigma",       "measure",
                                         "assemble",    "cond-sweep",  "reconstruct",
                                         "stability",   "report"};

// ---------------------------------------------------------------------------
// Config

struct SartConfig {
  double omega = 1.0;
  std::size_t max_sweeps = 500;
  bool nonneg = true;
  double tol = 1e-10;
};

struct StabilityConfig {
  double R = 1.0;
  std::vector<double> times{0.1, 0.5, 1.0};
  double t1 = 0.1;
  double t2 = 1.0;
  std::size_t family_size = 100;
  double delta = 0.1;
  std::vector<double> T_fractions{0.2, 0.4, 0.6, 0.8, 1.0};
  std::size_t lipschitz_family = 20;
  double bump_half_width = 0.1;
  std::vector<double> gaps{0.05, 0.04, 0.03, 0.02, 0.01};
  double dt_fraction = 0.02;
  std::size_t dt_halvings = 3;
  std::string weighting = "per_time";
};

struct RunConfig {
  std::string command;
  fs::path out;
  std::optional<std::uint64_t> seed;
  lsfm::phantom::DatasetParams phantom;
  double c = 1.0;
  double photon_scale = 0.0;
  std::vector<double> depths{0.88};
  std::vector<double> heights;
  std::string side = "left";
  std::vector<double> radii{0.55, 0.6, 0.65, 0.7, 0.75, 0.8};
  std::optional<std::array<double, 2>> center;
  std::string illumination = "both";
  std::size_t support_dilation = 0;
  SartConfig sart;
  StabilityConfig stability;
  fs::path report_input;
  json resolved;
};

double number_at(const json& j, const std::string& key, double fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number() || !std::isfinite(v.get<double>()))
    throw ConfigError(path, "expected a finite number");
  return v.get<double>();
}

std::size_t count_at(const json& j, const std::string& key, std::size_t fallback,
                     const std::string& path) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(path, "expected a nonnegative integer");
  return v.get<std::size_t>();
}

std::string string_at(const json& j, const std::string& key, const std::string& fallback,
                      const std::string& path, const std::set<std::string>& allowed = {}) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  auto s = v.get<std::string>();
  if (!allowed.empty() && !allowed.count(s)) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ConfigError(path, "expected one of: " + list);
  }
  return s;
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError(prefix.empty() ? it.key() : prefix + "." + it.key(), "unknown field");
}

std::vector<double> sweep_at(const json& j, const std::string& key, std::vector<double> fallback,
                             const std::string& path) {
  if (!j.contains(key)) return fallback;
  auto v = lsfm::io::parse_sweep(j.at(key), path);
  if (v.empty()) throw ConfigError(path, "expected at least one value");
  return v;
}

RunConfig resolve(const std::string& command, json cfg) {
  RunConfig rc;
  rc.command = command;
  if (!cfg.is_object()) throw ConfigError("config", "expected a JSON object");
  reject_unknown(cfg,
                 {"seed", "out", "phantom", "c", "photon_scale", "depths", "heights", "side",
                  "radii", "center", "illumination", "support_dilation", "sart", "stability",
                  "report"},
                 "");

  if (!cfg.contains("out") || !cfg.at("out").is_string() || cfg.at("out").get<std::string>().empty())
    throw ConfigError("out", "an output directory is required (--out)");
  rc.out = cfg.at("out").get<std::string>();

  if (cfg.contains("seed")) {
    const auto& s = cfg.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("seed", "expected a nonnegative integer");
    rc.seed = s.get<std::uint64_t>();
  } else if (command != "report") {
    throw ConfigError("seed", "a seed is required for command '" + command + "'");
  }

  if (cfg.contains("phantom")) {
    const auto& p = cfg.at("phantom");
    if (p.is_object())
      reject_unknown(p,
                     {"kind", "grid", "object_disk", "polygon", "support_radius", "blobs",
                      "margin_cells", "w1", "w2", "diffusion_ratio", "attenuation", "mask_path",
                      "mask_box", "mask_peak"},
                     "phantom");
    rc.phantom = lsfm::io::dataset_params_from_json(p, rc.phantom, "phantom");
  }

  rc.c = number_at(cfg, "c", rc.c, "c");
  if (!(rc.c > 0.0)) throw ConfigError("c", "camera gain must be positive");
  rc.photon_scale = number_at(cfg, "photon_scale", rc.photon_scale, "photon_scale");
  if (rc.photon_scale < 0.0) throw ConfigError("photon_scale", "must be >= 0 (0 disables noise)");

  const auto& d = rc.phantom.grid.domain;
  rc.depths = sweep_at(cfg, "depths", rc.depths, "depths");
  for (std::size_t k = 0; k < rc.depths.size(); ++k)
    if (!(rc.depths[k] > 0.0 && rc.depths[k] < d.s1))
      throw ConfigError("depths[" + std::to_string(k) + "]", "depth must lie in (0, s1)");
  rc.heights = sweep_at(cfg, "heights", {}, "heights");
  for (std::size_t k = 0; k < rc.heights.size(); ++k)
    if (!(std::fabs(rc.heights[k]) <= d.y1))
      throw ConfigError("heights[" + std::to_string(k) + "]", "height must lie in [-y1, y1]");
  rc.side = string_at(cfg, "side", rc.side, "side", {"left", "right", "both"});
  rc.radii = sweep_at(cfg, "radii", rc.radii, "radii");
  for (std::size_t k = 0; k < rc.radii.size(); ++k)
    if (!(rc.radii[k] > 0.0)) throw ConfigError("radii[" + std::to_string(k) + "]", "radius must be positive");
  if (cfg.contains("center")) {
    const auto& c = cfg.at("center");
    if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
      throw ConfigError("center", "expected [x, y]");
    rc.center = std::array<double, 2>{c[0].get<double>(), c[1].get<double>()};
  }
  rc.illumination =
      string_at(cfg, "illumination", rc.illumination, "illumination", {"full", "limited", "both"});
  rc.support_dilation = count_at(cfg, "support_dilation", 0, "support_dilation");

  if (cfg.contains("sart")) {
    const auto& s = cfg.at("sart");
    if (!s.is_object()) throw ConfigError("sart", "expected an object");
    reject_unknown(s, {"omega", "max_sweeps", "nonneg", "tol"}, "sart");
    rc.sart.omega = number_at(s, "omega", rc.sart.omega, "sart.omega");
    if (!(rc.sart.omega > 0.0 && rc.sart.omega < 2.0))
      throw ConfigError("sart.omega", "relaxation must lie in (0, 2)");
    rc.sart.max_sweeps = count_at(s, "max_sweeps", rc.sart.max_sweeps, "sart.max_sweeps");
    rc.sart.tol = number_at(s, "tol", rc.sart.tol, "sart.tol");
    if (s.contains("nonneg")) {
      if (!s.at("nonneg").is_boolean()) throw ConfigError("sart.nonneg", "expected true or false");
      rc.sart.nonneg = s.at("nonneg").get<bool>();
    }
  }

  if (cfg.contains("stability")) {
    const auto& s = cfg.at("stability");
    if (!s.is_object()) throw ConfigError("stability", "expected an object");
    reject_unknown(s,
                   {"R", "times", "t1", "t2", "family_size", "delta", "T_fractions",
                    "lipschitz_family", "bump_half_width", "gaps", "dt_fraction", "dt_halvings",
                    "weighting"},
                   "stability");
    auto& st = rc.stability;
    st.R = number_at(s, "R", st.R, "stability.R");
    if (!(st.R > 0.0)) throw ConfigError("stability.R", "radius must be positive");
    st.times = sweep_at(s, "times", st.times, "stability.times");
    for (std::size_t k = 0; k < st.times.size(); ++k)
      if (!(st.times[k] > 0.0))
        throw ConfigError("stability.times[" + std::to_string(k) + "]", "time must be positive");
    st.t1 = number_at(s, "t1", st.t1, "stability.t1");
    st.t2 = number_at(s, "t2", st.t2, "stability.t2");
    if (!(st.t1 > 0.0 && st.t2 > st.t1)) throw ConfigError("stability.t2", "need 0 < t1 < t2");
    st.family_size = count_at(s, "family_size", st.family_size, "stability.family_size");
    if (st.family_size == 0) throw ConfigError("stability.family_size", "must be positive");
    st.delta = number_at(s, "delta", st.delta, "stability.delta");
    if (!(st.delta > 0.0)) throw ConfigError("stability.delta", "must be positive");
    st.T_fractions = sweep_at(s, "T_fractions", st.T_fractions, "stability.T_fractions");
    for (std::size_t k = 0; k < st.T_fractions.size(); ++k)
      if (!(st.T_fractions[k] > 0.01 && st.T_fractions[k] <= 1.0))
        throw ConfigError("stability.T_fractions[" + std::to_string(k) + "]",
                          "fraction must lie in (0.01, 1]");
    st.lipschitz_family = count_at(s, "lipschitz_family", st.lipschitz_family, "stability.lipschitz_family");
    if (st.lipschitz_family == 0) throw ConfigError("stability.lipschitz_family", "must be positive");
    st.bump_half_width = number_at(s, "bump_half_width", st.bump_half_width, "stability.bump_half_width");
    if (!(st.bump_half_width > 0.0)) throw ConfigError("stability.bump_half_width", "must be positive");
    st.gaps = sweep_at(s, "gaps", st.gaps, "stability.gaps");
    st.dt_fraction = number_at(s, "dt_fraction", st.dt_fraction, "stability.dt_fraction");
    if (!(st.dt_fraction > 0.0 && st.dt_fraction < 0.1))
      throw ConfigError("stability.dt_fraction", "must lie in (0, 0.1)");
    st.dt_halvings = count_at(s, "dt_halvings", st.dt_halvings, "stability.dt_halvings");
    st.weighting = string_at(s, "weighting", st.weighting, "stability.weighting",
                             {"per_time", "per_height"});
  }

  if (cfg.contains("report")) {
    const auto& r = cfg.at("report");
    if (!r.is_object()) throw ConfigError("report", "expected an object");
    reject_unknown(r, {"input"}, "report");
    rc.report_input = string_at(r, "input", "", "report.input");
  }
  if (rc.report_input.empty()) rc.report_input = rc.out;

  rc.resolved = cfg;
  rc.resolved["phantom"] = lsfm::io::to_json(rc.phantom);
  return rc;
}

// Sets cfg at a dotted path, creating objects on the way.
void set_path(json& cfg, const std::string& path, json value) {
  json* cur = &cfg;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError(path, "malformed override path");
    if (dot == std::string::npos) {
      (*cur)[key] = std::move(value);
      return;
    }
    if (!cur->contains(key) || !(*cur)[key].is_object()) (*cur)[key] = json::object();
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

// Override text is parsed as JSON when possible, otherwise kept as a string.
json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

// ---------------------------------------------------------------------------
// Output bookkeeping

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  const fs::path& dir() const { return dir_; }

  void csv(const std::string& name, const lsfm::io::CsvTable& t) { text(name, lsfm::io::format_csv(t)); }
  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }
  void text(const std::string& name, const std::string& body) {
    lsfm::io::write_text(dir_ / name, body);
    files_[name] = lsfm::io::sha256_hex(body);
    sizes_[name] = body.size();
  }

  json manifest_files() const {
    json arr = json::array();
    for (const auto& [name, digest] : files_)
      arr.push_back({{"path", name}, {"sha256", digest}, {"bytes", sizes_.at(name)}});
    return arr;
  }

 private:
  fs::path dir_;
  std::map<std::string, std::string> files_;
  std::map<std::string, std::size_t> sizes_;
};

std::string tag(double v) { return fmt(v); }

std::string side_name(lsfm::heat::Side s) { return s == lsfm::heat::Side::left ? "left" : "right"; }

std::vector<lsfm::heat::Side> sides_of(const std::string& s) {
  if (s == "both") return {lsfm::heat::Side::left, lsfm::heat::Side::right};
  return {s == "left" ? lsfm::heat::Side::left : lsfm::heat::Side::right};
}

std::vector<double> heights_for(const RunConfig& rc, const lsfm::phantom::Phantom& p) {
  return rc.heights.empty() ? p.grid.height_grid().nodes() : rc.heights;
}

std::array<double, 2> object_center(const RunConfig& rc, const lsfm::phantom::Phantom& p) {
  if (rc.center) return *rc.center;
  if (const auto* d = std::get_if<lsfm::geom::Disk>(&p.object.shape())) return {d->cx, d->cy};
  const auto b = p.object.bounding_box();
  return {0.5 * (b[0] + b[1]), 0.5 * (b[2] + b[3])};
}

json interval_json(const lsfm::forward::ObservationInterval& oi) {
  return json{{oi.left.lo, oi.left.hi}, {oi.right.lo, oi.right.hi}};
}

// ---------------------------------------------------------------------------
// Commands

json cmd_phantom(const RunConfig& rc, Outputs& out) {
  const auto p = lsfm::phantom::make_phantom(rc.phantom, *rc.seed);
  out.csv("phantom.csv", lsfm::io::phantom_csv(p));
  const auto hs = p.grid.height_grid().nodes();
  std::vector<double> gl, gr;
  for (double y : hs) {
    const auto a = lsfm::geom::entry_depth(p.object, y, lsfm::heat::Side::left);
    const auto b = lsfm::geom::entry_depth(p.object, y, lsfm::heat::Side::right);
    gl.push_back(a ? *a : NAN);
    gr.push_back(b ? *b : NAN);
  }
  out.csv("geometry.csv", lsfm::io::numeric_table({"y", "gamma_left", "gamma_right"}, {hs, gl, gr}));
  const auto m = lsfm::io::phantom_manifest(p);
  out.json_file("phantom.json", m);
  return m;
}

json cmd_sigma(const RunConfig& rc, Outputs& out) {
  const auto p = lsfm::phantom::make_phantom(rc.phantom, *rc.seed);
  const lsfm::forward::ForwardModel model(p);
  json profiles = json::array();
  std::vector<double> s_col, side_col, lo, hi, xi1, xi2, t1, t2, tt, il_lo, il_hi, ir_lo, ir_hi;
  for (double s : rc.depths)
    for (auto side : sides_of(rc.side)) {
      const auto prof = lsfm::forward::detect_sigma_properties(model, s, side);
      out.csv("sigma_s" + tag(s) + "_" + side_name(side) + ".csv", lsfm::io::sigma_csv(prof));
      auto j = lsfm::io::to_json(prof);
      j["endpoint_order"] = prof.endpoint_order;
      profiles.push_back(j);
      const auto oi = lsfm::forward::observation_interval(prof);
      s_col.push_back(s);
      side_col.push_back(side == lsfm::heat::Side::left ? 0 : 1);
      lo.push_back(prof.y_lo);
      hi.push_back(prof.y_hi);
      xi1.push_back(prof.xi1);
      xi2.push_back(prof.xi2);
      t1.push_back(prof.T1_raw);
      t2.push_back(prof.T2_raw);
      tt.push_back(prof.T);
      il_lo.push_back(oi.left.lo);
      il_hi.push_back(oi.left.hi);
      ir_lo.push_back(oi.right.lo);
      ir_hi.push_back(oi.right.hi);
    }
  out.csv("intervals.csv",
          lsfm::io::numeric_table({"s", "side", "y_lo", "y_hi", "xi1", "xi2", "T1", "T2", "T",
                                   "left_lo", "left_hi", "right_lo", "right_hi"},
                                  {s_col, side_col, lo, hi, xi1, xi2, t1, t2, tt, il_lo, il_hi,
                                   ir_lo, ir_hi}));
  const json summary{{"profiles", profiles}};
  out.json_file("sigma.json", summary);
  return summary;
}

json cmd_measure(const RunConfig& rc, Outputs& out) {
  const auto p = lsfm::phantom::make_phantom(rc.phantom, *rc.seed);
  const lsfm::forward::ForwardModel model(p);
  const auto hs = heights_for(rc, p);
  auto m = lsfm::forward::measure_all(model, rc.depths, hs, rc.c);
  out.csv("measurements.csv", lsfm::io::measurement_csv(m));
  json summary{{"depths", rc.depths}, {"m1", hs.size()}, {"c", rc.c}, {"photon_scale", rc.photon_scale}};
  if (rc.photon_scale > 0.0) {
    auto noisy = m;
    noisy.photon_scale = rc.photon_scale;
    for (std::size_t k = 0; k < m.p.size(); ++k)
      noisy.p[k] = lsfm::linsys::poissonize(m.p[k], rc.photon_scale, *rc.seed + 1000003ull * (k + 1));
    out.csv("measurements_noisy.csv", lsfm::io::measurement_csv(noisy));
  }
  out.json_file("measure.json", summary);
  return summary;
}

json cmd_assemble(const RunConfig& rc, Outputs& out) {
  const auto p = lsfm::phantom::make_phantom(rc.phantom, *rc.seed);
  const lsfm::forward::ForwardModel model(p);
  const auto hs = heights_for(rc, p);
  json blocks = json::array();
  for (double s : rc.depths) {
    const auto blk = lsfm::linsys::assemble_block(model, s, hs, rc.c);
    out.csv("block_s" + tag(s) + ".csv", lsfm::io::block_csv(blk));
    out.csv("mu_s" + tag(s) + ".csv",
            lsfm::io::numeric_table({"y", "mu"}, {p.grid.height_grid().nodes(), blk.mu}));
    blocks.push_back(lsfm::io::block_manifest(blk));
  }
  const json summary{{"blocks", blocks}};
  out.json_file("assemble.json", summary);
  return summary;
}

json cmd_cond_sweep(const RunConfig& rc, Outputs& out) {
  const auto p = lsfm::phantom::make_phantom(rc.phantom, *rc.seed);
  const lsfm::forward::ForwardModel model(p);
  const auto hs = heights_for(rc, p);
  const auto ctr = object_center(rc, p);
  std::vector<double> s_col, r_col, n_col, kf, kl, rows_f, rows_l;
  json per_depth = json::array();
  for (double s : rc.depths) {
    const auto blk = lsfm::linsys::assemble_block(model, s, hs, rc.c);
    const auto prof = lsfm::forward::detect_sigma_properties(model, s, lsfm::heat::Side::left);
    const auto oi = lsfm::forward::observation_interval(prof);
    const auto lim_rows = lsfm::linsys::limited_row_mask(blk, oi);
    const auto full_rows = lsfm::linsys::full_row_mask(blk);
    std::vector<double> kfs, kls;
    bool dominated = true;
    for (double r : rc.radii) {
      const auto cols = lsfm::linsys::radius_column_mask(p, s, ctr[0], ctr[1], r);
      const auto ncols = std::accumulate(cols.begin(), cols.end(), std::size_t{0});
      double kfull = NAN, klim = NAN;
      std::size_t nf = 0, nl = 0;
      if (ncols > 0) {
        const auto vf = lsfm::linsys::restrict(blk, full_rows, cols);
        nf = vf.rows().size();
        kfull = lsfm::linsys::system_condition_number(vf.materialize()).kappa;
        if (std::any_of(lim_rows.begin(), lim_rows.end(), [](auto v) { return v != 0; })) {
          const auto vl = lsfm::linsys::restrict(blk, lim_rows, cols);
          nl = vl.rows().size();
          klim = lsfm::linsys::system_condition_number(vl.materialize()).kappa;
        } else {
          klim = INFINITY;
        }
        dominated = dominated && klim >= kfull * (1.0 - 1e-12);
      }
      s_col.push_back(s);
      r_col.push_back(r);
      n_col.push_back(static_cast<double>(ncols));
      kf.push_back(kfull);
      kl.push_back(klim);
      rows_f.push_back(static_cast<double>(nf));
      rows_l.push_back(static_cast<double>(nl));
      kfs.push_back(kfull);
      kls.push_back(klim);
    }
    json d{{"s", s}, {"observation_interval", interval_json(oi)}, {"limited_dominates_full", dominated}};
    const bool finite = std::none_of(kfs.begin(), kfs.end(), [](double v) { return std::isnan(v); });
    if (rc.radii.size() >= 2 && finite)
      d["spearman_full"] = lsfm::linsys::spearman(rc.radii, kfs);
    per_depth.push_back(d);
  }
  out.csv("cond_sweep.csv",
          lsfm::io::numeric_table({"s", "radius", "columns", "rows_full", "rows_limited",
                                   "kappa_full", "kappa_limited"},
                                  {s_col, r_col, n_col, rows_f, rows_l, kf, kl}));
  const json summary{{"center", ctr}, {"radii", rc.radii}, {"depths", per_depth}};
  out.json_file("cond_sweep.json", summary);
  return summary;
}

json cmd_reconstruct(const RunConfig& rc, Outputs& out) {
  const auto p = lsfm::phantom::make_phantom(rc.phantom, *rc.seed);
  const lsfm::forward::ForwardModel model(p);
  const auto hs = heights_for(rc, p);
  const auto ys = p.grid.height_grid().nodes();
  json per_depth = json::array();
  lsfm::linsys::SartOptions opt;
  opt.omega = rc.sart.omega;
  opt.max_sweeps = rc.sart.max_sweeps;
  opt.nonneg = rc.sart.nonneg;
  opt.tol = rc.sart.tol;

  for (std::size_t k = 0; k < rc.depths.size(); ++k) {
    const double s = rc.depths[k];
    const auto blk = lsfm::linsys::assemble_block(model, s, hs, rc.c);
    auto b = blk.b;
    if (rc.photon_scale > 0.0)
      b = lsfm::linsys::poissonize(blk.b, rc.photon_scale, *rc.seed + 1000003ull * (k + 1));
    const auto cols = lsfm::linsys::support_column_mask(blk.mu, rc.support_dilation);
    if (std::none_of(cols.begin(), cols.end(), [](auto v) { return v != 0; }))
      throw lsfm::NumericalFailure("mu vanishes on the column at s = " + fmt(s));

    const auto prof = lsfm::forward::detect_sigma_properties(model, s, lsfm::heat::Side::left);
    const auto oi = lsfm::forward::observation_interval(prof);

    std::vector<double> full_hat(ys.size(), NAN), lim_hat(ys.size(), NAN), observed(ys.size());
    for (std::size_t j = 0; j < ys.size(); ++j) observed[j] = oi.contains(ys[j]) ? 1.0 : 0.0;
    json d{{"s", s}, {"observation_interval", interval_json(oi)}, {"support_columns",
           std::accumulate(cols.begin(), cols.end(), std::size_t{0})}};
    std::vector<std::vector<double>> hist_cols;
    std::vector<std::string> hist_names;

    auto run = [&](const std::string& name, const std::vector<std::uint8_t>& rows,
                   std::vector<double>& dest) {
      const auto view = lsfm::linsys::restrict(blk, rows, cols);
      const auto res = lsfm::linsys::sart(view.materialize(), view.rhs(b), opt);
      for (std::size_t c = 0; c < view.cols().size(); ++c) dest[view.cols()[c]] = res.mu_hat[c];
      const auto truth = view.truth();
      // Errors on the observed band and on the rest of the support.
      double no = 0, do_ = 0, nm = 0, dm = 0;
      for (std::size_t c = 0; c < view.cols().size(); ++c) {
        const auto j = view.cols()[c];
        const double e = (res.mu_hat[c] - truth[c]) * (res.mu_hat[c] - truth[c]);
        const double t = truth[c] * truth[c];
        if (observed[j] != 0.0) { no += e; do_ += t; } else { nm += e; dm += t; }
      }
      d[name] = {{"relative_error", lsfm::linsys::relative_error(res.mu_hat, truth)},
                 {"observed_band_error", do_ > 0 ? json(std::sqrt(no / do_)) : json(nullptr)},
                 {"unobserved_band_error", dm > 0 ? json(std::sqrt(nm / dm)) : json(nullptr)},
                 {"iterations", res.iterations},
                 {"rows", view.rows().size()},
                 {"final_residual", res.residual_history.back()}};
      hist_names.push_back(name + "_residual");
      hist_cols.push_back(res.residual_history);
      hist_names.push_back(name + "_weighted_residual");
      hist_cols.push_back(res.weighted_residual_history);
    };
    if (rc.illumination != "limited") run("full", lsfm::linsys::full_row_mask(blk), full_hat);
    if (rc.illumination != "full") {
      const auto lim = lsfm::linsys::limited_row_mask(blk, oi);
      if (std::none_of(lim.begin(), lim.end(), [](auto v) { return v != 0; }))
        throw lsfm::NumericalFailure("no illumination height falls in the observation interval at s = " + fmt(s));
      run("limited", lim, lim_hat);
    }
    out.csv("reconstruction_s" + tag(s) + ".csv",
            lsfm::io::numeric_table({"y", "mu", "mu_full", "mu_limited", "observed"},
                                    {ys, blk.mu, full_hat, lim_hat, observed}));
    std::size_t longest = 0;
    for (const auto& h : hist_cols) longest = std::max(longest, h.size());
    std::vector<double> sweep(longest);
    std::iota(sweep.begin(), sweep.end(), 0.0);
    for (auto& h : hist_cols) h.resize(longest, NAN);
    hist_names.insert(hist_names.begin(), "sweep");
    hist_cols.insert(hist_cols.begin(), sweep);
    out.csv("residuals_s" + tag(s) + ".csv", lsfm::io::numeric_table(hist_names, hist_cols));
    per_depth.push_back(d);
  }
  const json summary{{"depths", per_depth},
                     {"sart", {{"omega", opt.omega}, {"max_sweeps", opt.max_sweeps},
                               {"nonneg", opt.nonneg}, {"tol", opt.tol}}},
                     {"photon_scale", rc.photon_scale},
                     {"seed", *rc.seed}};
  out.json_file("reconstruct.json", summary);
  return summary;
}

json cmd_stability(const RunConfig& rc, Outputs& out) {
  using namespace lsfm::stability;
  const auto& st = rc.stability;
  const auto seed = *rc.seed;

  // Lemma and corollary on random bell families over [-R, R].
  const auto g = lsfm::heat::UniformGrid::spanning(-st.R, st.R, 401);
  std::vector<lsfm::heat::Profile1D> fam;
  for (const auto& bells : random_bell_family(st.family_size, -st.R, st.R, seed))
    fam.push_back(bell_profile(bells, g, -st.R, st.R));
  json lemma = json::array();
  std::vector<double> lt, lk, lr, lc;
  for (double t : st.times) {
    auto rep = verify_lemma(st.R, t, fam);
    rep.seed = seed;
    lemma.push_back(lsfm::io::to_json(rep));
    for (std::size_t k = 0; k < rep.ratios.size(); ++k) {
      lt.push_back(t);
      lk.push_back(static_cast<double>(k));
      lr.push_back(rep.ratios[k]);
      lc.push_back(rep.C7);
    }
  }
  out.csv("lemma_ratios.csv", lsfm::io::numeric_table({"t", "member", "ratio", "C7"}, {lt, lk, lr, lc}));
  auto cor = verify_corollary(st.R, st.t1, st.t2, fam);
  cor.seed = seed;

  // Curve experiments on the dataset's left profile at the first depth.
  const auto p = lsfm::phantom::make_phantom(rc.phantom, seed);
  const lsfm::forward::ForwardModel model(p);
  const double s = rc.depths.front();
  const auto prof = lsfm::forward::detect_sigma_properties(model, s, lsfm::heat::Side::left);
  const double lo = prof.y_lo + st.delta;
  const double hi = prof.y_hi - st.delta;
  if (!(hi - lo > 0.05))
    throw ConfigError("stability.delta", "support window (y_lo + delta, y_hi - delta) is too narrow");
  const auto fine = lsfm::heat::UniformGrid::spanning(prof.y_lo, prof.y_hi, 801);
  const double inner_lo = lo + 0.25 * fine.step;
  const double inner_hi = hi - 0.25 * fine.step;

  const auto u0 = bell_profile(random_bell_family(1, inner_lo, inner_hi, seed + 17).front(), fine,
                               inner_lo, inner_hi);
  std::vector<double> dts, devs, orders;
  for (std::size_t k = 0; k <= st.dt_halvings; ++k) {
    const double dt = st.dt_fraction * prof.T / std::pow(2.0, static_cast<double>(k));
    const auto r = energy_identity_check(u0, prof, dt, st.delta);
    dts.push_back(dt);
    devs.push_back(r.max_deviation);
    orders.push_back(k == 0 ? NAN : std::log2(devs[k - 1] / devs[k]));
  }
  out.csv("energy_identity.csv", lsfm::io::numeric_table({"dt", "max_deviation", "order"}, {dts, devs, orders}));

  LipschitzOptions lo_opt;
  lo_opt.weighting = st.weighting == "per_time" ? lsfm::heat::CurveWeighting::per_time
                                                : lsfm::heat::CurveWeighting::per_height;
  std::vector<lsfm::heat::Profile1D> lfam;
  for (const auto& bells : random_bell_family(st.lipschitz_family, inner_lo, inner_hi, seed + 29))
    lfam.push_back(bell_profile(bells, fine, inner_lo, inner_hi));
  std::vector<double> Tp;
  for (double f : st.T_fractions) Tp.push_back(f * prof.T);
  const auto sw = empirical_lipschitz(prof, lfam, st.delta, Tp, lo_opt);
  out.csv("lipschitz.csv", lsfm::io::numeric_table({"T_prime", "sup_ratio"}, {sw.T_primes, sw.sup_ratio}));

  const auto slide = sliding_bump_ratios(prof, st.bump_half_width, st.gaps, fine, lo_opt);
  out.csv("sliding_bumps.csv", lsfm::io::numeric_table({"gap", "ratio"}, {st.gaps, slide}));

  const json summary{{"lemma", lemma},
                     {"corollary", lsfm::io::to_json(cor)},
                     {"profile", lsfm::io::to_json(prof)},
                     {"energy_identity", {{"dt", dts}, {"max_deviation", devs}}},
                     {"lipschitz", {{"T_prime", sw.T_primes}, {"sup_ratio", sw.sup_ratio},
                                    {"flagged", sw.flagged}, {"weighting", st.weighting}}},
                     {"sliding_bumps", {{"gaps", st.gaps}, {"ratios", slide}}},
                     {"seed", seed}};
  out.json_file("stability.json", summary);
  return summary;
}

// Renders every recognised CSV in the input directory; reads nothing else.
json cmd_report(const RunConfig& rc, Outputs& out) {
  using lsfm::io::PlotSpec;
  using lsfm::io::Series;
  if (!fs::is_directory(rc.report_input))
    throw ConfigError("report.input", "no such directory: " + rc.report_input.string());
  std::vector<fs::path> csvs;
  for (const auto& e : fs::directory_iterator(rc.report_input))
    if (e.is_regular_file() && e.path().extension() == ".csv") csvs.push_back(e.path());
  std::sort(csvs.begin(), csvs.end());

  auto finite_series = [](std::string name, const std::vector<double>& x, const std::vector<double>& y) {
    Series s{std::move(name), {}, {}};
    for (std::size_t k = 0; k < x.size(); ++k)
      if (std::isfinite(x[k]) && std::isfinite(y[k])) {
        s.xs.push_back(x[k]);
        s.ys.push_back(y[k]);
      }
    return s;
  };

  json rendered = json::array();
  for (const auto& path : csvs) {
    const auto name = path.stem().string();
    const auto t = lsfm::io::read_csv(path);
    std::vector<Series> series;
    PlotSpec spec;
    spec.title = name;
    auto has = [&](const char* c) { return std::find(t.header.begin(), t.header.end(), c) != t.header.end(); };
    if (name == "cond_sweep") {
      const auto s = t.column("s"), r = t.column("radius"), kf = t.column("kappa_full"), kl = t.column("kappa_limited");
      std::vector<double> depths(s);
      depths.erase(std::unique(depths.begin(), depths.end()), depths.end());
      for (double d : depths) {
        std::vector<double> x, yf, yl;
        for (std::size_t k = 0; k < s.size(); ++k)
          if (s[k] == d) {
            x.push_back(r[k]);
            yf.push_back(kf[k]);
            yl.push_back(kl[k]);
          }
        series.push_back(finite_series("full s=" + fmt(d), x, yf));
        series.push_back(finite_series("limited s=" + fmt(d), x, yl));
      }
      spec.xlabel = "support radius";
      spec.ylabel = "condition number";
      spec.log_y = true;
    } else if (has("sigma") && has("y")) {
      series.push_back(finite_series("sigma", t.column("y"), t.column("sigma")));
      spec.xlabel = "y";
      spec.ylabel = "sigma";
    } else if (name == "lipschitz") {
      series.push_back(finite_series("sup ratio", t.column("T_prime"), t.column("sup_ratio")));
      spec.xlabel = "T'";
      spec.ylabel = "empirical constant";
      spec.log_y = true;
    } else if (name == "sliding_bumps") {
      series.push_back(finite_series("ratio", t.column("gap"), t.column("ratio")));
      spec.xlabel = "gap to y_lo";
      spec.ylabel = "ratio";
      spec.log_y = true;
    } else if (name == "lemma_ratios") {
      const auto tt = t.column("t"), k = t.column("member"), r = t.column("ratio"), c7 = t.column("C7");
      std::vector<double> times(tt);
      times.erase(std::unique(times.begin(), times.end()), times.end());
      for (double tv : times) {
        std::vector<double> x, y, bound;
        for (std::size_t i = 0; i < tt.size(); ++i)
          if (tt[i] == tv) {
            x.push_back(k[i]);
            y.push_back(r[i]);
            bound.push_back(c7[i]);
          }
        series.push_back(finite_series("ratio t=" + fmt(tv), x, y));
        series.push_back(finite_series("C7 t=" + fmt(tv), x, bound));
      }
      spec.xlabel = "family member";
      spec.ylabel = "L1 / L2(2B)";
    } else if (name == "energy_identity") {
      series.push_back(finite_series("max deviation", t.column("dt"), t.column("max_deviation")));
      spec.xlabel = "dt";
      spec.ylabel = "deviation";
      spec.log_y = true;
    } else if (has("mu_full") || has("mu_limited")) {
      const auto y = t.column("y");
      series.push_back(finite_series("mu", y, t.column("mu")));
      if (has("mu_full")) series.push_back(finite_series("full", y, t.column("mu_full")));
      if (has("mu_limited")) series.push_back(finite_series("limited", y, t.column("mu_limited")));
      spec.xlabel = "y";
      spec.ylabel = "mu";
    } else if (has("sweep")) {
      const auto x = t.column("sweep");
      for (std::size_t c = 1; c < t.header.size(); ++c)
        series.push_back(finite_series(t.header[c], x, t.column(t.header[c])));
      spec.xlabel = "sweep";
      spec.ylabel = "relative residual";
      spec.log_y = true;
    } else if (name.rfind("measurements", 0) == 0) {
      const auto side = t.text_column("side");
      const auto y = t.column("y");
      for (std::size_t c = 3; c < t.header.size(); ++c) {
        const auto v = t.column(t.header[c]);
        std::vector<double> x, w;
        for (std::size_t k = 0; k < y.size(); ++k)
          if (side[k] == "left") {
            x.push_back(y[k]);
            w.push_back(v[k]);
          }
        series.push_back(finite_series(t.header[c] + " left", x, w));
      }
      spec.xlabel = "y";
      spec.ylabel = "p";
    } else {
      continue;
    }
    bool empty = std::all_of(series.begin(), series.end(), [](const Series& s) { return s.xs.empty(); });
    if (empty) continue;
    out.text(name + ".svg", lsfm::io::render_svg(spec, series));
    rendered.push_back(name + ".svg");
  }
  return json{{"rendered", rendered}};
}

int error_exit(const fs::path& out_dir, const std::string& kind, const std::string& field,
               const std::string& message, int code) {
  json rec{{"status", "error"}, {"kind", kind}, {"message", message}, {"exit_code", code}};
  if (!field.empty()) rec["field"] = field;
  std::cerr << rec.dump() << "\n";
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!ec) std::ofstream(out_dir / "error.json") << rec.dump(2) << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-sheet backward-heat inverse-problem lab"};
  app.set_version_flag("--version", kVersion);
  std::string command, config_path, out_dir, dataset, depths, radii, heights, side, illumination;
  std::optional<std::uint64_t> seed;
  std::optional<double> s_single, photon_scale, omega, c_gain;
  std::optional<std::size_t> nx, ny, sweeps;
  std::vector<std::string> sets;
  app.add_option("command", command, "phantom|sigma|measure|assemble|cond-sweep|reconstruct|stability|report")
      ->required();
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--kind,--dataset", dataset, "dataset kind 1, 2 or 3");
  app.add_option("--nx", nx, "grid cells along x");
  app.add_option("--ny", ny, "grid cells along y");
  app.add_option("--s", s_single, "single detector depth");
  app.add_option("--depths", depths, "depths: a:b:n, number or JSON array");
  app.add_option("--heights", heights, "illumination heights: a:b:n, number or JSON array");
  app.add_option("--radii", radii, "support radii for cond-sweep");
  app.add_option("--side", side, "left|right|both");
  app.add_option("--illumination", illumination, "full|limited|both");
  app.add_option("--photon-scale", photon_scale, "Poisson photon scale (0 disables noise)");
  app.add_option("--omega", omega, "SART relaxation");
  app.add_option("--sweeps", sweeps, "SART sweep limit");
  app.add_option("--c", c_gain, "camera gain");
  app.add_option("--set", sets, "override key.path=value (value parsed as JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return error_exit(out_dir, "config", "argv", e.what(), 2);
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
      throw ConfigError("command", "unknown command '" + command + "'");

    json cfg = json::object();
    std::string config_text;
    if (!config_path.empty()) {
      try {
        config_text = lsfm::io::read_text(config_path);
      } catch (const std::exception& e) {
        throw ConfigError("config", e.what());
      }
      try {
        cfg = json::parse(config_text);
      } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("malformed JSON: ") + e.what());
      }
      if (!cfg.is_object()) throw ConfigError("config", "expected a JSON object");
    }
    if (!out_dir.empty()) cfg["out"] = out_dir;
    if (seed) cfg["seed"] = *seed;
    if (!dataset.empty()) set_path(cfg, "phantom.kind", parse_value(dataset));
    if (nx) set_path(cfg, "phantom.grid.nx", *nx);
    if (ny) set_path(cfg, "phantom.grid.ny", *ny);
    if (s_single) cfg["depths"] = json::array({*s_single});
    if (!depths.empty()) cfg["depths"] = parse_value(depths);
    if (!heights.empty()) cfg["heights"] = parse_value(heights);
    if (!radii.empty()) cfg["radii"] = parse_value(radii);
    if (!side.empty()) cfg["side"] = side;
    if (!illumination.empty()) cfg["illumination"] = illumination;
    if (photon_scale) cfg["photon_scale"] = *photon_scale;
    if (omega) set_path(cfg, "sart.omega", *omega);
    if (sweeps) set_path(cfg, "sart.max_sweeps", *sweeps);
    if (c_gain) cfg["c"] = *c_gain;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("set", "expected key.path=value, got '" + kv + "'");
      set_path(cfg, kv.substr(0, eq), parse_value(kv.substr(eq + 1)));
    }
    if (cfg.contains("out") && cfg.at("out").is_string()) out_dir = cfg.at("out").get<std::string>();

    const RunConfig rc = resolve(command, cfg);
    Outputs out(rc.out);
    json summary;
    if (command == "phantom") summary = cmd_phantom(rc, out);
    else if (command == "sigma") summary = cmd_sigma(rc, out);
    else if (command == "measure") summary = cmd_measure(rc, out);
    else if (command == "assemble") summary = cmd_assemble(rc, out);
    else if (command == "cond-sweep") summary = cmd_cond_sweep(rc, out);
    else if (command == "reconstruct") summary = cmd_reconstruct(rc, out);
    else if (command == "stability") summary = cmd_stability(rc, out);
    else summary = cmd_report(rc, out);

    json inputs = json::object();
    if (!config_path.empty()) inputs[config_path] = lsfm::io::sha256_hex(config_text);
    if (!rc.phantom.mask_path.empty() && command != "report")
      inputs[rc.phantom.mask_path] = lsfm::io::sha256_file(rc.phantom.mask_path);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const json record{{"version", kVersion},
                      {"config", rc.resolved},
                      {"config_sha256", lsfm::io::sha256_hex(rc.resolved.dump())},
                      {"inputs", inputs},
                      {"files", out.manifest_files()},
                      {"simd_backend", std::string(lsfm::simd::backend_name(lsfm::simd::active_backend()))},
                      {"wall_time_s", wall}};
    // Commands sharing an output directory each keep their own record.
    json manifest = json::object();
    const auto manifest_path = rc.out / "manifest.json";
    if (fs::exists(manifest_path)) {
      try {
        manifest = json::parse(lsfm::io::read_text(manifest_path));
      } catch (const json::parse_error&) {
        manifest = json::object();
      }
      if (!manifest.is_object() || !manifest.contains("runs") || !manifest["runs"].is_object())
        manifest = json::object();
    }
    manifest["runs"][command] = record;
    lsfm::io::write_text(manifest_path, manifest.dump(2) + "\n");
    std::cout << json{{"status", "ok"}, {"command", command}, {"out", rc.out.string()},
                      {"files", out.manifest_files().size()}}.dump()
              << "\n";
    return 0;
  } catch (const ConfigError& e) {
    return error_exit(out_dir, "config", e.field(), e.what(), 2);
  } catch (const lsfm::NumericalFailure& e) {
    return error_exit(out_dir, "numerical", "", e.what(), 3);
  } catch (const std::exception& e) {
    return error_exit(out_dir, "runtime", "", e.what(), 1);
  }
}
